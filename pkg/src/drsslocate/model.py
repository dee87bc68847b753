"""Linear measurement models built from differential RSS readings.

Raising ten to the power of (DRSS / (5 * gamma)) turns each dB difference
into a squared-distance ratio, which linearizes the localization problem in
the augmented unknown ``theta = [x, ||x||^2]``.  Differencing against a
common reference anchor correlates the noise: its covariance is proportional
to ``I + 1 1^T``, so a fixed symmetric whitener restores (scaled) white
noise.  This module builds the unwhitened and whitened models, the companion
scalar model used for path-loss-exponent estimation, and a self-check that
ties the differential model back to the absolute-power formulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, DrssSampleSet, drss_from_rss, sample_rss
from .scenario import Scenario


def gamma_matrix(n_anchors: int) -> np.ndarray:
    """Differencing operator: maps N absolute readings to N-1 differences.

    Row i holds -1 in column 0 and +1 in column i+1, so applying it to a
    vector of anchor readings subtracts the reference (first) entry from
    each of the others.
    """
    if n_anchors < 2:
        raise ValueError("need at least two anchors to difference")
    n = n_anchors
    return np.hstack([-np.ones((n - 1, 1)), np.eye(n - 1)])


def whitener(n_anchors: int) -> np.ndarray:
    """Symmetric inverse square root of ``I + 1 1^T`` of size N-1.

    The differencing operator G satisfies ``G G^T = I + 1 1^T``.  Since that
    matrix is the identity plus a rank-one term, its inverse square root is
    ``I + c * 1 1^T`` with ``c = (1/sqrt(N) - 1) / (N - 1)``, which this
    function returns in closed form.
    """
    if n_anchors < 2:
        raise ValueError("need at least two anchors to difference")
    n = n_anchors
    size = n - 1
    coeff = (1.0 / np.sqrt(n) - 1.0) / size
    return np.eye(size) + coeff * np.ones((size, size))


@dataclass(frozen=True)
class UnwhitenedModel:
    """Linearized DRSS model before noise whitening.

    ``psi @ theta`` approximates ``p`` for ``theta = [x, ||x||^2]``.

    Attributes:
        psi: (N-1, d+1) design matrix.
        p: (N-1,) observation vector.
        pprime: (N-1,) squared-distance ratios 10**(drss / (5 * gamma)).
        gamma_used: path-loss exponent the model was built with.
        anchors_used: (N, d) anchor coordinates in model order, reference
            anchor first, remaining anchors in ascending original index.
        rn_index: reference anchor index in the original anchor order.
    """

    psi: np.ndarray
    p: np.ndarray
    pprime: np.ndarray
    gamma_used: float
    anchors_used: np.ndarray
    rn_index: int


@dataclass(frozen=True)
class WhitenedModel:
    """Whitened linear DRSS model: ``phi @ theta`` approximates ``rho``.

    After whitening, the noise covariance is a scalar multiple of the
    identity; the scalar depends on the unknown source-to-reference distance
    and never needs to be computed because the estimators are invariant
    to it.
    """

    phi: np.ndarray
    rho: np.ndarray
    gamma_used: float
    anchors_used: np.ndarray
    rn_index: int

    @property
    def dimension(self) -> int:
        return self.phi.shape[1] - 1


@dataclass(frozen=True)
class PleModel:
    """Whitened scalar model for the path-loss exponent.

    Given a location estimate, each DRSS reading is (minus ten times) the
    log distance ratio scaled by gamma, so ``c`` is approximately
    ``gamma * d`` plus whitened noise.

    Attributes:
        c: (N-1,) whitened DRSS observations.
        d: (N-1,) whitened log-distance-ratio regressor.
        location_used: the location estimate the regressor was evaluated at.
        anchors_used: (N, d) anchors in model order (reference first).
        rn_index: reference anchor index in the original order.
    """

    c: np.ndarray
    d: np.ndarray
    location_used: np.ndarray
    anchors_used: np.ndarray
    rn_index: int


def _ordered_anchors(drss: DrssSampleSet, anchors: np.ndarray) -> np.ndarray:
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim != 2:
        raise ValueError("anchors must be a 2-d array")
    if anchors.shape[0] != drss.n_anchors:
        raise ValueError(
            f"anchor count {anchors.shape[0]} does not match DRSS set "
            f"({drss.n_anchors} anchors)"
        )
    if not np.all(np.isfinite(anchors)):
        raise ValueError("anchor coordinates must be finite")
    return anchors[drss.anchor_order()]


def build_unwhitened(
    drss: DrssSampleSet, anchors: np.ndarray, gamma: float
) -> UnwhitenedModel:
    """Assemble the linearized model from DRSS readings.

    Args:
        drss: differential readings with their reference anchor.
        anchors: (N, d) anchor coordinates in original scenario order.
        gamma: path-loss exponent to linearize with (the true value, or a
            working estimate when the exponent is unknown).
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    ordered = _ordered_anchors(drss, anchors)
    s_ref = ordered[0]
    s_other = ordered[1:]
    pprime = 10.0 ** (drss.drss_db / (5.0 * gamma))
    psi = np.hstack(
        [
            2.0 * s_ref[None, :] - 2.0 * pprime[:, None] * s_other,
            (pprime - 1.0)[:, None],
        ]
    )
    p = np.dot(s_ref, s_ref) - pprime * np.einsum("ij,ij->i", s_other, s_other)
    return UnwhitenedModel(
        psi=psi,
        p=p,
        pprime=pprime,
        gamma_used=float(gamma),
        anchors_used=ordered,
        rn_index=drss.rn_index,
    )


def build_whitened(model: UnwhitenedModel) -> WhitenedModel:
    """Apply the closed-form whitener to an unwhitened model."""
    n = model.anchors_used.shape[0]
    w = whitener(n)
    return WhitenedModel(
        phi=w @ model.psi,
        rho=w @ model.p,
        gamma_used=model.gamma_used,
        anchors_used=model.anchors_used,
        rn_index=model.rn_index,
    )


def build_ple_model(
    location: np.ndarray, anchors: np.ndarray, drss: DrssSampleSet
) -> PleModel:
    """Assemble the whitened scalar model for the path-loss exponent.

    Args:
        location: source position estimate the log-distance regressor is
            evaluated at.
        anchors: (N, d) anchor coordinates in original scenario order.
        drss: the differential readings.
    """
    location = np.asarray(location, dtype=float)
    ordered = _ordered_anchors(drss, anchors)
    dists = np.linalg.norm(ordered - location[None, :], axis=1)
    if np.any(dists <= 0):
        raise ValueError("location coincides with an anchor")
    lam = -10.0 * np.log10(dists[1:] / dists[0])
    w = whitener(ordered.shape[0])
    return PleModel(
        c=w @ drss.drss_db,
        d=w @ lam,
        location_used=location,
        anchors_used=ordered,
        rn_index=drss.rn_index,
    )


def verify_rss_equivalence(
    scenario: Scenario, gamma: float, tol: float = 1e-10
) -> tuple[bool, dict]:
    """Check the differential model against the absolute-power formulation.

    On noise-free readings with a common transmit power the following must
    hold simultaneously:

    * the whitened model is exact: ``phi @ theta == rho``;
    * the whitened model equals a row-compression of the absolute-power
      linear system, i.e. ``phi @ theta == P @ (B' @ varphi)`` where ``B'``
      is the power-scaled absolute design, ``varphi = [x, ||x||^2, p0']``
      and ``P`` is the compression built from the whitener and the
      differencing operator;
    * that compression is a scaled coisometry: ``P @ P.T`` is the identity
      divided by the squared reference power ratio.  The residual is the
      deviation of ``P @ P.T`` times that squared ratio from the identity,
      so it is unit-free; the raw matrix scales like the fourth power of
      the reference distance and an absolute comparison would drown in
      float rounding on far targets.

    Returns ``(ok, diagnostics)`` where ``diagnostics`` maps each residual
    name to its magnitude; ``ok`` is False when any residual exceeds
    ``tol`` (no exception is raised, so callers can log the diagnostics).
    """
    params = ChannelParams(gamma=gamma, sigma_chi=0.0, sigma_p0=0.0, p0_nominal=0.0)
    rss = sample_rss(scenario, params, np.random.default_rng(0))
    drss = drss_from_rss(rss)
    model = build_whitened(build_unwhitened(drss, scenario.anchors, gamma))

    x = scenario.target
    theta = np.concatenate([x, [float(np.dot(x, x))]])
    n = scenario.n_anchors
    order = drss.anchor_order()
    s = scenario.anchors[order]
    # Absolute power-ratio quantities in model order.
    rss_ordered = rss.rss_db[order]
    pprime_abs = 10.0 ** (rss_ordered / (5.0 * gamma))
    p0_prime = 10.0 ** (params.p0_nominal / (5.0 * gamma))
    b = np.hstack(
        [2.0 * s, -np.ones((n, 1)), (1.0 / pprime_abs)[:, None]]
    )
    h = np.einsum("ij,ij->i", s, s)
    varphi = np.concatenate([theta, [p0_prime]])
    w = whitener(n)
    g = gamma_matrix(n)
    compression = -(1.0 / pprime_abs[0]) * (w @ g)
    b_scaled = pprime_abs[:, None] * b

    model_residual = float(np.max(np.abs(model.phi @ theta - model.rho)))
    bridge_residual = float(
        np.max(np.abs(model.phi @ theta - compression @ (b_scaled @ varphi)))
    )
    coisometry_residual = float(
        np.max(
            np.abs(
                pprime_abs[0] ** 2 * (compression @ compression.T)
                - np.eye(n - 1)
            )
        )
    )
    absolute_residual = float(np.max(np.abs(b @ varphi - h)))
    diagnostics = {
        "model_residual": model_residual,
        "bridge_residual": bridge_residual,
        "coisometry_residual": coisometry_residual,
        "absolute_residual": absolute_residual,
    }
    ok = (
        model_residual <= tol
        and bridge_residual <= tol
        and coisometry_residual <= tol
        and absolute_residual <= tol
    )
    return ok, diagnostics
