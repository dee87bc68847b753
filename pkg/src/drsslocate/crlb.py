"""Cramer-Rao lower bounds for differential-RSS localization.

The DRSS mean vector for a source at ``x`` with path-loss exponent
``gamma`` is ``mu_i = -10 * gamma * log10(d_i / d_1)`` for the non-reference
anchors, and the DRSS noise covariance is ``sigma_n^2 * (I + 1 1^T)``
whose inverse is ``(I - 1 1^T / N) / sigma_n^2``.  Bounds are reported in
root form: meters for location bounds, exponent units for the PLE bounds.

Four bounds are exposed:

* ``joint_location``: location accuracy when the exponent is unknown.
* ``joint_ple``: exponent accuracy when the location is unknown.
* ``location``: location accuracy with the exponent known.
* ``ple``: exponent accuracy with the location known.

All bounds are invariant to which anchor plays the reference role; the
first anchor is used internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

_KINDS = ("joint_location", "joint_ple", "location", "ple")


@dataclass(frozen=True)
class CrlbRequest:
    """One bound evaluation: layout, channel parameters and bound kind."""

    scenario: Scenario
    gamma: float
    sigma_n2: float
    kind: str = "location"

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.sigma_n2 > 0:
            raise ValueError("sigma_n2 must be positive")


def _gradients(scenario: Scenario, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean gradients w.r.t. location (rows) and exponent (vector)."""
    x = scenario.target
    s = scenario.anchors
    diffs = x[None, :] - s
    dists2 = np.einsum("ij,ij->i", diffs, diffs)
    if np.any(dists2 <= 0):
        raise ValueError("target coincides with an anchor")
    unit_terms = diffs / dists2[:, None]
    scale = -10.0 * gamma / np.log(10.0)
    grad_x = scale * (unit_terms[1:] - unit_terms[0][None, :])
    grad_gamma = -10.0 * 0.5 * (np.log10(dists2[1:]) - np.log10(dists2[0]))
    return grad_x, grad_gamma


def fim(
    scenario: Scenario,
    gamma: float,
    sigma_n2: float,
    parameterization: str = "location",
) -> np.ndarray:
    """Fisher information matrix of the DRSS measurements.

    Args:
        scenario: layout whose target is the evaluation point.
        gamma: path-loss exponent.
        sigma_n2: per-anchor RSS noise variance (dB^2).
        parameterization: "location" (d x d), "joint" ((d+1) x (d+1) over
            location then exponent) or "ple" (1 x 1).
    """
    if parameterization not in ("location", "joint", "ple"):
        raise ValueError("parameterization must be location, joint or ple")
    if not sigma_n2 > 0:
        raise ValueError("sigma_n2 must be positive")
    grad_x, grad_gamma = _gradients(scenario, gamma)
    if parameterization == "location":
        g = grad_x
    elif parameterization == "joint":
        g = np.hstack([grad_x, grad_gamma[:, None]])
    else:
        g = grad_gamma[:, None]
    n = scenario.n_anchors
    m = n - 1
    cov_inv = (np.eye(m) - np.ones((m, m)) / n) / sigma_n2
    return g.T @ cov_inv @ g


def crlb(request: CrlbRequest) -> float:
    """Root Cramer-Rao bound for the requested quantity.

    Location bounds are ``sqrt(trace)`` of the location block of the
    inverse information matrix (meters); exponent bounds are the square
    root of the exponent entry.

    Raises ``ValueError`` when the information matrix is singular, which
    happens only for degenerate geometries.
    """
    scenario = request.scenario
    d = scenario.dimension
    if request.kind in ("joint_location", "joint_ple"):
        info = fim(scenario, request.gamma, request.sigma_n2, "joint")
    elif request.kind == "location":
        info = fim(scenario, request.gamma, request.sigma_n2, "location")
    else:
        info = fim(scenario, request.gamma, request.sigma_n2, "ple")
    try:
        inv = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise ValueError("information matrix is singular for this layout") from exc
    if not np.all(np.isfinite(inv)):
        raise ValueError("information matrix is singular for this layout")
    if request.kind == "joint_location":
        return float(np.sqrt(np.trace(inv[:d, :d])))
    if request.kind == "location":
        return float(np.sqrt(np.trace(inv)))
    if request.kind == "joint_ple":
        return float(np.sqrt(inv[d, d]))
    return float(np.sqrt(inv[0, 0]))
