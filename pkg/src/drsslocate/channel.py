"""Log-distance path-loss channel with optional small-scale fading.

The received signal strength (RSS, dB) at anchor ``i`` from a source at
``x`` follows

    rss_i = p0_i - 10 * gamma * log10(||x - s_i|| / d0) + chi_i

with per-anchor transmit/calibration power ``p0_i``, path-loss exponent
``gamma``, reference distance ``d0`` fixed to one meter and zero-mean
Gaussian shadowing ``chi_i``.  Differential RSS (DRSS) subtracts the reading
of the reference anchor, which cancels the nominal power term; the reference
anchor is the one with the strongest reading.

An optional fading layer replaces the ideal dB reading with the maximum
likelihood estimate formed from ``k_samples`` instantaneous power samples,
whose envelope is Nakagami distributed (so power is Gamma distributed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

#: Reference distance of the path-loss model, meters.  The linearization in
#: :mod:`drsslocate.model` folds this into the power term, which is only
#: valid at one meter, so it is not configurable.
D0_METERS = 1.0


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss and noise parameters.

    Attributes:
        gamma: path-loss exponent, strictly positive.
        sigma_chi: shadowing standard deviation, dB.
        sigma_p0: standard deviation of the per-anchor transmit power around
            the nominal value, dB.  Zero means all anchors share the exact
            nominal power.
        p0_nominal: nominal received power at one meter, dB.
        d0: reference distance, fixed at one meter.
    """

    gamma: float
    sigma_chi: float = 0.0
    sigma_p0: float = 0.0
    p0_nominal: float = 0.0
    d0: float = D0_METERS

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.sigma_chi < 0 or self.sigma_p0 < 0:
            raise ValueError("noise standard deviations must be nonnegative")
        if self.d0 != D0_METERS:
            raise ValueError("d0 is fixed at 1 meter")


@dataclass(frozen=True)
class FadingParams:
    """Nakagami fading severity and averaging length.

    Attributes:
        m: Nakagami shape parameter, at least 0.5.  Instantaneous power is
            Gamma distributed with shape ``m`` and mean equal to the local
            average power.
        k_samples: number of instantaneous power samples averaged into one
            RSS reading.
    """

    m: float = 1.0
    k_samples: int = 100

    def __post_init__(self) -> None:
        if self.m < 0.5:
            raise ValueError("Nakagami shape m must be at least 0.5")
        if self.k_samples < 1:
            raise ValueError("k_samples must be at least 1")


@dataclass(frozen=True)
class RssSampleSet:
    """One RSS reading per anchor, in the anchor order of the scenario."""

    rss_db: np.ndarray
    anchor_ids: np.ndarray

    def __post_init__(self) -> None:
        rss = np.asarray(self.rss_db, dtype=float)
        ids = np.asarray(self.anchor_ids, dtype=int)
        if rss.ndim != 1 or ids.shape != rss.shape:
            raise ValueError("rss_db and anchor_ids must be 1-d and equal length")
        if sorted(ids.tolist()) != list(range(len(ids))):
            raise ValueError("anchor_ids must be a permutation of 0..n-1")
        rss.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "rss_db", rss)
        object.__setattr__(self, "anchor_ids", ids)

    @property
    def n_anchors(self) -> int:
        return self.rss_db.shape[0]


@dataclass(frozen=True)
class DrssSampleSet:
    """Differential RSS readings relative to one reference anchor.

    Attributes:
        rn_index: index of the reference anchor within the scenario order.
        drss_db: (n_anchors - 1,) differences ``rss_i - rss_rn`` for the
            non-reference anchors in ascending anchor index.
    """

    rn_index: int
    drss_db: np.ndarray

    def __post_init__(self) -> None:
        drss = np.asarray(self.drss_db, dtype=float)
        if drss.ndim != 1 or drss.shape[0] < 1:
            raise ValueError("drss_db must be a nonempty 1-d array")
        if self.rn_index < 0 or self.rn_index > drss.shape[0]:
            raise ValueError("rn_index out of range for the implied anchor count")
        drss.setflags(write=False)
        object.__setattr__(self, "drss_db", drss)
        object.__setattr__(self, "rn_index", int(self.rn_index))

    @property
    def n_anchors(self) -> int:
        return self.drss_db.shape[0] + 1

    def anchor_order(self) -> np.ndarray:
        """Anchor indices in model order: reference first, others ascending."""
        others = [i for i in range(self.n_anchors) if i != self.rn_index]
        return np.array([self.rn_index] + others, dtype=int)


def mean_rss_db(
    target: np.ndarray,
    anchor: np.ndarray,
    params: ChannelParams,
    p0_db: float | None = None,
) -> float:
    """Noise-free RSS at one anchor.

    Args:
        target: source position.
        anchor: anchor position.
        params: channel parameters.
        p0_db: transmit power override; defaults to the nominal value.
    """
    dist = float(np.linalg.norm(np.asarray(target, float) - np.asarray(anchor, float)))
    if dist <= 0:
        raise ValueError("target and anchor coincide")
    p0 = params.p0_nominal if p0_db is None else p0_db
    return p0 - 10.0 * params.gamma * np.log10(dist / params.d0)


def sample_instantaneous_power(
    mean_power_db: float, fading: FadingParams, rng: np.random.Generator
) -> np.ndarray:
    """Draw instantaneous linear power samples under Nakagami fading.

    The envelope is Nakagami(m, omega), hence the power is Gamma with shape
    ``m`` and mean ``omega`` = 10**(mean_power_db / 10).
    """
    omega = 10.0 ** (mean_power_db / 10.0)
    return rng.gamma(shape=fading.m, scale=omega / fading.m, size=fading.k_samples)


def estimate_rss_ml(power_samples: np.ndarray) -> float:
    """Maximum likelihood RSS estimate (dB) from linear power samples.

    The ML estimate of the Gamma mean is the sample mean; the dB reading is
    ten times its base-10 log.
    """
    samples = np.asarray(power_samples, dtype=float)
    if samples.ndim != 1 or samples.size < 1:
        raise ValueError("need a nonempty 1-d sample vector")
    if np.any(samples <= 0):
        raise ValueError("power samples must be positive")
    return float(10.0 * np.log10(samples.mean()))


def rss_estimator_variance_db(fading: FadingParams) -> float:
    """Approximate variance (dB^2) of the ML RSS estimate under fading.

    A first-order delta-method expansion of ``10*log10(mean)`` around the
    true mean gives variance ``100 / (ln(10)^2 * k_samples * m)``.
    """
    return 100.0 / (np.log(10.0) ** 2 * fading.k_samples * fading.m)


def sample_rss(
    scenario: Scenario,
    params: ChannelParams,
    rng: np.random.Generator,
    fading: FadingParams | None = None,
) -> RssSampleSet:
    """Draw one RSS reading per anchor.

    Per anchor, the transmit power is ``p0_nominal`` plus an optional
    Gaussian calibration offset, shadowing adds Gaussian dB noise, and, when
    ``fading`` is given, the final reading is the ML estimate formed from
    ``k_samples`` Gamma-distributed instantaneous power draws around the
    shadowed mean.  Without fading the shadowed mean is returned directly.
    """
    n = scenario.n_anchors
    p0 = np.full(n, params.p0_nominal)
    if params.sigma_p0 > 0:
        p0 = p0 + rng.normal(0.0, params.sigma_p0, size=n)
    chi = rng.normal(0.0, params.sigma_chi, size=n) if params.sigma_chi > 0 else np.zeros(n)
    rss = np.empty(n)
    for i in range(n):
        mean_db = mean_rss_db(scenario.target, scenario.anchors[i], params, p0[i]) + chi[i]
        if fading is None:
            rss[i] = mean_db
        else:
            samples = sample_instantaneous_power(mean_db, fading, rng)
            rss[i] = estimate_rss_ml(samples)
    return RssSampleSet(rss_db=rss, anchor_ids=np.arange(n))


def drss_from_rss(rss: RssSampleSet, rn_index: int | None = None) -> DrssSampleSet:
    """Form differential RSS relative to the reference anchor.

    The reference anchor is the one with the strongest reading; ties break
    toward the lowest anchor index.  ``rn_index`` overrides the selection,
    which is occasionally useful in controlled tests.
    """
    readings = rss.rss_db
    if rn_index is None:
        rn = int(np.argmax(readings))
    else:
        if rn_index < 0 or rn_index >= rss.n_anchors:
            raise ValueError("rn_index out of range")
        rn = int(rn_index)
    others = [i for i in range(rss.n_anchors) if i != rn]
    drss = readings[others] - readings[rn]
    return DrssSampleSet(rn_index=rn, drss_db=drss)
