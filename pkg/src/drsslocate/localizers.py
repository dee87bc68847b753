"""Estimator-style front ends over the functional core.

Each localizer follows the familiar fit/predict pattern: ``fit`` takes the
anchor coordinates as ``X`` (one row per anchor) and the differential RSS
readings as ``y`` (one entry per non-reference anchor, ascending anchor
index), learns the source position, and ``predict`` forward-models the
noise-free DRSS a new set of anchor positions would observe against the
fitted reference anchor.  Hyperparameters live in ``__init__`` so the usual
``get_params`` / ``set_params`` / ``clone`` machinery works.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import estimators as est
from .channel import DrssSampleSet
from .model import build_unwhitened, build_whitened
from .validation import check_anchors, check_drss, check_rn_index


class _BaseLocalizer(BaseEstimator):
    """Shared fit/predict plumbing; subclasses supply the solve step."""

    def _solve(self, model) -> est.LocationEstimate:
        raise NotImplementedError

    def _fit_gamma(self) -> float:
        """Exponent used to linearize the model during fit."""
        return self.gamma

    def fit(self, X, y, rn_index: int = 0):
        """Learn the source position.

        Args:
            X: (n_anchors, d) anchor coordinates.
            y: (n_anchors - 1,) DRSS readings relative to the reference
                anchor, ordered by ascending anchor index with the
                reference anchor skipped.
            rn_index: which anchor is the reference (strongest reading).
        """
        X = check_anchors(X)
        y = check_drss(y, X.shape[0])
        rn = check_rn_index(rn_index, X.shape[0])
        drss = DrssSampleSet(rn_index=rn, drss_db=y)
        model = build_whitened(build_unwhitened(drss, X, self._fit_gamma()))
        result = self._solve_from(model, drss, X)
        self.n_features_in_ = X.shape[1]
        self.anchors_ = X
        self.rn_index_ = rn
        self.location_ = result.x_hat
        self.theta_ = result.theta_hat
        self.diagnostics_ = result.diagnostics
        self.gamma_ = result.gamma_hat if result.gamma_hat is not None else self._fit_gamma()
        return self

    def _solve_from(self, model, drss, X) -> est.LocationEstimate:
        return self._solve(model)

    def predict(self, X) -> np.ndarray:
        """Noise-free DRSS that anchors at rows of ``X`` would observe.

        Readings are relative to the fitted reference anchor, using the
        fitted (or configured) path-loss exponent.
        """
        check_is_fitted(self, "location_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must be 2-d with {self.n_features_in_} columns")
        ref = self.anchors_[self.rn_index_]
        d_ref = float(np.linalg.norm(self.location_ - ref))
        dists = np.linalg.norm(X - self.location_[None, :], axis=1)
        if d_ref <= 0 or np.any(dists <= 0):
            raise ValueError("prediction point coincides with the estimated source")
        return -10.0 * self.gamma_ * np.log10(dists / d_ref)


class UBlueLocalizer(_BaseLocalizer):
    """Unconstrained linear estimator with a known path-loss exponent."""

    def __init__(self, gamma: float = 4.0):
        self.gamma = gamma

    def _solve(self, model):
        return est.u_blue(model)


class ABlueLocalizer(_BaseLocalizer):
    """Constraint-corrected linear estimator with a known exponent."""

    def __init__(self, gamma: float = 4.0):
        self.gamma = gamma

    def _solve(self, model):
        return est.a_blue(model)


class LagrangianLocalizer(_BaseLocalizer):
    """Exact constrained least-squares estimator (multiplier search)."""

    def __init__(self, gamma: float = 4.0, tol: float = 1e-10):
        self.gamma = gamma
        self.tol = tol

    def _solve(self, model):
        return est.le(model, tol=self.tol)


class RobustSdpLocalizer(_BaseLocalizer):
    """Robust estimator tolerating a bounded design perturbation."""

    def __init__(
        self,
        gamma: float = 4.0,
        zeta: float | None = None,
        gap_tol: float = 1e-9,
        feas_tol: float = 1e-7,
        max_iter: int = 200,
    ):
        self.gamma = gamma
        self.zeta = zeta
        self.gap_tol = gap_tol
        self.feas_tol = feas_tol
        self.max_iter = max_iter

    def _solve(self, model):
        opts = est.RobustOpts(
            zeta=self.zeta,
            gap_tol=self.gap_tol,
            feas_tol=self.feas_tol,
            max_iter=self.max_iter,
        )
        return est.rsdpe(model.phi, model.rho, opts)


class JointPleLocalizer(_BaseLocalizer):
    """Joint location and path-loss-exponent estimator (alternating).

    After ``fit``, ``gamma_`` holds the estimated exponent and
    ``diagnostics_.history`` the per-sweep iterates.
    """

    def __init__(
        self,
        gamma_init: float = 4.0,
        xi: float = 1e-3,
        max_iter: int = 20,
        gap_tol: float = 1e-9,
        feas_tol: float = 1e-7,
        solver_max_iter: int = 200,
    ):
        self.gamma_init = gamma_init
        self.xi = xi
        self.max_iter = max_iter
        self.gap_tol = gap_tol
        self.feas_tol = feas_tol
        self.solver_max_iter = solver_max_iter

    def _fit_gamma(self) -> float:
        return self.gamma_init

    def _solve_from(self, model, drss, X):
        opts = est.BcdOpts(
            gamma_init=self.gamma_init,
            xi=self.xi,
            max_iter=self.max_iter,
            solver=est.RobustOpts(
                gap_tol=self.gap_tol,
                feas_tol=self.feas_tol,
                max_iter=self.solver_max_iter,
            ),
        )
        return est.rsdp_bcde(drss, X, opts)
