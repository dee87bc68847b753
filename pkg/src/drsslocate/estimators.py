"""Location estimators for the whitened differential-RSS model.

Four estimators share the whitened linear model ``phi @ theta ~= rho`` with
``theta = [x, ||x||^2]``:

* ``u_blue``: ordinary least squares on theta, ignoring the quadratic
  dependence between the entries of theta.
* ``a_blue``: first-order correction of ``u_blue`` that projects the
  estimate back toward the constraint surface ``theta[-1] == ||x||^2``.
* ``le``: exact minimizer of the least-squares cost subject to the
  quadratic constraint, computed by root-finding on the Lagrange
  multiplier (a generalized trust-region subproblem).
* ``rsdpe``: robust worst-case formulation that admits a bounded
  perturbation of the design matrix and relaxes to a small LMI problem.

``rsdp_bcde`` alternates the robust location step with a robust scalar fit
of the path-loss exponent, for the case where the exponent is unknown.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import DrssSampleSet
from .model import PleModel, WhitenedModel, build_ple_model, build_unwhitened, build_whitened
from .sdp import LmiBlock, SdpProblem, solve as sdp_solve

#: Condition-number ceiling for direct normal-equation solves; beyond it the
#: estimators fall back to a pseudo-inverse and flag the result.
CONDITION_LIMIT = 1e12

#: Smallest path-loss exponent the alternating estimator will accept from
#: its exponent step before declaring failure.
_GAMMA_FLOOR = 1e-2


class EstimationError(RuntimeError):
    """Base class for estimator failures."""


class SingularModelError(EstimationError):
    """The normal matrix is singular or numerically rank deficient."""


class HardCaseError(EstimationError):
    """The trust-region multiplier sits at the interval boundary.

    This happens only for degenerate geometries where the data gives no
    interior root; the estimator refuses to guess.
    """


class BracketingError(EstimationError):
    """No sign change found for the multiplier root search."""


class SolverFailureError(EstimationError):
    """The LMI solver did not return an optimal certificate."""


@dataclass(frozen=True)
class Diagnostics:
    """Per-estimate numerical audit trail.

    ``lam`` is the trust-region multiplier (``le`` only), ``zeta`` the
    perturbation bound used by the robust estimators, ``history`` the
    per-iteration (location, exponent) pairs of the alternating estimator.
    """

    iterations: int = 0
    residual: float = float("nan")
    status: str = "ok"
    lam: float | None = None
    zeta: float | None = None
    condition: float | None = None
    pinv_fallback: bool = False
    history: tuple = ()


@dataclass(frozen=True)
class LocationEstimate:
    """Estimate of the source position with method metadata.

    ``theta_hat`` stacks the position and its squared norm as estimated;
    for methods that enforce the constraint exactly the last entry equals
    ``||x_hat||^2``.  ``gamma_hat`` is None unless the method estimates the
    path-loss exponent.
    """

    x_hat: np.ndarray
    theta_hat: np.ndarray
    gamma_hat: float | None
    method: str
    diagnostics: Diagnostics


@dataclass(frozen=True)
class RobustOpts:
    """Options for the robust LMI estimator.

    ``zeta`` overrides the design-perturbation bound; when None it is set
    from the total-least-squares residual of the stacked data.  The solver
    options are forwarded to :func:`drsslocate.sdp.solve`.
    """

    zeta: float | None = None
    gap_tol: float = 1e-9
    feas_tol: float = 1e-7
    max_iter: int = 200


@dataclass(frozen=True)
class BcdOpts:
    """Options for the alternating location / exponent estimator.

    The default subproblem gap tolerance is looser than the plain robust
    estimator's: near convergence the rebuilt data turns almost exactly
    consistent, the optimal slack sits on the cone boundary, and interior
    point iterations on those sweeps stall a few-fold above 1e-9.
    """

    gamma_init: float = 4.0
    xi: float = 1e-3
    max_iter: int = 20
    solver: RobustOpts = field(default_factory=lambda: RobustOpts(gap_tol=1e-8))

    def __post_init__(self) -> None:
        if not self.gamma_init > 0:
            raise ValueError("gamma_init must be positive")
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def _gram_solve(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Solve gram @ x = rhs with a conditioning guard.

    Returns (solution, condition number, pseudo-inverse fallback flag) and
    raises :class:`SingularModelError` for exactly singular input.
    """
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond):
        raise SingularModelError("normal matrix is singular")
    if cond > CONDITION_LIMIT:
        return np.linalg.pinv(gram) @ rhs, cond, True
    return np.linalg.solve(gram, rhs), cond, False


def _residual(model: WhitenedModel, theta: np.ndarray) -> float:
    return float(np.linalg.norm(model.phi @ theta - model.rho))


def u_blue(model: WhitenedModel) -> LocationEstimate:
    """Unconstrained best linear unbiased estimate of ``[x, ||x||^2]``."""
    phi, rho = model.phi, model.rho
    gram = phi.T @ phi
    theta, cond, fallback = _gram_solve(gram, phi.T @ rho)
    d = model.dimension
    return LocationEstimate(
        x_hat=theta[:d].copy(),
        theta_hat=theta,
        gamma_hat=None,
        method="u_blue",
        diagnostics=Diagnostics(
            residual=_residual(model, theta),
            condition=cond,
            pinv_fallback=fallback,
            status="ill_conditioned" if fallback else "ok",
        ),
    )


def a_blue(model: WhitenedModel) -> LocationEstimate:
    """Constraint-aware correction of the unconstrained linear estimate.

    Linearizing the constraint ``theta[-1] == ||x||^2`` around the
    unconstrained solution yields a Gauss-Markov correction step that
    shrinks the estimate toward the constraint surface.
    """
    base = u_blue(model)
    phi = model.phi
    d = model.dimension
    x_u = base.x_hat
    gram = phi.T @ phi
    tau = np.zeros(d + 1)
    tau[d] = float(x_u @ x_u) - base.theta_hat[d]
    g = np.vstack([np.eye(d), 2.0 * x_u[None, :]])
    lhs = g.T @ gram @ g
    rhs = g.T @ gram @ tau
    correction, cond, fallback = _gram_solve(lhs, rhs)
    x_a = x_u - correction
    theta = np.concatenate([x_a, [float(x_a @ x_a)]])
    fallback = fallback or base.diagnostics.pinv_fallback
    return LocationEstimate(
        x_hat=x_a,
        theta_hat=theta,
        gamma_hat=None,
        method="a_blue",
        diagnostics=Diagnostics(
            residual=_residual(model, theta),
            condition=max(cond, base.diagnostics.condition),
            pinv_fallback=fallback,
            status="ill_conditioned" if fallback else "ok",
        ),
    )


def le(model: WhitenedModel, tol: float = 1e-10) -> LocationEstimate:
    """Exact constrained least squares via the Lagrange multiplier.

    Minimizes ``||phi @ theta - rho||^2`` subject to
    ``||theta[:d]||^2 - theta[d] == 0``.  Writing the constraint as
    ``theta @ A @ theta + 2 * b @ theta`` with ``A = diag(1,...,1,0)`` and
    ``b = [0,...,0,-1/2]``, the stationarity system is

        (phi.T @ phi + lam * A) theta = phi.T @ rho - lam * b

    and has a unique multiplier in ``(-1/lam_max, inf)`` at which the
    constraint value is zero; the value is strictly decreasing in lam
    there, so bisection after an exponential bracket search is reliable.

    Args:
        model: whitened linear model.
        tol: constraint-value tolerance, relative to ``1 + ||theta||^2``.
    """
    phi, rho = model.phi, model.rho
    d = model.dimension
    gram = phi.T @ phi
    rhs = phi.T @ rho
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= 0 or evals[-1] / evals[0] > CONDITION_LIMIT:
        raise SingularModelError(
            "normal matrix must be positive definite for the multiplier search"
        )
    amat = np.diag(np.concatenate([np.ones(d), [0.0]]))
    bvec = np.concatenate([np.zeros(d), [-0.5]])
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    lam_max = float(np.linalg.eigvalsh(inv_sqrt @ amat @ inv_sqrt)[-1])

    def theta_at(lam: float) -> np.ndarray:
        return np.linalg.solve(gram + lam * amat, rhs - lam * bvec)

    def constraint(lam: float) -> tuple[float, np.ndarray]:
        theta = theta_at(lam)
        return float(theta[:d] @ theta[:d] - theta[d]), theta

    delta = 1e-9 * (1.0 + 1.0 / lam_max)
    lo = -1.0 / lam_max + delta
    f_lo, _ = constraint(lo)
    if f_lo <= 0:
        raise HardCaseError(
            "constraint already nonpositive at the interval edge; "
            "boundary (hard case) solutions are not supported"
        )
    hi = 1.0
    f_hi, theta = constraint(hi)
    doublings = 0
    while f_hi > 0:
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise BracketingError("no sign change after 200 bracket doublings")
        f_hi, theta = constraint(hi)

    # Bisect until |f| meets tol or the bracket hits the relative machine
    # floor.  A width floor tied to tol alone can stop orders of magnitude
    # too early on ill-conditioned geometries where f is steep in lam.
    lam = hi
    f_val = f_hi
    iterations = doublings
    eps = np.finfo(float).eps
    for _ in range(200):
        if abs(f_val) <= tol or (hi - lo) <= 4.0 * eps * (1.0 + abs(lam)):
            break
        mid = 0.5 * (lo + hi)
        f_mid, theta = constraint(mid)
        iterations += 1
        lam, f_val = mid, f_mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    theta = theta_at(lam)
    return LocationEstimate(
        x_hat=theta[:d].copy(),
        theta_hat=theta,
        gamma_hat=None,
        method="le",
        diagnostics=Diagnostics(
            iterations=iterations,
            residual=_residual(model, theta),
            lam=lam,
            condition=float(evals[-1] / evals[0]),
        ),
    )


def zeta_tls(phi: np.ndarray, rho: np.ndarray) -> float:
    """Design-perturbation bound from a total-least-squares fit.

    Stacks ``[phi, rho]``, zeroes its smallest singular value and returns
    the Frobenius distance between ``phi`` and the denoised design block.
    The bound never exceeds that smallest singular value.
    """
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if phi.ndim != 2 or rho.ndim != 1 or rho.shape[0] != phi.shape[0]:
        raise ValueError("phi must be (n, k) and rho (n,)")
    if phi.shape[0] < phi.shape[1] + 1:
        raise ValueError("need at least one more row than stacked columns")
    aug = np.hstack([phi, rho[:, None]])
    u, svals, vt = np.linalg.svd(aug, full_matrices=False)
    svals_trunc = svals.copy()
    svals_trunc[-1] = 0.0
    denoised = (u * svals_trunc) @ vt
    return float(np.linalg.norm(phi - denoised[:, : phi.shape[1]]))


def _robust_blocks(
    phi: np.ndarray, rho: np.ndarray, zeta: float
) -> tuple[np.ndarray, tuple[LmiBlock, ...], int]:
    """Assemble the LMI data of the robust location problem.

    Variables are ``y = [theta (d+1), t, alpha]``; the objective picks out
    ``t``, the worst-case squared residual.  The data enter unscaled: the
    solver's relative gap criterion adapts to the natural magnitudes, and
    rescaling was measured to cost accuracy on ill-conditioned layouts.
    """
    n, cols = phi.shape
    d = cols - 1
    phi_s = phi
    rho_s = rho
    zeta_s = zeta
    n_vars = d + 3
    t_idx, a_idx = d + 1, d + 2

    size = n + 1 + (d + 1)
    f0 = np.zeros((size, size))
    f0[:n, :n] = np.eye(n)
    f0[:n, n] = -rho_s
    f0[n, :n] = -rho_s
    coeffs = np.zeros((n_vars, size, size))
    for j in range(d + 1):
        coeffs[j, :n, n] = phi_s[:, j]
        coeffs[j, n, :n] = phi_s[:, j]
        coeffs[j, n, n + 1 + j] = -zeta_s
        coeffs[j, n + 1 + j, n] = -zeta_s
    coeffs[t_idx, n, n] = 1.0
    coeffs[a_idx, :n, :n] = -np.eye(n)
    coeffs[a_idx, n + 1 :, n + 1 :] = np.eye(d + 1)
    resid_block = LmiBlock(constant=f0, coeffs=coeffs)

    gsize = d + 1
    g0 = np.zeros((gsize, gsize))
    g0[:d, :d] = np.eye(d)
    gcoeffs = np.zeros((n_vars, gsize, gsize))
    for j in range(d):
        gcoeffs[j, j, d] = 1.0
        gcoeffs[j, d, j] = 1.0
    gcoeffs[d, d, d] = 1.0
    gram_block = LmiBlock(constant=g0, coeffs=gcoeffs)

    objective = np.zeros(n_vars)
    objective[t_idx] = 1.0
    return objective, (resid_block, gram_block), d


def rsdpe(
    phi: np.ndarray, rho: np.ndarray, opts: RobustOpts | None = None
) -> LocationEstimate:
    """Robust location estimate under a bounded design perturbation.

    Minimizes the worst-case squared residual over all design matrices
    within Frobenius distance ``zeta`` of ``phi``, relaxed to an LMI
    problem in ``[theta, t, alpha]`` with a Gram block tying the squared
    norm entry of theta to the position entries.

    Raises :class:`SolverFailureError` when the LMI solver cannot certify
    an optimal solution.
    """
    opts = opts or RobustOpts()
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    zeta = zeta_tls(phi, rho) if opts.zeta is None else float(opts.zeta)
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    objective, blocks, d = _robust_blocks(phi, rho, zeta)
    result = sdp_solve(
        SdpProblem(objective=objective, blocks=blocks),
        feas_tol=opts.feas_tol,
        gap_tol=opts.gap_tol,
        max_iter=opts.max_iter,
    )
    if result.status != "optimal":
        raise SolverFailureError(f"robust location step ended with status {result.status}")
    theta = result.y[: d + 1].copy()
    return LocationEstimate(
        x_hat=theta[:d].copy(),
        theta_hat=theta,
        gamma_hat=None,
        method="rsdpe",
        diagnostics=Diagnostics(
            iterations=result.iterations,
            residual=float(np.linalg.norm(phi @ theta - rho)),
            zeta=zeta,
            status="ok",
        ),
    )


def _robust_ple(ple: PleModel, opts: RobustOpts) -> tuple[float, float]:
    """Robust scalar fit of the path-loss exponent.

    Same worst-case construction as the location step, specialized to one
    regression coefficient.  Returns (gamma, zeta) where zeta is the
    perturbation bound used.
    """
    dvec = ple.d
    cvec = ple.c
    zeta = zeta_tls(dvec[:, None], cvec) if opts.zeta is None else float(opts.zeta)
    n = dvec.shape[0]
    d_s = dvec
    c_s = cvec
    z_s = zeta

    size = n + 2
    f0 = np.zeros((size, size))
    f0[:n, :n] = np.eye(n)
    f0[:n, n] = c_s
    f0[n, :n] = c_s
    coeffs = np.zeros((3, size, size))
    coeffs[0, :n, n] = -d_s
    coeffs[0, n, :n] = -d_s
    coeffs[0, n, n + 1] = -z_s
    coeffs[0, n + 1, n] = -z_s
    coeffs[1, n, n] = 1.0
    coeffs[2, :n, :n] = -np.eye(n)
    coeffs[2, n + 1, n + 1] = 1.0
    objective = np.array([0.0, 1.0, 0.0])
    result = sdp_solve(
        SdpProblem(objective=objective, blocks=(LmiBlock(constant=f0, coeffs=coeffs),)),
        feas_tol=opts.feas_tol,
        gap_tol=opts.gap_tol,
        max_iter=opts.max_iter,
    )
    if result.status != "optimal":
        raise SolverFailureError(f"exponent step ended with status {result.status}")
    return float(result.y[0]), zeta


def rsdp_bcde(
    drss: DrssSampleSet, anchors: np.ndarray, opts: BcdOpts | None = None
) -> LocationEstimate:
    """Joint location and path-loss-exponent estimate by alternation.

    Each sweep rebuilds the linearized model at the current exponent
    estimate, runs the robust location step, then refits the exponent
    robustly from log-distance ratios at the new location.  Stops when
    consecutive locations move less than ``opts.xi`` meters.

    The per-sweep (location, exponent) pairs are kept in
    ``diagnostics.history`` so callers can study convergence.

    An inner solve that fails after at least one completed sweep ends the
    alternation and the best iterate so far comes back with status
    ``"sdp_failure"``; a failure on the very first location step, or an
    exponent refit that collapses toward zero, raises
    :class:`SolverFailureError` because there is no trustworthy iterate.
    """
    opts = opts or BcdOpts()
    if not opts.gamma_init > 0:
        raise ValueError("gamma_init must be positive")
    anchors = np.asarray(anchors, dtype=float)
    gamma = float(opts.gamma_init)
    history: list[tuple[np.ndarray, float]] = []
    x_prev: np.ndarray | None = None
    status = "max_iter"
    last_loc: LocationEstimate | None = None
    for sweep in range(opts.max_iter):
        model = build_whitened(build_unwhitened(drss, anchors, gamma))
        try:
            loc = rsdpe(model.phi, model.rho, opts.solver)
        except SolverFailureError:
            if last_loc is None:
                raise
            status = "sdp_failure"
            break
        last_loc = loc
        x_now = loc.x_hat
        ple = build_ple_model(x_now, anchors, drss)
        try:
            gamma, _ = _robust_ple(ple, opts.solver)
        except SolverFailureError:
            history.append((x_now.copy(), gamma))
            status = "sdp_failure"
            break
        history.append((x_now.copy(), gamma))
        if gamma < _GAMMA_FLOOR:
            raise SolverFailureError(
                f"exponent step produced gamma={gamma:.3g}, below the supported range"
            )
        if x_prev is not None and float(np.linalg.norm(x_now - x_prev)) <= opts.xi:
            status = "converged"
            break
        x_prev = x_now
    assert last_loc is not None
    return LocationEstimate(
        x_hat=last_loc.x_hat,
        theta_hat=last_loc.theta_hat,
        gamma_hat=gamma,
        method="rsdp_bcde",
        diagnostics=replace(
            last_loc.diagnostics,
            iterations=len(history),
            status=status,
            history=tuple(history),
        ),
    )
