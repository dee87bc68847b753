"""Dense interior-point solver for small LMI-constrained problems.

Solves

    minimize    c @ y
    subject to  F0 + sum_k y[k] * F[k]  >=  0   (one LMI per block)

with a primal-dual path-following method using Nesterov-Todd scaling and a
Mehrotra-style adaptive centering parameter.  A nonnegative slack variable
``s`` with a large objective weight is added to every block (``F(y) + s*I``),
which makes the initial iterate strictly feasible for any data and turns
infeasibility detection into "the slack refuses to vanish".  The slack
weight is escalated a couple of times before a problem is declared
infeasible; each escalation resumes from the previous phase's variables, so
the slack shrinks homotopically instead of being re-derived from scratch.

The solver is written for the small dense problems that arise in robust
relaxation-based localization (a handful of variables, blocks of a few
dozen rows).  Everything is deterministic: no randomized pivoting, restarts
or time-based stopping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

_SYM_TOL = 1e-9
_STEP_BACKOFF = 0.98
_BIG_M_FACTORS = (1.0, 1e2, 1e4)


@dataclass(frozen=True)
class LmiBlock:
    """One constraint block ``constant + sum_k y[k] * coeffs[k] >= 0``.

    Attributes:
        constant: (s, s) symmetric matrix.
        coeffs: (n_vars, s, s) stack of symmetric coefficient matrices.
    """

    constant: np.ndarray
    coeffs: np.ndarray


@dataclass(frozen=True)
class SdpProblem:
    """Objective vector plus a list of LMI blocks sharing the variables."""

    objective: np.ndarray
    blocks: tuple[LmiBlock, ...]

    @property
    def n_vars(self) -> int:
        return np.asarray(self.objective).shape[0]


@dataclass(frozen=True)
class SdpSolution:
    """Solver outcome.

    Attributes:
        y: variable vector at the final iterate.
        status: "optimal", "infeasible", "max_iter" or "numerical_failure".
        iterations: total interior-point iterations across slack-weight
            escalations.
        duality_gap: relative complementarity gap at the final iterate.
        objective_value: objective at ``y``.
        slack: final value of the feasibility slack (near zero for feasible
            problems).
    """

    y: np.ndarray
    status: str
    iterations: int
    duality_gap: float
    objective_value: float
    slack: float


def min_eig(mat: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Raises ``ValueError`` when the input is not square and symmetric; used
    to certify LMI feasibility of returned solutions.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    scale = 1.0 + float(np.max(np.abs(mat)))
    if np.max(np.abs(mat - mat.T)) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(mat)[0])


def _check_symmetric(mat: np.ndarray, what: str) -> None:
    scale = 1.0 + float(np.max(np.abs(mat)))
    if np.max(np.abs(mat - mat.T)) > _SYM_TOL * scale:
        raise ValueError(f"{what} is not symmetric")


def _validate(problem: SdpProblem) -> None:
    c = np.asarray(problem.objective, dtype=float)
    if c.ndim != 1 or c.size < 1 or not np.all(np.isfinite(c)):
        raise ValueError("objective must be a finite 1-d vector")
    if not problem.blocks:
        raise ValueError("problem has no constraint blocks")
    for bi, blk in enumerate(problem.blocks):
        f0 = np.asarray(blk.constant, dtype=float)
        coeffs = np.asarray(blk.coeffs, dtype=float)
        if f0.ndim != 2 or f0.shape[0] != f0.shape[1]:
            raise ValueError(f"block {bi}: constant must be square")
        if coeffs.shape != (c.size,) + f0.shape:
            raise ValueError(
                f"block {bi}: coeffs must have shape (n_vars, s, s) matching "
                "the objective length and block size"
            )
        if not np.all(np.isfinite(f0)) or not np.all(np.isfinite(coeffs)):
            raise ValueError(f"block {bi}: entries must be finite")
        _check_symmetric(f0, f"block {bi} constant")
        for k in range(coeffs.shape[0]):
            _check_symmetric(coeffs[k], f"block {bi} coefficient {k}")


def _lmi_values(problem: SdpProblem, y: np.ndarray) -> list[np.ndarray]:
    out = []
    for blk in problem.blocks:
        out.append(np.asarray(blk.constant, float) + np.tensordot(y, blk.coeffs, axes=(0, 0)))
    return out


def _worst_eig(problem: SdpProblem, y: np.ndarray) -> float:
    return min(float(np.linalg.eigvalsh(m)[0]) for m in _lmi_values(problem, y))


def _max_step(mat: np.ndarray, direction: np.ndarray) -> float:
    """Largest a >= 0 with mat + a * direction PSD, for PD mat."""
    ell = np.linalg.cholesky(mat)
    half = solve_triangular(ell, direction, lower=True)
    scaled = solve_triangular(ell, half.T, lower=True)
    lam = float(np.linalg.eigvalsh(0.5 * (scaled + scaled.T))[0])
    if lam >= -1e-16:
        return np.inf
    return -1.0 / lam


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Nesterov-Todd scaling point W with W @ z @ W == x."""
    lx = np.linalg.cholesky(x)
    lz = np.linalg.cholesky(z)
    _, lam, vt = np.linalg.svd(lz.T @ lx)
    r = lx @ (vt.T / np.sqrt(lam))
    w = r @ r.T
    return 0.5 * (w + w.T)


def _ipm(
    c: np.ndarray,
    blocks: list[tuple[np.ndarray, np.ndarray]],
    y0: np.ndarray,
    gap_tol: float,
    max_iter: int,
) -> tuple[np.ndarray, str, int, float]:
    """Core predictor-corrector loop on the slack-extended problem.

    ``blocks`` holds (constant, coeffs) pairs where coeffs already includes
    the slack column; ``y0`` must be strictly feasible for them.  The dual
    iterate Z is kept exactly equal to the LMI value at y, so only the
    primal equality residual has to be driven to zero.
    """
    m = c.size
    n_total = sum(b0.shape[0] for b0, _ in blocks)
    c_scale = 1.0 + float(np.max(np.abs(c)))
    y = y0.copy()
    xs = [np.eye(b0.shape[0]) for b0, _ in blocks]
    zs = [b0 + np.tensordot(y, cf, axes=(0, 0)) for b0, cf in blocks]
    relgap = np.inf
    for it in range(max_iter):
        gap = sum(float(np.vdot(x, z)) for x, z in zip(xs, zs))
        mu = gap / n_total
        pobj = float(c @ y)
        dobj = -sum(float(np.vdot(b0, x)) for (b0, _), x in zip(blocks, xs))
        relgap = gap / (1.0 + abs(pobj) + abs(dobj))
        resid = c - np.array(
            [
                sum(float(np.vdot(cf[k], x)) for (_, cf), x in zip(blocks, xs))
                for k in range(m)
            ]
        )
        if relgap <= gap_tol and np.max(np.abs(resid)) <= gap_tol * c_scale:
            return y, "converged", it, relgap
        try:
            ws = [_nt_scaling(x, z) for x, z in zip(xs, zs)]
            zinvs = [np.linalg.inv(z) for z in zs]
            schur = np.zeros((m, m))
            scaled_coeffs = []
            for (b0, cf), w in zip(blocks, ws):
                t = np.einsum("ij,kjl,lm->kim", w, cf, w, optimize=True)
                scaled_coeffs.append(t)
                schur += np.einsum("kij,lji->kl", t, cf, optimize=True)
            schur = 0.5 * (schur + schur.T)
            schur_f = cho_factor(schur)
            zdot = np.array(
                [
                    sum(float(np.vdot(cf[k], zi)) for (_, cf), zi in zip(blocks, zinvs))
                    for k in range(m)
                ]
            )

            def directions(tau: float):
                dy = cho_solve(schur_f, tau * zdot - c)
                dzs = [np.tensordot(dy, cf, axes=(0, 0)) for _, cf in blocks]
                dxs = []
                for x, zi, w, dz in zip(xs, zinvs, ws, dzs):
                    dx = tau * zi - x - w @ dz @ w
                    dxs.append(0.5 * (dx + dx.T))
                return dy, dzs, dxs

            dy_a, dzs_a, dxs_a = directions(0.0)
            ap_a = min(1.0, _STEP_BACKOFF * min(_max_step(x, dx) for x, dx in zip(xs, dxs_a)))
            ad_a = min(1.0, _STEP_BACKOFF * min(_max_step(z, dz) for z, dz in zip(zs, dzs_a)))
            gap_aff = sum(
                float(np.vdot(x + ap_a * dx, z + ad_a * dz))
                for x, dx, z, dz in zip(xs, dxs_a, zs, dzs_a)
            )
            sigma = float(np.clip((max(gap_aff, 0.0) / gap) ** 3, 1e-8, 0.999))
            dy, dzs, dxs = directions(sigma * mu)
            ap = min(1.0, _STEP_BACKOFF * min(_max_step(x, dx) for x, dx in zip(xs, dxs)))
            ad = min(1.0, _STEP_BACKOFF * min(_max_step(z, dz) for z, dz in zip(zs, dzs)))
        except np.linalg.LinAlgError:
            return y, "numerical_failure", it, relgap
        if not np.isfinite(ap) or not np.isfinite(ad) or max(ap, ad) < 1e-10:
            return y, "numerical_failure", it, relgap
        xs = [0.5 * ((x + ap * dx) + (x + ap * dx).T) for x, dx in zip(xs, dxs)]
        y = y + ad * dy
        zs = [b0 + np.tensordot(y, cf, axes=(0, 0)) for b0, cf in blocks]
        if not all(np.all(np.isfinite(x)) for x in xs) or not np.all(np.isfinite(y)):
            return y, "numerical_failure", it + 1, relgap
    return y, "max_iter", max_iter, relgap


def solve(
    problem: SdpProblem,
    *,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-7,
    max_iter: int = 100,
) -> SdpSolution:
    """Solve an LMI-constrained minimization problem.

    Args:
        problem: objective and constraint blocks; all matrices must be
            symmetric (validated, non-symmetric input raises ValueError).
        feas_tol: a solution is certified feasible when every block of the
            LMI evaluates with smallest eigenvalue at least ``-feas_tol``.
        gap_tol: relative duality-gap target.
        max_iter: interior-point iteration cap per slack-weight level.

    Returns:
        An :class:`SdpSolution`; ``status == "optimal"`` guarantees the
        feasibility certificate and gap target hold at ``y``.
    """
    _validate(problem)
    c_true = np.asarray(problem.objective, dtype=float)
    m = c_true.size
    # Run the iteration on a unit-max-norm objective so the iterate path,
    # and therefore the argmin, is invariant to positive objective scaling.
    c_norm = float(np.max(np.abs(c_true)))
    c = c_true / c_norm if c_norm > 0 else c_true

    ext_blocks: list[tuple[np.ndarray, np.ndarray]] = []
    for blk in problem.blocks:
        f0 = np.asarray(blk.constant, dtype=float)
        coeffs = np.asarray(blk.coeffs, dtype=float)
        size = f0.shape[0]
        ext = np.concatenate([coeffs, np.eye(size)[None, :, :]], axis=0)
        ext_blocks.append((f0, ext))
    slack_coeffs = np.zeros((m + 1, 1, 1))
    slack_coeffs[m, 0, 0] = 1.0
    ext_blocks.append((np.zeros((1, 1)), slack_coeffs))

    worst_f0 = min(
        float(np.linalg.eigvalsh(np.asarray(b.constant, float))[0])
        for b in problem.blocks
    )
    start_slack = 1.0 + 1.2 * max(0.0, -worst_f0)
    base_weight = 1e4 * max(1.0, float(np.max(np.abs(c))))

    total_iters = 0
    y = np.zeros(m + 1)
    y[m] = start_slack
    flag = "numerical_failure"
    relgap = np.inf
    # A converged slack below this is numerical residue near the gap floor,
    # not evidence of infeasibility.
    infeas_floor = 1e3 * feas_tol
    stuck: tuple[np.ndarray, float, float] | None = None
    for factor in _BIG_M_FACTORS:
        c_ext = np.concatenate([c, [base_weight * factor]])
        y, flag, iters, relgap = _ipm(c_ext, ext_blocks, y, gap_tol, max_iter)
        total_iters += iters
        if flag == "converged":
            if _worst_eig(problem, y[:m]) >= -feas_tol:
                return SdpSolution(
                    y=y[:m].copy(),
                    status="optimal",
                    iterations=total_iters,
                    duality_gap=relgap,
                    objective_value=float(c_true @ y[:m]),
                    slack=float(y[m]),
                )
            if y[m] > infeas_floor:
                # Converged, but only with a materially positive slack:
                # evidence the original problem is infeasible.  A slack that
                # survives a hundredfold price increase essentially
                # unchanged settles it.
                if stuck is not None and y[m] > 0.99 * stuck[2]:
                    stuck = (y.copy(), relgap, float(y[m]))
                    break
                stuck = (y.copy(), relgap, float(y[m]))
        # Raise the slack's price and resume from the current point,
        # restoring strict feasibility of the extended blocks first.
        worst = min(
            float(np.linalg.eigvalsh(b0 + np.tensordot(y, cf, axes=(0, 0)))[0])
            for b0, cf in ext_blocks
        )
        if worst < 1e-7:
            y[m] += 1e-7 - worst
    if stuck is not None:
        y, relgap, slack = stuck
        status = "infeasible"
    elif flag == "max_iter":
        status = "max_iter"
        slack = float(y[m])
    else:
        status = "numerical_failure"
        slack = float(y[m])
    return SdpSolution(
        y=y[:m].copy(),
        status=status,
        iterations=total_iters,
        duality_gap=relgap,
        objective_value=float(c_true @ y[:m]),
        slack=slack,
    )
