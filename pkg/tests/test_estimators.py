import numpy as np
import pytest

from drsslocate.channel import ChannelParams, drss_from_rss, sample_rss
from drsslocate.estimators import (
    BcdOpts,
    HardCaseError,
    RobustOpts,
    SingularModelError,
    SolverFailureError,
    a_blue,
    le,
    rsdp_bcde,
    rsdpe,
    u_blue,
    zeta_tls,
    _robust_blocks,
)
from drsslocate.model import WhitenedModel, build_unwhitened, build_whitened
from drsslocate.scenario import (
    Scenario,
    clustered_scenario,
    fig1_scenario,
    random_scenario,
    random_target,
)
from drsslocate.sdp import SdpProblem, min_eig, solve as sdp_solve


def _model(scenario, gamma, sigma_chi=0.0, seed=0, gamma_model=None):
    params = ChannelParams(gamma=gamma, sigma_chi=sigma_chi)
    rss = sample_rss(scenario, params, np.random.default_rng(seed))
    drss = drss_from_rss(rss)
    return build_whitened(
        build_unwhitened(drss, scenario.anchors, gamma_model or gamma)
    )


def _synthetic_model(phi, rho):
    phi = np.asarray(phi, dtype=float)
    return WhitenedModel(
        phi=phi,
        rho=np.asarray(rho, dtype=float),
        gamma_used=2.0,
        anchors_used=np.zeros((phi.shape[0] + 1, phi.shape[1] - 1)),
        rn_index=0,
    )


# ---------------------------------------------------------------- u_blue


def test_u_blue_zero_noise_recovers_target():
    for seed in range(10):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=4.0)
        assert np.linalg.norm(u_blue(model).x_hat - sc.target) < 1e-8


def test_u_blue_matches_qr_least_squares_oracle():
    for seed in range(20):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=seed)
        theta_qr, *_ = np.linalg.lstsq(model.phi, model.rho, rcond=None)
        est = u_blue(model)
        np.testing.assert_allclose(est.theta_hat, theta_qr, atol=1e-10)
        np.testing.assert_allclose(est.x_hat, theta_qr[:2], atol=1e-10)


def test_u_blue_room_layout_zero_noise():
    model = _model(fig1_scenario(), gamma=4.0)
    np.testing.assert_allclose(u_blue(model).x_hat, [28.7, 16.3], atol=1e-8)


def test_u_blue_singular_design_raises():
    phi = np.zeros((5, 3))
    phi[:, 0] = np.arange(1.0, 6.0)
    phi[:, 2] = 1.0
    with pytest.raises(SingularModelError):
        u_blue(_synthetic_model(phi, np.ones(5)))


def test_u_blue_pinv_fallback_flagged():
    phi = np.vstack([np.diag([1.0, 1.0, 1e-7]), np.array([[1.0, 1.0, 0.0]])])
    est = u_blue(_synthetic_model(phi, np.array([1.0, 1.0, 1.0, 2.0])))
    assert est.diagnostics.pinv_fallback
    assert est.diagnostics.status == "ill_conditioned"
    assert est.diagnostics.condition > 1e12


# ---------------------------------------------------------------- a_blue


def test_a_blue_zero_noise_equals_u_blue():
    for seed in range(5):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=2.0)
        np.testing.assert_allclose(
            a_blue(model).x_hat, u_blue(model).x_hat, atol=1e-8
        )


def test_a_blue_matches_independent_recomputation():
    for seed in range(20):
        sc = random_scenario(10, 50.0, seed=100 + seed)
        model = _model(sc, gamma=4.0, sigma_chi=2.0, seed=seed)
        base = u_blue(model)
        x_u = base.x_hat
        # recompute the correction with explicit inverses
        w = model.phi.T @ model.phi
        g = np.vstack([np.eye(2), 2.0 * x_u[None, :]])
        tau = np.array([0.0, 0.0, x_u @ x_u - base.theta_hat[2]])
        corr = np.linalg.inv(g.T @ w @ g) @ (g.T @ w @ tau)
        np.testing.assert_allclose(a_blue(model).x_hat, x_u - corr, atol=1e-10)


def test_a_blue_no_worse_than_u_blue_small_noise():
    sc = clustered_scenario("good")
    rng = np.random.default_rng(31)
    params = ChannelParams(gamma=4.0, sigma_chi=np.sqrt(0.1))
    sq_u = sq_a = 0.0
    for _ in range(1000):
        trial_sc = random_target(sc, rng)
        drss = drss_from_rss(sample_rss(trial_sc, params, rng))
        model = build_whitened(build_unwhitened(drss, trial_sc.anchors, 4.0))
        sq_u += np.sum((u_blue(model).x_hat - trial_sc.target) ** 2)
        sq_a += np.sum((a_blue(model).x_hat - trial_sc.target) ** 2)
    assert sq_a <= sq_u


# ---------------------------------------------------------------- le


def test_le_zero_noise_recovers_target_with_small_multiplier():
    for seed in range(10):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=6.0)
        est = le(model)
        assert np.linalg.norm(est.x_hat - sc.target) < 1e-6
        assert abs(est.diagnostics.lam) < 1e-3


def test_le_room_layout_zero_noise():
    model = _model(fig1_scenario(), gamma=4.0)
    np.testing.assert_allclose(le(model).x_hat, [28.7, 16.3], atol=1e-6)


def _multiplier_curve(model, lams):
    gram = model.phi.T @ model.phi
    rhs = model.phi.T @ model.rho
    d = model.dimension
    amat = np.diag(np.concatenate([np.ones(d), [0.0]]))
    bvec = np.concatenate([np.zeros(d), [-0.5]])
    out = []
    for lam in lams:
        theta = np.linalg.solve(gram + lam * amat, rhs - lam * bvec)
        out.append(theta[:d] @ theta[:d] - theta[d])
    return np.array(out)


def test_le_constraint_function_strictly_decreasing():
    checked = 0
    for seed in range(40):
        sc = random_scenario(10, 50.0, seed=300 + seed)
        model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=seed)
        gram = model.phi.T @ model.phi
        evals, evecs = np.linalg.eigh(gram)
        if evals[0] <= 0 or evals[-1] / evals[0] > 1e12:
            continue
        inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
        amat = np.diag([1.0, 1.0, 0.0])
        lam_max = np.linalg.eigvalsh(inv_sqrt @ amat @ inv_sqrt)[-1]
        lo = -1.0 / lam_max
        grid = lo + (np.logspace(-6, 0, 25) * (50.0 - lo))
        values = _multiplier_curve(model, grid)
        assert np.all(np.diff(values) < 0)
        checked += 1
    assert checked >= 35


def test_le_constraint_met_at_returned_multiplier():
    for seed in range(30):
        sc = random_scenario(10, 50.0, seed=400 + seed)
        model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=seed)
        try:
            est = le(model)
        except SingularModelError:
            continue
        f_val = _multiplier_curve(model, [est.diagnostics.lam])[0]
        assert abs(f_val) <= 1e-8
        # the shifted Hessian stays positive semidefinite on the interval
        gram = model.phi.T @ model.phi
        amat = np.diag([1.0, 1.0, 0.0])
        assert np.linalg.eigvalsh(gram + est.diagnostics.lam * amat)[0] >= -1e-8


def _grid_cost_minimum(model, step=0.05, side=50.0):
    a = model.phi[:, :2]
    c3 = model.phi[:, 2]
    axis = np.arange(0.0, side + step / 2, step)
    best = np.inf
    for x0 in axis:
        pts = np.column_stack([np.full_like(axis, x0), axis])
        theta_sq = (pts ** 2).sum(axis=1)
        resid = a @ pts.T + np.outer(c3, theta_sq) - model.rho[:, None]
        best = min(best, float(np.min(np.sum(resid ** 2, axis=0))))
    return best


def test_le_beats_constraint_manifold_grid_search():
    for seed in range(12):
        sc = random_scenario(10, 50.0, seed=500 + seed)
        model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=seed)
        try:
            est = le(model)
        except SingularModelError:
            continue
        le_cost = est.diagnostics.residual ** 2
        grid_cost = _grid_cost_minimum(model)
        assert le_cost <= grid_cost + 1e-6 * (1.0 + grid_cost)


def test_le_hard_case_is_reported():
    # orthonormal design whose unconstrained solution is strictly inside
    # the constraint set: no interior multiplier exists
    model = _synthetic_model(np.eye(2), np.array([0.0, 1.0]))
    with pytest.raises(HardCaseError):
        le(model)


def test_le_rejects_indefinite_normal_matrix():
    phi = np.zeros((4, 3))
    phi[:, 0] = [1.0, 2.0, 3.0, 4.0]
    phi[:, 1] = [1.0, 2.0, 3.0, 4.0]
    phi[:, 2] = [0.5, 1.0, 1.5, 2.0]
    with pytest.raises(SingularModelError):
        le(_synthetic_model(phi, np.ones(4)))


# ---------------------------------------------------------------- zeta_tls


def test_zeta_zero_for_consistent_data():
    for seed in range(10):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=4.0)
        assert zeta_tls(model.phi, model.rho) <= 1e-8


def test_zeta_bounded_by_smallest_singular_value():
    rng = np.random.default_rng(9)
    for _ in range(20):
        phi = rng.normal(size=(9, 3))
        rho = rng.normal(size=9)
        svals = np.linalg.svd(np.hstack([phi, rho[:, None]]), compute_uv=False)
        assert zeta_tls(phi, rho) <= svals[-1] + 1e-12


def test_zeta_matches_rank_one_update_oracle():
    rng = np.random.default_rng(10)
    for _ in range(20):
        phi = rng.normal(size=(9, 3))
        rho = rng.normal(size=9)
        aug = np.hstack([phi, rho[:, None]])
        u, s, vt = np.linalg.svd(aug, full_matrices=False)
        # removing one singular triple changes the first columns by
        # sigma_min times the norm of the right vector's leading block
        oracle = s[-1] * np.linalg.norm(vt[-1, :3])
        assert zeta_tls(phi, rho) == pytest.approx(oracle, abs=1e-9)


def test_zeta_input_validation():
    with pytest.raises(ValueError):
        zeta_tls(np.ones((3, 3)), np.ones(4))
    with pytest.raises(ValueError, match="one more row"):
        zeta_tls(np.ones((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        zeta_tls(np.ones(5), np.ones(5))


# ---------------------------------------------------------------- rsdpe


def test_rsdpe_zero_noise_near_exact_with_tight_gram_block():
    for seed in range(5):
        sc = random_scenario(10, 50.0, seed=seed)
        model = _model(sc, gamma=4.0)
        opts = RobustOpts(zeta=0.0, gap_tol=1e-11)
        est = rsdpe(model.phi, model.rho, opts)
        assert np.linalg.norm(est.x_hat - sc.target) < 1e-4
        # the positive-semidefinite coupling block should be rank d here
        objective, blocks, d = _robust_blocks(model.phi, model.rho, 0.0)
        sol = sdp_solve(
            SdpProblem(objective=objective, blocks=blocks),
            feas_tol=opts.feas_tol,
            gap_tol=opts.gap_tol,
            max_iter=opts.max_iter,
        )
        gram_block = blocks[1]
        mat = gram_block.constant + np.tensordot(sol.y, gram_block.coeffs, axes=(0, 0))
        eigs = np.linalg.eigvalsh(mat)
        assert eigs[0] >= -1e-7
        assert eigs[0] / eigs[-1] <= 1e-6


def test_rsdpe_solution_satisfies_both_lmis():
    for seed in range(5):
        sc = random_scenario(10, 50.0, seed=40 + seed)
        model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=seed)
        objective, blocks, _ = _robust_blocks(
            model.phi, model.rho, zeta_tls(model.phi, model.rho)
        )
        sol = sdp_solve(
            SdpProblem(objective=objective, blocks=blocks),
            feas_tol=1e-7,
            gap_tol=1e-9,
            max_iter=200,
        )
        assert sol.status == "optimal"
        for blk in blocks:
            mat = blk.constant + np.tensordot(sol.y, blk.coeffs, axes=(0, 0))
            assert min_eig(mat) >= -1e-7


def test_rsdpe_worst_case_cost_grows_with_uncertainty():
    sc = random_scenario(10, 50.0, seed=5)
    model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=2)
    costs = {}
    for z in (0.0, 1.0):
        objective, blocks, d = _robust_blocks(model.phi, model.rho, z)
        sol = sdp_solve(
            SdpProblem(objective=objective, blocks=blocks),
            feas_tol=1e-7,
            gap_tol=1e-9,
            max_iter=200,
        )
        assert sol.status == "optimal"
        costs[z] = sol.y[d + 1]
    assert costs[1.0] >= costs[0.0] - 1e-6


def test_rsdpe_propagates_solver_failure():
    sc = random_scenario(10, 50.0, seed=6)
    model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=3)
    with pytest.raises(SolverFailureError, match="status"):
        rsdpe(model.phi, model.rho, RobustOpts(max_iter=1))


def test_rsdpe_rejects_negative_zeta():
    sc = random_scenario(10, 50.0, seed=7)
    model = _model(sc, gamma=4.0)
    with pytest.raises(ValueError, match="nonnegative"):
        rsdpe(model.phi, model.rho, RobustOpts(zeta=-0.5))


def test_rsdpe_records_zeta_in_diagnostics():
    sc = random_scenario(10, 50.0, seed=8)
    model = _model(sc, gamma=4.0, sigma_chi=1.0, seed=4)
    est = rsdpe(model.phi, model.rho)
    assert est.diagnostics.zeta == pytest.approx(
        zeta_tls(model.phi, model.rho), abs=1e-12
    )
    assert est.method == "rsdpe"


# ---------------------------------------------------------------- invariance


def test_estimators_translation_consistent_on_exact_data():
    shift = np.array([13.0, -7.0])
    for seed in range(5):
        s0 = random_scenario(10, 50.0, seed=seed)
        s1 = Scenario(
            anchors=s0.anchors + shift,
            target=s0.target + shift,
            field_side=s0.field_side,
        )
        m0, m1 = _model(s0, gamma=4.0), _model(s1, gamma=4.0)
        for func in (u_blue, a_blue, le):
            dev = func(m1).x_hat - func(m0).x_hat - shift
            assert np.linalg.norm(dev) < 1e-6
        opts = RobustOpts(zeta=0.0, gap_tol=1e-12)
        dev = (
            rsdpe(m1.phi, m1.rho, opts).x_hat
            - rsdpe(m0.phi, m0.rho, opts).x_hat
            - shift
        )
        assert np.linalg.norm(dev) < 1e-6


# ---------------------------------------------------------------- rsdp_bcde


def _drss(scenario, gamma, sigma_chi=0.0, seed=0):
    params = ChannelParams(gamma=gamma, sigma_chi=sigma_chi)
    return drss_from_rss(sample_rss(scenario, params, np.random.default_rng(seed)))


def test_bcd_fixed_point_at_true_exponent():
    sc = random_scenario(10, 50.0, seed=20)
    drss = _drss(sc, gamma=3.0)
    est = rsdp_bcde(drss, sc.anchors, BcdOpts(gamma_init=3.0))
    assert est.diagnostics.status == "converged"
    assert est.diagnostics.iterations <= 2
    assert np.linalg.norm(est.x_hat - sc.target) < 1e-3
    assert est.gamma_hat == pytest.approx(3.0, abs=1e-3)


def test_bcd_recovers_low_exponent_from_high_start():
    sc = random_scenario(10, 50.0, seed=21)
    drss = _drss(sc, gamma=2.0)
    est = rsdp_bcde(drss, sc.anchors, BcdOpts(gamma_init=4.0, xi=1e-6, max_iter=30))
    assert est.gamma_hat == pytest.approx(2.0, abs=1e-2)
    assert np.linalg.norm(est.x_hat - sc.target) < 0.1


def test_bcd_history_and_stopping_are_consistent():
    sc = random_scenario(10, 50.0, seed=22)
    drss = _drss(sc, gamma=2.0, sigma_chi=0.5, seed=11)
    est = rsdp_bcde(drss, sc.anchors, BcdOpts(gamma_init=4.0, xi=1e-3, max_iter=15))
    hist = est.diagnostics.history
    assert len(hist) == est.diagnostics.iterations
    assert est.gamma_hat == hist[-1][1]
    np.testing.assert_array_equal(est.x_hat, hist[-1][0])
    if est.diagnostics.status == "converged":
        assert np.linalg.norm(hist[-1][0] - hist[-2][0]) <= 1e-3
    else:
        assert est.diagnostics.status == "max_iter"
        assert len(hist) == 15


def test_bcd_iteration_cap():
    sc = random_scenario(10, 50.0, seed=24)
    drss = _drss(sc, gamma=2.0, sigma_chi=1.0, seed=12)
    est = rsdp_bcde(drss, sc.anchors, BcdOpts(gamma_init=4.0, xi=1e-12, max_iter=2))
    assert est.diagnostics.status == "max_iter"
    assert est.diagnostics.iterations == 2


def test_bcd_reports_exponent_collapse():
    # a strongly misfit first location can make the worst-case exponent
    # step collapse toward zero; that must surface as an error, not a
    # silent tiny exponent
    sc = random_scenario(10, 50.0, seed=23)
    drss = _drss(sc, gamma=2.0, sigma_chi=1.0, seed=12)
    with pytest.raises(SolverFailureError, match="below the supported range"):
        rsdp_bcde(drss, sc.anchors, BcdOpts(gamma_init=4.0, xi=1e-12, max_iter=2))


def test_bcd_hands_back_best_iterate_when_a_late_solve_stalls():
    # forcing sweeps far past convergence on clean data rebuilds an almost
    # exactly consistent system whose optimal slack sits on the cone
    # boundary; a tightly toleranced inner solve then stalls, and the
    # alternation should hand back the work done so far rather than raise
    sc = random_scenario(10, 50.0, seed=11)
    drss = _drss(sc, gamma=2.0)
    est = rsdp_bcde(
        drss,
        sc.anchors,
        BcdOpts(gamma_init=4.0, xi=1e-12, max_iter=40, solver=RobustOpts(gap_tol=1e-9)),
    )
    assert est.diagnostics.status == "sdp_failure"
    hist = est.diagnostics.history
    assert len(hist) == est.diagnostics.iterations >= 1
    assert est.gamma_hat == hist[-1][1]
    np.testing.assert_array_equal(est.x_hat, hist[-1][0])
    assert est.gamma_hat == pytest.approx(2.0, abs=1e-2)


def test_bcd_small_noise_iterates_mostly_improve():
    rng = np.random.default_rng(77)
    improved = total = 0
    for trial in range(25):
        sc = random_scenario(10, 50.0, seed=600 + trial)
        params = ChannelParams(gamma=2.0, sigma_chi=0.1)
        drss = drss_from_rss(sample_rss(sc, params, rng))
        try:
            est = rsdp_bcde(
                drss, sc.anchors, BcdOpts(gamma_init=4.0, xi=1e-9, max_iter=4)
            )
        except SolverFailureError:
            continue
        hist = est.diagnostics.history
        first = np.linalg.norm(hist[0][0] - sc.target)
        last = np.linalg.norm(hist[-1][0] - sc.target)
        total += 1
        improved += last <= first + 1e-9
    assert total >= 20
    assert improved / total >= 0.9


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma_init": 0.0},
        {"gamma_init": -1.0},
        {"xi": 0.0},
        {"xi": -1e-3},
        {"max_iter": 0},
    ],
)
def test_bcd_opts_validation(kwargs):
    with pytest.raises(ValueError):
        BcdOpts(**kwargs)
