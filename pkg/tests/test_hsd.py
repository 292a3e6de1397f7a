"""The homogeneous self-dual predictor-corrector solver."""

import numpy as np
import pytest

import sospoly as sp
from sospoly import hsd
from sospoly.hsd import (
    ConicProblem,
    SolverParams,
    central_metrics,
    classify,
    corrector_phase,
    embedding_residual,
    embedding_residual_norm,
    initial_point,
    make_iterate,
    newton_direction,
    predictor_step,
)
from sospoly.wsos import build_cone


def ones_weight(t):
    return np.ones(t.shape[0])


def small_problem(seed=1, d=3):
    return sp.build_envelope(1, d, 2, seed=seed).problem


def trivial_problem():
    """N = k = 1 with the one-dimensional log cone (L = 1)."""
    cone = sp.InterpWSOSCone([np.ones((1, 1))])
    return ConicProblem(np.array([[2.0]]), np.array([3.0]), np.array([5.0]), cone)


# ----------------------------------------------------------------------
# parameters and problem validation


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(eta=0.5, beta=0.2)
    with pytest.raises(ValueError):
        SolverParams(r_c=0)
    with pytest.raises(ValueError):
        SolverParams(tol_gap=2.0)


def test_rank_deficient_A_rejected_by_default():
    cone = sp.build_cone(sp.cheb2_points(4), [ones_weight], [2])
    A = np.vstack([np.ones(5), np.ones(5)])
    with pytest.raises(ValueError):
        ConicProblem(A, np.array([1.0, 2.0]), np.ones(5), cone)
    ConicProblem(A, np.array([1.0, 2.0]), np.ones(5), cone, allow_rank_deficient=True)


# ----------------------------------------------------------------------
# initialization


def test_initial_point_metrics():
    z0 = initial_point(small_problem())
    mu, (psi_x, psi_tau), norm = central_metrics(small_problem(), z0)
    assert abs(z0.mu - 1.0) <= 1e-12
    assert np.max(np.abs(z0.psi_x)) <= 1e-12
    assert abs(z0.psi_tau) <= 1e-12
    assert z0.nbhd_norm <= 1e-12            # z0 in N(0)
    assert z0.tau == 1.0 and z0.kappa == 1.0


def test_initial_delta_cancellation():
    # b = A 1 and c = -g(1) make delta_P = delta_D = 1
    cone = sp.build_cone(sp.cheb2_points(6), [ones_weight], [3])
    U = cone.U
    A = np.ones((1, U))
    g1 = cone.barrier(np.ones(U)).gradient
    problem = ConicProblem(A, A @ np.ones(U), -g1, cone)
    z0 = initial_point(problem)
    np.testing.assert_allclose(z0.x, np.ones(U), atol=1e-14)


def test_mu_scales_quadratically():
    problem = small_problem()
    z = initial_point(problem)
    scaled = make_iterate(problem, 2.0 * z.x, 2.0 * z.tau, z.y, 2.0 * z.s, 2.0 * z.kappa)
    assert abs(scaled.mu - 4.0 * z.mu) <= 1e-12


def test_neighborhood_norm_matches_dense_formula():
    problem = small_problem(seed=5)
    params = SolverParams()
    z = predictor_step(problem, initial_point(problem), params).iterate
    H = z.barrier.hess_dense()
    Hbar = np.zeros((H.shape[0] + 1, H.shape[0] + 1))
    Hbar[:-1, :-1] = H
    Hbar[-1, -1] = 1.0 / z.tau**2
    psi = np.concatenate([z.psi_x, [z.psi_tau]])
    vals, vecs = np.linalg.eigh(Hbar)
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.T
    dense = np.linalg.norm(inv_sqrt @ psi)
    assert abs(dense - z.nbhd_norm) <= 1e-8 * (1 + dense)


# ----------------------------------------------------------------------
# Newton directions


def test_corrector_direction_vanishes_at_centered_point():
    problem = small_problem()
    z0 = initial_point(problem)
    d = newton_direction(problem, z0, "corrector")
    assert d.norm() <= 1e-10
    assert d.residual <= 1e-10


def test_predictor_direction_residual():
    problem = small_problem(seed=2)
    z0 = initial_point(problem)
    d = newton_direction(problem, z0, "predictor")
    assert d.residual <= 1e-9
    # explicit block equations
    r_p, r_d, r_g = embedding_residual(problem, z0)
    A, b, c = problem.A, problem.b, problem.c
    e1 = A @ d.dx - b * d.dtau + r_p
    e2 = -A.T @ d.dy + c * d.dtau - d.ds + r_d
    scale = 1 + max(np.max(np.abs(r_p)), np.max(np.abs(r_d)))
    assert np.max(np.abs(e1)) <= 1e-9 * scale
    assert np.max(np.abs(e2)) <= 1e-9 * scale


def test_direction_matches_dense_solve_tiny_instance():
    problem = trivial_problem()
    z = initial_point(problem)
    d = newton_direction(problem, z, "predictor")
    # dense 5x5 system in (dx, dtau, dy, ds, dkappa)
    A, b, c = problem.A[0, 0], problem.b[0], problem.c[0]
    mu, x, tau = z.mu, z.x[0], z.tau
    H = z.barrier.hess_dense()[0, 0]
    M = np.array([
        [A, -b, 0, 0, 0],
        [0, c, -A, -1, 0],
        [-c, 0, b, 0, -1],
        [mu * H, 0, 0, 1, 0],
        [0, mu / tau**2, 0, 0, 1],
    ])
    r_p, r_d, r_g = embedding_residual(problem, z)
    rhs = np.array([-r_p[0], -r_d[0], -r_g, -z.s[0], -z.kappa])
    sol = np.linalg.solve(M, rhs)
    got = np.array([d.dx[0], d.dtau, d.dy[0], d.ds[0], d.dkappa])
    np.testing.assert_allclose(got, sol, rtol=1e-9, atol=1e-12)


def test_unknown_rhs_mode():
    problem = trivial_problem()
    with pytest.raises(ValueError):
        newton_direction(problem, initial_point(problem), "affine")


# ----------------------------------------------------------------------
# predictor and corrector phases


def test_predictor_accepts_reasonable_step():
    problem = sp.build_envelope(1, 5, 2, seed=0).problem
    params = SolverParams()
    out = predictor_step(problem, initial_point(problem), params)
    assert not out.stalled
    assert out.alpha >= 0.01
    assert out.iterate.mu < 1.0
    assert out.iterate.in_neighborhood(params.beta)


def test_predictor_zero_direction_stalls():
    problem = small_problem()
    z0 = initial_point(problem)
    zero = hsd.Direction(np.zeros(z0.x.size), 0.0, np.zeros(problem.A.shape[0]),
                         np.zeros(z0.x.size), 0.0, 0.0)
    out = predictor_step(problem, z0, SolverParams(), direction=zero)
    assert out.stalled and out.iterate is z0


def test_fixed_alpha_predictor():
    problem = small_problem()
    out = predictor_step(problem, initial_point(problem),
                         SolverParams(fixed_alpha_p=0.05))
    assert not out.stalled and out.alpha == 0.05


def test_corrector_noop_inside_eta():
    problem = small_problem()
    z0 = initial_point(problem)           # exactly centered
    z, steps = corrector_phase(problem, z0, SolverParams())
    assert steps == 0 and z is z0


def test_corrector_recenters_within_r_c():
    problem = sp.build_envelope(1, 5, 2, seed=1).problem
    params = SolverParams()
    z = initial_point(problem)
    seen_recenter = False
    for _ in range(6):
        out = predictor_step(problem, z, params)
        zp = out.iterate
        if not zp.in_neighborhood(params.eta):
            seen_recenter = True
            z2, steps = corrector_phase(problem, zp, params)
            assert 1 <= steps <= params.r_c
            assert z2.in_neighborhood(params.eta)
            # mu moves only modestly during correction
            assert 0.5 <= z2.mu / zp.mu <= 2.0
            z = z2
        else:
            z = zp
    assert seen_recenter


# ----------------------------------------------------------------------
# classification and full solves


def test_solve_small_envelope(envelope_small):
    r = envelope_small.result
    assert r.status == hsd.OPTIMAL
    assert r.rel_primal_infeas <= 1e-8
    assert r.rel_dual_infeas <= 1e-8
    assert r.rel_gap <= 1e-8
    # tau scaling of the reported primal
    p = envelope_small.built.problem
    assert np.linalg.norm(p.A @ r.x - p.b) <= 1e-8 * (1 + np.linalg.norm(p.b))


def test_solve_reports_trace(envelope_small):
    trace = envelope_small.result.trace
    assert len(trace) == envelope_small.result.iterations
    for rec in trace:
        assert rec.mu > 0
        assert 0.0 <= rec.alpha_p <= 0.9999


def test_mu_geometric_decrease(envelope_small):
    mus = [rec.mu for rec in envelope_small.result.trace if not rec.stalled]
    for i in range(len(mus) - 10):
        assert mus[i + 10] <= mus[i] / 2.0


def test_residual_linearity(envelope_small):
    for rec in envelope_small.result.trace:
        if rec.stalled:
            continue
        expected = (1.0 - rec.alpha_p) * rec.residual_before
        assert abs(rec.residual_after - expected) <= 1e-9 * (1 + rec.residual_before)


def test_neighborhood_invariant(envelope_small):
    params = SolverParams()
    for rec in envelope_small.result.trace:
        if rec.stalled or not rec.corrected:
            continue
        assert rec.nbhd_norm <= params.eta * rec.mu * (1 + 1e-9)


def test_primal_infeasible_detection(contradictory_rows_solved):
    r = contradictory_rows_solved.result
    assert r.status == hsd.PRIMAL_INFEASIBLE
    p = contradictory_rows_solved.built.problem
    z = r.final
    by = p.b @ z.y
    assert by > 0
    assert np.linalg.norm(p.A.T @ z.y + z.s) <= 1e-8 * by
    assert r.iterations <= 100


def test_dual_infeasible_detection():
    cone = build_cone(sp.cheb2_points(4), [ones_weight], [2])
    U = cone.U
    A = np.zeros((1, U))
    A[0, 0], A[0, 1] = 1.0, -0.5
    problem = ConicProblem(A, np.array([0.0]), -np.ones(U), cone)
    r = sp.solve(problem)
    assert r.status == hsd.DUAL_INFEASIBLE
    z = r.final
    assert -(problem.c @ z.x) > 0
    assert np.linalg.norm(problem.A @ z.x) <= 1e-8 * (-(problem.c @ z.x))


def test_iteration_limit():
    problem = sp.build_envelope(1, 6, 2, seed=4).problem
    r = sp.solve(problem, SolverParams(max_iters=2))
    assert r.status == hsd.ITERATION_LIMIT
    assert r.iterations == 2


def test_classify_optimal_matches_result(envelope_small):
    p = envelope_small.built.problem
    decided = classify(p, envelope_small.result.final, SolverParams())
    assert decided is not None and decided[0] == hsd.OPTIMAL


def test_embedding_residual_norm_consistency(envelope_small):
    p = envelope_small.built.problem
    z = envelope_small.result.final
    r_p, r_d, r_g = embedding_residual(p, z)
    manual = np.sqrt(r_p @ r_p + r_d @ r_d + r_g**2)
    assert abs(embedding_residual_norm(p, z) - manual) <= 1e-15 * (1 + manual)
