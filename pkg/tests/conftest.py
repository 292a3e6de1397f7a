"""Shared fixtures: the expensive benchmark solves are done once per session."""

import time

import numpy as np
import pytest

import sospoly as sp


class SolvedInstance:
    def __init__(self, built, result, elapsed):
        self.built = built
        self.result = result
        self.elapsed = elapsed


def _solve_envelope(n, d, k, seed, tol):
    built = sp.build_envelope(n, d, k, seed=seed)
    params = sp.SolverParams(tol_gap=tol, tol_infeas=tol)
    t0 = time.perf_counter()
    result = sp.solve(built.problem, params)
    return SolvedInstance(built, result, time.perf_counter() - t0)


def _solve_polymin(name):
    built = sp.build_polymin(sp.builtin_poly(name))
    t0 = time.perf_counter()
    result = sp.solve(built.problem)
    return SolvedInstance(built, result, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def envelope_1d_100():
    return _solve_envelope(1, 100, 2, seed=0, tol=1e-8)


@pytest.fixture(scope="session")
def envelope_2d_10():
    return _solve_envelope(2, 10, 2, seed=0, tol=1e-8)


@pytest.fixture(scope="session")
def envelope_3d_6():
    return _solve_envelope(3, 6, 2, seed=0, tol=1e-6)


@pytest.fixture(scope="session")
def envelope_small():
    return _solve_envelope(1, 5, 2, seed=1, tol=1e-8)


@pytest.fixture(scope="session")
def butcher_solved():
    return _solve_polymin("butcher")


@pytest.fixture(scope="session")
def caprasse_solved():
    return _solve_polymin("caprasse")


@pytest.fixture(scope="session")
def magnetism_solved():
    return _solve_polymin("magnetism")


@pytest.fixture(scope="session")
def contradictory_rows_solved():
    pts = sp.cheb2_points(4)
    cone = sp.build_cone(pts, [lambda t: np.ones(t.shape[0])], [2])
    A = np.vstack([np.ones(pts.U), np.ones(pts.U)])
    b = np.array([1.0, 2.0])
    c = 2.0 + pts.points[:, 0] ** 2
    problem = sp.ConicProblem(A, b, c, cone, allow_rank_deficient=True)
    t0 = time.perf_counter()
    result = sp.solve(problem)
    built = sp.BuiltProblem(problem, problem.cone, pts)
    return SolvedInstance(built, result, time.perf_counter() - t0)
