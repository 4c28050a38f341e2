"""Tests for the convex quadratic-program solver."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maptrix.errors import ValidationError
from maptrix.qp import QpProblem, solve
from qp_reference import random_qp, sample_feasible, solve_reference


def _problem(Q, c, A=None, b=None, x0=None) -> QpProblem:
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    c = np.asarray(c, dtype=float)
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    return QpProblem(Q=Q, c=c, A=A, b=b, x0=x0)


def test_unconstrained_parabola():
    # min (x - 3)^2  ==  min 0.5 * 2x^2 - 6x  (+ const)
    res = solve(_problem([[2.0]], [-6.0]))
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(3.0, abs=1e-9)


def test_active_halfline():
    # min x^2 subject to x >= 2, started infeasible at 0.
    res = solve(_problem([[2.0]], [0.0], A=[[-1.0]], b=[-2.0], x0=[0.0]))
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(2.0, abs=1e-9)


def test_projection_onto_halfplane():
    # min (x-1)^2 + (y-2)^2 subject to x + y <= 1  ->  (0, 1)
    res = solve(
        _problem(
            np.eye(2) * 2.0, [-2.0, -4.0], A=[[1.0, 1.0]], b=[1.0], x0=[1.0, 2.0]
        )
    )
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.0, 1.0], atol=1e-8)


def test_paired_rows_as_equality():
    # x <= 1 and -x <= -1 pin x = 1 exactly.
    res = solve(
        _problem([[2.0]], [-6.0], A=[[1.0], [-1.0]], b=[1.0, -1.0], x0=[5.0])
    )
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(1.0, abs=1e-9)


def test_infeasible_certificate():
    # x <= 0 and x >= 1 cannot both hold.
    res = solve(_problem([[2.0]], [0.0], A=[[1.0], [-1.0]], b=[0.0, -1.0]))
    assert res.status == "infeasible"
    assert res.certificate_row in (0, 1)


def test_inactive_constraint_ignored():
    res = solve(_problem([[2.0]], [-6.0], A=[[1.0]], b=[100.0]))
    assert res.x[0] == pytest.approx(3.0, abs=1e-9)


def test_degenerate_duplicate_rows():
    # The same halfspace listed three times must not confuse the solver.
    A = [[1.0, 0.0]] * 3
    b = [0.5] * 3
    res = solve(_problem(np.eye(2) * 2.0, [-2.0, -4.0], A=A, b=b, x0=[0.0, 0.0]))
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.5, 2.0], atol=1e-8)


def test_box_corner():
    # min (x+2)^2 + (y+2)^2 over [0,1]^2  ->  (0, 0)
    A = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
    b = [1.0, 0.0, 1.0, 0.0]
    res = solve(_problem(np.eye(2) * 2.0, [4.0, 4.0], A=A, b=b, x0=[0.5, 0.5]))
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.0, 0.0], atol=1e-8)


def test_objective_scaling_invariance():
    # Scaling Q and c together leaves the argmin unchanged.
    rng = np.random.default_rng(7)
    Q, c, A, b, x0, _ = random_qp(rng, n_max=8, m_max=6)
    base = solve(QpProblem(Q=Q, c=c, A=A, b=b, x0=x0))
    for t in (0.25, 4.0, 1000.0):
        scaled = solve(QpProblem(Q=t * Q, c=t * c, A=A, b=b, x0=x0))
        assert np.allclose(scaled.x, base.x, atol=1e-6)


def test_row_scaling_invariance():
    # Scaling any row of (A, b) by a positive factor keeps the same set.
    rng = np.random.default_rng(8)
    Q, c, A, b, x0, _ = random_qp(rng, n_max=8, m_max=6)
    base = solve(QpProblem(Q=Q, c=c, A=A, b=b, x0=x0))
    scale = rng.uniform(0.1, 10.0, size=A.shape[0])
    scaled = solve(
        QpProblem(Q=Q, c=c, A=A * scale[:, None], b=b * scale, x0=x0)
    )
    assert np.allclose(scaled.x, base.x, atol=1e-6)


def test_random_suite_matches_reference():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        Q, c, A, b, x0, x_feas = random_qp(rng)
        res = solve(QpProblem(Q=Q, c=c, A=A, b=b, x0=x0))
        assert res.status == "optimal"
        # Feasible within tolerance.
        if A.shape[0]:
            assert np.all(A @ res.x <= b + 1e-6 * (1.0 + np.abs(b)))
        ref = solve_reference(Q, c, A, b, x0)

        def obj(v):
            return float(0.5 * v @ Q @ v + c @ v)

        assert abs(obj(res.x) - obj(ref)) <= 1e-5
        # And never worse than plain feasible sampling.
        samples = sample_feasible(rng, A, b, x_feas, 200)
        best = min(obj(s) for s in samples)
        assert obj(res.x) <= best + 1e-8 * (1.0 + abs(best))


def test_result_reports_objective():
    prob = _problem([[2.0]], [-6.0])
    res = solve(prob)
    assert res.objective == pytest.approx(prob.objective(res.x))


def test_shape_validation():
    with pytest.raises(ValidationError):
        QpProblem(
            Q=np.eye(2),
            c=np.zeros(3),
            A=np.zeros((0, 2)),
            b=np.zeros(0),
            x0=np.zeros(2),
        )
    with pytest.raises(ValidationError):
        QpProblem(
            Q=np.array([[1.0, 0.5], [0.0, 1.0]]),
            c=np.zeros(2),
            A=np.zeros((0, 2)),
            b=np.zeros(0),
            x0=np.zeros(2),
        )


@settings(max_examples=60, deadline=None)
@given(
    cx=st.floats(-5, 5),
    cy=st.floats(-5, 5),
    lo=st.floats(-2, 0),
    hi=st.floats(0.5, 3),
)
def test_box_projection_property(cx, cy, lo, hi):
    # Projecting a point onto a box clamps each coordinate independently.
    A = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, -1.0]])
    b = np.array([hi, -lo, hi, -lo])
    prob = QpProblem(
        Q=np.eye(2) * 2.0,
        c=np.array([-2.0 * cx, -2.0 * cy]),
        A=A,
        b=b,
        x0=np.zeros(2),
    )
    res = solve(prob)
    expected = np.clip([cx, cy], lo, hi)
    assert res.status == "optimal"
    assert np.allclose(res.x, expected, atol=1e-7)
