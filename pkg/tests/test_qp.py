from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from pvdisagg.qp import solve_eqp


def test_small_hand_problem():
    # minimise x^2 + y^2 subject to x + y = 2  ->  (1, 1), multiplier 2
    sol = solve_eqp(np.diag([2.0, 2.0]), np.zeros(2), np.array([[1.0, 1.0]]), np.array([2.0]))
    np.testing.assert_allclose(sol.x, [1.0, 1.0])
    np.testing.assert_allclose(sol.multipliers, [2.0])
    assert sol.kkt_residual < 1e-14


@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.floats(-8, 8))
def test_matches_null_space_oracle(seed, n, log_scale):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n))
    B = rng.normal(size=(n, n))
    H = B @ B.T + np.eye(n)
    # one badly scaled block of the objective
    k = n // 2
    H[:k, :k] *= 10.0 ** log_scale
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    sol = solve_eqp(H, c, A, b)
    ref = oracles.eqp_null_space(H, c, A, b)
    np.testing.assert_allclose(A @ sol.x, b, atol=1e-8 * max(1.0, np.abs(b).max()))
    obj = lambda x: 0.5 * x @ H @ x + c @ x  # noqa: E731
    assert obj(sol.x) <= obj(ref) + 1e-7 * max(1.0, abs(obj(ref)))


def test_singular_kkt_raises():
    with pytest.raises(RuntimeError):
        solve_eqp(np.zeros((2, 2)), np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]))
