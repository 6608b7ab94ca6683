"""Direct KKT solve of equality-constrained quadratic programs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

RUIZ_ITERATIONS = 20
REFINEMENT_STEPS = 3


@dataclass(frozen=True, eq=False)
class EqpSolution:
    x: np.ndarray
    multipliers: np.ndarray
    kkt_residual: float


def _ruiz_scaling(K: sparse.csc_matrix, iterations: int = RUIZ_ITERATIONS) -> np.ndarray:
    """Symmetric diagonal scaling ``d`` that brings every row of ``diag(d) K diag(d)`` near unit max-norm."""
    d = np.ones(K.shape[0])
    A = abs(K).tocsr()
    for _ in range(iterations):
        scaled = sparse.diags(d) @ A @ sparse.diags(d)
        row_max = np.asarray(scaled.max(axis=1).todense()).ravel()
        row_max[row_max == 0] = 1.0
        d /= np.sqrt(row_max)
    return d


def solve_eqp(H, c, A, b) -> EqpSolution:
    """Minimise ``1/2 x'Hx + c'x`` subject to ``Ax = b``.

    Factorises the sparse KKT matrix ``[[H, A'], [A, 0]]`` once, after a
    symmetric equilibration that keeps badly scaled objective terms from
    losing precision, and polishes the solution by iterative refinement. The
    returned ``kkt_residual`` is the relative residual of the unscaled linear
    system, the caller's convergence diagnostic.
    """
    H = sparse.csc_matrix(H)
    A = sparse.csc_matrix(A)
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = H.shape[0], A.shape[0]
    kkt = sparse.bmat([[H, A.T], [A, None]], format="csc")
    rhs = np.concatenate([-c, b])
    d = _ruiz_scaling(kkt)
    D = sparse.diags(d)
    lu = splinalg.splu((D @ kkt @ D).tocsc())
    sol = d * lu.solve(d * rhs)
    for _ in range(REFINEMENT_STEPS):
        sol = sol + d * lu.solve(d * (rhs - kkt @ sol))
    resid = kkt @ sol - rhs
    scale = max(np.linalg.norm(rhs), 1.0)
    return EqpSolution(sol[:n], -sol[n:n + m], float(np.linalg.norm(resid) / scale))
