"""Max-margin primal/dual pair over the complement subspace.

The dual minimizes |A_perp^T q| over the probability simplex; any dual
optimum q recovers the unique primal unit vector as -A_perp^T q / |A_perp^T q|.
Projected gradient descent with a duality-gap stopping rule makes the
returned solution's quality independent of any convergence-rate argument.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, NotSeparableError, ValidationError

DEFAULT_GAP_TOL = 1e-8
MAX_ITERS = 10**6


@dataclass(eq=False)
class MarginSolution:
    """Margin value, unit primal direction, one dual optimum, and the realized
    duality gap (dual value minus primal value, nonnegative)."""

    margin: float
    direction: np.ndarray
    dual_weights: np.ndarray
    gap: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "margin": self.margin,
            "direction": self.direction.tolist(),
            "dual_weights": self.dual_weights.tolist(),
            "gap": self.gap,
            "iterations": self.iterations,
        }


def _top_eig(G: np.ndarray, iters: int = 200) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    d = G.shape[0]
    x = np.ones(d) / np.sqrt(d)
    lam = 0.0
    for _ in range(iters):
        y = G @ x
        lam = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return lam


def primal_margin(a_perp: np.ndarray, u: np.ndarray) -> float:
    """-max_i (A_perp u)_i for a unit vector u; at most the true margin."""
    a_perp = np.asarray(a_perp, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValidationError("primal_margin expects a unit vector")
    return float(-np.max(a_perp @ u))


def solve_dual(
    a_perp: np.ndarray, tol: float = DEFAULT_GAP_TOL, max_iters: int = MAX_ITERS
) -> MarginSolution:
    """Solve the dual margin problem to duality gap <= tol.

    Raises NotSeparableError when the optimal value is at tolerance level
    (the input rows admit no positive margin, which signals a decomposition
    bug upstream), and ConvergenceError when the gap target is not met.
    """
    Ap = np.ascontiguousarray(a_perp, dtype=float)
    if Ap.ndim != 2 or Ap.shape[0] == 0:
        raise ValidationError("a_perp must be a nonempty (n_c, d) matrix")
    ApT = np.ascontiguousarray(Ap.T)
    lam = _top_eig(ApT @ Ap)
    if lam <= 0.0:
        raise NotSeparableError("all projected rows are zero")
    step = 0.99 / lam
    q, iterations, gap, status = _kernels.dual_pgd(Ap, ApT, step, tol, max_iters)
    if status != _kernels.STATUS_OK:
        raise ConvergenceError(
            f"duality gap {gap:.3e} > tol {tol:.3e} after {max_iters} iterations",
            best=gap,
            iterations=max_iters,
        )
    v = ApT @ q
    margin = float(np.linalg.norm(v))
    if margin <= tol:
        raise NotSeparableError(f"margin {margin:.3e} is at tolerance level; rows not separable")
    return MarginSolution(
        margin=margin,
        direction=-v / margin,
        dual_weights=q,
        gap=float(gap),
        iterations=int(iterations),
    )
