"""End-to-end orchestration: decompose, solve both subproblems, run descent."""

from dataclasses import dataclass

import numpy as np

from .dataset import MarginMatrix
from .decompose import Decomposition, ValidationReport, partition, validate
from .gd import GDTrace, run
from .margin import MarginSolution, solve_dual
from .strongconvex import ScOptimum, estimate_lambda, infimum_risk, solve_vbar


@dataclass(eq=False)
class Structure:
    """Everything the verification checks need besides the trace itself."""

    matrix: MarginMatrix
    loss: str
    dec: Decomposition
    margin_sol: MarginSolution | None
    sc_opt: ScOptimum
    inf_risk: float
    validation: ValidationReport

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def n_sep(self) -> int:
        return self.dec.n_sep

    @property
    def gamma(self) -> float:
        return self.margin_sol.margin if self.margin_sol is not None else np.nan

    @property
    def direction(self) -> np.ndarray | None:
        return self.margin_sol.direction if self.margin_sol is not None else None

    @property
    def offset(self) -> np.ndarray:
        return self.sc_opt.offset

    @property
    def curvature(self) -> float:
        return self.sc_opt.curvature

    def sep_block(self) -> np.ndarray:
        return self.matrix.rows[self.dec.sep_rows]


def analyze(
    matrix: MarginMatrix,
    loss: str,
    margin_tol: float = 1e-8,
    scvx_tol: float = 1e-10,
) -> Structure:
    """Partition the rows, solve the max-margin dual over the complement, and
    minimize the restricted risk over the span of the remainder."""
    dec = partition(matrix)
    report = validate(dec, matrix)
    margin_sol = solve_dual(dec.a_perp, tol=margin_tol) if dec.n_sep > 0 else None
    sc_opt = solve_vbar(
        matrix.rows[dec.sc_rows], dec.basis_s, loss, n_total=matrix.n, tol=scvx_tol
    )
    sc_opt.curvature = estimate_lambda(
        matrix.rows[dec.sc_rows], dec.basis_s, loss, sc_opt, n_total=matrix.n
    )
    return Structure(
        matrix=matrix,
        loss=loss,
        dec=dec,
        margin_sol=margin_sol,
        sc_opt=sc_opt,
        inf_risk=infimum_risk(dec, sc_opt),
        validation=report,
    )


def run_pipeline(
    matrix: MarginMatrix,
    loss: str,
    schedule: str,
    T: int,
    checkpoints_per_decade: int = 20,
    margin_tol: float = 1e-8,
    scvx_tol: float = 1e-10,
) -> tuple[Structure, GDTrace]:
    structure = analyze(matrix, loss, margin_tol=margin_tol, scvx_tol=scvx_tol)
    trace = run(
        matrix,
        loss,
        schedule,
        T,
        checkpoints_per_decade=checkpoints_per_decade,
        sep_rows=structure.dec.sep_rows,
        basis_s=structure.dec.basis_s,
    )
    return structure, trace
