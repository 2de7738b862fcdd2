"""Gradient-descent engine for logistic/exponential empirical risk.

Runs w_{j+1} = w_j - eta_j * grad(w_j) from w_0 = 0, recording log-spaced
checkpoints plus running sums needed by the verification checks, and keeps
the full per-step scalar series (risk, gradient-to-risk ratio, effective
step) so per-step inequalities can be audited at full resolution.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import MarginMatrix
from .errors import ConvergenceError, NumericalError, ValidationError
from .linalg import Basis

LOSS_CODES = {"logistic": _kernels.LOGISTIC, "exponential": _kernels.EXPONENTIAL}
SCHED_CODES = {"constant_one": _kernels.CONSTANT_ONE, "inv_sqrt": _kernels.INV_SQRT}

DEFAULT_PER_DECADE = 20
BALL_TOL = 1e-10
BALL_MAX_ITERS = 200_000


def _rows(A) -> np.ndarray:
    rows = A.rows if isinstance(A, MarginMatrix) else np.asarray(A, dtype=float)
    return np.ascontiguousarray(rows)


def _loss_code(loss: str) -> int:
    if loss not in LOSS_CODES:
        raise ValidationError(f"unknown loss {loss!r}; choose from {tuple(LOSS_CODES)}")
    return LOSS_CODES[loss]


def risk(A, loss: str, w: np.ndarray) -> float:
    """Empirical risk (1/n) sum_i loss((A w)_i)."""
    rows = _rows(A)
    w = np.asarray(w, dtype=float)
    vals = _kernels.loss_values(rows @ w, _loss_code(loss))
    return float(np.sum(vals) / rows.shape[0])


def grad(A, loss: str, w: np.ndarray) -> np.ndarray:
    """Risk gradient (1/n) A^T loss'(A w)."""
    rows = _rows(A)
    w = np.asarray(w, dtype=float)
    derivs = np.asarray(_kernels.loss_derivs(rows @ w, _loss_code(loss)))
    return rows.T @ derivs / rows.shape[0]


def step_sizes(schedule: str, js) -> np.ndarray:
    """eta_j for the given schedule at step indices js."""
    js = np.asarray(js, dtype=float)
    if schedule == "constant_one":
        return np.ones_like(js)
    if schedule == "inv_sqrt":
        return 1.0 / np.sqrt(js + 1.0)
    raise ValidationError(f"unknown schedule {schedule!r}; choose from {tuple(SCHED_CODES)}")


def checkpoint_times(T: int, per_decade: int = DEFAULT_PER_DECADE) -> np.ndarray:
    """Log-spaced integer checkpoint times in [1, T], always including T."""
    if T < 1:
        raise ValidationError("T must be >= 1")
    grid = 10.0 ** (np.arange(0, np.log10(T) * per_decade + 1) / per_decade)
    ts = np.unique(np.rint(grid).astype(np.int64))
    ts = ts[(ts >= 1) & (ts <= T)]
    if ts.size == 0 or ts[-1] != T:
        ts = np.append(ts, T)
    return ts.astype(np.int64)


@dataclass(eq=False)
class GDTrace:
    """Checkpointed gradient-descent trajectory.

    Checkpoint arrays are indexed by the K recorded times; all running sums
    (sum_*, perceptron_sum, sup_proj_s) cover steps j < t.  The per-step
    series risk_steps/rel_steps/eff_steps run over j = 0..T.
    """

    loss: str
    schedule: str
    T: int
    n: int
    d: int
    status: str
    sep_rows: np.ndarray
    ts: np.ndarray
    w: np.ndarray
    risk: np.ndarray
    grad_norm: np.ndarray
    rel_grad: np.ndarray
    eff_step: np.ndarray
    norm_w: np.ndarray
    proj_s: np.ndarray
    proj_perp_norm: np.ndarray
    dir: np.ndarray
    perceptron_sum: np.ndarray
    sum_eta: np.ndarray
    sum_eff_grad: np.ndarray
    sum_tele: np.ndarray
    sum_eta_sep: np.ndarray
    sum_cross: np.ndarray
    sup_proj_s: np.ndarray
    risk_steps: np.ndarray
    rel_steps: np.ndarray
    eff_steps: np.ndarray
    smooth_worst_slack: float
    smooth_worst_step: int
    _ball_cache: dict = field(default_factory=dict, repr=False)

    CSV_SCALARS = (
        "risk",
        "grad_norm",
        "rel_grad",
        "eff_step",
        "norm_w",
        "proj_perp_norm",
        "perceptron_sum",
        "sum_eta",
        "sum_eff_grad",
        "sum_tele",
        "sum_eta_sep",
        "sum_cross",
        "sup_proj_s",
    )

    @property
    def k(self) -> int:
        return self.ts.shape[0]

    def csv_header(self) -> list:
        cols = ["t"] + list(self.CSV_SCALARS)
        for name in ("w", "proj_s", "dir"):
            cols += [f"{name}_{i + 1}" for i in range(self.d)]
        return cols

    def to_csv(self, path) -> None:
        """One row per checkpoint, fixed column order, 17 significant digits."""
        with open(path, "w") as fh:
            fh.write(",".join(self.csv_header()) + "\n")
            for k in range(self.k):
                vals = [str(int(self.ts[k]))]
                vals += [f"{getattr(self, name)[k]:.17g}" for name in self.CSV_SCALARS]
                for name in ("w", "proj_s", "dir"):
                    vals += [f"{v:.17g}" for v in getattr(self, name)[k]]
                fh.write(",".join(vals) + "\n")

    def meta(self) -> dict:
        return {
            "loss": self.loss,
            "schedule": self.schedule,
            "T": self.T,
            "n": self.n,
            "d": self.d,
            "status": self.status,
            "sep_rows": self.sep_rows.tolist(),
            "smooth_worst_slack": self.smooth_worst_slack,
            "smooth_worst_step": self.smooth_worst_step,
        }

    def to_json(self, path) -> None:
        records = []
        for k in range(self.k):
            rec = {"t": int(self.ts[k])}
            rec.update({name: float(getattr(self, name)[k]) for name in self.CSV_SCALARS})
            for name in ("w", "proj_s", "dir"):
                rec[name] = getattr(self, name)[k].tolist()
            records.append(rec)
        with open(path, "w") as fh:
            json.dump({"meta": self.meta(), "checkpoints": records}, fh, indent=1)

    def save_steps(self, path) -> None:
        np.savez_compressed(
            path,
            risk_steps=self.risk_steps,
            rel_steps=self.rel_steps,
            eff_steps=self.eff_steps,
        )

    @classmethod
    def from_files(cls, json_path, steps_path) -> "GDTrace":
        with open(json_path) as fh:
            data = json.load(fh)
        meta = data["meta"]
        recs = data["checkpoints"]
        steps = np.load(steps_path)
        d = meta["d"]
        arrays = {name: np.array([r[name] for r in recs]) for name in cls.CSV_SCALARS}
        return cls(
            loss=meta["loss"],
            schedule=meta["schedule"],
            T=meta["T"],
            n=meta["n"],
            d=d,
            status=meta["status"],
            sep_rows=np.asarray(meta["sep_rows"], dtype=np.int64),
            ts=np.array([r["t"] for r in recs], dtype=np.int64),
            w=np.array([r["w"] for r in recs], dtype=float).reshape(len(recs), d),
            proj_s=np.array([r["proj_s"] for r in recs], dtype=float).reshape(len(recs), d),
            dir=np.array([r["dir"] for r in recs], dtype=float).reshape(len(recs), d),
            risk_steps=steps["risk_steps"],
            rel_steps=steps["rel_steps"],
            eff_steps=steps["eff_steps"],
            smooth_worst_slack=meta["smooth_worst_slack"],
            smooth_worst_step=meta["smooth_worst_step"],
            **arrays,
        )


def run(
    A,
    loss: str,
    schedule: str,
    T: int,
    checkpoints_per_decade: int = DEFAULT_PER_DECADE,
    sep_rows=None,
    basis_s: Basis | None = None,
) -> GDTrace:
    """Run T gradient-descent steps and return the checkpointed trace.

    sep_rows selects the rows whose gradient mass feeds the perceptron-style
    accumulators (defaults to all rows, which is exact for fully separable
    data); basis_s enables the projection-onto-S running sums.  Deterministic
    for fixed inputs.  On floating-point overflow the trace is truncated at
    the last finite step and flagged with status "overflow".
    """
    rows = _rows(A)
    n, d = rows.shape
    if T < 1:
        raise ValidationError("T must be >= 1")
    loss_code = _loss_code(loss)
    if schedule not in SCHED_CODES:
        raise ValidationError(f"unknown schedule {schedule!r}; choose from {tuple(SCHED_CODES)}")
    sched_code = SCHED_CODES[schedule]
    if sep_rows is None:
        sep_idx = np.arange(n, dtype=np.int64)
    else:
        sep_idx = np.asarray(sep_rows, dtype=np.int64)
    bs_cols = basis_s.columns if basis_s is not None else np.zeros((d, 0))
    ts = checkpoint_times(T, checkpoints_per_decade)

    out = _kernels.gd_loop(
        rows,
        np.ascontiguousarray(rows.T),
        np.ascontiguousarray(rows[sep_idx].T),
        sep_idx,
        np.ascontiguousarray(bs_cols),
        np.ascontiguousarray(bs_cols.T),
        loss_code,
        sched_code,
        int(T),
        ts,
    )
    (
        status,
        steps_done,
        risk_steps,
        rel_steps,
        eff_steps,
        cp_w,
        cp_perceptron,
        cp_sum_eta,
        cp_sum_eff_grad,
        cp_sum_tele,
        cp_sum_eta_sep,
        cp_sum_cross,
        cp_sup_proj_s,
        worst,
        worst_at,
    ) = out

    if status == _kernels.STATUS_STEP_ASSERT:
        raise NumericalError(
            "effective step exceeded 1; input rows violate the unit-norm contract"
        )
    keep = ts <= steps_done
    ts = ts[keep]
    if ts.size == 0:
        raise NumericalError("risk overflowed before the first checkpoint")
    w = cp_w[keep]
    risk_cp = risk_steps[ts]
    rel_cp = rel_steps[ts]
    eff_cp = eff_steps[ts]
    if basis_s is not None and basis_s.rank > 0:
        proj_s = (w @ bs_cols) @ bs_cols.T
    else:
        proj_s = np.zeros_like(w)
    norm_w = np.linalg.norm(w, axis=1)
    safe = np.where(norm_w == 0.0, 1.0, norm_w)
    direction = np.where(norm_w[:, None] > 0.0, w / safe[:, None], 0.0)
    proj_perp_norm = np.linalg.norm(w - proj_s, axis=1)

    return GDTrace(
        loss=loss,
        schedule=schedule,
        T=int(T),
        n=n,
        d=d,
        status="ok" if status == _kernels.STATUS_OK else "overflow",
        sep_rows=sep_idx,
        ts=ts,
        w=w,
        risk=risk_cp,
        grad_norm=rel_cp * risk_cp,
        rel_grad=rel_cp,
        eff_step=eff_cp,
        norm_w=norm_w,
        proj_s=proj_s,
        proj_perp_norm=proj_perp_norm,
        dir=direction,
        perceptron_sum=cp_perceptron[keep],
        sum_eta=cp_sum_eta[keep],
        sum_eff_grad=cp_sum_eff_grad[keep],
        sum_tele=cp_sum_tele[keep],
        sum_eta_sep=cp_sum_eta_sep[keep],
        sum_cross=cp_sum_cross[keep],
        sup_proj_s=cp_sup_proj_s[keep],
        risk_steps=risk_steps[: steps_done + 1],
        rel_steps=rel_steps[: steps_done + 1],
        eff_steps=eff_steps[: steps_done + 1],
        smooth_worst_slack=float(worst),
        smooth_worst_step=int(worst_at),
    )


def constrained_opt(
    A,
    loss: str,
    radius: float,
    tol: float = BALL_TOL,
    w0: np.ndarray | None = None,
    max_iters: int = BALL_MAX_ITERS,
) -> np.ndarray:
    """Minimizer of the risk over the Euclidean ball of the given radius."""
    rows = _rows(A)
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    d = rows.shape[1]
    if radius == 0.0:
        return np.zeros(d)
    start = np.zeros(d) if w0 is None else np.asarray(w0, dtype=float)
    smax = float(np.linalg.eigvalsh(rows.T @ rows)[-1])
    w, iters, status = _kernels.ball_opt(
        rows,
        np.ascontiguousarray(rows.T),
        _loss_code(loss),
        float(radius),
        np.ascontiguousarray(start),
        float(tol),
        int(max_iters),
        smax,
    )
    if status == _kernels.STATUS_MAX_ITERS:
        raise ConvergenceError(
            f"ball-constrained solve did not reach tol {tol:.1e} in {max_iters} iterations",
            iterations=int(iters),
        )
    return np.asarray(w)


def ball_series(A, loss: str, trace: GDTrace, tol: float = BALL_TOL) -> np.ndarray:
    """Ball-constrained minimizers at every checkpoint radius |w_t|, warm-started
    along the checkpoint sequence; cached on the trace."""
    key = (id(A), loss, tol)
    if key in trace._ball_cache:
        return trace._ball_cache[key]
    out = np.zeros_like(trace.w)
    prev = None
    for k in range(trace.k):
        out[k] = constrained_opt(A, loss, float(trace.norm_w[k]), tol=tol, w0=prev)
        prev = out[k]
    trace._ball_cache[key] = out
    return out
