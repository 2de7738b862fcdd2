"""Runtime verification of the provable trajectory bounds.

Each check evaluates one inequality along a recorded trace, against the
structural objects (margin, direction, bounded optimum, infimal risk,
curvature estimate), and reports the worst slack (bound minus quantity)
with the checkpoint or step where it occurs.  Checks are pure functions of
their inputs; re-running them on the same trace reproduces the report.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError
from .gd import GDTrace, ball_series
from .pipeline import Structure

NUMERIC_ATOL = 1e-9
NUMERIC_RTOL = 1e-12

# registry order is the report order
CHECK_NAMES = (
    "risk_bound",
    "smoothness",
    "log_risk_telescope",
    "norm_bounds",
    "perceptron_norm",
    "param_s",
    "direction",
    "fenchel_young",
    "log_approx",
    "perp_descent",
    "gen_iter",
)

LOG_APPROX_EPS_GRID = (1.0, 0.5, 0.1, 0.01)
LOG_APPROX_SAMPLES = 10_000
NORM_BOUNDS_MIN_T = 10


@dataclass(eq=False)
class CheckResult:
    name: str
    holds: bool
    worst_slack: float
    location: int
    applicable: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": bool(self.holds),
            "worst_slack": float(self.worst_slack),
            "location": int(self.location),
            "applicable": bool(self.applicable),
            "note": self.note,
        }


@dataclass(eq=False)
class TrendFit:
    name: str
    exponent: float
    coefficient: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "exponent": float(self.exponent),
            "coefficient": float(self.coefficient),
            "residual": float(self.residual),
        }


@dataclass(eq=False)
class VerificationReport:
    meta: dict
    checks: list
    trends: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks if c.applicable)

    def failed_names(self) -> list:
        return [c.name for c in self.checks if c.applicable and not c.holds]

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "checks": [c.to_dict() for c in self.checks],
            "trends": [t.to_dict() for t in self.trends],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _tolerances(quantity: np.ndarray) -> np.ndarray:
    return NUMERIC_ATOL + NUMERIC_RTOL * np.abs(quantity)


def _from_slacks(name, slack, quantity, locations, note="") -> CheckResult:
    slack = np.asarray(slack, dtype=float)
    if slack.size == 0:
        return CheckResult(name, True, np.inf, -1, note=note or "no evaluation points")
    tol = _tolerances(np.asarray(quantity, dtype=float))
    holds = bool(np.all(slack >= -tol))
    k = int(np.argmin(slack))
    return CheckResult(name, holds, float(slack[k]), int(locations[k]), note=note)


def _na(name, note) -> CheckResult:
    return CheckResult(name, True, np.inf, -1, applicable=False, note=note)


def thm_risk_bound(structure: Structure, ts, sum_eta) -> np.ndarray:
    """Bound on the excess risk at step t: exp(|offset|)/t plus
    (|offset|^2 + ln(t)^2/margin^2) / (2 sum of steps); the margin term is
    dropped when there is no separable block."""
    ts = np.asarray(ts, dtype=float)
    vnorm = float(np.linalg.norm(structure.offset))
    num = vnorm**2
    if structure.n_sep > 0:
        num = num + np.log(ts) ** 2 / structure.gamma**2
    return np.exp(vnorm) / ts + num / (2.0 * np.asarray(sum_eta, dtype=float))


def check_risk_bound(trace: GDTrace, structure: Structure) -> CheckResult:
    excess = trace.risk - structure.inf_risk
    bound = thm_risk_bound(structure, trace.ts, trace.sum_eta)
    return _from_slacks("risk_bound", bound - excess, excess, trace.ts)


def check_smoothness(trace: GDTrace) -> CheckResult:
    r = trace.risk_steps
    eff = trace.eff_steps[:-1]
    rel = trace.rel_steps[:-1]
    pred = r[:-1] * (1.0 - eff * (1.0 - eff / 2.0) * rel * rel)
    slack = pred - r[1:]
    return _from_slacks("smoothness", slack, r[1:], np.arange(1, r.size))


def check_log_risk_telescope(trace: GDTrace) -> CheckResult:
    lhs = np.log(trace.risk)
    bound = np.log(trace.risk_steps[0]) - trace.sum_tele
    return _from_slacks("log_risk_telescope", bound - lhs, lhs, trace.ts)


def check_norm_bounds(trace: GDTrace, structure: Structure, min_t: int = NORM_BOUNDS_MIN_T) -> CheckResult:
    if structure.n_sep == 0:
        return _na("norm_bounds", "no separable block")
    sel = trace.ts >= min_t
    if not np.any(sel):
        return _na("norm_bounds", f"no checkpoints at t >= {min_t}")
    ts = trace.ts[sel].astype(float)
    nw = trace.norm_w[sel]
    rr = trace.sup_proj_s[sel]
    g2 = structure.gamma**2
    vnorm = float(np.linalg.norm(structure.offset))
    upper = np.maximum(np.maximum(4.0 * np.log(ts) / g2, 4.0 * rr / g2), 2.0)
    with np.errstate(divide="ignore"):
        second = np.log(trace.sum_eta[sel]) - np.log(vnorm**2 + np.log(ts) ** 2 / g2)
    lower = (
        np.minimum(np.log(ts) - np.log(2.0) - vnorm, second)
        - rr
        + np.log(np.log(2.0))
        - np.log(structure.n / structure.n_sep)
    )
    slack = np.minimum(upper - nw, nw - lower)
    return _from_slacks("norm_bounds", slack, nw, trace.ts[sel])


def check_perceptron_norm(trace: GDTrace) -> CheckResult:
    slack = trace.perceptron_sum - trace.proj_perp_norm
    return _from_slacks("perceptron_norm", slack, trace.proj_perp_norm, trace.ts)


def _proj_s(structure: Structure, vecs: np.ndarray) -> np.ndarray:
    cols = structure.dec.basis_s.columns
    if cols.shape[1] == 0:
        return np.zeros_like(vecs)
    return (vecs @ cols) @ cols.T


def check_param_s(trace: GDTrace, structure: Structure, wbar: np.ndarray) -> CheckResult:
    if structure.dec.rank_s == 0:
        return _na("param_s", "span of the remainder is trivial")
    lam = structure.curvature
    bound = (2.0 / lam) * np.minimum(1.0, thm_risk_bound(structure, trace.ts, trace.sum_eta))
    err_w = np.linalg.norm(trace.proj_s - structure.offset, axis=1) ** 2
    err_b = np.linalg.norm(_proj_s(structure, wbar) - structure.offset, axis=1) ** 2
    slack = np.minimum(bound - err_w, bound - err_b)
    quantity = np.maximum(err_w, err_b)
    return _from_slacks(
        "param_s", slack, quantity, trace.ts, note="estimate-conditioned (sampled curvature)"
    )


def direction_threshold(trace: GDTrace, structure: Structure) -> tuple[np.ndarray, str]:
    """Warm-start qualification per case: fully separable data with unit steps
    uses t/ln(t)^3 >= n/margin^4; the decaying schedule uses
    sqrt(t)/ln(t)^3 >= n(1+R)/margin^2 with R the sup of |proj_S w_j|."""
    ts = trace.ts.astype(float)
    g = structure.gamma
    fully_separable = structure.dec.sc_rows.size == 0
    with np.errstate(divide="ignore"):
        lt3 = np.log(ts) ** 3
        if trace.schedule == "constant_one" and fully_separable:
            ok = (ts >= 5) & (ts / lt3 >= structure.n / g**4)
            return ok, "separable"
        if trace.schedule == "inv_sqrt":
            big_r = float(trace.sup_proj_s[-1])
            ok = (ts >= 5) & (np.sqrt(ts) / lt3 >= structure.n * (1.0 + big_r) / g**2)
            return ok, "general"
    return np.zeros(trace.k, dtype=bool), "none"


def _dir_err_sq(vecs: np.ndarray, direction: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = vecs / safe[:, None]
    return np.linalg.norm(unit - direction, axis=1) ** 2


def check_direction(
    trace: GDTrace, structure: Structure, wbar: np.ndarray
) -> tuple[CheckResult, TrendFit | None]:
    if structure.n_sep == 0:
        return _na("direction", "no separable block"), None
    qual, case = direction_threshold(trace, structure)
    if case == "none":
        return _na("direction", "no convergence case covers this schedule/data pair"), None
    qual &= trace.norm_w > 0
    if not np.any(qual):
        return (
            _na("direction", f"warm start never reached ({case} case) within T"),
            None,
        )
    ts = trace.ts[qual]
    err_w = _dir_err_sq(trace.w[qual], structure.direction)
    err_b = _dir_err_sq(wbar[qual], structure.direction)
    # monotone decrease past the warm start, both for the iterates and the
    # ball-constrained optima
    slacks = []
    locs = []
    quant = []
    for err in (err_w, err_b):
        if err.size >= 2:
            slacks.append(err[:-1] - err[1:])
            locs.append(ts[1:])
            quant.append(err[1:])
    if slacks:
        slack = np.concatenate(slacks)
        loc = np.concatenate(locs)
        quantity = np.concatenate(quant)
    else:
        slack, loc, quantity = np.array([0.0]), ts[:1], err_w[:1]
    result = _from_slacks("direction", slack, quantity, loc, note=f"{case} case")
    shape = (np.log(structure.n) + np.log(np.log(ts))) / (structure.gamma**2 * np.log(ts))
    trend = fit_trend("direction_rate", ts, err_w, shape)
    return result, trend


def check_fenchel_young(
    trace: GDTrace, structure: Structure, wbar: np.ndarray, eps: float = 1.0
) -> CheckResult:
    if structure.n_sep == 0:
        return _na("fenchel_young", "no separable block")
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    excess = trace.risk - structure.inf_risk
    qual = excess <= eps / structure.n
    if not np.any(qual):
        note = f"no checkpoint with excess risk <= {eps / structure.n:.3e}"
        t_star = _estimate_first_qualifying(trace, excess, eps / structure.n)
        if t_star is not None:
            note += f"; extrapolated first qualifying t ~ {t_star:.2e}"
        return _na("fenchel_young", note)
    q = structure.margin_sol.dual_weights
    ent = float(np.sum(q[q > 0] * np.log(q[q > 0])))
    g_star = np.log(structure.n) + ent
    if g_star > np.log(structure.n) + NUMERIC_ATOL:
        return CheckResult("fenchel_young", False, float(np.log(structure.n) - g_star), -1)
    gamma = structure.gamma
    slacks = []
    locs = []
    quants = []
    for vecs in (trace.w[qual], wbar[qual]):
        norms = np.linalg.norm(vecs, axis=1)
        keep = norms > 0
        if not np.any(keep):
            continue
        lhs = (vecs[keep] @ structure.direction) / norms[keep]
        ex = np.maximum(excess[qual][keep], 1e-300)
        cross = np.linalg.norm(_proj_s(structure, vecs[keep]), axis=1)
        rhs = (-np.log(ex) - np.log(2.0) - g_star - cross) / (gamma * norms[keep])
        slacks.append(lhs - rhs)
        locs.append(trace.ts[qual][keep])
        quants.append(np.abs(lhs))
    return _from_slacks(
        "fenchel_young",
        np.concatenate(slacks),
        np.concatenate(quants),
        np.concatenate(locs),
    )


def _estimate_first_qualifying(trace: GDTrace, excess: np.ndarray, target: float):
    good = excess > 0
    if good.sum() < 3:
        return None
    t = np.log(trace.ts[good].astype(float))
    v = np.log(excess[good])
    slope, intercept = np.polyfit(t, v, 1)
    if slope >= -1e-9:
        return None
    return float(np.exp((np.log(target) - intercept) / slope))


def check_log_approx(
    samples: int = LOG_APPROX_SAMPLES, eps_grid=LOG_APPROX_EPS_GRID, seed: int = 1
) -> CheckResult:
    """Loss-ratio facts on the low-loss region: once loss(z) <= eps, the ratio
    loss'(z)/loss(z) is at least 1-eps, and e^z is at most twice the loss."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_eps = -1.0
    for code, name in ((_kernels.LOGISTIC, "logistic"), (_kernels.EXPONENTIAL, "exponential")):
        for eps in eps_grid:
            if code == _kernels.EXPONENTIAL:
                z_max = np.log(eps)
            else:
                z_max = np.log(np.expm1(eps))
            z = rng.uniform(z_max - 30.0, z_max, size=samples)
            lv = np.asarray(_kernels.loss_values(z, code))
            lp = np.asarray(_kernels.loss_derivs(z, code))
            assert lv.max() <= eps * (1 + 1e-12)
            slack = min(
                float(np.min(lp / lv - (1.0 - eps))),
                float(np.min(2.0 - np.exp(z) / lv)),
            )
            if slack < worst:
                worst = slack
                worst_eps = eps
    holds = worst >= -NUMERIC_ATOL
    return CheckResult(
        "log_approx", holds, worst, -1, note=f"worst over eps grid at eps={worst_eps}"
    )


def check_perp_descent(trace: GDTrace, structure: Structure) -> CheckResult:
    if structure.n_sep == 0:
        return _na("perp_descent", "no separable block")
    gamma = structure.gamma
    direction = structure.direction
    a_c = structure.sep_block()
    margins = a_c @ direction
    code = _kernels.LOGISTIC if trace.loss == "logistic" else _kernels.EXPONENTIAL
    ts = trace.ts.astype(float)
    radii = np.log(ts) / gamma
    lhs = np.empty(trace.k)
    rc_u = np.empty(trace.k)
    perp = trace.w - trace.proj_s
    for k in range(trace.k):
        u = direction * radii[k]
        lhs[k] = np.linalg.norm(perp[k] - u) ** 2
        rc_u[k] = float(np.sum(_kernels.loss_values(margins * radii[k], code))) / structure.n
    rhs = (
        radii**2
        + 2.0
        + 2.0 * rc_u * trace.sum_eta
        - 2.0 * trace.sum_eta_sep
        + 2.0 * trace.sum_cross
    )
    return _from_slacks("perp_descent", rhs - lhs, lhs, trace.ts)


def check_gen_iter(
    trace: GDTrace, structure: Structure, eps: float = 0.3, contraction_r: float = 0.9
) -> CheckResult:
    if structure.n_sep == 0:
        return _na("gen_iter", "no separable block")
    if structure.dec.rank_s == 0:
        return _na("gen_iter", "span of the remainder is trivial")
    if not (0 < eps < 1 and 0 < contraction_r < 1):
        raise ValidationError("eps and contraction_r must lie in (0, 1)")
    lam = structure.curvature
    threshold = min(eps / structure.n, lam * (1.0 - contraction_r) / 2.0)
    excess = trace.risk_steps - structure.inf_risk
    qualifying = np.nonzero(excess[:-1] <= threshold)[0]
    if qualifying.size == 0:
        reached = float(excess[:-1].min()) if excess.size > 1 else np.inf
        return _na(
            "gen_iter",
            f"never qualified: min excess {reached:.3e} > threshold {threshold:.3e}",
        )
    j0 = int(qualifying[0])
    ex = excess[j0:]
    eff = trace.eff_steps[j0:-1]
    rel = trace.rel_steps[j0:-1]
    factor = np.exp(
        -contraction_r * (1.0 - eps) * structure.gamma * rel * eff * (1.0 - eff / 2.0)
    )
    slack = ex[:-1] * factor - ex[1:]
    return _from_slacks(
        "gen_iter",
        slack,
        ex[1:],
        np.arange(j0 + 1, j0 + 1 + slack.size),
        note=f"qualified from step {j0} (estimate-conditioned)",
    )


def fit_trend(name: str, ts, values, shape) -> TrendFit | None:
    """Least-squares fit of values ~ coefficient * shape in log space, with the
    RMS log residual and the raw log-log slope as diagnostics."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    shape = np.asarray(shape, dtype=float)
    good = (values > 0) & (shape > 0) & (ts > 1)
    if good.sum() < 3:
        return None
    lv = np.log(values[good])
    ls = np.log(shape[good])
    c = float(np.exp(np.mean(lv - ls)))
    residual = float(np.sqrt(np.mean((lv - ls - np.log(c)) ** 2)))
    exponent = float(np.polyfit(np.log(ts[good]), lv, 1)[0])
    return TrendFit(name, exponent, c, residual)


def _window(trace: GDTrace, decades: float) -> np.ndarray:
    return trace.ts >= trace.T / 10.0**decades


def standard_trends(trace: GDTrace, structure: Structure) -> list:
    trends = []
    sel = _window(trace, 1.0)
    ts = trace.ts[sel].astype(float)
    excess = trace.risk[sel] - structure.inf_risk
    if trace.schedule == "inv_sqrt":
        shape = np.log(ts) ** 2 / np.sqrt(ts)
    else:
        shape = np.log(ts) ** 2 / ts
    t = fit_trend("risk_rate", ts, excess, shape)
    if t:
        trends.append(t)
    if structure.n_sep > 0:
        sel2 = _window(trace, 2.0)
        ts2 = trace.ts[sel2].astype(float)
        t = fit_trend("perp_norm_log_t", ts2, trace.proj_perp_norm[sel2], np.log(ts2))
        if t:
            trends.append(t)
    if structure.dec.rank_s > 0:
        sel2 = _window(trace, 2.0)
        ts2 = trace.ts[sel2].astype(float)
        t = fit_trend(
            "proj_s_const", ts2, np.linalg.norm(trace.proj_s[sel2], axis=1), np.ones_like(ts2)
        )
        if t:
            trends.append(t)
    return trends


def run_checks(
    trace: GDTrace,
    structure: Structure,
    eps_fy: float = 1.0,
    eps_gen: float = 0.3,
    r_gen: float = 0.9,
    ball_tol: float = 1e-10,
) -> tuple[list, list]:
    """All registered checks against one trace, plus trend fits."""
    wbar = ball_series(structure.matrix, trace.loss, trace, tol=ball_tol)
    results = [
        check_risk_bound(trace, structure),
        check_smoothness(trace),
        check_log_risk_telescope(trace),
        check_norm_bounds(trace, structure),
        check_perceptron_norm(trace),
        check_param_s(trace, structure, wbar),
    ]
    dir_result, dir_trend = check_direction(trace, structure, wbar)
    results.append(dir_result)
    results.append(check_fenchel_young(trace, structure, wbar, eps=eps_fy))
    results.append(check_log_approx())
    results.append(check_perp_descent(trace, structure))
    results.append(check_gen_iter(trace, structure, eps=eps_gen, contraction_r=r_gen))
    trends = standard_trends(trace, structure)
    if dir_trend:
        trends.append(dir_trend)
    return results, trends


def build_report(results: list, trends: list, meta: dict) -> VerificationReport:
    """Assemble a deterministic report; every registered check appears once."""
    if not results:
        raise ValidationError("no checks were run")
    by_name = {}
    for res in results:
        if res.name in by_name:
            raise ValidationError(f"duplicate check {res.name}")
        by_name[res.name] = res
    unknown = set(by_name) - set(CHECK_NAMES)
    if unknown:
        raise ValidationError(f"unregistered checks: {sorted(unknown)}")
    ordered = [by_name[name] for name in CHECK_NAMES if name in by_name]
    return VerificationReport(meta=meta, checks=ordered, trends=list(trends))


def report_meta(trace: GDTrace, structure: Structure, digest: str, tolerances: dict) -> dict:
    return {
        "digest": digest,
        "loss": trace.loss,
        "schedule": trace.schedule,
        "T": trace.T,
        "n": structure.n,
        "d": structure.matrix.d,
        "n_sep": structure.n_sep,
        "rank_s": structure.dec.rank_s,
        "margin": None if structure.margin_sol is None else structure.gamma,
        "offset_norm": float(np.linalg.norm(structure.offset)),
        "inf_risk": structure.inf_risk,
        "curvature_est": None if not np.isfinite(structure.curvature) else structure.curvature,
        "kernel_path": "numba" if _kernels.USE_NUMBA else "numpy",
        "tolerances": tolerances,
    }
