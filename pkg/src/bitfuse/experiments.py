"""Replication engine and statistical test battery.

One experiment = a model, a true parameter, a regime (fixed horizon,
sequential, or discrete sampling), threshold rules, and a replication
count.  Replications use independent counter-style RNG streams derived
from (master_seed, point_index, replication_index), so results do not
depend on execution order and replications can run in parallel
processes.  Failed replications are flagged and listed, never silently
resampled.

Threshold rules are explicit power laws u -> a * u^b applied per sensor
at each regime point (the asymptotic statements only constrain rates,
so exponents are configuration, recorded in the report).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import (
    BitfuseError,
    HorizonExhausted,
    InvalidSpec,
    SampleTooSmall,
)
from . import fusion
from .fusion import (
    CENTRALIZED_FIXED,
    CENTRALIZED_SEQUENTIAL,
    DECENTRALIZED_FIXED,
    DECENTRALIZED_SEQUENTIAL,
    TIMING_ONLY,
    ESTIMATOR_NAMES,
    FusionState,
    centralized_estimates,
    reconstruct,
)
from .models import Model, ModelSpec, PathStats, TimeGrid, build_model, path_statistics, simulate_paths
from .triggers import CONTINUOUS, DISCRETE, MessageLog, TriggerConfig, run_a_trigger, run_b_trigger

__all__ = [
    "PowerLawRule",
    "FixedHorizonRegime",
    "SequentialRegime",
    "DiscreteSamplingRegime",
    "ExperimentConfig",
    "ReplicationRow",
    "PointAggregate",
    "ExperimentReport",
    "run_experiment",
    "compute_aggregates",
    "ks_test",
    "BoundReport",
    "audit_bounds",
    "OvershootRow",
    "overshoot_study",
]

_MAX_HORIZON_EXTENSIONS = 64


@dataclass(frozen=True)
class PowerLawRule:
    """Per-sensor threshold schedule u -> a * u**b."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidSpec("rule prefactor must be positive")

    def __call__(self, u: float) -> float:
        return self.a * float(u) ** self.b

    def to_dict(self):
        return {"a": self.a, "b": self.b}

    @staticmethod
    def from_dict(d):
        return PowerLawRule(a=float(d["a"]), b=float(d["b"]))


@dataclass(frozen=True)
class FixedHorizonRegime:
    t_list: tuple
    delta_rule: PowerLawRule
    kind: str = field(default="fixed_horizon", init=False)

    def points(self):
        return tuple(float(t) for t in self.t_list)


@dataclass(frozen=True)
class SequentialRegime:
    gamma_list: tuple
    c_rule: PowerLawRule
    delta_rule: PowerLawRule
    initial_horizon: float = 1.0
    kind: str = field(default="sequential", init=False)

    def points(self):
        return tuple(float(g) for g in self.gamma_list)


@dataclass(frozen=True)
class DiscreteSamplingRegime:
    t: float
    delta_rule: PowerLawRule
    h_list: tuple
    kind: str = field(default="discrete_sampling", init=False)

    def points(self):
        return tuple(float(h) for h in self.h_list)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    lambda_true: float
    regime: object
    n_replications: int
    master_seed: int
    estimators: tuple
    grid_steps_per_unit: float = 32.0

    def __post_init__(self):
        if self.n_replications < 2:
            raise InvalidSpec("need at least 2 replications")
        if not self.grid_steps_per_unit > 0:
            raise InvalidSpec("grid refinement must be positive")
        bad = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if bad:
            raise InvalidSpec(f"unknown estimators: {bad}")
        if not self.estimators:
            raise InvalidSpec("at least one estimator is required")


@dataclass(frozen=True)
class ReplicationRow:
    point: float
    rep: int
    estimator: str
    ok: bool
    value: float
    error: float
    std_error: float
    stop_time: float | None
    info_used: float
    a_at_stop: float
    messages_used: int
    b_messages: int
    a_messages: int
    eta_sum: float
    horizon: float
    fail_reason: str = ""


@dataclass(frozen=True)
class PointAggregate:
    point: float
    estimator: str
    n_ok: int
    n_failed: int
    mean: float
    variance: float
    bias: float
    std_variance: float
    ks_D: float
    ks_p: float
    mean_messages_per_unit_time: float
    failures: tuple


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: tuple
    aggregates: tuple
    warnings: tuple


def ks_test(sample):
    """One-sample Kolmogorov-Smirnov distance to the standard normal and
    its asymptotic p-value."""
    sample = np.asarray(sample, dtype=float)
    n = sample.size
    if n < 8:
        raise SampleTooSmall("KS test needs at least 8 observations")
    xs = np.sort(sample)
    cdf = special.ndtr(xs)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    D = float(max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo)))
    p = float(special.kolmogorov(math.sqrt(n) * D))
    return D, p


def _trigger_configs(model: Model, delta: float, c: float | None, mode: str, h: float | None):
    needs_a = not (model.a_deterministic or model.a_i_deterministic)
    return tuple(
        TriggerConfig(
            delta_up=delta,
            delta_down=delta,
            c=c if needs_a else None,
            mode=mode,
            h=h,
        )
        for _ in range(model.K)
    )


def _run_triggers_capped(stats: PathStats, model: Model, cfgs, max_level=None) -> MessageLog:
    b_logs, a_logs = [], []
    for i in range(model.K):
        b_logs.append(run_b_trigger(stats.B_i[i], stats.grid, cfgs[i]))
        a_logs.append(run_a_trigger(stats.A_i[i], stats.grid, cfgs[i].c, max_level=max_level))
    return MessageLog(b=tuple(b_logs), a=tuple(a_logs), cfgs=cfgs, horizon=stats.grid.t_end)


def _row(point, rep, est, result, lam, std_scale, a_at_stop, log, horizon, t_eval):
    b_n = sum(int(np.searchsorted(bm.time, t_eval, side="right")) for bm in log.b) if log else 0
    a_n = sum(int(np.searchsorted(am.time, t_eval, side="right")) for am in log.a) if log else 0
    eta = (
        sum(float(bm.overshoot[: np.searchsorted(bm.time, t_eval, side="right")].sum())
            for bm in log.b)
        if log
        else 0.0
    )
    err = result.value - lam
    return ReplicationRow(
        point=point,
        rep=rep,
        estimator=est,
        ok=True,
        value=result.value,
        error=err,
        std_error=std_scale * err,
        stop_time=result.stop_time,
        info_used=result.info_used,
        a_at_stop=a_at_stop,
        messages_used=result.messages_used,
        b_messages=b_n,
        a_messages=a_n,
        eta_sum=eta,
        horizon=horizon,
        fail_reason="",
    )


def _failed_row(point, rep, est, horizon, reason):
    return ReplicationRow(
        point=point,
        rep=rep,
        estimator=est,
        ok=False,
        value=float("nan"),
        error=float("nan"),
        std_error=float("nan"),
        stop_time=None,
        info_used=float("nan"),
        a_at_stop=float("nan"),
        messages_used=0,
        b_messages=0,
        a_messages=0,
        eta_sum=0.0,
        horizon=horizon,
        fail_reason=reason,
    )


def _grid_for(t_end: float, steps_per_unit: float) -> TimeGrid:
    n = max(1, int(round(t_end * steps_per_unit)))
    return TimeGrid(t_end=t_end, n_steps=n)


def _replicate(cfg: ExperimentConfig, point_index: int, rep: int):
    """Run one replication at one regime point; returns (rows, warnings)."""
    model = build_model(cfg.model)
    regime = cfg.regime
    point = regime.points()[point_index]
    seed = np.random.SeedSequence([int(cfg.master_seed), point_index, rep])
    lam = cfg.lambda_true
    warnings = []

    if regime.kind == "sequential":
        return _replicate_sequential(cfg, model, point, rep, seed, warnings)

    if regime.kind == "fixed_horizon":
        t_end = point
        mode, h = CONTINUOUS, None
        delta = regime.delta_rule(point)
    else:
        t_end = regime.t
        mode, h = DISCRETE, point
        delta = regime.delta_rule(regime.t)
        if abs(round(h * cfg.grid_steps_per_unit) - h * cfg.grid_steps_per_unit) > 1e-9:
            raise InvalidSpec("sampling period must be an integer number of grid steps")

    grid = _grid_for(t_end, cfg.grid_steps_per_unit)
    try:
        paths = simulate_paths(model, lam, grid, seed)
        stats = path_statistics(paths, model)
    except BitfuseError as exc:
        rows = [_failed_row(point, rep, est, t_end, f"{type(exc).__name__}: {exc}")
                for est in cfg.estimators]
        return rows, warnings

    need_fusion = any(e in (DECENTRALIZED_FIXED, TIMING_ONLY) for e in cfg.estimators)
    log = None
    state = None
    if need_fusion:
        cfgs = _trigger_configs(model, delta, None, mode, h)
        log = _run_triggers_capped(stats, model, cfgs)
        state = reconstruct(log, model)

    a_t = float(stats.A[-1])
    std_scale = math.sqrt(a_t) if a_t > 0 else float("nan")
    rows = []
    for est in cfg.estimators:
        try:
            if est == CENTRALIZED_FIXED:
                res = centralized_estimates(stats, t=t_end)[0]
            elif est == DECENTRALIZED_FIXED:
                res = fusion.estimate_fixed(state, model, t_end)
            elif est == TIMING_ONLY:
                res = fusion.estimate_timing_only(log, model, t_end)
            else:
                raise InvalidSpec(f"estimator {est} needs a sequential regime")
            rows.append(_row(point, rep, est, res, lam, std_scale, a_t, log, t_end, t_end))
        except BitfuseError as exc:
            rows.append(_failed_row(point, rep, est, t_end, f"{type(exc).__name__}: {exc}"))
    return rows, warnings


def _replicate_sequential(cfg, model, gamma, rep, seed, warnings):
    regime = cfg.regime
    delta = regime.delta_rule(gamma)
    c = regime.c_rule(gamma)
    lam = cfg.lambda_true
    want_central = CENTRALIZED_SEQUENTIAL in cfg.estimators
    want_decent = DECENTRALIZED_SEQUENTIAL in cfg.estimators

    t_end = regime.initial_horizon
    attempt = 0
    while True:
        attempt += 1
        grid = _grid_for(t_end, cfg.grid_steps_per_unit)
        try:
            paths = simulate_paths(model, lam, grid, seed)
            stats = path_statistics(paths, model)
        except BitfuseError as exc:
            rows = [_failed_row(gamma, rep, est, t_end, f"{type(exc).__name__}: {exc}")
                    for est in cfg.estimators]
            return rows, warnings
        cfgs = _trigger_configs(model, delta, c, CONTINUOUS, None)
        log = _run_triggers_capped(stats, model, cfgs, max_level=gamma)
        state = reconstruct(log, model)
        try:
            dec = fusion.estimate_sequential(state, model, gamma) if want_decent else None
            if want_central and float(stats.A[-1]) < gamma:
                raise HorizonExhausted("information never reaches gamma")
            break
        except HorizonExhausted as exc:
            if attempt > _MAX_HORIZON_EXTENSIONS:
                rows = [_failed_row(gamma, rep, est, t_end, f"HorizonExhausted: {exc}")
                        for est in cfg.estimators]
                return rows, warnings
            t_end = t_end + max(1.0, 0.25 * t_end)
    if attempt > 1:
        warnings.append(
            f"point={gamma} rep={rep}: horizon extended to {t_end:g} ({attempt - 1} extensions)"
        )

    std_scale = math.sqrt(gamma)
    rows = []
    for est in cfg.estimators:
        try:
            if est == DECENTRALIZED_SEQUENTIAL:
                a_stop = float(stats.value_at(stats.A, dec.stop_time))
                rows.append(_row(gamma, rep, est, dec, lam, std_scale, a_stop, log,
                                 t_end, dec.stop_time))
            elif est == CENTRALIZED_SEQUENTIAL:
                res = centralized_estimates(stats, gamma=gamma)[0]
                rows.append(_row(gamma, rep, est, res, lam, std_scale, gamma, log,
                                 t_end, res.stop_time))
            else:
                raise InvalidSpec(f"estimator {est} needs a fixed-horizon regime")
        except BitfuseError as exc:
            rows.append(_failed_row(gamma, rep, est, t_end, f"{type(exc).__name__}: {exc}"))
    return rows, warnings


def run_replication(cfg: ExperimentConfig, point_index: int = 0, rep: int = 0):
    """Run a single replication at one regime point and return its rows."""
    rows, _warnings = _replicate(cfg, point_index, rep)
    return rows


def _replicate_star(args):
    return _replicate(*args)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run all replications at all regime points.

    Deterministic for a fixed master_seed regardless of thread count or
    completion order: rows are keyed by (point, replication) and sorted
    before aggregation.
    """
    points = cfg.regime.points()
    tasks = [(cfg, pi, rep) for pi in range(len(points)) for rep in range(cfg.n_replications)]
    results = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunk = max(1, len(tasks) // (8 * threads))
            results = list(pool.map(_replicate_star, tasks, chunksize=chunk))
    else:
        results = [_replicate(*t) for t in tasks]

    est_order = {e: k for k, e in enumerate(cfg.estimators)}
    point_order = {p: k for k, p in enumerate(points)}
    rows = [r for rows_i, _ in results for r in rows_i]
    rows.sort(key=lambda r: (point_order[r.point], r.rep, est_order[r.estimator]))
    warnings = tuple(w for _, ws in results for w in ws)
    aggregates = compute_aggregates(rows)
    return ExperimentReport(config=cfg, rows=tuple(rows), aggregates=tuple(aggregates),
                            warnings=warnings)


def compute_aggregates(rows):
    """Per (point, estimator) summary statistics, recomputable from rows."""
    keys = []
    for r in rows:
        k = (r.point, r.estimator)
        if k not in keys:
            keys.append(k)
    out = []
    for point, est in keys:
        sel = [r for r in rows if r.point == point and r.estimator == est]
        ok = [r for r in sel if r.ok]
        failures = tuple(f"rep={r.rep}: {r.fail_reason}" for r in sel if not r.ok)
        if len(ok) >= 2:
            vals = np.array([r.value for r in ok])
            std = np.array([r.std_error for r in ok])
            rates = np.array(
                [r.messages_used / (r.stop_time if r.stop_time else r.horizon) for r in ok]
            )
            mean = float(vals.mean())
            variance = float(vals.var(ddof=1))
            bias = float(mean - (ok[0].value - ok[0].error))
            std_var = float(std.var(ddof=1))
            if len(ok) >= 8:
                ks_D, ks_p = ks_test(std)
            else:
                ks_D, ks_p = float("nan"), float("nan")
            rate = float(rates.mean())
        else:
            mean = variance = bias = std_var = ks_D = ks_p = rate = float("nan")
        out.append(
            PointAggregate(
                point=point,
                estimator=est,
                n_ok=len(ok),
                n_failed=len(sel) - len(ok),
                mean=mean,
                variance=variance,
                bias=bias,
                std_variance=std_var,
                ks_D=ks_D,
                ks_p=ks_p,
                mean_messages_per_unit_time=rate,
                failures=failures,
            )
        )
    return out


# -- pathwise bound audit ----------------------------------------------

_FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """Worst-case reconstruction gaps of one replication, with pass flags.

    Continuous mode checks the per-sensor and total gaps against the
    thresholds at every grid point.  Discrete mode checks the bit
    reconstruction against threshold + accumulated overshoots at the
    sampling instants.
    """

    mode: str
    b_gap_i: np.ndarray
    b_bound_i: np.ndarray
    a_gap_max_i: np.ndarray
    a_gap_min_i: np.ndarray
    c_i: np.ndarray
    b_gap_total: float
    delta_total: float
    a_gap_max_total: float
    a_gap_min_total: float
    c_total: float
    b_ok: bool
    a_upper_ok: bool
    a_lower_ok: bool


def audit_bounds(stats: PathStats, state: FusionState, log: MessageLog) -> BoundReport:
    """Measure reconstruction gaps over the whole grid and compare them
    with the thresholds (small float-rounding slack only)."""
    model = state.model
    K = model.K
    mode = log.cfgs[0].mode
    if any(c.mode != mode or c.h != log.cfgs[0].h for c in log.cfgs):
        raise InvalidSpec("bound audit requires a common mode and sampling period")
    if mode == CONTINUOUS:
        times = stats.grid.times()
    else:
        stride = int(round(log.cfgs[0].h / stats.grid.dt))
        times = stats.grid.times()[::stride]

    b_gap = np.empty(K)
    b_bound = np.empty(K)
    a_max = np.empty(K)
    a_min = np.empty(K)
    c_arr = np.empty(K)
    b_ok = True
    tB_total = np.zeros(times.size)
    for i in range(K):
        tB_i = state.tB_i(i, times)
        tB_total += tB_i
        if mode == CONTINUOUS:
            B_vals = stats.B_i[i]
            gap = np.abs(B_vals - tB_i)
            bound = log.cfgs[i].delta_max
        else:
            stride = int(round(log.cfgs[i].h / stats.grid.dt))
            B_vals = stats.B_i[i][::stride]
            cum_eta = np.concatenate(([0.0], np.cumsum(log.b[i].overshoot)))
            idx = np.searchsorted(log.b[i].time, times, side="right")
            gap = np.abs(B_vals - tB_i) - cum_eta[idx]
            bound = log.cfgs[i].delta_max
        b_gap[i] = float(gap.max())
        b_bound[i] = bound
        b_ok = b_ok and b_gap[i] <= bound + _FLOAT_TOL * (1 + bound)

        a_diff = stats.A_i[i] - state.tA_i(i, stats.grid.times())
        a_max[i] = float(a_diff.max())
        a_min[i] = float(a_diff.min())
        c_arr[i] = log.cfgs[i].c if log.cfgs[i].c is not None else 0.0

    if mode == CONTINUOUS:
        B_total = stats.B
    else:
        stride = int(round(log.cfgs[0].h / stats.grid.dt))
        B_total = stats.B[::stride]
    b_gap_total = float(np.abs(B_total - tB_total).max())
    a_diff_total = stats.A - state.tA(stats.grid.times())
    delta_total = state.delta_total
    c_total = state.c_total
    if mode == CONTINUOUS:
        b_ok = b_ok and b_gap_total <= delta_total + _FLOAT_TOL * (1 + delta_total)
    a_upper_ok = bool(a_diff_total.max() <= c_total + _FLOAT_TOL * (1 + c_total))
    a_lower_ok = bool(a_diff_total.min() >= -_FLOAT_TOL * (1 + c_total))
    return BoundReport(
        mode=mode,
        b_gap_i=b_gap,
        b_bound_i=b_bound,
        a_gap_max_i=a_max,
        a_gap_min_i=a_min,
        c_i=c_arr,
        b_gap_total=b_gap_total,
        delta_total=delta_total,
        a_gap_max_total=float(a_diff_total.max()),
        a_gap_min_total=float(a_diff_total.min()),
        c_total=c_total,
        b_ok=bool(b_ok),
        a_upper_ok=a_upper_ok,
        a_lower_ok=a_lower_ok,
    )


# -- discrete-sampling overshoot study ----------------------------------


@dataclass(frozen=True)
class OvershootRow:
    h: float
    mean_eta: float
    eta_norm: float
    mean_b_messages: float
    bias: float
    bias_se: float
    rate_ratio: float
    rate_ok: bool


def overshoot_study(cfg: ExperimentConfig, threads: int = 1):
    """One row per sampling period: pooled mean overshoot, its h^(1/3)
    normalization, message volume, and the fixed-horizon estimator bias.

    ``rate_ratio`` is the desk-scale surrogate of the rate condition
    linking sampling period, threshold, and horizon: cbrt(h) divided by
    min(delta)/sqrt(t); at most 1 flags it satisfied.
    """
    regime = cfg.regime
    if regime.kind != "discrete_sampling":
        raise InvalidSpec("overshoot study needs a discrete-sampling regime")
    report = run_experiment(cfg, threads=threads)
    rows = []
    delta = regime.delta_rule(regime.t)
    for h in regime.points():
        sel = [r for r in report.rows
               if r.point == h and r.estimator == DECENTRALIZED_FIXED and r.ok]
        eta_total = sum(r.eta_sum for r in sel)
        msg_total = sum(r.b_messages for r in sel)
        mean_eta = eta_total / msg_total if msg_total else float("nan")
        errs = np.array([r.error for r in sel])
        bias = float(errs.mean())
        bias_se = float(errs.std(ddof=1) / math.sqrt(len(errs)))
        ratio = (h ** (1.0 / 3.0)) / (delta / math.sqrt(regime.t))
        rows.append(
            OvershootRow(
                h=h,
                mean_eta=mean_eta,
                eta_norm=mean_eta / h ** (1.0 / 3.0),
                mean_b_messages=float(np.mean([r.b_messages for r in sel])),
                bias=bias,
                bias_se=bias_se,
                rate_ratio=ratio,
                rate_ok=ratio <= 1.0,
            )
        )
    return rows, report
