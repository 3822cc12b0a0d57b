"""Per-sensor event-triggered communication.

A sensor watches its running integral statistic and emits a one-bit
message every time the statistic leaves the band (ref - delta_down,
ref + delta_up) around a moving reference, and (when its information
process is random) a timing-only message every time that information
gains a fixed amount c.

Two observation modes are supported.  In continuous mode the crossing is
placed on the band boundary by linear interpolation and the next
excursion restarts from the boundary value exactly, so the fusion-side
reconstruction matches the statistic at every trigger time and the
reconstruction gap stays below max(delta_up, delta_down) at every grid
point by construction.  In discrete mode the statistic is inspected only
every h time units, the message is stamped at the sampling instant, the
reference jumps to the sampled value, and the unobserved overshoot is
recorded for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, NonMonotoneInput, OutOfHorizon
from .models import Model, PathStats, TimeGrid

__all__ = [
    "TriggerMode",
    "TriggerConfig",
    "BMessages",
    "AMessages",
    "MessageLog",
    "run_b_trigger",
    "run_a_trigger",
    "run_triggers",
    "extract_renewals",
]

CONTINUOUS = "continuous"
DISCRETE = "discrete"
TriggerMode = (CONTINUOUS, DISCRETE)


@dataclass(frozen=True)
class TriggerConfig:
    """Thresholds and observation mode for one sensor.

    ``c`` is None exactly when the sensor sends no timing messages
    (its information process, or the total one, is deterministic).
    """

    delta_up: float
    delta_down: float
    c: float | None = None
    mode: str = CONTINUOUS
    h: float | None = None

    def __post_init__(self):
        if not (self.delta_up > 0 and self.delta_down > 0):
            raise InvalidSpec("trigger thresholds must be strictly positive")
        if self.c is not None and not self.c > 0:
            raise InvalidSpec("information increment c must be positive or None")
        if self.mode not in TriggerMode:
            raise InvalidSpec(f"unknown trigger mode {self.mode!r}")
        if self.mode == DISCRETE and (self.h is None or not self.h > 0):
            raise InvalidSpec("discrete mode requires a positive sampling period h")
        if self.mode == CONTINUOUS and self.h is not None:
            raise InvalidSpec("sampling period h is meaningful only in discrete mode")

    @property
    def delta_max(self) -> float:
        return max(self.delta_up, self.delta_down)


@dataclass(frozen=True)
class BMessages:
    """One sensor's bit messages as parallel arrays.

    ``pending`` is the residual excursion at the end of the horizon
    (diagnostic only, never transmitted).
    """

    time: np.ndarray
    bit: np.ndarray
    overshoot: np.ndarray
    pending: float = 0.0

    def __len__(self):
        return self.time.size


@dataclass(frozen=True)
class AMessages:
    """One sensor's timing messages (message n fires when the
    information process first reaches n*c)."""

    time: np.ndarray

    def __len__(self):
        return self.time.size


def _empty_b() -> BMessages:
    return BMessages(
        time=np.empty(0), bit=np.empty(0, dtype=np.uint8), overshoot=np.empty(0), pending=0.0
    )


def _empty_a() -> AMessages:
    return AMessages(time=np.empty(0))


@dataclass(frozen=True)
class MessageLog:
    """All messages of one replication plus the thresholds that produced
    them (thresholds are known on both sides of the channel)."""

    b: tuple
    a: tuple
    cfgs: tuple
    horizon: float

    @property
    def K(self) -> int:
        return len(self.b)

    def to_csv_rows(self):
        """Rows (sensor, kind, time, bit, overshoot), bit messages first
        on ties within a sensor."""
        for i in range(self.K):
            rows = [(t, 0, int(z), eta) for t, z, eta in
                    zip(self.b[i].time, self.b[i].bit, self.b[i].overshoot)]
            rows += [(t, 1, "", "") for t in self.a[i].time]
            rows.sort(key=lambda r: (r[0], r[1]))
            for t, kind, bit, eta in rows:
                yield (i, "B" if kind == 0 else "A", t, bit, eta)


def _first_exit_index(B: np.ndarray, start: int, hi: float, lo: float, window: int):
    """First index >= start where B leaves (lo, hi), scanning in growing
    chunks so the cost stays linear in the path length."""
    n = B.size
    w = window
    while start < n:
        stop = min(n, start + w)
        seg = B[start:stop]
        mask = (seg >= hi) | (seg <= lo)
        if mask.any():
            return start + int(np.argmax(mask))
        start = stop
        w = min(2 * w, 1 << 20)
    return None


def run_b_trigger(B_path: np.ndarray, grid: TimeGrid, cfg: TriggerConfig) -> BMessages:
    """Run the bit trigger over one sensor's integral statistic.

    Continuous mode: a crossing is detected at the first grid step where
    the statistic leaves the band around the reference (boundary values
    count as crossings); the message time is set by linear interpolation
    to the boundary and the next excursion restarts from the boundary
    value exactly, so overshoots are identically zero.  A single step
    that jumps through several band widths emits several messages with
    increasing interpolated times.

    Discrete mode: the statistic is inspected only at multiples of h
    (h must be an integer multiple of the grid step); the message time is
    the sampling instant, the reference restarts from the sampled value,
    and the overshoot beyond the threshold is recorded.
    """
    B = np.asarray(B_path, dtype=float)
    if B.size != grid.n_steps + 1:
        raise InvalidSpec("statistic path length does not match the grid")
    if cfg.mode == DISCRETE:
        stride = int(round(cfg.h / grid.dt))
        if stride < 1 or abs(stride * grid.dt - cfg.h) > 1e-9 * cfg.h:
            raise InvalidSpec("sampling period h must be an integer multiple of the grid step")
        samples = B[::stride]
        sample_times = grid.times()[::stride]
        return _discrete_b_trigger(samples, sample_times, cfg)
    return _continuous_b_trigger(B, grid, cfg)


def _continuous_b_trigger(B, grid, cfg):
    times = grid.times()
    dt = grid.dt
    dup, ddn = cfg.delta_up, cfg.delta_down
    out_t, out_z = [], []
    ref = B[0]
    k = 0
    window = 256
    while True:
        j = _first_exit_index(B, k + 1, ref + dup, ref - ddn, window)
        if j is None:
            break
        b0, b1 = B[j - 1], B[j]
        if b1 >= ref + dup:
            while b1 >= ref + dup:
                bound = ref + dup
                theta = (bound - b0) / (b1 - b0)
                out_t.append(times[j - 1] + theta * dt)
                out_z.append(1)
                ref = bound
        else:
            while b1 <= ref - ddn:
                bound = ref - ddn
                theta = (bound - b0) / (b1 - b0)
                out_t.append(times[j - 1] + theta * dt)
                out_z.append(0)
                ref = bound
        k = j
    return BMessages(
        time=np.asarray(out_t, dtype=float),
        bit=np.asarray(out_z, dtype=np.uint8),
        overshoot=np.zeros(len(out_t)),
        pending=float(B[-1] - ref),
    )


def _discrete_b_trigger(samples, sample_times, cfg):
    dup, ddn = cfg.delta_up, cfg.delta_down
    out_t, out_z, out_eta = [], [], []
    ref = samples[0]
    k = 0
    window = 256
    while True:
        j = _first_exit_index(samples, k + 1, ref + dup, ref - ddn, window)
        if j is None:
            break
        inc = samples[j] - ref
        # a jump past a threshold is classified by the sign of the increment
        if inc >= dup:
            out_z.append(1)
            out_eta.append(inc - dup)
        else:
            out_z.append(0)
            out_eta.append(-inc - ddn)
        out_t.append(sample_times[j])
        ref = samples[j]
        k = j
    return BMessages(
        time=np.asarray(out_t, dtype=float),
        bit=np.asarray(out_z, dtype=np.uint8),
        overshoot=np.asarray(out_eta, dtype=float),
        pending=float(samples[-1] - ref),
    )


def run_a_trigger(A_path: np.ndarray, grid: TimeGrid, c: float | None,
                  max_level: float | None = None) -> AMessages:
    """Timing messages: the n-th fires at the first (interpolated) time
    the nondecreasing information path reaches n*c.

    Returns an empty log when c is None (the sensor never sends timing
    messages because its information, or the total one, is
    deterministic).  ``max_level`` optionally caps the emitted levels;
    levels above it can never be consumed by a stopping rule targeting
    that amount of information.
    """
    if c is None:
        return _empty_a()
    if not c > 0:
        raise InvalidSpec("information increment c must be positive")
    A = np.asarray(A_path, dtype=float)
    if A.size != grid.n_steps + 1:
        raise InvalidSpec("information path length does not match the grid")
    if A[0] != 0.0 or np.any(np.diff(A) < 0):
        raise NonMonotoneInput("information path must be nondecreasing from 0")
    top = A[-1] if max_level is None else min(A[-1], max_level)
    n_msg = int(np.floor(top / c))
    if n_msg == 0:
        return _empty_a()
    levels = c * np.arange(1, n_msg + 1)
    idx = np.searchsorted(A, levels, side="left")
    prev = idx - 1
    denom = A[idx] - A[prev]
    theta = (levels - A[prev]) / denom
    t_msg = grid.times()[prev] + theta * grid.dt
    return AMessages(time=t_msg)


def run_triggers(stats: PathStats, model: Model, cfgs) -> MessageLog:
    """Run all sensors' triggers over one replication's statistics.

    A sensor sends timing messages only when both its own information
    and the total information are random; in that case its config must
    carry c, and otherwise c must be None.
    """
    cfgs = tuple(cfgs)
    if len(cfgs) != model.K:
        raise InvalidSpec("need one trigger config per sensor")
    needs_a = not (model.a_deterministic or model.a_i_deterministic)
    for cfg in cfgs:
        if needs_a and cfg.c is None:
            raise InvalidSpec("information is random; timing increment c is required")
        if not needs_a and cfg.c is not None:
            raise InvalidSpec("information is deterministic; c must be None")
    b_logs, a_logs = [], []
    for i in range(model.K):
        b_logs.append(run_b_trigger(stats.B_i[i], stats.grid, cfgs[i]))
        a_logs.append(run_a_trigger(stats.A_i[i], stats.grid, cfgs[i].c))
    return MessageLog(b=tuple(b_logs), a=tuple(a_logs), cfgs=cfgs, horizon=stats.grid.t_end)


def extract_renewals(log: MessageLog, sensor: int, t: float):
    """Message count, inter-arrival times, and bits of one sensor up to t."""
    if not (0 <= t <= log.horizon * (1 + 1e-12)):
        raise OutOfHorizon(f"t={t} outside [0, {log.horizon}]")
    times = log.b[sensor].time
    m = int(np.searchsorted(times, t, side="right"))
    deltas = np.diff(times[:m], prepend=0.0)
    return m, deltas, log.b[sensor].bit[:m].copy()
