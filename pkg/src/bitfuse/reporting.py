"""CSV and JSON text builders for run outputs.

All builders return complete file contents as strings so callers can
write them atomically and determinism checks can compare bytes.  Reals
are formatted with 17 significant digits (lossless round-trip), '.'
decimal separator, no locale.
"""

from __future__ import annotations

import json

import numpy as np

from .experiments import ExperimentReport
from .models import PathStats, SensorPaths
from .triggers import MessageLog

__all__ = [
    "fmt",
    "rows_csv_text",
    "summary_json_text",
    "paths_csv_text",
    "messages_csv_text",
    "estimates_csv_text",
    "density_csv_text",
]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


ROW_COLUMNS = (
    "point",
    "rep",
    "estimator",
    "ok",
    "value",
    "error",
    "std_error",
    "stop_time",
    "info_used",
    "a_at_stop",
    "messages_used",
    "b_messages",
    "a_messages",
    "eta_sum",
    "horizon",
    "fail_reason",
)


def rows_csv_text(report: ExperimentReport) -> str:
    lines = [",".join(ROW_COLUMNS)]
    for r in report.rows:
        lines.append(
            ",".join(
                (
                    fmt(r.point),
                    str(r.rep),
                    r.estimator,
                    fmt(r.ok),
                    fmt(r.value),
                    fmt(r.error),
                    fmt(r.std_error),
                    fmt(r.stop_time),
                    fmt(r.info_used),
                    fmt(r.a_at_stop),
                    str(r.messages_used),
                    str(r.b_messages),
                    str(r.a_messages),
                    fmt(r.eta_sum),
                    fmt(r.horizon),
                    r.fail_reason.replace(",", ";"),
                )
            )
        )
    return "\n".join(lines) + "\n"


def summary_json_text(report: ExperimentReport, config_hash: str = "") -> str:
    doc = {
        "config_hash": config_hash,
        "master_seed": report.config.master_seed,
        "n_replications": report.config.n_replications,
        "warnings": list(report.warnings),
        "aggregates": [
            {
                "point": a.point,
                "estimator": a.estimator,
                "n_ok": a.n_ok,
                "n_failed": a.n_failed,
                "mean": a.mean,
                "variance": a.variance,
                "bias": a.bias,
                "std_variance": a.std_variance,
                "ks_D": a.ks_D,
                "ks_p": a.ks_p,
                "mean_messages_per_unit_time": a.mean_messages_per_unit_time,
                "failures": list(a.failures),
            }
            for a in report.aggregates
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def paths_csv_text(paths: SensorPaths, stats: PathStats) -> str:
    K = paths.Y.shape[0]
    header = ["t"] + [f"Y_{i + 1}" for i in range(K)] + ["B", "A", "M"]
    lines = [",".join(header)]
    times = paths.grid.times()
    for k in range(times.size):
        vals = [fmt(times[k])]
        vals += [fmt(paths.Y[i, k]) for i in range(K)]
        vals += [fmt(stats.B[k]), fmt(stats.A[k]), fmt(stats.M[k])]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def messages_csv_text(log: MessageLog) -> str:
    lines = ["sensor,kind,time,bit,overshoot"]
    for sensor, kind, t, bit, eta in log.to_csv_rows():
        lines.append(f"{sensor},{kind},{fmt(t)},{bit if bit != '' else ''},{fmt(eta) if eta != '' else ''}")
    return "\n".join(lines) + "\n"


def estimates_csv_text(results, replication: int = 0, point=None) -> str:
    """EstimateResult rows: replication, estimator, gamma_or_t, value,
    stop_time, info_used, messages_used."""
    lines = ["replication,estimator,gamma_or_t,value,stop_time,info_used,messages_used"]
    for res in results:
        lines.append(
            ",".join(
                (
                    str(replication),
                    res.estimator,
                    fmt(point),
                    fmt(res.value),
                    fmt(res.stop_time),
                    fmt(res.info_used),
                    str(res.messages_used),
                )
            )
        )
    return "\n".join(lines) + "\n"


def density_csv_text(ts, p_up, p_down) -> str:
    lines = ["t,p_up,p_down"]
    for t, u, d in zip(ts, p_up, p_down):
        lines.append(f"{fmt(t)},{fmt(u)},{fmt(d)}")
    return "\n".join(lines) + "\n"
