"""Stable text renderings of simulator results."""

from __future__ import annotations

import csv
import io
from typing import Sequence

from seabrew.sim.compute import MeterReport
from seabrew.sim.traffic import TrafficReport

FORMATS = ("csv", "tsv", "table")

COMPUTE_COLUMNS = (
    "scheme",
    "ciphertexts",
    "attrs",
    "universe",
    "daily_requests",
    "revocation_days",
    "horizon_days",
    "reps",
    "mean_exps",
    "ci95_low",
    "ci95_high",
    "mean_update_cp",
    "mean_update_dk",
    "mean_revocations",
)

TRAFFIC_COLUMNS = (
    "scheme",
    "procedure",
    "broadcast_messages",
    "broadcast_bytes",
    "unicast_messages",
    "unicast_bytes",
    "total_bytes",
)

COMPUTE_NOTES = (
    "requests select objects and consumers uniformly at random",
    "SEA-BREW counts are metered G0 exponentiations of real update calls",
    "YWRL counts come from an analytical cost model and are never executed",
)


def compute_rows(reports: Sequence[MeterReport]) -> list[dict]:
    rows = []
    for rep in reports:
        cfg = rep.config
        common = dict(
            ciphertexts=cfg.ciphertexts,
            attrs=cfg.attrs,
            universe=cfg.universe,
            daily_requests=f"{cfg.daily_requests:g}",
            revocation_days=f"{cfg.revocation_days:g}",
            horizon_days=f"{cfg.horizon_days:g}",
            reps=cfg.reps,
            mean_revocations=f"{rep.estimate('revocations').mean:.2f}",
        )
        for scheme, prefix in (("SEA-BREW", "seabrew"), ("YWRL", "ywrl")):
            total = rep.estimate(f"{prefix}_total")
            rows.append(
                dict(
                    common,
                    scheme=scheme,
                    mean_exps=f"{total.mean:.2f}",
                    ci95_low=f"{total.low:.2f}",
                    ci95_high=f"{total.high:.2f}",
                    mean_update_cp=f"{rep.estimate(prefix + '_update_cp').mean:.2f}",
                    mean_update_dk=f"{rep.estimate(prefix + '_update_dk').mean:.2f}",
                )
            )
    return rows


def traffic_rows(report: TrafficReport) -> list[dict]:
    return [
        dict(
            scheme=r.scheme,
            procedure=r.procedure,
            broadcast_messages=r.broadcast_messages,
            broadcast_bytes=r.broadcast_bytes,
            unicast_messages=r.unicast_messages,
            unicast_bytes=r.unicast_bytes,
            total_bytes=r.total_bytes,
        )
        for r in report.rows
    ]


def _render(rows: list[dict], columns: Sequence[str], fmt: str, notes: Sequence[str]) -> bytes:
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    buf = io.StringIO()
    if fmt == "table":
        cells = [list(columns)] + [[str(r[c]) for c in columns] for r in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
        for note in notes:
            buf.write(f"# {note}\n")
        for j, row in enumerate(cells):
            buf.write("  ".join(v.rjust(w) for v, w in zip(row, widths)).rstrip() + "\n")
            if j == 0:
                buf.write("  ".join("-" * w for w in widths) + "\n")
        return buf.getvalue().encode("utf-8")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), delimiter="," if fmt == "csv" else "\t", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def emit_report(report, fmt: str = "table") -> bytes:
    """Render a traffic report or a list of compute reports.

    Lines starting with ``#`` carry the methodology notes; the remaining
    lines follow the documented column order.
    """
    if isinstance(report, TrafficReport):
        notes = (
            f"n_consumers={report.n_consumers} n_producers={report.n_producers} "
            f"attrs_per_key={report.attrs_per_key} profile={report.profile}",
            "bytes exclude envelope framing (kind, sender) and the broadcast version tag and receiver bitmap",
            "BSW-KU sizes come from a byte model, not an execution",
        )
        return _render(traffic_rows(report), TRAFFIC_COLUMNS, fmt, notes)
    if isinstance(report, MeterReport):
        report = [report]
    return _render(compute_rows(report), COMPUTE_COLUMNS, fmt, COMPUTE_NOTES)
