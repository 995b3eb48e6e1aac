"""Session metrics: grasp-window accounting, learning curves, precision stats.

All statistics use the sample (n-1) standard deviation, and every report can
be exported as CSV or an aligned text table with byte-deterministic output.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass

from .simulate import SessionLog


class AnalysisError(ValueError):
    pass


DEFAULT_WINDOW_TOLERANCE_MS = 120_000


@dataclass(frozen=True)
class GraspWindowReport:
    window_starts: tuple[int, ...]
    events_per_window: tuple[int, ...]
    off_window_events: int
    reconnects: int = 0

    @property
    def total_events(self) -> int:
        return sum(self.events_per_window) + self.off_window_events


@dataclass(frozen=True)
class LearningCurve:
    # per game index (1-based, contiguous): (mean attempts, sample stdev, n)
    points: tuple[tuple[int, float, float, int], ...]


def grasp_window_report(event_times: list[int], windows: list[int],
                        tolerance_ms: int = DEFAULT_WINDOW_TOLERANCE_MS,
                        reconnects: int = 0) -> GraspWindowReport:
    """Assign each event to its nearest scheduled window, else off-window.

    ``event_times`` are timestamps of the events being counted (callers choose
    what to count; grasp-onset "touch" events reproduce the instructed-grasp
    accounting). An event belongs to the nearest window start within the
    tolerance; everything else is a false-positive candidate.
    """
    window_starts = tuple(sorted(windows))
    counts = [0] * len(window_starts)
    off = 0
    for t in event_times:
        best = None
        for i, w in enumerate(window_starts):
            d = abs(t - w)
            if best is None or d < best[0]:
                best = (d, i)
        if best is not None and best[0] <= tolerance_ms:
            counts[best[1]] += 1
        else:
            off += 1
    return GraspWindowReport(window_starts, tuple(counts), off, reconnects)


def _attempts_by_game(cohort: list[SessionLog]) -> dict[int, list[int]]:
    table: dict[int, list[int]] = {}
    for log in cohort:
        for outcome in log.game_outcomes:
            table.setdefault(outcome.game_index, []).append(outcome.attempts)
    return table


def learning_curve(cohort: list[SessionLog]) -> LearningCurve:
    """Mean/stdev of attempts per game index across sessions reaching it."""
    if not cohort:
        raise AnalysisError("empty cohort")
    if not any(log.game_outcomes for log in cohort):
        raise AnalysisError("no completed games in cohort")
    table = _attempts_by_game(cohort)
    points = []
    for g in range(1, max(table) + 1):
        attempts = table.get(g, [])
        if not attempts:
            break  # indices must stay contiguous
        mean = statistics.fmean(attempts)
        stdev = statistics.stdev(attempts) if len(attempts) > 1 else 0.0
        points.append((g, mean, stdev, len(attempts)))
    return LearningCurve(tuple(points))


def precision_stats(cohort: list[SessionLog],
                    phase: str | None = None) -> tuple[float, float]:
    """Mean and sample stdev of per-pattern precision percentages."""
    values = [o.precision_pct
              for log in cohort for o in log.game_outcomes
              if phase is None or o.mode == phase]
    if not values:
        raise AnalysisError(f"no completed games for phase {phase!r}")
    mean = statistics.fmean(values)
    stdev = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, stdev


# ------------------------------------------------------------------ export


def _rows_for(report) -> tuple[list[str], list[list]]:
    if isinstance(report, GraspWindowReport):
        header = ["window_start_ms", "events"]
        rows = [[w, c] for w, c in zip(report.window_starts, report.events_per_window)]
        rows.append(["off_window", report.off_window_events])
        rows.append(["reconnects", report.reconnects])
        return header, rows
    if isinstance(report, LearningCurve):
        header = ["game", "mean_attempts", "stdev_attempts", "n"]
        return header, [[g, f"{m:.4f}", f"{s:.4f}", n] for g, m, s, n in report.points]
    if isinstance(report, tuple) and len(report) == 2:
        header = ["mean_precision_pct", "stdev_precision_pct"]
        return header, [[f"{report[0]:.4f}", f"{report[1]:.4f}"]]
    raise AnalysisError(f"cannot export {type(report).__name__}")


def export(report, fmt: str = "csv") -> bytes:
    header, rows = _rows_for(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue().encode()
    if fmt == "table":
        cells = [header] + [[str(c) for c in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        lines = []
        for r in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return ("\n".join(lines) + "\n").encode()
    raise AnalysisError(f"unknown format {fmt!r}")
