"""Capacitive touch pipeline: samples -> plate transitions -> grasp events.

Five plates report a 0..100 capacitance value at a nominal 10 Hz refresh.
A value below the threshold means the plate is covered. Per-plate tri-state
classification feeds a device-level fusion step that emits a Press when the
first plate is covered and a Release when the last one clears, so the fused
stream alternates strictly. An optional debounce stage absorbs touch blips
shorter than two sample periods.
"""

from __future__ import annotations

import statistics
import warnings
from dataclasses import dataclass, replace
from enum import Enum

PLATE_COUNT = 5
SAMPLE_PERIOD_MS = 100
DEFAULT_THRESHOLD = 50.0


class TouchError(Exception):
    pass


class RoutingError(TouchError):
    """Sample delivered to the wrong plate's classifier."""


class StreamProtocolError(TouchError):
    """Grasp press/release events out of alternation."""


class CalibrationError(TouchError):
    pass


class TriState(str, Enum):
    TOUCHED = "touched"
    RELEASED = "released"
    NOT_CHANGED = "not_changed"


class GraspKind(str, Enum):
    PRESS = "press"
    RELEASE = "release"


@dataclass(frozen=True)
class CapacitanceSample:
    plate: int
    value: float
    ts_ms: int

    def __post_init__(self):
        if not 0 <= self.plate < PLATE_COUNT:
            raise TouchError(f"plate {self.plate} out of range")
        if not 0 <= self.value <= 100:
            raise TouchError(f"capacitance {self.value} outside 0..100")


@dataclass(frozen=True)
class PlateState:
    plate: int
    state: TriState = TriState.NOT_CHANGED
    since_ms: int = 0          # time of the last transition
    touched: bool = False      # current level, retained across NOT_CHANGED


@dataclass(frozen=True)
class GraspEvent:
    kind: GraspKind
    ts_ms: int
    active_plates: int = 0     # bitmask of covered plates after the transition


def classify(prev: PlateState, sample: CapacitanceSample, threshold: float,
             hysteresis: float = 0.0) -> PlateState:
    """Fold one sample into a plate's state.

    Below threshold while released -> TOUCHED transition; at/above threshold
    while touched -> RELEASED transition; otherwise NOT_CHANGED with the level
    retained. A nonzero hysteresis widens the band between the two directions.
    """
    if not 0 < threshold < 100:
        raise TouchError(f"threshold {threshold} outside (0, 100)")
    if sample.plate != prev.plate:
        raise RoutingError(f"sample for plate {sample.plate} fed to plate {prev.plate}")
    if not prev.touched and sample.value < threshold - hysteresis:
        return PlateState(prev.plate, TriState.TOUCHED, sample.ts_ms, True)
    if prev.touched and sample.value >= threshold + hysteresis:
        return PlateState(prev.plate, TriState.RELEASED, sample.ts_ms, False)
    return replace(prev, state=TriState.NOT_CHANGED)


def fuse(plates: list[PlateState], ts_ms: int) -> GraspEvent | None:
    """Device-level grasp detection over one classified sample round.

    The tri-state output encodes which plates transitioned this round, so the
    previous covered-count can be reconstructed without extra state.
    """
    now = sum(1 for p in plates if p.touched)
    just_touched = sum(1 for p in plates if p.state is TriState.TOUCHED)
    just_released = sum(1 for p in plates if p.state is TriState.RELEASED)
    before = now - just_touched + just_released
    mask = 0
    for p in plates:
        if p.touched:
            mask |= 1 << p.plate
    if before == 0 and now >= 1:
        return GraspEvent(GraspKind.PRESS, ts_ms, mask)
    if before >= 1 and now == 0:
        return GraspEvent(GraspKind.RELEASE, ts_ms, mask)
    return None


def touch_durations(events: list[GraspEvent]) -> tuple[list[int], int | None]:
    """Press-to-release durations; an unclosed trailing press is returned apart."""
    durations = []
    open_press: int | None = None
    for e in events:
        if e.kind is GraspKind.PRESS:
            if open_press is not None:
                raise StreamProtocolError(f"press at {e.ts_ms} while already pressed")
            open_press = e.ts_ms
        else:
            if open_press is None:
                raise StreamProtocolError(f"release at {e.ts_ms} without press")
            durations.append(e.ts_ms - open_press)
            open_press = None
    return durations, open_press


def calibrate(baseline: list[CapacitanceSample], k: float = 3.0,
              min_samples: int = 50, median_window: int = 5) -> dict[int, float]:
    """Per-plate touch thresholds from an untouched baseline recording.

    threshold = mean - k * stddev, clamped to [5, 95]. Short touch excursions
    in the recording are removed by a median filter before the statistics.
    A degenerate (zero-variance) baseline falls back to 0.75 * mean.
    """
    by_plate: dict[int, list[float]] = {}
    for s in baseline:
        by_plate.setdefault(s.plate, []).append(s.value)
    if not by_plate:
        raise CalibrationError("empty baseline")
    thresholds = {}
    for plate, values in sorted(by_plate.items()):
        if len(values) < min_samples:
            raise CalibrationError(
                f"plate {plate}: {len(values)} baseline samples, need {min_samples}")
        filtered = _median_filter(values, median_window)
        mean = statistics.fmean(filtered)
        stddev = statistics.pstdev(filtered)
        if stddev < 1e-9:
            warnings.warn(
                f"plate {plate}: degenerate baseline stddev, falling back to 0.75*mean",
                stacklevel=2,
            )
            threshold = 0.75 * mean
        else:
            threshold = mean - k * stddev
        thresholds[plate] = min(95.0, max(5.0, threshold))
    return thresholds


def _median_filter(values: list[float], window: int) -> list[float]:
    if window <= 1 or len(values) < window:
        return list(values)
    half = window // 2
    out = []
    for i in range(len(values)):
        lo = max(0, i - half)
        hi = min(len(values), i + half + 1)
        out.append(statistics.median(values[lo:hi]))
    return out


class Debouncer:
    """Drops fused press/release pairs that do not exceed the minimum hold.

    A press is held back until either its release arrives (pair absorbed if
    the hold is min_hold_ms or less) or enough time passes that the hold is
    known to be long enough. The inclusive boundary matters at the sampling
    rate: a physical blip under two sample periods can still straddle two
    ticks and measure exactly 2 * period, and must not survive. Emitted
    events keep their original timestamps.
    """

    def __init__(self, min_hold_ms: int = 2 * SAMPLE_PERIOD_MS):
        self.min_hold_ms = min_hold_ms
        self._pending: GraspEvent | None = None
        self._press_emitted = False

    def feed(self, event: GraspEvent) -> list[GraspEvent]:
        if event.kind is GraspKind.PRESS:
            self._pending = event
            self._press_emitted = False
            return []
        # Release
        if self._press_emitted:
            self._press_emitted = False
            return [event]
        if self._pending is None:
            return [event]
        pending, self._pending = self._pending, None
        if event.ts_ms - pending.ts_ms <= self.min_hold_ms:
            return []  # blip absorbed
        return [pending, event]

    def advance(self, now_ms: int) -> list[GraspEvent]:
        """Flush a held press once a release could no longer absorb it."""
        if self._pending is not None and now_ms - self._pending.ts_ms > self.min_hold_ms:
            out = [self._pending]
            self._pending = None
            self._press_emitted = True
            return out
        return []

    def flush(self) -> list[GraspEvent]:
        """End of stream: emit whatever is still held."""
        if self._pending is not None:
            out = [self._pending]
            self._pending = None
            self._press_emitted = True
            return out
        return []


class TouchPipeline:
    """Per-device fold: classify five plates per round, fuse, debounce."""

    def __init__(self, thresholds: dict[int, float] | float = DEFAULT_THRESHOLD,
                 debounce: bool = True, hysteresis: float = 0.0,
                 min_hold_ms: int = 2 * SAMPLE_PERIOD_MS):
        if isinstance(thresholds, dict):
            self.thresholds = {p: thresholds.get(p, DEFAULT_THRESHOLD)
                               for p in range(PLATE_COUNT)}
        else:
            self.thresholds = {p: float(thresholds) for p in range(PLATE_COUNT)}
        self.hysteresis = hysteresis
        self.plates = [PlateState(p) for p in range(PLATE_COUNT)]
        self.debouncer = Debouncer(min_hold_ms) if debounce else None
        self.transitions: list[PlateState] = []  # per-plate transition log

    def process_round(self, samples: list[CapacitanceSample]) -> list[GraspEvent]:
        """One refresh round: one sample per plate, common timestamp."""
        ts = samples[0].ts_ms
        for s in samples:
            prev = self.plates[s.plate]
            nxt = classify(prev, s, self.thresholds[s.plate], self.hysteresis)
            self.plates[s.plate] = nxt
            if nxt.state is not TriState.NOT_CHANGED:
                self.transitions.append(nxt)
        fused = fuse(self.plates, ts)
        out: list[GraspEvent] = []
        if self.debouncer is not None:
            out.extend(self.debouncer.advance(ts))
            if fused is not None:
                out.extend(self.debouncer.feed(fused))
        elif fused is not None:
            out.append(fused)
        return out

    def advance(self, now_ms: int) -> list[GraspEvent]:
        if self.debouncer is not None:
            return self.debouncer.advance(now_ms)
        return []

    def finish(self) -> list[GraspEvent]:
        if self.debouncer is not None:
            return self.debouncer.flush()
        return []
