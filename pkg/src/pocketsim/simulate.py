"""Scenario-driven virtual robot on a discrete-event virtual clock.

A scenario scripts instructed grasps, false-positive noise, link outages and
optionally a synthetic child who plays the rhythm game. Scripted grasps and
noise are rendered as capacitance excursions and pushed through the touch
pipeline at the sensor refresh period; the synthetic child injects grasp
edges at millisecond resolution, the way the game engine measures them. The
run produces a complete notification-frame log plus the game outcomes, and is
bit-reproducible from (scenario, seed).

The virtual clock jumps between scheduled edges instead of ticking through
idle time, so day-long sessions simulate in milliseconds.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import asdict, dataclass, field

from .game import (
    Effect,
    EffectKind,
    GameConfig,
    GameEvent,
    GameState,
    Mode,
    Phase,
    derive_seed,
    next_wake_ms,
    step,
)
from .touch import (
    PLATE_COUNT,
    CapacitanceSample,
    GraspKind,
    TouchPipeline,
)
from .wire import DEVICE_LEVEL, NotificationFrame

BASELINE_CAP = 80.0
TOUCH_CAP = 15.0

# Learner pacing (ms). Reaction time is drawn around the child model's mean;
# these are the fixed parts of the choreography.
RELEASE_AFTER_DEMO_MS = 150
REGRASP_AFTER_SUCCESS_MS = 400
NOISE_CLIP = 0.8


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ChildModel:
    """Synthetic player: timing noise shrinks as skill grows.

    Press durations are target * (1 + eps) with eps drawn from a centered
    normal whose stddev is base_sigma * (1 - skill), clipped to +-80%. The
    noise stream is indexed by (attempt, note) and reused across games, so an
    individual child's game-to-game improvement is monotone and a cohort's
    learning curve is stable run to run.
    """
    skill: float = 0.0
    learning_rate: float = 0.12
    reaction_ms: int = 600
    seed: int = 0
    base_sigma: float = 0.60
    skill_cap: float = 1.0

    def __post_init__(self):
        if not 0 <= self.skill <= 1:
            raise ScenarioError("skill must be in [0, 1]")
        if self.learning_rate < 0 or self.base_sigma < 0:
            raise ScenarioError("learning_rate and base_sigma must be >= 0")

    def skill_at(self, games_completed: int) -> float:
        return min(self.skill_cap, min(1.0, self.skill + self.learning_rate * games_completed))

    def sigma_at(self, games_completed: int) -> float:
        return self.base_sigma * (1.0 - self.skill_at(games_completed))


@dataclass(frozen=True)
class NoiseModel:
    """False positives: short two-event blips at a Poisson hourly rate."""
    rate_per_hour: float = 0.0
    blip_min_ms: int = 250
    blip_max_ms: int = 900

    def __post_init__(self):
        if self.rate_per_hour < 0:
            raise ScenarioError("noise rate must be >= 0")
        if not 0 < self.blip_min_ms <= self.blip_max_ms:
            raise ScenarioError("blip duration bounds invalid")


@dataclass(frozen=True)
class Scenario:
    duration_ms: int
    name: str = "scenario"
    device_id: str = "robot-1"
    sample_period_ms: int = 100
    grasp_schedule: tuple[tuple[int, int], ...] = ()   # (at_ms, hold_ms)
    blips: tuple[tuple[int, int], ...] = ()            # scripted false positives
    noise: NoiseModel = NoiseModel()
    fumble_events: int = 0                             # insertion burst, event count
    fumble_window_ms: int = 20_000
    learner: ChildModel | None = None
    learner_start_ms: int = 0
    max_games: int | None = None
    reconnects: tuple[tuple[int, int], ...] = ()       # (at_ms, outage_ms)
    time_scale: float = 0.0                            # live-playback pacing hint only
    debounce: bool = True
    counting: str = "device"                           # "device" | "plate"
    mode: Mode = Mode.VISUAL
    concealed_after_first_attempt: bool = False
    game: GameConfig = GameConfig()

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ScenarioError("duration_ms must be positive")
        if self.sample_period_ms <= 0:
            raise ScenarioError("sample_period_ms must be positive")
        if self.counting not in ("device", "plate"):
            raise ScenarioError(f"unknown counting mode {self.counting!r}")
        for at, hold in self.grasp_schedule:
            if at < 0 or hold <= 0 or at + hold > self.duration_ms:
                raise ScenarioError(f"grasp ({at}, {hold}) outside session")
        for at, dur in self.blips:
            if at < 0 or dur <= 0 or at + dur > self.duration_ms:
                raise ScenarioError(f"blip ({at}, {dur}) outside session")
        if self.fumble_events % 2:
            raise ScenarioError("fumble_events counts touch+release frames: must be even")
        if self.fumble_events and \
                self.fumble_window_ms < (self.fumble_events // 2) * 500:
            raise ScenarioError("fumble window too small for that many grasps")
        ends = -1
        for at, dur in sorted(self.reconnects):
            if dur <= 0:
                raise ScenarioError("outage duration must be positive")
            if at <= ends:
                raise ScenarioError("outages overlap")
            ends = at + dur

    def canonical(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GameOutcome:
    pattern_no: int
    game_index: int
    attempts: int
    precision_pct: float
    mode: str


@dataclass
class SessionLog:
    device_id: str
    events: list[NotificationFrame]
    game_outcomes: list[GameOutcome]
    meta: dict = field(default_factory=dict)


# ------------------------------------------------------------- scenario io


def scenario_from_dict(raw: dict) -> Scenario:
    data = dict(raw)
    try:
        if "noise" in data and data["noise"] is not None:
            data["noise"] = NoiseModel(**data["noise"])
        if "learner" in data and data["learner"] is not None:
            data["learner"] = ChildModel(**data["learner"])
        if "game" in data and data["game"] is not None:
            data["game"] = GameConfig(**data["game"])
        if "mode" in data:
            data["mode"] = Mode(data["mode"])
        for key in ("grasp_schedule", "blips", "reconnects"):
            if key in data and data[key] is not None:
                data[key] = tuple(tuple(item) for item in data[key])
        return Scenario(**data)
    except TypeError as e:
        raise ScenarioError(str(e)) from None


def load_scenario(path: str) -> Scenario:
    import yaml
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a mapping at top level")
    return scenario_from_dict(raw)


# ------------------------------------------------------------ child play op


def synth_child_play(model: ChildModel, pattern, start_ms: int = 0,
                     games_completed: int = 0, attempt: int = 1):
    """Grasp edges for one full attempt at a pattern, as (kind, ts_ms) pairs.

    Press k lasts target_k * (1 + eps); gaps take the pattern's own gaps with
    the same style of noise. Timestamps are absolute from ``start_ms``.
    """
    from .touch import GraspEvent
    events = []
    t = start_ms
    sigma = model.sigma_at(games_completed)
    for j, (on, gap) in enumerate(pattern.notes):
        eps = _press_noise(model, attempt, j, sigma)
        dur = max(1, round(on * (1 + eps)))
        events.append(GraspEvent(GraspKind.PRESS, t))
        events.append(GraspEvent(GraspKind.RELEASE, t + dur))
        t += dur
        if j < len(pattern.notes) - 1:
            gap_eps = _gap_noise(model, games_completed, attempt, j, sigma)
            t += max(1, round(gap * (1 + gap_eps)))
    return events


def _clipped_gauss(seed: int, sigma: float) -> float:
    z = random.Random(seed).gauss(0.0, 1.0)
    return max(-NOISE_CLIP, min(NOISE_CLIP, sigma * z))


def _press_noise(model: ChildModel, attempt: int, note: int, sigma: float) -> float:
    # Keyed by (attempt, note) only: the same underlying draw is rescaled as
    # skill grows, which couples successive games (see ChildModel docstring).
    return _clipped_gauss(derive_seed(model.seed, f"z-{attempt}-{note}"), sigma)


def _gap_noise(model: ChildModel, game: int, attempt: int, note: int,
               sigma: float) -> float:
    return _clipped_gauss(
        derive_seed(model.seed, f"gap-{game}-{attempt}-{note}"), sigma)


def _reaction_draw(model: ChildModel, key: str) -> int:
    rng = random.Random(derive_seed(model.seed, f"react-{key}"))
    return max(100, round(model.reaction_ms * rng.uniform(0.7, 1.3)))


# ------------------------------------------------------------- noise model


def noise_blip_intervals(noise: NoiseModel, duration_ms: int,
                         seed: int) -> list[tuple[int, int, int]]:
    """Poisson-process blips: (start_ms, end_ms, plate)."""
    if noise.rate_per_hour <= 0:
        return []
    rng = random.Random(seed)
    rate_per_ms = noise.rate_per_hour / 3_600_000.0
    out = []
    t = 0.0
    while True:
        t += rng.expovariate(rate_per_ms)
        if t >= duration_ms:
            break
        dur = rng.randint(noise.blip_min_ms, noise.blip_max_ms)
        start = int(t)
        end = min(duration_ms, start + dur)
        if end > start:
            out.append((start, end, rng.randrange(PLATE_COUNT)))
    return out


# ---------------------------------------------------------------- the run


_CAP_EDGE, _LEARNER_EDGE, _ENGINE_WAKE = 0, 1, 2


def run_scenario(scenario: Scenario, seed: int) -> SessionLog:
    """Execute one scenario deterministically; see module docstring."""
    engine_seed = derive_seed(seed, "engine")
    noise_seed = derive_seed(seed, "noise")
    sched_seed = derive_seed(seed, "sched")

    cap_events, plate_transitions = _capacitance_pass(scenario, noise_seed, sched_seed)
    runner = _GameRunner(scenario, engine_seed)
    frames, outcomes = runner.run(cap_events)

    if scenario.counting == "plate":
        frames = _plate_frames(scenario, plate_transitions, runner.learner_edges)

    meta = {
        "scenario": scenario.name,
        "scenario_hash": scenario.digest(),
        "device_id": scenario.device_id,
        "seed": seed,
        "engine_seed": engine_seed,
        "game": asdict(scenario.game),
        "counting": scenario.counting,
        "debounce": scenario.debounce,
        "sample_period_ms": scenario.sample_period_ms,
        "concealed_after_first_attempt": scenario.concealed_after_first_attempt,
        "mode": scenario.mode.value,
        "frames": len(frames),
    }
    return SessionLog(scenario.device_id, frames, outcomes, meta)


def _quantize_up(t: int, period: int) -> int:
    return ((t + period - 1) // period) * period


def _capacitance_pass(scenario: Scenario, noise_seed: int, sched_seed: int):
    """Render scripted grasps/noise as samples and fold them to grasp events."""
    period = scenario.sample_period_ms
    intervals: list[tuple[int, int, int]] = []  # (start_tick, end_tick, plate_mask)

    rng_plates = random.Random(derive_seed(sched_seed, "plates"))
    for at, hold in scenario.grasp_schedule:
        mask = _grasp_mask(rng_plates)
        intervals.append((at, at + hold, mask))

    fumble_pairs = scenario.fumble_events // 2
    if fumble_pairs:
        spacing = max(period * 4, scenario.fumble_window_ms // max(1, fumble_pairs))
        for i in range(fumble_pairs):
            start = i * spacing
            end = min(start + 300, scenario.fumble_window_ms - period)
            intervals.append((start, end, _grasp_mask(rng_plates)))

    for at, dur in scenario.blips:
        plate = rng_plates.randrange(PLATE_COUNT)
        intervals.append((at, at + dur, 1 << plate))

    for start, end, plate in noise_blip_intervals(scenario.noise, scenario.duration_ms,
                                                  noise_seed):
        intervals.append((start, end, 1 << plate))

    # Quantize to sample ticks; drop excursions invisible at the refresh rate.
    ticked = []
    for start, end, mask in intervals:
        a = _quantize_up(start, period)
        b = _quantize_up(end, period)
        if b > a:
            ticked.append((a, b, mask))
    edge_ticks = sorted({t for a, b, _ in ticked for t in (a, b)})

    pipeline = TouchPipeline(debounce=scenario.debounce,
                             min_hold_ms=2 * period)
    events = []
    for t in edge_ticks:
        mask = 0
        for a, b, m in ticked:
            if a <= t < b:
                mask |= m
        samples = [CapacitanceSample(p, TOUCH_CAP if mask & (1 << p) else BASELINE_CAP, t)
                   for p in range(PLATE_COUNT)]
        events.extend(pipeline.process_round(samples))
    events.extend(pipeline.finish())
    return events, pipeline.transitions


def _grasp_mask(rng: random.Random) -> int:
    count = rng.choice((1, 2, 2, 3, 3, 4))
    plates = rng.sample(range(PLATE_COUNT), count)
    mask = 0
    for p in plates:
        mask |= 1 << p
    return mask


def _plate_frames(scenario: Scenario, transitions, learner_edges):
    """Per-plate counting: one frame per plate transition plus learner edges."""
    items = []
    for t in transitions:
        kind = "touch" if t.touched else "release"
        items.append((t.since_ms, t.plate, kind,
                      TOUCH_CAP if t.touched else BASELINE_CAP))
    for ts, kind in learner_edges:
        items.append((ts, DEVICE_LEVEL, "touch" if kind is GraspKind.PRESS else "release",
                      None))
    items.sort(key=lambda it: (it[0], it[1]))
    return [NotificationFrame(i + 1, scenario.device_id, ts, plate, kind, cap)
            for i, (ts, plate, kind, cap) in enumerate(items)]


def _refuse_plate_log(log: SessionLog) -> list[NotificationFrame]:
    """Rebuild the device-level grasp stream from a per-plate frame log.

    Plate transitions are re-fused (count 0 <-> >=1 crossings) and re-debounced
    with the settings recorded in the log meta; device-level frames in the log
    (learner grasps) are merged in unchanged via the same OR combination the
    original run used.
    """
    from .touch import Debouncer, GraspEvent

    period = log.meta.get("sample_period_ms", 100)
    debouncer = Debouncer(2 * period) if log.meta.get("debounce", True) else None
    plate_levels = [False] * PLATE_COUNT
    cap_edges: list[tuple[int, bool]] = []

    by_ts: dict[int, list[NotificationFrame]] = {}
    learner_edges: list[tuple[int, bool]] = []
    for f in log.events:
        if f.plate == DEVICE_LEVEL:
            learner_edges.append((f.ts_ms, f.event == "touch"))
        else:
            by_ts.setdefault(f.ts_ms, []).append(f)
    fused: list[GraspEvent] = []
    for ts in sorted(by_ts):
        before = sum(plate_levels)
        for f in by_ts[ts]:
            plate_levels[f.plate] = f.event == "touch"
        now = sum(plate_levels)
        if before == 0 and now >= 1:
            fused.append(GraspEvent(GraspKind.PRESS, ts))
        elif before >= 1 and now == 0:
            fused.append(GraspEvent(GraspKind.RELEASE, ts))
    if debouncer is not None:
        kept: list[GraspEvent] = []
        for e in fused:
            kept.extend(debouncer.feed(e))
        kept.extend(debouncer.flush())
        fused = kept
    for e in fused:
        cap_edges.append((e.ts_ms, e.kind is GraspKind.PRESS))

    # OR-combine the two grasp sources, mirroring the original run.
    edges = [(ts, up, 0) for ts, up in cap_edges] + \
            [(ts, up, 1) for ts, up in learner_edges]
    edges.sort(key=lambda e: e[0])
    cap = learner = combined = False
    out = []
    seq = 0
    for ts, up, source in edges:
        if source == 0:
            cap = up
        else:
            learner = up
        active = cap or learner
        if active != combined:
            combined = active
            seq += 1
            out.append(NotificationFrame(seq, log.device_id, ts, DEVICE_LEVEL,
                                         "touch" if active else "release"))
    return out


def replay_outcomes(log: SessionLog) -> list[GameOutcome]:
    """Re-drive the engine from a session log (touch pipeline included).

    Device-level logs feed the engine directly; per-plate logs are first
    re-fused and re-debounced. Timer ticks are fed at the engine's own wake
    deadlines, so transition timestamps are reproduced exactly and the
    outcomes must equal the log's.
    """
    meta = log.meta
    cfg = GameConfig(**meta["game"])
    engine_seed = meta["engine_seed"]
    concealed = meta.get("concealed_after_first_attempt", False)
    state = GameState(mode=Mode(meta.get("mode", "visual")))
    outcomes: list[GameOutcome] = []
    switched = False
    if meta.get("counting", "device") == "plate":
        frames = _refuse_plate_log(log)
    else:
        frames = [f for f in log.events if f.plate == DEVICE_LEVEL]

    def feed(event: GameEvent, now: int):
        nonlocal state, switched
        state, fx = step(state, event, now, cfg, engine_seed)
        for e in fx:
            if e.kind is EffectKind.PATTERN_COMPLETE:
                outcomes.append(GameOutcome(
                    e.payload["pattern_no"], e.payload["game_index"],
                    e.payload["attempts"], e.payload["precision_pct"],
                    e.mode.value))
        if concealed and not switched and (state.attempts_this_pattern > 1
                                           or state.patterns_completed > 0):
            state.mode = Mode.CONCEALED
            switched = True

    i = 0
    guard = 0
    while True:
        guard += 1
        if guard > 10_000_000:
            raise RuntimeError("replay failed to make progress")
        wake = next_wake_ms(state, cfg)
        if i < len(frames) and (wake is None or frames[i].ts_ms < wake):
            f = frames[i]
            i += 1
            feed(GameEvent.GRASP_PRESS if f.event == "touch"
                 else GameEvent.GRASP_RELEASE, f.ts_ms)
        elif wake is not None:
            feed(GameEvent.TIMER_TICK, wake)
        else:
            break
    return outcomes


class _GameRunner:
    """Event loop binding grasp edges, the engine and the synthetic child.

    The child's choreography: hold through each demonstration, let go shortly
    after it ends, then replay the pattern press by press, reacting to the
    engine after every release (advance on a match, retry from note 0 on a
    reset, re-grasp to listen after a completion).
    """

    def __init__(self, scenario: Scenario, engine_seed: int):
        self.scenario = scenario
        self.engine_seed = engine_seed
        self.config = scenario.game
        self.state = GameState(mode=scenario.mode)
        self.effects: list[Effect] = []
        self.frames: list[NotificationFrame] = []
        self.outcomes: list[GameOutcome] = []
        self.learner_edges: list[tuple[int, GraspKind]] = []
        self._heap: list[tuple[int, int, int, object]] = []
        self._push_order = 0
        self._cap_active = False
        self._learner_active = False
        self._combined = False
        self._mode_switched = False
        self._seq = 0
        self._learner = scenario.learner
        self._lstate = "idle" if self._learner is not None else "done"
        self._listening_pattern = 0

    # ----- heap helpers

    def _push(self, t: int, tag: int, item: object = None) -> None:
        self._push_order += 1
        heapq.heappush(self._heap, (t, tag, self._push_order, item))

    # ----- engine feeding

    def _engine(self, event: GameEvent, now: int) -> None:
        self.state, fx = step(self.state, event, now, self.config, self.engine_seed)
        self.effects.extend(fx)
        for e in fx:
            if e.kind is EffectKind.PATTERN_COMPLETE:
                self.outcomes.append(GameOutcome(
                    e.payload["pattern_no"], e.payload["game_index"],
                    e.payload["attempts"], e.payload["precision_pct"],
                    e.mode.value))
        if (self.scenario.concealed_after_first_attempt and not self._mode_switched
                and (self.state.attempts_this_pattern > 1
                     or self.state.patterns_completed > 0)):
            self.state.mode = Mode.CONCEALED
            self._mode_switched = True
        wake = next_wake_ms(self.state, self.config)
        if wake is not None:
            self._push(wake, _ENGINE_WAKE)

    def _emit_frame(self, ts: int, kind: str) -> None:
        self._seq += 1
        self.frames.append(NotificationFrame(
            self._seq, self.scenario.device_id, ts, DEVICE_LEVEL, kind))

    def _combine(self, now: int) -> None:
        active = self._cap_active or self._learner_active
        if active == self._combined:
            return
        self._combined = active
        if active:
            self._emit_frame(now, "touch")
            self._engine(GameEvent.GRASP_PRESS, now)
        else:
            self._emit_frame(now, "release")
            self._engine(GameEvent.GRASP_RELEASE, now)

    # ----- the loop

    def run(self, cap_events) -> tuple[list[NotificationFrame], list[GameOutcome]]:
        for e in cap_events:
            self._push(e.ts_ms, _CAP_EDGE, e.kind)
        if self._learner is not None:
            self._plan(self.scenario.learner_start_ms, GraspKind.PRESS)
        guard = 0
        while self._heap:
            guard += 1
            if guard > 5_000_000:
                raise RuntimeError("simulation failed to make progress")
            t, tag, _, item = heapq.heappop(self._heap)
            if t > self.scenario.duration_ms:
                break
            if tag == _CAP_EDGE:
                self._cap_active = item is GraspKind.PRESS
                self._combine(t)
            elif tag == _LEARNER_EDGE:
                self.learner_edges.append((t, item))
                self._learner_active = item is GraspKind.PRESS
                self._combine(t)
                self._learner_step(t, item)
            else:
                self._engine(GameEvent.TIMER_TICK, t)
                self._learner_step(t, None)
        # Close a trailing hold at session end so the log alternates cleanly.
        if self._combined:
            end = self.scenario.duration_ms
            if self._learner_active:
                self.learner_edges.append((end, GraspKind.RELEASE))
            self._cap_active = self._learner_active = False
            self._combine(end)
        return self.frames, self.outcomes

    # ----- learner choreography

    def _plan(self, t: int, kind: GraspKind) -> None:
        if self._lstate == "done":
            return
        if t > self.scenario.duration_ms:
            self._lstate = "done"
            return
        self._push(int(t), _LEARNER_EDGE, kind)

    def _games_left(self) -> bool:
        return (self.scenario.max_games is None
                or self.state.patterns_completed < self.scenario.max_games)

    def _learner_step(self, now: int, executed: GraspKind | None) -> None:
        if self._lstate == "done":
            return
        s = self.state
        model = self._learner
        if self._lstate == "idle" and executed is GraspKind.PRESS:
            self._lstate = "listening"
        if self._lstate == "listening":
            if (s.phase is Phase.DEMONSTRATING and self._learner_active
                    and self._listening_pattern != s.pattern_no):
                # A new demo started under our hand; let go shortly after it ends.
                self._listening_pattern = s.pattern_no
                self._plan(s.demo_ends_ms + RELEASE_AFTER_DEMO_MS, GraspKind.RELEASE)
            elif executed is GraspKind.RELEASE:
                # Done listening; open the first press of attempt 1.
                self._lstate = "playing"
                key = f"start-{s.pattern_no}-{s.attempts_this_pattern}"
                self._plan(now + _reaction_draw(model, key), GraspKind.PRESS)
            return
        if self._lstate != "playing" or executed is None:
            return
        if executed is GraspKind.PRESS:
            sigma = model.sigma_at(s.patterns_completed)
            note = s.next_note
            target = s.pattern.notes[note][0]
            eps = _press_noise(model, s.attempts_this_pattern, note, sigma)
            self._plan(now + max(1, round(target * (1 + eps))), GraspKind.RELEASE)
            return
        # A press just ended: react to how the engine scored it.
        if s.phase is Phase.SUCCESS_BUZZ:
            if self._games_left():
                self._lstate = "listening"
                self._plan(now + REGRASP_AFTER_SUCCESS_MS, GraspKind.PRESS)
            else:
                self._lstate = "done"
        elif s.next_note == 0:
            key = f"retry-{s.pattern_no}-{s.attempts_this_pattern}"
            self._plan(now + _reaction_draw(model, key), GraspKind.PRESS)
        else:
            sigma = model.sigma_at(s.patterns_completed)
            gap = s.pattern.notes[s.next_note - 1][1]
            eps = _gap_noise(model, s.patterns_completed + 1,
                             s.attempts_this_pattern, s.next_note, sigma)
            self._plan(now + max(1, round(gap * (1 + eps))), GraspKind.PRESS)
