"""Rhythm-matching game engine.

The engine is a pure transition function over an explicit game state: all
time is injected through event timestamps, randomness comes from a seed, and
side effects (vibration, screen updates) are returned as a timestamped effect
list instead of being performed. Feeding the same seed, config and event
sequence always yields the same state trajectory and effect stream.

Game flow: a grasp while idle starts a session and the robot demonstrates a
randomly generated pattern of vibration notes. The player then replays the
pattern by pressing and releasing; each press duration is scored against the
corresponding note. A wrong press resets the attempt, a full match triggers a
success buzz and (while the robot is still held) the next pattern. Letting go
long enough ends the session.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from enum import Enum

# Generated note/gap durations are quantized to this grid (ms).
DURATION_TICK_MS = 10


class GameError(Exception):
    """Base class for engine errors."""


class ConfigError(GameError):
    """Invalid game configuration."""


class DomainError(GameError):
    """Operation called with out-of-domain values."""


class SequencingError(GameError):
    """Events delivered with decreasing timestamps."""


class ProtocolError(GameError):
    """Grasp press/release events out of alternation."""


class Phase(str, Enum):
    IDLE = "idle"
    DEMONSTRATING = "demonstrating"
    AWAITING_INPUT = "awaiting_input"
    SUCCESS_BUZZ = "success_buzz"


class Mode(str, Enum):
    VISUAL = "visual"
    BLINDFOLDED = "blindfolded"
    CONCEALED = "concealed"


class Star(str, Enum):
    BLACK = "black"
    GOLD = "gold"


class GameEvent(str, Enum):
    GRASP_PRESS = "grasp_press"
    GRASP_RELEASE = "grasp_release"
    TIMER_TICK = "timer_tick"


class EffectKind(str, Enum):
    VIBRATE_ON = "vibrate_on"
    VIBRATE_OFF = "vibrate_off"
    STAR_UPDATE = "star_update"
    FACE_UPDATE = "face_update"
    PATTERN_COMPLETE = "pattern_complete"
    SESSION_END = "session_end"


@dataclass(frozen=True)
class GameConfig:
    notes_per_pattern: int = 3
    note_min_ms: int = 200
    note_max_ms: int = 1000
    gap_min_ms: int = 200
    gap_max_ms: int = 800
    tolerance: float = 0.40
    actuator_floor_ms: int = 80
    success_buzz_ms: int = 3000
    session_idle_end_ms: int = 8000
    # A pause longer than this multiple of the expected gap abandons the attempt.
    gap_abandon_factor: float = 3.0

    def __post_init__(self) -> None:
        if self.notes_per_pattern < 1:
            raise ConfigError("notes_per_pattern must be >= 1")
        if not (0 < self.tolerance < 1):
            raise ConfigError("tolerance must be in (0, 1)")
        if self.note_min_ms < self.actuator_floor_ms:
            raise ConfigError(
                f"note_min_ms {self.note_min_ms} below actuator floor "
                f"{self.actuator_floor_ms}"
            )
        if self.gap_min_ms < self.actuator_floor_ms:
            raise ConfigError(
                f"gap_min_ms {self.gap_min_ms} below actuator floor "
                f"{self.actuator_floor_ms}"
            )
        if self.note_max_ms < self.note_min_ms or self.gap_max_ms < self.gap_min_ms:
            raise ConfigError("duration bounds inverted")


@dataclass(frozen=True)
class RhythmPattern:
    notes: tuple[tuple[int, int], ...]  # (on_ms, gap_ms) pairs
    seed: int

    @property
    def demo_len_ms(self) -> int:
        """Time from demo start to the last vibration-off edge."""
        total = sum(on + gap for on, gap in self.notes)
        return total - self.notes[-1][1]


@dataclass(frozen=True)
class NoteMatch:
    note_index: int
    press_ms: int
    target_ms: int
    rel_error: float
    matched: bool


@dataclass(frozen=True)
class Effect:
    kind: EffectKind
    at_ms: int
    payload: dict
    mode: Mode = Mode.VISUAL


@dataclass
class GameState:
    phase: Phase = Phase.IDLE
    mode: Mode = Mode.VISUAL
    pattern: RhythmPattern | None = None
    pattern_no: int = 0  # 1-based ordinal of the current pattern, never reset
    next_note: int = 0
    stars: tuple[Star, ...] = ()
    attempts_this_pattern: int = 0
    patterns_completed: int = 0  # completions within the current session
    matches: tuple[NoteMatch, ...] = ()
    grasped: bool = False
    press_started_ms: int | None = None
    press_eligible: bool = False
    last_release_ms: int = 0
    demo_ends_ms: int | None = None
    buzz_ends_ms: int | None = None
    in_session: bool = False
    clock_ms: int = 0


def derive_seed(base: int, label: str) -> int:
    """Stable named sub-seed so independent streams never share draws."""
    digest = hashlib.sha256(f"{base}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def pattern_seed(session_seed: int, ordinal: int) -> int:
    return derive_seed(session_seed, f"pattern-{ordinal}")


def generate_pattern(seed: int, config: GameConfig) -> RhythmPattern:
    """Draw a rhythm pattern, uniform over the configured duration grid."""
    rng = random.Random(seed)
    notes = []
    for _ in range(config.notes_per_pattern):
        on = _draw_duration(rng, config.note_min_ms, config.note_max_ms)
        gap = _draw_duration(rng, config.gap_min_ms, config.gap_max_ms)
        notes.append((on, gap))
    return RhythmPattern(notes=tuple(notes), seed=seed)


def _draw_duration(rng: random.Random, lo: int, hi: int) -> int:
    steps = (hi - lo) // DURATION_TICK_MS
    return lo + DURATION_TICK_MS * rng.randrange(steps + 1)


def match_note(
    press_ms: float, target_ms: float, tolerance: float, note_index: int = 0
) -> NoteMatch:
    """Score one press against its target note length.

    The relative error is |press - target| / target; a press matches when the
    error does not exceed the tolerance (boundary inclusive).
    """
    if press_ms <= 0 or target_ms <= 0:
        raise DomainError(f"durations must be positive: press={press_ms} target={target_ms}")
    rel_error = abs(press_ms - target_ms) / target_ms
    return NoteMatch(
        note_index=note_index,
        press_ms=press_ms,
        target_ms=target_ms,
        rel_error=rel_error,
        matched=rel_error <= tolerance,
    )


def attempt_precision(matches: list[NoteMatch] | tuple[NoteMatch, ...],
                      expected_notes: int | None = None) -> float:
    """Mean relative timing error, in percent, over one completed pattern."""
    if not matches:
        raise DomainError("no matches to score")
    if expected_notes is not None and len(matches) != expected_notes:
        raise DomainError(f"expected {expected_notes} matches, got {len(matches)}")
    if not all(m.matched for m in matches):
        raise DomainError("precision is defined only for completed patterns")
    return 100.0 * sum(m.rel_error for m in matches) / len(matches)


def step(
    state: GameState,
    event: GameEvent,
    now_ms: int,
    config: GameConfig,
    session_seed: int,
) -> tuple[GameState, list[Effect]]:
    """Advance the game by one input event, returning new state and effects.

    Effects may carry timestamps in the future of ``now_ms`` (a demonstration
    schedule is emitted in full when it starts). Events must be fed with
    nondecreasing timestamps; a second press without an intervening release is
    a protocol violation.
    """
    if now_ms < state.clock_ms:
        raise SequencingError(f"event at {now_ms} after clock {state.clock_ms}")

    s = replace(state)
    effects: list[Effect] = []
    _advance_time(s, now_ms, config, session_seed, effects)
    s.clock_ms = now_ms

    if event is GameEvent.GRASP_PRESS:
        _on_press(s, now_ms, config, session_seed, effects)
    elif event is GameEvent.GRASP_RELEASE:
        _on_release(s, now_ms, config, effects)
    # TIMER_TICK only drives the time-based transitions above.
    return s, effects


def next_wake_ms(state: GameState, config: GameConfig) -> int | None:
    """Earliest future time at which a timer tick can change the state."""
    candidates = []
    if state.phase is Phase.DEMONSTRATING and state.demo_ends_ms is not None:
        candidates.append(state.demo_ends_ms)
    if state.phase is Phase.SUCCESS_BUZZ and state.buzz_ends_ms is not None:
        candidates.append(state.buzz_ends_ms)
    if state.in_session and not state.grasped:
        candidates.append(state.last_release_ms + config.session_idle_end_ms)
    return min(candidates) if candidates else None


def _advance_time(
    s: GameState, now_ms: int, config: GameConfig, session_seed: int,
    effects: list[Effect],
) -> None:
    while True:
        if s.in_session and not s.grasped:
            idle_deadline = s.last_release_ms + config.session_idle_end_ms
            if now_ms >= idle_deadline:
                _end_session(s, idle_deadline, effects)
                continue
        if s.phase is Phase.DEMONSTRATING and now_ms >= s.demo_ends_ms:
            s.phase = Phase.AWAITING_INPUT
            s.demo_ends_ms = None
            continue
        if s.phase is Phase.SUCCESS_BUZZ and now_ms >= s.buzz_ends_ms:
            at = s.buzz_ends_ms
            s.buzz_ends_ms = None
            if s.grasped:
                # Robot still held: demonstrate the next pattern right away.
                _begin_demonstration(s, at, config, session_seed, effects)
            else:
                # Wait for a new grasp; the idle clock keeps running.
                s.phase = Phase.IDLE
                s.pattern = None
            continue
        break


def _on_press(
    s: GameState, now_ms: int, config: GameConfig, session_seed: int,
    effects: list[Effect],
) -> None:
    if s.grasped:
        raise ProtocolError(f"grasp press at {now_ms} while already grasped")
    s.grasped = True
    s.press_started_ms = now_ms
    s.press_eligible = False

    if s.phase is Phase.IDLE:
        if not s.in_session:
            s.in_session = True
            s.patterns_completed = 0
        _begin_demonstration(s, now_ms, config, session_seed, effects)
    elif s.phase is Phase.AWAITING_INPUT:
        if s.next_note > 0:
            expected_gap = s.pattern.notes[s.next_note - 1][1]
            if now_ms - s.last_release_ms > config.gap_abandon_factor * expected_gap:
                s.attempts_this_pattern += 1
                _reset_attempt(s, now_ms, effects)
        s.press_eligible = True
    # Presses during DEMONSTRATING or SUCCESS_BUZZ just hold the robot.


def _on_release(
    s: GameState, now_ms: int, config: GameConfig, effects: list[Effect]
) -> None:
    if not s.grasped:
        raise ProtocolError(f"grasp release at {now_ms} while not grasped")
    s.grasped = False
    s.last_release_ms = now_ms

    if s.press_eligible and s.phase is Phase.AWAITING_INPUT:
        press_ms = now_ms - s.press_started_ms
        target_ms = s.pattern.notes[s.next_note][0]
        m = match_note(press_ms, target_ms, config.tolerance, s.next_note)
        if m.matched:
            stars = list(s.stars)
            stars[s.next_note] = Star.GOLD
            s.stars = tuple(stars)
            s.matches = s.matches + (m,)
            s.next_note += 1
            effects.append(Effect(
                EffectKind.STAR_UPDATE, now_ms,
                {"index": m.note_index, "star": Star.GOLD.value,
                 "stars": [st.value for st in s.stars],
                 "attempts": s.attempts_this_pattern, "pattern_no": s.pattern_no},
                s.mode,
            ))
            if s.next_note == config.notes_per_pattern:
                _complete_pattern(s, now_ms, config, effects)
        else:
            s.attempts_this_pattern += 1
            _reset_attempt(s, now_ms, effects)
    s.press_started_ms = None
    s.press_eligible = False


def _begin_demonstration(
    s: GameState, at_ms: int, config: GameConfig, session_seed: int,
    effects: list[Effect],
) -> None:
    s.pattern_no += 1
    s.pattern = generate_pattern(pattern_seed(session_seed, s.pattern_no), config)
    s.phase = Phase.DEMONSTRATING
    s.next_note = 0
    s.stars = (Star.BLACK,) * config.notes_per_pattern
    s.attempts_this_pattern = 1
    s.matches = ()
    effects.append(Effect(
        EffectKind.FACE_UPDATE, at_ms, {"face": "neutral"}, s.mode))
    effects.append(Effect(
        EffectKind.STAR_UPDATE, at_ms,
        {"index": None, "star": None, "stars": [st.value for st in s.stars],
         "attempts": s.attempts_this_pattern, "pattern_no": s.pattern_no},
        s.mode,
    ))
    t = at_ms
    for i, (on, gap) in enumerate(s.pattern.notes):
        effects.append(Effect(EffectKind.VIBRATE_ON, t, {"source": "note", "note": i}, s.mode))
        effects.append(Effect(EffectKind.VIBRATE_OFF, t + on, {"source": "note", "note": i}, s.mode))
        t += on + gap
    s.demo_ends_ms = at_ms + s.pattern.demo_len_ms


def _reset_attempt(s: GameState, now_ms: int, effects: list[Effect]) -> None:
    s.next_note = 0
    s.matches = ()
    s.stars = (Star.BLACK,) * len(s.stars)
    effects.append(Effect(
        EffectKind.STAR_UPDATE, now_ms,
        {"index": None, "star": None, "stars": [st.value for st in s.stars],
         "attempts": s.attempts_this_pattern, "pattern_no": s.pattern_no},
        s.mode,
    ))


def _complete_pattern(
    s: GameState, now_ms: int, config: GameConfig, effects: list[Effect]
) -> None:
    s.patterns_completed += 1
    precision = attempt_precision(s.matches, config.notes_per_pattern)
    effects.append(Effect(
        EffectKind.PATTERN_COMPLETE, now_ms,
        {"pattern_no": s.pattern_no,
         "game_index": s.patterns_completed,
         "attempts": s.attempts_this_pattern,
         "precision_pct": precision},
        s.mode,
    ))
    effects.append(Effect(EffectKind.FACE_UPDATE, now_ms, {"face": "smiling"}, s.mode))
    effects.append(Effect(EffectKind.VIBRATE_ON, now_ms, {"source": "buzz"}, s.mode))
    effects.append(Effect(
        EffectKind.VIBRATE_OFF, now_ms + config.success_buzz_ms, {"source": "buzz"}, s.mode))
    s.phase = Phase.SUCCESS_BUZZ
    s.buzz_ends_ms = now_ms + config.success_buzz_ms


def _end_session(s: GameState, at_ms: int, effects: list[Effect]) -> None:
    effects.append(Effect(
        EffectKind.SESSION_END, at_ms,
        {"patterns_completed": s.patterns_completed}, s.mode))
    s.phase = Phase.IDLE
    s.in_session = False
    s.pattern = None
    s.next_note = 0
    s.stars = ()
    s.matches = ()
    s.attempts_this_pattern = 0
    s.demo_ends_ms = None
    s.buzz_ends_ms = None
