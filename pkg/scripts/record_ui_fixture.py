#!/usr/bin/env python3
"""Record an effect log plus the engine's final star/face state as a fixture
for the browser client's replay test (frontend/tests/fixtures/replay.json)."""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pocketsim.game import (
    GameConfig,
    GameEvent,
    GameState,
    Phase,
    Star,
    step,
)

OUT = pathlib.Path(__file__).resolve().parents[1] / "frontend/tests/fixtures/replay.json"


def main() -> int:
    config = GameConfig()
    seed = 20_240_601
    state = GameState()
    messages = []

    def feed(event, now):
        nonlocal state
        state, fx = step(state, event, now, config, seed)
        for e in fx:
            messages.append({"type": "effect", "kind": e.kind.value,
                             "at_ms": e.at_ms, "payload": e.payload,
                             "mode": e.mode.value})

    feed(GameEvent.GRASP_PRESS, 1000)
    demo_end = 1000 + state.pattern.demo_len_ms
    feed(GameEvent.TIMER_TICK, demo_end)
    feed(GameEvent.GRASP_RELEASE, demo_end + 150)
    notes = state.pattern.notes

    # Attempt 1: first press deliberately 60% long -> reset to black stars.
    t = demo_end + 800
    feed(GameEvent.GRASP_PRESS, t)
    feed(GameEvent.GRASP_RELEASE, t + int(notes[0][0] * 1.6))
    t += int(notes[0][0] * 1.6) + 500

    # Attempt 2: two golds, then a miss.
    for j in range(2):
        feed(GameEvent.GRASP_PRESS, t)
        feed(GameEvent.GRASP_RELEASE, t + notes[j][0])
        t += notes[j][0] + notes[j][1]
    feed(GameEvent.GRASP_PRESS, t)
    feed(GameEvent.GRASP_RELEASE, t + notes[2][0] * 2)
    t += notes[2][0] * 2 + 600

    # Attempt 3: perfect run; ends in the success buzz.
    for j in range(3):
        feed(GameEvent.GRASP_PRESS, t)
        feed(GameEvent.GRASP_RELEASE, t + notes[j][0])
        t += notes[j][0] + notes[j][1]

    assert state.phase is Phase.SUCCESS_BUZZ
    fixture = {
        "messages": messages,
        "final": {
            "stars": [s.value for s in state.stars],
            "face": "smiling",
            "attempts": state.attempts_this_pattern,
            "pattern_no": state.pattern_no,
            "patterns_completed": state.patterns_completed,
        },
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixture, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT} ({len(messages)} messages, "
          f"{state.attempts_this_pattern} attempts)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
