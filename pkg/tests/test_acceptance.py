"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
"""

import random
import statistics
import time

import pytest

from pocketsim.analysis import grasp_window_report
from pocketsim.game import (
    EffectKind,
    GameConfig,
    GameEvent,
    GameState,
    Phase,
    derive_seed,
    match_note,
    next_wake_ms,
    step,
)
from pocketsim.relay import deliver_with_outages
from pocketsim.simulate import ChildModel, Scenario, load_scenario, run_scenario
from pocketsim.store import EventStore
from pocketsim.wire import NotificationFrame, encode_frame

HOUR = 3_600_000


def verdict(name: str, ok: bool, detail: str = "") -> None:
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------


def test_match_rule_oracle_full_grid():
    tolerance = 0.40
    start = time.perf_counter()
    disagreements = 0
    grid = range(80, 2001, 10)
    for target in grid:
        lo = target - tolerance * target
        hi = target + tolerance * target
        for press in grid:
            oracle = lo <= press <= hi
            if match_note(press, target, tolerance).matched != oracle:
                disagreements += 1
    elapsed = time.perf_counter() - start
    verdict("match-rule oracle", disagreements == 0 and elapsed < 5.0,
            f"{len(grid) ** 2} pairs, {disagreements} disagreements, {elapsed:.2f}s")


def test_perfect_player_completeness():
    bad = 0
    total_games = 0
    for seed in range(1000):
        sc = Scenario(duration_ms=10 * 60_000,
                      learner=ChildModel(skill=1.0, seed=derive_seed(seed, "child")),
                      max_games=2)
        log = run_scenario(sc, seed=seed)
        if len(log.game_outcomes) != 2:
            bad += 1
            continue
        for o in log.game_outcomes:
            total_games += 1
            if o.attempts != 1 or o.precision_pct != 0.0:
                bad += 1
    verdict("perfect-player completeness", bad == 0,
            f"1000 seeds, {total_games} games, {bad} violations")


def test_table1_replication_full_pipeline():
    scenario = load_scenario("scenarios/table1_2h.yaml")
    log = run_scenario(scenario, seed=11)

    store = EventStore(":memory:")
    store.create_session("table1", created_ms=0)
    relay = deliver_with_outages(
        log.events,
        lambda frames, now: store.ingest("table1", frames, now),
        outages=list(scenario.reconnects))

    records = store.query_events("table1")
    loss_free = [r.frame() for r in records] == sorted(
        log.events, key=lambda f: (f.ts_ms, f.seq))
    touch_times = [r.ts_ms for r in store.query_events("table1", kind="touch")]
    report = grasp_window_report(
        touch_times, [0, 1_800_000, 3_600_000, 5_400_000],
        reconnects=relay.reconnect_count)
    ok = (report.events_per_window == (1, 1, 1, 1)
          and report.off_window_events == 2
          and relay.reconnect_count == 4
          and relay.drop_count == 0
          and loss_free)
    verdict("table-1 replication", ok,
            f"windows={report.events_per_window} off={report.off_window_events} "
            f"reconnects={relay.reconnect_count} dropped={relay.drop_count}")
    store.close()


def test_table2_replication_daylong_burst():
    start = time.perf_counter()
    scenario = load_scenario("scenarios/table2_8h.yaml")
    log = run_scenario(scenario, seed=3)
    store = EventStore(":memory:")
    store.create_session("table2", created_ms=0)
    deliver_with_outages(
        log.events, lambda frames, now: store.ingest("table2", frames, now))
    total = store.count_events("table2")
    early = len(store.query_events("table2", to_ms=20_000))
    elapsed = time.perf_counter() - start
    ok = total == 16 and early == 16 and elapsed < 10.0
    verdict("table-2 replication", ok,
            f"total={total} within-20s={early} wall={elapsed:.2f}s")
    store.close()


def test_learning_curve_shape():
    cohorts_ok = 0
    n_cohorts = 100
    for cohort_seed in range(n_cohorts):
        curves = []
        for i in range(18):
            sc = Scenario(
                duration_ms=100_000_000, max_games=7,
                learner=ChildModel(seed=derive_seed(cohort_seed, f"child-{i}")))
            log = run_scenario(sc, seed=derive_seed(cohort_seed, f"run-{i}"))
            curves.append([o.attempts for o in log.game_outcomes])
        assert all(len(c) == 7 for c in curves)
        means = [statistics.fmean(c[g] for c in curves) for g in range(7)]
        stds = [statistics.stdev(c[g] for c in curves) for g in range(7)]
        descending = all(a > b for a, b in zip(means, means[1:]))
        narrowing = (stds[6] <= stds[0]
                     and statistics.fmean(stds[4:]) <= statistics.fmean(stds[:3]))
        if descending and narrowing:
            cohorts_ok += 1
    verdict("learning-curve shape", cohorts_ok >= 95,
            f"{cohorts_ok}/{n_cohorts} cohorts with descending means and "
            f"narrowing spread")


def test_two_minute_session_realism():
    bad = 0
    runs = 0
    for skill in (0.5, 0.7, 1.0):
        for seed in range(40):
            sc = Scenario(
                duration_ms=140_000,
                learner=ChildModel(skill=skill, seed=derive_seed(seed, f"s{skill}")),
                concealed_after_first_attempt=True)
            log = run_scenario(sc, seed=seed)  # terminates by construction
            runs += 1
            if len(log.game_outcomes) < 1:
                bad += 1
    verdict("two-minute session realism", bad == 0,
            f"{runs} runs, {bad} without a completed game")


def test_telemetry_exactly_once():
    failures = 0
    for seed in range(50):
        rng = random.Random(derive_seed(seed, "outages"))
        n = 10_000
        frames = [NotificationFrame(i, f"dev{seed}", i * 10, -1,
                                    "touch" if i % 2 else "release")
                  for i in range(1, n + 1)]
        horizon = n * 10
        outages = []
        t = 0
        for _ in range(rng.randint(1, 6)):
            t += rng.randint(1000, horizon // 4)
            if t >= horizon:
                break
            dur = rng.randint(500, 50_000)  # max backlog 5k frames < capacity
            outages.append((t, dur))
            t += dur + 1
        store = EventStore(":memory:")
        store.create_session("x", created_ms=0)
        relay = deliver_with_outages(
            frames, lambda b, now: store.ingest("x", b, now),
            outages, batch_size=25)
        records = store.query_events("x")
        same = (relay.drop_count == 0
                and len(records) == n
                and all(encode_frame(r.frame()) == encode_frame(f)
                        for r, f in zip(records, frames)))
        if not same:
            failures += 1
        store.close()
    verdict("telemetry exactly-once", failures == 0,
            f"50 outage schedules x 10k frames, {failures} mismatches")


def test_vibration_legality():
    violations = 0
    runs = 10_000
    config = GameConfig()
    for seed in range(runs):
        rng = random.Random(derive_seed(seed, "play"))
        state = GameState()
        effects = []

        def feed(event, now):
            nonlocal state
            state, fx = step(state, event, now, config, seed)
            effects.extend(fx)

        t = rng.randrange(0, 5000)
        feed(GameEvent.GRASP_PRESS, t)
        demo_end = t + state.pattern.demo_len_ms
        feed(GameEvent.TIMER_TICK, demo_end)
        feed(GameEvent.GRASP_RELEASE, demo_end + rng.randrange(50, 400))
        t = demo_end + rng.randrange(500, 1200)
        # Noisy presses; some complete the pattern and trigger buzz + next demo.
        for _ in range(6):
            if state.phase is Phase.SUCCESS_BUZZ:
                feed(GameEvent.GRASP_PRESS, t)
                wake = next_wake_ms(state, config)
                feed(GameEvent.TIMER_TICK, wake)
                t = wake + 200
                feed(GameEvent.GRASP_RELEASE, t)
                t += rng.randrange(400, 900)
                continue
            if state.phase is not Phase.AWAITING_INPUT:
                break
            target = state.pattern.notes[state.next_note][0]
            dur = max(1, int(target * (1 + rng.uniform(-0.7, 0.7))))
            feed(GameEvent.GRASP_PRESS, t)
            feed(GameEvent.GRASP_RELEASE, t + dur)
            t += dur + rng.randrange(200, 900)

        on_at = None
        for e in sorted((e for e in effects
                         if e.kind in (EffectKind.VIBRATE_ON, EffectKind.VIBRATE_OFF)),
                        key=lambda e: (e.at_ms, e.kind is EffectKind.VIBRATE_ON)):
            if e.kind is EffectKind.VIBRATE_ON:
                if on_at is not None:
                    violations += 1  # overlap
                on_at = e.at_ms
            else:
                if on_at is None or e.at_ms - on_at < 80:
                    violations += 1
                on_at = None
    verdict("vibration legality", violations == 0,
            f"{runs} runs, {violations} violations")
