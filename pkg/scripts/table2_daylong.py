#!/usr/bin/env python3
"""Eight-hour full-day session: all touch events arrive in the first twenty
seconds (pocket-insertion fumbling), nothing afterwards."""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pocketsim.simulate import load_scenario, run_scenario
from pocketsim.store import EventStore
from pocketsim.relay import deliver_with_outages


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default=str(
        pathlib.Path(__file__).resolve().parents[1] / "scenarios/table2_8h.yaml"))
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    started = time.perf_counter()
    scenario = load_scenario(args.scenario)
    log = run_scenario(scenario, args.seed)
    store = EventStore(":memory:")
    store.create_session(scenario.name, created_ms=0)
    deliver_with_outages(
        log.events, lambda frames, now: store.ingest(scenario.name, frames, now))
    total = store.count_events(scenario.name)
    early = len(store.query_events(scenario.name, to_ms=20_000))
    elapsed = time.perf_counter() - started

    print(f"session length      : {scenario.duration_ms / 3_600_000:.0f} h (virtual)")
    print(f"total touch events  : {total}")
    print(f"within first 20 s   : {early}")
    print(f"wall time           : {elapsed:.3f} s")
    store.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
