#!/usr/bin/env python3
"""Two-hour play-session accounting: instructed grasps per half-hour window,
false-positive candidates and relay reconnects, through the full pipeline
(virtual device -> relay with outages -> store -> report)."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pocketsim.analysis import export, grasp_window_report
from pocketsim.relay import deliver_with_outages
from pocketsim.simulate import load_scenario, run_scenario
from pocketsim.store import EventStore


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default=str(
        pathlib.Path(__file__).resolve().parents[1] / "scenarios/table1_2h.yaml"))
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--db", default=":memory:")
    parser.add_argument("--format", default="table", choices=["table", "csv"])
    args = parser.parse_args()

    scenario = load_scenario(args.scenario)
    log = run_scenario(scenario, args.seed)
    store = EventStore(args.db)
    store.create_session(scenario.name, created_ms=0)
    relay = deliver_with_outages(
        log.events, lambda frames, now: store.ingest(scenario.name, frames, now),
        outages=list(scenario.reconnects))

    touches = store.query_events(scenario.name, kind="touch")
    windows = [at for at, _ in scenario.grasp_schedule]
    report = grasp_window_report([r.ts_ms for r in touches], windows,
                                 reconnects=relay.reconnect_count)
    sys.stdout.buffer.write(export(report, args.format))
    print(f"\nframes emitted={len(log.events)} stored={store.count_events(scenario.name)} "
          f"dropped={relay.drop_count}")
    store.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
