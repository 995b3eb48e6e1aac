#!/usr/bin/env python3
"""Cohort learning curve: mean and stdev of attempts per game for a cohort of
synthetic children improving as they complete games."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pocketsim.analysis import export, learning_curve
from pocketsim.game import derive_seed
from pocketsim.simulate import ChildModel, Scenario, run_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cohort-seed", type=int, default=0)
    parser.add_argument("--children", type=int, default=18)
    parser.add_argument("--games", type=int, default=7)
    parser.add_argument("--skill", type=float, default=0.0)
    parser.add_argument("--learning-rate", type=float, default=0.12)
    parser.add_argument("--format", default="table", choices=["table", "csv"])
    args = parser.parse_args()

    cohort = []
    for i in range(args.children):
        scenario = Scenario(
            duration_ms=100_000_000,
            device_id=f"child-{i}",
            max_games=args.games,
            learner=ChildModel(
                skill=args.skill,
                learning_rate=args.learning_rate,
                seed=derive_seed(args.cohort_seed, f"child-{i}")))
        cohort.append(run_scenario(scenario, seed=derive_seed(args.cohort_seed, f"run-{i}")))

    curve = learning_curve(cohort)
    sys.stdout.buffer.write(export(curve, args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
