import json
import pathlib

from pocketsim.cli import main
from pocketsim.store import EventStore
from pocketsim.wire import decode_frames

ROOT = pathlib.Path(__file__).resolve().parents[1]


def test_run_ingest_analyze_windows(tmp_path, capsys):
    out = tmp_path / "frames.ndjson"
    meta = tmp_path / "meta.json"
    db = tmp_path / "events.db"

    rc = main(["run", "--scenario", str(ROOT / "scenarios/table1_2h.yaml"),
               "--seed", "7", "--out", str(out), "--meta-out", str(meta)])
    assert rc == 0
    frames = decode_frames(out.read_bytes())
    assert len(frames) == 12  # 4 grasps + 2 blips, touch+release each

    rc = main(["ingest", "--db", str(db), "--session", "t1",
               "--log", str(out), "--meta", str(meta),
               "--outages", "900000:60000,2700000:60000,4200000:60000,6300000:60000"])
    assert rc == 0

    store = EventStore(str(db))
    assert store.count_events("t1") == 12
    assert store.session_meta("t1")["reconnects"] == 4
    store.close()

    capsys.readouterr()
    rc = main(["analyze", "--db", str(db), "--session", "t1",
               "--report", "windows", "--format", "csv",
               "--windows", "0,1800000,3600000,5400000"])
    assert rc == 0
    got = capsys.readouterr().out
    assert "0,1\n" in got
    assert "1800000,1" in got
    assert "off_window,2" in got
    assert "reconnects,4" in got


def test_run_learner_then_curve_and_precision(tmp_path, capsys):
    db = tmp_path / "events.db"
    for i in range(3):
        # Device ids must be unique per stream: dedup keys on (device_id, seq).
        scenario = tmp_path / f"learner{i}.yaml"
        scenario.write_text(
            f"name: mini\nduration_ms: 600000\nmax_games: 3\n"
            f"device_id: child{i}\nlearner: {{skill: 1.0, seed: 3}}\n")
        out = tmp_path / f"f{i}.ndjson"
        meta = tmp_path / f"m{i}.json"
        assert main(["run", "--scenario", str(scenario), "--seed", str(i),
                     "--out", str(out), "--meta-out", str(meta)]) == 0
        assert main(["ingest", "--db", str(db), "--session", f"child{i}",
                     "--log", str(out), "--meta", str(meta)]) == 0

    capsys.readouterr()
    assert main(["analyze", "--db", str(db), "--report", "curve",
                 "--format", "csv"]) == 0
    got = capsys.readouterr().out
    assert got.splitlines()[0] == "game,mean_attempts,stdev_attempts,n"
    assert "1,1.0000,0.0000,3" in got

    assert main(["analyze", "--db", str(db), "--report", "precision",
                 "--format", "table"]) == 0
    got = capsys.readouterr().out
    assert "0.0000" in got


def test_analyze_errors_cleanly(tmp_path, capsys):
    db = tmp_path / "empty.db"
    EventStore(str(db)).close()
    rc = main(["analyze", "--db", str(db), "--report", "curve"])
    assert rc == 2
    assert "no sessions" in capsys.readouterr().err


def test_meta_outcomes_written(tmp_path):
    scenario = tmp_path / "s.yaml"
    scenario.write_text(
        "duration_ms: 300000\nmax_games: 1\nlearner: {skill: 1.0, seed: 1}\n")
    out = tmp_path / "f.ndjson"
    meta = tmp_path / "m.json"
    main(["run", "--scenario", str(scenario), "--seed", "5",
          "--out", str(out), "--meta-out", str(meta)])
    data = json.loads(meta.read_text())
    assert data["game_outcomes"][0]["attempts"] == 1
    assert data["scenario_hash"]
