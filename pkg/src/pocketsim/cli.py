"""Command line interface.

    pocketsim run      --scenario FILE --seed N --out frames.ndjson
    pocketsim ingest   --db store.db --session ID --log frames.ndjson
    pocketsim analyze  --db store.db --session ID --report windows|curve|precision
    pocketsim serve    --db store.db [--host H] [--port P] [--ui DIR]

`run` executes a scenario and writes the notification-frame log; `ingest`
replays a frame log into the store through the store-and-forward relay
(optionally with scripted outages); `analyze` reproduces the event-accounting
reports from stored sessions; `serve` starts the HTTP/WebSocket service.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, simulate
from .relay import deliver_with_outages
from .store import EventStore
from .wire import decode_frames, encode_frames


def _parse_outages(text: str) -> list[tuple[int, int]]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        at, _, dur = part.partition(":")
        out.append((int(at), int(dur)))
    return out


def cmd_run(args) -> int:
    scenario = simulate.load_scenario(args.scenario)
    log = simulate.run_scenario(scenario, args.seed)
    with open(args.out, "wb") as fh:
        fh.write(encode_frames(log.events))
    meta = dict(log.meta)
    meta["game_outcomes"] = [vars(o) for o in log.game_outcomes]
    if args.meta_out:
        with open(args.meta_out, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    print(f"{scenario.name}: {len(log.events)} frames, "
          f"{len(log.game_outcomes)} completed games -> {args.out}")
    return 0


def cmd_ingest(args) -> int:
    with open(args.log, "rb") as fh:
        frames = decode_frames(fh.read())
    store = EventStore(args.db)
    meta = {}
    if args.meta:
        with open(args.meta) as fh:
            meta = json.load(fh)
    store.create_session(args.session, meta=meta)
    outages = _parse_outages(args.outages) if args.outages else []
    relay = deliver_with_outages(
        frames, lambda batch, now: store.ingest(args.session, batch, now),
        outages, batch_size=args.batch_size)
    store.update_session_meta(args.session, {
        "reconnects": relay.reconnect_count,
        "dropped_frames": relay.drop_count,
    })
    print(f"ingested {len(frames)} frames into {args.session} "
          f"(reconnects={relay.reconnect_count}, dropped={relay.drop_count})")
    store.close()
    return 0


def _session_log(store: EventStore, session_id: str) -> simulate.SessionLog:
    meta = store.session_meta(session_id)
    records = store.query_events(session_id)
    frames = [r.frame() for r in records]
    log = simulate.SessionLog(meta.get("device_id", "unknown"), frames, [], meta)
    if "engine_seed" in meta and "game" in meta:
        log.game_outcomes = simulate.replay_outcomes(log)
    return log


def cmd_analyze(args) -> int:
    store = EventStore(args.db)
    sessions = args.session or store.list_sessions()
    if not sessions:
        print("no sessions in store", file=sys.stderr)
        return 2
    try:
        if args.report == "windows":
            session = sessions[0]
            records = store.query_events(session, kind="touch")
            windows = [int(w) for w in args.windows.split(",")] if args.windows else [0]
            meta = store.session_meta(session)
            report = analysis.grasp_window_report(
                [r.ts_ms for r in records], windows,
                tolerance_ms=args.tolerance_ms,
                reconnects=meta.get("reconnects", 0))
        elif args.report == "curve":
            cohort = [_session_log(store, s) for s in sessions]
            report = analysis.learning_curve(cohort)
        elif args.report == "precision":
            cohort = [_session_log(store, s) for s in sessions]
            report = analysis.precision_stats(cohort, phase=args.phase)
        else:  # pragma: no cover - argparse restricts choices
            raise analysis.AnalysisError(args.report)
    except analysis.AnalysisError as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return 2
    finally:
        store.close()
    sys.stdout.buffer.write(analysis.export(report, args.format))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app
    store = EventStore(args.db)
    stream_server = None
    if args.stream_port is not None:
        from .stream import FrameStreamServer
        stream_server = FrameStreamServer(store, host=args.host,
                                          port=args.stream_port)
        stream_server.start()
        print(f"frame stream listening on {stream_server.address[0]}:"
              f"{stream_server.address[1]}")
    app = create_app(store, ui_dir=args.ui)
    try:
        uvicorn.run(app, host=args.host, port=args.port)
    finally:
        if stream_server is not None:
            stream_server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pocketsim", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its frame log")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--meta-out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ingest", help="deliver a frame log into an event store")
    p.add_argument("--db", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--meta", help="session meta json (e.g. from run --meta-out)")
    p.add_argument("--outages", help="scripted outages as at:dur,at:dur (ms)")
    p.add_argument("--batch-size", type=int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="report on stored sessions")
    p.add_argument("--db", required=True)
    p.add_argument("--session", action="append",
                   help="session id (repeatable; default: all)")
    p.add_argument("--report", required=True,
                   choices=["windows", "curve", "precision"])
    p.add_argument("--format", default="table", choices=["csv", "table"])
    p.add_argument("--windows", help="comma-separated window starts (ms)")
    p.add_argument("--tolerance-ms", type=int,
                   default=analysis.DEFAULT_WINDOW_TOLERANCE_MS)
    p.add_argument("--phase", help="filter precision by mode")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="start the ingestion/live-play server")
    p.add_argument("--db", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--stream-port", type=int,
                   help="also accept newline-delimited frames on this TCP port")
    p.add_argument("--ui", help="static directory for the browser client")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
