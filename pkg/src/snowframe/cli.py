"""Kiosk command line entry point.

Typical exhibition launch:

    snowframe --config exhibition.json --source camera --sink window

Headless reproducible run (deterministic scheduler, unpaced):

    snowframe --config demo.json --source synthetic --sink dir:out \
              --seed 7 --ticks 300 --headless

Exit status: 0 on clean shutdown (signal, control API, exhausted source
or tick budget), 1 on pipeline fault, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
from pathlib import Path

from .config import ConfigError, resolve_config
from .control import ControlServer
from .engine import Engine, SimClock, WallClock
from .frames import (CameraSource, DirectorySink, DirectorySource, FrameIOError,
                     NullSink, SyntheticSource, WindowSink)
from .lifecycle import EngineState, EventKind

log = logging.getLogger("snowframe")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snowframe",
        description="Interactive snow-scene kiosk engine",
    )
    parser.add_argument("--config", required=True, metavar="PATH",
                        help="engine config file (JSON)")
    parser.add_argument("--source", default="synthetic", metavar="KIND",
                        help="synthetic | dir:PATH | camera (default synthetic)")
    parser.add_argument("--sink", default=None, metavar="KIND",
                        help="window | dir:PATH | null "
                             "(default window, or null with --headless)")
    parser.add_argument("--cascade", metavar="PATH",
                        help="cascade XML path, overrides the config")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="snowfall RNG seed, overrides the config")
    parser.add_argument("--mode", choices=("exhibition", "home"),
                        help="operating mode, overrides the config")
    parser.add_argument("--control-port", type=int, metavar="N",
                        help="control API port (forces the API on)")
    parser.add_argument("--headless", action="store_true",
                        help="never open a window; default sink becomes null")
    parser.add_argument("--ticks", type=int, metavar="N",
                        help="run N deterministic unpaced ticks, then exit")
    parser.add_argument("--synthetic-faces", type=int, default=2, metavar="N",
                        help="planted faces in the synthetic source (0-4)")
    parser.add_argument("--loop-source", action="store_true",
                        help="loop a dir: source instead of ending the run")
    parser.add_argument("--verbose", action="store_true")
    return parser


def _build_source(args, config):
    p = config.pipeline
    if args.source == "synthetic":
        return SyntheticSource(p.capture_size[0], p.capture_size[1],
                               p.capture_fps, faces=args.synthetic_faces)
    if args.source.startswith("dir:"):
        path = Path(args.source[4:])
        if not path.is_dir():
            raise ConfigError(f"source directory not found: {path}")
        return DirectorySource(path, fps=p.capture_fps, loop=args.loop_source)
    if args.source == "camera":
        return CameraSource(fps=p.capture_fps)
    raise ConfigError(f"unknown source {args.source!r}")


def _build_sink(args):
    kind = args.sink
    if kind is None:
        kind = "null" if args.headless else "window"
    if kind == "null":
        return NullSink()
    if kind == "window":
        if args.headless:
            raise ConfigError("--sink window conflicts with --headless")
        return WindowSink()
    if kind.startswith("dir:"):
        return DirectorySink(kind[4:])
    raise ConfigError(f"unknown sink {kind!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        if args.mode:
            raw["mode"] = args.mode
        if args.cascade:
            raw["cascade"] = args.cascade
        if args.seed is not None:
            raw.setdefault("snow", {})["seed"] = args.seed
        if args.control_port is not None:
            raw.setdefault("control", {})["enabled"] = True
            raw["control"]["port"] = args.control_port
        config = resolve_config(raw, base_dir=Path(args.config).parent)
    except OSError as exc:
        parser.error(f"cannot read config: {exc}")  # exits 2
    except (ConfigError, json.JSONDecodeError) as exc:
        parser.error(str(exc))

    if not config.cascade_path:
        parser.error("no cascade file configured (config key 'cascade' or --cascade)")
    if not Path(config.cascade_path).is_file():
        parser.error(f"cascade file not found: {config.cascade_path}")

    try:
        source = _build_source(args, config)
        sink = _build_sink(args)
    except ConfigError as exc:
        parser.error(str(exc))

    deterministic = args.ticks is not None
    clock = SimClock() if deterministic else WallClock()
    try:
        engine = Engine(config, source, sink, clock=clock,
                        detect_worker=not deterministic)
    except (ValueError, FrameIOError) as exc:
        parser.error(str(exc))

    control = None
    if config.control_enabled:
        control = ControlServer(engine, port=config.control_port, host="0.0.0.0",
                                console_dir=config.console_dir)
        control.start()

    def _request_shutdown(signum, _frame):
        log.info("signal %d, shutting down", signum)
        engine.submit(EventKind.SHUTDOWN_REQUESTED, wait=False)

    signal.signal(signal.SIGINT, _request_shutdown)
    signal.signal(signal.SIGTERM, _request_shutdown)

    try:
        engine.start()
        frames = engine.run(max_ticks=args.ticks)
    except FrameIOError as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return 1
    finally:
        if control is not None:
            control.stop()

    tel = engine.telemetry()
    log.info("telemetry %s", json.dumps(engine.health_report()))
    print(f"composed {frames} frames; state {tel.state}; "
          f"dropped {tel.frames_dropped}; uptime {tel.uptime_s:.1f}s")
    if engine.state is EngineState.FAULTED or tel.fault_reason:
        print(f"fault: {tel.fault_reason}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
