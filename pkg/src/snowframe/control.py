"""Embedded HTTP control and health API.

Runs alongside the pipeline and talks to it only through the lifecycle
event queue and read-only telemetry/frame snapshots. Routes:

    GET  /health      engine health report (application/json)
    POST /sleep       request sleep; responds with the resulting state
    POST /wake        request wake
    GET  /frame.png   latest composited frame
    GET  /camera.png  latest camera frame
    GET  /config      resolved engine configuration
    GET  /console/*   operator console static bundle, when configured

When the SNOWFRAME_CONTROL_TOKEN environment variable is set, POST
routes require a matching "Authorization: Bearer <token>" header.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .engine import Engine
from .lifecycle import EngineState, EventKind

log = logging.getLogger(__name__)

TOKEN_ENV = "SNOWFRAME_CONTROL_TOKEN"


class ControlServer:
    def __init__(self, engine: Engine, port: int = 8787, host: str = "127.0.0.1",
                 console_dir: str | None = None):
        self.engine = engine
        self.console_dir = Path(console_dir).resolve() if console_dir else None
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.port = self.httpd.server_address[1]
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self.httpd.serve_forever, name="control", daemon=True
        )
        self._thread.start()
        log.info("control API listening on port %d", self.port)

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join(timeout=2.0)


def _make_handler(server: ControlServer):
    engine = server.engine

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("control: " + fmt, *args)

        def _send(self, status: int, content_type: str, body: bytes) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, payload: dict) -> None:
            self._send(status, "application/json",
                       json.dumps(payload).encode("utf-8"))

        def _authorized(self) -> bool:
            token = os.environ.get(TOKEN_ENV)
            if not token:
                return True
            header = self.headers.get("Authorization", "")
            return header == f"Bearer {token}"

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if path == "/health":
                self._send_json(200, engine.health_report())
            elif path == "/config":
                self._send_json(200, engine.config.to_dict())
            elif path == "/frame.png":
                png = engine.frame_png()
                if png is None:
                    self._send_json(404, {"error": "no frame composited yet"})
                else:
                    self._send(200, "image/png", png)
            elif path == "/camera.png":
                png = engine.camera_png()
                if png is None:
                    self._send_json(404, {"error": "no camera frame yet"})
                else:
                    self._send(200, "image/png", png)
            elif path == "/console" or path.startswith("/console/"):
                self._serve_console(path)
            else:
                self._send_json(404, {"error": f"no route {path}"})

        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if path not in ("/sleep", "/wake"):
                self._send_json(404, {"error": f"no route {path}"})
                return
            if not self._authorized():
                self._send_json(401, {"error": "missing or bad bearer token"})
                return
            if engine.state is EngineState.FAULTED:
                self._send_json(503, {
                    "error": "engine faulted",
                    "fault_reason": engine.telemetry().fault_reason,
                })
                return
            kind = EventKind.SLEEP_REQUESTED if path == "/sleep" else EventKind.WAKE_REQUESTED
            try:
                pending = engine.submit(kind, wait=True, timeout=10.0)
            except TimeoutError:
                self._send_json(503, {"error": "engine did not process the event"})
                return
            self._send_json(200, {
                "state": pending.result_state.value,
                "noop": pending.was_noop,
            })

        def _serve_console(self, path: str) -> None:
            if server.console_dir is None:
                self._send_json(404, {"error": "console not bundled"})
                return
            rel = path[len("/console"):].lstrip("/") or "index.html"
            target = (server.console_dir / rel).resolve()
            if not str(target).startswith(str(server.console_dir)) or not target.is_file():
                self._send_json(404, {"error": "not found"})
                return
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self._send(200, ctype, target.read_bytes())

    return Handler
