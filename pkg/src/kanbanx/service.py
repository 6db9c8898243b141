"""HTTP service: command submission, state reads, metrics, live event stream.

Built on ``http.server`` (threaded). All writes to one workspace are applied
under that workspace's lock, in arrival order, and are durable in the event
log before the response is sent; reads serve the latest immutable snapshot
without blocking the writer. The event stream is one-way server-sent events,
resumable via ``?since=seq``.

Engine rejections map to 409 with the rule name, malformed requests to 400,
unknown ids to 404.
"""

from __future__ import annotations

import json
import mimetypes
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import engine, metrics
from .errors import (
    InvalidPolicy,
    KanbanError,
    MalformedCommand,
    UnknownCard,
    UnknownFocus,
)
from .events import Event, event_to_json
from .model import Workspace, workspace_checksum, workspace_to_dict
from .store import EventLog, load_workspace

KEEPALIVE_SECONDS = 15.0


class WorkspaceHandle:
    """One workspace's log, latest snapshot, and write serialization."""

    def __init__(self, log: EventLog, ws: Workspace):
        self.log = log
        self.ws = ws
        self.lock = threading.Lock()
        self.new_events = threading.Condition()
        self.idempotency: dict[str, tuple[int, dict]] = {}

    def submit(self, command: engine.Command, idem_key: Optional[str]) -> tuple[int, dict]:
        """Apply one command serially; returns (http status, body)."""
        with self.lock:
            if idem_key is not None and idem_key in self.idempotency:
                return self.idempotency[idem_key]
            ws2, result = engine.apply(self.ws, command)
            if result.accepted:
                self.log.append_all(result.events)
                self.ws = ws2
                response = (
                    200,
                    {
                        "accepted": True,
                        "clock": ws2.clock,
                        "events": [_event_dict(ev) for ev in result.events],
                        "warnings": list(result.warnings),
                    },
                )
                with self.new_events:
                    self.new_events.notify_all()
            else:
                rule, message = result.rejection
                response = (409, {"rule": rule, "message": message})
            if idem_key is not None:
                self.idempotency[idem_key] = response
            return response


class KanbanService:
    """Owns the data directory and the per-workspace handles."""

    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        self._handles: dict[str, WorkspaceHandle] = {}
        self._lock = threading.Lock()

    def create_workspace(self, config: dict) -> dict:
        ws_id = config.get("id") or f"w{uuid.uuid4().hex[:8]}"
        if not isinstance(ws_id, str):
            raise MalformedCommand("workspace id must be a string")
        name = config.get("name", ws_id)
        shared_limit = config.get("shared_limit", 3)
        per_board = config.get("per_board_limits") or {}
        completion = config.get("completion_policy", "strict")
        if not isinstance(shared_limit, int) or isinstance(shared_limit, bool):
            raise InvalidPolicy("shared_limit must be an integer")
        if not isinstance(per_board, dict):
            raise InvalidPolicy("per_board_limits must be a map")
        with self._lock:
            directory = self.data_dir / ws_id
            if ws_id in self._handles or (directory / "events.log").exists():
                raise FileExistsError(ws_id)
            from .model import WipPolicy

            log, ws = EventLog.create(
                directory,
                name=name,
                wip_policy=WipPolicy(shared_limit, dict(per_board)),
                completion_policy=completion,
                workspace_id=ws_id,
            )
            self._handles[ws_id] = WorkspaceHandle(log, ws)
        return {"id": ws_id, "clock": ws.clock}

    def handle_for(self, ws_id: str) -> Optional[WorkspaceHandle]:
        with self._lock:
            handle = self._handles.get(ws_id)
            if handle is None:
                directory = self.data_dir / ws_id
                if not (directory / "events.log").is_file():
                    return None
                log, ws = load_workspace(directory)
                handle = WorkspaceHandle(log, ws)
                self._handles[ws_id] = handle
            return handle


def _event_dict(ev: Event) -> dict:
    return {"seq": ev.seq, "kind": ev.kind, "payload": ev.payload, "wall_time": ev.wall_time}


def workspace_view(ws: Workspace) -> dict:
    """Board-oriented projection used by the UI and CLI structured output."""
    boards = []
    for i, board in enumerate(ws.boards()):
        fb = ws.focus_board(board.id)
        boards.append(
            {
                "id": board.id,
                "name": board.name,
                "type": "dev" if i == 0 else "focus",
                "focus_name": fb.focus_name if fb else None,
                "columns": [
                    {
                        "name": col.name,
                        "stage": col.stage.value,
                        "cards": [
                            _card_view(ws, cid) for cid in board.cards.get(col.name, ())
                        ],
                    }
                    for col in board.columns
                ],
                "principles": [
                    {
                        "id": p.id,
                        "statement": p.statement,
                        "version": p.version,
                        "retired": p.retired,
                    }
                    for p in sorted(fb.principles.values(), key=lambda p: p.id)
                ]
                if fb
                else [],
            }
        )
    return {
        "id": ws.id,
        "name": ws.name,
        "clock": ws.clock,
        "completion_policy": ws.completion_policy,
        "wip_policy": {
            "shared_limit": ws.wip_policy.shared_limit,
            "per_board_limits": dict(ws.wip_policy.per_board_limits),
        },
        "active_total": ws.total_active(),
        "boards": boards,
        "marks": [
            {"dev_card": m.dev_card, "xtag": m.xtag, "created_at": m.created_at, "note": m.note}
            for m in ws.marks
        ],
        "checksum": workspace_checksum(ws),
        "state": workspace_to_dict(ws),
    }


def _card_view(ws: Workspace, card_id: str) -> dict:
    c = ws.cards[card_id]
    return {
        "id": c.id,
        "kind": c.kind.value,
        "title": c.title,
        "description": c.description,
        "focus_id": c.focus_id,
        "origin_xtag": c.origin_xtag,
        "created_at": c.created_at,
        "started_at": c.started_at,
        "done_at": c.done_at,
        "marks": [m.xtag for m in ws.marks_for_dev(card_id)]
        + [m.dev_card for m in ws.marks_for_xtag(card_id)],
        "principles": list(ws.principle_links.get(card_id, ())),
    }


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "kanbanx"

    # the ThreadingHTTPServer subclass carries .service and .verbose

    @property
    def service(self) -> KanbanService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # noqa: D102 - quiet unless asked
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    # -- plumbing ---------------------------------------------------------

    def _send_json(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self) -> None:  # noqa: N802 - CORS preflight
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except ValueError as exc:
            raise MalformedCommand(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise MalformedCommand("request body must be a JSON object")
        return body

    def _segments(self) -> tuple[list[str], dict]:
        parsed = urlparse(self.path)
        segments = [s for s in parsed.path.split("/") if s]
        query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
        return segments, query

    # -- routes -----------------------------------------------------------

    def do_POST(self) -> None:  # noqa: N802 - http.server API
        segments, _ = self._segments()
        try:
            if segments == ["api", "workspaces"]:
                self._create_workspace()
            elif len(segments) == 4 and segments[:2] == ["api", "workspaces"] and segments[
                3
            ] == "commands":
                self._submit_command(segments[2])
            else:
                self._send_json(404, {"rule": "UnknownRoute", "message": self.path})
        except MalformedCommand as exc:
            self._send_json(400, {"rule": exc.rule, "message": exc.message})
        except InvalidPolicy as exc:
            self._send_json(400, {"rule": exc.rule, "message": exc.message})
        except FileExistsError as exc:
            self._send_json(409, {"rule": "DuplicateWorkspace", "message": str(exc)})
        except KanbanError as exc:
            self._send_json(500, {"rule": exc.rule, "message": exc.message})

    def do_GET(self) -> None:  # noqa: N802
        segments, query = self._segments()
        if segments[:1] != ["api"]:
            self._serve_static(segments)
            return
        if len(segments) < 3 or segments[:2] != ["api", "workspaces"]:
            self._send_json(404, {"rule": "UnknownRoute", "message": self.path})
            return
        handle = self.service.handle_for(segments[2])
        if handle is None:
            self._send_json(404, {"rule": "UnknownWorkspace", "message": segments[2]})
            return
        rest = segments[3:]
        try:
            if not rest:
                self._send_json(200, workspace_view(handle.ws))
            elif rest == ["events"]:
                self._stream_events(handle, query)
            elif rest == ["metrics", "coverage"]:
                self._coverage(handle, query)
            elif rest == ["metrics", "flow"]:
                self._flow(handle, query)
            elif len(rest) == 2 and rest[0] == "trace":
                self._trace(handle, rest[1])
            else:
                self._send_json(404, {"rule": "UnknownRoute", "message": self.path})
        except MalformedCommand as exc:
            self._send_json(400, {"rule": exc.rule, "message": exc.message})

    def _serve_static(self, segments: list[str]) -> None:
        """Optional board UI hosting from --ui-dir; /api stays the real surface."""
        ui_dir = getattr(self.server, "ui_dir", None)
        if ui_dir is None:
            self._send_json(404, {"rule": "UnknownRoute", "message": self.path})
            return
        target = Path(ui_dir).resolve() / "/".join(segments or ["public", "index.html"])
        target = target.resolve()
        if not str(target).startswith(str(Path(ui_dir).resolve())) or not target.is_file():
            self._send_json(404, {"rule": "UnknownRoute", "message": self.path})
            return
        data = target.read_bytes()
        self.send_response(200)
        mime = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_header("Content-Type", mime)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _create_workspace(self) -> None:
        config = self._read_body()
        created = self.service.create_workspace(config)
        self._send_json(201, created)

    def _submit_command(self, ws_id: str) -> None:
        handle = self.service.handle_for(ws_id)
        if handle is None:
            self._send_json(404, {"rule": "UnknownWorkspace", "message": ws_id})
            return
        body = self._read_body()
        idem_key = self.headers.get("Idempotency-Key") or body.pop("idempotency_key", None)
        kind = body.pop("kind", None)
        if not isinstance(kind, str):
            raise MalformedCommand("command body needs a string 'kind'")
        issued_at = body.pop("issued_at", None)
        command = engine.Command(kind, body, issued_at)
        status, response = handle.submit(command, idem_key)
        self._send_json(status, response)

    def _coverage(self, handle: WorkspaceHandle, query: dict) -> None:
        ws = handle.ws
        focus = query.get("focus", "")
        fb = ws.focus_board(focus) or ws.focus_by_name(focus)
        if fb is None:
            self._send_json(404, {"rule": UnknownFocus.rule, "message": focus})
            return
        value = metrics.coverage_ratio(ws, fb.board.id)
        self._send_json(
            200, {"focus": fb.board.id, "focus_name": fb.focus_name, "coverage": value}
        )

    def _flow(self, handle: WorkspaceHandle, query: dict) -> None:
        try:
            window = int(query.get("window", "10"))
        except ValueError as exc:
            raise MalformedCommand("window must be an integer") from exc
        if window < 1:
            raise MalformedCommand("window must be >= 1")
        flow = metrics.flow_metrics(handle.log.events(), window=window)
        self._send_json(200, flow.to_dict())

    def _trace(self, handle: WorkspaceHandle, card_id: str) -> None:
        try:
            graph = metrics.trace(handle.ws, card_id)
        except UnknownCard as exc:
            self._send_json(404, {"rule": exc.rule, "message": exc.message})
            return
        self._send_json(200, graph.to_dict())

    def _stream_events(self, handle: WorkspaceHandle, query: dict) -> None:
        since_raw = query.get("since", "0")
        try:
            since = int(since_raw)
        except ValueError as exc:
            raise MalformedCommand("since must be an integer >= 0") from exc
        if since < 0:
            raise MalformedCommand("since must be an integer >= 0")
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Transfer-Encoding", "chunked")
        self.send_header("Connection", "close")
        self.end_headers()

        def chunk(data: bytes) -> None:
            # chunked framing keeps streaming clients unbuffered under HTTP/1.1
            self.wfile.write(f"{len(data):X}\r\n".encode("ascii") + data + b"\r\n")
            self.wfile.flush()

        last = since
        try:
            while True:
                for ev in handle.log.events_since(last):
                    chunk(f"id: {ev.seq}\ndata: {event_to_json(ev)}\n\n".encode("utf-8"))
                    last = ev.seq
                with handle.new_events:
                    handle.new_events.wait(timeout=KEEPALIVE_SECONDS)
                if handle.log.last_seq == last:
                    # nothing new: probe the socket so dead clients release the thread
                    chunk(b": keep-alive\n\n")
        except (BrokenPipeError, ConnectionResetError, ValueError):
            return


class KanbanHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        data_dir: Path | str,
        verbose: bool = False,
        ui_dir: Optional[Path | str] = None,
    ):
        super().__init__(address, ApiHandler)
        self.service = KanbanService(data_dir)
        self.verbose = verbose
        self.ui_dir = ui_dir


def make_server(data_dir: Path | str, host: str = "127.0.0.1", port: int = 0) -> KanbanHTTPServer:
    return KanbanHTTPServer((host, port), data_dir)


def serve(
    data_dir: Path | str,
    host: str,
    port: int,
    verbose: bool = False,
    ui_dir: Optional[Path | str] = None,
) -> None:
    server = KanbanHTTPServer((host, port), data_dir, verbose=verbose, ui_dir=ui_dir)
    addr = server.socket.getsockname()
    print(f"kanbanx service on http://{addr[0]}:{addr[1]} (data: {data_dir})")
    if ui_dir:
        print(f"board UI at http://{addr[0]}:{addr[1]}/ (from {ui_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
