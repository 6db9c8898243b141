#!/usr/bin/env python3
# The HTTP service end to end: create a workspace over the wire, submit
# commands (including an idempotent retry and a rejection), and tail the
# server-sent event stream. Uses only the standard library as a client.
#
# Run:  python demos/03_service_and_stream.py

import json
import tempfile
import threading
import urllib.request

from kanbanx.service import KanbanHTTPServer

data_dir = tempfile.mkdtemp(prefix="kanbanx-svc-")
server = KanbanHTTPServer(("127.0.0.1", 0), data_dir)
threading.Thread(target=server.serve_forever, daemon=True).start()
host, port = server.socket.getsockname()
base = f"http://{host}:{port}"
print(f"service listening on {base}, data in {data_dir}")


def call(method, path, body=None, headers=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(f"{base}{path}", data=data, method=method)
    req.add_header("Content-Type", "application/json")
    for k, v in (headers or {}).items():
        req.add_header(k, v)
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


status, created = call("POST", "/api/workspaces", {"id": "live", "shared_limit": 2})
print(f"created workspace: {status} {created}")

# Commands go through one endpoint; the engine's verdict maps to the status.
status, body = call(
    "POST", "/api/workspaces/live/commands", {"kind": "create_task", "title": "Story A"}
)
print(f"create_task: {status}, events {[e['kind'] for e in body['events']]}")

# Idempotency: replaying the same key returns the original response and the
# log does not grow.
for attempt in (1, 2):
    status, body = call(
        "POST",
        "/api/workspaces/live/commands",
        {"kind": "create_task", "title": "Exactly once"},
        headers={"Idempotency-Key": "retry-123"},
    )
    print(f"idempotent attempt {attempt}: {status}, clock={body['clock']}")

# A rejection: the second start would need a third active slot (limit 2 after
# the co-start arithmetic below never triggers, so force it with moves).
call("POST", "/api/workspaces/live/commands", {"kind": "create_task", "title": "Story B"})
call("POST", "/api/workspaces/live/commands", {"kind": "create_task", "title": "Story C"})
for cid in ("c1", "c2"):
    call(
        "POST",
        "/api/workspaces/live/commands",
        {"kind": "move_card", "card_id": cid, "target_column": "In Progress"},
    )
status, body = call(
    "POST",
    "/api/workspaces/live/commands",
    {"kind": "move_card", "card_id": "c3", "target_column": "In Progress"},
)
print(f"third activation: {status} {body}")  # 409 WipExceeded

# Tail the stream from the beginning; each SSE data: line is one log record.
print("\nevent stream from seq 0:")
req = urllib.request.Request(f"{base}/api/workspaces/live/events?since=0")
with urllib.request.urlopen(req, timeout=5) as stream:
    seen = 0
    while seen < 4:
        line = stream.readline().decode().strip()
        if line.startswith("data: "):
            record = json.loads(line[6:])
            print(f"  seq {record['seq']}: {record['kind']} (by {record['payload'].get('by')})")
            seen += 1

status, state = call("GET", "/api/workspaces/live")
print(f"\nfinal clock={state['clock']}, active={state['active_total']}/2")
server.shutdown()
server.server_close()
