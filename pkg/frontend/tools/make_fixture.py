#!/usr/bin/env python3
"""Regenerates test/fixtures/scripted.json: a fixed snapshot + event sequence
produced by the real engine, which the frontend tests replay as a scripted
server. Run from the frontend/ directory (the engine package must be
importable, e.g. pip install -e ..)."""

from __future__ import annotations

import json
from pathlib import Path

from kanbanx import engine, new_workspace
from kanbanx.service import workspace_view

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "scripted.json"


def main() -> None:
    ws = new_workspace("scripted", 3, workspace_id="scripted")
    snapshot = workspace_view(ws)
    snapshot.pop("state", None)  # the UI consumes the view, not the raw state

    events = []

    def apply(command):
        nonlocal ws
        ws, result = engine.apply(ws, command)
        assert result.accepted, result.rejection
        events.extend(
            {"seq": ev.seq, "kind": ev.kind, "payload": ev.payload, "wall_time": None}
            for ev in result.events
        )

    apply(engine.create_task("Upload survey results"))
    apply(engine.create_task("Render dashboard"))
    apply(engine.add_focus("Security", ["Risk: assess exposure.", "Vulnerabilities: fix them."]))
    fb = ws.focus_by_name("Security")
    risk = sorted(fb.principles)[0]
    apply(engine.extract_xtag("c1", fb.board.id, "Assess injection risk", [risk]))
    apply(engine.start_task("c1"))  # co-starts the tag: WIP 2/3
    apply(engine.complete_xtag("c6", [("Sanitize inputs", ""), ("Escape output", "")]))
    apply(engine.move_card("c2", "In Progress"))  # WIP back to 2/3

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps({"snapshot": snapshot, "events": events}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {OUT} ({len(events)} events, final clock {ws.clock})")


if __name__ == "__main__":
    main()
