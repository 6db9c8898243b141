"""Shared builders for the test suite."""

from __future__ import annotations

import pytest

from kanbanx import engine, new_workspace
from kanbanx.model import Workspace


def run(ws: Workspace, *commands: engine.Command) -> Workspace:
    """Apply commands that are all expected to be accepted."""
    for command in commands:
        ws, result = engine.apply(ws, command)
        assert result.accepted, f"{command.kind} rejected: {result.rejection}"
    return ws


def rejected(ws: Workspace, command: engine.Command) -> str:
    """Apply a command expected to be rejected; returns the rule name."""
    ws2, result = engine.apply(ws, command)
    assert not result.accepted, f"{command.kind} unexpectedly accepted"
    assert ws2 is ws, "rejected command must hand back the pre-state"
    assert result.events == ()
    return result.rejection[0]


def principle_ids(ws: Workspace, focus_name: str) -> list[str]:
    fb = ws.focus_by_name(focus_name)
    return sorted(fb.principles)


def card_id(ws: Workspace, title: str) -> str:
    matches = [c.id for c in ws.cards.values() if c.title == title]
    assert len(matches) == 1, f"{title!r} matched {matches}"
    return matches[0]


@pytest.fixture
def demo_ws() -> Workspace:
    """limit-3 strict workspace with one task and a Security board."""
    ws = new_workspace("demo", 3)
    return run(
        ws,
        engine.create_task("Upload survey results"),
        engine.add_focus("Security", ["Risk: assess and reduce security risk."]),
    )


@pytest.fixture
def marked_ws(demo_ws: Workspace) -> Workspace:
    """demo_ws plus an xtag extracted from the task (c1 -> c4)."""
    pid = principle_ids(demo_ws, "Security")[0]
    fb = demo_ws.focus_by_name("Security")
    return run(
        demo_ws,
        engine.extract_xtag("c1", fb.board.id, "Assess injection risk", [pid]),
    )
