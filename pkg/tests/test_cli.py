"""CLI: exit codes, rendering, presets, export/import round-trip."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from kanbanx import replay, workspace_checksum
from kanbanx.events import event_from_json


def kanbanx(tmp_path, *args, stdin=None):
    return subprocess.run(
        [sys.executable, "-m", "kanbanx", "--data-dir", str(tmp_path / "data"), *args],
        capture_output=True,
        text=True,
        input=stdin,
        timeout=60,
    )


@pytest.fixture
def seeded(tmp_path):
    assert kanbanx(tmp_path, "init", "demo", "--limit", "3").returncode == 0
    assert kanbanx(tmp_path, "task", "Upload survey results").returncode == 0
    assert kanbanx(tmp_path, "focus", "Security", "--principle", "Risk").returncode == 0
    out = kanbanx(tmp_path, "board", "--output", "structured")
    state = json.loads(out.stdout)["state"]
    focus_id = state["focus_boards"][0]["board"]["id"]
    pid = state["focus_boards"][0]["principles"][0]["id"]
    r = kanbanx(
        tmp_path, "extract", "c1", "Security", "Assess injection risk", "--principle", pid
    )
    assert r.returncode == 0, r.stderr
    return tmp_path, focus_id, pid


def test_init_then_board(tmp_path):
    r = kanbanx(tmp_path, "init", "demo")
    assert r.returncode == 0
    r = kanbanx(tmp_path, "board")
    assert r.returncode == 0
    assert "Development" in r.stdout
    assert "Backlog" in r.stdout


def test_engine_rejection_exits_2_with_rule(seeded):
    tmp_path, _, _ = seeded
    assert kanbanx(tmp_path, "set-policy", "--limit", "1").returncode == 0
    r = kanbanx(tmp_path, "start", "c1")  # needs 2 slots for the co-start
    assert r.returncode == 2
    assert "WipExceeded" in r.stderr


def test_usage_error_exits_1(tmp_path):
    r = kanbanx(tmp_path, "task", "T")  # no workspace yet
    assert r.returncode == 1
    r = kanbanx(tmp_path, "definitely-not-a-command")
    assert r.returncode == 1


def test_preset_apply_shows_in_board(tmp_path):
    assert kanbanx(tmp_path, "init", "demo").returncode == 0
    r = kanbanx(tmp_path, "preset", "apply", "sustainability")
    assert r.returncode == 0
    out = kanbanx(tmp_path, "board")
    assert "Sustainability" in out.stdout
    assert out.stdout.count("Team Code Ownership") == 1
    listing = kanbanx(tmp_path, "principle", "list")
    assert len(listing.stdout.strip().splitlines()) == 3


def test_preset_list_and_show(tmp_path):
    r = kanbanx(tmp_path, "preset", "list")
    assert r.stdout.split() == ["performance", "security", "sustainability"]
    r = kanbanx(tmp_path, "preset", "show", "performance")
    assert "Resource Management" in r.stdout


def test_full_workflow_through_cli(seeded):
    tmp_path, _, _ = seeded
    assert kanbanx(tmp_path, "start", "c1").returncode == 0
    r = kanbanx(tmp_path, "done-task", "c1")
    assert r.returncode == 2 and "GateBlocked" in r.stderr
    assert kanbanx(tmp_path, "done-xtag", "c4", "--change", "Sanitize::all inputs").returncode == 0
    out = kanbanx(tmp_path, "board")
    assert "Sanitize" in out.stdout
    assert kanbanx(tmp_path, "done-task", "c1").returncode == 0


def test_export_import_round_trip(seeded):
    tmp_path, _, _ = seeded
    kanbanx(tmp_path, "start", "c1")
    exported = kanbanx(tmp_path, "export")
    assert exported.returncode == 0

    r = kanbanx(tmp_path, "import", "--into", str(tmp_path / "fresh"), stdin=exported.stdout)
    assert r.returncode == 0, r.stderr

    original = replay([event_from_json(line) for line in exported.stdout.splitlines() if line])
    copied_log = (tmp_path / "fresh" / "demo" / "events.log").read_text()
    copied = replay([event_from_json(line) for line in copied_log.splitlines() if line])
    assert workspace_checksum(copied) == workspace_checksum(original)

    # the imported directory is a fully usable workspace
    r = subprocess.run(
        [sys.executable, "-m", "kanbanx", "--data-dir", str(tmp_path / "fresh"), "board"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and "Security" in r.stdout


def test_import_rejects_corrupt_stream(tmp_path):
    r = kanbanx(tmp_path, "import", "--into", str(tmp_path / "x"), stdin="not json\n")
    assert r.returncode == 1


def test_structured_output_is_stable(seeded):
    tmp_path, _, _ = seeded
    a = kanbanx(tmp_path, "board", "--output", "structured").stdout
    b = kanbanx(tmp_path, "board", "--output", "structured").stdout
    assert a == b
    json.loads(a)  # parses


def test_metrics_and_trace_render(seeded):
    tmp_path, _, _ = seeded
    r = kanbanx(tmp_path, "metrics", "coverage", "Security")
    assert r.returncode == 0 and "1.000" in r.stdout
    r = kanbanx(tmp_path, "trace", "c1")
    assert r.returncode == 0
    assert "c4" in r.stdout
    r = kanbanx(tmp_path, "metrics", "flow", "--output", "structured")
    assert r.returncode == 0
    assert "cumulative_flow" in r.stdout


def test_unlink_and_policy_subcommands(seeded):
    tmp_path, _, _ = seeded
    assert kanbanx(tmp_path, "unlink", "c1", "c4").returncode == 0
    r = kanbanx(tmp_path, "unlink", "c1", "c4")
    assert r.returncode == 2 and "UnknownMark" in r.stderr
    assert kanbanx(tmp_path, "set-policy", "--completion", "warn").returncode == 0
