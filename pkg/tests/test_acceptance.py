"""Acceptance suite: one test per criterion, one PASS line each (run -v -s).

The invariant, oracle-equivalence, and atomicity criteria share one fused run
over the same 10,000 random command sequences; the remaining criteria have
their own drivers. Every tolerance is exact (0 violations, byte-exact goldens,
checksum equality).
"""

from __future__ import annotations

import json
import random
import subprocess
import sys
import threading
import time
from dataclasses import dataclass

import pytest
import requests

from kanbanx import engine, new_workspace, workspace_checksum
from kanbanx.events import apply_events, event_from_json
from kanbanx.model import workspace_to_dict
from kanbanx.presets import apply_preset, list_presets, load_preset, preset_path
from kanbanx.service import KanbanHTTPServer
from kanbanx.store import replay, snapshot_workspace, take_snapshot

import checks
import walker
from oracle import OracleModel

BASE_SEED = 20260808
N_SEQUENCES = 10_000
N_REPLAY_LOGS = 100


@dataclass
class FusedRun:
    sequences: int = 0
    steps: int = 0
    accepted: int = 0
    rejected: int = 0
    agreements: int = 0
    atomicity_checks: int = 0
    runtime: float = 0.0


def _sequence_length(rng: random.Random) -> int:
    # lengths bounded by 200; mostly short so 10k sequences stay inside the
    # runtime target, with a tranche of long walks for depth
    pick = rng.random()
    if pick < 0.94:
        return rng.randint(5, 40)
    if pick < 0.99:
        return rng.randint(41, 120)
    return rng.randint(121, 200)


@pytest.fixture(scope="module")
def fused_run() -> FusedRun:
    """Criteria 1-3 in one pass: invariants, oracle equivalence, atomicity."""
    stats = FusedRun()
    started = time.perf_counter()
    for i in range(N_SEQUENCES):
        rng = random.Random(BASE_SEED + i)
        config = walker.random_workspace_config(rng)
        ws = new_workspace(
            f"acc{i}", config["shared_limit"], completion_policy=config["completion_policy"]
        )
        oracle = OracleModel(config["shared_limit"], completion=config["completion_policy"])
        for _ in range(_sequence_length(rng)):
            command = walker.next_command(rng, ws)
            payload = engine.check_command(command).payload
            predicted = oracle.verdict(command.kind, payload)
            pre_checksum = None if predicted else workspace_checksum(ws)
            ws2, result = engine.apply(ws, command)

            assert result.accepted == predicted, (
                f"verdict mismatch on {command.kind} {payload}: "
                f"engine={result.accepted} ({result.rejection}), oracle={predicted}"
            )
            stats.agreements += 1

            if result.accepted:
                oracle.apply(command.kind, payload)
                checks.assert_step_invariants(ws2, command, result)
                stats.accepted += 1
            else:
                assert workspace_checksum(ws2) == pre_checksum, (
                    f"rejected {command.kind} mutated the workspace"
                )
                assert ws2 is ws
                stats.rejected += 1
                stats.atomicity_checks += 1
            ws = ws2
            stats.steps += 1
        stats.sequences += 1
    stats.runtime = time.perf_counter() - started
    return stats


def test_invariant_suite(fused_run):
    assert fused_run.sequences >= N_SEQUENCES
    assert fused_run.accepted > 100_000  # the walks genuinely exercise the engine
    assert fused_run.runtime < 60.0, f"invariant suite took {fused_run.runtime:.1f}s"
    print(
        f"\nPASS: invariant suite ({fused_run.sequences} sequences, "
        f"{fused_run.steps} commands, {fused_run.accepted} accepted, 0 violations, "
        f"{fused_run.runtime:.1f}s)"
    )


def test_oracle_equivalence(fused_run):
    assert fused_run.agreements == fused_run.steps
    print(
        f"PASS: oracle equivalence ({fused_run.agreements}/{fused_run.steps} "
        "verdicts agree, 100%)"
    )


def test_atomicity_of_rejections(fused_run):
    assert fused_run.atomicity_checks == fused_run.rejected
    assert fused_run.atomicity_checks > 10_000
    print(
        f"PASS: atomicity ({fused_run.atomicity_checks} rejected commands, "
        "pre/post checksums equal)"
    )


def test_replay_determinism_and_snapshots():
    for i in range(N_REPLAY_LOGS):
        rng = random.Random(BASE_SEED + 50_000 + i)
        config = walker.random_workspace_config(rng)
        from kanbanx.events import genesis_event
        from kanbanx.model import WipPolicy

        events = [
            genesis_event(
                f"log{i}",
                WipPolicy(config["shared_limit"]),
                config["completion_policy"],
                f"log{i}",
            )
        ]
        ws = replay(events)
        for _ in range(rng.randint(10, 60)):
            command = walker.next_command(rng, ws)
            ws, result = engine.apply(ws, command)
            events.extend(result.events)

        full_a = workspace_checksum(replay(events))
        full_b = workspace_checksum(replay(events))
        assert full_a == full_b, "double replay diverged"

        for cut in range(1, len(events) + 1):
            snap = take_snapshot(replay(events[:cut]))
            resumed = apply_events(snapshot_workspace(snap), events[cut:])
            assert workspace_checksum(resumed) == full_a, (
                f"snapshot at seq {snap.at_seq} + suffix != full replay (log {i})"
            )
    print(f"PASS: replay determinism ({N_REPLAY_LOGS} logs, every-prefix snapshots)")


def test_feedback_ordering():
    cases = 0
    for i in range(200):
        rng = random.Random(BASE_SEED + 90_000 + i)
        ws = new_workspace(f"fb{i}", 5)
        for t in range(rng.randint(0, 4)):
            ws, _ = engine.apply(ws, engine.create_task(f"T{t}"))
        ws, _ = engine.apply(ws, engine.add_focus("Security", ["Risk"]))
        fb = ws.focus_by_name("Security")
        for round_no in range(rng.randint(1, 2)):
            ws, r = engine.apply(ws, engine.create_task(f"host {round_no}"))
            host = r.events[0].payload["card_id"]
            ws, r = engine.apply(
                ws, engine.extract_xtag(host, fb.board.id, f"X{round_no}", sorted(fb.principles))
            )
            tag = r.events[0].payload["card_id"]
            ws, r = engine.apply(ws, engine.move_card(tag, "In Progress"))
            assert r.accepted

            queue_before = list(ws.dev_board.cards["Backlog"])
            n = rng.randint(0, 5)
            titles = [f"chg {round_no}.{k}" for k in range(n)]
            ws, result = engine.apply(
                ws, engine.complete_xtag(tag, [(t, "") for t in titles])
            )
            assert result.accepted

            reference = list(queue_before)
            created = [
                ev.payload["card_id"] for ev in result.events if ev.kind == "card_created"
            ]
            for idx, cid in enumerate(created):
                reference.insert(idx, cid)
            assert list(ws.dev_board.cards["Backlog"]) == reference
            assert [ws.cards[c].title for c in created] == titles
            cases += 1
    print(f"PASS: feedback ordering ({cases} completions, exact prefix match)")


def test_preset_fidelity():
    names = list_presets()
    assert set(names) == {"performance", "security", "sustainability"}
    required_headings = {
        "sustainability": ["Team Code Ownership", "Manage Technical Debt", "Preventative Maintenance"],
        "performance": ["Resource Management", "Purpose", "Verifiability"],
        "security": ["Risk", "Vulnerabilities"],
    }
    for name in names:
        golden = json.loads(preset_path(name).read_text(encoding="utf-8"))["principles"]
        ws, result = apply_preset(new_workspace("preset", 3), load_preset(name))
        assert result.accepted
        fb = ws.focus_boards[0]
        stored = [
            p.statement
            for p in sorted(fb.principles.values(), key=lambda p: p.revisions[0].at)
        ]
        assert stored == golden, f"preset {name} drifted from its data file"
        for heading in required_headings[name]:
            assert any(s.startswith(heading) for s in stored), f"{name} lacks {heading!r}"
    print("PASS: preset fidelity (3 presets, byte-exact statements)")


def test_api_write_serialization(tmp_path):
    server = KanbanHTTPServer(("127.0.0.1", 0), tmp_path)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.socket.getsockname()
    base = f"http://{host}:{port}"
    try:
        assert (
            requests.post(f"{base}/api/workspaces", json={"id": "acc", "shared_limit": 3})
            .status_code
            == 201
        )
        writers, per_writer = 8, 50
        responses: list[list[dict]] = [[] for _ in range(writers)]

        def writer(n):
            session = requests.Session()
            for k in range(per_writer):
                r = session.post(
                    f"{base}/api/workspaces/acc/commands",
                    json={"kind": "create_task", "title": f"w{n}-{k}"},
                )
                assert r.status_code == 200
                responses[n].append(r.json())

        threads = [threading.Thread(target=writer, args=(n,)) for n in range(writers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        log_lines = (tmp_path / "acc" / "events.log").read_text().splitlines()
        events = [event_from_json(line) for line in log_lines]
        seqs = [ev.seq for ev in events]
        assert seqs == list(range(0, writers * per_writer + 1)), "log seqs not contiguous"

        by_seq = {ev.seq: ev for ev in events}
        seen = set()
        for per_writer_responses in responses:
            for body in per_writer_responses:
                run_seqs = [ev["seq"] for ev in body["events"]]
                assert run_seqs == list(
                    range(run_seqs[0], run_seqs[0] + len(run_seqs))
                ), "a command's events interleaved with another's"
                for ev in body["events"]:
                    assert ev["seq"] not in seen, "event appeared twice"
                    seen.add(ev["seq"])
                    assert by_seq[ev["seq"]].payload == ev["payload"]
        assert len(seen) == writers * per_writer
        state = requests.get(f"{base}/api/workspaces/acc").json()
        assert state["clock"] == writers * per_writer
    finally:
        server.shutdown()
        server.server_close()
    print(f"PASS: API serialization ({writers} writers x {per_writer} commands, serial log)")


def test_cli_round_trip(tmp_path):
    def cli(*args, data_dir="data", stdin=None):
        return subprocess.run(
            [sys.executable, "-m", "kanbanx", "--data-dir", str(tmp_path / data_dir), *args],
            capture_output=True,
            text=True,
            input=stdin,
            timeout=60,
        )

    assert cli("init", "round", "--limit", "3").returncode == 0
    assert cli("task", "Upload survey results").returncode == 0
    assert cli("preset", "apply", "security").returncode == 0
    board = json.loads(cli("board", "--output", "structured").stdout)
    focus = next(b for b in board["boards"] if b["type"] == "focus")
    pid = focus["principles"][0]["id"]
    assert (
        cli("extract", "c1", "Security", "Assess risk", "--principle", pid).returncode == 0
    )
    assert cli("start", "c1").returncode == 0

    exported = cli("export")
    assert exported.returncode == 0
    imported = cli("import", "--into", str(tmp_path / "fresh"), stdin=exported.stdout)
    assert imported.returncode == 0, imported.stderr

    original = replay(
        [event_from_json(line) for line in exported.stdout.splitlines() if line.strip()]
    )
    copied_lines = (tmp_path / "fresh" / "round" / "events.log").read_text().splitlines()
    copied = replay([event_from_json(line) for line in copied_lines if line.strip()])
    assert workspace_checksum(copied) == workspace_checksum(original)
    assert workspace_to_dict(copied) == workspace_to_dict(original)
    print("PASS: CLI round-trip (export -> import, checksum exact)")
