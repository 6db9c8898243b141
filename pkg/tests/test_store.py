"""Event store: append durability, deterministic replay, snapshot soundness."""

from __future__ import annotations

import random

import pytest

from kanbanx import engine, validate, workspace_checksum
from kanbanx.errors import ChecksumMismatch, CorruptEvent, IoFailure, SequenceGap
from kanbanx.events import Event
from kanbanx.store import EventLog, load, load_workspace, replay, take_snapshot

import walker


def make_log(tmp_path, limit=3, completion="strict", name="demo"):
    return EventLog.create(tmp_path / name, name=name, wip_policy=limit,
                           completion_policy=completion)


def grow(log: EventLog, ws, *commands):
    for command in commands:
        ws, result = engine.apply(ws, command)
        assert result.accepted, result.rejection
        log.append_all(result.events)
    return ws


def random_log(tmp_path, seed: int, steps: int = 40):
    rng = random.Random(seed)
    config = walker.random_workspace_config(rng)
    log, ws = EventLog.create(
        tmp_path / f"r{seed}",
        name=f"r{seed}",
        wip_policy=config["shared_limit"],
        completion_policy=config["completion_policy"],
    )
    for _ in range(steps):
        ws, result = engine.apply(ws, walker.next_command(rng, ws))
        if result.accepted:
            log.append_all(result.events)
    return log, ws


# -- append ------------------------------------------------------------------


def test_append_extends_log(tmp_path):
    log, ws = make_log(tmp_path)
    assert log.last_seq == 0  # genesis
    ws = grow(log, ws, engine.create_task("A"))
    assert log.last_seq == 1
    assert len(log.events()) == 2


def test_append_rejects_sequence_gap(tmp_path):
    log, ws = make_log(tmp_path)
    ws = grow(log, ws, engine.create_task("A"), engine.create_task("B"))
    with pytest.raises(SequenceGap):
        log.append(Event(seq=7, kind="card_created", payload={}))


def test_append_survives_reopen(tmp_path):
    # Crash simulation: never close the writer, reopen from disk cold.
    log, ws = make_log(tmp_path)
    grow(log, ws, engine.create_task("A"))
    reopened = EventLog.open(tmp_path / "demo")
    assert reopened.last_seq == 1
    assert reopened.events()[-1].payload["title"] == "A"


def test_create_refuses_existing_directory(tmp_path):
    make_log(tmp_path)
    with pytest.raises(IoFailure):
        make_log(tmp_path)


# -- replay --------------------------------------------------------------------


def test_replay_is_deterministic(tmp_path):
    log, _ = random_log(tmp_path, seed=7)
    a = replay(log.events())
    b = replay(log.events())
    assert workspace_checksum(a) == workspace_checksum(b)


def test_replay_equals_live_state(tmp_path):
    log, ws = random_log(tmp_path, seed=11)
    assert workspace_checksum(replay(log.events())) == workspace_checksum(ws)


def test_replay_of_engine_log_validates(tmp_path):
    log, _ = random_log(tmp_path, seed=13)
    assert validate(replay(log.events())).ok


def test_replay_rejects_gaps_and_garbage(tmp_path):
    log, ws = make_log(tmp_path)
    grow(log, ws, engine.create_task("A"), engine.create_task("B"))
    events = list(log.events())
    with pytest.raises(SequenceGap):
        replay([events[0], events[2]])
    with pytest.raises(SequenceGap):
        replay(events[1:])  # no genesis
    with pytest.raises(CorruptEvent):
        replay([events[0], Event(seq=1, kind="mystery", payload={})])
    with pytest.raises(SequenceGap):
        replay([])


def test_snapshot_plus_suffix_equals_full_replay(tmp_path):
    log, ws = random_log(tmp_path, seed=17)
    full = replay(log.events())
    snap = take_snapshot(replay(log.events()[: len(log.events()) // 2 + 1]))
    from kanbanx.events import apply_events
    from kanbanx.store import snapshot_workspace

    resumed = apply_events(snapshot_workspace(snap), log.events_since(snap.at_seq))
    assert workspace_checksum(resumed) == workspace_checksum(full)


# -- snapshots on disk -------------------------------------------------------------


def test_snapshot_save_load_roundtrip(tmp_path):
    log, ws = make_log(tmp_path)
    ws = grow(log, ws, *(engine.create_task(f"T{i}") for i in range(10)))
    path = log.save_snapshot(ws)
    _, snaps = load(tmp_path / "demo")
    assert [s.at_seq for s in snaps] == [10]
    assert snaps[0].checksum == workspace_checksum(ws)
    assert path.name == "00000010.snap"


def test_corrupt_snapshot_detected(tmp_path):
    log, ws = make_log(tmp_path)
    ws = grow(log, ws, engine.create_task("T"))
    path = log.save_snapshot(ws)
    raw = bytearray(path.read_bytes())
    at = raw.find(b'"title":"T"')
    raw[at + 9 : at + 10] = b"X"
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch):
        load(tmp_path / "demo")


def test_load_workspace_uses_snapshot_fast_path(tmp_path):
    log, ws = make_log(tmp_path)
    ws = grow(log, ws, engine.create_task("A"), engine.add_focus("Security", ["Risk"]))
    log.save_snapshot(ws)
    ws = grow(log, ws, engine.create_task("B"))
    log.close()
    _, loaded = load_workspace(tmp_path / "demo")
    assert workspace_checksum(loaded) == workspace_checksum(ws)


def test_roundtrip_serialization_of_replayed_state(tmp_path):
    from kanbanx.model import workspace_from_dict, workspace_to_dict

    log, _ = random_log(tmp_path, seed=23)
    ws = replay(log.events())
    assert workspace_from_dict(workspace_to_dict(ws)) == ws


@pytest.mark.parametrize("seed", range(10))
def test_snapshot_every_prefix_matches_full_replay(tmp_path, seed):
    from kanbanx.events import apply_events
    from kanbanx.store import snapshot_workspace

    log, _ = random_log(tmp_path, seed=100 + seed, steps=25)
    events = log.events()
    full = workspace_checksum(replay(events))
    for cut in range(1, len(events) + 1):
        snap = take_snapshot(replay(events[:cut]))
        resumed = apply_events(snapshot_workspace(snap), events[cut:])
        assert workspace_checksum(resumed) == full
