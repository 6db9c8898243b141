"""Append-only persistence: line-delimited event log plus state snapshots.

File layout, per workspace directory:

    <workspace>/events.log          one JSON record per line, seq 0 first
    <workspace>/snapshots/<seq>.snap

The log is the single source of truth; snapshots only accelerate loading and
never truncate anything. Record fields and enum spellings are the format
contract (see README).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ChecksumMismatch, CorruptEvent, IoFailure, SequenceGap
from .events import (
    WORKSPACE_CREATED,
    Event,
    apply_event,
    apply_events,
    event_from_json,
    event_to_json,
    genesis_event,
)
from .model import (
    WipPolicy,
    Workspace,
    canonical_json,
    workspace_checksum,
    workspace_from_dict,
    workspace_to_dict,
)

LOG_NAME = "events.log"
SNAPSHOT_DIR = "snapshots"


def replay(events: Sequence[Event]) -> Workspace:
    """Fold a full record list (genesis included) into a workspace.

    Pure and deterministic: equal logs yield checksum-equal workspaces.
    Raises SequenceGap on non-contiguous seqs, CorruptEvent on bad records.
    """
    ws: Optional[Workspace] = None
    for ev in events:
        ws = apply_event(ws, ev)
    if ws is None:
        raise SequenceGap("cannot replay an empty log")
    return ws


@dataclass(frozen=True)
class Snapshot:
    at_seq: int
    state: dict
    checksum: str


def take_snapshot(ws: Workspace) -> Snapshot:
    state = workspace_to_dict(ws)
    return Snapshot(at_seq=ws.clock, state=state, checksum=workspace_checksum(ws))


def snapshot_workspace(snap: Snapshot) -> Workspace:
    return workspace_from_dict(snap.state)


class EventLog:
    """One writer per log file; reads serve the in-memory record cache."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.path = self.directory / LOG_NAME
        self._events: list[Event] = []
        self._handle = None

    # -- lifecycle -----------------------------------------------------

    @classmethod
    def create(
        cls,
        directory: Path | str,
        name: str,
        wip_policy: WipPolicy | int,
        completion_policy: str = "strict",
        workspace_id: Optional[str] = None,
        wall_time: Optional[str] = None,
    ) -> tuple["EventLog", Workspace]:
        """Initialize a workspace directory with its genesis record."""
        if isinstance(wip_policy, int):
            wip_policy = WipPolicy(shared_limit=wip_policy)
        ws_id = workspace_id if workspace_id is not None else name
        genesis = genesis_event(name, wip_policy, completion_policy, ws_id, wall_time)
        ws = apply_event(None, genesis)  # validates the config before any I/O
        log = cls(directory)
        if log.path.exists():
            raise IoFailure(f"{log.path} already exists")
        try:
            log.directory.mkdir(parents=True, exist_ok=True)
            log._write(genesis)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        log._events = [genesis]
        return log, ws

    @classmethod
    def open(cls, directory: Path | str) -> "EventLog":
        log = cls(directory)
        try:
            text = log.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        events = [event_from_json(line) for line in text.splitlines() if line.strip()]
        if not events:
            raise CorruptEvent(f"{log.path} holds no records")
        _check_contiguous(events)
        log._events = events
        return log

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # -- reads ----------------------------------------------------------

    def events(self) -> tuple[Event, ...]:
        return tuple(self._events)

    def events_since(self, seq: int) -> tuple[Event, ...]:
        return tuple(ev for ev in self._events if ev.seq > seq)

    @property
    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else -1

    def replay(self) -> Workspace:
        return replay(self._events)

    # -- writes ----------------------------------------------------------

    def append(self, event: Event) -> None:
        """Durable (flush + fsync) before returning; seqs must be contiguous."""
        if event.seq != self.last_seq + 1:
            raise SequenceGap(f"append seq {event.seq} after {self.last_seq}")
        if event.kind == WORKSPACE_CREATED and self._events:
            raise CorruptEvent("workspace_created may only open a log")
        self._write(event)
        self._events.append(event)

    def append_all(self, events: Iterable[Event]) -> None:
        for ev in events:
            self.append(ev)

    def _write(self, event: Event) -> None:
        try:
            if self._handle is None:
                self._handle = open(self.path, "a", encoding="utf-8")
            self._handle.write(event_to_json(event) + "\n")
            self._handle.flush()
            os.fsync(self._handle.fileno())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    # -- snapshots ---------------------------------------------------------

    def snapshot_dir(self) -> Path:
        return self.directory / SNAPSHOT_DIR

    def save_snapshot(self, ws: Workspace) -> Path:
        snap = take_snapshot(ws)
        path = self.snapshot_dir() / f"{snap.at_seq:08d}.snap"
        try:
            self.snapshot_dir().mkdir(parents=True, exist_ok=True)
            payload = {"at_seq": snap.at_seq, "checksum": snap.checksum, "state": snap.state}
            path.write_text(
                json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False),
                encoding="utf-8",
            )
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        return path

    def snapshots(self) -> list[Snapshot]:
        """All stored snapshots, checksum-verified, oldest first."""
        out = []
        if self.snapshot_dir().is_dir():
            for path in sorted(self.snapshot_dir().glob("*.snap")):
                out.append(load_snapshot(path))
        return out


def load_snapshot(path: Path | str) -> Snapshot:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    except ValueError as exc:
        raise ChecksumMismatch(f"{path} is not a valid snapshot: {exc}") from exc
    snap = Snapshot(at_seq=raw["at_seq"], state=raw["state"], checksum=raw["checksum"])
    actual = _state_checksum(snap.state)
    if actual != snap.checksum:
        raise ChecksumMismatch(f"{path}: stored {snap.checksum[:12]}.., computed {actual[:12]}..")
    return snap


def _state_checksum(state: dict) -> str:
    return hashlib.sha256(canonical_json(state).encode("utf-8")).hexdigest()


def _check_contiguous(events: Sequence[Event]) -> None:
    if events[0].seq != 0 or events[0].kind != WORKSPACE_CREATED:
        raise SequenceGap("log must begin with the seq-0 workspace_created record")
    for prev, cur in zip(events, events[1:]):
        if cur.seq != prev.seq + 1:
            raise SequenceGap(f"gap between seq {prev.seq} and {cur.seq}")


def load(directory: Path | str) -> tuple[EventLog, list[Snapshot]]:
    """Open a workspace directory: the log plus its verified snapshots."""
    log = EventLog.open(directory)
    return log, log.snapshots()


def load_workspace(directory: Path | str) -> tuple[EventLog, Workspace]:
    """Open a directory and reconstruct current state, snapshot-accelerated."""
    log, snaps = load(directory)
    best = None
    for snap in snaps:
        if snap.at_seq <= log.last_seq and (best is None or snap.at_seq > best.at_seq):
            best = snap
    if best is None:
        return log, log.replay()
    ws = snapshot_workspace(best)
    return log, apply_events(ws, log.events_since(best.at_seq))
