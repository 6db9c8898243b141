"""Events and the fold that turns them into workspace snapshots.

An event is one accepted effect. The genesis record (seq 0,
``workspace_created``) carries the workspace config; command-produced events
are contiguous from seq 1. Applying event ``seq`` advances the clock to
``seq``, so the clock always equals the last applied record. Payloads hold
only ids and plain values, never object references, which is what makes
replay a pure function of the list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from . import model
from .errors import CorruptEvent, SequenceGap
from .model import (
    Board,
    Card,
    CardKind,
    FocusBoard,
    Principle,
    Revision,
    Stage,
    WipPolicy,
    Workspace,
    XMark,
)

WORKSPACE_CREATED = "workspace_created"
CARD_CREATED = "card_created"
CARD_MOVED = "card_moved"
MARK_ADDED = "mark_added"
MARK_REMOVED = "mark_removed"
FOCUS_ADDED = "focus_added"
PRINCIPLE_ADDED = "principle_added"
PRINCIPLE_REVISED = "principle_revised"
PRINCIPLE_RETIRED = "principle_retired"
POLICY_CHANGED = "policy_changed"

EVENT_KINDS = frozenset(
    {
        WORKSPACE_CREATED,
        CARD_CREATED,
        CARD_MOVED,
        MARK_ADDED,
        MARK_REMOVED,
        FOCUS_ADDED,
        PRINCIPLE_ADDED,
        PRINCIPLE_REVISED,
        PRINCIPLE_RETIRED,
        POLICY_CHANGED,
    }
)


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    payload: dict
    wall_time: Optional[str] = None  # metadata only; excluded from checksums


def event_to_json(ev: Event) -> str:
    return json.dumps(
        {"seq": ev.seq, "kind": ev.kind, "payload": ev.payload, "wall_time": ev.wall_time},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def event_from_json(line: str) -> Event:
    try:
        raw = json.loads(line)
        return Event(
            seq=raw["seq"],
            kind=raw["kind"],
            payload=raw["payload"],
            wall_time=raw.get("wall_time"),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptEvent(f"unparseable event record: {exc}") from exc


def genesis_event(
    name: str,
    wip_policy: WipPolicy,
    completion_policy: str,
    workspace_id: str,
    wall_time: Optional[str] = None,
) -> Event:
    return Event(
        seq=0,
        kind=WORKSPACE_CREATED,
        payload={
            "workspace_id": workspace_id,
            "name": name,
            "shared_limit": wip_policy.shared_limit,
            "per_board_limits": dict(wip_policy.per_board_limits),
            "completion_policy": completion_policy,
            "dev_board_id": "b0",
        },
        wall_time=wall_time,
    )


# -- fold -------------------------------------------------------------------


def apply_event(ws: Optional[Workspace], ev: Event) -> Workspace:
    """Fold one event into a new snapshot; the input snapshot is untouched."""
    if ws is None:
        if ev.kind != WORKSPACE_CREATED or ev.seq != 0:
            raise SequenceGap("log must begin with the seq-0 workspace_created record")
        p = ev.payload
        return model.new_workspace(
            name=p["name"],
            wip_policy=WipPolicy(p["shared_limit"], dict(p["per_board_limits"])),
            completion_policy=p["completion_policy"],
            workspace_id=p["workspace_id"],
            dev_board_id=p.get("dev_board_id", "b0"),
        )
    if ev.seq != ws.clock + 1:
        raise SequenceGap(f"event seq {ev.seq} after clock {ws.clock}")
    handler = _FOLDERS.get(ev.kind)
    if handler is None:
        raise CorruptEvent(f"unknown event kind {ev.kind!r}")
    return handler(ws, ev)


def apply_events(ws: Optional[Workspace], events: Iterable[Event]) -> Workspace:
    for ev in events:
        ws = apply_event(ws, ev)
    if ws is None:
        raise SequenceGap("empty event list cannot produce a workspace")
    return ws


def _with_board(ws: Workspace, board: Board) -> Workspace:
    if board.id == ws.dev_board.id:
        return replace(ws, dev_board=board)
    fbs = tuple(
        replace(fb, board=board) if fb.board.id == board.id else fb for fb in ws.focus_boards
    )
    return replace(ws, focus_boards=fbs)


def _insert(board: Board, column: str, card_id: str, position: int) -> Board:
    ids = board.cards.get(column, ())
    pos = max(0, min(position, len(ids)))
    cards = dict(board.cards)
    cards[column] = ids[:pos] + (card_id,) + ids[pos:]
    return replace(board, cards=cards)


def _remove(board: Board, column: str, card_id: str) -> Board:
    cards = dict(board.cards)
    cards[column] = tuple(i for i in cards.get(column, ()) if i != card_id)
    return replace(board, cards=cards)


def _fold_card_created(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    kind = CardKind(p["kind"])
    card = Card(
        id=p["card_id"],
        kind=kind,
        title=p["title"],
        description=p.get("description", ""),
        focus_id=p.get("focus_id"),
        origin_xtag=p.get("origin_xtag"),
        created_at=ev.seq,
    )
    board = ws.board(p["board_id"])
    if board is None:
        raise CorruptEvent(f"card_created on unknown board {p['board_id']!r}")
    board = _insert(board, p["column"], card.id, p["position"])
    cards = dict(ws.cards)
    cards[card.id] = card
    ws = _with_board(replace(ws, cards=cards, clock=ev.seq), board)
    if kind == CardKind.XTAG:
        links = dict(ws.principle_links)
        links[card.id] = tuple(p["principle_ids"])
        ws = replace(ws, principle_links=links)
    return ws


def _fold_card_moved(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    card_id = p["card_id"]
    card = ws.cards.get(card_id)
    spot = ws.placement(card_id)
    if card is None or spot is None:
        raise CorruptEvent(f"card_moved for unplaced card {card_id!r}")
    board, src = spot
    dst = p["to_column"]
    dst_col = board.column(dst)
    if dst_col is None:
        raise CorruptEvent(f"card_moved into unknown column {dst!r}")
    board = _insert(_remove(board, src, card_id), dst, card_id, len(board.cards.get(dst, ())))
    stamped = card
    if dst_col.stage == Stage.ACTIVE and card.started_at is None:
        stamped = replace(card, started_at=ev.seq)
    if dst_col.stage == Stage.DONE and card.done_at is None:
        stamped = replace(stamped, done_at=ev.seq)
    cards = dict(ws.cards)
    cards[card_id] = stamped
    return _with_board(replace(ws, cards=cards, clock=ev.seq), board)


def _fold_mark_added(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    mark = XMark(p["dev_card"], p["xtag"], created_at=ev.seq, note=p.get("note"))
    return replace(ws, marks=ws.marks + (mark,), clock=ev.seq)


def _fold_mark_removed(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    marks = tuple(
        m for m in ws.marks if not (m.dev_card == p["dev_card"] and m.xtag == p["xtag"])
    )
    return replace(ws, marks=marks, clock=ev.seq)


def _fold_focus_added(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    fb = FocusBoard(
        board=model.default_board(p["board_id"], p["focus_name"]),
        focus_name=p["focus_name"],
        principles={},
    )
    return replace(ws, focus_boards=ws.focus_boards + (fb,), clock=ev.seq)


def _fold_principle_added(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    fb = ws.focus_board(p["focus_id"])
    if fb is None:
        raise CorruptEvent(f"principle_added to unknown focus {p['focus_id']!r}")
    principle = Principle(
        id=p["principle_id"],
        focus_id=p["focus_id"],
        statement=p["statement"],
        version=1,
        revisions=(Revision(1, p["statement"], ev.seq),),
    )
    principles = dict(fb.principles)
    principles[principle.id] = principle
    fbs = tuple(
        replace(f, principles=principles) if f.board.id == fb.board.id else f
        for f in ws.focus_boards
    )
    return replace(ws, focus_boards=fbs, clock=ev.seq)


def _update_principle(ws: Workspace, principle_id: str, fn) -> Workspace:
    found = ws.principle(principle_id)
    if found is None:
        raise CorruptEvent(f"event targets unknown principle {principle_id!r}")
    fb, principle = found
    principles = dict(fb.principles)
    principles[principle_id] = fn(principle)
    fbs = tuple(
        replace(f, principles=principles) if f.board.id == fb.board.id else f
        for f in ws.focus_boards
    )
    return replace(ws, focus_boards=fbs)


def _fold_principle_revised(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload

    def bump(pr: Principle) -> Principle:
        version = pr.version + 1
        return replace(
            pr,
            statement=p["statement"],
            version=version,
            revisions=pr.revisions + (Revision(version, p["statement"], ev.seq),),
        )

    return replace(_update_principle(ws, p["principle_id"], bump), clock=ev.seq)


def _fold_principle_retired(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    out = _update_principle(ws, p["principle_id"], lambda pr: replace(pr, retired=True))
    return replace(out, clock=ev.seq)


def _fold_policy_changed(ws: Workspace, ev: Event) -> Workspace:
    p = ev.payload
    shared = p.get("shared_limit")
    per_board = p.get("per_board_limits")
    policy = WipPolicy(
        shared_limit=shared if shared is not None else ws.wip_policy.shared_limit,
        per_board_limits=dict(per_board)
        if per_board is not None
        else dict(ws.wip_policy.per_board_limits),
    )
    completion = p.get("completion_policy") or ws.completion_policy
    return replace(ws, wip_policy=policy, completion_policy=completion, clock=ev.seq)


_FOLDERS = {
    CARD_CREATED: _fold_card_created,
    CARD_MOVED: _fold_card_moved,
    MARK_ADDED: _fold_mark_added,
    MARK_REMOVED: _fold_mark_removed,
    FOCUS_ADDED: _fold_focus_added,
    PRINCIPLE_ADDED: _fold_principle_added,
    PRINCIPLE_REVISED: _fold_principle_revised,
    PRINCIPLE_RETIRED: _fold_principle_retired,
    POLICY_CHANGED: _fold_policy_changed,
}
