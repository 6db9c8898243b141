"""Workspace data model: boards, columns, cards, marks, principles, policies.

Everything here is an immutable value. Workspaces are snapshots: the rules
engine never mutates one, it folds events into a new one, so any snapshot may
be shared and read concurrently. This module owns structural validity
(``validate``) and canonical serialization/checksums; it contains no command
logic.

Timestamps are logical clock values (the seq of the event that caused the
transition), never wall time, so replays are deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .errors import InvalidPolicy


class Stage(str, Enum):
    """What a column means for flow accounting."""

    QUEUE = "queue"
    ACTIVE = "active"
    DONE = "done"


class CardKind(str, Enum):
    TASK = "task"
    XTAG = "xtag"
    CHANGE_TASK = "change_task"


DEV_KINDS = (CardKind.TASK, CardKind.CHANGE_TASK)

STRICT = "strict"
WARN = "warn"
COMPLETION_POLICIES = (STRICT, WARN)

DEV_BOARD_NAME = "Development"
DEFAULT_COLUMNS = (
    ("Backlog", Stage.QUEUE),
    ("In Progress", Stage.ACTIVE),
    ("Done", Stage.DONE),
)


@dataclass(frozen=True)
class Column:
    name: str
    stage: Stage


@dataclass(frozen=True)
class Board:
    """Ordered columns plus the ordered card ids held by each column.

    ``cards[column_name]`` is queue position order, index 0 = front.
    """

    id: str
    name: str
    columns: tuple[Column, ...]
    cards: dict[str, tuple[str, ...]]

    def column(self, name: str) -> Optional[Column]:
        for col in self.columns:
            if col.name == name:
                return col
        return None

    def first_column(self, stage: Stage) -> Column:
        for col in self.columns:
            if col.stage == stage:
                return col
        raise LookupError(f"board {self.id} has no {stage.value} column")

    def column_of(self, card_id: str) -> Optional[str]:
        for name, ids in self.cards.items():
            if card_id in ids:
                return name
        return None

    def stage_count(self, stage: Stage) -> int:
        return sum(
            len(self.cards.get(col.name, ())) for col in self.columns if col.stage == stage
        )

    def card_ids(self) -> Iterator[str]:
        for col in self.columns:
            yield from self.cards.get(col.name, ())


def default_board(board_id: str, name: str) -> Board:
    cols = tuple(Column(n, s) for n, s in DEFAULT_COLUMNS)
    return Board(id=board_id, name=name, columns=cols, cards={c.name: () for c in cols})


@dataclass(frozen=True)
class Card:
    id: str
    kind: CardKind
    title: str
    description: str = ""
    focus_id: Optional[str] = None  # present iff kind == xtag
    origin_xtag: Optional[str] = None  # present iff kind == change_task
    created_at: int = 0
    started_at: Optional[int] = None
    done_at: Optional[int] = None


@dataclass(frozen=True)
class XMark:
    """Undirected traceability link between a dev-board card and an xtag."""

    dev_card: str
    xtag: str
    created_at: int
    note: Optional[str] = None


@dataclass(frozen=True)
class Revision:
    version: int
    statement: str
    at: int


@dataclass(frozen=True)
class Principle:
    id: str
    focus_id: str
    statement: str
    version: int
    revisions: tuple[Revision, ...]
    retired: bool = False


@dataclass(frozen=True)
class FocusBoard:
    board: Board
    focus_name: str
    principles: dict[str, Principle] = field(default_factory=dict)


@dataclass(frozen=True)
class WipPolicy:
    """Shared limit spans active columns on ALL boards; per-board caps are
    optional extras keyed by board name and never exceed the shared limit."""

    shared_limit: int
    per_board_limits: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    rule: str
    ids: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class Workspace:
    id: str
    name: str
    dev_board: Board
    focus_boards: tuple[FocusBoard, ...]
    cards: dict[str, Card]
    marks: tuple[XMark, ...]
    principle_links: dict[str, tuple[str, ...]]  # xtag id -> principle ids
    wip_policy: WipPolicy
    completion_policy: str
    clock: int

    # -- lookups ---------------------------------------------------------

    def boards(self) -> Iterator[Board]:
        yield self.dev_board
        for fb in self.focus_boards:
            yield fb.board

    def board(self, board_id: str) -> Optional[Board]:
        for b in self.boards():
            if b.id == board_id:
                return b
        return None

    def focus_board(self, board_id: str) -> Optional[FocusBoard]:
        for fb in self.focus_boards:
            if fb.board.id == board_id:
                return fb
        return None

    def focus_by_name(self, name: str) -> Optional[FocusBoard]:
        for fb in self.focus_boards:
            if fb.focus_name == name:
                return fb
        return None

    def placement(self, card_id: str) -> Optional[tuple[Board, str]]:
        """Board and column name holding the card, if any."""
        for b in self.boards():
            col = b.column_of(card_id)
            if col is not None:
                return b, col
        return None

    def total_active(self) -> int:
        return sum(b.stage_count(Stage.ACTIVE) for b in self.boards())

    def has_mark(self, dev_card: str, xtag: str) -> bool:
        return any(m.dev_card == dev_card and m.xtag == xtag for m in self.marks)

    def marks_for_dev(self, dev_card: str) -> tuple[XMark, ...]:
        return tuple(m for m in self.marks if m.dev_card == dev_card)

    def marks_for_xtag(self, xtag: str) -> tuple[XMark, ...]:
        return tuple(m for m in self.marks if m.xtag == xtag)

    def principle(self, principle_id: str) -> Optional[tuple[FocusBoard, Principle]]:
        for fb in self.focus_boards:
            p = fb.principles.get(principle_id)
            if p is not None:
                return fb, p
        return None


def new_workspace(
    name: str,
    wip_policy: WipPolicy | int = 3,
    completion_policy: str = STRICT,
    workspace_id: Optional[str] = None,
    dev_board_id: str = "b0",
) -> Workspace:
    """Fresh workspace: one development board with default columns, clock 0.

    Raises InvalidPolicy if the WIP policy or completion policy is unusable.
    """
    if isinstance(wip_policy, int):
        wip_policy = WipPolicy(shared_limit=wip_policy)
    check_policy(wip_policy)
    if completion_policy not in COMPLETION_POLICIES:
        raise InvalidPolicy(f"completion_policy must be one of {COMPLETION_POLICIES}")
    ws_id = workspace_id if workspace_id is not None else name
    if not ws_id:
        raise InvalidPolicy("workspace id must be nonempty")
    return Workspace(
        id=ws_id,
        name=name,
        dev_board=default_board(dev_board_id, DEV_BOARD_NAME),
        focus_boards=(),
        cards={},
        marks=(),
        principle_links={},
        wip_policy=wip_policy,
        completion_policy=completion_policy,
        clock=0,
    )


def check_policy(policy: WipPolicy) -> None:
    if policy.shared_limit < 1:
        raise InvalidPolicy("shared_limit must be >= 1")
    for board_name, limit in policy.per_board_limits.items():
        if limit < 1:
            raise InvalidPolicy(f"per-board limit for {board_name!r} must be >= 1")
        if limit > policy.shared_limit:
            raise InvalidPolicy(
                f"per-board limit for {board_name!r} exceeds shared_limit"
            )


# -- validation -----------------------------------------------------------

R_SINGLE_DEV_BOARD = "single-dev-board"
R_FOCUS_NAME_UNIQUE = "focus-name-unique"
R_COLUMN_NAMES_UNIQUE = "column-names-unique"
R_BOARD_STAGE_COVERAGE = "board-stage-coverage"
R_CARD_PLACEMENT_UNIQUE = "card-placement-unique"
R_CARD_BOARD_KIND = "card-board-kind"
R_MARK_ENDPOINTS = "mark-endpoints-exist"
R_MARK_KINDS = "mark-kinds"
R_MARK_PAIR_UNIQUE = "mark-pair-unique"
R_XTAG_NEEDS_PRINCIPLE = "xtag-needs-principle"
R_PRINCIPLE_LINK_FOCUS = "principle-link-focus"
R_RETIRED_SOLE_PRINCIPLE = "retired-sole-principle"
R_PRINCIPLE_VERSION = "principle-version"
R_FOCUS_HAS_PRINCIPLES = "focus-has-principles"
R_CHANGE_TASK_ORIGIN = "change-task-origin"
R_TIMESTAMPS_MONOTONE = "timestamps-monotone"
R_STAMP_COLUMN_CONSISTENT = "stamp-column-consistent"
R_WIP_WITHIN_LIMIT = "wip-within-limit"
R_POLICY_VALID = "policy-valid"
R_CLOCK_BOUNDS = "clock-bounds"


def validate(ws: Workspace) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors."""
    out: list[Violation] = []

    def bad(rule: str, ids: tuple[str, ...], message: str) -> None:
        out.append(Violation(rule, ids, message))

    if ws.dev_board is None:  # dataclass shape makes >1 impossible; guard the 0 case
        bad(R_SINGLE_DEV_BOARD, (ws.id,), "workspace has no development board")
        return ValidationReport(ok=False, violations=tuple(out))

    names = [fb.focus_name for fb in ws.focus_boards]
    for n in sorted({n for n in names if names.count(n) > 1}):
        bad(R_FOCUS_NAME_UNIQUE, (n,), f"focus name {n!r} used by more than one board")

    placements: dict[str, list[str]] = {}
    for b in ws.boards():
        col_names = [c.name for c in b.columns]
        if len(set(col_names)) != len(col_names):
            bad(R_COLUMN_NAMES_UNIQUE, (b.id,), f"board {b.id} repeats a column name")
        stages = {c.stage for c in b.columns}
        if stages != set(Stage):
            missing = ",".join(sorted(s.value for s in set(Stage) - stages))
            bad(R_BOARD_STAGE_COVERAGE, (b.id,), f"board {b.id} lacks {missing} column")
        for col_name, ids in b.cards.items():
            if b.column(col_name) is None:
                bad(R_COLUMN_NAMES_UNIQUE, (b.id, col_name), "cards under unknown column")
            for cid in ids:
                placements.setdefault(cid, []).append(f"{b.id}/{col_name}")

    for cid, card in ws.cards.items():
        spots = placements.get(cid, [])
        if len(spots) != 1:
            bad(
                R_CARD_PLACEMENT_UNIQUE,
                (cid,),
                f"card {cid} appears in {len(spots)} columns ({spots or 'none'})",
            )
    for cid in placements:
        if cid not in ws.cards:
            bad(R_CARD_PLACEMENT_UNIQUE, (cid,), f"unknown card id {cid} placed on a board")

    focus_ids = {fb.board.id for fb in ws.focus_boards}
    for cid, card in ws.cards.items():
        spots = placements.get(cid, [])
        board_id = spots[0].split("/", 1)[0] if len(spots) == 1 else None
        if card.kind == CardKind.XTAG:
            if card.focus_id is None or card.focus_id not in focus_ids:
                bad(R_CARD_BOARD_KIND, (cid,), f"xtag {cid} has no valid focus_id")
            elif board_id is not None and board_id != card.focus_id:
                bad(R_CARD_BOARD_KIND, (cid,), f"xtag {cid} is not on its focus board")
        else:
            if board_id is not None and board_id != ws.dev_board.id:
                bad(R_CARD_BOARD_KIND, (cid,), f"{card.kind.value} {cid} is off the dev board")
        if card.kind == CardKind.CHANGE_TASK:
            origin = ws.cards.get(card.origin_xtag) if card.origin_xtag else None
            if origin is None or origin.kind != CardKind.XTAG:
                bad(R_CHANGE_TASK_ORIGIN, (cid,), f"change task {cid} lacks a valid origin xtag")
        if card.started_at is not None and card.started_at < card.created_at:
            bad(R_TIMESTAMPS_MONOTONE, (cid,), f"card {cid} started before created")
        if card.done_at is not None:
            floor = card.started_at if card.started_at is not None else card.created_at
            if card.done_at < floor:
                bad(R_TIMESTAMPS_MONOTONE, (cid,), f"card {cid} done before it was begun")
        for ts in (card.created_at, card.started_at, card.done_at):
            if ts is not None and ts > ws.clock:
                bad(R_CLOCK_BOUNDS, (cid,), f"card {cid} stamped past the clock")
        if board_id is not None and len(spots) == 1:
            b = ws.board(board_id)
            col = b.column(spots[0].split("/", 1)[1]) if b else None
            if col is not None:
                if (col.stage == Stage.DONE) != (card.done_at is not None):
                    bad(
                        R_STAMP_COLUMN_CONSISTENT,
                        (cid,),
                        f"card {cid} done_at does not match its column stage",
                    )
                if col.stage == Stage.ACTIVE and card.started_at is None:
                    bad(R_STAMP_COLUMN_CONSISTENT, (cid,), f"active card {cid} never started")

    seen_pairs: set[tuple[str, str]] = set()
    for m in ws.marks:
        pair = (m.dev_card, m.xtag)
        if pair in seen_pairs:
            bad(R_MARK_PAIR_UNIQUE, pair, f"duplicate mark {pair}")
        seen_pairs.add(pair)
        dev = ws.cards.get(m.dev_card)
        tag = ws.cards.get(m.xtag)
        if dev is None or tag is None:
            bad(R_MARK_ENDPOINTS, pair, f"mark {pair} references a missing card")
            continue
        if m.dev_card == m.xtag:
            bad(R_MARK_KINDS, pair, "mark links a card to itself")
        if dev.kind not in DEV_KINDS or tag.kind != CardKind.XTAG:
            bad(R_MARK_KINDS, pair, f"mark {pair} endpoint kinds are wrong")

    for fb in ws.focus_boards:
        has_xtags = any(
            ws.cards[cid].kind == CardKind.XTAG
            for cid in fb.board.card_ids()
            if cid in ws.cards
        )
        if has_xtags and not fb.principles:
            bad(
                R_FOCUS_HAS_PRINCIPLES,
                (fb.board.id,),
                f"focus {fb.focus_name!r} holds xtags but defines no principles",
            )
        for pid, p in fb.principles.items():
            if p.version != len(p.revisions):
                bad(R_PRINCIPLE_VERSION, (pid,), f"principle {pid} version != revision count")

    for cid, card in ws.cards.items():
        if card.kind != CardKind.XTAG:
            continue
        links = ws.principle_links.get(cid, ())
        if not links:
            bad(R_XTAG_NEEDS_PRINCIPLE, (cid,), f"xtag {cid} links no principle")
            continue
        fb = ws.focus_board(card.focus_id) if card.focus_id else None
        own = fb.principles if fb else {}
        live = 0
        for pid in links:
            p = own.get(pid)
            if p is None:
                bad(
                    R_PRINCIPLE_LINK_FOCUS,
                    (cid, pid),
                    f"xtag {cid} links principle {pid} outside its focus board",
                )
            elif not p.retired:
                live += 1
        if card.done_at is None and live == 0 and links:
            bad(
                R_RETIRED_SOLE_PRINCIPLE,
                (cid,),
                f"live xtag {cid} is covered only by retired principles",
            )

    try:
        check_policy(ws.wip_policy)
    except InvalidPolicy as exc:
        bad(R_POLICY_VALID, (ws.id,), str(exc))
    if ws.completion_policy not in COMPLETION_POLICIES:
        bad(R_POLICY_VALID, (ws.id,), f"unknown completion policy {ws.completion_policy!r}")

    total = ws.total_active()
    if total > ws.wip_policy.shared_limit:
        bad(
            R_WIP_WITHIN_LIMIT,
            (ws.id,),
            f"{total} active cards exceed shared limit {ws.wip_policy.shared_limit}",
        )
    for b in ws.boards():
        cap = ws.wip_policy.per_board_limits.get(b.name)
        if cap is not None and b.stage_count(Stage.ACTIVE) > cap:
            bad(R_WIP_WITHIN_LIMIT, (b.id,), f"board {b.id} exceeds its cap of {cap}")

    return ValidationReport(ok=not out, violations=tuple(out))


# -- canonical serialization ----------------------------------------------


def _card_to_dict(c: Card) -> dict:
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
    }


def _board_to_dict(b: Board) -> dict:
    return {
        "id": b.id,
        "name": b.name,
        "columns": [{"name": c.name, "stage": c.stage.value} for c in b.columns],
        "cards": {name: list(ids) for name, ids in b.cards.items()},
    }


def _principle_to_dict(p: Principle) -> dict:
    return {
        "id": p.id,
        "focus_id": p.focus_id,
        "statement": p.statement,
        "version": p.version,
        "revisions": [
            {"version": r.version, "statement": r.statement, "at": r.at} for r in p.revisions
        ],
        "retired": p.retired,
    }


def workspace_to_dict(ws: Workspace) -> dict:
    """Canonical plain-data form; field names are part of the format contract."""
    return {
        "id": ws.id,
        "name": ws.name,
        "dev_board": _board_to_dict(ws.dev_board),
        "focus_boards": [
            {
                "focus_name": fb.focus_name,
                "board": _board_to_dict(fb.board),
                "principles": [
                    _principle_to_dict(fb.principles[pid]) for pid in sorted(fb.principles)
                ],
            }
            for fb in ws.focus_boards
        ],
        "cards": [_card_to_dict(ws.cards[cid]) for cid in sorted(ws.cards)],
        "marks": [
            {"dev_card": m.dev_card, "xtag": m.xtag, "created_at": m.created_at, "note": m.note}
            for m in ws.marks
        ],
        "principle_links": {x: list(pids) for x, pids in sorted(ws.principle_links.items())},
        "wip_policy": {
            "shared_limit": ws.wip_policy.shared_limit,
            "per_board_limits": dict(sorted(ws.wip_policy.per_board_limits.items())),
        },
        "completion_policy": ws.completion_policy,
        "clock": ws.clock,
    }


def _board_from_dict(d: dict) -> Board:
    return Board(
        id=d["id"],
        name=d["name"],
        columns=tuple(Column(c["name"], Stage(c["stage"])) for c in d["columns"]),
        cards={name: tuple(ids) for name, ids in d["cards"].items()},
    )


def _card_from_dict(d: dict) -> Card:
    return Card(
        id=d["id"],
        kind=CardKind(d["kind"]),
        title=d["title"],
        description=d["description"],
        focus_id=d["focus_id"],
        origin_xtag=d["origin_xtag"],
        created_at=d["created_at"],
        started_at=d["started_at"],
        done_at=d["done_at"],
    )


def _principle_from_dict(d: dict) -> Principle:
    return Principle(
        id=d["id"],
        focus_id=d["focus_id"],
        statement=d["statement"],
        version=d["version"],
        revisions=tuple(Revision(r["version"], r["statement"], r["at"]) for r in d["revisions"]),
        retired=d["retired"],
    )


def workspace_from_dict(d: dict) -> Workspace:
    return Workspace(
        id=d["id"],
        name=d["name"],
        dev_board=_board_from_dict(d["dev_board"]),
        focus_boards=tuple(
            FocusBoard(
                board=_board_from_dict(fb["board"]),
                focus_name=fb["focus_name"],
                principles={p["id"]: _principle_from_dict(p) for p in fb["principles"]},
            )
            for fb in d["focus_boards"]
        ),
        cards={c["id"]: _card_from_dict(c) for c in d["cards"]},
        marks=tuple(
            XMark(m["dev_card"], m["xtag"], m["created_at"], m["note"]) for m in d["marks"]
        ),
        principle_links={x: tuple(pids) for x, pids in d["principle_links"].items()},
        wip_policy=WipPolicy(
            shared_limit=d["wip_policy"]["shared_limit"],
            per_board_limits=dict(d["wip_policy"]["per_board_limits"]),
        ),
        completion_policy=d["completion_policy"],
        clock=d["clock"],
    )


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def workspace_checksum(ws: Workspace) -> str:
    """Content hash of the canonical state; wall time never enters it."""
    return hashlib.sha256(canonical_json(workspace_to_dict(ws)).encode("utf-8")).hexdigest()
