"""Command validation and application.

Each command is a pure function (workspace, command) -> (workspace', result):
the handler checks every rule against the pre-state, then builds the event
list and folds it. A rejected command returns the pre-state object untouched,
which is what makes transitions atomic, and co-starts all-or-nothing.

The workflow rules enforced here: focus tags are extracted from dev tasks and
marked back to them; starting a task co-starts its pending tags under one
shared WIP limit; completing a tag feeds its change tasks into the front of
the dev backlog; completing a task is gated (or warned) on unfinished tags.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

from .errors import MalformedCommand
from .events import (
    CARD_CREATED,
    CARD_MOVED,
    FOCUS_ADDED,
    MARK_ADDED,
    MARK_REMOVED,
    POLICY_CHANGED,
    PRINCIPLE_ADDED,
    PRINCIPLE_RETIRED,
    PRINCIPLE_REVISED,
    Event,
    apply_events,
)
from .model import (
    COMPLETION_POLICIES,
    DEV_KINDS,
    STRICT,
    Card,
    CardKind,
    Stage,
    Workspace,
)

# Rejection rule names; stable, mirrored by the service and CLI.
EMPTY_TITLE = "EmptyTitle"
DUPLICATE_FOCUS = "DuplicateFocus"
NO_PRINCIPLES = "NoPrinciples"
UNKNOWN_TASK = "UnknownTask"
UNKNOWN_FOCUS = "UnknownFocus"
UNKNOWN_CARD = "UnknownCard"
UNKNOWN_XTAG = "UnknownXtag"
UNKNOWN_COLUMN = "UnknownColumn"
UNKNOWN_PRINCIPLE = "UnknownPrinciple"
UNKNOWN_MARK = "UnknownMark"
MISSING_PRINCIPLE = "MissingPrinciple"
TASK_ALREADY_DONE = "TaskAlreadyDone"
WRONG_KIND = "WrongKind"
DUPLICATE_MARK = "DuplicateMark"
PROTECTED_MARK = "ProtectedMark"
WIP_EXCEEDED = "WipExceeded"
NOT_QUEUED = "NotQueued"
NOT_ACTIVE = "NotActive"
GATE_BLOCKED = "GateBlocked"
DIRECT_XTAG_DONE = "DirectXtagDone"
DONE_IS_TERMINAL = "DoneIsTerminal"
RETIRE_WOULD_ORPHAN = "RetireWouldOrphan"
INVALID_POLICY = "InvalidPolicy"

CREATE_TASK = "create_task"
ADD_FOCUS = "add_focus"
ADD_PRINCIPLE = "add_principle"
REVISE_PRINCIPLE = "revise_principle"
RETIRE_PRINCIPLE = "retire_principle"
EXTRACT_XTAG = "extract_xtag"
LINK_MARK = "link_mark"
UNLINK_MARK = "unlink_mark"
START_TASK = "start_task"
MOVE_CARD = "move_card"
COMPLETE_XTAG = "complete_xtag"
COMPLETE_TASK = "complete_task"
SET_POLICY = "set_policy"


@dataclass(frozen=True)
class Command:
    kind: str
    payload: dict
    issued_at: Optional[str] = None  # wall-clock metadata, never semantics


@dataclass(frozen=True)
class TransitionResult:
    accepted: bool
    events: tuple[Event, ...]
    rejection: Optional[tuple[str, str]] = None  # (rule, message)
    warnings: tuple[str, ...] = ()


# -- command constructors ---------------------------------------------------


def create_task(title: str, description: str = "") -> Command:
    return Command(CREATE_TASK, {"title": title, "description": description})


def add_focus(focus_name: str, principles: Sequence[str]) -> Command:
    return Command(ADD_FOCUS, {"focus_name": focus_name, "principles": list(principles)})


def add_principle(focus_id: str, statement: str) -> Command:
    return Command(ADD_PRINCIPLE, {"focus_id": focus_id, "statement": statement})


def revise_principle(principle_id: str, statement: str) -> Command:
    return Command(REVISE_PRINCIPLE, {"principle_id": principle_id, "statement": statement})


def retire_principle(principle_id: str) -> Command:
    return Command(RETIRE_PRINCIPLE, {"principle_id": principle_id})


def extract_xtag(
    task_id: str,
    focus_id: str,
    title: str,
    principle_ids: Sequence[str],
    description: str = "",
) -> Command:
    return Command(
        EXTRACT_XTAG,
        {
            "task_id": task_id,
            "focus_id": focus_id,
            "title": title,
            "principle_ids": list(principle_ids),
            "description": description,
        },
    )


def link_mark(dev_card_id: str, xtag_id: str, note: Optional[str] = None) -> Command:
    return Command(LINK_MARK, {"dev_card": dev_card_id, "xtag": xtag_id, "note": note})


def unlink_mark(dev_card_id: str, xtag_id: str) -> Command:
    return Command(UNLINK_MARK, {"dev_card": dev_card_id, "xtag": xtag_id})


def start_task(task_id: str) -> Command:
    return Command(START_TASK, {"task_id": task_id})


def move_card(card_id: str, target_column: str) -> Command:
    return Command(MOVE_CARD, {"card_id": card_id, "target_column": target_column})


def complete_xtag(xtag_id: str, change_specs: Sequence[tuple[str, str] | dict] = ()) -> Command:
    specs = []
    for spec in change_specs:
        if isinstance(spec, dict):
            specs.append({"title": spec["title"], "description": spec.get("description", "")})
        else:
            title, description = spec
            specs.append({"title": title, "description": description})
    return Command(COMPLETE_XTAG, {"xtag_id": xtag_id, "change_specs": specs})


def complete_task(task_id: str) -> Command:
    return Command(COMPLETE_TASK, {"task_id": task_id})


def set_policy(
    shared_limit: Optional[int] = None,
    per_board_limits: Optional[dict[str, int]] = None,
    completion_policy: Optional[str] = None,
) -> Command:
    return Command(
        SET_POLICY,
        {
            "shared_limit": shared_limit,
            "per_board_limits": dict(per_board_limits) if per_board_limits is not None else None,
            "completion_policy": completion_policy,
        },
    )


# -- payload schemas ---------------------------------------------------------

_SCHEMAS: dict[str, dict[str, tuple[type, ...]]] = {
    CREATE_TASK: {"title": (str,), "description": (str,)},
    ADD_FOCUS: {"focus_name": (str,), "principles": (list,)},
    ADD_PRINCIPLE: {"focus_id": (str,), "statement": (str,)},
    REVISE_PRINCIPLE: {"principle_id": (str,), "statement": (str,)},
    RETIRE_PRINCIPLE: {"principle_id": (str,)},
    EXTRACT_XTAG: {
        "task_id": (str,),
        "focus_id": (str,),
        "title": (str,),
        "principle_ids": (list,),
        "description": (str,),
    },
    LINK_MARK: {"dev_card": (str,), "xtag": (str,), "note": (str, type(None))},
    UNLINK_MARK: {"dev_card": (str,), "xtag": (str,)},
    START_TASK: {"task_id": (str,)},
    MOVE_CARD: {"card_id": (str,), "target_column": (str,)},
    COMPLETE_XTAG: {"xtag_id": (str,), "change_specs": (list,)},
    COMPLETE_TASK: {"task_id": (str,)},
    SET_POLICY: {
        "shared_limit": (int, type(None)),
        "per_board_limits": (dict, type(None)),
        "completion_policy": (str, type(None)),
    },
}

_OPTIONAL_FIELDS = {
    CREATE_TASK: {"description": ""},
    EXTRACT_XTAG: {"description": ""},
    LINK_MARK: {"note": None},
    COMPLETE_XTAG: {"change_specs": []},
    SET_POLICY: {"shared_limit": None, "per_board_limits": None, "completion_policy": None},
}


def check_command(command: Command) -> Command:
    """Validate shape, fill optional fields; raises MalformedCommand."""
    schema = _SCHEMAS.get(command.kind)
    if schema is None:
        raise MalformedCommand(f"unknown command kind {command.kind!r}")
    payload = dict(command.payload)
    defaults = _OPTIONAL_FIELDS.get(command.kind, {})
    for name, value in defaults.items():
        payload.setdefault(name, value)
    for name, types in schema.items():
        if name not in payload:
            raise MalformedCommand(f"{command.kind} payload missing field {name!r}")
        value = payload[name]
        if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
            raise MalformedCommand(f"{command.kind} field {name!r} has the wrong type")
    unknown = set(payload) - set(schema)
    if unknown:
        raise MalformedCommand(f"{command.kind} payload has unknown fields {sorted(unknown)}")
    if command.kind == ADD_FOCUS and not all(isinstance(s, str) for s in payload["principles"]):
        raise MalformedCommand("add_focus principles must be strings")
    if command.kind == EXTRACT_XTAG and not all(
        isinstance(s, str) for s in payload["principle_ids"]
    ):
        raise MalformedCommand("extract_xtag principle_ids must be strings")
    if command.kind == COMPLETE_XTAG:
        specs = []
        for spec in payload["change_specs"]:
            if not isinstance(spec, dict) or not isinstance(spec.get("title"), str):
                raise MalformedCommand("complete_xtag change_specs must be {title, description}")
            description = spec.get("description", "")
            if not isinstance(description, str):
                raise MalformedCommand("complete_xtag change_specs must be {title, description}")
            specs.append({"title": spec["title"], "description": description})
        payload["change_specs"] = specs
    if command.kind == SET_POLICY and payload["per_board_limits"] is not None:
        for k, v in payload["per_board_limits"].items():
            if not isinstance(k, str) or not isinstance(v, int) or isinstance(v, bool):
                raise MalformedCommand("per_board_limits must map board names to integers")
    return Command(command.kind, payload, command.issued_at)


# -- application --------------------------------------------------------------


def apply(ws: Workspace, command: Command) -> tuple[Workspace, TransitionResult]:
    """Apply one command; on rejection the returned workspace IS the input."""
    command = check_command(command)
    handler = _HANDLERS[command.kind]
    return handler(ws, command)


def _reject(ws: Workspace, rule: str, message: str) -> tuple[Workspace, TransitionResult]:
    return ws, TransitionResult(accepted=False, events=(), rejection=(rule, message))


def _accept(
    ws: Workspace, command: Command, events: list[Event], warnings: tuple[str, ...] = ()
) -> tuple[Workspace, TransitionResult]:
    # Every effect records the command that produced it ("by"), so the log is
    # an audit trail readable without the command stream.
    stamped = tuple(
        Event(
            ev.seq,
            ev.kind,
            {**ev.payload, "by": command.kind},
            ev.wall_time or command.issued_at or _now(),
        )
        for ev in events
    )
    return apply_events(ws, stamped), TransitionResult(
        accepted=True, events=stamped, warnings=warnings
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _active_after(ws: Workspace, extra_by_board: dict[str, int]) -> Optional[str]:
    """Check shared and per-board limits after adding cards; None if fine."""
    extra_total = sum(extra_by_board.values())
    if ws.total_active() + extra_total > ws.wip_policy.shared_limit:
        return (
            f"{ws.total_active()} active + {extra_total} starting exceeds "
            f"shared limit {ws.wip_policy.shared_limit}"
        )
    for board_id, extra in extra_by_board.items():
        board = ws.board(board_id)
        cap = ws.wip_policy.per_board_limits.get(board.name)
        if cap is not None and board.stage_count(Stage.ACTIVE) + extra > cap:
            return f"board {board.name!r} would exceed its cap of {cap}"
    return None


def _unfinished_xtags(ws: Workspace, dev_card_id: str) -> list[str]:
    out = []
    for m in ws.marks_for_dev(dev_card_id):
        tag = ws.cards.get(m.xtag)
        if tag is not None and tag.done_at is None:
            out.append(m.xtag)
    return out


def _move_event(ws: Workspace, seq: int, card_id: str, to_column: str) -> Event:
    board, src = ws.placement(card_id)
    return Event(
        seq,
        CARD_MOVED,
        {"card_id": card_id, "board_id": board.id, "from_column": src, "to_column": to_column},
    )


def _handle_create_task(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    if not p["title"].strip():
        return _reject(ws, EMPTY_TITLE, "task title must be nonempty")
    queue = ws.dev_board.first_column(Stage.QUEUE)
    seq = ws.clock + 1
    ev = Event(
        seq,
        CARD_CREATED,
        {
            "card_id": f"c{seq}",
            "kind": CardKind.TASK.value,
            "title": p["title"],
            "description": p["description"],
            "board_id": ws.dev_board.id,
            "column": queue.name,
            "position": len(ws.dev_board.cards.get(queue.name, ())),
        },
    )
    return _accept(ws, cmd, [ev])


def _handle_add_focus(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    name = p["focus_name"]
    if not name.strip():
        return _reject(ws, EMPTY_TITLE, "focus name must be nonempty")
    statements = [s for s in p["principles"]]
    if not statements or any(not s.strip() for s in statements):
        return _reject(ws, NO_PRINCIPLES, "a focus needs at least one nonempty principle")
    if any(b.name == name for b in ws.boards()):
        return _reject(ws, DUPLICATE_FOCUS, f"a board named {name!r} already exists")
    seq = ws.clock + 1
    events = [
        Event(seq, FOCUS_ADDED, {"board_id": f"b{seq}", "focus_name": name})
    ]
    for i, statement in enumerate(statements):
        pseq = seq + 1 + i
        events.append(
            Event(
                pseq,
                PRINCIPLE_ADDED,
                {"principle_id": f"p{pseq}", "focus_id": f"b{seq}", "statement": statement},
            )
        )
    return _accept(ws, cmd, events)


def _handle_add_principle(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    if ws.focus_board(p["focus_id"]) is None:
        return _reject(ws, UNKNOWN_FOCUS, f"no focus board {p['focus_id']!r}")
    if not p["statement"].strip():
        return _reject(ws, EMPTY_TITLE, "principle statement must be nonempty")
    seq = ws.clock + 1
    ev = Event(
        seq,
        PRINCIPLE_ADDED,
        {"principle_id": f"p{seq}", "focus_id": p["focus_id"], "statement": p["statement"]},
    )
    return _accept(ws, cmd, [ev])


def _handle_revise_principle(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    found = ws.principle(p["principle_id"])
    if found is None or found[1].retired:
        return _reject(ws, UNKNOWN_PRINCIPLE, f"no live principle {p['principle_id']!r}")
    if not p["statement"].strip():
        return _reject(ws, EMPTY_TITLE, "principle statement must be nonempty")
    ev = Event(
        ws.clock + 1,
        PRINCIPLE_REVISED,
        {"principle_id": p["principle_id"], "statement": p["statement"]},
    )
    return _accept(ws, cmd, [ev])


def _handle_retire_principle(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    found = ws.principle(p["principle_id"])
    if found is None or found[1].retired:
        return _reject(ws, UNKNOWN_PRINCIPLE, f"no live principle {p['principle_id']!r}")
    fb, principle = found
    # A live xtag must never be left covered only by retired principles.
    for xtag_id, links in ws.principle_links.items():
        if principle.id not in links:
            continue
        card = ws.cards.get(xtag_id)
        if card is None or card.done_at is not None:
            continue
        still_live = [
            pid
            for pid in links
            if pid != principle.id and pid in fb.principles and not fb.principles[pid].retired
        ]
        if not still_live:
            return _reject(
                ws,
                RETIRE_WOULD_ORPHAN,
                f"retiring {principle.id} would leave live xtag {xtag_id} with no live principle",
            )
    ev = Event(ws.clock + 1, PRINCIPLE_RETIRED, {"principle_id": p["principle_id"]})
    return _accept(ws, cmd, [ev])


def _handle_extract_xtag(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    task = ws.cards.get(p["task_id"])
    if task is None or task.kind not in DEV_KINDS:
        return _reject(ws, UNKNOWN_TASK, f"no dev-board task {p['task_id']!r}")
    if task.done_at is not None:
        return _reject(ws, TASK_ALREADY_DONE, f"task {task.id} is already done")
    fb = ws.focus_board(p["focus_id"])
    if fb is None:
        return _reject(ws, UNKNOWN_FOCUS, f"no focus board {p['focus_id']!r}")
    if not p["title"].strip():
        return _reject(ws, EMPTY_TITLE, "xtag title must be nonempty")
    principle_ids = list(dict.fromkeys(p["principle_ids"]))
    if not principle_ids:
        return _reject(ws, MISSING_PRINCIPLE, "an xtag must reference at least one principle")
    for pid in principle_ids:
        principle = fb.principles.get(pid)
        if principle is None or principle.retired:
            return _reject(
                ws,
                MISSING_PRINCIPLE,
                f"{pid!r} is not a live principle of focus {fb.focus_name!r}",
            )
    queue = fb.board.first_column(Stage.QUEUE)
    seq = ws.clock + 1
    xtag_id = f"c{seq}"
    events = [
        Event(
            seq,
            CARD_CREATED,
            {
                "card_id": xtag_id,
                "kind": CardKind.XTAG.value,
                "title": p["title"],
                "description": p["description"],
                "board_id": fb.board.id,
                "column": queue.name,
                "position": len(fb.board.cards.get(queue.name, ())),
                "focus_id": fb.board.id,
                "principle_ids": principle_ids,
            },
        ),
        Event(seq + 1, MARK_ADDED, {"dev_card": task.id, "xtag": xtag_id}),
    ]
    return _accept(ws, cmd, events)


def _handle_link_mark(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    dev = ws.cards.get(p["dev_card"])
    tag = ws.cards.get(p["xtag"])
    if dev is None or tag is None:
        return _reject(ws, UNKNOWN_CARD, "both mark endpoints must exist")
    if dev.kind not in DEV_KINDS or tag.kind != CardKind.XTAG:
        return _reject(ws, WRONG_KIND, "a mark links a dev task to an xtag")
    if ws.has_mark(dev.id, tag.id):
        return _reject(ws, DUPLICATE_MARK, f"({dev.id}, {tag.id}) is already marked")
    if dev.done_at is not None:
        return _reject(ws, TASK_ALREADY_DONE, f"dev card {dev.id} is already done")
    dev_board, dev_col = ws.placement(dev.id)
    tag_board, tag_col = ws.placement(tag.id)
    co_start = (
        dev_board.column(dev_col).stage == Stage.ACTIVE
        and tag_board.column(tag_col).stage == Stage.QUEUE
    )
    seq = ws.clock + 1
    events = [Event(seq, MARK_ADDED, {"dev_card": dev.id, "xtag": tag.id, "note": p["note"]})]
    if co_start:
        # Linking to an already-running task pulls the queued tag along, under
        # the same WIP check as any other start; the whole command stands or falls.
        problem = _active_after(ws, {tag_board.id: 1})
        if problem is not None:
            return _reject(ws, WIP_EXCEEDED, problem)
        active = tag_board.first_column(Stage.ACTIVE)
        events.append(_move_event(ws, seq + 1, tag.id, active.name))
    return _accept(ws, cmd, events)


def _handle_unlink_mark(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    if not ws.has_mark(p["dev_card"], p["xtag"]):
        return _reject(ws, UNKNOWN_MARK, f"no mark ({p['dev_card']}, {p['xtag']})")
    dev = ws.cards.get(p["dev_card"])
    if dev is not None and dev.kind == CardKind.CHANGE_TASK and dev.origin_xtag == p["xtag"]:
        return _reject(
            ws, PROTECTED_MARK, "the provenance mark of a change task cannot be removed"
        )
    ev = Event(ws.clock + 1, MARK_REMOVED, {"dev_card": p["dev_card"], "xtag": p["xtag"]})
    return _accept(ws, cmd, [ev])


def _handle_start_task(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    task = ws.cards.get(p["task_id"])
    if task is None or task.kind not in DEV_KINDS:
        return _reject(ws, UNKNOWN_TASK, f"no dev-board task {p['task_id']!r}")
    board, col = ws.placement(task.id)
    if board.column(col).stage != Stage.QUEUE:
        return _reject(ws, NOT_QUEUED, f"task {task.id} is not in a queue column")
    pending: list[Card] = []
    for m in ws.marks_for_dev(task.id):
        tag = ws.cards.get(m.xtag)
        if tag is None or tag.done_at is not None:
            continue
        tag_board, tag_col = ws.placement(tag.id)
        if tag_board.column(tag_col).stage != Stage.ACTIVE:
            pending.append(tag)
    extra: dict[str, int] = {board.id: 1}
    for tag in pending:
        extra[tag.focus_id] = extra.get(tag.focus_id, 0) + 1
    problem = _active_after(ws, extra)
    if problem is not None:
        return _reject(ws, WIP_EXCEEDED, problem)
    seq = ws.clock + 1
    events = [_move_event(ws, seq, task.id, board.first_column(Stage.ACTIVE).name)]
    for i, tag in enumerate(pending):
        tag_board = ws.board(tag.focus_id)
        events.append(
            _move_event(ws, seq + 1 + i, tag.id, tag_board.first_column(Stage.ACTIVE).name)
        )
    return _accept(ws, cmd, events)


def _handle_move_card(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    card = ws.cards.get(p["card_id"])
    if card is None:
        return _reject(ws, UNKNOWN_CARD, f"no card {p['card_id']!r}")
    board, src_name = ws.placement(card.id)
    target = board.column(p["target_column"])
    if target is None:
        return _reject(
            ws, UNKNOWN_COLUMN, f"board {board.name!r} has no column {p['target_column']!r}"
        )
    src = board.column(src_name)
    if src.stage == Stage.DONE:
        return _reject(ws, DONE_IS_TERMINAL, f"{card.id} is done; done cards do not move")
    warnings: tuple[str, ...] = ()
    if target.stage == Stage.DONE:
        if card.kind == CardKind.XTAG:
            return _reject(
                ws,
                DIRECT_XTAG_DONE,
                "xtags finish via complete_xtag so their feedback step cannot be skipped",
            )
        unfinished = _unfinished_xtags(ws, card.id)
        if unfinished:
            if ws.completion_policy == STRICT:
                return _reject(
                    ws, GATE_BLOCKED, f"linked xtags not done: {', '.join(unfinished)}"
                )
            warnings = tuple(f"{x} not done" for x in unfinished)
    if target.stage == Stage.ACTIVE and src.stage != Stage.ACTIVE:
        problem = _active_after(ws, {board.id: 1})
        if problem is not None:
            return _reject(ws, WIP_EXCEEDED, problem)
    ev = _move_event(ws, ws.clock + 1, card.id, target.name)
    return _accept(ws, cmd, [ev], warnings)


def _handle_complete_xtag(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    tag = ws.cards.get(p["xtag_id"])
    if tag is None or tag.kind != CardKind.XTAG:
        return _reject(ws, UNKNOWN_XTAG, f"no xtag {p['xtag_id']!r}")
    board, col = ws.placement(tag.id)
    if board.column(col).stage != Stage.ACTIVE:
        return _reject(ws, NOT_ACTIVE, f"xtag {tag.id} is not active")
    specs = p["change_specs"]
    if any(not s["title"].strip() for s in specs):
        return _reject(ws, EMPTY_TITLE, "change task titles must be nonempty")
    seq = ws.clock + 1
    events = [_move_event(ws, seq, tag.id, board.first_column(Stage.DONE).name)]
    # Change tasks enter the FRONT of the dev queue, first spec ending at
    # index 0; explicit positions keep the fold trivially deterministic.
    dev_queue = ws.dev_board.first_column(Stage.QUEUE)
    next_seq = seq + 1
    for i, spec in enumerate(specs):
        change_id = f"c{next_seq}"
        events.append(
            Event(
                next_seq,
                CARD_CREATED,
                {
                    "card_id": change_id,
                    "kind": CardKind.CHANGE_TASK.value,
                    "title": spec["title"],
                    "description": spec["description"],
                    "board_id": ws.dev_board.id,
                    "column": dev_queue.name,
                    "position": i,
                    "origin_xtag": tag.id,
                },
            )
        )
        events.append(Event(next_seq + 1, MARK_ADDED, {"dev_card": change_id, "xtag": tag.id}))
        next_seq += 2
    return _accept(ws, cmd, events)


def _handle_complete_task(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    task = ws.cards.get(p["task_id"])
    if task is None or task.kind not in DEV_KINDS:
        return _reject(ws, UNKNOWN_TASK, f"no dev-board task {p['task_id']!r}")
    board, col = ws.placement(task.id)
    if board.column(col).stage != Stage.ACTIVE:
        return _reject(ws, NOT_ACTIVE, f"task {task.id} is not active")
    warnings: tuple[str, ...] = ()
    unfinished = _unfinished_xtags(ws, task.id)
    if unfinished:
        if ws.completion_policy == STRICT:
            return _reject(ws, GATE_BLOCKED, f"linked xtags not done: {', '.join(unfinished)}")
        warnings = tuple(f"{x} not done" for x in unfinished)
    ev = _move_event(ws, ws.clock + 1, task.id, board.first_column(Stage.DONE).name)
    return _accept(ws, cmd, [ev], warnings)


def _handle_set_policy(ws: Workspace, cmd: Command) -> tuple[Workspace, TransitionResult]:
    p = cmd.payload
    shared = p["shared_limit"] if p["shared_limit"] is not None else ws.wip_policy.shared_limit
    per_board = (
        dict(p["per_board_limits"])
        if p["per_board_limits"] is not None
        else dict(ws.wip_policy.per_board_limits)
    )
    completion = p["completion_policy"] or ws.completion_policy
    if completion not in COMPLETION_POLICIES:
        return _reject(ws, INVALID_POLICY, f"completion_policy must be one of {COMPLETION_POLICIES}")
    if shared < 1:
        return _reject(ws, INVALID_POLICY, "shared_limit must be >= 1")
    for name, cap in per_board.items():
        if cap < 1:
            return _reject(ws, INVALID_POLICY, f"per-board limit for {name!r} must be >= 1")
        if cap > shared:
            return _reject(ws, INVALID_POLICY, f"per-board limit for {name!r} exceeds shared_limit")
    # A policy change may not make the current state illegal.
    if ws.total_active() > shared:
        return _reject(
            ws, WIP_EXCEEDED, f"{ws.total_active()} cards are active; limit {shared} is too low"
        )
    for b in ws.boards():
        cap = per_board.get(b.name)
        if cap is not None and b.stage_count(Stage.ACTIVE) > cap:
            return _reject(
                ws, WIP_EXCEEDED, f"board {b.name!r} already has more than {cap} active cards"
            )
    ev = Event(
        ws.clock + 1,
        POLICY_CHANGED,
        {
            "shared_limit": shared,
            "per_board_limits": per_board,
            "completion_policy": completion,
        },
    )
    return _accept(ws, cmd, [ev])


_HANDLERS: dict[str, Callable[[Workspace, Command], tuple[Workspace, TransitionResult]]] = {
    CREATE_TASK: _handle_create_task,
    ADD_FOCUS: _handle_add_focus,
    ADD_PRINCIPLE: _handle_add_principle,
    REVISE_PRINCIPLE: _handle_revise_principle,
    RETIRE_PRINCIPLE: _handle_retire_principle,
    EXTRACT_XTAG: _handle_extract_xtag,
    LINK_MARK: _handle_link_mark,
    UNLINK_MARK: _handle_unlink_mark,
    START_TASK: _handle_start_task,
    MOVE_CARD: _handle_move_card,
    COMPLETE_XTAG: _handle_complete_xtag,
    COMPLETE_TASK: _handle_complete_task,
    SET_POLICY: _handle_set_policy,
}

COMMAND_KINDS = frozenset(_HANDLERS)
