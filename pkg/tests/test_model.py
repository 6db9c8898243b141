"""Core model: construction, structural validation, canonical serialization."""

from __future__ import annotations

from dataclasses import replace

import pytest

from kanbanx import new_workspace, validate, workspace_checksum
from kanbanx.errors import InvalidPolicy
from kanbanx.model import (
    Card,
    CardKind,
    Stage,
    WipPolicy,
    workspace_from_dict,
    workspace_to_dict,
)
from conftest import run
from kanbanx import engine


def test_new_workspace_defaults():
    ws = new_workspace("demo", 3)
    assert ws.clock == 0
    assert ws.focus_boards == ()
    assert ws.cards == {}
    assert [c.name for c in ws.dev_board.columns] == ["Backlog", "In Progress", "Done"]
    assert [c.stage for c in ws.dev_board.columns] == [Stage.QUEUE, Stage.ACTIVE, Stage.DONE]
    assert validate(ws).ok


def test_new_workspace_rejects_zero_limit():
    with pytest.raises(InvalidPolicy):
        new_workspace("demo", 0)
    with pytest.raises(InvalidPolicy):
        new_workspace("demo", WipPolicy(3, {"Security": 4}))  # cap above shared
    with pytest.raises(InvalidPolicy):
        new_workspace("demo", 3, completion_policy="lenient")


def test_limit_one_warn_workspace_rejects_any_costart():
    # With shared limit 1, starting a task that has any pending tag always
    # needs two active slots, so the co-start can never fit.
    ws = new_workspace("demo", 1, completion_policy="warn")
    ws = run(
        ws,
        engine.create_task("T"),
        engine.add_focus("Security", ["Risk"]),
    )
    fb = ws.focus_by_name("Security")
    ws = run(ws, engine.extract_xtag("c1", fb.board.id, "X", sorted(fb.principles)))
    ws2, result = engine.apply(ws, engine.start_task("c1"))
    assert not result.accepted
    assert result.rejection[0] == engine.WIP_EXCEEDED
    assert ws2 is ws


def test_validate_fresh_workspace_ok():
    assert validate(new_workspace("demo", 3)).ok


def test_validate_flags_xtag_without_principles(marked_ws):
    links = dict(marked_ws.principle_links)
    links["c4"] = ()
    broken = replace(marked_ws, principle_links=links)
    report = validate(broken)
    assert not report.ok
    assert any(v.rule == "xtag-needs-principle" for v in report.violations)


def test_validate_flags_card_in_two_columns(demo_ws):
    board = demo_ws.dev_board
    cards = dict(board.cards)
    cards["In Progress"] = cards["In Progress"] + ("c1",)  # c1 is already in Backlog
    broken = replace(demo_ws, dev_board=replace(board, cards=cards))
    report = validate(broken)
    assert not report.ok
    assert any(v.rule == "card-placement-unique" for v in report.violations)


def test_validate_flags_bad_timestamps(demo_ws):
    cards = dict(demo_ws.cards)
    cards["c1"] = replace(cards["c1"], started_at=0)  # created_at is 1
    report = validate(replace(demo_ws, cards=cards))
    assert any(v.rule == "timestamps-monotone" for v in report.violations)


def test_validate_flags_dangling_mark(marked_ws):
    cards = {cid: c for cid, c in marked_ws.cards.items() if cid != "c1"}
    board = marked_ws.dev_board
    stripped = {name: tuple(i for i in ids if i != "c1") for name, ids in board.cards.items()}
    broken = replace(
        marked_ws, cards=cards, dev_board=replace(board, cards=stripped)
    )
    report = validate(broken)
    assert any(v.rule == "mark-endpoints-exist" for v in report.violations)


def test_validate_flags_wip_overflow(demo_ws):
    # Hand-move three cards into In Progress while the limit is 1.
    ws = run(demo_ws, engine.create_task("B"), engine.create_task("C"))
    ws = run(
        ws,
        engine.move_card("c1", "In Progress"),
        engine.move_card("c5", "In Progress"),
    )
    squeezed = replace(ws, wip_policy=WipPolicy(1))
    report = validate(squeezed)
    assert any(v.rule == "wip-within-limit" for v in report.violations)


def test_serialization_round_trip(marked_ws):
    ws = run(marked_ws, engine.start_task("c1"))
    data = workspace_to_dict(ws)
    back = workspace_from_dict(data)
    assert back == ws
    assert workspace_checksum(back) == workspace_checksum(ws)


def test_checksum_ignores_card_dict_order(marked_ws):
    shuffled = dict(reversed(list(marked_ws.cards.items())))
    assert workspace_checksum(replace(marked_ws, cards=shuffled)) == workspace_checksum(
        marked_ws
    )


def test_checksum_changes_with_state(demo_ws):
    ws2 = run(demo_ws, engine.create_task("Another"))
    assert workspace_checksum(ws2) != workspace_checksum(demo_ws)


def test_card_dataclass_shape():
    card = Card(id="c1", kind=CardKind.TASK, title="T")
    assert card.started_at is None and card.done_at is None and card.created_at == 0
