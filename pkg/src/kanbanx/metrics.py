"""Read-only analytics: flow metrics and traceability queries.

Everything here is a pure function over a workspace snapshot or an event
list; times are logical clock ticks, so results replay identically.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import UnknownCard, UnknownFocus, UnknownPrinciple
from .events import CARD_CREATED, CARD_MOVED, FOCUS_ADDED, WORKSPACE_CREATED, Event
from .model import DEV_KINDS, CardKind, Workspace


def coverage_ratio(ws: Workspace, focus_id: str) -> float:
    """Fraction of live dev tasks carrying at least one mark into the focus.

    A steering signal over live work only: 1.0 when no live tasks remain.
    """
    fb = ws.focus_board(focus_id)
    if fb is None:
        raise UnknownFocus(f"no focus board {focus_id!r}")
    live = [
        c for c in ws.cards.values() if c.kind in DEV_KINDS and c.done_at is None
    ]
    if not live:
        return 1.0
    marked = 0
    for card in live:
        for m in ws.marks_for_dev(card.id):
            tag = ws.cards.get(m.xtag)
            if tag is not None and tag.focus_id == focus_id:
                marked += 1
                break
    return marked / len(live)


@dataclass(frozen=True)
class TraceNode:
    id: str
    type: str  # "card" | "principle"
    label: str
    kind: Optional[str] = None  # card kind for card nodes


@dataclass(frozen=True)
class TraceEdge:
    kind: str  # "mark" | "principle" | "provenance"
    a: str  # mark: dev card; principle: xtag; provenance: change task
    b: str  # mark: xtag;     principle: principle id; provenance: origin xtag


@dataclass(frozen=True)
class TraceGraph:
    nodes: tuple[TraceNode, ...]
    edges: tuple[TraceEdge, ...]

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "type": n.type, "label": n.label, "kind": n.kind}
                for n in self.nodes
            ],
            "edges": [{"kind": e.kind, "a": e.a, "b": e.b} for e in self.edges],
        }


def trace(ws: Workspace, card_id: str) -> TraceGraph:
    """Connected subgraph reachable from the card over marks, principle
    links, and change-task provenance; breadth-first, deterministic order."""
    if card_id not in ws.cards:
        raise UnknownCard(f"no card {card_id!r}")

    neighbors: dict[str, list[tuple[str, str, str]]] = {}

    def connect(kind: str, a: str, b: str) -> None:
        neighbors.setdefault(a, []).append((kind, a, b))
        neighbors.setdefault(b, []).append((kind, a, b))

    for m in ws.marks:
        connect("mark", m.dev_card, m.xtag)
    for xtag_id, pids in ws.principle_links.items():
        for pid in pids:
            connect("principle", xtag_id, pid)
    for c in ws.cards.values():
        if c.kind == CardKind.CHANGE_TASK and c.origin_xtag:
            connect("provenance", c.id, c.origin_xtag)

    seen = {card_id}
    order = [card_id]
    edges: list[TraceEdge] = []
    edge_seen: set[tuple[str, str, str]] = set()
    queue = deque([card_id])
    while queue:
        node = queue.popleft()
        for kind, a, b in neighbors.get(node, ()):
            if (kind, a, b) not in edge_seen:
                edge_seen.add((kind, a, b))
                edges.append(TraceEdge(kind, a, b))
            other = b if node == a else a
            if other not in seen:
                seen.add(other)
                order.append(other)
                queue.append(other)

    nodes = []
    for node_id in order:
        card = ws.cards.get(node_id)
        if card is not None:
            nodes.append(TraceNode(node_id, "card", card.title, card.kind.value))
        else:
            found = ws.principle(node_id)
            label = found[1].statement if found else node_id
            nodes.append(TraceNode(node_id, "principle", label))
    return TraceGraph(nodes=tuple(nodes), edges=tuple(edges))


def principle_usage(ws: Workspace, principle_id: str) -> list[tuple[str, list[str]]]:
    """Every xtag linking the principle, with that xtag's marked dev cards."""
    if ws.principle(principle_id) is None:
        raise UnknownPrinciple(f"no principle {principle_id!r}")
    out = []
    for xtag_id, pids in ws.principle_links.items():
        if principle_id in pids:
            dev_cards = [m.dev_card for m in ws.marks_for_xtag(xtag_id)]
            out.append((xtag_id, dev_cards))
    return out


@dataclass(frozen=True)
class CumulativeFlowPoint:
    tick: int
    board_id: str
    column: str
    count: int


@dataclass(frozen=True)
class FlowMetrics:
    """Lead/cycle per done card, throughput per board, cumulative flow."""

    lead_times: dict[str, int]
    cycle_times: dict[str, int]
    throughput: dict[str, list[tuple[int, int]]]  # board -> [(window start, done count)]
    cumulative_flow: tuple[CumulativeFlowPoint, ...]
    window: int

    def cumulative_flow_rows(self) -> list[tuple[int, str, str, int]]:
        """Plot-ready (tick, board, column, count) rows."""
        return [(p.tick, p.board_id, p.column, p.count) for p in self.cumulative_flow]

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "lead_times": dict(sorted(self.lead_times.items())),
            "cycle_times": dict(sorted(self.cycle_times.items())),
            "throughput": {b: [list(x) for x in xs] for b, xs in sorted(self.throughput.items())},
            "cumulative_flow": [
                {"tick": p.tick, "board": p.board_id, "column": p.column, "count": p.count}
                for p in self.cumulative_flow
            ],
        }


def flow_metrics(events: Sequence[Event], window: int = 10) -> FlowMetrics:
    """Fold the event log into flow metrics; wall time never participates."""
    if window < 1:
        raise ValueError("window must be >= 1")

    # board id -> column name -> set of card ids; plus per-card stamps
    boards: dict[str, dict[str, set[str]]] = {}
    board_columns: dict[str, list[tuple[str, str]]] = {}  # id -> [(column, stage)]
    placement: dict[str, tuple[str, str]] = {}
    created: dict[str, int] = {}
    started: dict[str, int] = {}
    done: dict[str, int] = {}
    done_board: dict[str, str] = {}
    cfd: list[CumulativeFlowPoint] = []
    max_seq = -1

    default_columns = [("Backlog", "queue"), ("In Progress", "active"), ("Done", "done")]

    def add_board(board_id: str) -> None:
        boards[board_id] = {name: set() for name, _ in default_columns}
        board_columns[board_id] = list(default_columns)

    def stage_of(board_id: str, column: str) -> str:
        for name, stage in board_columns[board_id]:
            if name == column:
                return stage
        raise KeyError(column)

    def record_tick(tick: int) -> None:
        for board_id, cols in boards.items():
            for name, _ in board_columns[board_id]:
                cfd.append(CumulativeFlowPoint(tick, board_id, name, len(cols[name])))

    for ev in events:
        seq = ev.seq
        p = ev.payload
        if ev.kind == WORKSPACE_CREATED:
            add_board(p.get("dev_board_id", "b0"))
        elif ev.kind == FOCUS_ADDED:
            add_board(p["board_id"])
        elif ev.kind == CARD_CREATED:
            boards[p["board_id"]][p["column"]].add(p["card_id"])
            placement[p["card_id"]] = (p["board_id"], p["column"])
            created[p["card_id"]] = seq
        elif ev.kind == CARD_MOVED:
            card_id = p["card_id"]
            board_id, src = placement[card_id]
            dst = p["to_column"]
            boards[board_id][src].discard(card_id)
            boards[board_id][dst].add(card_id)
            placement[card_id] = (board_id, dst)
            stage = stage_of(board_id, dst)
            if stage == "active" and card_id not in started:
                started[card_id] = seq
            if stage == "done" and card_id not in done:
                done[card_id] = seq
                done_board[card_id] = board_id
        record_tick(seq)
        max_seq = seq

    lead = {cid: done[cid] - created[cid] for cid in done}
    cycle = {cid: done[cid] - started[cid] for cid in done if cid in started}

    throughput: dict[str, list[tuple[int, int]]] = {b: [] for b in boards}
    if max_seq >= 0:
        buckets = max_seq // window + 1
        counts: dict[str, list[int]] = {b: [0] * buckets for b in boards}
        for cid, at in done.items():
            counts[done_board[cid]][at // window] += 1
        for board_id, per_bucket in counts.items():
            throughput[board_id] = [(k * window, n) for k, n in enumerate(per_bucket)]

    return FlowMetrics(
        lead_times=lead,
        cycle_times=cycle,
        throughput=throughput,
        cumulative_flow=tuple(cfd),
        window=window,
    )
