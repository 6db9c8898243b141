"""Terminal client: every engine command, board rendering, metrics, log I/O.

The CLI embeds the engine and works directly on the data directory (the log
format is the single source of truth either way), taking an exclusive lock
around mutating commands. Exit codes: 0 accepted, 2 engine rejection (rule
name on stderr), 1 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

from . import engine, metrics, presets, service, store
from .errors import KanbanError
from .events import event_from_json, event_to_json
from .model import Workspace, workspace_checksum

ENV_DATA_DIR = "KANBANX_DATA_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2


class CliError(Exception):
    """Usage or I/O failure; maps to exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exit code 2 is reserved for rejections
        self.print_usage(sys.stderr)
        raise CliError(message)


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # installed on the main parser with real defaults and on every subparser
    # with SUPPRESS, so the flags work both before and after the subcommand
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument(
        "--data-dir",
        default=default,
        help=f"workspace storage directory (default: ${ENV_DATA_DIR} or ./kanbanx-data)",
    )
    parser.add_argument(
        "--workspace", default=default, help="workspace id (default: the only one)"
    )
    parser.add_argument(
        "--output",
        choices=("human", "structured"),
        default=argparse.SUPPRESS if suppress else "human",
        help="render mode",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="kanbanx", description=__doc__)
    _global_options(parser, suppress=False)
    shared = argparse.ArgumentParser(add_help=False)
    _global_options(shared, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(owner, name, **kwargs):
        return owner.add_parser(name, parents=[shared], **kwargs)

    p = add(sub, "init", help="create a workspace")
    p.add_argument("name")
    p.add_argument("--limit", type=int, default=3, help="shared WIP limit across all boards")
    p.add_argument(
        "--per-board", action="append", default=[], metavar="BOARD=N", help="optional board cap"
    )
    p.add_argument("--completion", choices=("strict", "warn"), default="strict")
    p.add_argument("--id", default=None, help="workspace id (default: the name)")

    p = add(sub, "task", help="add a task to the back of the dev backlog")
    p.add_argument("title")
    p.add_argument("--desc", default="")

    p = add(sub, "focus", help="stack a new focus board")
    p.add_argument("name")
    p.add_argument(
        "--principle", action="append", default=[], required=True, help="principle statement"
    )

    p = add(sub, "extract", help="extract an xtag from a task onto a focus board")
    p.add_argument("task")
    p.add_argument("focus", help="focus board id or name")
    p.add_argument("title")
    p.add_argument("--desc", default="")
    p.add_argument("--principle", action="append", default=[], required=True, help="principle id")

    p = add(sub, "link", help="mark a dev card with an xtag")
    p.add_argument("dev_card")
    p.add_argument("xtag")
    p.add_argument("--note", default=None)

    p = add(sub, "unlink", help="remove a mark")
    p.add_argument("dev_card")
    p.add_argument("xtag")

    p = add(sub, "start", help="start a task (co-starts its pending xtags)")
    p.add_argument("task")

    p = add(sub, "move", help="move a card to a column on its board")
    p.add_argument("card")
    p.add_argument("column")

    p = add(sub, "done-xtag", help="complete an xtag, feeding change tasks to the backlog")
    p.add_argument("xtag")
    p.add_argument(
        "--change",
        action="append",
        default=[],
        metavar="TITLE[::DESC]",
        help="change task to insert at the backlog front (repeatable, order kept)",
    )

    p = add(sub, "done-task", help="complete a task (gated on its xtags)")
    p.add_argument("task")

    p = add(sub, "principle", help="manage a focus board's principles")
    psub = p.add_subparsers(dest="principle_command", required=True, parser_class=_Parser)
    q = add(psub, "add")
    q.add_argument("focus")
    q.add_argument("statement")
    q = add(psub, "revise")
    q.add_argument("principle_id")
    q.add_argument("statement")
    q = add(psub, "retire")
    q.add_argument("principle_id")
    q = add(psub, "list")
    q.add_argument("focus", nargs="?", default=None)

    add(sub, "board", help="render every board")

    p = add(sub, "metrics", help="flow metrics and coverage")
    msub = p.add_subparsers(dest="metrics_command", required=True, parser_class=_Parser)
    q = add(msub, "coverage")
    q.add_argument("focus")
    q = add(msub, "flow")
    q.add_argument("--window", type=int, default=10)

    p = add(sub, "trace", help="traceability subgraph of a card")
    p.add_argument("card")

    add(sub, "export", help="write the event log to stdout")

    p = add(sub, "import", help="read an event log from stdin into a fresh data directory")
    p.add_argument("--into", required=True, metavar="DIR", help="target data directory")

    p = add(sub, "preset", help="list, inspect, or apply shipped focus templates")
    psub = p.add_subparsers(dest="preset_command", required=True, parser_class=_Parser)
    add(psub, "list")
    q = add(psub, "show")
    q.add_argument("name")
    q = add(psub, "apply")
    q.add_argument("name")

    p = add(sub, "set-policy", help="change WIP limits or the completion policy")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--per-board", action="append", default=None, metavar="BOARD=N")
    p.add_argument("--completion", choices=("strict", "warn"), default=None)

    p = add(sub, "serve", help="run the HTTP service over this data directory")
    p.add_argument("--addr", default="127.0.0.1:8787", metavar="HOST:PORT")
    p.add_argument("--ui-dir", default=None, help="also host the board UI from this directory")
    p.add_argument("--verbose", action="store_true")

    return parser


# -- workspace plumbing -------------------------------------------------------


def data_dir_of(args) -> Path:
    raw = args.data_dir or os.environ.get(ENV_DATA_DIR) or "kanbanx-data"
    return Path(raw)


def resolve_workspace_dir(args) -> Path:
    base = data_dir_of(args)
    if args.workspace:
        directory = base / args.workspace
        if not (directory / store.LOG_NAME).is_file():
            raise CliError(f"no workspace {args.workspace!r} under {base}")
        return directory
    candidates = sorted(p.parent for p in base.glob(f"*/{store.LOG_NAME}"))
    if not candidates:
        raise CliError(f"no workspaces under {base}; run `kanbanx init` first")
    if len(candidates) > 1:
        names = ", ".join(c.name for c in candidates)
        raise CliError(f"several workspaces under {base} ({names}); pass --workspace")
    return candidates[0]


@contextmanager
def workspace_lock(directory: Path):
    lock_path = directory / ".lock"
    with open(lock_path, "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def run_command(args, command: engine.Command) -> int:
    """Apply one engine command against the selected workspace."""
    directory = resolve_workspace_dir(args)
    with workspace_lock(directory):
        log, ws = store.load_workspace(directory)
        ws2, result = engine.apply(ws, command)
        if not result.accepted:
            rule, message = result.rejection
            print(f"{rule}: {message}", file=sys.stderr)
            return EXIT_REJECTED
        log.append_all(result.events)
        log.close()
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.output == "structured":
        print(
            json.dumps(
                {
                    "accepted": True,
                    "clock": ws2.clock,
                    "events": [json.loads(event_to_json(ev)) for ev in result.events],
                    "warnings": list(result.warnings),
                }
            )
        )
    else:
        for ev in result.events:
            print(f"{ev.seq}: {ev.kind} {_summarize(ev.payload)}")
    return EXIT_OK


def _summarize(payload: dict) -> str:
    keep = {k: v for k, v in payload.items() if v not in (None, "", [], {})}
    return json.dumps(keep, sort_keys=True)


def load_current(args) -> tuple[store.EventLog, Workspace]:
    directory = resolve_workspace_dir(args)
    return store.load_workspace(directory)


def resolve_focus(ws: Workspace, ref: str) -> str:
    fb = ws.focus_board(ref) or ws.focus_by_name(ref)
    if fb is None:
        raise CliError(f"no focus board {ref!r}")
    return fb.board.id


# -- renderers ----------------------------------------------------------------


def render_board(ws: Workspace) -> str:
    lines = [
        f"Workspace {ws.id}  clock={ws.clock}  "
        f"wip={ws.total_active()}/{ws.wip_policy.shared_limit}  "
        f"completion={ws.completion_policy}"
    ]
    for i, board in enumerate(ws.boards()):
        fb = ws.focus_board(board.id)
        flavor = "dev" if i == 0 else "focus"
        lines.append(f"[{board.id}] {board.name} ({flavor})")
        if fb:
            lines.append("  principles:")
            for p in sorted(fb.principles.values(), key=lambda p: p.id):
                retired = "  (retired)" if p.retired else ""
                lines.append(f"    {p.id} v{p.version}  {p.statement}{retired}")
        for col in board.columns:
            ids = board.cards.get(col.name, ())
            lines.append(f"  {col.name} ({col.stage.value}):")
            if not ids:
                lines.append("    (empty)")
            for cid in ids:
                lines.append(f"    {_card_line(ws, cid)}")
    return "\n".join(lines)


def _card_line(ws: Workspace, card_id: str) -> str:
    card = ws.cards[card_id]
    bits = [f"{card.id} {card.title}"]
    if card.kind.value != "task":
        bits.append(f"<{card.kind.value}>")
    marks = [m.xtag for m in ws.marks_for_dev(card_id)] + [
        m.dev_card for m in ws.marks_for_xtag(card_id)
    ]
    if marks:
        bits.append("marks: " + ",".join(marks))
    principle_ids = ws.principle_links.get(card_id, ())
    if principle_ids:
        bits.append("principles: " + ",".join(principle_ids))
    return "  ".join(bits)


# -- subcommand implementations ----------------------------------------------


def _parse_per_board(items: Optional[Sequence[str]]) -> Optional[dict[str, int]]:
    if items is None:
        return None
    out = {}
    for item in items:
        name, sep, value = item.rpartition("=")
        if not sep or not name:
            raise CliError(f"--per-board expects BOARD=N, got {item!r}")
        try:
            out[name] = int(value)
        except ValueError as exc:
            raise CliError(f"--per-board expects an integer cap, got {item!r}") from exc
    return out


def cmd_init(args) -> int:
    from .model import WipPolicy

    ws_id = args.id or args.name
    directory = data_dir_of(args) / ws_id
    if (directory / store.LOG_NAME).exists():
        raise CliError(f"workspace {ws_id!r} already exists at {directory}")
    log, ws = store.EventLog.create(
        directory,
        name=args.name,
        wip_policy=WipPolicy(args.limit, _parse_per_board(args.per_board) or {}),
        completion_policy=args.completion,
        workspace_id=ws_id,
    )
    log.close()
    print(f"initialized workspace {ws.id} at {directory}")
    return EXIT_OK


def cmd_board(args) -> int:
    _, ws = load_current(args)
    if args.output == "structured":
        print(json.dumps(service.workspace_view(ws)))
    else:
        print(render_board(ws))
    return EXIT_OK


def cmd_principle(args) -> int:
    if args.principle_command == "list":
        _, ws = load_current(args)
        boards = (
            [ws.focus_board(resolve_focus(ws, args.focus))] if args.focus else list(ws.focus_boards)
        )
        rows = []
        for fb in boards:
            for p in sorted(fb.principles.values(), key=lambda p: p.id):
                rows.append(
                    {
                        "id": p.id,
                        "focus": fb.focus_name,
                        "version": p.version,
                        "retired": p.retired,
                        "statement": p.statement,
                    }
                )
        if args.output == "structured":
            print(json.dumps(rows))
        else:
            for r in rows:
                retired = "  (retired)" if r["retired"] else ""
                print(f"{r['id']} [{r['focus']}] v{r['version']}  {r['statement']}{retired}")
        return EXIT_OK
    if args.principle_command == "add":
        _, ws = load_current(args)
        return run_command(args, engine.add_principle(resolve_focus(ws, args.focus), args.statement))
    if args.principle_command == "revise":
        return run_command(args, engine.revise_principle(args.principle_id, args.statement))
    return run_command(args, engine.retire_principle(args.principle_id))


def cmd_metrics(args) -> int:
    log, ws = load_current(args)
    if args.metrics_command == "coverage":
        focus_id = resolve_focus(ws, args.focus)
        value = metrics.coverage_ratio(ws, focus_id)
        if args.output == "structured":
            print(json.dumps({"focus": focus_id, "coverage": value}))
        else:
            print(f"coverage[{args.focus}] = {value:.3f}")
        return EXIT_OK
    flow = metrics.flow_metrics(log.events(), window=args.window)
    if args.output == "structured":
        print(json.dumps(flow.to_dict()))
    else:
        print("card  lead  cycle")
        for cid in sorted(flow.lead_times):
            cycle = flow.cycle_times.get(cid)
            print(f"{cid}  {flow.lead_times[cid]}  {'-' if cycle is None else cycle}")
        print("tick,board,column,count")
        for tick, board, column, count in flow.cumulative_flow_rows():
            print(f"{tick},{board},{column},{count}")
    return EXIT_OK


def cmd_trace(args) -> int:
    _, ws = load_current(args)
    try:
        graph = metrics.trace(ws, args.card)
    except KanbanError as exc:
        raise CliError(exc.message) from exc
    if args.output == "structured":
        print(json.dumps(graph.to_dict()))
    else:
        for n in graph.nodes:
            kind = f" ({n.kind})" if n.kind else ""
            print(f"node {n.id}{kind}: {n.label}")
        for e in graph.edges:
            arrow = "->" if e.kind == "provenance" else "--"
            print(f"edge [{e.kind}] {e.a} {arrow} {e.b}")
    return EXIT_OK


def cmd_export(args) -> int:
    directory = resolve_workspace_dir(args)
    sys.stdout.write((directory / store.LOG_NAME).read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_import(args) -> int:
    lines = [line for line in sys.stdin.read().splitlines() if line.strip()]
    if not lines:
        raise CliError("nothing to import: stdin is empty")
    events = [event_from_json(line) for line in lines]
    ws = store.replay(events)  # genuinely replayable or we refuse to store it
    target = Path(args.into) / ws.id
    if (target / store.LOG_NAME).exists():
        raise CliError(f"{target} already holds a workspace")
    target.mkdir(parents=True, exist_ok=True)
    (target / store.LOG_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"imported {len(events)} records into {target} (checksum {workspace_checksum(ws)[:12]})")
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.preset_command == "list":
        for name in presets.list_presets():
            print(name)
        return EXIT_OK
    if args.preset_command == "show":
        template = presets.load_preset(args.name)
        if args.output == "structured":
            print(
                json.dumps(
                    {
                        "focus_name": template.focus_name,
                        "principles": list(template.principles),
                        "example_xtags": [
                            {"title": t, "principles": list(ix)} for t, ix in template.example_xtags
                        ],
                    }
                )
            )
        else:
            print(template.focus_name)
            for i, statement in enumerate(template.principles):
                print(f"  [{i}] {statement}")
            for title, ix in template.example_xtags:
                print(f"  example: {title}  principles: {','.join(map(str, ix))}")
        return EXIT_OK
    template = presets.load_preset(args.name)
    return run_command(args, engine.add_focus(template.focus_name, list(template.principles)))


def cmd_serve(args) -> int:
    host, sep, port = args.addr.rpartition(":")
    if not sep:
        raise CliError("--addr expects HOST:PORT")
    service.serve(
        data_dir_of(args),
        host or "127.0.0.1",
        int(port),
        verbose=args.verbose,
        ui_dir=args.ui_dir,
    )
    return EXIT_OK


def _change_specs(raw: Sequence[str]) -> list[tuple[str, str]]:
    out = []
    for item in raw:
        title, sep, desc = item.partition("::")
        out.append((title, desc if sep else ""))
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "init":
            return cmd_init(args)
        if args.command == "task":
            return run_command(args, engine.create_task(args.title, args.desc))
        if args.command == "focus":
            return run_command(args, engine.add_focus(args.name, args.principle))
        if args.command == "extract":
            _, ws = load_current(args)
            return run_command(
                args,
                engine.extract_xtag(
                    args.task, resolve_focus(ws, args.focus), args.title, args.principle, args.desc
                ),
            )
        if args.command == "link":
            return run_command(args, engine.link_mark(args.dev_card, args.xtag, args.note))
        if args.command == "unlink":
            return run_command(args, engine.unlink_mark(args.dev_card, args.xtag))
        if args.command == "start":
            return run_command(args, engine.start_task(args.task))
        if args.command == "move":
            return run_command(args, engine.move_card(args.card, args.column))
        if args.command == "done-xtag":
            return run_command(args, engine.complete_xtag(args.xtag, _change_specs(args.change)))
        if args.command == "done-task":
            return run_command(args, engine.complete_task(args.task))
        if args.command == "principle":
            return cmd_principle(args)
        if args.command == "board":
            return cmd_board(args)
        if args.command == "metrics":
            return cmd_metrics(args)
        if args.command == "trace":
            return cmd_trace(args)
        if args.command == "export":
            return cmd_export(args)
        if args.command == "import":
            return cmd_import(args)
        if args.command == "preset":
            return cmd_preset(args)
        if args.command == "set-policy":
            return run_command(
                args,
                engine.set_policy(
                    shared_limit=args.limit,
                    per_board_limits=_parse_per_board(args.per_board),
                    completion_policy=args.completion,
                ),
            )
        if args.command == "serve":
            return cmd_serve(args)
        raise CliError(f"unhandled command {args.command!r}")
    except CliError as exc:
        print(f"kanbanx: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KanbanError as exc:
        print(f"{exc.rule}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kanbanx: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
