#!/usr/bin/env python3
# Multiple stacked focuses, the shipped presets, and the read-only analytics:
# coverage ratios, principle usage, traceability, and flow metrics.
#
# Run:  python demos/02_multi_focus_coverage.py

import random

from kanbanx import engine, new_workspace
from kanbanx.metrics import coverage_ratio, flow_metrics, principle_usage, trace
from kanbanx.presets import apply_preset, list_presets, load_preset
from kanbanx.store import EventLog
import tempfile

rng = random.Random(7)

# Keep the full event log on disk so flow metrics can be computed later.
data_dir = tempfile.mkdtemp(prefix="kanbanx-demo-")
log, ws = EventLog.create(f"{data_dir}/multi", name="multi", wip_policy=4)


def apply(command):
    global ws
    ws, result = engine.apply(ws, command)
    assert result.accepted, result.rejection
    log.append_all(result.events)


# The three presets are the worked focuses shipped with the engine; applying
# one is exactly an add_focus command with the template's principles.
print("presets on disk:", ", ".join(list_presets()))
for name in list_presets():
    template = load_preset(name)
    ws, result = apply_preset(ws, template)
    assert result.accepted
    log.append_all(result.events)
    print(f"  stacked {template.focus_name} with {len(template.principles)} principles")

# A small random burst of work: stories, extracted tags on each focus.
stories = []
for i in range(6):
    apply(engine.create_task(f"Story {i}"))
    stories.append(f"c{ws.clock}")

for fb in ws.focus_boards:
    live = sorted(p.id for p in fb.principles.values() if not p.retired)
    for story in rng.sample(stories, k=rng.randint(1, 3)):
        apply(
            engine.extract_xtag(
                story,
                fb.board.id,
                f"{fb.focus_name} concern for {story}",
                [rng.choice(live)],
            )
        )

# Coverage: what fraction of live stories carries at least one mark into each
# focus? This is the steering signal a team watches per focus.
print()
for fb in ws.focus_boards:
    ratio = coverage_ratio(ws, fb.board.id)
    print(f"coverage[{fb.focus_name:14s}] = {ratio:.2f}")

# Traceability: everything reachable from the first story.
graph = trace(ws, stories[0])
print(f"\ntrace({stories[0]}): {len(graph.nodes)} nodes, {len(graph.edges)} edges")
for edge in graph.edges:
    arrow = "->" if edge.kind == "provenance" else "--"
    print(f"  [{edge.kind}] {edge.a} {arrow} {edge.b}")

# Principle usage: which tags cite a principle, and which dev cards those
# tags serve. Useful when deciding whether a principle earns its keep.
some_focus = ws.focus_boards[0]
pid = sorted(some_focus.principles)[0]
print(f"\nusage of {pid} ({some_focus.principles[pid].statement[:40]}...):")
for xtag, dev_cards in principle_usage(ws, pid):
    print(f"  {xtag} <- {dev_cards}")

# Work one story through so flow metrics have something to chew on: starting
# it co-starts its tags; completing the tags opens the strict gate.
apply(engine.start_task(stories[0]))
for fb in ws.focus_boards:
    for xtag in list(fb.board.cards["In Progress"]):
        apply(engine.complete_xtag(xtag, [("follow-up", "")]))
apply(engine.complete_task(stories[0]))

flow = flow_metrics(log.events(), window=10)
print(f"\nlead times so far: {flow.lead_times}")
print(f"cycle times so far: {flow.cycle_times}")
print("cumulative flow rows (last 6):")
for row in flow.cumulative_flow_rows()[-6:]:
    print(f"  tick={row[0]} board={row[1]} column={row[2]!r} count={row[3]}")
print(f"\nevent log kept at {log.path}")
