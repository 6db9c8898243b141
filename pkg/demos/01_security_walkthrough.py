#!/usr/bin/env python3
# A complete walk through the twin-board workflow: a development board plus a
# Security focus board, driven purely through the library API.
#
# Run:  python demos/01_security_walkthrough.py

from kanbanx import engine, new_workspace, validate
from kanbanx.cli import render_board

# A workspace with a shared WIP limit of 3: at most three cards may be "In
# Progress" at once, counted across the development board AND every focus
# board together. Completion policy "strict" means a task cannot finish while
# any of its linked tags is unfinished.
ws = new_workspace("walkthrough", 3, completion_policy="strict")


def step(title, command):
    global ws
    ws, result = engine.apply(ws, command)
    verdict = "ok" if result.accepted else f"REJECTED {result.rejection[0]}"
    print(f"--- {title}: {verdict}")
    for w in result.warnings:
        print(f"    warning: {w}")
    return result


# User stories enter the back of the development backlog.
step("create a story", engine.create_task("Upload survey results", "web form + storage"))

# Stack a Security board. A focus board is only usable once it has at least
# one principle: the team's own definition of what the focus means.
step(
    "add the Security focus",
    engine.add_focus(
        "Security",
        ["Risk: assess what each change exposes.", "Vulnerabilities: find and fix them."],
    ),
)

security = ws.focus_by_name("Security")
risk = min(security.principles)  # first principle added

# Extract a security concern from the story. The tag lands on the Security
# backlog, marked back to the story, and must cite at least one principle.
step(
    "extract a security tag",
    engine.extract_xtag("c1", security.board.id, "Assess injection risk", [risk]),
)

# Starting the story co-starts its pending tags, atomically, under the shared
# limit: after this, both the story and the tag are active (2 of 3 slots).
step("start the story (co-start)", engine.start_task("c1"))
print(f"    active now: {ws.total_active()} / {ws.wip_policy.shared_limit}")

# The strict gate: the story cannot finish while its tag is unfinished.
step("try to finish the story early", engine.complete_task("c1"))

# Completing the tag is where the analysis pays off: each needed change
# becomes a change task at the FRONT of the development backlog, marked back
# to the tag that demanded it.
step(
    "complete the tag with two changes",
    engine.complete_xtag(
        "c5", [("Sanitize form inputs", "server side"), ("Escape rendered output", "")]
    ),
)
print(f"    dev backlog is now: {list(ws.dev_board.cards['Backlog'])}")

# Now the gate is open.
step("finish the story", engine.complete_task("c1"))

print()
print(render_board(ws))
print()
print(f"workspace still structurally valid: {validate(ws).ok}")
