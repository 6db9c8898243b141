"""Twin-board Kanban workflow engine.

A development board plus stacked focus boards (security, sustainability,
performance, or any team-defined focus) whose tags, marks, principles, shared
WIP limit, and change-feedback loop are machine-checked rules over an
event-sourced core.
"""

from .engine import Command, TransitionResult, apply
from .errors import KanbanError
from .events import Event, apply_event, apply_events
from .metrics import FlowMetrics, TraceGraph, coverage_ratio, flow_metrics, principle_usage, trace
from .model import (
    Board,
    Card,
    CardKind,
    Column,
    FocusBoard,
    Principle,
    Stage,
    ValidationReport,
    WipPolicy,
    Workspace,
    XMark,
    new_workspace,
    validate,
    workspace_checksum,
)
from .presets import FocusTemplate, apply_preset, list_presets, load_preset
from .store import EventLog, Snapshot, load, load_workspace, replay

__version__ = "0.1.0"

__all__ = [
    "Board",
    "Card",
    "CardKind",
    "Column",
    "Command",
    "Event",
    "EventLog",
    "FlowMetrics",
    "FocusBoard",
    "FocusTemplate",
    "KanbanError",
    "Principle",
    "Snapshot",
    "Stage",
    "TraceGraph",
    "TransitionResult",
    "ValidationReport",
    "WipPolicy",
    "Workspace",
    "XMark",
    "apply",
    "apply_event",
    "apply_events",
    "apply_preset",
    "coverage_ratio",
    "flow_metrics",
    "list_presets",
    "load",
    "load_preset",
    "load_workspace",
    "new_workspace",
    "principle_usage",
    "replay",
    "trace",
    "validate",
    "workspace_checksum",
]
