"""Exception types shared across the package.

Engine command rejections are data (see ``engine.TransitionResult``), not
exceptions; the classes here cover constructor misuse, storage faults, and
read-only lookups of ids that do not exist.
"""

from __future__ import annotations


class KanbanError(Exception):
    """Base class; ``rule`` is the stable machine-readable name."""

    rule = "KanbanError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.rule)
        self.message = message or self.rule


class InvalidPolicy(KanbanError):
    rule = "InvalidPolicy"


class MalformedCommand(KanbanError):
    """Command payload does not match its kind (wrong or missing fields)."""

    rule = "MalformedCommand"


class SequenceGap(KanbanError):
    rule = "SequenceGap"


class CorruptEvent(KanbanError):
    rule = "CorruptEvent"


class ChecksumMismatch(KanbanError):
    rule = "ChecksumMismatch"


class IoFailure(KanbanError):
    rule = "IoFailure"


class UnknownWorkspace(KanbanError):
    rule = "UnknownWorkspace"


class UnknownFocus(KanbanError):
    rule = "UnknownFocus"


class UnknownCard(KanbanError):
    rule = "UnknownCard"


class UnknownPrinciple(KanbanError):
    rule = "UnknownPrinciple"


class UnknownPreset(KanbanError):
    rule = "UnknownPreset"
