"""Shipped focus templates: Security, Sustainability, Performance.

Templates live as JSON data files alongside this module, in the same format
users can author for custom focuses; loading one and applying it emits the
same ordinary events as building the focus by hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .. import engine
from ..errors import UnknownPreset
from ..model import Workspace

_PRESET_DIR = Path(__file__).parent


@dataclass(frozen=True)
class FocusTemplate:
    focus_name: str
    principles: tuple[str, ...]
    example_xtags: tuple[tuple[str, tuple[int, ...]], ...]  # (title, principle indices)


def list_presets() -> tuple[str, ...]:
    return tuple(sorted(p.stem for p in _PRESET_DIR.glob("*.json")))


def preset_path(name: str) -> Path:
    return _PRESET_DIR / f"{name}.json"


def load_preset(name: str) -> FocusTemplate:
    path = preset_path(name)
    if not name or not path.is_file():
        raise UnknownPreset(f"no preset {name!r}; available: {', '.join(list_presets())}")
    return load_template_file(path)


def load_template_file(path: Path | str) -> FocusTemplate:
    """Parse a template file; user-authored custom focuses use this too."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    template = FocusTemplate(
        focus_name=raw["focus_name"],
        principles=tuple(raw["principles"]),
        example_xtags=tuple(
            (x["title"], tuple(x["principles"])) for x in raw.get("example_xtags", [])
        ),
    )
    if not template.principles:
        raise UnknownPreset(f"{path.name} defines no principles")
    for title, indices in template.example_xtags:
        for i in indices:
            if not 0 <= i < len(template.principles):
                raise UnknownPreset(f"{path.name} example {title!r} references principle {i}")
    return template


def apply_preset(
    ws: Workspace, template: FocusTemplate
) -> tuple[Workspace, engine.TransitionResult]:
    """Add the template's focus board and principles as one ordinary command."""
    command = engine.add_focus(template.focus_name, list(template.principles))
    return engine.apply(ws, command)
