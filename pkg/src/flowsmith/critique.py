"""Critique records produced by the algorithmic checker and by LLM reviewers."""
from __future__ import annotations

from dataclasses import dataclass

SOURCE_ALGORITHMIC = "algorithmic"
SOURCE_LLM = "llm"

#: Pseudo-constraint id used when a candidate could not be parsed at all.
PARSE_ISSUE = "parse"


@dataclass(frozen=True)
class CritiqueItem:
    """One issue: which rule it violates (if identifiable) and who found it."""

    constraint: str | None
    source: str
    message: str


@dataclass(frozen=True)
class Critique:
    items: tuple[CritiqueItem, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.items)

    @property
    def empty(self) -> bool:
        return not self.items

    def constraints(self) -> set[str]:
        return {item.constraint for item in self.items if item.constraint}

    def to_text(self) -> str:
        lines = []
        for i, item in enumerate(self.items, 1):
            tag = f"{item.constraint}: " if item.constraint else ""
            lines.append(f"{i}. {tag}{item.message} [{item.source}]")
        return "\n".join(lines)


def merge(*parts: Critique) -> Critique:
    items: list[CritiqueItem] = []
    for part in parts:
        items.extend(part.items)
    return Critique(tuple(items))
