"""Dataset manifests: process descriptions paired with ground-truth diagrams.

A manifest is line-oriented text.  Each entry line has three tab-separated
fields: an id, the path to the description text, and the path to the
ground-truth CSV.  Relative paths resolve against the manifest's directory.
Lines starting with ``#`` are comments; ``@key value`` lines collect free-form
metadata.  Loading verifies that both files exist and that every ground truth
parses and passes the structural checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import codec
from .diagram import ActivityDiagram
from .validation import validate


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    description_path: Path
    ground_truth_path: Path

    def description(self) -> str:
        return self.description_path.read_text(encoding="utf-8")

    def ground_truth(self) -> ActivityDiagram:
        return codec.parse(self.ground_truth_path.read_text(encoding="utf-8"))


@dataclass
class Manifest:
    entries: list[DatasetEntry] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def ids(self) -> list[str]:
        return [entry.id for entry in self.entries]


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    base = path.parent
    manifest = Manifest()
    seen: set[str] = set()

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            key, _, value = line[1:].partition(" ")
            manifest.metadata[key.strip()] = value.strip()
            continue
        fields = [f.strip() for f in line.split("\t")]
        if len(fields) != 3:
            raise ManifestError(
                f"{path}:{lineno}: expected 'id<TAB>description<TAB>ground_truth', "
                f"got {len(fields)} field(s)"
            )
        entry_id, description, ground_truth = fields
        if entry_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate entry id '{entry_id}'")
        seen.add(entry_id)
        entry = DatasetEntry(
            entry_id,
            (base / description).resolve(),
            (base / ground_truth).resolve(),
        )
        _check_entry(entry, path, lineno)
        manifest.entries.append(entry)
    return manifest


def _check_entry(entry: DatasetEntry, path: Path, lineno: int) -> None:
    if not entry.description_path.is_file():
        raise ManifestError(
            f"{path}:{lineno}: description file not found: {entry.description_path}"
        )
    if not entry.ground_truth_path.is_file():
        raise ManifestError(
            f"{path}:{lineno}: ground-truth file not found: {entry.ground_truth_path}"
        )
    try:
        truth = entry.ground_truth()
    except codec.ParseError as exc:
        raise ManifestError(
            f"{path}:{lineno}: ground truth does not parse: {exc}"
        ) from exc
    report = validate(truth)
    if not report.ok:
        raise ManifestError(
            f"{path}:{lineno}: ground truth fails structural checks: "
            + "; ".join(v.to_line() for v in report.violations)
        )
