"""Draw.io-style CSV encoding of activity diagrams.

Each row is ``node_id, node_type, predecessor_id, transition_label;`` with an
optional fifth field carrying the node label.  A node with several
predecessors appears in one row per incoming transition.  The initial node's
row leaves the predecessor and transition-label fields empty, as do rows for
unlabelled transitions.  Parsing is tolerant (any row order, forward
references, a literal epsilon for "no label", an optional header row);
serialization is canonical so equal diagrams yield byte-identical text.
"""
from __future__ import annotations

from dataclasses import dataclass

from .diagram import ActivityDiagram, DiagramError, Node, NodeKind, Transition

_KINDS = {kind.value: kind for kind in NodeKind}
_EPSILON_TOKENS = {"ε", "epsilon"}


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"{message}{where}")


class SerializeError(ValueError):
    pass


@dataclass(frozen=True)
class CsvRow:
    node_id: str
    node_type: str
    predecessor_id: str
    transition_label: str
    node_label: str | None = None


def parse(text: str) -> ActivityDiagram:
    """Build a diagram from CSV rows; raises ParseError with the row number."""
    raw_rows = _read_rows(text)
    raw_rows = _drop_header(raw_rows)

    rows: list[tuple[int, CsvRow]] = []
    for lineno, fields in raw_rows:
        rows.append((lineno, _to_row(fields, lineno)))

    kinds: dict[str, tuple[str, int]] = {}
    labels: dict[str, tuple[str, int]] = {}
    seen_rows: set[CsvRow] = set()
    seen_edges: set[tuple[str, str, str]] = set()
    transitions: list[Transition] = []

    for lineno, row in rows:
        if row in seen_rows:
            raise ParseError(f"duplicate row for node '{row.node_id}'", lineno)
        seen_rows.add(row)

        known = kinds.get(row.node_id)
        if known is not None and known[0] != row.node_type:
            raise ParseError(
                f"node '{row.node_id}' declared as '{row.node_type}' "
                f"but row {known[1]} says '{known[0]}'",
                lineno,
            )
        if known is None:
            kinds[row.node_id] = (row.node_type, lineno)

        if row.node_label is not None:
            prior = labels.get(row.node_id)
            if prior is not None and prior[0] != row.node_label:
                raise ParseError(
                    f"conflicting labels for node '{row.node_id}'", lineno
                )
            if prior is None:
                labels[row.node_id] = (row.node_label, lineno)

        if row.predecessor_id:
            edge = (row.predecessor_id, row.node_id, row.transition_label)
            if edge in seen_edges:
                raise ParseError(
                    f"duplicate transition {row.predecessor_id} -> {row.node_id}",
                    lineno,
                )
            seen_edges.add(edge)
            transitions.append(
                Transition(row.predecessor_id, row.node_id, row.transition_label)
            )

    for lineno, row in rows:
        if row.predecessor_id and row.predecessor_id not in kinds:
            raise ParseError(
                f"predecessor '{row.predecessor_id}' is never defined", lineno
            )

    nodes = []
    for node_id, (type_token, _) in kinds.items():
        kind = _KINDS[type_token]
        label = labels.get(node_id, (None,))[0]
        if label is None:
            label = "" if kind in (NodeKind.INITIAL, NodeKind.END) else node_id
        nodes.append(Node(node_id, kind, label))

    try:
        return ActivityDiagram(nodes, transitions)
    except DiagramError as exc:
        raise ParseError(str(exc)) from exc


def serialize(ad: ActivityDiagram) -> str:
    """Canonical CSV: one row per incoming transition (or one bare row),
    sorted by (node id, predecessor id, transition label); the node label is
    written as a fifth field on the node's first row unless it is the default
    (the node id for actions/decisions, "start"/"end" for initial/end nodes).
    """
    incoming: dict[str, list[Transition]] = {nid: [] for nid in ad.node_ids()}
    for t in ad.transitions:
        incoming[t.target].append(t)

    out = []
    for node_id in ad.node_ids():
        node = ad.node(node_id)
        edges = sorted(incoming[node_id], key=lambda t: (t.source, t.label or ""))
        if edges:
            rows = [(t.source, t.label or "") for t in edges]
        else:
            rows = [("", "")]
        for index, (pred, tlabel) in enumerate(rows):
            fields = [node_id, node.kind.value, pred, tlabel]
            if index == 0 and node.label != _default_label(node):
                fields.append(node.label)
            out.append(", ".join(_escape(f) for f in fields) + ";\n")
    return "".join(out)


def _default_label(node: Node) -> str:
    if node.kind is NodeKind.INITIAL:
        return "start"
    if node.kind is NodeKind.END:
        return "end"
    return node.id


# -- low-level row handling -------------------------------------------------

def _read_rows(text: str) -> list[tuple[int, list[tuple[str, bool]]]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.endswith(";"):
            stripped = stripped[:-1].rstrip()
        rows.append((lineno, _split_fields(stripped, lineno)))
    return rows


def _split_fields(line: str, lineno: int) -> list[tuple[str, bool]]:
    """Split on commas outside quotes; yields (text, was_quoted) pairs.

    Within a field, text alternates between unquoted and quoted runs;
    whitespace is stripped only from unquoted runs at the field edges, so the
    canonical ", " separator never leaks into quoted content.
    """
    fields: list[tuple[str, bool]] = []
    runs: list[tuple[str, bool]] = []  # (text, quoted_run)
    buf: list[str] = []
    in_quotes = False

    def close_run(quoted_run: bool):
        if buf or quoted_run:
            runs.append(("".join(buf), quoted_run))
        buf.clear()

    def close_field():
        close_run(False)
        texts = list(runs)
        if texts and not texts[0][1]:
            texts[0] = (texts[0][0].lstrip(), False)
        if texts and not texts[-1][1]:
            texts[-1] = (texts[-1][0].rstrip(), False)
        fields.append(
            ("".join(t for t, _ in texts), any(q for _, q in texts))
        )
        runs.clear()

    i = 0
    while i < len(line):
        ch = line[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    buf.append('"')
                    i += 1
                else:
                    in_quotes = False
                    close_run(True)
            else:
                buf.append(ch)
        elif ch == '"':
            close_run(False)
            in_quotes = True
        elif ch == ",":
            close_field()
        else:
            buf.append(ch)
        i += 1
    if in_quotes:
        raise ParseError("unterminated quote", lineno)
    close_field()
    return fields


def _drop_header(rows):
    """Skip a leading header row: invalid type token and a first field that is
    never used as a node or predecessor id anywhere else."""
    if not rows:
        return rows
    _, fields = rows[0]
    if len(fields) < 2 or fields[1][0].strip().casefold() in _KINDS:
        return rows
    first = fields[0][0].strip()
    used = set()
    for _, other in rows[1:]:
        used.add(other[0][0].strip())
        if len(other) >= 3:
            used.add(other[2][0].strip())
    if first and first in used:
        return rows
    return rows[1:]


def _to_row(fields: list[tuple[str, bool]], lineno: int) -> CsvRow:
    if len(fields) < 4 or len(fields) > 5:
        raise ParseError(
            f"expected 4 fields (plus optional node label), got {len(fields)}",
            lineno,
        )
    node_id = fields[0][0]
    if not node_id:
        raise ParseError("empty node id", lineno)
    type_token = fields[1][0].casefold()
    if type_token not in _KINDS:
        raise ParseError(f"unknown node type '{fields[1][0]}'", lineno)
    predecessor = fields[2][0]
    transition_label = _plain_text(fields[3])
    node_label = _plain_text(fields[4]) if len(fields) == 5 else None
    return CsvRow(node_id, type_token, predecessor, transition_label, node_label)


def _plain_text(field: tuple[str, bool]) -> str:
    """Label-field text: an unquoted literal epsilon means "no label"."""
    text, quoted = field
    if not quoted and text.casefold() in _EPSILON_TOKENS:
        return ""
    return text


def _escape(field: str) -> str:
    for ch in field:
        if ord(ch) < 32:
            raise SerializeError(
                f"field contains unescapable control character {ch!r}"
            )
    needs_quotes = (
        any(ch in field for ch in ',;"')
        or field != field.strip()
        or field.casefold() in _EPSILON_TOKENS
    )
    if needs_quotes:
        return '"' + field.replace('"', '""') + '"'
    return field
