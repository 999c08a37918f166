"""Algorithmic checks of the six structural well-formedness rules.

Every rule is evaluated independently (no short-circuiting) and violations
come back deterministically ordered by (rule id, node id).  Reachability is
taken as the union over all initial nodes; with no initial node at all the
reachability rule is skipped, since "reachable from the initial node" has no
referent (the missing initial node is already reported on its own).
"""
from __future__ import annotations

from dataclasses import dataclass

from .constraints import STRUCTURAL_RULES
from .critique import SOURCE_ALGORITHMIC, Critique, CritiqueItem
from .diagram import ActivityDiagram, NodeKind


@dataclass(frozen=True)
class Violation:
    constraint: str
    subject: str | None
    message: str

    def to_line(self) -> str:
        return f"{self.constraint}\t{self.subject or ''}\t{self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def constraints(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def to_text(self) -> str:
        return "\n".join(v.to_line() for v in self.violations)


def validate(ad: ActivityDiagram) -> ValidationReport:
    violations: list[Violation] = []
    initials = ad.nodes_of_kind(NodeKind.INITIAL)
    ends = ad.nodes_of_kind(NodeKind.END)

    if len(initials) != 1:
        violations.append(
            Violation("SC1", None, f"the diagram has {len(initials)} initial nodes")
        )
    if not ends:
        violations.append(Violation("SC2", None, "the diagram has no end node"))

    for node in initials:
        incoming = ad.in_degree(node.id)
        if incoming:
            violations.append(
                Violation(
                    "SC3",
                    node.id,
                    f"initial node '{node.id}' has {incoming} incoming transition(s)",
                )
            )

    for node in ends:
        outgoing = ad.out_degree(node.id)
        if outgoing:
            violations.append(
                Violation(
                    "SC4",
                    node.id,
                    f"end node '{node.id}' has {outgoing} outgoing transition(s)",
                )
            )

    for node in ad.nodes_of_kind(NodeKind.DECISION):
        pairs = ad.successors(node.id)
        unlabelled = sum(1 for t, _ in pairs if t.label is None)
        problems = []
        if len(pairs) < 2:
            problems.append(
                f"has only {len(pairs)} outgoing transition(s)"
            )
        if unlabelled:
            problems.append(
                f"has {unlabelled} outgoing transition(s) without a guard condition"
            )
        if problems:
            violations.append(
                Violation(
                    "SC5",
                    node.id,
                    f"decision node '{node.id}' " + " and ".join(problems),
                )
            )

    if initials:
        reachable: set[str] = set()
        for node in initials:
            reachable |= ad.reachable_from(node.id)
        for node_id in ad.node_ids():
            if node_id not in reachable:
                violations.append(
                    Violation(
                        "SC6",
                        node_id,
                        f"node '{node_id}' is not reachable from the initial node",
                    )
                )

    violations.sort(key=lambda v: (v.constraint, v.subject or ""))
    return ValidationReport(tuple(violations))


def render_critique(report: ValidationReport) -> Critique:
    """Turn a report into critique items with stable wording.

    Each item restates the finding and embeds the violated rule's text, so
    identical reports always render to identical critiques.
    """
    items = tuple(
        CritiqueItem(
            constraint=v.constraint,
            source=SOURCE_ALGORITHMIC,
            message=f"{v.message.capitalize()}. Rule {v.constraint}: "
            f"{STRUCTURAL_RULES[v.constraint]}",
        )
        for v in report.violations
    )
    return Critique(items)
