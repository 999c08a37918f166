"""Activity diagram data model: nodes, transitions, reachability, normalization.

Diagrams are immutable once constructed.  Construction enforces the hard
invariants (unique node ids, no dangling transition endpoints, no duplicate
transitions); the softer well-formedness rules live in ``validation``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class DiagramError(ValueError):
    """Raised when a diagram or one of its parts is malformed."""


class NodeKind(Enum):
    ACTION = "action"
    DECISION = "decision"
    INITIAL = "initial"
    END = "end"


#: Labels assumed for initial/end nodes that were created without one.
DEFAULT_LABELS = {NodeKind.INITIAL: "start", NodeKind.END: "end"}

#: Separator used when chain collapsing concatenates action labels.
LABEL_JOIN = ". "


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    label: str = ""

    def __post_init__(self):
        if not self.id:
            raise DiagramError("node id must be nonempty")
        if not self.label:
            default = DEFAULT_LABELS.get(self.kind)
            if default is None:
                raise DiagramError(
                    f"{self.kind.value} node '{self.id}' must have a label"
                )
            object.__setattr__(self, "label", default)


@dataclass(frozen=True)
class Transition:
    """Directed edge; ``label is None`` means the transition is unlabelled."""

    source: str
    target: str
    label: str | None = None

    def __post_init__(self):
        if self.label == "":
            object.__setattr__(self, "label", None)


class ActivityDiagram:
    """Immutable set of nodes plus directed, optionally labelled transitions."""

    def __init__(self, nodes: Iterable[Node], transitions: Iterable[Transition]):
        node_list = list(nodes)
        transition_list = list(transitions)

        by_id: dict[str, Node] = {}
        for node in node_list:
            if node.id in by_id:
                raise DiagramError(f"duplicate node id '{node.id}'")
            by_id[node.id] = node

        seen: set[tuple[str, str, str | None]] = set()
        for t in transition_list:
            key = (t.source, t.target, t.label)
            if key in seen:
                raise DiagramError(
                    f"duplicate transition {t.source} -> {t.target} ({t.label!r})"
                )
            seen.add(key)
            for endpoint in (t.source, t.target):
                if endpoint not in by_id:
                    raise DiagramError(
                        f"transition endpoint '{endpoint}' is not a node"
                    )

        self.nodes: frozenset[Node] = frozenset(node_list)
        self.transitions: frozenset[Transition] = frozenset(transition_list)
        self._by_id = by_id
        outgoing: dict[str, list[tuple[Transition, Node]]] = {
            nid: [] for nid in by_id
        }
        for t in self.transitions:
            outgoing[t.source].append((t, by_id[t.target]))
        self._outgoing = {
            nid: tuple(sorted(pairs, key=lambda p: (p[0].target, p[0].label or "")))
            for nid, pairs in outgoing.items()
        }

    # -- queries ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivityDiagram):
            return NotImplemented
        return self.nodes == other.nodes and self.transitions == other.transitions

    def __hash__(self) -> int:
        return hash((self.nodes, self.transitions))

    def __repr__(self) -> str:
        return f"ActivityDiagram({len(self.nodes)} nodes, {len(self.transitions)} transitions)"

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise DiagramError(f"node not found: '{node_id}'") from None

    def node_ids(self) -> list[str]:
        return sorted(self._by_id)

    def nodes_of_kind(self, kind: NodeKind) -> list[Node]:
        return sorted((n for n in self.nodes if n.kind is kind), key=lambda n: n.id)

    def successors(self, node_id: str) -> tuple[tuple[Transition, Node], ...]:
        """Outgoing (transition, target) pairs, ascending by (target id, label)."""
        self.node(node_id)
        return self._outgoing[node_id]

    def in_degree(self, node_id: str) -> int:
        self.node(node_id)
        return sum(1 for t in self.transitions if t.target == node_id)

    def out_degree(self, node_id: str) -> int:
        return len(self.successors(node_id))

    def reachable_from(self, start: str) -> set[str]:
        """All node ids reachable via directed transitions, including start."""
        self.node(start)
        seen = {start}
        frontier = deque([start])
        while frontier:
            current = frontier.popleft()
            for _, target in self._outgoing[current]:
                if target.id not in seen:
                    seen.add(target.id)
                    frontier.append(target.id)
        return seen


def successors(ad: ActivityDiagram, node_id: str) -> tuple[tuple[Transition, Node], ...]:
    return ad.successors(node_id)


def reachable_from(ad: ActivityDiagram, start: str) -> set[str]:
    return ad.reachable_from(start)


def normalize(ad: ActivityDiagram) -> ActivityDiagram:
    """Collapse maximal unlabelled chains of sequential action nodes.

    A chain link u -> v qualifies when both nodes are actions, the single
    transition between them is unlabelled, u has out-degree 1 and v has
    in-degree 1.  Each maximal run of links becomes one action node (keeping
    the head's id) whose label concatenates the originals in order.  Pure
    cycles of qualifying links have no head and are left untouched.
    """
    in_deg = {nid: 0 for nid in ad.node_ids()}
    for t in ad.transitions:
        in_deg[t.target] += 1

    def linkable(source: Node, pair: tuple[Transition, Node]) -> bool:
        transition, target = pair
        return (
            source.kind is NodeKind.ACTION
            and target.kind is NodeKind.ACTION
            and transition.label is None
            and ad.out_degree(source.id) == 1
            and in_deg[target.id] == 1
        )

    def link_out(node: Node) -> Node | None:
        pairs = ad.successors(node.id)
        if len(pairs) == 1 and linkable(node, pairs[0]):
            return pairs[0][1]
        return None

    has_link_in: set[str] = set()
    for node in ad.nodes:
        nxt = link_out(node)
        if nxt is not None:
            has_link_in.add(nxt.id)

    replaced: dict[str, str] = {}  # original id -> merged node id
    merged_nodes: list[Node] = []
    link_edges: set[Transition] = set()
    for head in sorted(ad.nodes, key=lambda n: n.id):
        if link_out(head) is None or head.id in has_link_in:
            continue
        chain = [head]
        while True:
            nxt = link_out(chain[-1])
            if nxt is None or nxt.id == head.id:
                break
            link_edges.add(ad.successors(chain[-1].id)[0][0])
            chain.append(nxt)
        label = LABEL_JOIN.join(n.label for n in chain)
        merged_nodes.append(Node(head.id, NodeKind.ACTION, label))
        for member in chain:
            replaced[member.id] = head.id

    if not replaced:
        return ad

    nodes = [n for n in ad.nodes if n.id not in replaced] + merged_nodes
    transitions = []
    for t in ad.transitions:
        if t in link_edges:
            continue
        source = replaced.get(t.source, t.source)
        target = replaced.get(t.target, t.target)
        transitions.append(Transition(source, target, t.label))
    return ActivityDiagram(nodes, transitions)
