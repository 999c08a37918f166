"""Greedy BFS node matching between two activity diagrams.

The traversal starts from the pair of initial nodes, walks the source diagram
breadth-first, and pairs every successor of a matched node with the
best-scoring successor of its partner.  A visited-pair set keyed on (source
node, target node) bounds the walk and keeps cycles finite.  Retained pairs
are those at or above the threshold; with no threshold, everything the walk
scored is kept.

Inputs are expected to be structurally sound and already chain-collapsed via
``diagram.normalize``; only the single-initial-node part of that precondition
is enforced here, because the root pairing depends on it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .diagram import ActivityDiagram, Node, NodeKind, Transition
from .similarity import SimilarityProvider

Step = tuple[Transition, Node]


class MatchPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class MatchTriple:
    source: str
    target: str
    score: float


@dataclass(frozen=True)
class Matching:
    triples: frozenset[MatchTriple]
    threshold: float | None = None

    def source_nodes(self) -> set[str]:
        return {t.source for t in self.triples}

    def pairs(self) -> set[tuple[str, str]]:
        return {(t.source, t.target) for t in self.triples}

    def score_of(self, source: str, target: str) -> float | None:
        for t in self.triples:
            if t.source == source and t.target == target:
                return t.score
        return None

    def to_tsv(self) -> str:
        rows = sorted(self.triples, key=lambda t: (t.source, t.target))
        return "\n".join(f"{t.source}\t{t.target}\t{t.score:.6f}" for t in rows)


def sim_step(step: Step, other: Step, provider: SimilarityProvider) -> float:
    """Similarity of two one-step continuations.

    Unlabelled-on-both-sides compares only the successor labels; otherwise the
    transition-label similarity and the successor-label similarity carry equal
    weight, with a missing label entering as the empty string.
    """
    transition, succ = step
    transition_other, succ_other = other
    label_score = provider.sim(succ.label, succ_other.label)
    if transition.label is None and transition_other.label is None:
        return label_score
    guard_score = provider.sim(transition.label or "", transition_other.label or "")
    return (label_score + guard_score) / 2.0


def match(
    ad: ActivityDiagram,
    ad_target: ActivityDiagram,
    provider: SimilarityProvider,
    threshold: float | None = None,
) -> Matching:
    root = _single_initial(ad)
    root_target = _single_initial(ad_target)

    queue: deque[tuple[Node, Node, float]] = deque()
    matched: dict[tuple[str, str], float] = {}
    queue.append((root, root_target, provider.sim(root.label, root_target.label)))

    while queue:
        node, partner, score = queue.popleft()
        if (node.id, partner.id) in matched:
            continue
        matched[(node.id, partner.id)] = score
        for step in ad.successors(node.id):
            best: Node | None = None
            best_score = 0.0
            for candidate in ad_target.successors(partner.id):
                candidate_score = sim_step(step, candidate, provider)
                if candidate_score >= best_score:
                    best, best_score = candidate[1], candidate_score
            if best is not None:
                queue.append((step[1], best, best_score))

    triples = frozenset(
        MatchTriple(source, target, score)
        for (source, target), score in matched.items()
        if threshold is None or score >= threshold
    )
    return Matching(triples, threshold)


def matched_source_nodes(matching: Matching) -> set[str]:
    return matching.source_nodes()


def _single_initial(ad: ActivityDiagram) -> Node:
    initials = ad.nodes_of_kind(NodeKind.INITIAL)
    if len(initials) != 1:
        raise MatchPreconditionError(
            "precondition: structurally sound input required "
            f"(found {len(initials)} initial nodes)"
        )
    return initials[0]
