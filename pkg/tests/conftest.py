from __future__ import annotations

import random
from pathlib import Path

import pytest

from flowsmith import codec
from flowsmith.diagram import ActivityDiagram, Node, NodeKind, Transition
from flowsmith.similarity import SimilarityProvider
from flowsmith.validation import validate

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> ActivityDiagram:
    return codec.parse((FIXTURES / name).read_text(encoding="utf-8"))


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def ground_truth() -> ActivityDiagram:
    return load_fixture("stuck_program_ground_truth.csv")


@pytest.fixture
def first_candidate() -> ActivityDiagram:
    return load_fixture("first_candidate_unsound.csv")


@pytest.fixture
def refined_candidate() -> ActivityDiagram:
    return load_fixture("refined_candidate.csv")


@pytest.fixture
def sequential_candidate() -> ActivityDiagram:
    return load_fixture("sequential_candidate.csv")


class ExactEquality(SimilarityProvider):
    """1.0 on equal text, 0.0 otherwise; the sharpest contract-satisfying provider."""

    def _score(self, a: str, b: str) -> float:
        return 1.0 if a == b else 0.0


# -- random diagram generators -------------------------------------------------

_WORDS = (
    "archive", "check", "collect", "deploy", "drain", "flush", "inspect",
    "migrate", "notify", "probe", "reboot", "rotate", "scan", "sync",
)


def sound_diagram(
    rng: random.Random, max_middle: int = 6, unique_labels: bool = True
) -> ActivityDiagram:
    """A random diagram that passes every structural check.

    Built as a random arborescence from the initial node (so everything is
    reachable), with end nodes kept as leaves, decision nodes given at least
    two guarded branches, and optional extra edges sprinkled on top.
    """
    n_actions = rng.randint(1, max(1, max_middle - 1))
    n_decisions = rng.randint(0, min(2, max_middle - n_actions))
    n_ends = rng.randint(1, 2)

    nodes: list[Node] = [Node("i0", NodeKind.INITIAL)]
    middles: list[Node] = []
    for index in range(n_actions):
        middles.append(Node(f"a{index}", NodeKind.ACTION, _label(rng, index, unique_labels)))
    for index in range(n_decisions):
        middles.append(
            Node(f"d{index}", NodeKind.DECISION, _label(rng, 100 + index, unique_labels))
        )
    rng.shuffle(middles)
    ends = [Node(f"e{index}", NodeKind.END) for index in range(n_ends)]
    nodes.extend(middles + ends)

    transitions: list[Transition] = []
    triples: set[tuple[str, str, str | None]] = set()
    guard_counter = [0]

    def add(source: Node, target: Node, force_guard: bool = False) -> bool:
        label = None
        if source.kind is NodeKind.DECISION or force_guard or rng.random() < 0.2:
            guard_counter[0] += 1
            label = f"[g{guard_counter[0]}]"
        key = (source.id, target.id, label)
        if key in triples:
            return False
        triples.add(key)
        transitions.append(Transition(source.id, target.id, label))
        return True

    placed: list[Node] = [nodes[0]]
    for node in middles + ends:
        parents = [p for p in placed if p.kind is not NodeKind.END]
        add(rng.choice(parents), node)
        placed.append(node)

    by_source: dict[str, int] = {}
    for t in transitions:
        by_source[t.source] = by_source.get(t.source, 0) + 1
    non_initial = middles + ends
    for node in middles:
        if node.kind is NodeKind.DECISION:
            while by_source.get(node.id, 0) < 2:
                target = rng.choice(non_initial)
                if add(node, target, force_guard=True):
                    by_source[node.id] = by_source.get(node.id, 0) + 1

    for _ in range(rng.randint(0, 3)):
        sources = [n for n in nodes if n.kind is not NodeKind.END]
        add(rng.choice(sources), rng.choice(non_initial))

    diagram = ActivityDiagram(nodes, transitions)
    assert validate(diagram).ok, "generator produced an unsound diagram"
    return diagram


def _label(rng: random.Random, index: int, unique: bool) -> str:
    word = rng.choice(_WORDS)
    if unique:
        return f"{word} target {index}"
    return word


def loose_diagram(rng: random.Random, max_nodes: int = 6) -> ActivityDiagram:
    """A diagram with exactly one initial node and otherwise arbitrary shape.

    Labels are drawn from a small pool so similarity ties are common; guard
    labels may be missing from decisions and nodes may be unreachable.
    """
    total = rng.randint(2, max_nodes)
    nodes: list[Node] = [Node("s", NodeKind.INITIAL, rng.choice(_WORDS))]
    for index in range(total - 1):
        kind = rng.choice((NodeKind.ACTION, NodeKind.ACTION, NodeKind.DECISION, NodeKind.END))
        nodes.append(Node(f"v{index}", kind, rng.choice(_WORDS)))

    transitions: list[Transition] = []
    triples: set[tuple[str, str, str | None]] = set()
    for _ in range(rng.randint(1, 2 * total)):
        source = rng.choice(nodes)
        target = rng.choice(nodes)
        label = rng.choice((None, None, "[yes]", "[no]", "[maybe]"))
        key = (source.id, target.id, label)
        if key not in triples:
            triples.add(key)
            transitions.append(Transition(source.id, target.id, label))
    return ActivityDiagram(nodes, transitions)
