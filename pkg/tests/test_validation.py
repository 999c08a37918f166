from __future__ import annotations

import random

from conftest import sound_diagram
from flowsmith.constraints import STRUCTURAL_RULES
from flowsmith.critique import SOURCE_ALGORITHMIC
from flowsmith.diagram import ActivityDiagram, Node, NodeKind, Transition
from flowsmith.validation import ValidationReport, Violation, render_critique, validate


def sound_base() -> ActivityDiagram:
    """start -> d? -> (x | y) -> end, plus a tail action."""
    return ActivityDiagram(
        [
            Node("i", NodeKind.INITIAL),
            Node("d", NodeKind.DECISION, "which way?"),
            Node("x", NodeKind.ACTION, "go left"),
            Node("y", NodeKind.ACTION, "go right"),
            Node("z", NodeKind.ACTION, "wrap up"),
            Node("e", NodeKind.END),
        ],
        [
            Transition("i", "d"),
            Transition("d", "x", "[left]"),
            Transition("d", "y", "[right]"),
            Transition("x", "z"),
            Transition("y", "z"),
            Transition("z", "e"),
        ],
    )


class TestValidate:
    def test_flawed_candidate_reports_exactly_sc1_and_sc5(self, first_candidate):
        report = validate(first_candidate)
        assert report.constraints() == {"SC1", "SC5"}
        sc5 = [v for v in report.violations if v.constraint == "SC5"]
        assert [v.subject for v in sc5] == ["a7"]

    def test_ground_truth_is_clean(self, ground_truth):
        assert validate(ground_truth).ok

    def test_refined_and_sequential_candidates_are_clean(
        self, refined_candidate, sequential_candidate
    ):
        assert validate(refined_candidate).ok
        assert validate(sequential_candidate).ok

    def test_end_with_outgoing_reports_sc4_on_that_node(self):
        ad = ActivityDiagram(
            [
                Node("i", NodeKind.INITIAL),
                Node("e", NodeKind.END),
                Node("a", NodeKind.ACTION, "late step"),
            ],
            [Transition("i", "e"), Transition("e", "a")],
        )
        report = validate(ad)
        assert report.constraints() == {"SC4"}
        assert report.violations[0].subject == "e"

    def test_violations_ordered_by_constraint_then_node(self):
        ad = ActivityDiagram(
            [
                Node("i", NodeKind.INITIAL),
                Node("e2", NodeKind.END),
                Node("e1", NodeKind.END),
                Node("a", NodeKind.ACTION, "a"),
            ],
            [
                Transition("i", "e1"),
                Transition("i", "e2"),
                Transition("e2", "a"),
                Transition("e1", "a"),
            ],
        )
        report = validate(ad)
        assert [(v.constraint, v.subject) for v in report.violations] == [
            ("SC4", "e1"), ("SC4", "e2"),
        ]

    def test_report_line_format(self):
        ad = ActivityDiagram([Node("e", NodeKind.END)], [])
        report = validate(ad)
        lines = report.to_text().splitlines()
        assert lines[0] == "SC1\t\tthe diagram has 0 initial nodes"

    def test_self_loop_counts_for_sc3_and_sc4(self):
        for kind, node_id, expected in (
            (NodeKind.INITIAL, "i", "SC3"),
            (NodeKind.END, "e", "SC4"),
        ):
            others = {
                "SC3": [Node("e", NodeKind.END)],
                "SC4": [Node("i", NodeKind.INITIAL)],
            }[expected]
            ad = ActivityDiagram(
                [Node(node_id, kind)] + others
                + [Node("a", NodeKind.ACTION, "a")],
                [
                    Transition(node_id, node_id),
                    Transition("i", "a"),
                    Transition("a", "e") if expected == "SC3" else Transition("i", "e"),
                ],
            )
            assert expected in validate(ad).constraints()


class TestFaultInjection:
    """Seeding one fault class into a sound diagram surfaces that rule."""

    def test_missing_initial_triggers_sc1_only(self):
        base = sound_base()
        ad = ActivityDiagram(
            [n for n in base.nodes if n.kind is not NodeKind.INITIAL],
            [t for t in base.transitions if t.source != "i"],
        )
        assert validate(ad).constraints() == {"SC1"}

    def test_second_initial_triggers_sc1(self):
        base = sound_base()
        ad = ActivityDiagram(
            list(base.nodes) + [Node("i2", NodeKind.INITIAL)],
            list(base.transitions) + [Transition("i2", "d")],
        )
        assert validate(ad).constraints() == {"SC1"}

    def test_no_end_triggers_sc2(self):
        base = sound_base()
        ad = ActivityDiagram(
            [n for n in base.nodes if n.kind is not NodeKind.END],
            [t for t in base.transitions if t.target != "e"],
        )
        assert validate(ad).constraints() == {"SC2"}

    def test_edge_into_initial_triggers_sc3(self):
        base = sound_base()
        ad = ActivityDiagram(
            base.nodes, list(base.transitions) + [Transition("z", "i")]
        )
        assert validate(ad).constraints() == {"SC3"}

    def test_edge_out_of_end_triggers_sc4(self):
        base = sound_base()
        ad = ActivityDiagram(
            base.nodes, list(base.transitions) + [Transition("e", "z")]
        )
        assert validate(ad).constraints() == {"SC4"}

    def test_single_branch_decision_triggers_sc5(self):
        base = sound_base()
        ad = ActivityDiagram(
            [n for n in base.nodes if n.id != "y"],
            [t for t in base.transitions if "y" not in (t.source, t.target)],
        )
        assert validate(ad).constraints() == {"SC5"}

    def test_unguarded_branch_triggers_sc5(self):
        base = sound_base()
        transitions = [
            Transition(t.source, t.target, None if t.target == "x" else t.label)
            for t in base.transitions
        ]
        ad = ActivityDiagram(base.nodes, transitions)
        assert validate(ad).constraints() == {"SC5"}

    def test_unreachable_island_triggers_sc6(self):
        base = sound_base()
        ad = ActivityDiagram(
            list(base.nodes) + [Node("lost", NodeKind.ACTION, "stranded")],
            base.transitions,
        )
        report = validate(ad)
        assert report.constraints() == {"SC6"}
        assert [v.subject for v in report.violations] == ["lost"]

    def test_multi_initial_reachability_is_union(self):
        # second initial feeding an otherwise-unreachable node: SC1 fires, SC6 not
        base = sound_base()
        ad = ActivityDiagram(
            list(base.nodes)
            + [Node("i2", NodeKind.INITIAL), Node("side", NodeKind.ACTION, "side")],
            list(base.transitions) + [Transition("i2", "side")],
        )
        assert validate(ad).constraints() == {"SC1"}


class TestSoundness:
    def test_every_violation_confirmed_by_direct_inspection(self):
        rng = random.Random(23)
        for _ in range(120):
            ad = _mutated(sound_diagram(rng), rng)
            for violation in validate(ad).violations:
                assert _confirm(ad, violation), violation

    def test_random_sound_diagrams_stay_clean(self):
        rng = random.Random(5)
        for _ in range(60):
            assert validate(sound_diagram(rng)).ok


def _mutated(ad: ActivityDiagram, rng: random.Random) -> ActivityDiagram:
    nodes = list(ad.nodes)
    transitions = list(ad.transitions)
    for _ in range(rng.randint(0, 3)):
        op = rng.randrange(4)
        if op == 0 and transitions:
            transitions.pop(rng.randrange(len(transitions)))
        elif op == 1:
            nodes.append(Node(f"m{len(nodes)}", NodeKind.ACTION, "mutant"))
        elif op == 2 and transitions:
            index = rng.randrange(len(transitions))
            t = transitions[index]
            key = {(o.source, o.target, o.label) for o in transitions}
            if (t.source, t.target, None) not in key:
                transitions[index] = Transition(t.source, t.target, None)
        else:
            a, b = rng.choice(nodes), rng.choice(nodes)
            candidate = Transition(a.id, b.id, None)
            key = {(t.source, t.target, t.label) for t in transitions}
            if (a.id, b.id, None) not in key:
                transitions.append(candidate)
    return ActivityDiagram(nodes, transitions)


def _confirm(ad: ActivityDiagram, violation: Violation) -> bool:
    """Independent re-derivation of one reported violation."""
    initials = [n for n in ad.nodes if n.kind is NodeKind.INITIAL]
    if violation.constraint == "SC1":
        return len(initials) != 1
    if violation.constraint == "SC2":
        return not any(n.kind is NodeKind.END for n in ad.nodes)
    if violation.constraint == "SC3":
        node = ad.node(violation.subject)
        return node.kind is NodeKind.INITIAL and any(
            t.target == node.id for t in ad.transitions
        )
    if violation.constraint == "SC4":
        node = ad.node(violation.subject)
        return node.kind is NodeKind.END and any(
            t.source == node.id for t in ad.transitions
        )
    if violation.constraint == "SC5":
        node = ad.node(violation.subject)
        outgoing = [t for t in ad.transitions if t.source == node.id]
        return node.kind is NodeKind.DECISION and (
            len(outgoing) < 2 or any(t.label is None for t in outgoing)
        )
    if violation.constraint == "SC6":
        if not initials:
            return False  # never reported without an initial node
        seen = set()
        stack = [n.id for n in initials]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(t.target for t in ad.transitions if t.source == current)
        return violation.subject not in seen
    return False


class TestRenderCritique:
    def test_empty_report_renders_empty(self):
        assert render_critique(ValidationReport()).empty

    def test_sc1_item_embeds_rule_sentence(self):
        ad = ActivityDiagram([Node("e", NodeKind.END)], [])
        critique = render_critique(validate(ad))
        sc1 = next(i for i in critique.items if i.constraint == "SC1")
        assert STRUCTURAL_RULES["SC1"] in sc1.message
        assert sc1.source == SOURCE_ALGORITHMIC

    def test_sc5_item_golden_text(self):
        report = ValidationReport(
            (
                Violation(
                    "SC5", "d", "decision node 'd' has only 1 outgoing transition(s)"
                ),
            )
        )
        critique = render_critique(report)
        assert [item.message for item in critique.items] == [
            "Decision node 'd' has only 1 outgoing transition(s). Rule SC5: "
            "Each decision node must have at least two outgoing transitions, "
            "each labelled by a guard condition."
        ]

    def test_identical_reports_render_identically(self, first_candidate):
        once = render_critique(validate(first_candidate))
        again = render_critique(validate(first_candidate))
        assert once == again and once.to_text() == again.to_text()
