"""Well-formedness and text-alignment rules shared by the checker and the prompts."""
from __future__ import annotations

#: Structural rules: syntactic well-formedness, checkable on the diagram alone.
STRUCTURAL_RULES: dict[str, str] = {
    "SC1": "An activity diagram must have exactly one initial node.",
    "SC2": "An activity diagram must have at least one end node.",
    "SC3": "The initial node must have no incoming transitions.",
    "SC4": "End nodes must have no outgoing transitions.",
    "SC5": (
        "Each decision node must have at least two outgoing transitions, "
        "each labelled by a guard condition."
    ),
    "SC6": (
        "An activity diagram must be fully connected so that every node is "
        "reachable from the initial node."
    ),
}

#: Alignment rules: fidelity to the source text, assessable only with the text.
ALIGNMENT_RULES: dict[str, str] = {
    "AC1": (
        "Action and transition labels in the activity diagram must be consistent "
        "with and accurately reflect the process description."
    ),
    "AC2": (
        "The sequence of actions and transitions must accurately represent the "
        "order of actions and their triggers described in the process description."
    ),
    "AC3": (
        "All possible action flows described in the process description must be "
        "represented in the activity diagram. The diagram must not introduce any "
        "actions or transitions that are not present in the process description."
    ),
    "AC4": (
        "Concurrency occurs when actions happen simultaneously and is modelled "
        "using multiple parallel flows originating from a single action node. "
        "The parallel flows may synchronize into a single flow after some steps."
    ),
    "AC5": (
        "Only procedural steps from the process description should be incorporated "
        "into the activity diagram. Examples, explanatory text, and commentary "
        "should be excluded."
    ),
}

STRUCTURAL_IDS = tuple(STRUCTURAL_RULES)
ALIGNMENT_IDS = tuple(ALIGNMENT_RULES)
