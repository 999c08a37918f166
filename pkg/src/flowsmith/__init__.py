"""Activity diagram toolkit: text-to-diagram generation with a critique-refine
loop, structural validation, behavioral matching, and grading statistics."""

from .codec import ParseError, SerializeError, parse, serialize
from .critique import Critique, CritiqueItem
from .diagram import (
    ActivityDiagram,
    DiagramError,
    Node,
    NodeKind,
    Transition,
    normalize,
)
from .evaluation import (
    EffectSize,
    MetricReport,
    StatTestResult,
    completeness,
    correctness,
    threshold_sweep,
    vargha_delaney,
    wilcoxon_rank_sum,
)
from .matching import Matching, MatchTriple, match, sim_step
from .pipeline import (
    Candidate,
    CostLedger,
    Pipeline,
    PipelineConfig,
    RunRecord,
    Variant,
    run,
)
from .similarity import (
    EmbeddingConfig,
    EmbeddingSimilarity,
    NgramSimilarity,
    SimilarityProvider,
)
from .validation import ValidationReport, Violation, render_critique, validate

__all__ = [
    "ActivityDiagram",
    "Candidate",
    "CostLedger",
    "Critique",
    "CritiqueItem",
    "DiagramError",
    "EffectSize",
    "EmbeddingConfig",
    "EmbeddingSimilarity",
    "MatchTriple",
    "Matching",
    "MetricReport",
    "NgramSimilarity",
    "Node",
    "NodeKind",
    "ParseError",
    "Pipeline",
    "PipelineConfig",
    "RunRecord",
    "SerializeError",
    "SimilarityProvider",
    "StatTestResult",
    "Transition",
    "ValidationReport",
    "Variant",
    "Violation",
    "completeness",
    "correctness",
    "match",
    "normalize",
    "parse",
    "render_critique",
    "run",
    "serialize",
    "sim_step",
    "threshold_sweep",
    "validate",
    "vargha_delaney",
    "wilcoxon_rank_sum",
]
