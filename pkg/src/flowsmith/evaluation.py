"""Grading metrics over threshold sweeps plus the statistical comparison tools.

Correctness is the fraction of generated-diagram nodes that found a partner
in the ground truth; completeness swaps the traversal direction and asks how
much of the ground truth was found in the generated diagram.  Both run on
chain-collapsed diagrams, and node counts in the denominators refer to those
collapsed diagrams so numerator and denominator describe the same graph.

The comparison tools are a two-sided rank-sum test (exact enumeration up to a
combined sample size of 10, tie-corrected normal approximation beyond) and
the probability-of-superiority effect size with the usual
negligible/small/medium/large bands (0.56 / 0.64 / 0.71, mirrored below 0.5).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .diagram import ActivityDiagram, normalize
from .matching import match
from .similarity import SimilarityProvider

#: Sweep order: fixed thresholds ascending, then unthresholded.
SWEEP_THRESHOLDS: tuple[float | None, ...] = (0.5, 0.6, 0.7, 0.8, 0.9, None)

SIGNIFICANCE_LEVEL = 0.01


@dataclass(frozen=True)
class MetricReport:
    correctness: float
    completeness: float
    threshold: float | None
    source_node_count: int
    ground_node_count: int


@dataclass(frozen=True)
class EffectSize:
    a12: float
    magnitude: str  # negligible | small | medium | large
    direction: str  # first | second | none


@dataclass(frozen=True)
class StatTestResult:
    p_value: float
    significant: bool
    effect: EffectSize


# -- matching-based metrics ---------------------------------------------------

def evaluate(
    gen: ActivityDiagram,
    truth: ActivityDiagram,
    provider: SimilarityProvider,
    threshold: float | None = None,
) -> MetricReport:
    """Both metrics at one threshold; runs one match per direction."""
    gen_n = normalize(gen)
    truth_n = normalize(truth)
    forward = match(gen_n, truth_n, provider, threshold)
    backward = match(truth_n, gen_n, provider, threshold)
    return MetricReport(
        correctness=len(forward.source_nodes()) / len(gen_n.nodes),
        completeness=len(backward.source_nodes()) / len(truth_n.nodes),
        threshold=threshold,
        source_node_count=len(gen_n.nodes),
        ground_node_count=len(truth_n.nodes),
    )


def correctness(
    gen: ActivityDiagram,
    truth: ActivityDiagram,
    provider: SimilarityProvider,
    threshold: float | None = None,
) -> float:
    gen_n = normalize(gen)
    matching = match(gen_n, normalize(truth), provider, threshold)
    return len(matching.source_nodes()) / len(gen_n.nodes)


def completeness(
    gen: ActivityDiagram,
    truth: ActivityDiagram,
    provider: SimilarityProvider,
    threshold: float | None = None,
) -> float:
    truth_n = normalize(truth)
    matching = match(truth_n, normalize(gen), provider, threshold)
    return len(matching.source_nodes()) / len(truth_n.nodes)


def threshold_sweep(
    gen: ActivityDiagram,
    truth: ActivityDiagram,
    provider: SimilarityProvider,
) -> list[MetricReport]:
    return [evaluate(gen, truth, provider, t) for t in SWEEP_THRESHOLDS]


# -- rank-sum test and effect size --------------------------------------------

def wilcoxon_rank_sum(xs: Sequence[float], ys: Sequence[float]) -> StatTestResult:
    """Two-sided rank-sum comparison of two samples.

    Exact permutation p-value when the combined size is at most 10, otherwise
    a normal approximation with midranks, tie-corrected variance, and a
    continuity correction.
    """
    if not xs or not ys:
        raise ValueError("both samples must be nonempty")
    n, m = len(xs), len(ys)
    if n + m <= 10:
        p = _exact_p(list(xs), list(ys))
    else:
        p = _approx_p(list(xs), list(ys))
    effect = vargha_delaney(xs, ys)
    return StatTestResult(p, p < SIGNIFICANCE_LEVEL, effect)


def vargha_delaney(xs: Sequence[float], ys: Sequence[float]) -> EffectSize:
    if not xs or not ys:
        raise ValueError("both samples must be nonempty")
    wins = sum(
        1.0 if x > y else 0.5 if x == y else 0.0 for x in xs for y in ys
    )
    a12 = wins / (len(xs) * len(ys))
    return EffectSize(a12, a12_magnitude(a12), _direction(a12))


def a12_magnitude(a12: float) -> str:
    if a12 >= 0.71 or a12 <= 0.29:
        return "large"
    if a12 >= 0.64 or a12 <= 0.36:
        return "medium"
    if a12 >= 0.56 or a12 <= 0.44:
        return "small"
    return "negligible"


def _direction(a12: float) -> str:
    if a12 > 0.5:
        return "first"
    if a12 < 0.5:
        return "second"
    return "none"


def _doubled_midranks(values: list[float]) -> list[int]:
    """Midranks scaled by 2 so tied-group averages stay integral."""
    order = sorted(range(len(values)), key=values.__getitem__)
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            doubled[order[k]] = i + j + 2
        i = j + 1
    return doubled


def _exact_p(xs: list[float], ys: list[float]) -> float:
    n = len(xs)
    total = n + len(ys)
    doubled = _doubled_midranks(xs + ys)
    observed = sum(doubled[:n])
    center = n * (total + 1)
    margin = abs(observed - center)

    # distribution of the doubled rank sum over all size-n assignments
    ways: list[dict[int, int]] = [dict() for _ in range(n + 1)]
    ways[0][0] = 1
    for rank in doubled:
        for k in range(min(n, total) - 1, -1, -1):
            if not ways[k]:
                continue
            bucket = ways[k + 1]
            for value, count in ways[k].items():
                bucket[value + rank] = bucket.get(value + rank, 0) + count

    hits = sum(
        count for value, count in ways[n].items() if abs(value - center) >= margin
    )
    return hits / math.comb(total, n)


def _approx_p(xs: list[float], ys: list[float]) -> float:
    n, m = len(xs), len(ys)
    total = n + m
    doubled = _doubled_midranks(xs + ys)
    rank_sum = sum(doubled[:n]) / 2.0
    mean = n * (total + 1) / 2.0

    tie_counts: dict[int, int] = {}
    for rank in doubled:
        tie_counts[rank] = tie_counts.get(rank, 0) + 1
    tie_term = sum(t**3 - t for t in tie_counts.values())
    variance = (n * m / 12.0) * (
        (total + 1) - tie_term / (total * (total - 1))
    )
    if variance <= 0:
        return 1.0
    z = (abs(rank_sum - mean) - 0.5) / math.sqrt(variance)
    if z <= 0:
        return 1.0
    return min(1.0, math.erfc(z / math.sqrt(2.0)))
