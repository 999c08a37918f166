"""Independent reference implementations used as test oracles.

Everything in this module is deliberately written from first principles
(plain loops, bitmasks, literal pseudocode phases) and must stay decoupled
from the production code paths it is used to check.
"""
from __future__ import annotations

import math


# --------------------------------------------------------------------------
# Character-trigram cosine similarity (brute force)
# --------------------------------------------------------------------------

def trigram_cosine(a: str, b: str) -> float:
    """Cosine of trigram count vectors; pads one space on each side."""
    if a == b:
        return 1.0
    na, nb = _norm_text(a), _norm_text(b)
    if not na or not nb:
        return 1.0 if na == nb else 0.0
    ca, cb = _trigram_counts(na), _trigram_counts(nb)
    dot = 0.0
    for gram, count in ca.items():
        if gram in cb:
            dot += count * cb[gram]
    mag_a = math.sqrt(sum(c * c for c in ca.values()))
    mag_b = math.sqrt(sum(c * c for c in cb.values()))
    value = dot / (mag_a * mag_b)
    return min(1.0, max(0.0, value))


def _norm_text(text: str) -> str:
    return " ".join(text.lower().split())


def _trigram_counts(text: str) -> dict[str, int]:
    padded = " " + text + " "
    counts: dict[str, int] = {}
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3]
        counts[gram] = counts.get(gram, 0) + 1
    return counts


# --------------------------------------------------------------------------
# Step-by-step executor of the BFS node-matching algorithm
# --------------------------------------------------------------------------

def admatch_reference(ad, ad_target, provider, threshold=None):
    """Run the matching algorithm exactly as written, phase by phase.

    Returns a set of (source_id, target_id, score) tuples.  Successor
    scans are ordered by ascending (target id, transition label) so ties
    resolve to the greatest id, like the production implementation.
    """
    succ = _adjacency(ad)
    succ_t = _adjacency(ad_target)
    labels = {n.id: n.label for n in ad.nodes}
    labels_t = {n.id: n.label for n in ad_target.nodes}

    initials = sorted(n.id for n in ad.nodes if n.kind.value == "initial")
    initials_t = sorted(n.id for n in ad_target.nodes if n.kind.value == "initial")
    if len(initials) != 1 or len(initials_t) != 1:
        raise ValueError("reference executor needs exactly one initial node per side")

    # Phase 0: auxiliary variables
    queue: list[tuple[str, str, float]] = []
    matched: list[tuple[str, str, float]] = []

    # Phase 1: root matching
    root, root_t = initials[0], initials_t[0]
    queue.append((root, root_t, provider.sim(labels[root], labels_t[root_t])))

    # Phase 2: BFS traversal
    while queue:
        n, n_t, score = queue.pop(0)
        if any(m[0] == n and m[1] == n_t for m in matched):
            continue
        matched.append((n, n_t, score))
        for edge_label, s in succ[n]:
            best_match = None
            best_score = 0.0
            for edge_label_t, s_t in succ_t[n_t]:
                step_score = _step_sim(
                    edge_label, labels[s], edge_label_t, labels_t[s_t], provider
                )
                if step_score >= best_score:
                    best_match, best_score = s_t, step_score
            if best_match is not None:
                queue.append((s, best_match, best_score))

    # Phase 3: threshold
    if threshold is None:
        return set(matched)
    return {m for m in matched if m[2] >= threshold}


def _adjacency(ad) -> dict[str, list[tuple[str | None, str]]]:
    out: dict[str, list[tuple[str | None, str]]] = {n.id: [] for n in ad.nodes}
    for t in ad.transitions:
        out[t.source].append((t.label, t.target))
    for edges in out.values():
        edges.sort(key=lambda e: (e[1], e[0] or ""))
    return out


def _step_sim(a, s_label, b, s_t_label, provider) -> float:
    if a is None and b is None:
        return provider.sim(s_label, s_t_label)
    return (provider.sim(s_label, s_t_label) + provider.sim(a or "", b or "")) / 2.0


# --------------------------------------------------------------------------
# Rank-sum permutation oracle and probability-of-superiority by counting
# --------------------------------------------------------------------------

def rank_sum_exact_p(xs, ys) -> float:
    """Two-sided exact p-value by enumerating every group assignment.

    Works on doubled midranks so all comparisons stay in integers.
    """
    n, m = len(xs), len(ys)
    total = n + m
    double_ranks = _doubled_midranks(list(xs) + list(ys))
    observed = sum(double_ranks[:n])
    mean_doubled = n * (total + 1)  # 2 * n(N+1)/2

    hits = 0
    count = 0
    for mask in range(1 << total):
        if bin(mask).count("1") != n:
            continue
        count += 1
        stat = sum(double_ranks[i] for i in range(total) if mask & (1 << i))
        if abs(stat - mean_doubled) >= abs(observed - mean_doubled):
            hits += 1
    return hits / count


def _doubled_midranks(values) -> list[int]:
    order = sorted(range(len(values)), key=values.__getitem__)
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # midrank of positions i..j (1-based) is (i+1 + j+1)/2; doubled: i+j+2
        for k in range(i, j + 1):
            doubled[order[k]] = i + j + 2
        i = j + 1
    return doubled


def a12_reference(xs, ys) -> float:
    """Probability of superiority by direct pair counting."""
    wins = 0.0
    for x in xs:
        for y in ys:
            if x > y:
                wins += 1.0
            elif x == y:
                wins += 0.5
    return wins / (len(xs) * len(ys))
