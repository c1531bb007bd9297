"""Distances between measured outcome distributions."""

from __future__ import annotations

import math
from typing import Mapping

Counts = Mapping[str, int]


def _check(counts: Counts) -> int:
    if any(c < 0 for c in counts.values()):
        raise ValueError("counts must be non-negative")
    lengths = {len(k) for k in counts}
    if len(lengths) > 1:
        raise ValueError("bitstrings of unequal length")
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("distribution has zero total shots")
    return total


def hellinger_fidelity(p: Counts, q: Counts) -> float:
    """(sum_i sqrt(p_i q_i))^2 over the normalised distributions."""
    tp, tq = _check(p), _check(q)
    bc = sum(math.sqrt(p[k] / tp * q[k] / tq) for k in p.keys() & q.keys())
    return min(1.0, bc * bc)


def relative_strength(counts: Counts, correct: str) -> float:
    """Correct-outcome count over the most frequent incorrect count.

    Returns ``math.inf`` when no incorrect outcome was observed.
    """
    good = counts.get(correct, 0)
    worst = max((c for k, c in counts.items() if k != correct and c > 0), default=0)
    if worst == 0:
        return math.inf
    return good / worst
