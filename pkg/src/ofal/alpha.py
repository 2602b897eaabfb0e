"""Layout stretch metrics: L over a server subset and its maximum alpha.

For a sorted subset T, L(T) is span(T) divided by the largest adjacent gap
inside T (0 when |T| <= 1).  alpha is the maximum of L over all subsets.
Two evaluators are provided: an exhaustive subset oracle and a fast version
that only scans contiguous index intervals; their agreement is itself a
tested property, not an assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import ServerLayout, SizeGuardError

BRUTEFORCE_MAX_K = 20


@dataclass(frozen=True)
class Metrics:
    """alpha of a layout together with L of the full set and a witness.

    ``witness`` holds the 0-based server indices of a subset achieving
    alpha (a contiguous interval when produced by the fast evaluator).
    """

    l_value: Fraction
    alpha: Fraction
    witness: tuple[int, ...]


def gap_ratio(positions: tuple[Fraction, ...] | ServerLayout) -> Fraction:
    """span / max adjacent gap of a sorted point tuple; 0 when size <= 1."""
    if isinstance(positions, ServerLayout):
        positions = positions.positions
    if len(positions) <= 1:
        return Fraction(0)
    max_gap = max(b - a for a, b in zip(positions, positions[1:]))
    if max_gap == 0:
        # All points coincide (replica layouts); span is 0 as well.
        return Fraction(0)
    return (positions[-1] - positions[0]) / max_gap


def alpha_bruteforce(layout: ServerLayout) -> Metrics:
    """Exhaustive maximum of gap_ratio over all server subsets.

    Guarded to k <= 20; the first maximizer in bitmask order is reported,
    so the witness is deterministic.
    """
    k = layout.k
    if k > BRUTEFORCE_MAX_K:
        raise SizeGuardError(f"subset enumeration guard: k={k} > {BRUTEFORCE_MAX_K}")
    positions = layout.positions
    best = Fraction(0)
    witness: tuple[int, ...] = (0,) if k >= 1 else ()
    for mask in range(1, 1 << k):
        subset = tuple(j for j in range(k) if mask >> j & 1)
        value = gap_ratio(tuple(positions[j] for j in subset))
        if value > best:
            best = value
            witness = subset
    return Metrics(l_value=gap_ratio(positions), alpha=best, witness=witness)


def alpha_fast(layout: ServerLayout) -> Metrics:
    """alpha via contiguous index intervals only.

    Filling a subset in with every layout point between its extremes keeps
    the span and cannot enlarge the maximum gap, so contiguous intervals
    dominate and the interval scan reaches the same maximum as the subset
    oracle.  That domination is verified against alpha_bruteforce in the
    test suite rather than trusted.  O(k^2) interval evaluations; the
    lexicographically smallest maximizing (i, j) wins ties.
    """
    positions = layout.positions
    k = len(positions)
    best = Fraction(0)
    witness: tuple[int, ...] = (0,)
    for i in range(k):
        max_gap = Fraction(0)
        for j in range(i + 1, k):
            gap = positions[j] - positions[j - 1]
            if gap > max_gap:
                max_gap = gap
            if max_gap == 0:
                continue
            value = (positions[j] - positions[i]) / max_gap
            if value > best:
                best = value
                witness = tuple(range(i, j + 1))
    return Metrics(l_value=gap_ratio(positions), alpha=best, witness=witness)


def contiguous_closure(layout: ServerLayout, subset: tuple[int, ...]) -> tuple[int, ...]:
    """All layout indices between the extremes of a subset."""
    if not subset:
        return ()
    return tuple(range(min(subset), max(subset) + 1))


def competitive_bound(layout: ServerLayout) -> Fraction:
    """The target performance bound 2*alpha + 1 for a layout."""
    return 2 * alpha_fast(layout).alpha + 1


def aspect_ratio(layout: ServerLayout) -> Fraction:
    """span / min adjacent gap; reported for comparison only."""
    if layout.k <= 1:
        return Fraction(0)
    min_gap = min(layout.gaps())
    if min_gap == 0:
        return Fraction(0)
    return layout.span / min_gap
