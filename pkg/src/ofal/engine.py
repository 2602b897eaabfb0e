"""Generic simulator for priority-based online assignment rules.

A rule sees only the request position and the current free-server set and
must name a free server.  The simulator owns all capacity bookkeeping; a
rule that names a non-free server is a hard error, not a recoverable one.
Whether a rule really is of the fixed-priority kind (one total order per
request position) is checked empirically by ``derive_priority_order``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .core import (
    AssignmentTrace,
    Instance,
    RequestSequence,
    RuleError,
    ServerLayout,
    ValidationError,
    validate_pair,
)

DecideFn = Callable[[Fraction, frozenset[int]], int]


@dataclass(frozen=True)
class PriorityRule:
    """A pure decision function plus a name for reports."""

    id: str
    decide: DecideFn


def simulate(rule: PriorityRule, inst: Instance, seq: RequestSequence) -> AssignmentTrace:
    """Run a rule over a sequence, recording matches, costs and free sets."""
    violation = validate_pair(inst, seq)
    if violation is not None:
        raise ValidationError(violation)
    remaining = list(inst.capacities)
    free = set(j for j, c in enumerate(remaining) if c > 0)
    assignment: list[int] = []
    snapshots: list[tuple[int, ...]] = []
    costs: list[Fraction] = []
    total = Fraction(0)
    positions = inst.layout.positions
    for r in seq:
        j = rule.decide(r, frozenset(free))
        if j not in free:
            raise RuleError(f"rule {rule.id!r} chose non-free server {j} for request {r}")
        remaining[j] -= 1
        if remaining[j] == 0:
            free.remove(j)
        cost = abs(r - positions[j])
        total += cost
        assignment.append(j)
        snapshots.append(tuple(remaining))
        costs.append(cost)
    return AssignmentTrace(
        assignment=tuple(assignment),
        remaining_after=tuple(snapshots),
        per_step_cost=tuple(costs),
        total_cost=total,
    )


def surrounding_servers(
    r: Fraction, free: frozenset[int], layout: ServerLayout
) -> tuple[int | None, int | None]:
    """Closest free server on each side of a request position.

    When the request sits exactly on a free server, that server is the
    only surrounding server and is returned on both sides.  Among free
    replicas sharing one position the lowest index is reported.
    """
    if not free:
        raise ValidationError("surrounding servers undefined for an empty free set")
    positions = layout.positions
    exact = [j for j in free if positions[j] == r]
    if exact:
        j = min(exact)
        return (j, j)
    left: int | None = None
    right: int | None = None
    for j in sorted(free):
        p = positions[j]
        if p < r and (left is None or p > positions[left]):
            left = j
        elif p > r and (right is None or p < positions[right]):
            right = j
    return (left, right)


def derive_priority_order(
    rule: PriorityRule,
    r: Fraction,
    k: int,
    consistency_trials: int = 1000,
    seed: int = 0,
) -> tuple[int, ...]:
    """Extract the total server order a rule induces at one position.

    Repeatedly asks the rule to pick from the not-yet-ranked servers; the
    pick order is the candidate priority order.  The order is then checked
    on random free sets: the rule must always pick the order-maximum.  An
    inconsistency means the rule's choice depends on more than (position,
    free set restricted through one order) and it is reported as RuleError.
    """
    remaining = set(range(k))
    order: list[int] = []
    while remaining:
        j = rule.decide(r, frozenset(remaining))
        if j not in remaining:
            raise RuleError(f"rule {rule.id!r} chose non-free server {j}")
        order.append(j)
        remaining.remove(j)
    rank = {j: pos for pos, j in enumerate(order)}
    rng = random.Random(seed)
    for _ in range(consistency_trials):
        size = rng.randint(1, k)
        subset = frozenset(rng.sample(range(k), size))
        picked = rule.decide(r, subset)
        expected = min(subset, key=rank.__getitem__)
        if picked != expected:
            raise RuleError(
                f"rule {rule.id!r} is not priority-consistent at r={r}: "
                f"picked {picked} from {sorted(subset)}, order says {expected}"
            )
    return tuple(order)
