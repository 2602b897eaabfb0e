"""Concrete online rules: the split-tree rule, greedy, and the guarded
composition that bolts one extra server onto an existing rule.

The split-tree rule ("ptcp") recursively partitions the servers at a
maximum adjacent gap.  Each internal node stores a critical offset x into
its gap; a request left of (or exactly at) the critical point descends
into the left block whenever a free server remains there, otherwise into
the right block, and symmetrically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import ServerLayout, ValidationError
from .engine import PriorityRule


@dataclass(frozen=True)
class SplitTree:
    """Recursive split structure over a contiguous server interval [lo..hi].

    Internal nodes split after index ``a`` (0-based, lo <= a < hi) at a
    maximum adjacent gap D = s[a+1] - s[a] of the interval, with
    Delta1 = s[a] - s[lo], Delta2 = s[hi] - s[a+1] and critical offset

        x = D * (Delta2 + D) / ((Delta1 + D) + (Delta2 + D)),

    so 0 < x < D whenever D > 0 and the critical point s[a] + x lies
    strictly inside the gap.  Leaves are single servers.
    """

    lo: int
    hi: int
    a: int | None = None
    d: Fraction | None = None
    delta1: Fraction | None = None
    delta2: Fraction | None = None
    x: Fraction | None = None
    critical: Fraction | None = None
    left: "SplitTree | None" = None
    right: "SplitTree | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.lo == self.hi

    def nodes(self):
        yield self
        if not self.is_leaf:
            yield from self.left.nodes()
            yield from self.right.nodes()


def build_split_tree(layout: ServerLayout, lo: int = 0, hi: int | None = None) -> SplitTree:
    """Build the split tree over layout indices [lo..hi] (default: all).

    Ties among maximum gaps break to the leftmost split index.  Degenerate
    replica intervals (all positions equal, D == 0) also split leftmost
    with x = 0; any split is equivalent there since all costs coincide.
    """
    if hi is None:
        hi = layout.k - 1
    if lo == hi:
        return SplitTree(lo=lo, hi=hi)
    positions = layout.positions
    a = lo
    d = positions[lo + 1] - positions[lo]
    for u in range(lo + 1, hi):
        gap = positions[u + 1] - positions[u]
        if gap > d:
            a, d = u, gap
    delta1 = positions[a] - positions[lo]
    delta2 = positions[hi] - positions[a + 1]
    if d > 0:
        x = d * (delta2 + d) / ((delta1 + d) + (delta2 + d))
    else:
        x = Fraction(0)
    return SplitTree(
        lo=lo,
        hi=hi,
        a=a,
        d=d,
        delta1=delta1,
        delta2=delta2,
        x=x,
        critical=positions[a] + x,
        left=build_split_tree(layout, lo, a),
        right=build_split_tree(layout, a + 1, hi),
    )


def ptcp_decide(tree: SplitTree, r: Fraction, free: frozenset[int]) -> int:
    """Descend the split tree to a free server for request r.

    At each internal node: go left iff (r <= critical point and the left
    block has a free server) or the right block has none.  The boundary
    r == critical point goes left.
    """
    node = tree
    while not node.is_leaf:
        left_free = any(node.lo <= j <= node.a for j in free)
        right_free = any(node.a < j <= node.hi for j in free)
        if (r <= node.critical and left_free) or not right_free:
            node = node.left
        else:
            node = node.right
    return node.lo


def ptcp_rule(layout: ServerLayout) -> PriorityRule:
    tree = build_split_tree(layout)

    def decide(r: Fraction, free: frozenset[int]) -> int:
        return ptcp_decide(tree, r, free)

    return PriorityRule(id="ptcp", decide=decide)


def greedy_decide(r: Fraction, free: frozenset[int], layout: ServerLayout) -> int:
    """Nearest free server; exact distance ties break to the left."""
    if not free:
        raise ValidationError("greedy undefined for an empty free set")
    positions = layout.positions
    # (distance, position, index): ties in distance go to the smaller
    # position, co-located replicas to the smaller index.
    return min(free, key=lambda j: (abs(r - positions[j]), positions[j], j))


def greedy_rule(layout: ServerLayout) -> PriorityRule:
    def decide(r: Fraction, free: frozenset[int]) -> int:
        return greedy_decide(r, free, layout)

    return PriorityRule(id="greedy", decide=decide)


def guard_rule(
    base: PriorityRule,
    layout: ServerLayout,
    d: Fraction,
    x: Fraction,
) -> tuple[PriorityRule, ServerLayout]:
    """Extend a rule over S with one extra server at distance d past s_k.

    Returns the composed rule together with the extended layout
    S + {s_k + d}.  Requests at or left of the threshold s_k + x go to the
    base rule while any server of S is free, else to the new server;
    requests right of the threshold go to the new server while it is
    free, else to the base rule.  Requires 0 < x < d.
    """
    if not (0 < x < d):
        raise ValidationError(f"guard offset must satisfy 0 < x < d, got x={x}, d={d}")
    k = layout.k
    s_k = layout.positions[-1]
    extended = ServerLayout(layout.positions + (s_k + d,), allow_ties=layout.allow_ties)
    threshold = s_k + x
    new_index = k

    def decide(r: Fraction, free: frozenset[int]) -> int:
        base_free = frozenset(j for j in free if j < k)
        if r <= threshold:
            if base_free:
                return base.decide(r, base_free)
            return new_index
        if new_index in free:
            return new_index
        return base.decide(r, base_free)

    return PriorityRule(id=f"{base.id}+guard", decide=decide), extended


RULE_BUILDERS = {
    "ptcp": ptcp_rule,
    "greedy": greedy_rule,
}


def build_rule(name: str, layout: ServerLayout) -> PriorityRule:
    try:
        builder = RULE_BUILDERS[name]
    except KeyError:
        raise ValidationError(f"unknown rule {name!r}; use one of {sorted(RULE_BUILDERS)}")
    return builder(layout)


def tree_to_dict(tree: SplitTree, layout: ServerLayout) -> dict:
    """JSON-friendly dump of a split tree for inspection."""
    from .core import fraction_str

    if tree.is_leaf:
        return {"server": tree.lo, "position": fraction_str(layout.positions[tree.lo])}
    return {
        "lo": tree.lo,
        "hi": tree.hi,
        "split_after": tree.a,
        "gap": fraction_str(tree.d),
        "delta1": fraction_str(tree.delta1),
        "delta2": fraction_str(tree.delta2),
        "x": fraction_str(tree.x),
        "critical": fraction_str(tree.critical),
        "left": tree_to_dict(tree.left, layout),
        "right": tree_to_dict(tree.right, layout),
    }
