"""Executable checkers for the definitional properties and cost bounds.

Every checker is deterministic given its seed, and every recorded
violation carries a reproducer (instance, sequence, and context) that
replays to the same violation.  Checkers report; they do not decide what
counts as a test failure -- that is the caller's job.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

from .alpha import alpha_fast
from .adversary import candidate_points, random_rational
from .algorithms import guard_rule
from .core import (
    INF,
    AssignmentTrace,
    Instance,
    RatioReport,
    RequestSequence,
    ServerLayout,
    ValidationError,
    common_scale,
    compute_rate,
    instance_to_dict,
    scaled_ints,
    sequence_to_dict,
    unit_instance,
)
from .engine import PriorityRule, simulate, surrounding_servers
from .hybrid import expand_to_unit
from .offline import OptResult, _dp_cost_scaled, noncrossing_dp_cost, optimal_cost

RuleOrBuilder = Union[PriorityRule, Callable[[ServerLayout], PriorityRule]]


@dataclass
class PropertyReport:
    """Outcome of a property sweep: trials run and reproducible violations."""

    name: str
    trials: int = 0
    violations: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "ok" if not self.violations else "violation"

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "trials": self.trials,
            "violations": self.violations,
            "details": self.details,
            "verdict": self.verdict,
        }


def _resolve_rule(rule: RuleOrBuilder, layout: ServerLayout) -> PriorityRule:
    if isinstance(rule, PriorityRule):
        return rule
    return rule(layout)


def _reproducer(inst: Instance, seq: RequestSequence, **extra) -> dict:
    data = {"instance": instance_to_dict(inst), "sequence": sequence_to_dict(seq)}
    data.update(extra)
    return data


# ---------------------------------------------------------------------------
# Definitional checkers
# ---------------------------------------------------------------------------


def check_surrounding_oriented(
    trace: AssignmentTrace,
    seq: RequestSequence,
    layout: ServerLayout,
    inst: Instance | None = None,
) -> PropertyReport:
    """Each match must hit the nearest free server on one side of the request.

    Comparison is by position so unit-capacity replicas of one server are
    interchangeable.
    """
    if inst is None:
        inst = unit_instance(layout)
    report = PropertyReport(name="surrounding-oriented")
    remaining = list(inst.capacities)
    positions = layout.positions
    for t, r in enumerate(seq):
        free = frozenset(j for j, c in enumerate(remaining) if c > 0)
        left, right = surrounding_servers(r, free, layout)
        allowed = {positions[j] for j in (left, right) if j is not None}
        j = trace.assignment[t]
        report.trials += 1
        if positions[j] not in allowed:
            report.violations.append(
                _reproducer(
                    inst,
                    seq,
                    step=t,
                    matched=j,
                    surrounding=[x for x in (left, right) if x is not None],
                )
            )
        remaining[j] -= 1
    return report


def closer_variant(
    seq: RequestSequence,
    trace: AssignmentTrace,
    layout: ServerLayout,
    rng: random.Random,
) -> RequestSequence:
    """A random sequence obtained by sliding requests toward their matches.

    Each request moves a random fraction of the way to the server the
    trace matched it with (possibly not at all), which by construction
    never moves a request past its matched server.
    """
    requests = []
    for t, r in enumerate(seq):
        target = layout.positions[trace.assignment[t]]
        theta = Fraction(rng.randint(0, 4), 4)
        requests.append(r + theta * (target - r))
    return RequestSequence(tuple(requests))


def check_faithful(
    rule: RuleOrBuilder,
    inst: Instance,
    seq: RequestSequence,
    trials: int = 100,
    seed: int = 0,
) -> PropertyReport:
    """Perturb requests toward their matched servers; assignments must not move.

    Capacitated instances are expanded to unit-capacity replicas first (the
    classical definition lives in the unit world), which requires ``rule``
    to be a builder so it can be rebuilt over the replica layout.
    Assignments are compared by matched position, which identifies
    interchangeable replicas of one capacitated server.
    """
    if any(c != 1 for c in inst.capacities):
        if isinstance(rule, PriorityRule):
            raise ValidationError(
                "capacitated faithfulness check needs a rule builder to rebuild "
                "the rule over the unit-capacity replica layout"
            )
        inst, _ = expand_to_unit(inst)
    layout = inst.layout
    resolved = _resolve_rule(rule, layout)
    report = PropertyReport(name="faithful")
    base = simulate(resolved, inst, seq)
    base_positions = tuple(layout.positions[j] for j in base.assignment)
    rng = random.Random(seed)
    for _ in range(trials):
        variant = closer_variant(seq, base, layout, rng)
        again = simulate(resolved, inst, variant)
        again_positions = tuple(layout.positions[j] for j in again.assignment)
        report.trials += 1
        if again_positions != base_positions:
            diff = [
                t
                for t, (a, b) in enumerate(zip(base_positions, again_positions))
                if a != b
            ]
            report.violations.append(
                _reproducer(
                    inst,
                    seq,
                    closer=sequence_to_dict(variant),
                    first_divergence=diff[0],
                )
            )
    return report


@dataclass(frozen=True)
class OppositeReport:
    """Per-request classification of a sequence against an optimal map."""

    opposite: bool
    failing_indices: tuple[int, ...]
    zone_counts: dict | None = None


def check_opposite(
    trace: AssignmentTrace,
    opt: OptResult,
    seq: RequestSequence,
    layout: ServerLayout,
) -> OppositeReport:
    """A sequence is opposite when every request lies (inclusively) between
    its online server and its offline-optimal server."""
    failing = []
    positions = layout.positions
    for t, r in enumerate(seq):
        a = positions[trace.assignment[t]]
        b = positions[opt.assignment[t]]
        lo, hi = (a, b) if a <= b else (b, a)
        if not (lo <= r <= hi):
            failing.append(t)
    return OppositeReport(opposite=not failing, failing_indices=tuple(failing))


def check_ratio_bound(
    rule: RuleOrBuilder,
    inst: Instance,
    seq: RequestSequence,
    instance_id: str = "",
    seed: int | None = None,
) -> RatioReport:
    """Measured cost ratio of one run against the layout's 2*alpha+1 bound."""
    resolved = _resolve_rule(rule, inst.layout)
    trace = simulate(resolved, inst, seq)
    opt_cost = noncrossing_dp_cost(inst, seq)
    bound = 2 * alpha_fast(inst.layout).alpha + 1
    return RatioReport(
        alg_cost=trace.total_cost,
        opt_cost=opt_cost,
        rate=compute_rate(trace.total_cost, opt_cost),
        bound=bound,
        instance_id=instance_id,
        algorithm_id=resolved.id,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Guarded-composition checks
# ---------------------------------------------------------------------------


def adx_bound(layout: ServerLayout, d: Fraction, x: Fraction) -> Fraction:
    """max{2*alpha(S)+1, (2d-x)/x, (2*span+d+x)/(d-x)} for the guarded rule."""
    alpha = alpha_fast(layout).alpha
    span = layout.span
    return max(2 * alpha + 1, (2 * d - x) / x, (2 * span + d + x) / (d - x))


def check_adx_bound(
    base: RuleOrBuilder,
    layout: ServerLayout,
    d: Fraction,
    x: Fraction,
    seq: RequestSequence,
    capacities: tuple[int, ...] | None = None,
) -> RatioReport:
    """Run the guarded composition over S + {s_k + d} and compare its cost
    ratio against the composition bound."""
    base_rule = _resolve_rule(base, layout)
    rule, extended = guard_rule(base_rule, layout, d, x)
    caps = capacities if capacities is not None else (1,) * extended.k
    inst = Instance(extended, caps)
    trace = simulate(rule, inst, seq)
    opt_cost = noncrossing_dp_cost(inst, seq)
    return RatioReport(
        alg_cost=trace.total_cost,
        opt_cost=opt_cost,
        rate=compute_rate(trace.total_cost, opt_cost),
        bound=adx_bound(layout, d, x),
        algorithm_id=rule.id,
    )


def sweep_adx(
    base: RuleOrBuilder,
    layout: ServerLayout,
    d: Fraction,
    x: Fraction,
    trials: int = 1000,
    seed: int = 0,
) -> PropertyReport:
    """Random unit-capacity sweeps of the guarded composition.

    Besides the cost bound, opposite-classified runs are checked for the
    structural facts the bound's derivation leans on: at most two requests
    ever land in the guarded zone (s_k + x, s_k + d], and runs with exactly
    one such request stay within 2*alpha(S)+1.
    """
    base_rule = _resolve_rule(base, layout)
    rule, extended = guard_rule(base_rule, layout, d, x)
    inst = unit_instance(extended)
    alpha = alpha_fast(layout).alpha
    bound = adx_bound(layout, d, x)
    zone_lo = layout.positions[-1] + x
    zone_hi = layout.positions[-1] + d
    rng = random.Random(seed)
    report = PropertyReport(name="adx-bound")
    report.details["bound"] = str(bound)
    lo = extended.positions[0]
    for _ in range(trials):
        n = extended.k
        seq = RequestSequence(
            tuple(random_rational(rng, lo, zone_hi) for _ in range(n))
        )
        trace = simulate(rule, inst, seq)
        opt = optimal_cost(inst, seq)
        rate = compute_rate(trace.total_cost, opt.cost)
        report.trials += 1
        if rate == INF or rate > bound:
            report.violations.append(
                _reproducer(inst, seq, rate=str(rate), bound=str(bound))
            )
            continue
        classification = check_opposite(trace, opt, seq, extended)
        if classification.opposite:
            m = sum(1 for r in seq if zone_lo < r <= zone_hi)
            if m > 2:
                report.violations.append(
                    _reproducer(inst, seq, zone_count=m, reason="opposite with m > 2")
                )
            if m == 1 and rate != INF and rate > 2 * alpha + 1:
                report.violations.append(
                    _reproducer(
                        inst, seq, rate=str(rate), reason="m = 1 exceeded 2*alpha+1"
                    )
                )
    return report


def check_rightmost_shift_bound(
    base: RuleOrBuilder,
    layout: ServerLayout,
    d: Fraction,
    x: Fraction,
    trials: int = 200,
    seed: int = 0,
) -> PropertyReport:
    """Moving the rightmost request of an opposite run left onto the
    rightmost free base server changes the guarded rule's cost by at most
    (2*alpha(S)+1) times the move distance."""
    base_rule = _resolve_rule(base, layout)
    rule, extended = guard_rule(base_rule, layout, d, x)
    inst = unit_instance(extended)
    factor = 2 * alpha_fast(layout).alpha + 1
    rng = random.Random(seed)
    report = PropertyReport(name="rightmost-shift")
    lo, hi = extended.positions[0], extended.positions[-1]
    k = layout.k
    attempts = 0
    while report.trials < trials and attempts < 200 * trials:
        attempts += 1
        n = rng.randint(1, extended.k)
        pilot = RequestSequence(tuple(random_rational(rng, lo, hi) for _ in range(n)))
        # Resample each pilot request between its online and offline servers;
        # this lands inside the opposite class far more often than uniform.
        p_trace = simulate(rule, inst, pilot)
        p_opt = optimal_cost(inst, pilot)
        seq = RequestSequence(
            tuple(
                random_rational(
                    rng,
                    *sorted(
                        (
                            extended.positions[p_trace.assignment[t]],
                            extended.positions[p_opt.assignment[t]],
                        )
                    ),
                    den=64,
                )
                for t in range(n)
            )
        )
        trace = simulate(rule, inst, seq)
        opt = optimal_cost(inst, seq)
        if not check_opposite(trace, opt, seq, extended).opposite:
            continue
        top = max(seq.requests)
        if sum(1 for r in seq if r == top) != 1:
            continue
        i = seq.requests.index(top)
        remaining = list(inst.capacities)
        for t in range(i):
            remaining[trace.assignment[t]] -= 1
        base_free = [j for j in range(k) if remaining[j] > 0]
        if not base_free:
            continue
        s_star = max(base_free, key=lambda j: extended.positions[j])
        target = extended.positions[s_star]
        if not top < target:
            continue
        moved = RequestSequence(
            tuple(target if t == i else r for t, r in enumerate(seq))
        )
        moved_trace = simulate(rule, inst, moved)
        lhs = trace.total_cost - moved_trace.total_cost
        rhs = factor * abs(top - target)
        report.trials += 1
        if lhs > rhs:
            report.violations.append(
                _reproducer(inst, seq, moved=sequence_to_dict(moved), lhs=str(lhs), rhs=str(rhs))
            )
    return report


# ---------------------------------------------------------------------------
# Exhaustive grid search
# ---------------------------------------------------------------------------


@dataclass
class GridSearchResult:
    """Worst measured ratio over all grid sequences up to a length cap."""

    best_rate: Fraction
    best_sequence: tuple[Fraction, ...]
    nodes: int
    zero_opt_anomalies: list[dict] = field(default_factory=list)


def grid_search_max_rate(
    rule: RuleOrBuilder,
    inst: Instance,
    points: tuple[Fraction, ...],
    n_max: int,
) -> GridSearchResult:
    """Exhaustively walk all request tuples over the grid (depth-first, so
    every prefix is also evaluated) and return the maximum exact rate.

    A state where the optimum is zero but the algorithm paid is recorded
    as an anomaly: for the rules in this package it must never happen.
    """
    resolved = _resolve_rule(rule, inst.layout)
    positions = inst.layout.positions
    scale = common_scale(list(positions) + list(points))
    servers_int = scaled_ints(positions, scale)
    points_int = scaled_ints(points, scale)
    caps0 = list(inst.capacities)
    depth_cap = min(n_max, inst.total_capacity)

    best = [Fraction(0), tuple()]  # rate, sequence
    nodes = [0]
    anomalies: list[dict] = []
    remaining = list(caps0)
    free = set(j for j, c in enumerate(caps0) if c > 0)
    chosen: list[Fraction] = []
    chosen_int: list[int] = []

    def consider(alg_int: int) -> None:
        opt_int = _dp_cost_scaled(servers_int, caps0, chosen_int)
        if opt_int == 0:
            if alg_int > 0:
                anomalies.append(
                    {"sequence": [str(q) for q in chosen], "alg_cost": str(Fraction(alg_int, scale))}
                )
                return
            rate = Fraction(1)
        else:
            rate = Fraction(alg_int, opt_int)
        if rate > best[0]:
            best[0] = rate
            best[1] = tuple(chosen)

    def dfs(depth: int, alg_int: int) -> None:
        nodes[0] += 1
        if depth > 0:
            consider(alg_int)
        if depth == depth_cap:
            return
        for p, p_int in zip(points, points_int):
            j = resolved.decide(p, frozenset(free))
            remaining[j] -= 1
            if remaining[j] == 0:
                free.remove(j)
            chosen.append(p)
            chosen_int.append(p_int)
            dfs(depth + 1, alg_int + abs(p_int - servers_int[j]))
            chosen.pop()
            chosen_int.pop()
            if remaining[j] == 0:
                free.add(j)
            remaining[j] += 1
    dfs(0, 0)
    return GridSearchResult(
        best_rate=best[0],
        best_sequence=best[1],
        nodes=nodes[0],
        zero_opt_anomalies=anomalies,
    )


def capacity_insensitivity_probe(
    rule: RuleOrBuilder,
    layout: ServerLayout,
    max_capacity: int,
    grid: tuple[Fraction, ...] | None = None,
    n_max: int = 4,
) -> PropertyReport:
    """One-sided probe: the worst grid-search rate with uniform capacity
    ``max_capacity`` must not exceed the worst rate with unit capacities
    over the same candidate grid and length cap."""
    if grid is None:
        grid = candidate_points(layout)
    unit = grid_search_max_rate(rule, unit_instance(layout), grid, n_max)
    heavy_inst = Instance(layout, (max_capacity,) * layout.k)
    heavy = grid_search_max_rate(rule, heavy_inst, grid, n_max)
    report = PropertyReport(name="capacity-insensitivity")
    report.trials = unit.nodes + heavy.nodes
    report.details = {
        "unit_worst_rate": str(unit.best_rate),
        "unit_worst_sequence": [str(q) for q in unit.best_sequence],
        "capacity": max_capacity,
        "heavy_worst_rate": str(heavy.best_rate),
        "heavy_worst_sequence": [str(q) for q in heavy.best_sequence],
    }
    for anomaly in unit.zero_opt_anomalies + heavy.zero_opt_anomalies:
        report.violations.append({"zero_opt": anomaly})
    if heavy.best_rate > unit.best_rate:
        report.violations.append(
            {
                "reason": "capacity increased the worst rate",
                "unit": str(unit.best_rate),
                "heavy": str(heavy.best_rate),
            }
        )
    return report
