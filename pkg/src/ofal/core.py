"""Domain types, exact arithmetic, instance I/O, and cost accounting.

All coordinates and costs are arbitrary-precision rationals
(``fractions.Fraction``).  Floating point never enters a comparison: the
critical-point and adversary constructions used elsewhere in the package
hinge on exact ``<=`` decisions at ratio-valued boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

Coord = Fraction
CoordLike = Union[Fraction, int, str, float]

#: Extended-rational infinity used by ``compute_rate``.
INF = math.inf


class OfalError(Exception):
    """Base class for errors raised by this package."""


class ParseError(OfalError):
    """Malformed instance or sequence input."""


class ValidationError(OfalError):
    """Data violates a structural invariant."""


class SizeGuardError(OfalError):
    """A brute-force operation exceeded its enumeration guard."""


class RuleError(OfalError):
    """A priority rule misbehaved (e.g. returned a non-free server)."""


def to_coord(value: CoordLike) -> Fraction:
    """Convert an input coordinate to an exact rational.

    Accepted forms: ``Fraction``, ``int``, decimal strings (``"0.25"``),
    ``"p/q"`` strings, and ``float`` (converted via its shortest decimal
    repr so that ``0.1`` means one tenth, not its binary approximation).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParseError(f"not a coordinate: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParseError(f"non-finite coordinate: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coordinate {value!r}: {exc}") from None
    raise ParseError(f"not a coordinate: {value!r}")


def coord_to_json(value: Fraction) -> int | str:
    """Exact JSON form: plain int when integral, else a ``"p/q"`` string."""
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def fraction_str(value: Fraction | float) -> str:
    if value is INF or value == INF:
        return "inf"
    return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)


def fraction_decimal(value: Fraction | float, digits: int = 12) -> str:
    """Decimal approximation with ``digits`` significant digits."""
    if value is INF or value == INF:
        return "inf"
    return f"{float(value):.{digits}g}"


@dataclass(frozen=True)
class ServerLayout:
    """Server positions on the line, sorted left to right.

    Positions are strictly increasing.  Analysis code that expands a
    capacitated server into unit-capacity replicas sharing one position
    passes ``allow_ties=True``; such replica layouts are ordered
    (non-decreasing) and the engine distinguishes replicas by index.
    """

    positions: tuple[Fraction, ...]
    allow_ties: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        positions = tuple(to_coord(p) for p in self.positions)
        object.__setattr__(self, "positions", positions)
        if not positions:
            raise ValidationError("layout must contain at least one server")
        for a, b in zip(positions, positions[1:]):
            if a > b or (a == b and not self.allow_ties):
                raise ValidationError(
                    f"server positions must be strictly increasing, got {a} then {b}"
                )

    @property
    def k(self) -> int:
        return len(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, j: int) -> Fraction:
        return self.positions[j]

    @property
    def span(self) -> Fraction:
        return self.positions[-1] - self.positions[0]

    def gaps(self) -> tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.positions, self.positions[1:]))


@dataclass(frozen=True)
class Instance:
    """A server layout plus one positive capacity per server."""

    layout: ServerLayout
    capacities: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if len(self.capacities) != self.layout.k:
            raise ValidationError(
                f"{len(self.capacities)} capacities for {self.layout.k} servers"
            )
        if any(c < 1 for c in self.capacities):
            raise ValidationError("every capacity must be >= 1")

    @property
    def k(self) -> int:
        return self.layout.k

    @property
    def total_capacity(self) -> int:
        return sum(self.capacities)

    def positions(self) -> tuple[Fraction, ...]:
        return self.layout.positions


def unit_instance(layout: ServerLayout) -> Instance:
    return Instance(layout, (1,) * layout.k)


@dataclass(frozen=True)
class RequestSequence:
    """Ordered request positions, revealed one by one."""

    requests: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(to_coord(r) for r in self.requests))

    @property
    def n(self) -> int:
        return len(self.requests)

    def __len__(self) -> int:
        return len(self.requests)

    def __getitem__(self, i: int) -> Fraction:
        return self.requests[i]

    def __iter__(self):
        return iter(self.requests)

    def prefix(self, n: int) -> "RequestSequence":
        return RequestSequence(self.requests[:n])


@dataclass(frozen=True)
class AssignmentTrace:
    """Result of running an online algorithm over a sequence.

    ``assignment[t]`` is the (0-based) server index matched to request t;
    ``remaining_after[t]`` is the per-server residual capacity just after
    that match, from which the free set F_t is derived.
    """

    assignment: tuple[int, ...]
    remaining_after: tuple[tuple[int, ...], ...]
    per_step_cost: tuple[Fraction, ...]
    total_cost: Fraction

    def free_after(self, t: int) -> frozenset[int]:
        """Free-server index set F_t; ``t == -1`` gives the initial set."""
        if t < 0:
            raise IndexError("use free_before(0) for the initial free set")
        return frozenset(j for j, c in enumerate(self.remaining_after[t]) if c > 0)

    def validate(self, inst: Instance, seq: RequestSequence) -> None:
        """Check the trace's internal bookkeeping against inst and seq."""
        n = len(seq)
        if not (len(self.assignment) == len(self.remaining_after) == len(self.per_step_cost) == n):
            raise ValidationError("trace length mismatch")
        remaining = list(inst.capacities)
        total = Fraction(0)
        for t, j in enumerate(self.assignment):
            if remaining[j] <= 0:
                raise ValidationError(f"server {j} over capacity at step {t}")
            remaining[j] -= 1
            if tuple(remaining) != self.remaining_after[t]:
                raise ValidationError(f"free snapshot inconsistent at step {t}")
            cost = abs(seq[t] - inst.layout[j])
            if cost != self.per_step_cost[t]:
                raise ValidationError(f"per-step cost wrong at step {t}")
            total += cost
        if total != self.total_cost:
            raise ValidationError("total cost does not equal the sum of step costs")


def matching_cost(trace: AssignmentTrace, inst: Instance, seq: RequestSequence) -> Fraction:
    """Total distance cost of a trace: sum of |r_t - s_{assignment[t]}|."""
    if len(trace.assignment) != len(seq):
        raise ValidationError(
            f"trace has {len(trace.assignment)} matches for {len(seq)} requests"
        )
    return sum((abs(r - inst.layout[j]) for r, j in zip(seq, trace.assignment)), Fraction(0))


def validate_pair(inst: Instance, seq: RequestSequence) -> str | None:
    """None when the sequence fits the instance, else a violation message."""
    if len(seq) > inst.total_capacity:
        return (
            f"{len(seq)} requests exceed total capacity {inst.total_capacity}"
        )
    return None


def compute_rate(alg_cost: Fraction, opt_cost: Fraction) -> Fraction | float:
    """Cost ratio with the degenerate-denominator conventions.

    Returns alg/opt when opt > 0, ``INF`` when opt == 0 < alg, and 1 when
    both costs are 0.
    """
    if opt_cost > 0:
        return alg_cost / opt_cost
    if alg_cost > 0:
        return INF
    return Fraction(1)


@dataclass(frozen=True)
class RatioReport:
    """One measured algorithm-vs-optimum comparison."""

    alg_cost: Fraction
    opt_cost: Fraction
    rate: Fraction | float
    bound: Fraction
    instance_id: str = ""
    algorithm_id: str = ""
    seed: int | None = None

    @property
    def within_bound(self) -> bool:
        return self.rate != INF and self.rate <= self.bound

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "algorithm_id": self.algorithm_id,
            "seed": self.seed,
            "alg_cost": fraction_str(self.alg_cost),
            "opt_cost": fraction_str(self.opt_cost),
            "rate": fraction_str(self.rate),
            "rate_decimal": fraction_decimal(self.rate),
            "bound": fraction_str(self.bound),
            "verdict": "within-bound" if self.within_bound else "VIOLATION",
        }


# ---------------------------------------------------------------------------
# JSON I/O
#
# Instance files: {"servers": [coord, ...], "capacities": [int, ...]}
# Sequence files: {"requests": [coord, ...]}
# A coord is a JSON number or a "p/q" / decimal string.  Floats in the file
# are parsed from their literal text, so "0.1" means exactly one tenth.
# ---------------------------------------------------------------------------


def _load_json(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh, parse_float=Fraction)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from None


def parse_instance(data: dict) -> Instance:
    if not isinstance(data, dict) or "servers" not in data:
        raise ParseError('instance JSON must be an object with a "servers" array')
    servers = data["servers"]
    if not isinstance(servers, list):
        raise ParseError('"servers" must be an array of coordinates')
    positions = [to_coord(s) for s in servers]
    if sorted(positions) != positions or len(set(positions)) != len(positions):
        raise ParseError("unsorted or duplicate server positions")
    capacities = data.get("capacities", [1] * len(positions))
    if not isinstance(capacities, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in capacities
    ):
        raise ParseError('"capacities" must be an array of integers')
    try:
        return Instance(ServerLayout(tuple(positions)), tuple(capacities))
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def load_instance(path: str | Path) -> Instance:
    return parse_instance(_load_json(path))


def instance_to_dict(inst: Instance) -> dict:
    return {
        "servers": [coord_to_json(p) for p in inst.layout.positions],
        "capacities": list(inst.capacities),
    }


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)) + "\n", encoding="utf-8")


def parse_sequence(data: dict) -> RequestSequence:
    if not isinstance(data, dict) or "requests" not in data:
        raise ParseError('sequence JSON must be an object with a "requests" array')
    requests = data["requests"]
    if not isinstance(requests, list):
        raise ParseError('"requests" must be an array of coordinates')
    return RequestSequence(tuple(to_coord(r) for r in requests))


def load_sequence(path: str | Path) -> RequestSequence:
    return parse_sequence(_load_json(path))


def sequence_to_dict(seq: RequestSequence) -> dict:
    return {"requests": [coord_to_json(r) for r in seq.requests]}


def save_sequence(seq: RequestSequence, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sequence_to_dict(seq)) + "\n", encoding="utf-8")


def trace_to_dict(trace: AssignmentTrace) -> dict:
    return {
        "assignment": list(trace.assignment),
        "per_step_cost": [fraction_str(c) for c in trace.per_step_cost],
        "total_cost": fraction_str(trace.total_cost),
        "free_snapshots": [list(row) for row in trace.remaining_after],
    }


# ---------------------------------------------------------------------------
# Integer rescaling
#
# Several solvers run much faster on plain ints.  Multiplying every
# coordinate by the lcm of the denominators is exact and order-preserving,
# so a solver may compute in ints and divide back out at the end.
# ---------------------------------------------------------------------------


def common_scale(values: Iterable[Fraction]) -> int:
    scale = 1
    for v in values:
        scale = scale * v.denominator // math.gcd(scale, v.denominator)
    return scale


def scaled_ints(values: Iterable[Fraction], scale: int) -> list[int]:
    return [int(v * scale) for v in values]
