"""Batch experiment runner: ratio tables, sweeps, reproduction recipes.

A fully-serialized config plus the code version determines every output
byte.  Reports persist complete reproducers (instance, sequence,
assignment) so any anomalous rate can be re-derived offline.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from .alpha import alpha_fast
from .adversary import (
    candidate_points,
    greedy_adversary,
    greedy_params,
    permutation_adversary,
    permutation_params,
    random_instance,
    random_sequences,
)
from .core import (
    INF,
    Instance,
    RequestSequence,
    ValidationError,
    compute_rate,
    fraction_decimal,
    fraction_str,
    instance_to_dict,
    load_instance,
    load_sequence,
    sequence_to_dict,
    to_coord,
    unit_instance,
)
from .algorithms import build_rule
from .core import ServerLayout
from .engine import simulate
from .offline import noncrossing_dp_cost
from .permutation import permutation_run
from .verify import grid_search_max_rate

ALGORITHMS = ("ptcp", "greedy", "permutation")

#: Algorithms that carry the 2*alpha+1 guarantee; only their above-bound
#: rows count as violations.
BOUNDED_ALGORITHMS = ("ptcp",)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; serializable and deterministic under a seed."""

    algorithms: tuple[str, ...]
    instance_source: dict
    sequence_source: dict
    trials: int = 1
    seed: int = 0
    out_csv: str | None = None
    out_json: str | None = None
    assert_bounds: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValidationError(f"unknown algorithm {alg!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        return ExperimentConfig(**{k: v for k, v in data.items() if k in known})


def run_algorithm(name: str, inst: Instance, seq: RequestSequence):
    if name == "permutation":
        return permutation_run(inst, seq)
    return simulate(build_rule(name, inst.layout), inst, seq)


def _materialize_trial(config: ExperimentConfig, trial: int) -> tuple[str, Instance, RequestSequence]:
    """Build the (instance, sequence) pair for one trial, deterministically."""
    import random as _random

    src = config.instance_source
    seq_src = config.sequence_source
    rng = _random.Random(config.seed * 1_000_003 + trial)
    kind = src.get("kind")
    if kind == "file":
        inst = load_instance(src["path"])
        label = Path(src["path"]).stem
    elif kind == "adversary":
        family = src["family"]
        k = int(src["k"])
        epsilon = to_coord(src.get("epsilon", "1/10"))
        capacity = int(src.get("capacity", 1))
        if family == "greedy":
            inst, adv_seq = greedy_adversary(greedy_params(k, epsilon, capacity))
        elif family == "permutation":
            inst, adv_seq = permutation_adversary(permutation_params(k, epsilon, capacity))
        else:
            raise ValidationError(f"unknown adversary family {family!r}")
        label = f"{family}-k{k}"
    elif kind == "random":
        k = rng.randint(1, int(src.get("k_max", 6)))
        inst = random_instance(rng, k, cap_max=int(src.get("cap_max", 1)))
        label = f"random-k{k}"
    else:
        raise ValidationError(f"unknown instance source {kind!r}")

    seq_kind = seq_src.get("kind")
    if seq_kind == "file":
        seq = load_sequence(seq_src["path"])
    elif seq_kind == "adversary":
        if kind != "adversary":
            raise ValidationError("adversary sequences require an adversary instance")
        seq = adv_seq
    elif seq_kind == "random":
        n = rng.randint(0, min(int(seq_src.get("n_max", 10)), inst.total_capacity))
        seq = next(
            random_sequences(
                inst,
                n,
                seed=rng.randint(0, 2**31),
                distribution=seq_src.get("distribution", "uniform"),
                count=1,
            )
        )
    else:
        raise ValidationError(f"unknown sequence source {seq_kind!r}")
    return f"{label}-t{trial:04d}", inst, seq


def _run_trial(payload: tuple[dict, int]) -> list[dict]:
    config_dict, trial = payload
    config = ExperimentConfig.from_dict(config_dict)
    instance_id, inst, seq = _materialize_trial(config, trial)
    bound = 2 * alpha_fast(inst.layout).alpha + 1
    opt_cost = noncrossing_dp_cost(inst, seq)
    rows = []
    for alg in config.algorithms:
        trace = run_algorithm(alg, inst, seq)
        rate = compute_rate(trace.total_cost, opt_cost)
        within = rate != INF and rate <= bound
        rows.append(
            {
                "trial": trial,
                "instance_id": instance_id,
                "algorithm": alg,
                "n": len(seq),
                "alg_cost": trace.total_cost,
                "opt_cost": opt_cost,
                "rate": rate,
                "bound": bound,
                "verdict": "within-bound" if within else "above-bound",
                "instance": instance_to_dict(inst),
                "sequence": sequence_to_dict(seq),
                "assignment": list(trace.assignment),
            }
        )
    return rows


CSV_COLUMNS = (
    "instance_id",
    "algorithm",
    "n",
    "alg_cost",
    "opt_cost",
    "rate",
    "rate_decimal",
    "bound",
    "bound_decimal",
    "verdict",
)


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row["instance_id"],
                row["algorithm"],
                row["n"],
                fraction_str(row["alg_cost"]),
                fraction_str(row["opt_cost"]),
                fraction_str(row["rate"]),
                fraction_decimal(row["rate"]),
                fraction_str(row["bound"]),
                fraction_decimal(row["bound"]),
                row["verdict"],
            ]
        )
    return buffer.getvalue()


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict
    csv_text: str

    @property
    def ok(self) -> bool:
        return not self.summary["violations"]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    payloads = [(config.to_dict(), t) for t in range(config.trials)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(_run_trial, payloads))
    else:
        chunks = [_run_trial(p) for p in payloads]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["trial"], r["algorithm"]))

    max_rate: dict[str, Fraction | float] = {}
    violations = []
    for row in rows:
        alg, rate = row["algorithm"], row["rate"]
        if alg not in max_rate or rate > max_rate[alg]:
            max_rate[alg] = rate
        if row["verdict"] == "above-bound" and alg in BOUNDED_ALGORITHMS and config.assert_bounds:
            violations.append(
                {
                    "instance_id": row["instance_id"],
                    "algorithm": alg,
                    "rate": fraction_str(rate),
                    "bound": fraction_str(row["bound"]),
                    "instance": row["instance"],
                    "sequence": row["sequence"],
                    "assignment": row["assignment"],
                }
            )
    summary = {
        "config": config.to_dict(),
        "max_rate": {alg: fraction_str(r) for alg, r in max_rate.items()},
        "violations": violations,
        "runs": [
            {
                "instance_id": row["instance_id"],
                "algorithm": row["algorithm"],
                "instance": row["instance"],
                "sequence": row["sequence"],
                "assignment": row["assignment"],
                "rate": fraction_str(row["rate"]),
            }
            for row in rows
        ],
    }
    csv_text = rows_to_csv(rows)
    if config.out_csv:
        Path(config.out_csv).write_text(csv_text, encoding="utf-8")
    if config.out_json:
        Path(config.out_json).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return ExperimentResult(rows=rows, summary=summary, csv_text=csv_text)


# ---------------------------------------------------------------------------
# One-command reproduction recipes
# ---------------------------------------------------------------------------

REPRODUCE_TABLES = ("thm46", "thm47", "tightness-k2")


def reproduce(table: str, k: int | None = None, epsilon: Fraction | None = None) -> dict:
    """Run one of the named headline comparisons and report target checks."""
    epsilon = Fraction(1, 10) if epsilon is None else Fraction(epsilon)
    if table == "thm46":
        k = 6 if k is None else k
        inst, seq = greedy_adversary(greedy_params(k, epsilon))
        opt = noncrossing_dp_cost(inst, seq)
        rows = []
        for alg, target, direction in (
            ("greedy", Fraction(2**k - 1) - epsilon, "ge"),
            ("ptcp", Fraction(5), "le"),
        ):
            trace = run_algorithm(alg, inst, seq)
            rate = compute_rate(trace.total_cost, opt)
            ok = rate >= target if direction == "ge" else rate <= target
            rows.append(_reproduce_row(alg, rate, target, direction, ok))
        return {"table": table, "k": k, "epsilon": fraction_str(epsilon), "rows": rows}
    if table == "thm47":
        k = 3 if k is None else k
        inst, seq = permutation_adversary(permutation_params(k, epsilon))
        opt = noncrossing_dp_cost(inst, seq)
        rows = []
        for alg, target, direction in (
            ("permutation", Fraction(4 * k - 1) - epsilon, "ge"),
            ("ptcp", Fraction(3) + epsilon, "le"),
        ):
            trace = run_algorithm(alg, inst, seq)
            rate = compute_rate(trace.total_cost, opt)
            ok = rate >= target if direction == "ge" else rate <= target
            rows.append(_reproduce_row(alg, rate, target, direction, ok))
        return {"table": table, "k": k, "epsilon": fraction_str(epsilon), "rows": rows}
    if table == "tightness-k2":
        layout = ServerLayout((Fraction(0), Fraction(1)))
        inst = unit_instance(layout)
        result = grid_search_max_rate(build_rule("ptcp", layout), inst, candidate_points(layout), n_max=2)
        lo, hi = Fraction(3) - Fraction(1, 100), Fraction(3)
        ok = lo <= result.best_rate <= hi
        rows = [
            {
                "algorithm": "ptcp",
                "rate": fraction_str(result.best_rate),
                "rate_decimal": fraction_decimal(result.best_rate),
                "target": f">= {fraction_str(lo)} and <= {fraction_str(hi)}",
                "witness_sequence": [fraction_str(q) for q in result.best_sequence],
                "ok": ok,
            }
        ]
        return {"table": table, "rows": rows}
    raise ValidationError(f"unknown table {table!r}; use one of {REPRODUCE_TABLES}")


def _reproduce_row(alg: str, rate, target: Fraction, direction: str, ok: bool) -> dict:
    sign = ">=" if direction == "ge" else "<="
    return {
        "algorithm": alg,
        "rate": fraction_str(rate),
        "rate_decimal": fraction_decimal(rate),
        "target": f"{sign} {fraction_str(target)}",
        "ok": ok,
    }


def format_reproduce(result: dict) -> str:
    lines = [f"table={result['table']}" + (f" k={result['k']}" if "k" in result else "")]
    for row in result["rows"]:
        status = "ok" if row["ok"] else "FAIL"
        lines.append(
            f"  {row['algorithm']:<12} rate={row['rate_decimal']:<18} target {row['target']:<12} [{status}]"
        )
    return "\n".join(lines)
