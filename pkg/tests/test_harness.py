import json
from fractions import Fraction

import pytest

import ofal.harness as harness
from ofal.core import (
    ValidationError,
    compute_rate,
    parse_instance,
    parse_sequence,
)
from ofal.harness import (
    ExperimentConfig,
    format_reproduce,
    reproduce,
    run_experiment,
)
from ofal.offline import noncrossing_dp_cost


BASE_CONFIG = dict(
    algorithms=("ptcp", "greedy", "permutation"),
    instance_source={"kind": "random", "k_max": 4, "cap_max": 2},
    sequence_source={"kind": "random", "n_max": 6, "distribution": "uniform"},
    trials=6,
    seed=99,
)


class TestConfig:
    def test_roundtrip(self):
        config = ExperimentConfig(**BASE_CONFIG)
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_unknown_algorithm_rejected(self):
        bad = dict(BASE_CONFIG, algorithms=("quantum",))
        with pytest.raises(ValidationError):
            ExperimentConfig(**bad)


class TestRunExperiment:
    def test_byte_identical_reruns(self):
        config = ExperimentConfig(**BASE_CONFIG)
        first = run_experiment(config)
        second = run_experiment(config)
        assert first.csv_text == second.csv_text
        assert first.summary == second.summary

    def test_jobs_do_not_change_output(self):
        serial = run_experiment(ExperimentConfig(**BASE_CONFIG))
        parallel = run_experiment(ExperimentConfig(**dict(BASE_CONFIG, jobs=2)))
        assert serial.csv_text == parallel.csv_text

    def test_rates_recomputable_from_reproducers(self):
        result = run_experiment(ExperimentConfig(**BASE_CONFIG))
        for run in result.summary["runs"]:
            inst = parse_instance(run["instance"])
            seq = parse_sequence(run["sequence"])
            assignment = run["assignment"]
            alg_cost = sum(
                (abs(r - inst.layout[j]) for r, j in zip(seq, assignment)),
                Fraction(0),
            )
            opt = noncrossing_dp_cost(inst, seq)
            assert str(run["rate"]) == _fraction_repr(compute_rate(alg_cost, opt))

    def test_outputs_written(self, tmp_path):
        config = ExperimentConfig(
            **dict(
                BASE_CONFIG,
                trials=2,
                out_csv=str(tmp_path / "rows.csv"),
                out_json=str(tmp_path / "summary.json"),
            )
        )
        result = run_experiment(config)
        assert (tmp_path / "rows.csv").read_text() == result.csv_text
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["max_rate"] == result.summary["max_rate"]

    def test_greedy_above_bound_is_reported_not_fatal(self):
        config = ExperimentConfig(
            algorithms=("ptcp", "greedy"),
            instance_source={"kind": "adversary", "family": "greedy", "k": 4, "epsilon": "1/10"},
            sequence_source={"kind": "adversary"},
            trials=1,
            seed=0,
        )
        result = run_experiment(config)
        verdicts = {row["algorithm"]: row["verdict"] for row in result.rows}
        assert verdicts["greedy"] == "above-bound"
        assert verdicts["ptcp"] == "within-bound"
        assert result.ok  # greedy carries no guarantee

    def test_violation_wiring(self, monkeypatch):
        # The guarantee holds for the real rule, so exercise the violation
        # path by pretending greedy is also covered by it.
        monkeypatch.setattr(harness, "BOUNDED_ALGORITHMS", ("ptcp", "greedy"))
        config = ExperimentConfig(
            algorithms=("greedy",),
            instance_source={"kind": "adversary", "family": "greedy", "k": 4, "epsilon": "1/10"},
            sequence_source={"kind": "adversary"},
            trials=1,
            seed=0,
        )
        result = run_experiment(config)
        assert not result.ok
        violation = result.summary["violations"][0]
        assert violation["algorithm"] == "greedy"
        assert "instance" in violation and "sequence" in violation

    def test_adversary_sequences_need_adversary_instances(self):
        config = ExperimentConfig(
            algorithms=("ptcp",),
            instance_source={"kind": "random", "k_max": 3},
            sequence_source={"kind": "adversary"},
            trials=1,
            seed=0,
        )
        with pytest.raises(ValidationError):
            run_experiment(config)


def _fraction_repr(value) -> str:
    from ofal.core import fraction_str

    return fraction_str(value)


class TestReproduce:
    def test_exponential_table(self):
        result = reproduce("thm46", k=6)
        by_alg = {row["algorithm"]: row for row in result["rows"]}
        assert by_alg["greedy"]["ok"] and by_alg["ptcp"]["ok"]
        assert Fraction(by_alg["greedy"]["rate"]) >= Fraction(63) - Fraction(1, 10)
        assert Fraction(by_alg["ptcp"]["rate"]) <= 5

    def test_geometric_table(self):
        result = reproduce("thm47", k=3, epsilon=Fraction(1, 10))
        by_alg = {row["algorithm"]: row for row in result["rows"]}
        assert Fraction(by_alg["permutation"]["rate"]) >= Fraction(109, 10)
        assert Fraction(by_alg["ptcp"]["rate"]) <= Fraction(31, 10)
        assert all(row["ok"] for row in result["rows"])

    def test_tightness_table(self):
        result = reproduce("tightness-k2")
        (row,) = result["rows"]
        rate = Fraction(row["rate"])
        assert Fraction(299, 100) <= rate <= 3
        assert row["ok"]

    def test_unknown_table(self):
        with pytest.raises(ValidationError):
            reproduce("thm99")

    def test_formatting(self):
        text = format_reproduce(reproduce("thm46", k=3))
        assert "greedy" in text and "[ok]" in text


class TestCsv:
    def test_exact_and_decimal_rates(self):
        config = ExperimentConfig(**dict(BASE_CONFIG, trials=1))
        result = run_experiment(config)
        header = result.csv_text.splitlines()[0].split(",")
        assert "rate" in header and "rate_decimal" in header
        assert header.index("rate_decimal") == header.index("rate") + 1
