import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ofal.adversary import candidate_points
from ofal.algorithms import greedy_rule, ptcp_rule
from ofal.core import (
    AssignmentTrace,
    Instance,
    unit_instance,
)
from ofal.engine import simulate
from ofal.offline import OptResult, optimal_cost
from ofal.verify import (
    adx_bound,
    capacity_insensitivity_probe,
    check_adx_bound,
    check_faithful,
    check_opposite,
    check_ratio_bound,
    check_rightmost_shift_bound,
    check_surrounding_oriented,
    grid_search_max_rate,
    sweep_adx,
)

from conftest import instances, layout_of, rand_requests, seq_of


class TestSurroundingOriented:
    @pytest.mark.parametrize("builder", [ptcp_rule, greedy_rule], ids=["ptcp", "greedy"])
    def test_rules_always_pass(self, builder):
        from ofal.adversary import random_instance

        rng = random.Random(3)
        for trial in range(150):
            inst = random_instance(rng, rng.randint(1, 6), cap_max=2)
            seq = rand_requests(rng, inst, rng.randint(0, min(8, inst.total_capacity)))
            trace = simulate(builder(inst.layout), inst, seq)
            report = check_surrounding_oriented(trace, seq, inst.layout, inst)
            assert report.ok, report.violations

    def test_synthetic_violation_detected(self):
        layout = layout_of(0, 1, 2)
        inst = unit_instance(layout)
        seq = seq_of("1/10")
        forged = AssignmentTrace(
            assignment=(2,),
            remaining_after=((1, 1, 0),),
            per_step_cost=(Fraction(19, 10),),
            total_cost=Fraction(19, 10),
        )
        report = check_surrounding_oriented(forged, seq, layout, inst)
        assert not report.ok
        assert report.violations[0]["step"] == 0


class TestFaithful:
    def test_split_rule_is_faithful(self):
        rng = random.Random(11)
        from ofal.adversary import random_layout

        for _ in range(20):
            layout = random_layout(rng, rng.randint(1, 6))
            inst = unit_instance(layout)
            seq = rand_requests(rng, inst, layout.k)
            report = check_faithful(ptcp_rule, inst, seq, trials=40, seed=rng.randint(0, 99))
            assert report.ok, report.violations

    def test_unchanged_sequence_trivially_identical(self):
        layout = layout_of(0, 1, 3)
        inst = unit_instance(layout)
        seq = seq_of("1/2", 2, "5/2")
        rule = ptcp_rule(layout)
        assert simulate(rule, inst, seq).assignment == simulate(rule, inst, seq).assignment

    def test_guarded_composition_is_faithful(self):
        layout = layout_of(0, 1)
        from ofal.algorithms import guard_rule

        rule, extended = guard_rule(ptcp_rule(layout), layout, d=Fraction(3), x=Fraction(1))
        inst = unit_instance(extended)
        rng = random.Random(5)
        for _ in range(20):
            seq = rand_requests(rng, inst, 3)
            report = check_faithful(rule, inst, seq, trials=40, seed=rng.randint(0, 99))
            assert report.ok, report.violations

    def test_capacitated_requires_builder(self):
        inst = Instance(layout_of(0, 1), (2, 1))
        seq = seq_of("1/2")
        from ofal.core import ValidationError

        with pytest.raises(ValidationError):
            check_faithful(ptcp_rule(inst.layout), inst, seq, trials=5)
        report = check_faithful(ptcp_rule, inst, seq, trials=5, seed=0)
        assert report.ok


class TestOpposite:
    def test_between_is_opposite(self):
        layout = layout_of(0, 2)
        trace = AssignmentTrace(
            assignment=(0,), remaining_after=((0, 1),), per_step_cost=(Fraction(1),), total_cost=Fraction(1)
        )
        opt = OptResult(cost=Fraction(1), assignment=(1,))
        assert check_opposite(trace, opt, seq_of(1), layout).opposite

    def test_endpoint_counts_as_between(self):
        layout = layout_of(0, 2)
        trace = AssignmentTrace(
            assignment=(0,), remaining_after=((0, 1),), per_step_cost=(Fraction(0),), total_cost=Fraction(0)
        )
        opt = OptResult(cost=Fraction(0), assignment=(0,))
        assert check_opposite(trace, opt, seq_of(0), layout).opposite

    def test_outside_is_not_opposite(self):
        layout = layout_of(1, 2)
        trace = AssignmentTrace(
            assignment=(0,), remaining_after=((0, 1),), per_step_cost=(Fraction(1),), total_cost=Fraction(1)
        )
        opt = OptResult(cost=Fraction(1), assignment=(1,))
        report = check_opposite(trace, opt, seq_of(0), layout)
        assert not report.opposite and report.failing_indices == (0,)

    def test_exponential_adversary_classification_for_greedy(self):
        # Replaying and classifying: every cascading request sits between
        # greedy's server and the optimum's, except the last one, which
        # lands right of the whole hull (both matched servers are to its
        # left, under any optimal map).
        from ofal.adversary import AdversaryParams, greedy_adversary

        params = AdversaryParams(k=4, delta=Fraction(1, 100), capacities=(1,) * 4, family="greedy_exp")
        inst, seq = greedy_adversary(params)
        trace = simulate(greedy_rule(inst.layout), inst, seq)
        opt = optimal_cost(inst, seq)
        report = check_opposite(trace, opt, seq, inst.layout)
        assert report.failing_indices == (3,)


class TestRatioBound:
    @given(instances(max_k=6, cap_max=3), st.data())
    @settings(max_examples=80, deadline=None)
    def test_split_rule_within_bound(self, inst, data):
        n = data.draw(st.integers(0, min(inst.total_capacity, 10)))
        rng = random.Random(data.draw(st.integers(0, 10**6)))
        seq = rand_requests(rng, inst, n)
        report = check_ratio_bound(ptcp_rule, inst, seq)
        assert report.within_bound, (inst, seq, report.rate, report.bound)

    def test_rate_conventions(self):
        inst = unit_instance(layout_of(0, 2))
        report = check_ratio_bound(ptcp_rule, inst, seq_of(0, 2))
        assert report.rate == 1 and report.alg_cost == 0 and report.opt_cost == 0


class TestGuardedBound:
    def test_bound_formula(self):
        # alpha = 1 so the three terms are 3, 5 and 3.
        assert adx_bound(layout_of(0, 1), Fraction(3), Fraction(1)) == 5

    def test_single_run_check(self):
        report = check_adx_bound(
            ptcp_rule, layout_of(0, 1), Fraction(3), Fraction(1), seq_of("7/2", "1/2", 1)
        )
        assert report.bound == 5
        assert report.within_bound

    @pytest.mark.parametrize("d,x", [(Fraction(3), Fraction(1)), (Fraction(2), Fraction(1)), (Fraction(5), Fraction(4))])
    def test_sweeps_stay_within_bound(self, d, x):
        report = sweep_adx(ptcp_rule, layout_of(0, 1), d=d, x=x, trials=250, seed=23)
        assert report.ok, report.violations[:2]

    def test_rightmost_shift_inequality(self):
        report = check_rightmost_shift_bound(
            ptcp_rule, layout_of(0, 1), d=Fraction(3), x=Fraction(1), trials=60, seed=17
        )
        assert report.trials >= 50
        assert report.ok, report.violations[:2]


class TestGridSearch:
    def test_exact_tightness_witness_at_k2(self):
        layout = layout_of(0, 1)
        inst = unit_instance(layout)
        result = grid_search_max_rate(ptcp_rule(layout), inst, candidate_points(layout), n_max=2)
        assert result.best_rate == 3
        assert result.best_sequence == (Fraction(1, 2), Fraction(0))
        assert not result.zero_opt_anomalies

    def test_zero_opt_never_with_positive_cost(self):
        layout = layout_of(0, 1, 3)
        inst = Instance(layout, (2, 1, 1))
        for builder in (ptcp_rule, greedy_rule):
            result = grid_search_max_rate(builder(layout), inst, candidate_points(layout), n_max=3)
            assert not result.zero_opt_anomalies


class TestCapacityProbe:
    def test_greedy_k2_reaches_three_and_is_insensitive(self):
        layout = layout_of(0, 1)
        for cap in (2, 3):
            report = capacity_insensitivity_probe(greedy_rule, layout, max_capacity=cap)
            assert report.ok, report.violations
            assert Fraction(report.details["unit_worst_rate"]) == 3

    def test_split_rule_insensitive_on_k3(self):
        layout = layout_of(0, 1, 3)
        report = capacity_insensitivity_probe(ptcp_rule, layout, max_capacity=2)
        assert report.ok
        # Worst unit rate attains the layout bound 2*alpha+1 = 4 exactly.
        assert Fraction(report.details["unit_worst_rate"]) == 4

    def test_reports_are_deterministic(self):
        layout = layout_of(0, 1)
        a = capacity_insensitivity_probe(greedy_rule, layout, max_capacity=2)
        b = capacity_insensitivity_probe(greedy_rule, layout, max_capacity=2)
        assert a.to_dict() == b.to_dict()
