from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from studyloop.core import ValidationError
from studyloop.fbm import (
    Outcome,
    TriggerDecision,
    TriggerType,
    activation,
    estimate_ability,
    estimate_motivation,
    select_trigger_type,
)
from studyloop.performance import HabitCategory


class TestActivation:
    def test_maximum_product_fires(self):
        assert activation(1.0, 1.0, 0.25) is True

    def test_zero_product_never_fires(self):
        assert activation(0.0, 0.9, 0.25) is False

    def test_boundary_is_inclusive(self):
        assert activation(0.5, 0.5, 0.25) is True

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            activation(1.2, 0.5)
        with pytest.raises(ValidationError):
            activation(0.5, -0.1)
        with pytest.raises(ValidationError):
            activation(0.5, 0.5, 1.0)

    def test_monotone_on_grid(self):
        steps = [i / 100 for i in range(101)]
        for a in steps:
            previous = False
            for m in steps:
                current = activation(m, a)
                assert current or not previous  # never true -> false as m grows
                previous = current
        for m in steps:
            previous = False
            for a in steps:
                current = activation(m, a)
                assert current or not previous
                previous = current


class TestTriggerTypeSelection:
    def test_high_motivation_low_ability_gets_facilitator(self):
        assert select_trigger_type(0.8, 0.2) == TriggerDecision(Outcome.FIRE, TriggerType.FACILITATOR)

    def test_low_motivation_high_ability_gets_spark(self):
        assert select_trigger_type(0.2, 0.8) == TriggerDecision(Outcome.FIRE, TriggerType.SPARK)

    def test_both_low_defers(self):
        assert select_trigger_type(0.2, 0.2) == TriggerDecision(Outcome.DEFER)

    def test_both_high_gets_signal(self):
        assert select_trigger_type(0.8, 0.8) == TriggerDecision(Outcome.FIRE, TriggerType.SIGNAL)

    def test_decision_shape_invariants(self):
        with pytest.raises(ValidationError):
            TriggerDecision(Outcome.FIRE)
        with pytest.raises(ValidationError):
            TriggerDecision(Outcome.DEFER, TriggerType.SIGNAL)

    def test_exhaustive_grid_quadrants(self):
        # total, deterministic, and consistent with the quadrant prose on a
        # 101x101 grid; defer never coincides with activation at defaults
        for i in range(101):
            for j in range(101):
                m, a = i / 100, j / 100
                decision = select_trigger_type(m, a)
                again = select_trigger_type(m, a)
                assert decision == again
                if m >= 0.5 and a >= 0.5:
                    assert decision.trigger_type == TriggerType.SIGNAL
                elif m >= 0.5:
                    assert decision.trigger_type == TriggerType.FACILITATOR
                elif a >= 0.5:
                    assert decision.trigger_type == TriggerType.SPARK
                else:
                    assert decision.outcome == Outcome.DEFER
                if decision.outcome == Outcome.DEFER:
                    assert not activation(m, a)


class TestMotivationEstimator:
    def test_empty_history_returns_prior(self):
        assert estimate_motivation([]) == 0.5

    def test_all_completed_is_one(self):
        assert estimate_motivation([True] * 7) == 1.0

    def test_alternating_history_matches_brute_force(self):
        # oldest-first: completed, miss, completed, miss
        history = [True, False, True, False]
        weights = [1.0, 0.5, 0.25, 0.125]  # most recent first
        values = [0.0, 1.0, 0.0, 1.0]      # reversed history
        expected = sum(w * v for w, v in zip(weights, values)) / sum(weights)
        assert estimate_motivation(history) == pytest.approx(expected)
        assert expected == pytest.approx(1 / 3)

    def test_window_drops_old_outcomes(self):
        # ten misses then ten completions: the misses fall outside the window
        assert estimate_motivation([False] * 10 + [True] * 10) == 1.0

    @given(st.lists(st.booleans(), max_size=40))
    def test_estimate_stays_in_unit_interval(self, history):
        assert 0.0 <= estimate_motivation(history) <= 1.0


class TestAbilityEstimator:
    def test_base_table_read_back(self):
        assert estimate_ability(HabitCategory.SCHEDULING, 0) == pytest.approx(0.8)
        assert estimate_ability(HabitCategory.PREPARATION, 0) == pytest.approx(0.6)
        assert estimate_ability(HabitCategory.GROUP_STUDY, 0) == pytest.approx(0.4)

    def test_streak_bonus_caps(self):
        assert estimate_ability(HabitCategory.GROUP_STUDY, 10) == pytest.approx(0.6)
        assert estimate_ability(HabitCategory.GROUP_STUDY, 50) == pytest.approx(0.6)

    def test_monotone_in_streak(self):
        low = estimate_ability(HabitCategory.PREPARATION, 0)
        high = estimate_ability(HabitCategory.PREPARATION, 5)
        assert high > low

    def test_never_exceeds_one(self):
        assert estimate_ability(HabitCategory.SCHEDULING, 100) <= 1.0

    def test_negative_streak_rejected(self):
        with pytest.raises(ValidationError):
            estimate_ability(HabitCategory.SCHEDULING, -1)
