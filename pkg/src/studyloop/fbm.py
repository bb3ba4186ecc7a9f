"""Motivation/ability trigger gate.

Behaviour happens when motivation, ability and a trigger line up; a
trigger sent below the activation threshold is wasted. The gate here
decides two things for each pending trigger: whether to fire at all, and
what flavour of trigger to send. High motivation and high ability get a
plain reminder (signal); willing-but-struggling students get a trigger
that reduces the difficulty (facilitator); able-but-unmotivated students
get an incentive (spark); when both are low the trigger is deferred.

The literature is qualitative about all of this, so the numeric shape is
an engineering choice: activation is the product hyperbola m*a >= tau
(high on one axis compensates the other) and the trigger-type rule is a
quadrant split at (m0, a0). Config validation keeps tau <= m0*a0 so the
quadrant rule never fires where activation says a trigger is wasted.
Both estimators below are deliberately simple defaults, not measurements.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .core import ValidationError
from .performance import HabitCategory

DEFAULT_ACTIVATION_THRESHOLD = 0.25
DEFAULT_MOTIVATION_THRESHOLD = 0.5
DEFAULT_ABILITY_THRESHOLD = 0.5
MOTIVATION_PRIOR = 0.5
MOTIVATION_WINDOW = 10

# Scheduling is mostly a motivation problem (the task itself is easy);
# coordinating a group is the hardest thing we ask for.
BASE_ABILITY: Mapping[HabitCategory, float] = {
    HabitCategory.SCHEDULING: 0.8,
    HabitCategory.PREPARATION: 0.6,
    HabitCategory.GROUP_STUDY: 0.4,
}
ABILITY_STREAK_STEP = 0.02
ABILITY_STREAK_CAP = 0.2


class TriggerType(str, Enum):
    SIGNAL = "signal"
    SPARK = "spark"
    FACILITATOR = "facilitator"


class Outcome(str, Enum):
    FIRE = "fire"
    DEFER = "defer"


@dataclass(frozen=True)
class TriggerDecision:
    outcome: Outcome
    trigger_type: Optional[TriggerType] = None

    def __post_init__(self) -> None:
        if self.outcome == Outcome.FIRE and self.trigger_type is None:
            raise ValidationError("fire decision needs a trigger type")
        if self.outcome == Outcome.DEFER and self.trigger_type is not None:
            raise ValidationError("defer decision carries no trigger type")

    @property
    def fired(self) -> bool:
        return self.outcome == Outcome.FIRE


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must be in [0, 1], got {value}")


def activation(motivation: float, ability: float, threshold: float = DEFAULT_ACTIVATION_THRESHOLD) -> bool:
    """True when a trigger can land: motivation * ability >= threshold (inclusive)."""
    _check_unit("motivation", motivation)
    _check_unit("ability", ability)
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"activation threshold must be in (0, 1), got {threshold}")
    return motivation * ability >= threshold


def select_trigger_type(
    motivation: float,
    ability: float,
    motivation_threshold: float = DEFAULT_MOTIVATION_THRESHOLD,
    ability_threshold: float = DEFAULT_ABILITY_THRESHOLD,
) -> TriggerDecision:
    """Quadrant rule mapping (motivation, ability) to a trigger decision."""
    _check_unit("motivation", motivation)
    _check_unit("ability", ability)
    high_m = motivation >= motivation_threshold
    high_a = ability >= ability_threshold
    if high_m and high_a:
        return TriggerDecision(Outcome.FIRE, TriggerType.SIGNAL)
    if high_m:
        return TriggerDecision(Outcome.FIRE, TriggerType.FACILITATOR)
    if high_a:
        return TriggerDecision(Outcome.FIRE, TriggerType.SPARK)
    return TriggerDecision(Outcome.DEFER)


def estimate_motivation(
    history: Sequence[bool],
    prior: float = MOTIVATION_PRIOR,
    window: int = MOTIVATION_WINDOW,
) -> float:
    """Exponentially weighted completion rate of recent habit loops.

    history is ordered oldest-first; the most recent outcome carries weight
    1 and each step back halves it. Only the last `window` outcomes count.
    Empty history returns the configured prior.
    """
    recent = list(history)[-window:]
    if not recent:
        return prior
    weight = 1.0
    num = 0.0
    den = 0.0
    for outcome in reversed(recent):
        num += weight * (1.0 if outcome else 0.0)
        den += weight
        weight *= 0.5
    return num / den


def estimate_ability(
    category: HabitCategory,
    streak: int,
    base: Optional[Mapping[HabitCategory, float]] = None,
) -> float:
    """Per-category base difficulty, eased by a capped practice bonus."""
    if streak < 0:
        raise ValidationError(f"streak must be >= 0, got {streak}")
    table = base if base is not None else BASE_ABILITY
    if category not in table:
        raise ValidationError(f"no base ability for category {category}")
    bonus = min(ABILITY_STREAK_CAP, ABILITY_STREAK_STEP * streak)
    return min(1.0, table[category] + bonus)
