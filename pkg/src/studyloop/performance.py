"""Academic-performance regression models and habit-target ranking.

Three published linear models relate self-reported study habits (7-point
Likert items) to academic outcomes: self-perceived performance, objective
performance (high grades) and performance change over time. The engine
scores students against all three and uses the coefficients to decide,
per student, which habit category (scheduling, class preparation, group
study) is worth working on next.

Model definitions live in data/models.json so coefficients are data, not
code. Significance markers are carried as metadata and play no part at
runtime.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .core import IncompleteResponseError, ValidationError

LIKERT_MIN = 1
LIKERT_MAX = 7


class ModelKind(str, Enum):
    SELF_PERCEIVED = "self_perceived"
    OBJECTIVE = "objective"
    CHANGE_OVER_TIME = "change_over_time"


class HabitCategory(str, Enum):
    SCHEDULING = "scheduling"
    PREPARATION = "preparation"
    GROUP_STUDY = "group_study"
    UNTARGETED = "untargeted"


# Scheduling comes first: it is the prerequisite behaviour the other two
# build upon, and it wins exact ties ahead of preparation, which in turn
# beats group study.
CATEGORY_PRIORITY = (
    HabitCategory.SCHEDULING,
    HabitCategory.PREPARATION,
    HabitCategory.GROUP_STUDY,
)


@dataclass(frozen=True)
class HabitItem:
    item_id: str
    prompt: str
    model: ModelKind
    coefficient: float
    category: HabitCategory
    significance: str = ""

    def __post_init__(self) -> None:
        if self.coefficient == 0:
            raise ValidationError(f"item {self.item_id} has zero coefficient")


@dataclass(frozen=True)
class RegressionModel:
    kind: ModelKind
    outcome: str
    intercept: float
    items: Tuple[HabitItem, ...]

    def item_ids(self) -> List[str]:
        return [item.item_id for item in self.items]


def load_catalog(path: Optional[str] = None) -> Dict[ModelKind, RegressionModel]:
    """Load the versioned model catalog (the packaged one by default)."""
    if path is None:
        raw = resources.files("studyloop.data").joinpath("models.json").read_text()
    else:
        with open(path) as fh:
            raw = fh.read()
    data = json.loads(raw)
    models: Dict[ModelKind, RegressionModel] = {}
    for spec in data["models"]:
        kind = ModelKind(spec["kind"])
        items = tuple(
            HabitItem(
                item_id=it["item_id"],
                prompt=it["prompt"],
                model=kind,
                coefficient=float(it["coefficient"]),
                category=HabitCategory(it["category"]),
                significance=it.get("significance", ""),
            )
            for it in spec["items"]
        )
        seen = set()
        for it in items:
            if it.item_id in seen:
                raise ValidationError(f"duplicate item {it.item_id} in {kind.value}")
            seen.add(it.item_id)
        models[kind] = RegressionModel(
            kind=kind,
            outcome=spec["outcome"],
            intercept=float(spec["intercept"]),
            items=items,
        )
    if set(models) != set(ModelKind):
        raise ValidationError("catalog must define all three models")
    return models


_CATALOG: Optional[Dict[ModelKind, RegressionModel]] = None


def catalog() -> Dict[ModelKind, RegressionModel]:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = load_catalog()
    return _CATALOG


def get_model(kind: ModelKind) -> RegressionModel:
    return catalog()[kind]


def all_items() -> Dict[str, HabitItem]:
    return {item.item_id: item for model in catalog().values() for item in model.items}


def validate_responses(responses: Mapping[str, int]) -> None:
    known = all_items()
    for item_id, value in responses.items():
        if item_id not in known:
            raise ValidationError(f"unknown habit item {item_id!r}")
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"response for {item_id} must be an integer")
        if not LIKERT_MIN <= value <= LIKERT_MAX:
            raise ValidationError(
                f"response for {item_id} must be in {LIKERT_MIN}..{LIKERT_MAX}, got {value}"
            )


def score(model: RegressionModel, responses: Mapping[str, float], raw: bool = False) -> float:
    """Evaluate the model: sum(coefficient_i * x_i) + intercept, no clamping.

    raw=True bypasses Likert range validation so the affine formula can be
    exercised on arbitrary inputs (e.g. zero vectors return the intercept
    exactly).
    """
    missing = [item.item_id for item in model.items if item.item_id not in responses]
    if missing:
        raise IncompleteResponseError(
            f"{model.kind.value} responses missing items: {', '.join(missing)}"
        )
    if not raw:
        validate_responses({i.item_id: responses[i.item_id] for i in model.items})
    total = model.intercept
    for item in model.items:
        total += item.coefficient * responses[item.item_id]
    return total


def marginal_gain(item: HabitItem, value: float) -> float:
    """Score headroom if the student moved this item to its best extreme.

    Positive coefficients improve toward 7, negative toward 1; either way
    the gain is non-negative and zero exactly at the favourable extreme.
    """
    if item.coefficient > 0:
        return item.coefficient * (LIKERT_MAX - value)
    return abs(item.coefficient) * (value - LIKERT_MIN)


def rank_habit_targets(
    responses: Mapping[str, int], model: RegressionModel
) -> List[Tuple[str, float]]:
    """Items of one model ordered by marginal gain, descending; ties by item_id."""
    score(model, responses)  # completeness + range validation
    gains = [(item.item_id, marginal_gain(item, responses[item.item_id])) for item in model.items]
    gains.sort(key=lambda pair: (-pair[1], pair[0]))
    return gains


def select_target_category(
    responses: Mapping[str, int],
    completed_cycles: Mapping[HabitCategory, int],
    prerequisite_cycles: int = 4,
) -> HabitCategory:
    """Pick the habit category the engine should currently be working on.

    Scheduling is the prerequisite behaviour: until the student has
    completed `prerequisite_cycles` scheduling habit loops, scheduling is
    always chosen. Afterwards the category holding the highest-gain
    targetable item wins; exact ties resolve by CATEGORY_PRIORITY and an
    all-zero gain profile falls back to scheduling.
    """
    done = completed_cycles.get(HabitCategory.SCHEDULING, 0)
    if done < prerequisite_cycles:
        return HabitCategory.SCHEDULING

    best: Dict[HabitCategory, float] = {}
    for model in catalog().values():
        for item_id, gain in rank_habit_targets(responses, model):
            cat = all_items()[item_id].category
            if cat == HabitCategory.UNTARGETED:
                continue
            best[cat] = max(best.get(cat, 0.0), gain)

    top = max(best.values(), default=0.0)
    if top <= 0.0:
        return HabitCategory.SCHEDULING
    for cat in CATEGORY_PRIORITY:
        if math.isclose(best.get(cat, 0.0), top, rel_tol=0.0, abs_tol=1e-12):
            return cat
    return HabitCategory.SCHEDULING
