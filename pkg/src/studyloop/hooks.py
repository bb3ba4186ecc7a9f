"""Habit-loop state machine.

One cycle per (student, habit category) walks Triggered -> Acted ->
Rewarded -> Invested, strictly in that order. The reward step may lag the
action by wall-clock time but must precede investment, and a reward draw
that comes up empty still advances the phase (investment is never blocked
by reward variability). Completing a cycle bumps the student's
consecutive-completion streak for the category; a cycle that stalls past
its TTL is abandoned and resets the streak.

Cycle mutations must be serialized per student by the caller; the engine
holds a per-student lock. Every phase change is reported through an
append-only event sink for audit and simulation replay.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core import ConfigurationError, ConflictError, IllegalTransition, ValidationError
from .fbm import Outcome, TriggerDecision, TriggerType
from .performance import HabitCategory

DEFAULT_INTERNAL_AFTER = 5
DEFAULT_CYCLE_TTL_DAYS = 7


class Phase(str, Enum):
    TRIGGERED = "triggered"
    ACTED = "acted"
    REWARDED = "rewarded"
    INVESTED = "invested"
    ABANDONED = "abandoned"


class CycleEvent(str, Enum):
    ACTION_COMPLETED = "action_completed"
    REWARD_DELIVERED = "reward_delivered"
    INVESTMENT_RECORDED = "investment_recorded"


class TriggerSource(str, Enum):
    EXTERNAL = "external"
    INTERNAL = "internal"


class RewardKind(str, Enum):
    PRAISE_MESSAGE = "praise_message"
    PROGRESS_COLOR_CHANGE = "progress_color_change"
    STREAK_BADGE = "streak_badge"
    ENDORSEMENT = "endorsement"


_TRANSITIONS = {
    (Phase.TRIGGERED, CycleEvent.ACTION_COMPLETED): Phase.ACTED,
    (Phase.ACTED, CycleEvent.REWARD_DELIVERED): Phase.REWARDED,
    (Phase.REWARDED, CycleEvent.INVESTMENT_RECORDED): Phase.INVESTED,
}

_PHASE_TS_FIELD = {
    Phase.TRIGGERED: "triggered_at",
    Phase.ACTED: "acted_at",
    Phase.REWARDED: "rewarded_at",
    Phase.INVESTED: "invested_at",
}


@dataclass(frozen=True)
class RewardInstance:
    kind: RewardKind
    payload: str
    delivered_at: datetime

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "payload": self.payload,
            "delivered_at": self.delivered_at.isoformat(),
        }


@dataclass(frozen=True)
class RewardCatalog:
    """Weighted reward pool plus the overall delivery probability."""

    entries: Tuple[Tuple[RewardKind, float, Tuple[str, ...]], ...]
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigurationError(f"reward probability must be in [0,1], got {self.probability}")
        if not self.entries:
            raise ConfigurationError("reward catalog must not be empty")
        for kind, weight, templates in self.entries:
            if weight <= 0:
                raise ConfigurationError(f"reward weight must be > 0 for {kind}")
            if not templates:
                raise ConfigurationError(f"reward {kind} needs at least one template")
        if sum(w for _, w, _ in self.entries) <= 0:
            raise ConfigurationError("reward weights must sum > 0")


@dataclass
class HookCycle:
    cycle_id: str
    student_id: str
    category: HabitCategory
    trigger_source: TriggerSource
    trigger_type: TriggerType
    phase: Phase = Phase.TRIGGERED
    triggered_at: Optional[datetime] = None
    acted_at: Optional[datetime] = None
    rewarded_at: Optional[datetime] = None
    invested_at: Optional[datetime] = None
    abandoned_at: Optional[datetime] = None
    reward: Optional[RewardInstance] = None
    last_progress_at: Optional[datetime] = None

    @property
    def open(self) -> bool:
        return self.phase not in (Phase.INVESTED, Phase.ABANDONED)

    def to_json(self) -> dict:
        return {
            "cycle_id": self.cycle_id,
            "student_id": self.student_id,
            "category": self.category.value,
            "trigger_source": self.trigger_source.value,
            "trigger_type": self.trigger_type.value,
            "phase": self.phase.value,
            "triggered_at": self.triggered_at.isoformat() if self.triggered_at else None,
            "acted_at": self.acted_at.isoformat() if self.acted_at else None,
            "rewarded_at": self.rewarded_at.isoformat() if self.rewarded_at else None,
            "invested_at": self.invested_at.isoformat() if self.invested_at else None,
            "abandoned_at": self.abandoned_at.isoformat() if self.abandoned_at else None,
            "reward": self.reward.to_json() if self.reward else None,
        }


def open_cycle(
    cycle_id: str,
    student_id: str,
    category: HabitCategory,
    decision: TriggerDecision,
    source: TriggerSource,
    now: datetime,
) -> HookCycle:
    """Start a new cycle from a fired trigger decision."""
    if decision.outcome != Outcome.FIRE:
        raise ValidationError("cannot open a cycle from a deferred trigger")
    return HookCycle(
        cycle_id=cycle_id,
        student_id=student_id,
        category=category,
        trigger_source=source,
        trigger_type=decision.trigger_type,
        phase=Phase.TRIGGERED,
        triggered_at=now,
        last_progress_at=now,
    )


def advance(
    cycle: HookCycle,
    event: CycleEvent,
    now: datetime,
    reward: Optional[RewardInstance] = None,
) -> HookCycle:
    """Apply one lifecycle event in place; illegal events never mutate state."""
    target = _TRANSITIONS.get((cycle.phase, event))
    if target is None:
        raise IllegalTransition(
            f"event {event.value} not legal in phase {cycle.phase.value} (cycle {cycle.cycle_id})"
        )
    if cycle.last_progress_at and now < cycle.last_progress_at:
        raise ValidationError("cycle timestamps must be non-decreasing")
    if event == CycleEvent.REWARD_DELIVERED:
        # reward may legitimately be None: the draw came up empty but the
        # phase still advances so investment is never blocked.
        cycle.reward = reward
    cycle.phase = target
    setattr(cycle, _PHASE_TS_FIELD[target], now)
    cycle.last_progress_at = now
    return cycle


def abandon(cycle: HookCycle, now: datetime) -> HookCycle:
    if not cycle.open:
        raise IllegalTransition(f"cycle {cycle.cycle_id} is already closed")
    cycle.phase = Phase.ABANDONED
    cycle.abandoned_at = now
    return cycle


def is_stale(cycle: HookCycle, now: datetime, ttl: timedelta) -> bool:
    return cycle.open and cycle.last_progress_at is not None and now - cycle.last_progress_at >= ttl


def draw_reward(catalog: RewardCatalog, rng: random.Random, now: datetime) -> Optional[RewardInstance]:
    """Variable-ratio reward draw, fully deterministic for a given rng state.

    With probability `catalog.probability` a reward is delivered, its kind
    chosen proportionally to the configured weights and its payload drawn
    uniformly from that kind's templates. Otherwise None.
    """
    if rng.random() >= catalog.probability:
        return None
    kinds = [kind for kind, _, _ in catalog.entries]
    weights = [weight for _, weight, _ in catalog.entries]
    kind = rng.choices(kinds, weights=weights, k=1)[0]
    templates = next(t for k, _, t in catalog.entries if k == kind)
    payload = templates[rng.randrange(len(templates))]
    return RewardInstance(kind=kind, payload=payload, delivered_at=now)


def trigger_source_for_next(
    consecutive_completions: int, internal_after: int = DEFAULT_INTERNAL_AFTER
) -> TriggerSource:
    """External prompting until the habit has enough momentum to self-trigger."""
    if consecutive_completions < 0:
        raise ValidationError("completion count must be >= 0")
    if consecutive_completions < internal_after:
        return TriggerSource.EXTERNAL
    return TriggerSource.INTERNAL


class CycleLedger:
    """Book-keeping over all cycles: uniqueness, streaks, staleness, event log.

    Enforces at most one open cycle per (student, category) and keeps the
    per-category consecutive-completion streak plus the recent outcome
    history the motivation estimator feeds on.
    """

    def __init__(
        self,
        ttl: timedelta = timedelta(days=DEFAULT_CYCLE_TTL_DAYS),
        event_sink: Optional[Callable[[dict], None]] = None,
    ):
        self.ttl = ttl
        self.cycles: Dict[str, HookCycle] = {}
        self._open: Dict[Tuple[str, HabitCategory], str] = {}
        self.streaks: Dict[Tuple[str, HabitCategory], int] = {}
        self.history: Dict[Tuple[str, HabitCategory], List[bool]] = {}
        self._event_sink = event_sink
        self._counter = 0

    def _emit(self, record: dict) -> None:
        if self._event_sink is not None:
            self._event_sink(record)

    def _next_id(self) -> str:
        self._counter += 1
        return f"cycle-{self._counter:06d}"

    def open_cycle_for(
        self,
        student_id: str,
        category: HabitCategory,
        decision: TriggerDecision,
        source: TriggerSource,
        now: datetime,
    ) -> HookCycle:
        key = (student_id, category)
        existing = self._open.get(key)
        if existing is not None:
            raise ConflictError(
                f"student {student_id} already has an open {category.value} cycle ({existing})"
            )
        cycle = open_cycle(self._next_id(), student_id, category, decision, source, now)
        self.cycles[cycle.cycle_id] = cycle
        self._open[key] = cycle.cycle_id
        self._emit(
            {
                "type": "cycle_opened",
                "cycle_id": cycle.cycle_id,
                "student_id": student_id,
                "category": category.value,
                "trigger_type": cycle.trigger_type.value,
                "trigger_source": source.value,
                "at": now.isoformat(),
            }
        )
        return cycle

    def open_cycle_of(self, student_id: str, category: HabitCategory) -> Optional[HookCycle]:
        cycle_id = self._open.get((student_id, category))
        return self.cycles.get(cycle_id) if cycle_id else None

    def advance(
        self,
        cycle: HookCycle,
        event: CycleEvent,
        now: datetime,
        reward: Optional[RewardInstance] = None,
    ) -> HookCycle:
        advance(cycle, event, now, reward)
        key = (cycle.student_id, cycle.category)
        if cycle.phase == Phase.INVESTED:
            self._open.pop(key, None)
            self.streaks[key] = self.streaks.get(key, 0) + 1
            self.history.setdefault(key, []).append(True)
        self._emit(
            {
                "type": "cycle_event",
                "cycle_id": cycle.cycle_id,
                "student_id": cycle.student_id,
                "category": cycle.category.value,
                "event": event.value,
                "phase": cycle.phase.value,
                "at": now.isoformat(),
            }
        )
        return cycle

    def abandon(self, cycle: HookCycle, now: datetime) -> HookCycle:
        abandon(cycle, now)
        key = (cycle.student_id, cycle.category)
        self._open.pop(key, None)
        self.streaks[key] = 0
        self.history.setdefault(key, []).append(False)
        self._emit(
            {
                "type": "cycle_abandoned",
                "cycle_id": cycle.cycle_id,
                "student_id": cycle.student_id,
                "category": cycle.category.value,
                "at": now.isoformat(),
            }
        )
        return cycle

    def sweep_stale(self, now: datetime) -> List[HookCycle]:
        """Abandon every open cycle that has stalled past the TTL."""
        stale = [
            self.cycles[cid] for cid in list(self._open.values())
            if is_stale(self.cycles[cid], now, self.ttl)
        ]
        for cycle in stale:
            self.abandon(cycle, now)
        return stale

    def streak(self, student_id: str, category: HabitCategory) -> int:
        return self.streaks.get((student_id, category), 0)

    def outcomes(self, student_id: str, category: HabitCategory) -> List[bool]:
        return self.history.get((student_id, category), [])

    def completed_counts(self, student_id: str) -> Dict[HabitCategory, int]:
        counts: Dict[HabitCategory, int] = {}
        for cycle in self.cycles.values():
            if cycle.student_id == student_id and cycle.phase == Phase.INVESTED:
                counts[cycle.category] = counts.get(cycle.category, 0) + 1
        return counts

    def to_json(self) -> dict:
        return {
            "cycles": {cid: c.to_json() for cid, c in self.cycles.items()},
            "open": {f"{sid}:{cat.value}": cid for (sid, cat), cid in self._open.items()},
            "streaks": {f"{sid}:{cat.value}": n for (sid, cat), n in self.streaks.items()},
            "history": {f"{sid}:{cat.value}": h for (sid, cat), h in self.history.items()},
            "counter": self._counter,
        }
