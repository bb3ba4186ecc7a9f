"""Study scheduling: slot search, session suggestions and the session lifecycle.

The wizard collects a student's weekly commitments and an early/late
preference, then this module finds one weekly study slot per class. Slots
snap to 30-minute boundaries, prefer the class's own weekday and the
student's preferred window, and never collide with commitments, existing
study blocks or each other. Suggestion generation is pure: same timetable
in, byte-identical suggestions out.

Sessions then run Scheduled -> Notified -> CheckedIn -> CheckedOut (or
Missed), with a pair of 1-5 ratings captured at checkout. Adherence, the
fraction of sessions checked out rather than missed, is the measurable
stand-in for "sticking to a study schedule" and drives the progress color
band students see.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import (
    BlockKind,
    DAYS_PER_WEEK,
    IllegalTransition,
    TimeBlock,
    ValidationError,
    WeekTimetable,
    color_band,
)

SESSION_DURATION_MIN = 60
SNAP_MIN = 30
CHECKIN_GRACE_MIN = 30
EARLY_WINDOW = (8 * 60, 12 * 60)   # 08:00-12:00
LATE_WINDOW = (18 * 60, 23 * 60)   # 18:00-23:00
ADAPT_SCORE_THRESHOLD = 60.0
SESSIONS_PER_CLASS_CAP = 3
RELOCATION_LOW_COUNT = 2
RELOCATION_RATING_MAX = 2
PLACE_LOW_ENV_COUNT = 3
PLACE_ENV_MAX = 2


class TimePreference(str, Enum):
    EARLY = "early"
    LATE = "late"


class SessionState(str, Enum):
    SCHEDULED = "scheduled"
    NOTIFIED = "notified"
    CHECKED_IN = "checked_in"
    CHECKED_OUT = "checked_out"
    MISSED = "missed"


TERMINAL_STATES = (SessionState.CHECKED_OUT, SessionState.MISSED)


@dataclass
class StudySession:
    session_id: str
    student_id: str
    class_id: str
    block: TimeBlock
    week: str
    starts_at: datetime
    ends_at: datetime
    state: SessionState = SessionState.SCHEDULED
    effectiveness: Optional[int] = None
    environment: Optional[int] = None
    notified_at: Optional[datetime] = None
    checked_in_at: Optional[datetime] = None
    checked_out_at: Optional[datetime] = None
    missed_at: Optional[datetime] = None

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "student_id": self.student_id,
            "class_id": self.class_id,
            "block": self.block.to_json(),
            "week": self.week,
            "starts_at": self.starts_at.isoformat(),
            "ends_at": self.ends_at.isoformat(),
            "state": self.state.value,
            "effectiveness": self.effectiveness,
            "environment": self.environment,
        }


@dataclass(frozen=True)
class SlotSuggestion:
    class_id: str
    block: TimeBlock
    score: float

    def to_json(self) -> dict:
        return {"class_id": self.class_id, "block": self.block.to_json(), "score": self.score}


@dataclass(frozen=True)
class PlaceCatalog:
    places: Tuple[Tuple[str, str], ...]  # (name, descriptor)

    def __post_init__(self) -> None:
        if not self.places:
            raise ValidationError("place catalog must not be empty")


def free_intervals(timetable: WeekTimetable) -> Dict[int, List[Tuple[int, int]]]:
    """Maximal free intervals per day: the waking window minus non-study blocks."""
    out: Dict[int, List[Tuple[int, int]]] = {}
    for day in range(DAYS_PER_WEEK):
        wake_start, wake_end = timetable.waking_window(day)
        busy = sorted(
            (max(b.start_min, wake_start), min(b.end_min, wake_end))
            for b in timetable.blocks_on(day, include_study=False)
            if b.end_min > wake_start and b.start_min < wake_end
        )
        intervals: List[Tuple[int, int]] = []
        cursor = wake_start
        for start, end in busy:
            if start > cursor:
                intervals.append((cursor, start))
            cursor = max(cursor, end)
        if cursor < wake_end:
            intervals.append((cursor, wake_end))
        out[day] = intervals
    return out


def _snap_up(minute: int, snap: int = SNAP_MIN) -> int:
    return ((minute + snap - 1) // snap) * snap


def _fits(day: int, start: int, duration: int, timetable: WeekTimetable, occupied: Sequence[TimeBlock]) -> bool:
    wake_start, wake_end = timetable.waking_window(day)
    end = start + duration
    if start < wake_start or end > wake_end:
        return False
    for b in timetable.blocks_on(day):
        if start < b.end_min and b.start_min < end:
            return False
    for b in occupied:
        if b.day == day and start < b.end_min and b.start_min < end:
            return False
    return True


def _candidate_starts(window: Tuple[int, int], duration: int, snap: int = SNAP_MIN) -> List[int]:
    lo, hi = window
    starts = []
    t = _snap_up(lo, snap)
    while t + duration <= hi:
        starts.append(t)
        t += snap
    return starts


def candidate_slots(
    class_id: str,
    class_day: int,
    timetable: WeekTimetable,
    preference: TimePreference,
    occupied: Sequence[TimeBlock],
    duration: int = SESSION_DURATION_MIN,
    excluded: Iterable[Tuple[int, int]] = (),
) -> Iterable[SlotSuggestion]:
    """Feasible study slots for one class in deterministic preference order.

    Days are tried starting at the class's own weekday and wrapping
    forward; within a day the preferred window (early/late) is scanned
    first, then the rest of the waking window. `excluded` holds (day,
    start) pairs the student already rejected.
    """
    preferred = EARLY_WINDOW if preference == TimePreference.EARLY else LATE_WINDOW
    skip = set(excluded)
    for offset in range(DAYS_PER_WEEK):
        day = (class_day + offset) % DAYS_PER_WEEK
        seen: set = set()
        in_preferred = _candidate_starts(preferred, duration)
        wake = timetable.waking_window(day)
        everywhere = _candidate_starts(wake, duration)
        for in_window, start in [(True, s) for s in in_preferred] + [(False, s) for s in everywhere]:
            if start in seen or (day, start) in skip:
                continue
            seen.add(start)
            if _fits(day, start, duration, timetable, occupied):
                score = round(1.0 - 0.1 * offset - (0.0 if in_window else 0.05), 4)
                block = TimeBlock(day, start, start + duration, BlockKind.STUDY, class_id)
                yield SlotSuggestion(class_id=class_id, block=block, score=score)


def suggest_sessions(
    timetable: WeekTimetable,
    classes: Mapping[str, TimeBlock],
    preference: TimePreference,
    duration: int = SESSION_DURATION_MIN,
    excluded: Mapping[str, Iterable[Tuple[int, int]]] | None = None,
) -> Tuple[List[SlotSuggestion], List[str]]:
    """One weekly study slot per class, plus the classes that got none.

    Classes are processed in (meeting day, meeting start, class_id) order
    and each accepted suggestion blocks later candidates, so a full run is
    deterministic and self-consistent. A class with no feasible slot is
    reported as unschedulable, never dropped.
    """
    if not classes:
        raise ValidationError("need at least one class to suggest sessions for")
    excluded = excluded or {}
    order = sorted(classes.items(), key=lambda kv: (kv[1].day, kv[1].start_min, kv[0]))
    taken: List[TimeBlock] = []
    suggestions: List[SlotSuggestion] = []
    unschedulable: List[str] = []
    for class_id, meeting in order:
        found = next(
            iter(
                candidate_slots(
                    class_id,
                    meeting.day,
                    timetable,
                    preference,
                    occupied=taken,
                    duration=duration,
                    excluded=excluded.get(class_id, ()),
                )
            ),
            None,
        )
        if found is None:
            unschedulable.append(class_id)
        else:
            suggestions.append(found)
            taken.append(found.block)
    return suggestions, unschedulable


def adapt_session_count(
    class_topic_mean: float,
    current_count: int,
    threshold: float = ADAPT_SCORE_THRESHOLD,
    cap: int = SESSIONS_PER_CLASS_CAP,
) -> int:
    """Suggest one extra weekly session while test performance lags, up to a cap."""
    if current_count < 1:
        raise ValidationError("a class under adaptation already has at least one session")
    if class_topic_mean < threshold and current_count < cap:
        return 1
    return 0


def _require_rating(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
        raise ValidationError(f"{name} rating must be an integer in 1..5, got {value!r}")


def notify(session: StudySession, now: datetime) -> StudySession:
    if session.state != SessionState.SCHEDULED:
        raise IllegalTransition(f"session {session.session_id} is {session.state.value}, not scheduled")
    session.state = SessionState.NOTIFIED
    session.notified_at = now
    return session


def check_in(session: StudySession, now: datetime, grace_min: int = CHECKIN_GRACE_MIN) -> StudySession:
    if session.state != SessionState.NOTIFIED:
        raise IllegalTransition(
            f"check-in requires a notified session, {session.session_id} is {session.state.value}"
        )
    grace = timedelta(minutes=grace_min)
    if not (session.starts_at - grace <= now <= session.ends_at):
        raise IllegalTransition("check-in window is [start - grace, end]")
    session.state = SessionState.CHECKED_IN
    session.checked_in_at = now
    return session


def check_out(session: StudySession, effectiveness: int, environment: int, now: datetime) -> StudySession:
    if session.state != SessionState.CHECKED_IN:
        raise IllegalTransition(
            f"check-out requires a checked-in session, {session.session_id} is {session.state.value}"
        )
    _require_rating("effectiveness", effectiveness)
    _require_rating("environment", environment)
    session.state = SessionState.CHECKED_OUT
    session.effectiveness = effectiveness
    session.environment = environment
    session.checked_out_at = now
    return session


def mark_missed(session: StudySession, now: datetime, grace_min: int = CHECKIN_GRACE_MIN) -> StudySession:
    if session.state not in (SessionState.SCHEDULED, SessionState.NOTIFIED):
        raise IllegalTransition(f"cannot miss a session in state {session.state.value}")
    if now <= session.starts_at + timedelta(minutes=grace_min):
        raise IllegalTransition("grace period has not elapsed")
    session.state = SessionState.MISSED
    session.missed_at = now
    return session


def propose_relocation(
    slot_history: Sequence[StudySession],
    current_block: TimeBlock,
    timetable: WeekTimetable,
    preference: TimePreference,
    occupied: Sequence[TimeBlock] = (),
) -> Optional[SlotSuggestion]:
    """Move a struggling slot: two consecutive low effectiveness ratings
    send the session to the next-best candidate in suggestion order."""
    completed = [s for s in slot_history if s.state == SessionState.CHECKED_OUT]
    if len(completed) < RELOCATION_LOW_COUNT:
        return None
    recent = completed[-RELOCATION_LOW_COUNT:]
    if any(s.effectiveness is None or s.effectiveness > RELOCATION_RATING_MAX for s in recent):
        return None
    others = [b for b in occupied if b != current_block]
    base = timetable.with_blocks(b for b in timetable.blocks if b != current_block)
    for slot in candidate_slots(
        current_block.class_id, current_block.day, base, preference, occupied=others
    ):
        if (slot.block.day, slot.block.start_min) != (current_block.day, current_block.start_min):
            return slot
    return None


def suggest_place(
    env_history: Sequence[int],
    catalog: PlaceCatalog,
    rng: random.Random,
    suggested_this_week: bool,
) -> Optional[Tuple[str, str]]:
    """Random quiet-place suggestion after repeated low environment ratings.

    Fires only when the last few environment ratings are all low and at
    most once per student per week; the draw is uniform and seeded.
    """
    if suggested_this_week:
        return None
    if len(env_history) < PLACE_LOW_ENV_COUNT:
        return None
    recent = list(env_history)[-PLACE_LOW_ENV_COUNT:]
    if any(r > PLACE_ENV_MAX for r in recent):
        return None
    return catalog.places[rng.randrange(len(catalog.places))]


def adherence(sessions: Iterable[StudySession]) -> Optional[float]:
    """CheckedOut / (CheckedOut + Missed); None while no session has resolved."""
    done = missed = 0
    for s in sessions:
        if s.state == SessionState.CHECKED_OUT:
            done += 1
        elif s.state == SessionState.MISSED:
            missed += 1
    total = done + missed
    if total == 0:
        return None
    return done / total


def adherence_band(value: Optional[float]) -> Optional[str]:
    return None if value is None else color_band(value)
