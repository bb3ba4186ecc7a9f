"""Shared vocabulary for the study-habit engine.

The week is a minute-resolution grid anchored at Monday 00:00 in the
student's local timezone (day 0 = Monday). Everything that talks about
time on campus (class meetings, work commitments, study sessions) is a
TimeBlock on that grid; absolute instants are timezone-aware UTC
datetimes that get projected onto the grid via week_position().

All types here are immutable values and safe to share between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Optional
from zoneinfo import ZoneInfo

MINUTES_PER_DAY = 1440
DAYS_PER_WEEK = 7
DEFAULT_WAKING_WINDOW = (8 * 60, 23 * 60)  # 08:00-23:00 local

DAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")


class EngineError(Exception):
    """Base class for every error raised by the engine."""


class ValidationError(EngineError):
    """Input outside its documented domain (bad rating, bad block, ...)."""


class IncompleteResponseError(ValidationError):
    """A Likert response set is missing items a model requires."""


class ConfigurationError(EngineError):
    """Bad engine configuration (unknown timezone, inconsistent thresholds)."""


class ConflictError(EngineError):
    """The operation collides with existing state (duplicate open cycle, ...)."""


class IllegalTransition(EngineError):
    """An event that is not legal for the entity's current state."""


class AuthorizationError(EngineError):
    """Caller is not allowed to perform the operation."""


class NotFoundError(EngineError):
    """Referenced entity does not exist."""


class BlockKind(str, Enum):
    CLASS = "class"
    WORK = "work"
    OTHER = "other"
    STUDY = "study"


@dataclass(frozen=True)
class TimeBlock:
    """A recurring weekly commitment: [start_min, end_min) on one weekday.

    Blocks may not span midnight; a commitment crossing midnight must be
    entered as two blocks.
    """

    day: int
    start_min: int
    end_min: int
    kind: BlockKind
    class_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0 <= self.day < DAYS_PER_WEEK:
            raise ValidationError(f"day must be in 0..6, got {self.day}")
        if not (0 <= self.start_min < self.end_min <= MINUTES_PER_DAY):
            raise ValidationError(
                f"block needs 0 <= start < end <= 1440, got [{self.start_min}, {self.end_min})"
            )
        if self.kind in (BlockKind.CLASS, BlockKind.STUDY) and not self.class_id:
            raise ValidationError(f"{self.kind.value} block requires a class_id")

    @property
    def duration_min(self) -> int:
        return self.end_min - self.start_min

    def overlaps(self, other: "TimeBlock") -> bool:
        if self.day != other.day:
            return False
        return self.start_min < other.end_min and other.start_min < self.end_min

    def to_json(self) -> dict:
        payload = {
            "day": self.day,
            "start": self.start_min,
            "end": self.end_min,
            "kind": self.kind.value,
        }
        if self.class_id is not None:
            payload["class_id"] = self.class_id
        return payload

    @classmethod
    def from_json(cls, data: dict) -> "TimeBlock":
        try:
            return cls(
                day=int(data["day"]),
                start_min=int(data["start"]),
                end_min=int(data["end"]),
                kind=BlockKind(data["kind"]),
                class_id=data.get("class_id"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed time block: {data!r}") from exc
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc


def _normalize_waking(waking) -> tuple:
    """Accept one (start, end) pair or one pair per day; return 7 pairs."""
    if waking is None:
        waking = DEFAULT_WAKING_WINDOW
    waking = tuple(waking)
    if len(waking) == 2 and all(isinstance(v, int) for v in waking):
        waking = tuple((waking[0], waking[1]) for _ in range(DAYS_PER_WEEK))
    if len(waking) != DAYS_PER_WEEK:
        raise ValidationError("waking window needs one (start, end) pair or seven")
    out = []
    for start, end in waking:
        if not (0 <= start < end <= MINUTES_PER_DAY):
            raise ValidationError(f"bad waking window ({start}, {end})")
        out.append((int(start), int(end)))
    return tuple(out)


@dataclass(frozen=True)
class WeekTimetable:
    """A student's recurring weekly commitments plus their waking window.

    Non-study blocks (classes, work, other) must not overlap each other on
    the same day; study blocks are managed by the scheduler and are kept
    non-overlapping with everything at suggestion/acceptance time.
    """

    student_id: str
    blocks: tuple = ()
    waking: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "waking", _normalize_waking(self.waking or None))
        hard = [b for b in self.blocks if b.kind != BlockKind.STUDY]
        for i, a in enumerate(hard):
            for b in hard[i + 1:]:
                if a.overlaps(b):
                    raise ValidationError(
                        f"overlapping commitments on {DAY_NAMES[a.day]}: "
                        f"[{a.start_min},{a.end_min}) and [{b.start_min},{b.end_min})"
                    )

    def waking_window(self, day: int) -> tuple:
        return self.waking[day]

    def blocks_on(self, day: int, include_study: bool = True) -> list:
        out = [b for b in self.blocks if b.day == day]
        if not include_study:
            out = [b for b in out if b.kind != BlockKind.STUDY]
        return sorted(out, key=lambda b: b.start_min)

    def class_blocks(self) -> dict:
        """Map class_id -> class meeting block (first meeting wins)."""
        meetings: dict = {}
        for b in self.blocks:
            if b.kind == BlockKind.CLASS and b.class_id not in meetings:
                meetings[b.class_id] = b
        return meetings

    def with_blocks(self, blocks: Iterable[TimeBlock]) -> "WeekTimetable":
        return WeekTimetable(self.student_id, tuple(blocks), self.waking)

    def to_json(self) -> dict:
        return {
            "student_id": self.student_id,
            "blocks": [b.to_json() for b in self.blocks],
            "waking": [list(w) for w in self.waking],
        }

    @classmethod
    def from_json(cls, data: dict) -> "WeekTimetable":
        return cls(
            student_id=data["student_id"],
            blocks=tuple(TimeBlock.from_json(b) for b in data.get("blocks", [])),
            waking=tuple(tuple(w) for w in data["waking"]) if data.get("waking") else (),
        )


def resolve_timezone(name: str) -> ZoneInfo:
    try:
        return ZoneInfo(name)
    except Exception as exc:  # ZoneInfoNotFoundError or bad key type
        raise ConfigurationError(f"unknown timezone {name!r}") from exc


def week_position(ts: datetime, tz: str) -> tuple:
    """Project an absolute instant onto the weekly grid: (day 0..6, minute 0..1439)."""
    if ts.tzinfo is None:
        raise ValidationError("timestamp must be timezone-aware")
    local = ts.astimezone(resolve_timezone(tz))
    return local.weekday(), local.hour * 60 + local.minute


def week_start(ts: datetime, tz: str) -> datetime:
    """Monday 00:00 local time of the week containing ts (tz-aware)."""
    local = ts.astimezone(resolve_timezone(tz))
    monday = local - timedelta(days=local.weekday())
    return monday.replace(hour=0, minute=0, second=0, microsecond=0)


def week_tag(ts: datetime, tz: str) -> str:
    """Stable label for the local ISO week, e.g. '2026-W32'."""
    local = ts.astimezone(resolve_timezone(tz))
    iso = local.isocalendar()
    return f"{iso[0]}-W{iso[1]:02d}"


def block_start_at(start_of_week: datetime, block: TimeBlock) -> datetime:
    return start_of_week + timedelta(days=block.day, minutes=block.start_min)


def block_end_at(start_of_week: datetime, block: TimeBlock) -> datetime:
    return start_of_week + timedelta(days=block.day, minutes=block.end_min)


def format_ts(ts: datetime) -> str:
    return ts.isoformat()


def parse_ts(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValidationError(f"bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        raise ValidationError(f"timestamp {text!r} must carry an offset")
    return ts


BAND_AMBER = 0.34
BAND_GREEN = 0.67


def color_band(value: float, amber: float = BAND_AMBER, green: float = BAND_GREEN) -> str:
    """Progress/adherence color band: red < amber_threshold <= amber < green_threshold <= green."""
    if value >= green:
        return "green"
    if value >= amber:
        return "amber"
    return "red"


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class ManualClock:
    """Settable clock for simulation and tests. Never moves backwards."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            raise ValidationError("clock start must be timezone-aware")
        self._now = start

    def now(self) -> datetime:
        return self._now

    def set(self, ts: datetime) -> None:
        if ts < self._now:
            raise ValidationError("clock cannot move backwards")
        self._now = ts

    def advance(self, **timedelta_kwargs) -> datetime:
        self._now = self._now + timedelta(**timedelta_kwargs)
        return self._now
