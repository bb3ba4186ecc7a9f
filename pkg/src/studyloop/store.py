"""Document store and event log for the whole engine.

Everything lives in memory keyed by entity id; a snapshot of the full
state can be exported/imported as one JSON document (schema versioned),
which is also how durability works: attach a path and the store rewrites
the snapshot atomically after mutations. Hook-cycle events and deliveries
additionally stream to an append-only JSONL event log for audit and
replay.

Single-entity writes are atomic by construction (one dict assignment
under the GIL); cross-entity consistency is the engine's job via its
per-student locks.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Dict, List, Optional, Tuple

from .core import (
    NotFoundError,
    TimeBlock,
    ValidationError,
    WeekTimetable,
    parse_ts,
)
from .fbm import TriggerType
from .groups import Endorsement, GroupSession, StudyPair
from .hooks import CycleLedger, HookCycle, Phase, RewardInstance, RewardKind, TriggerSource
from .notify import TriggerQueue
from .performance import HabitCategory
from .preparation import Checklist, ChecklistItem, MaterialKind, MaterialsManifest
from .scheduling import SessionState, StudySession, TimePreference
from .ttm import AttemptStore, TestAttempt

SNAPSHOT_SCHEMA_VERSION = 1


@dataclass
class StudentRecord:
    student_id: str
    display_name: str
    timezone: str = "UTC"
    classes: List[str] = field(default_factory=list)
    share_schedule: bool = False   # opt-in, default off
    preference: Optional[TimePreference] = None
    responses: Dict[str, int] = field(default_factory=dict)
    timetable: Optional[WeekTimetable] = None
    created_at: Optional[datetime] = None
    place_suggested_week: Optional[str] = None
    invited_week: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "student_id": self.student_id,
            "display_name": self.display_name,
            "timezone": self.timezone,
            "classes": list(self.classes),
            "share_schedule": self.share_schedule,
            "preference": self.preference.value if self.preference else None,
            "responses": dict(self.responses),
            "timetable": self.timetable.to_json() if self.timetable else None,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "place_suggested_week": self.place_suggested_week,
            "invited_week": self.invited_week,
        }

    def to_public_json(self) -> dict:
        """The API-facing shape (no engine book-keeping fields)."""
        data = self.to_json()
        data.pop("place_suggested_week")
        data.pop("invited_week")
        return data

    @classmethod
    def from_json(cls, data: dict) -> "StudentRecord":
        return cls(
            student_id=data["student_id"],
            display_name=data["display_name"],
            timezone=data.get("timezone", "UTC"),
            classes=list(data.get("classes", [])),
            share_schedule=data.get("share_schedule", False),
            preference=TimePreference(data["preference"]) if data.get("preference") else None,
            responses={k: int(v) for k, v in data.get("responses", {}).items()},
            timetable=WeekTimetable.from_json(data["timetable"]) if data.get("timetable") else None,
            created_at=parse_ts(data["created_at"]) if data.get("created_at") else None,
            place_suggested_week=data.get("place_suggested_week"),
            invited_week=data.get("invited_week"),
        )


def _session_from_json(data: dict) -> StudySession:
    session = StudySession(
        session_id=data["session_id"],
        student_id=data["student_id"],
        class_id=data["class_id"],
        block=TimeBlock.from_json(data["block"]),
        week=data["week"],
        starts_at=parse_ts(data["starts_at"]),
        ends_at=parse_ts(data["ends_at"]),
        state=SessionState(data["state"]),
        effectiveness=data.get("effectiveness"),
        environment=data.get("environment"),
    )
    return session


def _cycle_from_json(data: dict) -> HookCycle:
    def ts(name):
        return parse_ts(data[name]) if data.get(name) else None

    cycle = HookCycle(
        cycle_id=data["cycle_id"],
        student_id=data["student_id"],
        category=HabitCategory(data["category"]),
        trigger_source=TriggerSource(data["trigger_source"]),
        trigger_type=TriggerType(data["trigger_type"]),
        phase=Phase(data["phase"]),
        triggered_at=ts("triggered_at"),
        acted_at=ts("acted_at"),
        rewarded_at=ts("rewarded_at"),
        invested_at=ts("invested_at"),
        abandoned_at=ts("abandoned_at"),
    )
    if data.get("reward"):
        r = data["reward"]
        cycle.reward = RewardInstance(
            kind=RewardKind(r["kind"]), payload=r["payload"], delivered_at=parse_ts(r["delivered_at"])
        )
    stamps = [t for t in (cycle.invested_at, cycle.rewarded_at, cycle.acted_at, cycle.triggered_at) if t]
    cycle.last_progress_at = stamps[0] if stamps else None
    return cycle


def _checklist_from_json(data: dict) -> Checklist:
    items = [
        ChecklistItem(
            item_id=i["item_id"],
            class_id=i["class_id"],
            week=i["week"],
            kind=MaterialKind(i["kind"]),
            label=i["label"],
            required=i["required"],
            detail=i.get("detail", ""),
            ticked_at=parse_ts(i["ticked_at"]) if i.get("ticked_at") else None,
        )
        for i in data["items"]
    ]
    return Checklist(class_id=data["class_id"], week=data["week"], items=items, sparse=data.get("sparse", False))


class Store:
    """All engine state plus snapshot import/export."""

    def __init__(self, path: Optional[str] = None, cycle_ttl_days: int = 7):
        self.path = path
        self.students: Dict[str, StudentRecord] = {}
        self.sessions: Dict[str, StudySession] = {}
        self.checklists: Dict[Tuple[str, str, str], Checklist] = {}
        self.checklist_index: Dict[str, Tuple[str, str, str]] = {}
        self.notes: Dict[Tuple[str, str, str], List[dict]] = {}
        self.manifests: Dict[Tuple[str, str], MaterialsManifest] = {}
        self.groups: Dict[str, GroupSession] = {}
        self.pairs: Dict[str, StudyPair] = {}
        self.pair_audit: Dict[str, Tuple[str, str]] = {}
        self.endorsements: Dict[Tuple[str, str, str], Endorsement] = {}
        self.attempts = AttemptStore()
        self.queue = TriggerQueue()
        self.ledger = CycleLedger(ttl=timedelta(days=cycle_ttl_days), event_sink=self.append_event)
        self.feed: Dict[str, List[dict]] = {}
        self.events: List[dict] = []
        self.materialized: set = set()
        self._event_seq = 0
        self._counters: Dict[str, int] = {}

    # ------------------------------------------------------------------ ids

    def next_id(self, prefix: str) -> str:
        self._counters[prefix] = self._counters.get(prefix, 0) + 1
        return f"{prefix}-{self._counters[prefix]:06d}"

    # ------------------------------------------------------------ event log

    def append_event(self, record: dict) -> None:
        self._event_seq += 1
        entry = {"seq": self._event_seq, **record}
        self.events.append(entry)
        if self.path:
            with open(self._events_path(), "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def _events_path(self) -> str:
        return f"{self.path}.events.jsonl"

    # ------------------------------------------------------------- lookups

    def student(self, student_id: str) -> StudentRecord:
        record = self.students.get(student_id)
        if record is None:
            raise NotFoundError(f"no student {student_id!r}")
        return record

    def session(self, session_id: str) -> StudySession:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"no session {session_id!r}")
        return session

    def group(self, group_id: str) -> GroupSession:
        group = self.groups.get(group_id)
        if group is None:
            raise NotFoundError(f"no study group {group_id!r}")
        return group

    def feed_of(self, student_id: str) -> List[dict]:
        return self.feed.setdefault(student_id, [])

    def sessions_of(self, student_id: str, week: Optional[str] = None) -> List[StudySession]:
        out = [s for s in self.sessions.values() if s.student_id == student_id]
        if week is not None:
            out = [s for s in out if s.week == week]
        return sorted(out, key=lambda s: (s.starts_at, s.session_id))

    def roster(self, class_id: str) -> List[StudentRecord]:
        return sorted(
            (s for s in self.students.values() if class_id in s.classes),
            key=lambda s: s.student_id,
        )

    def endorsement_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for e in self.endorsements.values():
            counts[e.to_student] = counts.get(e.to_student, 0) + 1
        return counts

    # ------------------------------------------------------------ snapshot

    def export_snapshot(self) -> dict:
        return {
            "schema_version": SNAPSHOT_SCHEMA_VERSION,
            "counters": dict(self._counters),
            "event_seq": self._event_seq,
            "students": {k: v.to_json() for k, v in sorted(self.students.items())},
            "sessions": {k: v.to_json() for k, v in sorted(self.sessions.items())},
            "checklists": {
                "|".join(key): checklist.to_json()
                for key, checklist in sorted(self.checklists.items())
            },
            "checklist_index": {k: list(v) for k, v in sorted(self.checklist_index.items())},
            "notes": {"|".join(k): v for k, v in sorted(self.notes.items())},
            "manifests": {"|".join(k): m.to_json() for k, m in sorted(self.manifests.items())},
            "groups": {k: g.to_json() for k, g in sorted(self.groups.items())},
            "pairs": {k: p.to_json() for k, p in sorted(self.pairs.items())},
            "pair_audit": {k: list(v) for k, v in sorted(self.pair_audit.items())},
            "endorsements": [e.to_json() for _, e in sorted(self.endorsements.items())],
            "attempts": self.attempts.to_json(),
            "queue": self.queue.to_json(),
            "ledger": self.ledger.to_json(),
            "feed": {k: v for k, v in sorted(self.feed.items())},
            "materialized": sorted("|".join(m) for m in self.materialized),
            "events": self.events,
        }

    def import_snapshot(self, data: dict) -> None:
        version = data.get("schema_version")
        if version != SNAPSHOT_SCHEMA_VERSION:
            raise ValidationError(f"snapshot schema {version!r} not supported")
        self._counters = dict(data.get("counters", {}))
        self._event_seq = data.get("event_seq", 0)
        self.students = {k: StudentRecord.from_json(v) for k, v in data.get("students", {}).items()}
        self.sessions = {k: _session_from_json(v) for k, v in data.get("sessions", {}).items()}
        self.checklists = {}
        for key, raw in data.get("checklists", {}).items():
            parts = tuple(key.split("|"))
            self.checklists[parts] = _checklist_from_json(raw)
        self.checklist_index = {k: tuple(v) for k, v in data.get("checklist_index", {}).items()}
        self.notes = {tuple(k.split("|")): v for k, v in data.get("notes", {}).items()}
        self.manifests = {
            tuple(k.split("|")): MaterialsManifest.from_json(v)
            for k, v in data.get("manifests", {}).items()
        }
        self.groups = {}
        for k, g in data.get("groups", {}).items():
            group = GroupSession(
                group_id=g["group_id"],
                class_id=g["class_id"],
                topic=g["topic"],
                members=tuple(g["members"]),
                created_by=g["created_by"],
                created_at=parse_ts(g["created_at"]),
            )
            group.ratings = {r: {m: int(v) for m, v in scores.items()} for r, scores in g.get("ratings", {}).items()}
            self.groups[k] = group
        self.pairs = {
            k: StudyPair(
                pair_id=p["pair_id"],
                class_id=p["class_id"],
                topic=p["topic"],
                members=tuple(p["members"]),
                prompt=p["prompt"],
            )
            for k, p in data.get("pairs", {}).items()
        }
        self.pair_audit = {k: tuple(v) for k, v in data.get("pair_audit", {}).items()}
        self.endorsements = {}
        for raw in data.get("endorsements", []):
            e = Endorsement(
                from_student=raw["from_student"],
                to_student=raw["to_student"],
                group_id=raw["group_id"],
                tag=raw.get("tag", "helpful"),
                created_at=parse_ts(raw["created_at"]) if raw.get("created_at") else None,
            )
            self.endorsements[e.key()] = e
        self.attempts = AttemptStore()
        self.attempts.load_json(data.get("attempts", []))
        self.queue = TriggerQueue()
        self.queue.load_json(data.get("queue", {}))
        self._load_ledger(data.get("ledger", {}))
        self.feed = {k: list(v) for k, v in data.get("feed", {}).items()}
        self.materialized = {tuple(m.split("|")) for m in data.get("materialized", [])}
        self.events = list(data.get("events", []))

    def _load_ledger(self, data: dict) -> None:
        ttl = self.ledger.ttl
        self.ledger = CycleLedger(ttl=ttl, event_sink=self.append_event)
        for cid, raw in data.get("cycles", {}).items():
            self.ledger.cycles[cid] = _cycle_from_json(raw)
        for key, cid in data.get("open", {}).items():
            sid, cat = key.rsplit(":", 1)
            self.ledger._open[(sid, HabitCategory(cat))] = cid
        for key, n in data.get("streaks", {}).items():
            sid, cat = key.rsplit(":", 1)
            self.ledger.streaks[(sid, HabitCategory(cat))] = n
        for key, hist in data.get("history", {}).items():
            sid, cat = key.rsplit(":", 1)
            self.ledger.history[(sid, HabitCategory(cat))] = list(hist)
        self.ledger._counter = data.get("counter", 0)

    def save(self, path: Optional[str] = None) -> str:
        target = path or self.path
        if not target:
            raise ValidationError("no snapshot path configured")
        payload = json.dumps(self.export_snapshot(), indent=1, sort_keys=True)
        directory = os.path.dirname(os.path.abspath(target))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".snapshot-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, target)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return target

    @classmethod
    def load(cls, path: str) -> "Store":
        store = cls(path=path)
        if os.path.exists(path):
            with open(path) as fh:
                store.import_snapshot(json.load(fh))
        return store
