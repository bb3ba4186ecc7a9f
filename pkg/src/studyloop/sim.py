"""Synthetic-student harness driving the engine end to end.

A profile is a tiny behavioural model: base motivation and ability on the
unit interval plus a responsiveness slope. When a trigger arrives the
student acts with probability sigmoid(beta * (m*a - tau)), the bases
jittered by seeded noise, so whether the persuasion loop moves anyone is
a property the test suite can actually measure. Everything is driven
through the engine's public operations (the same ones the HTTP API
fronts) and every run is reproducible from its seed.

This is a test instrument, not a behavioural claim.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Dict, List, Optional, Sequence, Tuple

from .config import EngineConfig
from .core import BlockKind, ManualClock, TimeBlock, ValidationError
from .engine import Engine
from .notify import Purpose, RequestStatus
from .performance import HabitCategory, all_items
from .scheduling import SessionState, TimePreference
from .store import Store

SIM_EPOCH = datetime(2026, 1, 5, tzinfo=timezone.utc)  # a Monday

# fixed little campus: two classes per student from this catalog
CLASS_CATALOG: Tuple[Tuple[str, int, int, int], ...] = (
    ("c-web", 0, 9 * 60, 11 * 60),
    ("c-db", 1, 14 * 60, 16 * 60),
    ("c-net", 2, 10 * 60, 12 * 60),
    ("c-prog", 3, 13 * 60, 15 * 60),
)
CLASS_TOPICS = {"c-web": "css", "c-db": "sql", "c-net": "routing", "c-prog": "recursion"}


@dataclass(frozen=True)
class StudentProfile:
    motivation_base: float
    ability_base: float
    responsiveness: float = 10.0
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.motivation_base <= 1.0 and 0.0 <= self.ability_base <= 1.0):
            raise ValidationError("profile bases must lie in [0, 1]")
        if self.responsiveness <= 0:
            raise ValidationError("responsiveness must be > 0")

    @classmethod
    def from_json(cls, data: dict) -> "StudentProfile":
        return cls(
            motivation_base=float(data["motivation_base"]),
            ability_base=float(data["ability_base"]),
            responsiveness=float(data.get("responsiveness", 10.0)),
            noise_seed=int(data.get("noise_seed", 0)),
        )


@dataclass
class SimMetrics:
    student_id: str
    weeks: int
    cycles_completed: Dict[str, int] = field(default_factory=dict)
    adherence_rate: Optional[float] = None
    scheduled: int = 0
    checked_out: int = 0
    missed: int = 0
    still_open: int = 0
    triggers_delivered: int = 0
    triggers_deferred: int = 0
    triggers_skipped: int = 0
    triggers_dropped: int = 0

    def to_json(self) -> dict:
        return {
            "student_id": self.student_id,
            "weeks": self.weeks,
            "cycles_completed": dict(sorted(self.cycles_completed.items())),
            "adherence_rate": self.adherence_rate,
            "scheduled": self.scheduled,
            "checked_out": self.checked_out,
            "missed": self.missed,
            "still_open": self.still_open,
            "triggers_delivered": self.triggers_delivered,
            "triggers_deferred": self.triggers_deferred,
            "triggers_skipped": self.triggers_skipped,
            "triggers_dropped": self.triggers_dropped,
        }


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _clamp01(x: float) -> float:
    return max(0.0, min(1.0, x))


def respond(profile: StudentProfile, rng: random.Random, activation_threshold: float) -> bool:
    """Does the student act on a delivered trigger?

    The profile bases get +/-0.05 uniform noise, then the act probability
    is sigmoid(beta * (m*a - tau)). Deterministic for a given rng state.
    """
    m = _clamp01(profile.motivation_base + rng.uniform(-0.05, 0.05))
    a = _clamp01(profile.ability_base + rng.uniform(-0.05, 0.05))
    p = sigmoid(profile.responsiveness * (m * a - activation_threshold))
    return rng.random() < p


def act_probability(profile: StudentProfile, m: float, a: float, tau: float) -> float:
    """Closed-form response probability, for tests and calibration."""
    return sigmoid(profile.responsiveness * (m * a - tau))


def _rating(base: float, rng: random.Random) -> int:
    jittered = _clamp01(base + rng.uniform(-0.2, 0.2))
    return max(1, min(5, 1 + round(4 * jittered)))


def _likert_from(profile: StudentProfile, rng: random.Random) -> Dict[str, int]:
    centre = 1 + round(5 * profile.motivation_base)
    out = {}
    for item_id in sorted(all_items()):
        value = centre + rng.choice((-1, 0, 0, 1))
        out[item_id] = max(1, min(7, value))
    return out


class Simulation:
    def __init__(
        self,
        profiles: Sequence[StudentProfile],
        weeks: int,
        seed: int,
        gate_enabled: bool = True,
        config: Optional[EngineConfig] = None,
        store: Optional[Store] = None,
    ):
        if weeks < 1:
            raise ValidationError("simulation needs at least one week")
        self.profiles = list(profiles)
        self.weeks = weeks
        self.seed = seed
        cfg = config or EngineConfig()
        cfg.rng_seed = seed
        cfg.fbm_gate_enabled = gate_enabled
        self.clock = ManualClock(SIM_EPOCH)
        self.engine = Engine(cfg, store or Store(cycle_ttl_days=cfg.cycle_ttl_days), self.clock)
        self._rngs: Dict[str, random.Random] = {}
        self._profile_of: Dict[str, StudentProfile] = {}
        self._will_act: Dict[str, bool] = {}

    # ------------------------------------------------------------- plumbing

    def _rng(self, student_id: str) -> random.Random:
        return self._rngs[student_id]

    def _setup_students(self) -> None:
        engine = self.engine
        for index, profile in enumerate(self.profiles):
            sid = f"sim{index:03d}"
            self._rngs[sid] = random.Random(f"{self.seed}:{index}:{profile.noise_seed}")
            self._profile_of[sid] = profile
            class_a = CLASS_CATALOG[index % len(CLASS_CATALOG)]
            class_b = CLASS_CATALOG[(index + 1) % len(CLASS_CATALOG)]
            engine.create_student(
                display_name=f"Simulated Student {index:03d}",
                timezone="UTC",
                classes=[class_a[0], class_b[0]],
                share_schedule=True,
                student_id=sid,
            )
            blocks = [
                {"day": c[1], "start": c[2], "end": c[3], "kind": "class", "class_id": c[0]}
                for c in (class_a, class_b)
            ]
            engine.set_timetable(sid, blocks)
            engine.set_preference(
                sid, TimePreference.EARLY.value if profile.ability_base >= 0.5 else TimePreference.LATE.value
            )
            engine.record_responses(sid, _likert_from(profile, self._rng(sid)))
            suggestions, _ = engine.schedule_suggestions(sid)
            for suggestion in suggestions:
                engine.accept_suggestion(
                    sid, suggestion.class_id, suggestion.block.day, suggestion.block.start_min
                )
        # seeded test attempts give pairing and helper suggestions something
        # to chew on; scores follow ability so the median split is meaningful
        rows = []
        taken = SIM_EPOCH - timedelta(days=3)
        for index, profile in enumerate(self.profiles):
            sid = f"sim{index:03d}"
            student = engine.get_student(sid)
            rng = self._rng(sid)
            for class_id in student.classes:
                topic = CLASS_TOPICS[class_id]
                score = _clamp01(profile.ability_base + rng.uniform(-0.1, 0.1)) * 100
                rows.append(
                    {
                        "student_id": sid,
                        "class_id": class_id,
                        "topic": topic,
                        "test_id": f"{class_id}.{topic}.t1",
                        "attempt_no": 1,
                        "score": round(score, 1),
                        "taken_at": taken.isoformat(),
                    }
                )
        engine.ingest_attempts(rows)

    def _publish_manifests(self, tag: str) -> None:
        for class_id, *_ in CLASS_CATALOG:
            self.engine.put_manifest(
                class_id,
                tag,
                {
                    "lecture_notes": True,
                    "tutorial_notes": True,
                    "textbook": "assigned passage",
                    "links": [f"https://example.edu/{class_id}/{tag}"],
                    "personal_notes_prev": True,
                },
            )

    # ------------------------------------------------------------ main loop

    def run(self) -> List[SimMetrics]:
        engine = self.engine
        self._setup_students()
        for week in range(self.weeks):
            anchor = SIM_EPOCH + timedelta(days=7 * week)
            self.clock.set(anchor)
            tag = engine._week_tag(engine.get_student("sim000"), anchor) if self.profiles else ""
            self._publish_manifests(tag)
            if week + 1 >= engine.config.pairing_from_week:
                for class_id, *_ in CLASS_CATALOG:
                    topic = CLASS_TOPICS[class_id]
                    roster = engine.store.roster(class_id)
                    scored = [
                        s for s in roster
                        if engine.store.attempts.topic_score(s.student_id, class_id, topic) is not None
                    ]
                    if len(scored) >= 2:
                        engine.pair_class(class_id, topic)
            engine.tick(anchor)
            self._run_week(anchor)
        # settle inside the final week (so no new week materializes): move
        # past every session end and run the last sweep
        self.clock.set(SIM_EPOCH + timedelta(days=7 * self.weeks, seconds=-1))
        engine.tick(self.clock.now())
        return self.collect_metrics()

    def _moments(self, window_start: datetime, window_end: datetime) -> List[datetime]:
        moments = set()
        for request in self.engine.store.queue.requests.values():
            if request.status == RequestStatus.PENDING and window_start <= request.due_at < window_end:
                moments.add(request.due_at)
        for session in self.engine.store.sessions.values():
            if session.state in (SessionState.SCHEDULED, SessionState.NOTIFIED, SessionState.CHECKED_IN):
                for ts in (session.starts_at, session.ends_at):
                    if window_start <= ts < window_end:
                        moments.add(ts)
        return sorted(moments)

    def _run_week(self, anchor: datetime) -> None:
        week_end = anchor + timedelta(days=7)
        engine = self.engine
        while True:
            upcoming = [m for m in self._moments(anchor, week_end) if m > self.clock.now()]
            if not upcoming:
                break
            moment = upcoming[0]
            self.clock.set(moment)
            outcomes = engine.tick(moment)
            for outcome in outcomes:
                self._react(outcome)
            self._session_actions(moment)

    def _react(self, outcome) -> None:
        """A synthetic student's reaction to one dispatched trigger."""
        request = outcome.request
        if outcome.status not in (RequestStatus.DELIVERED, RequestStatus.SKIPPED):
            return
        sid = request.student_id
        profile = self._profile_of.get(sid)
        if profile is None:
            return
        rng = self._rng(sid)
        engine = self.engine
        tau = engine.config.activation_threshold
        acts = respond(profile, rng, tau)
        purpose = request.purpose
        if purpose == Purpose.SESSION_START:
            self._will_act[request.payload.get("session_id", "")] = acts
        elif purpose == Purpose.READING_LIST and acts:
            week = request.payload.get("week", "")
            class_id = request.payload.get("class_id", "")
            checklists = [
                c for c in engine.get_checklists(sid, week) if c.class_id == class_id
            ]
            for checklist in checklists:
                for item in checklist.items:
                    if item.required and item.ticked_at is None:
                        engine.tick_item(item.item_id)
        elif purpose == Purpose.POST_CLASS_NOTES and acts:
            engine.submit_note(
                sid,
                request.payload.get("class_id", ""),
                request.payload.get("week", ""),
                "Key points captured in my own words.",
            )
        elif purpose == Purpose.PAIR_PROMPT and acts:
            pair = engine.store.pairs.get(request.payload.get("pair_id", ""))
            if pair is not None:
                existing = [
                    g for g in engine.store.groups.values()
                    if set(g.members) == set(pair.members) and g.topic == pair.topic
                ]
                if existing:
                    group = existing[0]
                else:
                    group = engine.create_group(sid, list(pair.members), pair.class_id, pair.topic)
                partner = next(m for m in pair.members if m != sid)
                rating = _rating(profile.motivation_base, rng)
                engine.rate_group(group.group_id, sid, {partner: rating})
                if rating >= engine.config.endorse_min_rating:
                    engine.endorse(group.group_id, sid, partner)
        elif purpose == Purpose.INVITE_FRIENDS and acts:
            student = engine.get_student(sid)
            for class_id in student.classes:
                topic = CLASS_TOPICS.get(class_id, "")
                try:
                    result = engine.partner_suggestions(sid, class_id, topic)
                    candidates = [c["student_id"] for c in result["candidates"]]
                except ValidationError:
                    candidates = []
                if not candidates:
                    # a strong student gets no helper suggestions but can
                    # still invite classmates they know
                    candidates = [
                        m.student_id for m in engine.store.roster(class_id) if m.student_id != sid
                    ]
                if candidates:
                    partner = candidates[0]
                    group = engine.create_group(sid, [sid, partner], class_id, topic)
                    rating = _rating(profile.motivation_base, rng)
                    engine.rate_group(group.group_id, sid, {partner: rating})
                    if rating >= engine.config.endorse_min_rating:
                        engine.endorse(group.group_id, sid, partner)
                    break

    def _session_actions(self, moment: datetime) -> None:
        engine = self.engine
        for session in engine.store.sessions.values():
            if session.student_id not in self._profile_of:
                continue
            if session.state == SessionState.NOTIFIED and session.starts_at == moment:
                if self._will_act.get(session.session_id):
                    engine.check_in(session.session_id)
            elif session.state == SessionState.CHECKED_IN and session.ends_at == moment:
                profile = self._profile_of[session.student_id]
                rng = self._rng(session.student_id)
                engine.check_out(
                    session.session_id,
                    _rating(profile.motivation_base, rng),
                    _rating(profile.ability_base, rng),
                )

    # --------------------------------------------------------------- output

    def collect_metrics(self) -> List[SimMetrics]:
        engine = self.engine
        out = []
        status_counts: Dict[str, Dict[RequestStatus, int]] = {}
        deferral_counts: Dict[str, int] = {}
        for event in engine.store.events:
            if event.get("type") == "trigger_deferred":
                sid = event["student_id"]
                deferral_counts[sid] = deferral_counts.get(sid, 0) + 1
        for request in engine.store.queue.requests.values():
            counts = status_counts.setdefault(request.student_id, {})
            counts[request.status] = counts.get(request.status, 0) + 1
        for index in range(len(self.profiles)):
            sid = f"sim{index:03d}"
            sessions = engine.store.sessions_of(sid)
            completed = engine.store.ledger.completed_counts(sid)
            counts = status_counts.get(sid, {})
            metrics = SimMetrics(
                student_id=sid,
                weeks=self.weeks,
                cycles_completed={c.value: completed.get(c, 0) for c in (
                    HabitCategory.SCHEDULING, HabitCategory.PREPARATION, HabitCategory.GROUP_STUDY
                )},
                adherence_rate=_adherence(sessions),
                scheduled=len(sessions),
                checked_out=sum(1 for s in sessions if s.state == SessionState.CHECKED_OUT),
                missed=sum(1 for s in sessions if s.state == SessionState.MISSED),
                still_open=sum(
                    1 for s in sessions
                    if s.state not in (SessionState.CHECKED_OUT, SessionState.MISSED)
                ),
                triggers_delivered=counts.get(RequestStatus.DELIVERED, 0),
                triggers_deferred=deferral_counts.get(sid, 0),
                triggers_skipped=counts.get(RequestStatus.SKIPPED, 0),
                triggers_dropped=counts.get(RequestStatus.DROPPED, 0),
            )
            out.append(metrics)
        return out


def _adherence(sessions) -> Optional[float]:
    done = sum(1 for s in sessions if s.state == SessionState.CHECKED_OUT)
    missed = sum(1 for s in sessions if s.state == SessionState.MISSED)
    total = done + missed
    return done / total if total else None


def simulate(
    profiles: Sequence[StudentProfile],
    weeks: int,
    seed: int,
    gate_enabled: bool = True,
    config: Optional[EngineConfig] = None,
) -> List[SimMetrics]:
    """Run the full persuasion loop for the given profiles; reproducible per seed."""
    return Simulation(profiles, weeks, seed, gate_enabled=gate_enabled, config=config).run()


def default_profiles(count: int, seed: int) -> List[StudentProfile]:
    rng = random.Random(f"profiles:{seed}")
    return [
        StudentProfile(
            motivation_base=round(rng.uniform(0.1, 0.9), 3),
            ability_base=round(rng.uniform(0.2, 0.9), 3),
            responsiveness=10.0,
            noise_seed=rng.randrange(10_000),
        )
        for _ in range(count)
    ]
