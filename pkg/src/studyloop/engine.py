"""Service facade binding every module into one behaviour-change engine.

The HTTP API, the CLI and the simulation harness all drive this class and
nothing else, so the persuasion loop behaves identically no matter how it
is operated. Responsibilities:

* wizard flow (timetable -> preference -> suggestions -> accepted sessions)
* weekly materialization: turning recurring study blocks into concrete
  sessions and enqueueing every trigger the week needs
* dispatching due triggers through the motivation/ability gate and wiring
  delivered triggers into habit-loop cycles
* session check-in/check-out, checklist ticks, notes, group ratings and
  endorsements, each advancing the student's current cycle
* metrics (adherence, model scores, streaks) per student

Writes are serialized per student; `tick()` is the single heartbeat that
the server loop and the simulator both call.
"""
from __future__ import annotations

import random
import threading
from collections import defaultdict
from datetime import datetime, timedelta
from importlib import resources
import json
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import fbm, groups, hooks, performance, preparation, scheduling
from .config import EngineConfig
from .core import (
    BlockKind,
    ConflictError,
    NotFoundError,
    SystemClock,
    TimeBlock,
    ValidationError,
    WeekTimetable,
    block_start_at,
    week_start,
    week_tag,
)
from .fbm import Outcome, TriggerDecision, TriggerType
from .hooks import CycleEvent, Phase, RewardInstance, RewardKind, TriggerSource
from .notify import Dispatcher, DispatchOutcome, Purpose, RequestStatus, TemplateCatalog
from .performance import HabitCategory, ModelKind
from .preparation import MaterialsManifest
from .scheduling import PlaceCatalog, SessionState, StudySession, TimePreference
from .store import Store, StudentRecord
from .ttm import IngestResult

# purposes that open a habit-loop cycle for their category when they land
_CYCLE_OPENING = {
    Purpose.SESSION_START: HabitCategory.SCHEDULING,
    Purpose.READING_LIST: HabitCategory.PREPARATION,
    Purpose.INVITE_FRIENDS: HabitCategory.GROUP_STUDY,
    Purpose.PAIR_PROMPT: HabitCategory.GROUP_STUDY,
}

_REWARD_TEMPLATES = {
    RewardKind.PRAISE_MESSAGE: (
        "Great session. Your consistency is paying off.",
        "Well done, another study commitment kept.",
        "That is the habit taking shape. Keep going.",
    ),
    RewardKind.PROGRESS_COLOR_CHANGE: (
        "Your progress band just changed: now {band}.",
    ),
    RewardKind.STREAK_BADGE: (
        "Streak badge earned: {streak} habit loops in a row.",
    ),
}


def load_place_catalog() -> PlaceCatalog:
    raw = resources.files("studyloop.data").joinpath("places.json").read_text()
    data = json.loads(raw)
    return PlaceCatalog(tuple((name, desc) for name, desc in data["places"]))


class Engine:
    def __init__(
        self,
        config: Optional[EngineConfig] = None,
        store: Optional[Store] = None,
        clock=None,
        webhook_sender=None,
    ):
        self.config = (config or EngineConfig()).validate()
        self.store = store or Store(cycle_ttl_days=self.config.cycle_ttl_days)
        self.store.ledger.ttl = timedelta(days=self.config.cycle_ttl_days)
        self.clock = clock or SystemClock()
        self.rng = random.Random(self.config.rng_seed)
        self.templates = TemplateCatalog.load()
        self.place_catalog = load_place_catalog()
        entries = []
        for kind_name, weight in sorted(self.config.reward_weights.items()):
            try:
                kind = RewardKind(kind_name)
                templates = _REWARD_TEMPLATES[kind]
            except (ValueError, KeyError):
                from .core import ConfigurationError

                raise ConfigurationError(f"no reward templates for kind {kind_name!r}")
            entries.append((kind, weight, templates))
        self.reward_catalog = hooks.RewardCatalog(
            entries=tuple(entries), probability=self.config.reward_probability
        )
        self.webhook_outbox: List[dict] = []
        self.dispatcher = Dispatcher(
            queue=self.store.queue,
            templates=self.templates,
            instructor=self.config.instructor_name,
            feed_sink=self._feed_delivery,
            webhook_sender=webhook_sender or self.webhook_outbox.append,
            event_sink=self.store.append_event,
            defer_retry_hours=self.config.defer_retry_hours,
            max_retries=self.config.delivery_max_retries,
            retry_backoff_s=list(self.config.retry_backoff_s),
        )
        self._locks: Dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._global_lock = threading.Lock()

    # ------------------------------------------------------------------ time

    def now(self) -> datetime:
        return self.clock.now()

    def _lock(self, student_id: str) -> threading.Lock:
        with self._global_lock:
            return self._locks[student_id]

    def _week_anchor(self, student: StudentRecord, at: Optional[datetime] = None) -> datetime:
        return week_start(at or self.now(), student.timezone)

    def _week_tag(self, student: StudentRecord, at: Optional[datetime] = None) -> str:
        return week_tag(at or self.now(), student.timezone)

    # -------------------------------------------------------------- students

    def create_student(
        self,
        display_name: str,
        timezone: str = "UTC",
        classes: Optional[Sequence[str]] = None,
        share_schedule: bool = False,
        student_id: Optional[str] = None,
    ) -> StudentRecord:
        from .core import resolve_timezone

        resolve_timezone(timezone)
        if not display_name:
            raise ValidationError("student needs a display name")
        sid = student_id or self.store.next_id("s")
        if sid in self.store.students:
            raise ConflictError(f"student {sid!r} already exists")
        record = StudentRecord(
            student_id=sid,
            display_name=display_name,
            timezone=timezone,
            classes=sorted(set(classes or [])),
            share_schedule=share_schedule,
            created_at=self.now(),
        )
        self.store.students[sid] = record
        self.store.append_event({"type": "student_created", "student_id": sid, "at": self.now().isoformat()})
        return record

    def get_student(self, student_id: str) -> StudentRecord:
        return self.store.student(student_id)

    # ---------------------------------------------------------------- wizard

    def set_timetable(self, student_id: str, blocks: Iterable) -> WeekTimetable:
        """Wizard steps 1 and 2: class timetable plus other commitments."""
        student = self.store.student(student_id)
        with self._lock(student_id):
            parsed = [b if isinstance(b, TimeBlock) else TimeBlock.from_json(b) for b in blocks]
            timetable = WeekTimetable(
                student_id=student_id,
                blocks=tuple(parsed),
                waking=self.config.waking_window,
            )
            class_ids = sorted(timetable.class_blocks())
            student.timetable = timetable
            student.classes = sorted(set(student.classes) | set(class_ids))
            return timetable

    def set_preference(self, student_id: str, preference: str) -> TimePreference:
        """Wizard step 3: work earlier or later in the day."""
        student = self.store.student(student_id)
        try:
            pref = TimePreference(preference)
        except ValueError:
            raise ValidationError(f"preference must be 'early' or 'late', got {preference!r}")
        with self._lock(student_id):
            student.preference = pref
        return pref

    def _require_wizard_complete(self, student: StudentRecord) -> None:
        if student.timetable is None or not student.timetable.class_blocks():
            raise ConflictError("wizard incomplete: enter the class timetable first")
        if student.preference is None:
            raise ConflictError("wizard incomplete: set the early/late preference first")

    def schedule_suggestions(
        self, student_id: str, rejects: Optional[Mapping[str, Sequence[Tuple[int, int]]]] = None
    ) -> Tuple[List[scheduling.SlotSuggestion], List[str]]:
        """Wizard step 4: one suggested weekly slot per class.

        `rejects` holds per-class (day, start) pairs the student turned
        down; regeneration simply excludes them, so the call stays pure.
        """
        student = self.store.student(student_id)
        self._require_wizard_complete(student)
        return scheduling.suggest_sessions(
            student.timetable,
            student.timetable.class_blocks(),
            student.preference,
            duration=self.config.session_duration_min,
            excluded=rejects or {},
        )

    def accept_suggestion(self, student_id: str, class_id: str, day: int, start_min: int) -> StudySession:
        """Commit a suggested slot: recurring study block plus this week's session."""
        student = self.store.student(student_id)
        self._require_wizard_complete(student)
        with self._lock(student_id):
            if class_id not in student.classes:
                raise ValidationError(f"student is not enrolled in {class_id!r}")
            block = TimeBlock(
                day, start_min, start_min + self.config.session_duration_min, BlockKind.STUDY, class_id
            )
            wake = student.timetable.waking_window(day)
            if block.start_min < wake[0] or block.end_min > wake[1]:
                raise ValidationError("study slot lies outside the waking window")
            for other in student.timetable.blocks:
                if block.overlaps(other):
                    raise ConflictError("study slot collides with an existing commitment")
            student.timetable = student.timetable.with_blocks(student.timetable.blocks + (block,))
            session = self._create_session(student, block, self._week_anchor(student))
            return session

    # --------------------------------------------------------------- sessions

    def _create_session(
        self, student: StudentRecord, block: TimeBlock, anchor: datetime
    ) -> StudySession:
        starts = block_start_at(anchor, block)
        ends = starts + timedelta(minutes=block.duration_min)
        now = self.now()
        if ends <= now:
            # this week's occurrence is already over; schedule next week's
            starts += timedelta(days=7)
            ends += timedelta(days=7)
        tag = week_tag(starts, student.timezone)
        session = StudySession(
            session_id=self.store.next_id("sess"),
            student_id=student.student_id,
            class_id=block.class_id,
            block=block,
            week=tag,
            starts_at=starts,
            ends_at=ends,
        )
        self.store.sessions[session.session_id] = session
        self.store.append_event(
            {"type": "session_created", "session_id": session.session_id,
             "student_id": student.student_id, "week": tag, "at": now.isoformat()}
        )
        lead = timedelta(minutes=self.config.session_start_lead_min)
        self.store.queue.enqueue(
            student.student_id,
            HabitCategory.SCHEDULING,
            Purpose.SESSION_START,
            max(now, starts - lead),
            now,
            payload={
                "session_id": session.session_id,
                "class_name": block.class_id,
                "class_id": block.class_id,
                "start_time": f"{block.start_min // 60:02d}:{block.start_min % 60:02d}",
                "streak": self.store.ledger.streak(student.student_id, HabitCategory.SCHEDULING),
            },
        )
        return session

    def get_session(self, session_id: str) -> StudySession:
        return self.store.session(session_id)

    def check_in(self, session_id: str) -> StudySession:
        session = self.store.session(session_id)
        now = self.now()
        with self._lock(session.student_id):
            scheduling.check_in(session, now, grace_min=self.config.checkin_grace_min)
            self.store.append_event(
                {"type": "session_checked_in", "session_id": session_id,
                 "student_id": session.student_id, "at": now.isoformat()}
            )
            # only a running session earns the wrap-up reminder
            self.store.queue.enqueue(
                session.student_id,
                HabitCategory.SCHEDULING,
                Purpose.CHECK_OUT,
                max(now, session.ends_at),
                now,
                payload={
                    "session_id": session.session_id,
                    "class_name": session.class_id,
                    "class_id": session.class_id,
                },
            )
            return session

    def check_out(self, session_id: str, effectiveness: int, environment: int) -> StudySession:
        session = self.store.session(session_id)
        now = self.now()
        with self._lock(session.student_id):
            scheduling.check_out(session, effectiveness, environment, now)
            self.store.append_event(
                {"type": "session_checked_out", "session_id": session_id,
                 "student_id": session.student_id, "effectiveness": effectiveness,
                 "environment": environment, "at": now.isoformat()}
            )
            # checkout is the scheduling action; the stored ratings are the
            # investment, so a completed session drives a whole habit loop
            student = self.store.student(session.student_id)
            cycle = self.store.ledger.open_cycle_of(session.student_id, HabitCategory.SCHEDULING)
            if cycle and cycle.phase == Phase.TRIGGERED:
                self.store.ledger.advance(cycle, CycleEvent.ACTION_COMPLETED, now)
            if cycle and cycle.phase == Phase.ACTED:
                reward = self._draw_reward(student, HabitCategory.SCHEDULING, now)
                self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, reward)
            if cycle and cycle.phase == Phase.REWARDED:
                self.store.ledger.advance(cycle, CycleEvent.INVESTMENT_RECORDED, now)
            return session

    def _draw_reward(
        self, student: StudentRecord, category: HabitCategory, now: datetime
    ) -> Optional[RewardInstance]:
        reward = hooks.draw_reward(self.reward_catalog, self.rng, now)
        if reward is None:
            return None
        context = {
            "band": scheduling.adherence_band(
                scheduling.adherence(self.store.sessions_of(student.student_id))
            ) or "red",
            "streak": self.store.ledger.streak(student.student_id, category) + 1,
        }
        reward = RewardInstance(
            kind=reward.kind,
            payload=reward.payload.format_map(defaultdict(str, context)),
            delivered_at=now,
        )
        self._feed_reward(student.student_id, reward)
        return reward

    def _feed_reward(self, student_id: str, reward: RewardInstance) -> None:
        self.store.feed_of(student_id).append({"type": "reward", **reward.to_json()})

    def _feed_delivery(self, student_id: str, delivery) -> None:
        self.store.feed_of(student_id).append({"type": "notification", **delivery.to_json()})

    # ------------------------------------------------------------- responses

    def record_responses(self, student_id: str, responses: Mapping[str, int]) -> Dict[str, int]:
        student = self.store.student(student_id)
        performance.validate_responses(dict(responses))
        with self._lock(student_id):
            student.responses.update({k: int(v) for k, v in responses.items()})
        return dict(student.responses)

    def performance_scores(self, student_id: str) -> Dict[str, float]:
        student = self.store.student(student_id)
        out = {}
        for kind in ModelKind:
            model = performance.get_model(kind)
            out[kind.value] = performance.score(model, student.responses)
        return out

    def target_category(self, student_id: str) -> HabitCategory:
        student = self.store.student(student_id)
        completed = self.store.ledger.completed_counts(student_id)
        return performance.select_target_category(
            student.responses, completed, self.config.scheduling_prerequisite_cycles
        )

    # ------------------------------------------------------------- checklist

    def put_manifest(self, class_id: str, week: str, manifest: dict) -> MaterialsManifest:
        parsed = MaterialsManifest.from_json({**manifest, "class_id": class_id, "week": week})
        self.store.manifests[(class_id, week)] = parsed
        return parsed

    def get_checklists(self, student_id: str, week: str) -> List[preparation.Checklist]:
        student = self.store.student(student_id)
        out = []
        for class_id in student.classes:
            checklist = self._ensure_checklist(student, class_id, week)
            if checklist is not None:
                out.append(checklist)
        return out

    def _ensure_checklist(
        self, student: StudentRecord, class_id: str, week: str
    ) -> Optional[preparation.Checklist]:
        key = (student.student_id, class_id, week)
        if key in self.store.checklists:
            return self.store.checklists[key]
        manifest = self.store.manifests.get((class_id, week))
        if manifest is None:
            return None
        checklist = preparation.generate_checklist(manifest, id_prefix=f"{student.student_id}|")
        if checklist is None:
            return None
        self.store.checklists[key] = checklist
        for item in checklist.items:
            self.store.checklist_index[item.item_id] = key
        return checklist

    def tick_item(self, item_id: str) -> preparation.TickResult:
        key = self.store.checklist_index.get(item_id)
        if key is None:
            raise NotFoundError(f"no checklist item {item_id!r}")
        student_id = key[0]
        now = self.now()
        with self._lock(student_id):
            checklist = self.store.checklists[key]
            result = preparation.tick(checklist, item_id, now)
            if not result.changed:
                return result
            self.store.append_event(
                {"type": "checklist_ticked", "item_id": item_id, "student_id": student_id,
                 "progress": result.progress_after, "at": now.isoformat()}
            )
            cycle = self.store.ledger.open_cycle_of(student_id, HabitCategory.PREPARATION)
            if cycle and cycle.phase == Phase.TRIGGERED:
                self.store.ledger.advance(cycle, CycleEvent.ACTION_COMPLETED, now)
            if result.crossed_band:
                reward = RewardInstance(
                    kind=RewardKind.PROGRESS_COLOR_CHANGE,
                    payload=f"Reading progress for {checklist.class_id} is now {result.band_after}.",
                    delivered_at=now,
                )
                self._feed_reward(student_id, reward)
                if cycle and cycle.phase == Phase.ACTED:
                    self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, reward)
            if result.completed:
                praise = RewardInstance(
                    kind=RewardKind.PRAISE_MESSAGE,
                    payload=f"Every source for {checklist.class_id} read this week. Superb preparation.",
                    delivered_at=now,
                )
                self._feed_reward(student_id, praise)
                if cycle and cycle.phase == Phase.ACTED:
                    self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, praise)
                if cycle and cycle.phase == Phase.REWARDED:
                    self.store.ledger.advance(cycle, CycleEvent.INVESTMENT_RECORDED, now)
            return result

    def submit_note(self, student_id: str, class_id: str, week: str, text: str) -> dict:
        student = self.store.student(student_id)
        if not text or not text.strip():
            raise ValidationError("summary note needs at least one character")
        if class_id not in student.classes:
            raise ValidationError(f"student is not enrolled in {class_id!r}")
        now = self.now()
        with self._lock(student_id):
            note = {"class_id": class_id, "week": week, "text": text, "at": now.isoformat()}
            self.store.notes.setdefault((student_id, class_id, week), []).append(note)
            self.store.append_event(
                {"type": "note_submitted", "student_id": student_id, "class_id": class_id,
                 "week": week, "at": now.isoformat()}
            )
            # note acknowledgement is a preparation action; the stored note
            # is also the stored investment
            cycle = self.store.ledger.open_cycle_of(student_id, HabitCategory.PREPARATION)
            if cycle and cycle.phase == Phase.TRIGGERED:
                self.store.ledger.advance(cycle, CycleEvent.ACTION_COMPLETED, now)
            if cycle and cycle.phase == Phase.ACTED:
                reward = self._draw_reward(student, HabitCategory.PREPARATION, now)
                self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, reward)
            if cycle and cycle.phase == Phase.REWARDED:
                self.store.ledger.advance(cycle, CycleEvent.INVESTMENT_RECORDED, now)
            return note

    # ----------------------------------------------------------- group study

    def partner_suggestions(self, student_id: str, class_id: str, topic: str) -> dict:
        student = self.store.student(student_id)
        if class_id not in student.classes:
            raise ValidationError(f"student is not enrolled in {class_id!r}")
        roster = self.store.roster(class_id)
        scores = []
        for member in roster:
            value = self.store.attempts.topic_score(member.student_id, class_id, topic)
            if value is not None:
                scores.append(groups.TopicScore(member.student_id, class_id, topic, value))
        if not any(s.student_id == student_id for s in scores):
            raise ValidationError(f"no topic score for {student_id!r} on {topic!r}")
        opted = {m.student_id for m in roster if m.share_schedule and m.timetable is not None}
        free = {
            m.student_id: scheduling.free_intervals(m.timetable)
            for m in roster
            if m.timetable is not None
        }
        status, candidates = groups.suggest_helpers(
            student_id,
            scores,
            opted,
            free,
            self.store.endorsement_counts(),
            percentile=self.config.helper_percentile,
            min_overlap=self.config.helper_min_overlap_min,
        )
        return {
            "status": status.value,
            "candidates": [
                {
                    "student_id": c.student_id,
                    "display_name": self.store.student(c.student_id).display_name,
                    "topic_score": c.score,
                }
                for c in candidates
            ],
        }

    def create_group(
        self, created_by: str, member_ids: Sequence[str], class_id: str, topic: str
    ) -> groups.GroupSession:
        for member in member_ids:
            record = self.store.student(member)
            if class_id not in record.classes:
                raise ValidationError(f"{member} is not enrolled in {class_id!r}")
        now = self.now()
        group = groups.GroupSession(
            group_id=self.store.next_id("grp"),
            class_id=class_id,
            topic=topic,
            members=tuple(member_ids),
            created_by=created_by,
            created_at=now,
        )
        self.store.groups[group.group_id] = group
        self.store.append_event(
            {"type": "group_created", "group_id": group.group_id, "class_id": class_id,
             "members": list(member_ids), "at": now.isoformat()}
        )
        # selecting classmates is the group-study action
        with self._lock(created_by):
            cycle = self.store.ledger.open_cycle_of(created_by, HabitCategory.GROUP_STUDY)
            if cycle and cycle.phase == Phase.TRIGGERED:
                self.store.ledger.advance(cycle, CycleEvent.ACTION_COMPLETED, now)
        return group

    def rate_group(self, group_id: str, rater: str, ratings: Mapping[str, int]) -> groups.GroupSession:
        group = self.store.group(group_id)
        now = self.now()
        with self._lock(rater):
            group.rate(rater, dict(ratings))
            self.store.append_event(
                {"type": "group_rated", "group_id": group_id, "rater": rater, "at": now.isoformat()}
            )
            student = self.store.student(rater)
            cycle = self.store.ledger.open_cycle_of(rater, HabitCategory.GROUP_STUDY)
            if cycle and cycle.phase == Phase.ACTED:
                reward = self._draw_reward(student, HabitCategory.GROUP_STUDY, now)
                self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, reward)
            if cycle and cycle.phase == Phase.REWARDED:
                # the rating itself is the social investment
                self.store.ledger.advance(cycle, CycleEvent.INVESTMENT_RECORDED, now)
        return group

    def endorse(self, group_id: str, from_student: str, to_student: str) -> groups.Endorsement:
        group = self.store.group(group_id)
        if from_student not in group.members or to_student not in group.members:
            raise ValidationError("both students must belong to the group")
        if not group.can_endorse(from_student, to_student):
            raise ValidationError("endorsement needs a rating of 4 or better first")
        now = self.now()
        endorsement = groups.Endorsement(from_student, to_student, group_id, created_at=now)
        if endorsement.key() in self.store.endorsements:
            return self.store.endorsements[endorsement.key()]  # idempotent
        with self._lock(to_student):
            self.store.endorsements[endorsement.key()] = endorsement
            self.store.append_event({"type": "endorsement", **endorsement.to_json()})
            reward = RewardInstance(
                kind=RewardKind.ENDORSEMENT,
                payload="A study partner endorsed you as helpful.",
                delivered_at=now,
            )
            self._feed_reward(to_student, reward)
            cycle = self.store.ledger.open_cycle_of(to_student, HabitCategory.GROUP_STUDY)
            if cycle and cycle.phase == Phase.ACTED:
                self.store.ledger.advance(cycle, CycleEvent.REWARD_DELIVERED, now, reward)
        return endorsement

    def pair_class(self, class_id: str, topic: str) -> groups.PairingResult:
        """Blind-pairing batch over the class roster; both members get the
        same prompt through the trigger pipeline."""
        roster = self.store.roster(class_id)
        scores = []
        for member in roster:
            value = self.store.attempts.topic_score(member.student_id, class_id, topic)
            if value is not None:
                scores.append(groups.TopicScore(member.student_id, class_id, topic, value))
        if len(scores) < 2:
            raise ValidationError(f"pairing for {class_id!r}/{topic!r} needs two scored students")
        result = groups.pair_for_explanation(scores, iter(lambda: self.store.next_id("pair"), None))
        now = self.now()
        for pair in result.pairs:
            self.store.pairs[pair.pair_id] = pair
            self.store.pair_audit[pair.pair_id] = result.audit[pair.pair_id]
            self.store.append_event(
                {"type": "pair_created", "pair_id": pair.pair_id, "class_id": class_id,
                 "topic": topic, "members": list(pair.members), "at": now.isoformat()}
            )
            for member in pair.members:
                self.store.queue.enqueue(
                    member,
                    HabitCategory.GROUP_STUDY,
                    Purpose.PAIR_PROMPT,
                    now + timedelta(hours=1),
                    now,
                    payload={"pair_id": pair.pair_id, "prompt": pair.prompt, "class_id": class_id},
                )
        return result

    # ------------------------------------------------------------------- ttm

    def ingest_attempts(self, rows: Iterable) -> IngestResult:
        result = self.store.attempts.ingest(rows)
        self.store.append_event(
            {"type": "ttm_ingest", "accepted": result.accepted, "rejected": result.rejected,
             "duplicates": result.duplicates, "at": self.now().isoformat()}
        )
        return result

    # ------------------------------------------------------------- dispatch

    def _decide(self, request) -> Tuple[TriggerDecision, TriggerSource]:
        if not self.config.fbm_gate_enabled:
            return TriggerDecision(Outcome.FIRE, TriggerType.SIGNAL), TriggerSource.EXTERNAL
        category = request.category
        history = self.store.ledger.outcomes(request.student_id, category)
        streak = self.store.ledger.streak(request.student_id, category)
        motivation = fbm.estimate_motivation(
            history, prior=self.config.motivation_prior, window=self.config.motivation_window
        )
        base = {HabitCategory(k): v for k, v in self.config.base_ability.items()}
        ability = fbm.estimate_ability(category, streak, base=base)
        decision = fbm.select_trigger_type(
            motivation,
            ability,
            motivation_threshold=self.config.motivation_threshold,
            ability_threshold=self.config.ability_threshold,
        )
        source = hooks.trigger_source_for_next(streak, self.config.internal_trigger_after)
        return decision, source

    def dispatch_due(self, now: Optional[datetime] = None) -> List[DispatchOutcome]:
        now = now or self.now()
        outcomes = self.dispatcher.dispatch_due(now, self._decide)
        for outcome in outcomes:
            if outcome.status not in (RequestStatus.DELIVERED, RequestStatus.SKIPPED):
                continue
            request = outcome.request
            # a skipped reminder still means the student is internally
            # triggered: the session and cycle proceed without a message
            if request.purpose == Purpose.SESSION_START:
                session = self.store.sessions.get(request.payload.get("session_id", ""))
                if session is not None and session.state == SessionState.SCHEDULED:
                    scheduling.notify(session, now)
            category = _CYCLE_OPENING.get(request.purpose)
            if category is not None:
                if self.store.ledger.open_cycle_of(request.student_id, category) is None:
                    self.store.ledger.open_cycle_for(
                        request.student_id, category, outcome.decision, outcome.source, now
                    )
        return outcomes

    # ------------------------------------------------------------- heartbeat

    def tick(self, now: Optional[datetime] = None) -> List[DispatchOutcome]:
        """One engine heartbeat: materialize weeks, sweep, dispatch."""
        now = now or self.now()
        for student in list(self.store.students.values()):
            self._materialize_week(student, now)
        self._sweep_missed(now)
        self.store.ledger.sweep_stale(now)
        return self.dispatch_due(now)

    def _sweep_missed(self, now: datetime) -> None:
        grace = timedelta(minutes=self.config.checkin_grace_min)
        for session in self.store.sessions.values():
            if session.state in (SessionState.SCHEDULED, SessionState.NOTIFIED) and now > session.ends_at:
                if now > session.starts_at + grace:
                    scheduling.mark_missed(session, now, grace_min=self.config.checkin_grace_min)
                    self.store.append_event(
                        {"type": "session_missed", "session_id": session.session_id,
                         "student_id": session.student_id, "at": now.isoformat()}
                    )

    def _materialize_week(self, student: StudentRecord, now: datetime) -> None:
        if student.timetable is None:
            return
        tag = self._week_tag(student, now)
        key = (student.student_id, tag)
        if key in self.store.materialized:
            return
        self.store.materialized.add(key)
        anchor = self._week_anchor(student, now)
        with self._lock(student.student_id):
            existing = {
                (s.block.day, s.block.start_min, s.class_id)
                for s in self.store.sessions_of(student.student_id, week=tag)
            }
            for block in student.timetable.blocks:
                if block.kind != BlockKind.STUDY:
                    continue
                if (block.day, block.start_min, block.class_id) in existing:
                    continue
                self._create_session(student, block, anchor)
            self._enqueue_preparation_triggers(student, tag, anchor, now)
            self._weekly_group_checks(student, tag, now)
            self._weekly_place_check(student, tag, now)

    def _enqueue_preparation_triggers(
        self, student: StudentRecord, tag: str, anchor: datetime, now: datetime
    ) -> None:
        for class_id, meeting in sorted(student.timetable.class_blocks().items()):
            manifest = self.store.manifests.get((class_id, tag))
            if manifest is None or manifest.cancelled:
                continue
            self._ensure_checklist(student, class_id, tag)
            reading_due = preparation.pre_class_reminder_due(
                meeting, anchor, lead_hours=self.config.reading_list_lead_hours
            )
            self.store.queue.enqueue(
                student.student_id,
                HabitCategory.PREPARATION,
                Purpose.READING_LIST,
                max(now, reading_due),
                now,
                payload={"class_name": class_id, "class_id": class_id, "week": tag},
            )
            notes_due = preparation.post_class_prompt_due(
                meeting, anchor, delay_min=self.config.post_class_delay_min
            )
            self.store.queue.enqueue(
                student.student_id,
                HabitCategory.PREPARATION,
                Purpose.POST_CLASS_NOTES,
                max(now, notes_due),
                now,
                payload={"class_name": class_id, "class_id": class_id, "week": tag},
            )

    def _week_index(self, session: StudySession) -> int:
        return int(session.week.split("-W")[1])

    def _weekly_group_checks(self, student: StudentRecord, tag: str, now: datetime) -> None:
        if student.invited_week == tag:
            return
        solo = [
            (self._week_index(s), s.state.value, s.effectiveness)
            for s in self.store.sessions_of(student.student_id)
        ]
        current_index = int(tag.split("-W")[1])
        if groups.should_invite_friends(
            solo,
            current_index,
            window_weeks=self.config.invite_window_weeks,
            needed=self.config.invite_effective_sessions,
            min_effectiveness=self.config.invite_effectiveness_min,
        ):
            student.invited_week = tag
            class_id = student.classes[0] if student.classes else ""
            self.store.queue.enqueue(
                student.student_id,
                HabitCategory.GROUP_STUDY,
                Purpose.INVITE_FRIENDS,
                now + timedelta(hours=9),
                now,
                payload={"class_name": class_id, "class_id": class_id},
            )

    def _weekly_place_check(self, student: StudentRecord, tag: str, now: datetime) -> None:
        env_history = [
            s.environment
            for s in self.store.sessions_of(student.student_id)
            if s.state == SessionState.CHECKED_OUT and s.environment is not None
        ]
        place = scheduling.suggest_place(
            env_history,
            self.place_catalog,
            self.rng,
            suggested_this_week=(student.place_suggested_week == tag),
        )
        if place is None:
            return
        student.place_suggested_week = tag
        self.store.queue.enqueue(
            student.student_id,
            HabitCategory.SCHEDULING,
            Purpose.PLACE_SUGGESTION,
            now + timedelta(hours=8),
            now,
            payload={"place_name": place[0], "place_descriptor": place[1]},
        )

    # --------------------------------------------------------------- metrics

    def feed(self, student_id: str) -> List[dict]:
        self.store.student(student_id)
        return list(self.store.feed_of(student_id))

    def metrics(self, student_id: str) -> dict:
        student = self.store.student(student_id)
        sessions = self.store.sessions_of(student_id)
        weekly: Dict[str, List[StudySession]] = {}
        for s in sessions:
            weekly.setdefault(s.week, []).append(s)
        adherence_by_week = {}
        for tag in sorted(weekly):
            value = scheduling.adherence(weekly[tag])
            adherence_by_week[tag] = {
                "adherence": value,
                "band": scheduling.adherence_band(value),
                "scheduled": len(weekly[tag]),
                "checked_out": sum(1 for s in weekly[tag] if s.state == SessionState.CHECKED_OUT),
                "missed": sum(1 for s in weekly[tag] if s.state == SessionState.MISSED),
            }
        overall = scheduling.adherence(sessions)
        completed = self.store.ledger.completed_counts(student_id)
        scores = None
        if student.responses:
            try:
                scores = self.performance_scores(student_id)
            except ValidationError:
                scores = None
        return {
            "student_id": student_id,
            "adherence": overall,
            "band": scheduling.adherence_band(overall),
            "weeks": adherence_by_week,
            "sessions": {
                "scheduled": len(sessions),
                "checked_out": sum(1 for s in sessions if s.state == SessionState.CHECKED_OUT),
                "missed": sum(1 for s in sessions if s.state == SessionState.MISSED),
                "open": sum(1 for s in sessions if s.state not in scheduling.TERMINAL_STATES),
            },
            "cycles_completed": {c.value: completed.get(c, 0) for c in (
                HabitCategory.SCHEDULING, HabitCategory.PREPARATION, HabitCategory.GROUP_STUDY
            )},
            "streaks": {
                c.value: self.store.ledger.streak(student_id, c)
                for c in (HabitCategory.SCHEDULING, HabitCategory.PREPARATION, HabitCategory.GROUP_STUDY)
            },
            "scores": scores,
            "session_recommendations": self.session_recommendations(student_id),
            "relocation_proposals": self.relocation_proposals(student_id),
        }

    def session_recommendations(self, student_id: str) -> List[dict]:
        """Extra-session nudges for classes whose test performance lags."""
        student = self.store.student(student_id)
        if student.timetable is None:
            return []
        out = []
        study_counts: Dict[str, int] = {}
        for block in student.timetable.blocks:
            if block.kind == BlockKind.STUDY:
                study_counts[block.class_id] = study_counts.get(block.class_id, 0) + 1
        for class_id in sorted(student.classes):
            current = study_counts.get(class_id, 0)
            if current < 1:
                continue
            mean = self.store.attempts.class_mean(student_id, class_id)
            if mean is None:
                continue
            extra = scheduling.adapt_session_count(
                mean, current,
                threshold=self.config.adapt_score_threshold,
                cap=self.config.sessions_per_class_cap,
            )
            if extra:
                out.append({"class_id": class_id, "add_sessions": extra, "topic_mean": mean})
        return out

    def relocation_proposals(self, student_id: str) -> List[dict]:
        """Slots whose recent sessions rated poorly, with a better candidate."""
        student = self.store.student(student_id)
        if student.timetable is None or student.preference is None:
            return []
        out = []
        sessions = self.store.sessions_of(student_id)
        for block in student.timetable.blocks:
            if block.kind != BlockKind.STUDY:
                continue
            history = [
                s for s in sessions
                if (s.block.day, s.block.start_min, s.class_id)
                == (block.day, block.start_min, block.class_id)
            ]
            proposal = scheduling.propose_relocation(
                history, block, student.timetable, student.preference
            )
            if proposal is not None:
                out.append(
                    {
                        "class_id": block.class_id,
                        "from": {"day": block.day, "start": block.start_min},
                        "to": proposal.block.to_json(),
                    }
                )
        return out

    # ------------------------------------------------------------- lifecycle

    def save(self) -> Optional[str]:
        if self.store.path:
            return self.store.save()
        return None
