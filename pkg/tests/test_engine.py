from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from studyloop.config import EngineConfig
from studyloop.core import ConflictError, ManualClock, ValidationError
from studyloop.engine import Engine
from studyloop.hooks import Phase, TriggerSource
from studyloop.notify import Purpose, RequestStatus
from studyloop.performance import HabitCategory
from studyloop.scheduling import SessionState
from studyloop.store import Store

T0 = datetime(2026, 1, 5, tzinfo=timezone.utc)  # Monday 00:00 UTC

CLASS_BLOCKS = [
    {"day": 0, "start": 540, "end": 660, "kind": "class", "class_id": "c-web"},
    {"day": 1, "start": 840, "end": 960, "kind": "class", "class_id": "c-db"},
]


def make_engine(**config_kwargs):
    clock = ManualClock(T0)
    config = EngineConfig(rng_seed=7, **config_kwargs)
    return Engine(config, Store(), clock), clock


def onboard(engine, student_id="s1", preference="late", blocks=CLASS_BLOCKS):
    engine.create_student("Test Student", "UTC", student_id=student_id)
    engine.set_timetable(student_id, blocks)
    engine.set_preference(student_id, preference)
    return engine.get_student(student_id)


def accept_all(engine, student_id):
    suggestions, _ = engine.schedule_suggestions(student_id)
    return [
        engine.accept_suggestion(student_id, s.class_id, s.block.day, s.block.start_min)
        for s in suggestions
    ]


class TestWizard:
    def test_suggestions_require_timetable_then_preference(self):
        engine, _ = make_engine()
        engine.create_student("Test Student", "UTC", student_id="s1")
        with pytest.raises(ConflictError):
            engine.schedule_suggestions("s1")
        engine.set_timetable("s1", CLASS_BLOCKS)
        with pytest.raises(ConflictError):
            engine.schedule_suggestions("s1")
        engine.set_preference("s1", "late")
        suggestions, unschedulable = engine.schedule_suggestions("s1")
        assert len(suggestions) == 2 and unschedulable == []

    def test_accept_creates_session_and_start_trigger(self):
        engine, _ = make_engine()
        onboard(engine)
        sessions = accept_all(engine, "s1")
        assert all(s.state == SessionState.SCHEDULED for s in sessions)
        purposes = [r.purpose for r in engine.store.queue.requests.values()]
        assert purposes.count(Purpose.SESSION_START) == 2

    def test_accept_rejects_collisions(self):
        engine, _ = make_engine()
        onboard(engine)
        with pytest.raises(ConflictError):
            engine.accept_suggestion("s1", "c-web", 0, 540)  # on top of the class
        with pytest.raises(ValidationError):
            engine.accept_suggestion("s1", "c-web", 0, 60)  # before waking window

    def test_accept_requires_enrollment(self):
        engine, _ = make_engine()
        onboard(engine)
        with pytest.raises(ValidationError):
            engine.accept_suggestion("s1", "c-none", 0, 1080)

    def test_reject_and_regenerate(self):
        engine, _ = make_engine()
        onboard(engine)
        first, _ = engine.schedule_suggestions("s1")
        rejects = {s.class_id: [(s.block.day, s.block.start_min)] for s in first}
        second, _ = engine.schedule_suggestions("s1", rejects)
        for s in second:
            assert (s.block.day, s.block.start_min) not in rejects[s.class_id]


class TestDispatchWiring:
    def test_delivered_session_start_notifies_and_opens_cycle(self):
        engine, clock = make_engine()
        onboard(engine)
        session = accept_all(engine, "s1")[0]
        clock.set(session.starts_at - timedelta(minutes=10))
        outcomes = engine.tick()
        statuses = {o.request.purpose: o.status for o in outcomes}
        assert statuses[Purpose.SESSION_START] == RequestStatus.DELIVERED
        assert session.state == SessionState.NOTIFIED
        cycle = engine.store.ledger.open_cycle_of("s1", HabitCategory.SCHEDULING)
        assert cycle is not None and cycle.phase == Phase.TRIGGERED

    def test_checkout_completes_a_whole_cycle(self):
        engine, clock = make_engine()
        onboard(engine)
        session = accept_all(engine, "s1")[0]
        clock.set(session.starts_at - timedelta(minutes=10))
        engine.tick()
        clock.set(session.starts_at)
        engine.check_in(session.session_id)
        clock.set(session.ends_at)
        engine.check_out(session.session_id, 4, 3)
        assert engine.store.ledger.completed_counts("s1") == {HabitCategory.SCHEDULING: 1}
        assert engine.store.ledger.streak("s1", HabitCategory.SCHEDULING) == 1
        assert engine.store.ledger.open_cycle_of("s1", HabitCategory.SCHEDULING) is None

    def test_ignored_trigger_ends_in_missed_session_and_abandoned_cycle(self):
        engine, clock = make_engine()
        onboard(engine)
        session = accept_all(engine, "s1")[0]
        clock.set(session.starts_at - timedelta(minutes=10))
        engine.tick()
        # student never checks in; a week later the sweep has marked the
        # session missed and the stale cycle abandoned
        clock.set(session.starts_at + timedelta(days=7, minutes=1))
        engine.tick()
        assert session.state == SessionState.MISSED
        assert engine.store.ledger.streak("s1", HabitCategory.SCHEDULING) == 0
        assert engine.store.ledger.outcomes("s1", HabitCategory.SCHEDULING) == [False]

    def test_internal_source_skip_still_notifies_session(self):
        engine, clock = make_engine()
        onboard(engine)
        # force a long streak so the trigger source goes internal
        engine.store.ledger.streaks[("s1", HabitCategory.SCHEDULING)] = 6
        sessions = accept_all(engine, "s1")
        delivered_states = []
        for session in sessions:
            clock.set(session.starts_at - timedelta(minutes=10))
            outcomes = engine.tick()
            for o in outcomes:
                if o.request.purpose == Purpose.SESSION_START:
                    delivered_states.append(o.status)
            # skipped or delivered, the student counts as prompted
            assert session.state == SessionState.NOTIFIED
        assert delivered_states == [RequestStatus.DELIVERED, RequestStatus.SKIPPED]

    def test_materialization_is_idempotent_per_week(self):
        engine, clock = make_engine()
        onboard(engine)
        accept_all(engine, "s1")
        engine.tick()
        count = len(engine.store.sessions)
        engine.tick()
        assert len(engine.store.sessions) == count
        # next week brings exactly one new session per study block
        clock.set(T0 + timedelta(days=7))
        engine.tick()
        assert len(engine.store.sessions) == count * 2


class TestPreparationFlow:
    WEEK = "2026-W02"

    def manifest(self):
        return {
            "lecture_notes": True,
            "tutorial_notes": True,
            "textbook": "ch. 2",
            "links": ["https://example.edu/a"],
            "personal_notes_prev": True,
        }

    def test_reading_list_trigger_and_checklist_cycle(self):
        engine, clock = make_engine()
        onboard(engine)
        engine.put_manifest("c-web", self.WEEK, self.manifest())
        # the first tick materializes the week; the Monday 09:00 class minus
        # 48h clamps to the week start, so the reminder dispatches right away
        outcomes = engine.tick()
        reading = [
            r for r in engine.store.queue.requests.values() if r.purpose == Purpose.READING_LIST
        ]
        assert len(reading) == 1
        assert reading[0].due_at == T0
        assert any(
            o.request.purpose == Purpose.READING_LIST and o.status == RequestStatus.DELIVERED
            for o in outcomes
        )
        cycle = engine.store.ledger.open_cycle_of("s1", HabitCategory.PREPARATION)
        assert cycle is not None
        checklists = engine.get_checklists("s1", self.WEEK)
        assert len(checklists) == 1
        for item in checklists[0].items:
            if item.required:
                engine.tick_item(item.item_id)
        assert engine.store.ledger.completed_counts("s1").get(HabitCategory.PREPARATION) == 1
        kinds = [f["kind"] for f in engine.feed("s1") if f["type"] == "reward"]
        assert "progress_color_change" in kinds and "praise_message" in kinds

    def test_note_requires_text_and_advances_cycle(self):
        engine, clock = make_engine()
        onboard(engine)
        engine.put_manifest("c-web", self.WEEK, self.manifest())
        engine.tick()
        with pytest.raises(ValidationError):
            engine.submit_note("s1", "c-web", self.WEEK, "   ")
        engine.submit_note("s1", "c-web", self.WEEK, "Summary of the lecture.")
        assert engine.store.ledger.completed_counts("s1").get(HabitCategory.PREPARATION) == 1

    def test_post_class_prompt_enqueued(self):
        engine, _ = make_engine()
        onboard(engine)
        engine.put_manifest("c-web", self.WEEK, self.manifest())
        engine.tick()
        prompts = [
            r for r in engine.store.queue.requests.values()
            if r.purpose == Purpose.POST_CLASS_NOTES
        ]
        assert len(prompts) == 1
        assert prompts[0].due_at == T0 + timedelta(hours=11, minutes=15)  # 11:00 end + 15min

    def test_cancelled_class_gets_no_triggers(self):
        engine, _ = make_engine()
        onboard(engine)
        engine.put_manifest("c-web", self.WEEK, {"cancelled": True, "lecture_notes": True})
        engine.tick()
        assert not any(
            r.purpose in (Purpose.READING_LIST, Purpose.POST_CLASS_NOTES)
            for r in engine.store.queue.requests.values()
        )


class TestGroupFlow:
    def setup_class_roster(self, engine, scores):
        rows = []
        for index, (sid, score) in enumerate(scores.items()):
            engine.create_student(f"Student {sid}", "UTC", student_id=sid, share_schedule=True)
            engine.set_timetable(sid, CLASS_BLOCKS)
            engine.set_preference(sid, "late")
            rows.append(
                {
                    "student_id": sid, "class_id": "c-web", "topic": "css",
                    "test_id": "c-web.css.t1", "attempt_no": 1, "score": score,
                    "taken_at": T0.isoformat(),
                }
            )
        engine.ingest_attempts(rows)

    def test_partner_suggestions_and_overlap(self):
        engine, _ = make_engine()
        self.setup_class_roster(engine, {"alice": 95, "bob": 40, "carol": 72, "dan": 88})
        result = engine.partner_suggestions("bob", "c-web", "css")
        assert result["status"] == "ok"
        assert [c["student_id"] for c in result["candidates"]] == ["alice", "dan"]

    def test_not_weak_requester(self):
        engine, _ = make_engine()
        self.setup_class_roster(engine, {"alice": 95, "bob": 40, "carol": 72, "dan": 88})
        result = engine.partner_suggestions("alice", "c-web", "css")
        assert result["status"] == "not_weak" and result["candidates"] == []

    def test_pairing_batch_prompts_both_members_identically(self):
        engine, clock = make_engine()
        self.setup_class_roster(engine, {"a": 90, "b": 80, "c": 60, "d": 50})
        result = engine.pair_class("c-web", "css")
        assert [tuple(p.members) for p in result.pairs] == [("a", "d"), ("b", "c")]
        prompts = [
            r for r in engine.store.queue.requests.values() if r.purpose == Purpose.PAIR_PROMPT
        ]
        assert len(prompts) == 4
        by_pair = {}
        for p in prompts:
            by_pair.setdefault(p.payload["pair_id"], []).append(p.payload["prompt"])
        for texts in by_pair.values():
            assert len(set(texts)) == 1

    def test_endorsement_rewards_recipient_once(self):
        engine, _ = make_engine()
        self.setup_class_roster(engine, {"a": 90, "b": 50})
        group = engine.create_group("a", ["a", "b"], "c-web", "css")
        engine.rate_group(group.group_id, "a", {"b": 5})
        with pytest.raises(ValidationError):
            engine.endorse(group.group_id, "b", "a")  # b has not rated a yet
        engine.endorse(group.group_id, "a", "b")
        engine.endorse(group.group_id, "a", "b")  # idempotent
        rewards = [f for f in engine.feed("b") if f["type"] == "reward"]
        assert len(rewards) == 1 and rewards[0]["kind"] == "endorsement"
        assert len(engine.store.endorsements) == 1


class TestMetricsAndRecommendations:
    def test_metrics_shape_and_adaptation(self):
        engine, clock = make_engine()
        onboard(engine)
        accept_all(engine, "s1")
        engine.ingest_attempts(
            [
                {
                    "student_id": "s1", "class_id": "c-web", "topic": "css",
                    "test_id": "c-web.css.t1", "attempt_no": 1, "score": 45,
                    "taken_at": T0.isoformat(),
                }
            ]
        )
        metrics = engine.metrics("s1")
        assert metrics["sessions"]["scheduled"] == 2
        assert metrics["adherence"] is None
        recs = metrics["session_recommendations"]
        assert recs == [{"class_id": "c-web", "add_sessions": 1, "topic_mean": 45.0}]

    def test_relocation_proposal_after_low_ratings(self):
        engine, clock = make_engine()
        onboard(engine)
        sessions = accept_all(engine, "s1")
        target = sessions[0]
        for week in range(2):
            for session in engine.store.sessions_of("s1", None):
                if session.state != SessionState.SCHEDULED:
                    continue
                clock.set(session.starts_at - timedelta(minutes=10))
                engine.tick()
                clock.set(session.starts_at)
                engine.check_in(session.session_id)
                clock.set(session.ends_at)
                low = session.class_id == target.class_id
                engine.check_out(session.session_id, 1 if low else 5, 3)
            clock.set(T0 + timedelta(days=7 * (week + 1)))
            engine.tick()
        proposals = engine.relocation_proposals("s1")
        assert len(proposals) == 1
        assert proposals[0]["class_id"] == target.class_id
        assert (proposals[0]["to"]["day"], proposals[0]["to"]["start"]) != (
            proposals[0]["from"]["day"], proposals[0]["from"]["start"],
        )


class TestSnapshot:
    def test_round_trip_preserves_state(self, tmp_path):
        engine, clock = make_engine()
        onboard(engine)
        session = accept_all(engine, "s1")[0]
        clock.set(session.starts_at - timedelta(minutes=10))
        engine.tick()
        clock.set(session.starts_at)
        engine.check_in(session.session_id)
        clock.set(session.ends_at)
        engine.check_out(session.session_id, 4, 2)

        path = tmp_path / "store.json"
        engine.store.path = str(path)
        engine.store.save()

        restored = Store.load(str(path))
        assert restored.export_snapshot() == engine.store.export_snapshot()
        # the restored store keeps working
        engine2 = Engine(EngineConfig(rng_seed=7), restored, clock)
        assert engine2.metrics("s1")["adherence"] == 1.0

    def test_unsupported_snapshot_schema_rejected(self):
        from studyloop.core import ValidationError

        with pytest.raises(ValidationError):
            Store().import_snapshot({"schema_version": 99})
