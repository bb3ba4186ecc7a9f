from __future__ import annotations

import itertools
import json
import random
from datetime import datetime, timezone

import pytest

from studyloop.core import AuthorizationError, ValidationError
from studyloop.groups import (
    Endorsement,
    GroupSession,
    HelperStatus,
    PairingResult,
    StudyPair,
    TopicScore,
    median,
    overlap_minutes,
    pair_for_explanation,
    percentile_nearest_rank,
    should_invite_friends,
    suggest_helpers,
)

NOW = datetime(2026, 2, 2, 12, 0, tzinfo=timezone.utc)

FORBIDDEN_TOKENS = ("higher", "lower", "role", "hidden")


def scores(*pairs, class_id="web", topic="css"):
    return [TopicScore(sid, class_id, topic, val) for sid, val in pairs]


def pair_id_stream():
    return (f"pair-{i}" for i in itertools.count(1))


class TestPercentileAndMedian:
    def test_nearest_rank_by_hand(self):
        # ascending [40, 72, 88, 95], ceil(0.75 * 4) = 3 -> 88
        assert percentile_nearest_rank([95, 40, 72, 88], 0.75) == 88

    def test_single_value(self):
        assert percentile_nearest_rank([50], 0.75) == 50

    def test_median_even_and_odd(self):
        assert median([40, 72, 88, 95]) == 80
        assert median([40, 72, 88]) == 72


def full_week_free():
    return {d: [(480, 1380)] for d in range(7)}


class TestSuggestHelpers:
    def base_inputs(self):
        roster = scores(("alice", 95), ("bob", 40), ("carol", 72), ("dan", 88))
        free = {sid: full_week_free() for sid in ("alice", "bob", "carol", "dan")}
        return roster, {"alice", "carol", "dan"}, free

    def test_percentile_cut_by_hand(self):
        roster, opted, free = self.base_inputs()
        status, candidates = suggest_helpers("bob", roster, opted, free, {})
        assert status == HelperStatus.OK
        assert [c.student_id for c in candidates] == ["alice", "dan"]

    def test_requester_above_median_not_weak(self):
        roster, opted, free = self.base_inputs()
        status, candidates = suggest_helpers("alice", roster, opted, free, {})
        assert status == HelperStatus.NOT_WEAK
        assert candidates == []

    def test_no_opted_in_classmates_gives_empty(self):
        roster, _, free = self.base_inputs()
        status, candidates = suggest_helpers("bob", roster, set(), free, {})
        assert candidates == []

    def test_overlap_floor_excludes_mismatched_schedules(self):
        roster, opted, free = self.base_inputs()
        free["dan"] = {0: [(480, 530)]}  # only 50 shared minutes
        _, candidates = suggest_helpers("bob", roster, opted, free, {})
        assert [c.student_id for c in candidates] == ["alice"]

    def test_endorsements_break_score_ties(self):
        roster = scores(("alice", 90), ("bob", 10), ("carol", 90), ("dan", 90))
        free = {sid: full_week_free() for sid, _ in [("alice", 0), ("bob", 0), ("carol", 0), ("dan", 0)]}
        _, candidates = suggest_helpers(
            "bob", roster, {"alice", "carol", "dan"}, free, {"carol": 3, "alice": 1}
        )
        assert [c.student_id for c in candidates] == ["carol", "alice", "dan"]

    def test_matches_brute_force_filter_on_fuzz(self, rng):
        for _ in range(200):
            n = rng.randint(2, 12)
            roster = scores(*((f"s{i}", rng.randint(0, 100)) for i in range(n)))
            opted = {s.student_id for s in roster if rng.random() < 0.7}
            free = {}
            for s in roster:
                days = {}
                for d in range(7):
                    if rng.random() < 0.5:
                        start = rng.randrange(480, 1200, 30)
                        days[d] = [(start, min(1380, start + rng.randrange(30, 300, 30)))]
                free[s.student_id] = days
            endorsements = {s.student_id: rng.randint(0, 5) for s in roster}
            requester = roster[0].student_id
            status, candidates = suggest_helpers(requester, roster, opted, free, endorsements)

            values = [s.score for s in roster]
            mine = roster[0].score
            if mine >= median(values):
                assert status == HelperStatus.NOT_WEAK and candidates == []
                continue
            cut = percentile_nearest_rank(values, 0.75)
            expected = [
                s for s in roster
                if s.student_id != requester
                and s.student_id in opted
                and s.score >= cut
                and overlap_minutes(free[requester], free[s.student_id]) >= 60
            ]
            expected.sort(key=lambda s: (-s.score, -endorsements[s.student_id], s.student_id))
            assert candidates == expected


class TestPairing:
    def test_rank_pairing_by_hand(self):
        result = pair_for_explanation(scores(("a", 90), ("b", 80), ("c", 60), ("d", 50)), pair_id_stream())
        got = [tuple(p.members) for p in result.pairs]
        assert got == [("a", "d"), ("b", "c")]
        assert result.unpaired == []

    def test_roster_of_two(self):
        result = pair_for_explanation(scores(("a", 90), ("b", 10)), pair_id_stream())
        assert len(result.pairs) == 1
        assert result.pairs[0].members == ("a", "b")

    def test_odd_roster_leaves_median_most_unpaired(self):
        result = pair_for_explanation(
            scores(("a", 90), ("b", 80), ("c", 70), ("d", 60), ("e", 50)), pair_id_stream()
        )
        assert [tuple(p.members) for p in result.pairs] == [("a", "e"), ("b", "d")]
        assert result.unpaired == ["c"]

    def test_roster_below_two_rejected(self):
        with pytest.raises(ValidationError):
            pair_for_explanation(scores(("a", 90)), pair_id_stream())

    def test_identical_prompt_for_both_members(self):
        result = pair_for_explanation(scores(("a", 90), ("b", 10)), pair_id_stream())
        pair = result.pairs[0]
        assert "{topic}" not in pair.prompt
        # one prompt string, no per-member variants to leak the split
        assert pair.to_json()["prompt"] == pair.prompt

    def test_split_invariants_on_fuzzed_rosters(self, rng):
        for _ in range(300):
            n = rng.randint(2, 15)
            roster = scores(*((f"s{i}", rng.randint(0, 100)) for i in range(n)))
            result = pair_for_explanation(roster, pair_id_stream())
            mid = median([s.score for s in roster])
            by_id = {s.student_id: s.score for s in roster}
            seen = []
            for pair in result.pairs:
                above, below = result.audit[pair.pair_id]
                assert by_id[above] > mid >= by_id[below]
                seen.extend(pair.members)
            assert len(seen) == len(set(seen))  # disjoint
            assert sorted(seen + result.unpaired) == sorted(by_id)  # coverage

    def test_pair_payload_never_names_the_split(self, rng):
        for _ in range(100):
            n = rng.randint(2, 10)
            roster = scores(*((f"s{i}", rng.randint(0, 100)) for i in range(n)))
            result = pair_for_explanation(roster, pair_id_stream())
            for pair in result.pairs:
                text = json.dumps(pair.to_json()).lower()
                for token in FORBIDDEN_TOKENS:
                    assert token not in text


class TestGroupSessionsAndEndorsements:
    def make_group(self):
        return GroupSession(
            group_id="g1", class_id="web", topic="css",
            members=("alice", "bob"), created_by="alice", created_at=NOW,
        )

    def test_member_rating_enables_endorsement(self):
        group = self.make_group()
        group.rate("alice", {"bob": 5})
        assert group.can_endorse("alice", "bob")

    def test_low_rating_does_not_enable(self):
        group = self.make_group()
        group.rate("alice", {"bob": 3})
        assert not group.can_endorse("alice", "bob")

    def test_rating_out_of_range(self):
        group = self.make_group()
        with pytest.raises(ValidationError):
            group.rate("alice", {"bob": 0})

    def test_non_member_rater_rejected(self):
        group = self.make_group()
        with pytest.raises(AuthorizationError):
            group.rate("carol", {"bob": 5})

    def test_duplicate_rating_overwrites_latest(self):
        group = self.make_group()
        group.rate("alice", {"bob": 5})
        group.rate("alice", {"bob": 2})
        assert group.rating_of("alice", "bob") == 2

    def test_self_endorsement_rejected(self):
        with pytest.raises(ValidationError):
            Endorsement(from_student="alice", to_student="alice", group_id="g1")

    def test_endorsement_key_dedupes_per_session(self):
        a = Endorsement("alice", "bob", "g1", created_at=NOW)
        b = Endorsement("alice", "bob", "g1", created_at=NOW)
        assert a.key() == b.key()


class TestInviteTrigger:
    def test_three_effective_sessions_fire(self):
        sessions = [(1, "checked_out", 5), (2, "checked_out", 4), (3, "checked_out", 4)]
        assert should_invite_friends(sessions, current_week_index=4)

    def test_old_sessions_age_out(self):
        sessions = [(0, "checked_out", 5), (1, "checked_out", 5), (2, "checked_out", 5)]
        assert not should_invite_friends(sessions, current_week_index=6)

    def test_low_effectiveness_does_not_count(self):
        sessions = [(3, "checked_out", 3), (3, "checked_out", 4), (4, "checked_out", 4)]
        assert not should_invite_friends(sessions, current_week_index=4)
