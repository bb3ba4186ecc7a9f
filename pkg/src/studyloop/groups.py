"""Group study support: helper suggestions, blind pairing and endorsements.

Two matchmaking modes. Helper suggestions find strong classmates (top
quartile on the topic, by nearest-rank percentile) whose free time
overlaps the requester's by at least an hour; only students who opted in
to schedule sharing are eligible, and a requester who is not actually
below the class median gets an empty list back. Blind pairing splits a
class roster at the median and pairs the strongest of the upper half with
the weakest of the lower half and so on inward; both members get exactly
the same prompt and the split is never exposed to students, only kept for
operator audit.

After a group session members rate each other; a rating of 4 or better
unlocks a one-per-session "helpful" endorsement that lands in the
recipient's feed as a reward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .core import AuthorizationError, ValidationError

HELPER_PERCENTILE = 0.75
MIN_OVERLAP_MIN = 60
ENDORSE_MIN_RATING = 4
INVITE_EFFECTIVE_SESSIONS = 3
INVITE_EFFECTIVENESS_MIN = 4
INVITE_WINDOW_WEEKS = 4


@dataclass(frozen=True)
class TopicScore:
    student_id: str
    class_id: str
    topic: str
    score: float

    def __post_init__(self) -> None:
        if not 0 <= self.score <= 100:
            raise ValidationError(f"topic score must be in 0..100, got {self.score}")


@dataclass(frozen=True)
class StudyPair:
    """A blind pair for mutual explanation. The median split that produced
    it stays out of every student-facing payload; to_json() is the only
    serialization students ever see."""

    pair_id: str
    class_id: str
    topic: str
    members: Tuple[str, str]
    prompt: str

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "class_id": self.class_id,
            "topic": self.topic,
            "members": list(self.members),
            "prompt": self.prompt,
        }


# Identical for both members by design: neither side can tell from the
# wording which half of the split they came from.
PAIR_PROMPT = (
    "You have been matched with a classmate to study {topic} together. "
    "Take turns explaining the key concepts to each other in your own words."
)


@dataclass(frozen=True)
class Endorsement:
    from_student: str
    to_student: str
    group_id: str
    tag: str = "helpful"
    created_at: Optional[datetime] = None

    def __post_init__(self) -> None:
        if self.from_student == self.to_student:
            raise ValidationError("students cannot endorse themselves")

    def key(self) -> Tuple[str, str, str]:
        return (self.from_student, self.to_student, self.group_id)

    def to_json(self) -> dict:
        return {
            "from_student": self.from_student,
            "to_student": self.to_student,
            "group_id": self.group_id,
            "tag": self.tag,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }


class HelperStatus(str, Enum):
    OK = "ok"
    NOT_WEAK = "not_weak"
    NO_CANDIDATES = "no_candidates"


def percentile_nearest_rank(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: value at index ceil(q*n) of the ascending sort."""
    if not values:
        raise ValidationError("percentile of empty sequence")
    if not 0 < q <= 1:
        raise ValidationError(f"percentile fraction must be in (0, 1], got {q}")
    ordered = sorted(values)
    rank = math.ceil(q * len(ordered))
    return ordered[rank - 1]


def median(values: Sequence[float]) -> float:
    if not values:
        raise ValidationError("median of empty sequence")
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def overlap_minutes(
    free_a: Mapping[int, Sequence[Tuple[int, int]]],
    free_b: Mapping[int, Sequence[Tuple[int, int]]],
) -> int:
    """Total weekly minutes where both free-interval maps are free."""
    total = 0
    for day, intervals_a in free_a.items():
        for a_start, a_end in intervals_a:
            for b_start, b_end in free_b.get(day, ()):
                total += max(0, min(a_end, b_end) - max(a_start, b_start))
    return total


def suggest_helpers(
    requester_id: str,
    scores: Sequence[TopicScore],
    opted_in: Set[str],
    free_time: Mapping[str, Mapping[int, Sequence[Tuple[int, int]]]],
    endorsement_counts: Mapping[str, int],
    percentile: float = HELPER_PERCENTILE,
    min_overlap: int = MIN_OVERLAP_MIN,
) -> Tuple[HelperStatus, List[TopicScore]]:
    """Rank classmates who could help the requester on this topic.

    scores must all belong to one (class, topic) and include the requester.
    Candidates need: opt-in, topic score at or above the class percentile
    cut, and enough overlapping free time with the requester. Ordering is
    score desc, endorsements desc, student_id asc.
    """
    mine = next((s for s in scores if s.student_id == requester_id), None)
    if mine is None:
        raise ValidationError(f"requester {requester_id} has no score for this topic")
    values = [s.score for s in scores]
    if mine.score >= median(values):
        return HelperStatus.NOT_WEAK, []
    cut = percentile_nearest_rank(values, percentile)
    requester_free = free_time.get(requester_id, {})
    candidates = [
        s
        for s in scores
        if s.student_id != requester_id
        and s.student_id in opted_in
        and s.score >= cut
        and overlap_minutes(requester_free, free_time.get(s.student_id, {})) >= min_overlap
    ]
    candidates.sort(
        key=lambda s: (-s.score, -endorsement_counts.get(s.student_id, 0), s.student_id)
    )
    status = HelperStatus.OK if candidates else HelperStatus.NO_CANDIDATES
    return status, candidates


@dataclass(frozen=True)
class PairingResult:
    pairs: List[StudyPair]
    unpaired: List[str]
    # operator-only audit of the split; never serialized toward students
    audit: Dict[str, Tuple[str, str]]


def pair_for_explanation(
    scores: Sequence[TopicScore],
    pair_ids: Iterable[str],
) -> PairingResult:
    """Blind pairing across the class median.

    The roster splits into strictly-above-median and at-or-below-median
    halves; the best of the upper half pairs with the last of the lower
    half and so on inward. Whoever cannot be paired (the median-most
    student on an odd roster, or everyone left over when ties starve one
    half) is reported unpaired.
    """
    if len(scores) < 2:
        raise ValidationError("pairing needs a roster of at least two scored students")
    mid = median([s.score for s in scores])
    ordered = sorted(scores, key=lambda s: (-s.score, s.student_id))
    upper = [s for s in ordered if s.score > mid]
    lower = [s for s in ordered if s.score <= mid]
    ids = iter(pair_ids)
    pairs: List[StudyPair] = []
    audit: Dict[str, Tuple[str, str]] = {}
    n = min(len(upper), len(lower))
    topic = scores[0].topic
    class_id = scores[0].class_id
    for i in range(n):
        above = upper[i]
        below = lower[len(lower) - 1 - i]
        pair = StudyPair(
            pair_id=next(ids),
            class_id=class_id,
            topic=topic,
            members=(above.student_id, below.student_id),
            prompt=PAIR_PROMPT.format(topic=topic),
        )
        pairs.append(pair)
        audit[pair.pair_id] = (above.student_id, below.student_id)
    paired = {m for p in pairs for m in p.members}
    unpaired = [s.student_id for s in ordered if s.student_id not in paired]
    return PairingResult(pairs=pairs, unpaired=unpaired, audit=audit)


@dataclass
class GroupSession:
    group_id: str
    class_id: str
    topic: str
    members: Tuple[str, ...]
    created_by: str
    created_at: datetime
    # rater -> member -> rating; re-rating overwrites (latest wins)
    ratings: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members) or len(self.members) < 2:
            raise ValidationError("a group session needs at least two distinct members")
        if self.created_by not in self.members:
            raise ValidationError("the creator must be a member of the group")

    def rate(self, rater: str, per_member: Mapping[str, int]) -> None:
        if rater not in self.members:
            raise AuthorizationError(f"{rater} is not a member of group {self.group_id}")
        for member, rating in per_member.items():
            if member not in self.members:
                raise ValidationError(f"{member} is not a member of group {self.group_id}")
            if member == rater:
                raise ValidationError("members rate each other, not themselves")
            if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
                raise ValidationError(f"rating must be an integer in 1..5, got {rating!r}")
        self.ratings.setdefault(rater, {}).update(per_member)

    def rating_of(self, rater: str, member: str) -> Optional[int]:
        return self.ratings.get(rater, {}).get(member)

    def can_endorse(self, from_student: str, to_student: str) -> bool:
        rating = self.rating_of(from_student, to_student)
        return rating is not None and rating >= ENDORSE_MIN_RATING

    def to_json(self) -> dict:
        return {
            "group_id": self.group_id,
            "class_id": self.class_id,
            "topic": self.topic,
            "members": list(self.members),
            "created_by": self.created_by,
            "created_at": self.created_at.isoformat(),
            "ratings": self.ratings,
        }


def should_invite_friends(
    solo_sessions: Sequence,
    current_week_index: int,
    window_weeks: int = INVITE_WINDOW_WEEKS,
    needed: int = INVITE_EFFECTIVE_SESSIONS,
    min_effectiveness: int = INVITE_EFFECTIVENESS_MIN,
) -> bool:
    """Invite-friends trigger: a run of effective solo sessions in the
    trailing weeks earns the group-study nudge.

    solo_sessions are (week_index, state, effectiveness) tuples.
    """
    count = 0
    for week_index, state, effectiveness in solo_sessions:
        if current_week_index - week_index >= window_weeks:
            continue
        if state == "checked_out" and effectiveness is not None and effectiveness >= min_effectiveness:
            count += 1
    return count >= needed
