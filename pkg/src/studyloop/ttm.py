"""Ingestion of per-topic multiple-choice test results from the learning tool.

Students get unlimited attempts, so the best attempt per test is the
honest signal of attained understanding; a topic score is the mean of
best attempts across that topic's tests. Rows arrive as JSON lines (or
the same records over HTTP), are validated individually, and re-ingesting
a file is a no-op thanks to the (student, test, attempt) uniqueness key.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Dict, Iterable, List, Optional, Tuple

from .core import ValidationError, parse_ts


@dataclass(frozen=True)
class TestAttempt:
    __test__ = False  # not a pytest class, despite the name

    student_id: str
    class_id: str
    topic: str
    test_id: str
    attempt_no: int
    score: float
    taken_at: datetime

    def __post_init__(self) -> None:
        if not self.student_id or not self.class_id or not self.test_id or not self.topic:
            raise ValidationError("attempt needs student, class, topic and test ids")
        if self.attempt_no < 1:
            raise ValidationError(f"attempt_no must be >= 1, got {self.attempt_no}")
        if not 0 <= self.score <= 100:
            raise ValidationError(f"score must be in 0..100, got {self.score}")

    def key(self) -> Tuple[str, str, int]:
        return (self.student_id, self.test_id, self.attempt_no)

    def to_json(self) -> dict:
        return {
            "student_id": self.student_id,
            "class_id": self.class_id,
            "topic": self.topic,
            "test_id": self.test_id,
            "attempt_no": self.attempt_no,
            "score": self.score,
            "taken_at": self.taken_at.isoformat(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TestAttempt":
        try:
            return cls(
                student_id=str(data["student_id"]),
                class_id=str(data["class_id"]),
                topic=str(data["topic"]),
                test_id=str(data["test_id"]),
                attempt_no=int(data["attempt_no"]),
                score=float(data["score"]),
                taken_at=parse_ts(data["taken_at"]) if isinstance(data["taken_at"], str) else data["taken_at"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed test attempt: {exc}") from exc


@dataclass
class IngestResult:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    reasons: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "duplicates": self.duplicates,
            "reasons": self.reasons,
        }


class AttemptStore:
    """In-memory attempt store keyed by (student, test, attempt_no)."""

    def __init__(self) -> None:
        self._attempts: Dict[Tuple[str, str, int], TestAttempt] = {}

    def __len__(self) -> int:
        return len(self._attempts)

    def ingest(self, rows: Iterable) -> IngestResult:
        """Validate and store rows; invalid rows are reported, never fatal."""
        result = IngestResult()
        for row in rows:
            try:
                attempt = row if isinstance(row, TestAttempt) else TestAttempt.from_json(row)
            except ValidationError as exc:
                result.rejected += 1
                result.reasons.append(str(exc))
                continue
            if attempt.key() in self._attempts:
                result.duplicates += 1
                continue
            self._attempts[attempt.key()] = attempt
            result.accepted += 1
        return result

    def ingest_jsonl(self, path: str) -> IngestResult:
        rows: List[dict] = []
        bad = 0
        reasons: List[str] = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    bad += 1
                    reasons.append(f"line {lineno}: {exc.msg}")
        result = self.ingest(rows)
        result.rejected += bad
        result.reasons = reasons + result.reasons
        return result

    def attempts_for(
        self, student_id: str, class_id: Optional[str] = None, topic: Optional[str] = None
    ) -> List[TestAttempt]:
        return [
            a
            for a in self._attempts.values()
            if a.student_id == student_id
            and (class_id is None or a.class_id == class_id)
            and (topic is None or a.topic == topic)
        ]

    def topic_score(self, student_id: str, class_id: str, topic: str) -> Optional[float]:
        """Mean over the topic's tests of each test's best attempt; None when
        the student has no attempts there."""
        best: Dict[str, float] = {}
        for a in self.attempts_for(student_id, class_id, topic):
            best[a.test_id] = max(best.get(a.test_id, 0.0), a.score)
        if not best:
            return None
        return sum(best.values()) / len(best)

    def class_mean(self, student_id: str, class_id: str) -> Optional[float]:
        """Mean of the student's topic scores across a class's topics."""
        topics = {a.topic for a in self.attempts_for(student_id, class_id)}
        scores = [self.topic_score(student_id, class_id, t) for t in sorted(topics)]
        scores = [s for s in scores if s is not None]
        if not scores:
            return None
        return sum(scores) / len(scores)

    def topics(self, class_id: str) -> List[str]:
        return sorted({a.topic for a in self._attempts.values() if a.class_id == class_id})

    def to_json(self) -> List[dict]:
        return [a.to_json() for a in sorted(self._attempts.values(), key=lambda a: a.key())]

    def load_json(self, rows: Iterable[dict]) -> None:
        self.ingest(rows)


def mock_attempts(
    student_ids: Iterable[str],
    class_topics: Dict[str, List[str]],
    seed: int,
    tests_per_topic: int = 2,
    start: Optional[datetime] = None,
) -> List[TestAttempt]:
    """Seeded synthetic attempts standing in for the live learning tool."""
    rng = random.Random(seed)
    base = start or datetime(2026, 1, 5, tzinfo=timezone.utc)
    out: List[TestAttempt] = []
    for student_id in student_ids:
        skill = rng.uniform(25, 95)
        for class_id, topics in sorted(class_topics.items()):
            for topic in topics:
                for t in range(1, tests_per_topic + 1):
                    attempts = rng.randint(1, 3)
                    for attempt_no in range(1, attempts + 1):
                        wobble = rng.uniform(-15, 15) + 5 * (attempt_no - 1)
                        score = max(0.0, min(100.0, skill + wobble))
                        out.append(
                            TestAttempt(
                                student_id=student_id,
                                class_id=class_id,
                                topic=topic,
                                test_id=f"{class_id}.{topic}.t{t}",
                                attempt_no=attempt_no,
                                score=round(score, 1),
                                taken_at=base + timedelta(hours=len(out)),
                            )
                        )
    return out
