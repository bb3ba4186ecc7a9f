from __future__ import annotations

import random
from datetime import datetime, timezone

import pytest

from studyloop.core import BlockKind, TimeBlock, WeekTimetable

# Monday 2026-01-05 00:00 UTC, a stable week anchor for tests
WEEK0 = datetime(2026, 1, 5, tzinfo=timezone.utc)


def block(day, start, end, kind=BlockKind.OTHER, class_id=None):
    return TimeBlock(day=day, start_min=start, end_min=end, kind=kind, class_id=class_id)


def class_block(day, start, end, class_id):
    return TimeBlock(day=day, start_min=start, end_min=end, kind=BlockKind.CLASS, class_id=class_id)


def timetable(student_id="s1", blocks=(), waking=()):
    return WeekTimetable(student_id=student_id, blocks=tuple(blocks), waking=waking)


def random_timetable(rng: random.Random, student_id="s1", max_blocks=6):
    """Non-overlapping random commitments on a default waking window."""
    blocks = []
    for _ in range(rng.randint(0, max_blocks)):
        day = rng.randrange(7)
        start = rng.randrange(0, 1380, 5)
        length = rng.randrange(30, 181, 15)
        end = min(1440, start + length)
        kind = rng.choice([BlockKind.CLASS, BlockKind.WORK, BlockKind.OTHER])
        cid = f"c{rng.randint(1, 3)}" if kind == BlockKind.CLASS else None
        candidate = TimeBlock(day, start, end, kind, cid)
        if any(candidate.overlaps(b) for b in blocks):
            continue
        blocks.append(candidate)
    return WeekTimetable(student_id=student_id, blocks=tuple(blocks))


@pytest.fixture
def rng():
    return random.Random(20260105)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        status = "PASS" if report.passed else "FAIL"
        print(f"[ACCEPTANCE] {item.name}: {status}")
