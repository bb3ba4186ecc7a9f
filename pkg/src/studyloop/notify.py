"""Central trigger queue and delivery pipeline.

Every feature enqueues trigger requests here; nothing reaches a student
except through this pipeline. At dispatch time each due request is gated
by the motivation/ability quadrant rule: fired triggers are rendered from
the template catalog (always positive in tone and signed by the
instructor) and delivered to the in-app feed plus a webhook stub standing
in for mobile push; a deferred trigger gets one retry a day later and is
then dropped with an audit record. Students whose habit loop has gone
internal only receive every second plain reminder.

Channel sends are retried with backoff and dead-lettered after the retry
budget. Dispatch is idempotent for a fixed `now`: requests leave the
pending state the first time they are processed.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from importlib import resources
from typing import Callable, Dict, List, Optional, Tuple

from .core import ValidationError
from .fbm import TriggerDecision, TriggerType
from .hooks import TriggerSource
from .performance import HabitCategory


class Purpose(str, Enum):
    SESSION_START = "session_start"
    CHECK_OUT = "check_out"
    READING_LIST = "reading_list"
    POST_CLASS_NOTES = "post_class_notes"
    PLACE_SUGGESTION = "place_suggestion"
    INVITE_FRIENDS = "invite_friends"
    PAIR_PROMPT = "pair_prompt"


# Plain reminders: these are the purposes an internally-triggered student
# no longer needs every time, so alternate occurrences are skipped.
REMINDER_PURPOSES = frozenset(
    {Purpose.SESSION_START, Purpose.CHECK_OUT, Purpose.READING_LIST, Purpose.POST_CLASS_NOTES}
)


class Channel(str, Enum):
    IN_APP_FEED = "in_app_feed"
    WEBHOOK_STUB = "webhook_stub"


class RequestStatus(str, Enum):
    PENDING = "pending"
    DELIVERED = "delivered"
    SKIPPED = "skipped"
    DROPPED = "dropped"


@dataclass
class TriggerRequest:
    request_id: str
    student_id: str
    category: HabitCategory
    purpose: Purpose
    due_at: datetime
    payload: dict = field(default_factory=dict)
    status: RequestStatus = RequestStatus.PENDING
    deferred_once: bool = False

    def key(self) -> Tuple[str, str, str]:
        return (self.student_id, self.purpose.value, self.due_at.isoformat())

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "student_id": self.student_id,
            "category": self.category.value,
            "purpose": self.purpose.value,
            "due_at": self.due_at.isoformat(),
            "payload": self.payload,
            "status": self.status.value,
            "deferred_once": self.deferred_once,
        }


@dataclass(frozen=True)
class Delivery:
    request_id: str
    student_id: str
    purpose: Purpose
    trigger_type: TriggerType
    trigger_source: TriggerSource
    message: str
    channel: Channel
    delivered_at: datetime

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "student_id": self.student_id,
            "purpose": self.purpose.value,
            "trigger_type": self.trigger_type.value,
            "trigger_source": self.trigger_source.value,
            "message": self.message,
            "channel": self.channel.value,
            "delivered_at": self.delivered_at.isoformat(),
        }


@dataclass(frozen=True)
class DispatchOutcome:
    """What happened to one due request during a dispatch pass."""

    request: TriggerRequest
    status: RequestStatus
    decision: TriggerDecision
    source: Optional[TriggerSource] = None
    deliveries: Tuple[Delivery, ...] = ()
    deferred_to: Optional[datetime] = None


class TemplateCatalog:
    """Message templates per (purpose, trigger type), instructor signed."""

    def __init__(self, data: dict):
        self.signature = data["signature"]
        self.templates: Dict[Purpose, Dict[TriggerType, str]] = {}
        for purpose_name, by_type in data["templates"].items():
            purpose = Purpose(purpose_name)
            self.templates[purpose] = {TriggerType(t): text for t, text in by_type.items()}
        for purpose in Purpose:
            if purpose not in self.templates:
                raise ValidationError(f"template catalog missing purpose {purpose.value}")
            for ttype in TriggerType:
                if ttype not in self.templates[purpose]:
                    raise ValidationError(
                        f"template catalog missing {purpose.value}/{ttype.value}"
                    )

    @classmethod
    def load(cls, path: Optional[str] = None) -> "TemplateCatalog":
        if path is None:
            raw = resources.files("studyloop.data").joinpath("templates.json").read_text()
        else:
            with open(path) as fh:
                raw = fh.read()
        return cls(json.loads(raw))

    def all_texts(self) -> List[str]:
        out = [self.signature]
        for by_type in self.templates.values():
            out.extend(by_type.values())
        return out

    def render(self, purpose: Purpose, trigger_type: TriggerType, context: dict, instructor: str) -> str:
        body = self.templates[purpose][trigger_type].format_map(_Defaulting(context))
        signed = self.signature.format_map(_Defaulting({"instructor": instructor}))
        return f"{body} ({signed})"


class _Defaulting(dict):
    def __missing__(self, key: str) -> str:
        return ""


class TriggerQueue:
    """Durable-by-snapshot request queue, idempotent on (student, purpose, due)."""

    def __init__(self) -> None:
        self.requests: Dict[str, TriggerRequest] = {}
        self._by_key: Dict[Tuple[str, str, str], str] = {}
        self._counter = 0

    def _next_id(self) -> str:
        self._counter += 1
        return f"trig-{self._counter:06d}"

    def enqueue(
        self,
        student_id: str,
        category: HabitCategory,
        purpose: Purpose,
        due_at: datetime,
        now: datetime,
        payload: Optional[dict] = None,
    ) -> TriggerRequest:
        if due_at < now:
            raise ValidationError(f"due_at {due_at.isoformat()} is in the past")
        probe = TriggerRequest("", student_id, category, purpose, due_at)
        existing_id = self._by_key.get(probe.key())
        if existing_id is not None:
            return self.requests[existing_id]
        request = TriggerRequest(
            request_id=self._next_id(),
            student_id=student_id,
            category=category,
            purpose=purpose,
            due_at=due_at,
            payload=payload or {},
        )
        self.requests[request.request_id] = request
        self._by_key[request.key()] = request.request_id
        return request

    def due(self, now: datetime) -> List[TriggerRequest]:
        pending = [
            r for r in self.requests.values()
            if r.status == RequestStatus.PENDING and r.due_at <= now
        ]
        pending.sort(key=lambda r: (r.due_at, r.request_id))
        return pending

    def reschedule(self, request: TriggerRequest, due_at: datetime) -> None:
        del self._by_key[request.key()]
        request.due_at = due_at
        request.deferred_once = True
        self._by_key[request.key()] = request.request_id

    def pending_exists(self, student_id: str, purpose: Purpose) -> bool:
        return any(
            r.student_id == student_id and r.purpose == purpose and r.status == RequestStatus.PENDING
            for r in self.requests.values()
        )

    def to_json(self) -> dict:
        return {
            "requests": [self.requests[rid].to_json() for rid in sorted(self.requests)],
            "counter": self._counter,
        }

    def load_json(self, data: dict) -> None:
        self._counter = data.get("counter", 0)
        for row in data.get("requests", []):
            request = TriggerRequest(
                request_id=row["request_id"],
                student_id=row["student_id"],
                category=HabitCategory(row["category"]),
                purpose=Purpose(row["purpose"]),
                due_at=datetime.fromisoformat(row["due_at"]),
                payload=row.get("payload", {}),
                status=RequestStatus(row.get("status", "pending")),
                deferred_once=row.get("deferred_once", False),
            )
            self.requests[request.request_id] = request
            self._by_key[request.key()] = request.request_id


class Dispatcher:
    """Drains due requests through the gate, renderer and channels."""

    def __init__(
        self,
        queue: TriggerQueue,
        templates: TemplateCatalog,
        instructor: str,
        feed_sink: Callable[[str, Delivery], None],
        webhook_sender: Optional[Callable[[dict], None]] = None,
        event_sink: Optional[Callable[[dict], None]] = None,
        defer_retry_hours: int = 24,
        max_retries: int = 3,
        retry_backoff_s: Optional[List[float]] = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.queue = queue
        self.templates = templates
        self.instructor = instructor
        self.feed_sink = feed_sink
        self.webhook_sender = webhook_sender
        self.event_sink = event_sink or (lambda record: None)
        self.defer_retry_hours = defer_retry_hours
        self.max_retries = max_retries
        self.retry_backoff_s = retry_backoff_s if retry_backoff_s is not None else [0.5, 1.0, 2.0]
        self.sleeper = sleeper
        self.dead_letters: List[dict] = []
        # per (student, purpose): how many internally-sourced reminder
        # occurrences have come up; evens are skipped (halved frequency)
        self._internal_counts: Dict[Tuple[str, str], int] = {}

    def dispatch_due(
        self,
        now: datetime,
        decide: Callable[[TriggerRequest], Tuple[TriggerDecision, TriggerSource]],
    ) -> List[DispatchOutcome]:
        outcomes: List[DispatchOutcome] = []
        for request in self.queue.due(now):
            decision, source = decide(request)
            if not decision.fired:
                outcomes.append(self._defer(request, decision, now))
                continue
            if (
                source == TriggerSource.INTERNAL
                and request.purpose in REMINDER_PURPOSES
                and decision.trigger_type == TriggerType.SIGNAL
            ):
                key = (request.student_id, request.purpose.value)
                self._internal_counts[key] = self._internal_counts.get(key, 0) + 1
                if self._internal_counts[key] % 2 == 0:
                    request.status = RequestStatus.SKIPPED
                    self.event_sink(
                        {
                            "type": "trigger_skipped_internal",
                            "request_id": request.request_id,
                            "student_id": request.student_id,
                            "purpose": request.purpose.value,
                            "at": now.isoformat(),
                        }
                    )
                    outcomes.append(
                        DispatchOutcome(request, RequestStatus.SKIPPED, decision, source)
                    )
                    continue
            outcomes.append(self._deliver(request, decision, source, now))
        return outcomes

    def _defer(self, request: TriggerRequest, decision: TriggerDecision, now: datetime) -> DispatchOutcome:
        if request.deferred_once:
            request.status = RequestStatus.DROPPED
            self.event_sink(
                {
                    "type": "trigger_dropped",
                    "request_id": request.request_id,
                    "student_id": request.student_id,
                    "purpose": request.purpose.value,
                    "reason": "deferred twice",
                    "at": now.isoformat(),
                }
            )
            return DispatchOutcome(request, RequestStatus.DROPPED, decision)
        retry_at = now + timedelta(hours=self.defer_retry_hours)
        self.queue.reschedule(request, retry_at)
        self.event_sink(
            {
                "type": "trigger_deferred",
                "request_id": request.request_id,
                "student_id": request.student_id,
                "purpose": request.purpose.value,
                "retry_at": retry_at.isoformat(),
                "at": now.isoformat(),
            }
        )
        return DispatchOutcome(request, RequestStatus.PENDING, decision, deferred_to=retry_at)

    def _deliver(
        self,
        request: TriggerRequest,
        decision: TriggerDecision,
        source: TriggerSource,
        now: datetime,
    ) -> DispatchOutcome:
        message = self.templates.render(
            request.purpose, decision.trigger_type, request.payload, self.instructor
        )
        deliveries = []
        feed_delivery = Delivery(
            request_id=request.request_id,
            student_id=request.student_id,
            purpose=request.purpose,
            trigger_type=decision.trigger_type,
            trigger_source=source,
            message=message,
            channel=Channel.IN_APP_FEED,
            delivered_at=now,
        )
        self.feed_sink(request.student_id, feed_delivery)
        deliveries.append(feed_delivery)
        if self.webhook_sender is not None:
            webhook_delivery = self._send_webhook(request, decision, source, message, now)
            if webhook_delivery is not None:
                deliveries.append(webhook_delivery)
        request.status = RequestStatus.DELIVERED
        for d in deliveries:
            self.event_sink({"type": "delivery", **d.to_json()})
        return DispatchOutcome(request, RequestStatus.DELIVERED, decision, source, tuple(deliveries))

    def _send_webhook(
        self,
        request: TriggerRequest,
        decision: TriggerDecision,
        source: TriggerSource,
        message: str,
        now: datetime,
    ) -> Optional[Delivery]:
        payload = {
            "student_id": request.student_id,
            "purpose": request.purpose.value,
            "message": message,
            "trigger_type": decision.trigger_type.value,
            "delivered_at": now.isoformat(),
        }
        for attempt in range(self.max_retries + 1):
            try:
                self.webhook_sender(payload)
                return Delivery(
                    request_id=request.request_id,
                    student_id=request.student_id,
                    purpose=request.purpose,
                    trigger_type=decision.trigger_type,
                    trigger_source=source,
                    message=message,
                    channel=Channel.WEBHOOK_STUB,
                    delivered_at=now,
                )
            except Exception as exc:
                if attempt < self.max_retries:
                    backoff = self.retry_backoff_s[min(attempt, len(self.retry_backoff_s) - 1)]
                    if backoff:
                        self.sleeper(backoff)
                    continue
                self.dead_letters.append({"payload": payload, "error": str(exc)})
                self.event_sink(
                    {
                        "type": "webhook_dead_letter",
                        "request_id": request.request_id,
                        "student_id": request.student_id,
                        "error": str(exc),
                        "at": now.isoformat(),
                    }
                )
        return None
