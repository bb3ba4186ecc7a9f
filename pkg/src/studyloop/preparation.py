"""Class preparation: weekly reading checklists and the reminders around class.

Instructors publish a materials manifest per class per week; the engine
turns it into a checklist with one required item per available source
(shared links expand one item per link) plus a single optional
find-your-own-article item. Progress counts required items only and maps
onto the red/amber/green band; band crossings and full completion feed
rewards back through the habit loop.

Two reminders bracket each class meeting: a reading-list nudge well ahead
of class (clamped so it never leaks into the previous week) and a
write-your-summary-notes prompt shortly after class ends.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .core import TimeBlock, ValidationError, block_end_at, block_start_at, color_band

REMINDER_LEAD_HOURS = 48
POST_CLASS_DELAY_MIN = 15


class MaterialKind(str, Enum):
    LECTURE_NOTES = "lecture_notes"
    TUTORIAL_NOTES = "tutorial_notes"
    TEXTBOOK = "textbook"
    SHARED_LINK = "shared_link"
    PERSONAL_NOTES_PREV = "personal_notes_prev"
    OWN_ARTICLE = "own_article"


_LABELS = {
    MaterialKind.LECTURE_NOTES: "Read this week's lecture notes",
    MaterialKind.TUTORIAL_NOTES: "Read this week's tutorial notes",
    MaterialKind.TEXTBOOK: "Read the textbook passage",
    MaterialKind.SHARED_LINK: "Read the shared link",
    MaterialKind.PERSONAL_NOTES_PREV: "Review your notes from last week",
    MaterialKind.OWN_ARTICLE: "Find and read an article of your own on this topic",
}


@dataclass
class ChecklistItem:
    item_id: str
    class_id: str
    week: str
    kind: MaterialKind
    label: str
    required: bool
    detail: str = ""
    ticked_at: Optional[datetime] = None

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "class_id": self.class_id,
            "week": self.week,
            "kind": self.kind.value,
            "label": self.label,
            "required": self.required,
            "detail": self.detail,
            "ticked_at": self.ticked_at.isoformat() if self.ticked_at else None,
        }


@dataclass
class Checklist:
    class_id: str
    week: str
    items: List[ChecklistItem]
    sparse: bool = False

    def progress(self) -> float:
        """Ticked required / total required; a checklist with no required
        items (sparse) never progresses."""
        required = [i for i in self.items if i.required]
        if not required:
            return 0.0
        return sum(1 for i in required if i.ticked_at is not None) / len(required)

    def band(self) -> str:
        return color_band(self.progress())

    def complete(self) -> bool:
        required = [i for i in self.items if i.required]
        return bool(required) and all(i.ticked_at is not None for i in required)

    def find(self, item_id: str) -> Optional[ChecklistItem]:
        for item in self.items:
            if item.item_id == item_id:
                return item
        return None

    def to_json(self) -> dict:
        return {
            "class_id": self.class_id,
            "week": self.week,
            "items": [i.to_json() for i in self.items],
            "sparse": self.sparse,
            "progress": self.progress(),
            "band": self.band(),
        }


@dataclass(frozen=True)
class MaterialsManifest:
    """What the instructor published for one class week."""

    class_id: str
    week: str
    lecture_notes: bool = False
    tutorial_notes: bool = False
    textbook: Optional[str] = None
    links: Tuple[str, ...] = ()
    personal_notes_prev: bool = False
    cancelled: bool = False

    @classmethod
    def from_json(cls, data: dict) -> "MaterialsManifest":
        try:
            return cls(
                class_id=data["class_id"],
                week=str(data["week"]),
                lecture_notes=bool(data.get("lecture_notes", False)),
                tutorial_notes=bool(data.get("tutorial_notes", False)),
                textbook=data.get("textbook"),
                links=tuple(data.get("links", ())),
                personal_notes_prev=bool(data.get("personal_notes_prev", False)),
                cancelled=bool(data.get("cancelled", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed materials manifest: {data!r}") from exc

    def to_json(self) -> dict:
        return {
            "class_id": self.class_id,
            "week": self.week,
            "lecture_notes": self.lecture_notes,
            "tutorial_notes": self.tutorial_notes,
            "textbook": self.textbook,
            "links": list(self.links),
            "personal_notes_prev": self.personal_notes_prev,
            "cancelled": self.cancelled,
        }

    def is_empty(self) -> bool:
        return not (
            self.lecture_notes
            or self.tutorial_notes
            or self.textbook
            or self.links
            or self.personal_notes_prev
        )


def generate_checklist(manifest: MaterialsManifest, id_prefix: str = "") -> Optional[Checklist]:
    """Build the week's checklist from the manifest; None for a cancelled week.

    An empty manifest yields only the optional own-article item and the
    checklist is flagged sparse.
    """
    if manifest.cancelled:
        return None
    items: List[ChecklistItem] = []
    n = 0

    def add(kind: MaterialKind, required: bool, detail: str = "") -> None:
        nonlocal n
        n += 1
        label = _LABELS[kind]
        if detail and kind == MaterialKind.TEXTBOOK:
            label = f"{label} ({detail})"
        items.append(
            ChecklistItem(
                item_id=f"{id_prefix}{manifest.class_id}:{manifest.week}:{n:02d}",
                class_id=manifest.class_id,
                week=manifest.week,
                kind=kind,
                label=label,
                required=required,
                detail=detail,
            )
        )

    if manifest.lecture_notes:
        add(MaterialKind.LECTURE_NOTES, required=True)
    if manifest.tutorial_notes:
        add(MaterialKind.TUTORIAL_NOTES, required=True)
    if manifest.textbook:
        add(MaterialKind.TEXTBOOK, required=True, detail=str(manifest.textbook))
    for link in manifest.links:
        add(MaterialKind.SHARED_LINK, required=True, detail=link)
    if manifest.personal_notes_prev:
        add(MaterialKind.PERSONAL_NOTES_PREV, required=True)
    add(MaterialKind.OWN_ARTICLE, required=False)

    return Checklist(
        class_id=manifest.class_id,
        week=manifest.week,
        items=items,
        sparse=manifest.is_empty(),
    )


@dataclass(frozen=True)
class TickResult:
    checklist: Checklist
    changed: bool
    progress_before: float
    progress_after: float
    band_before: str
    band_after: str

    @property
    def crossed_band(self) -> bool:
        return self.changed and self.band_before != self.band_after

    @property
    def completed(self) -> bool:
        return self.changed and self.progress_after >= 1.0 and self.progress_before < 1.0


def tick(checklist: Checklist, item_id: str, now: datetime) -> TickResult:
    """Mark one item read. Ticking an already-ticked item is a no-op."""
    item = checklist.find(item_id)
    if item is None:
        raise ValidationError(f"no checklist item {item_id!r}")
    before = checklist.progress()
    band_before = checklist.band()
    changed = False
    if item.ticked_at is None:
        item.ticked_at = now
        changed = True
    after = checklist.progress()
    return TickResult(
        checklist=checklist,
        changed=changed,
        progress_before=before,
        progress_after=after,
        band_before=band_before,
        band_after=checklist.band(),
    )


def pre_class_reminder_due(
    class_block: TimeBlock, start_of_week: datetime, lead_hours: int = REMINDER_LEAD_HOURS
) -> datetime:
    """When the reading-list reminder should fire: class start minus the lead,
    clamped so it never lands before the week itself starts."""
    due = block_start_at(start_of_week, class_block) - timedelta(hours=lead_hours)
    return max(due, start_of_week)


def post_class_prompt_due(
    class_block: TimeBlock, start_of_week: datetime, delay_min: int = POST_CLASS_DELAY_MIN
) -> datetime:
    """When the summary-notes prompt should fire: shortly after class ends."""
    return block_end_at(start_of_week, class_block) + timedelta(minutes=delay_min)
