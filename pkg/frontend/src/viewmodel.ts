// Pure view logic. Everything here derives from API payloads alone so a
// page refresh rebuilds the exact same UI, and it is what the test suite
// pins down: wizard tunnelling, checkout gating, and the progress bands.

import type { FeedItem, Session, Student } from './api.js';

export type WizardStep = 'timetable' | 'commitments' | 'preference' | 'suggestions';
export const WIZARD_ORDER: WizardStep[] = ['timetable', 'commitments', 'preference', 'suggestions'];

export function hasClassBlocks(student: Student): boolean {
  return !!student.timetable && student.timetable.blocks.some((b) => b.kind === 'class');
}

// The furthest step the student may currently reach. Commitments are an
// optional refinement of the timetable, so completing the timetable
// unlocks them; suggestions stay locked until the preference is stored.
export function furthestStep(student: Student): WizardStep {
  if (!hasClassBlocks(student)) return 'timetable';
  if (student.preference === null) return 'preference';
  return 'suggestions';
}

export function canReach(step: WizardStep, student: Student): boolean {
  const limit = furthestStep(student);
  if (limit === 'preference' && step === 'commitments') return true;
  return WIZARD_ORDER.indexOf(step) <= WIZARD_ORDER.indexOf(limit);
}

export function wizardComplete(student: Student): boolean {
  return hasClassBlocks(student) && student.preference !== null;
}

// Same thresholds the engine publishes: red below 0.34, amber from 0.34,
// green from 0.67.
export function bandFor(progress: number): 'red' | 'amber' | 'green' {
  if (progress >= 0.67) return 'green';
  if (progress >= 0.34) return 'amber';
  return 'red';
}

export const BAND_CSS: Record<string, string> = {
  red: 'band-red',
  amber: 'band-amber',
  green: 'band-green',
};

export interface ChecklistTransition {
  bandBefore: 'red' | 'amber' | 'green';
  bandAfter: 'red' | 'amber' | 'green';
  crossed: boolean;
  completed: boolean;
}

export function checklistTransition(before: number, after: number): ChecklistTransition {
  const bandBefore = bandFor(before);
  const bandAfter = bandFor(after);
  return {
    bandBefore,
    bandAfter,
    crossed: bandBefore !== bandAfter,
    completed: after >= 1 && before < 1,
  };
}

// Checkout modal: both sliders must have been deliberately set before the
// submit button unlocks.
export interface CheckoutDraft {
  effectiveness: number | null;
  environment: number | null;
}

export function checkoutReady(draft: CheckoutDraft): boolean {
  return (
    draft.effectiveness !== null &&
    draft.environment !== null &&
    draft.effectiveness >= 1 &&
    draft.effectiveness <= 5 &&
    draft.environment >= 1 &&
    draft.environment <= 5
  );
}

export type SessionAction = 'wait' | 'check-in' | 'check-out' | 'none';

// What the calendar lets the student do with a session right now. A
// session opened after its window has passed renders as missed even if
// the server sweep has not caught up yet.
export function sessionAction(session: Session, nowIso: string): SessionAction {
  const now = Date.parse(nowIso);
  const ends = Date.parse(session.ends_at);
  if (session.state === 'notified' && now <= ends) return 'check-in';
  if (session.state === 'checked_in') return 'check-out';
  if ((session.state === 'scheduled' || session.state === 'notified') && now > ends) return 'none';
  if (session.state === 'scheduled') return 'wait';
  return 'none';
}

export function sessionDisplayState(session: Session, nowIso: string): string {
  const now = Date.parse(nowIso);
  const ends = Date.parse(session.ends_at);
  if ((session.state === 'scheduled' || session.state === 'notified') && now > ends) {
    return 'missed';
  }
  return session.state;
}

// Feed polling: report only what arrived since the previous poll so the
// toast layer can announce it.
export function newFeedItems(previous: FeedItem[], current: FeedItem[]): FeedItem[] {
  return current.slice(previous.length);
}

export function feedItemText(item: FeedItem): string {
  if (item.type === 'reward') return String(item.payload ?? 'You earned a reward.');
  return String(item.message ?? '');
}

export function formatMinutes(totalMinutes: number): string {
  const hours = Math.floor(totalMinutes / 60);
  const minutes = totalMinutes % 60;
  return `${String(hours).padStart(2, '0')}:${String(minutes).padStart(2, '0')}`;
}

export const DAY_NAMES = ['Mon', 'Tue', 'Wed', 'Thu', 'Fri', 'Sat', 'Sun'];

export function rejectToken(classId: string, day: number, start: number): string {
  return `${classId}:${day}:${start}`;
}

// ISO week tag for "this week" in the student's browser clock, matching
// the server's Monday-anchored tags.
export function currentWeekTag(now: Date = new Date()): string {
  const utc = new Date(Date.UTC(now.getFullYear(), now.getMonth(), now.getDate()));
  const day = utc.getUTCDay() || 7;
  utc.setUTCDate(utc.getUTCDate() + 4 - day);
  const yearStart = new Date(Date.UTC(utc.getUTCFullYear(), 0, 1));
  const week = Math.ceil(((utc.getTime() - yearStart.getTime()) / 86400000 + 1) / 7);
  return `${utc.getUTCFullYear()}-W${String(week).padStart(2, '0')}`;
}
