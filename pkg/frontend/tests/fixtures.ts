// Shared fixtures: API payloads shaped exactly like the engine's responses,
// plus a stub client the screens can run against without a server.

import { vi } from 'vitest';
import type {
  ApiClient,
  Checklist,
  FeedItem,
  Metrics,
  Session,
  Student,
  Suggestion,
} from '../src/api.js';

export function makeStudent(overrides: Partial<Student> = {}): Student {
  return {
    student_id: 's1',
    display_name: 'Avery Quinn',
    timezone: 'UTC',
    classes: ['c-web', 'c-db'],
    share_schedule: false,
    preference: null,
    responses: {},
    timetable: null,
    created_at: '2026-01-05T00:00:00+00:00',
    ...overrides,
  };
}

export function onboarded(overrides: Partial<Student> = {}): Student {
  return makeStudent({
    preference: 'late',
    timetable: {
      student_id: 's1',
      blocks: [
        { day: 0, start: 540, end: 660, kind: 'class', class_id: 'c-web' },
        { day: 1, start: 840, end: 960, kind: 'class', class_id: 'c-db' },
        { day: 0, start: 1080, end: 1140, kind: 'study', class_id: 'c-web' },
      ],
      waking: Array(7).fill([480, 1380]) as [number, number][],
    },
    ...overrides,
  });
}

export function makeSession(overrides: Partial<Session> = {}): Session {
  return {
    session_id: 'sess-000001',
    student_id: 's1',
    class_id: 'c-web',
    block: { day: 0, start: 1080, end: 1140, kind: 'study', class_id: 'c-web' },
    week: '2026-W02',
    starts_at: '2026-01-05T18:00:00+00:00',
    ends_at: '2026-01-05T19:00:00+00:00',
    state: 'notified',
    effectiveness: null,
    environment: null,
    ...overrides,
  };
}

export function makeChecklist(tickedCount = 0): Checklist {
  const items = Array.from({ length: 6 }, (_, i) => ({
    item_id: `s1|c-web:2026-W02:${String(i + 1).padStart(2, '0')}`,
    class_id: 'c-web',
    week: '2026-W02',
    kind: 'shared_link',
    label: `Read source ${i + 1}`,
    required: true,
    detail: '',
    ticked_at: i < tickedCount ? '2026-01-05T10:00:00+00:00' : null,
  }));
  items.push({
    item_id: 's1|c-web:2026-W02:07',
    class_id: 'c-web',
    week: '2026-W02',
    kind: 'own_article',
    label: 'Find and read an article of your own on this topic',
    required: false,
    detail: '',
    ticked_at: null,
  });
  const progress = tickedCount / 6;
  return {
    class_id: 'c-web',
    week: '2026-W02',
    items,
    sparse: false,
    progress,
    band: progress >= 0.67 ? 'green' : progress >= 0.34 ? 'amber' : 'red',
  };
}

export function makeSuggestions(): Suggestion[] {
  return [
    { class_id: 'c-web', block: { day: 0, start: 1080, end: 1140, kind: 'study', class_id: 'c-web' }, score: 1 },
    { class_id: 'c-db', block: { day: 1, start: 1080, end: 1140, kind: 'study', class_id: 'c-db' }, score: 1 },
  ];
}

export function makeMetrics(overrides: Partial<Metrics> = {}): Metrics {
  return {
    student_id: 's1',
    adherence: 0.75,
    band: 'green',
    weeks: { '2026-W02': { adherence: 0.75, band: 'green', scheduled: 4, checked_out: 3, missed: 1 } },
    sessions: { scheduled: 4, checked_out: 3, missed: 1, open: 0 },
    cycles_completed: { scheduling: 3, preparation: 1, group_study: 0 },
    streaks: { scheduling: 2, preparation: 1, group_study: 0 },
    scores: { self_perceived: 4.2, objective: 4.9, change_over_time: 5.1 },
    session_recommendations: [],
    relocation_proposals: [],
    ...overrides,
  };
}

export function makeFeed(): FeedItem[] {
  return [
    {
      type: 'notification',
      message: 'Your c-web study session starts at 18:00. Check in when you sit down. (Dr R. Ellis, your instructor)',
      purpose: 'session_start',
      trigger_type: 'signal',
      delivered_at: '2026-01-05T17:50:00+00:00',
    },
    {
      type: 'notification',
      message:
        'You have been matched with a classmate to study css together. Take turns explaining the key concepts to each other in your own words. (Dr R. Ellis, your instructor)',
      purpose: 'pair_prompt',
      trigger_type: 'signal',
      delivered_at: '2026-01-06T09:00:00+00:00',
    },
    {
      type: 'reward',
      kind: 'praise_message',
      payload: 'Great session. Your consistency is paying off.',
      delivered_at: '2026-01-05T19:00:00+00:00',
    },
  ];
}

export function stubClient(overrides: Partial<Record<keyof ApiClient, unknown>> = {}): ApiClient {
  const base = {
    base: '',
    getStudent: vi.fn(async () => onboarded()),
    putTimetable: vi.fn(async (_id: string, blocks: unknown[]) => ({
      student_id: 's1',
      blocks,
      waking: Array(7).fill([480, 1380]),
    })),
    putPreference: vi.fn(async () => ({})),
    getSuggestions: vi.fn(async () => ({ suggestions: makeSuggestions(), unschedulable: [] })),
    acceptSuggestion: vi.fn(async () => makeSession({ state: 'scheduled' })),
    getSessions: vi.fn(async () => ({ sessions: [makeSession()] })),
    checkIn: vi.fn(async () => makeSession({ state: 'checked_in' })),
    checkOut: vi.fn(async () => makeSession({ state: 'checked_out', effectiveness: 4, environment: 5 })),
    getChecklists: vi.fn(async () => ({ week: '2026-W02', checklists: [makeChecklist(2)] })),
    tickItem: vi.fn(async () => ({
      item_id: 'x', changed: true, progress: 0.5, band: 'amber', crossed_band: true, completed: false,
    })),
    submitNote: vi.fn(async () => ({})),
    partnerSuggestions: vi.fn(async () => ({
      status: 'ok',
      candidates: [
        { student_id: 'alice', display_name: 'Alice P', topic_score: 95 },
        { student_id: 'dan', display_name: 'Dan K', topic_score: 88 },
      ],
    })),
    createGroup: vi.fn(async () => ({
      group_id: 'grp-000001', class_id: 'c-web', topic: 'css',
      members: ['s1', 'alice'], created_by: 's1',
      created_at: '2026-01-06T10:00:00+00:00', ratings: {},
    })),
    rateGroup: vi.fn(async () => ({
      group_id: 'grp-000001', class_id: 'c-web', topic: 'css',
      members: ['s1', 'alice'], created_by: 's1',
      created_at: '2026-01-06T10:00:00+00:00', ratings: { s1: { alice: 5 } },
    })),
    endorse: vi.fn(async () => ({})),
    getFeed: vi.fn(async () => ({ items: makeFeed() })),
    getMetrics: vi.fn(async () => makeMetrics()),
  };
  return { ...base, ...overrides } as unknown as ApiClient;
}
