// Typed client for the studyloop HTTP API. Every mutation in the UI goes
// through here; the UI holds no state that cannot be rebuilt from these
// endpoints.

export interface TimeBlock {
  day: number;
  start: number;
  end: number;
  kind: 'class' | 'work' | 'other' | 'study';
  class_id?: string;
}

export interface Timetable {
  student_id: string;
  blocks: TimeBlock[];
  waking: [number, number][];
}

export interface Student {
  student_id: string;
  display_name: string;
  timezone: string;
  classes: string[];
  share_schedule: boolean;
  preference: 'early' | 'late' | null;
  responses: Record<string, number>;
  timetable: Timetable | null;
  created_at: string | null;
}

export interface Suggestion {
  class_id: string;
  block: TimeBlock;
  score: number;
}

export interface SuggestionsResponse {
  suggestions: Suggestion[];
  unschedulable: string[];
}

export interface Session {
  session_id: string;
  student_id: string;
  class_id: string;
  block: TimeBlock;
  week: string;
  starts_at: string;
  ends_at: string;
  state: 'scheduled' | 'notified' | 'checked_in' | 'checked_out' | 'missed';
  effectiveness: number | null;
  environment: number | null;
}

export interface ChecklistItem {
  item_id: string;
  class_id: string;
  week: string;
  kind: string;
  label: string;
  required: boolean;
  detail: string;
  ticked_at: string | null;
}

export interface Checklist {
  class_id: string;
  week: string;
  items: ChecklistItem[];
  sparse: boolean;
  progress: number;
  band: 'red' | 'amber' | 'green';
}

export interface TickResponse {
  item_id: string;
  changed: boolean;
  progress: number;
  band: 'red' | 'amber' | 'green';
  crossed_band: boolean;
  completed: boolean;
}

export interface FeedItem {
  type: 'notification' | 'reward';
  message?: string;
  payload?: string;
  kind?: string;
  purpose?: string;
  delivered_at: string;
  [key: string]: unknown;
}

export interface PartnerCandidate {
  student_id: string;
  display_name: string;
  topic_score: number;
}

export interface PartnerSuggestions {
  status: string;
  candidates: PartnerCandidate[];
}

export interface StudyGroup {
  group_id: string;
  class_id: string;
  topic: string;
  members: string[];
  created_by: string;
  created_at: string;
  ratings: Record<string, Record<string, number>>;
}

export interface WeekMetrics {
  adherence: number | null;
  band: string | null;
  scheduled: number;
  checked_out: number;
  missed: number;
}

export interface Metrics {
  student_id: string;
  adherence: number | null;
  band: 'red' | 'amber' | 'green' | null;
  weeks: Record<string, WeekMetrics>;
  sessions: { scheduled: number; checked_out: number; missed: number; open: number };
  cycles_completed: Record<string, number>;
  streaks: Record<string, number>;
  scores: Record<string, number> | null;
  session_recommendations: { class_id: string; add_sessions: number }[];
  relocation_proposals: unknown[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(method: string, url: string, body?: unknown): Promise<T> {
  const response = await fetch(url, {
    method,
    headers: body !== undefined ? { 'Content-Type': 'application/json' } : {},
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const text = await response.text();
  const data = text ? JSON.parse(text) : {};
  if (!response.ok) {
    throw new ApiError(response.status, data.code ?? 'error', data.message ?? response.statusText);
  }
  return data as T;
}

export class ApiClient {
  constructor(readonly base: string = '') {}

  getStudent(id: string): Promise<Student> {
    return request('GET', `${this.base}/students/${encodeURIComponent(id)}`);
  }

  putTimetable(id: string, blocks: TimeBlock[]): Promise<Timetable> {
    return request('PUT', `${this.base}/students/${encodeURIComponent(id)}/timetable`, { blocks });
  }

  putPreference(id: string, preference: 'early' | 'late'): Promise<unknown> {
    return request('PUT', `${this.base}/students/${encodeURIComponent(id)}/preference`, { preference });
  }

  getSuggestions(id: string, rejects: string[] = []): Promise<SuggestionsResponse> {
    const params = rejects.map((r) => `reject=${encodeURIComponent(r)}`).join('&');
    const query = params ? `?${params}` : '';
    return request('GET', `${this.base}/students/${encodeURIComponent(id)}/schedule/suggestions${query}`);
  }

  acceptSuggestion(id: string, classId: string, day: number, start: number): Promise<Session> {
    return request('POST', `${this.base}/students/${encodeURIComponent(id)}/sessions`, {
      class_id: classId,
      day,
      start,
    });
  }

  getSessions(id: string, week?: string): Promise<{ sessions: Session[] }> {
    const query = week ? `?week=${encodeURIComponent(week)}` : '';
    return request('GET', `${this.base}/students/${encodeURIComponent(id)}/sessions${query}`);
  }

  checkIn(sessionId: string): Promise<Session> {
    return request('POST', `${this.base}/sessions/${encodeURIComponent(sessionId)}/checkin`);
  }

  checkOut(sessionId: string, effectiveness: number, environment: number): Promise<Session> {
    return request('POST', `${this.base}/sessions/${encodeURIComponent(sessionId)}/checkout`, {
      effectiveness,
      environment,
    });
  }

  getChecklists(id: string, week: string): Promise<{ week: string; checklists: Checklist[] }> {
    return request(
      'GET',
      `${this.base}/students/${encodeURIComponent(id)}/checklist/${encodeURIComponent(week)}`,
    );
  }

  tickItem(itemId: string): Promise<TickResponse> {
    return request('POST', `${this.base}/checklist/items/${encodeURIComponent(itemId)}/tick`);
  }

  submitNote(id: string, classId: string, week: string, text: string): Promise<unknown> {
    return request('POST', `${this.base}/students/${encodeURIComponent(id)}/notes`, {
      class_id: classId,
      week,
      text,
    });
  }

  partnerSuggestions(id: string, classId: string, topic: string): Promise<PartnerSuggestions> {
    const query = `?class_id=${encodeURIComponent(classId)}&topic=${encodeURIComponent(topic)}`;
    return request(
      'GET',
      `${this.base}/students/${encodeURIComponent(id)}/partners/suggestions${query}`,
    );
  }

  createGroup(createdBy: string, members: string[], classId: string, topic: string): Promise<StudyGroup> {
    return request('POST', `${this.base}/study-groups`, {
      created_by: createdBy,
      members,
      class_id: classId,
      topic,
    });
  }

  rateGroup(groupId: string, rater: string, ratings: Record<string, number>): Promise<StudyGroup> {
    return request('POST', `${this.base}/study-groups/${encodeURIComponent(groupId)}/ratings`, {
      rater,
      ratings,
    });
  }

  endorse(groupId: string, fromStudent: string, toStudent: string): Promise<unknown> {
    return request('POST', `${this.base}/study-groups/${encodeURIComponent(groupId)}/endorse`, {
      from_student: fromStudent,
      to_student: toStudent,
    });
  }

  getFeed(id: string): Promise<{ items: FeedItem[] }> {
    return request('GET', `${this.base}/students/${encodeURIComponent(id)}/feed`);
  }

  getMetrics(id: string): Promise<Metrics> {
    return request('GET', `${this.base}/students/${encodeURIComponent(id)}/metrics`);
  }
}
