// First-run wizard: timetable -> commitments -> preference -> suggestions.
// The order is tunnelled: each screen only renders once the API state
// shows the earlier steps are done, so deep links cannot skip ahead.

import { ApiClient, Student, Suggestion, TimeBlock } from './api.js';
import {
  DAY_NAMES,
  WizardStep,
  canReach,
  formatMinutes,
  furthestStep,
  rejectToken,
} from './viewmodel.js';
import { showToast } from './toast.js';

export interface WizardContext {
  client: ApiClient;
  student: Student;
  root: HTMLElement;
  onFinished: () => void;
}

interface DraftBlock extends TimeBlock {}

const STEP_TITLES: Record<WizardStep, string> = {
  timetable: 'Step 1 of 4: your class timetable',
  commitments: 'Step 2 of 4: other weekly commitments',
  preference: 'Step 3 of 4: when do you work best?',
  suggestions: 'Step 4 of 4: your weekly study sessions',
};

export function renderWizard(ctx: WizardContext, requested?: WizardStep): void {
  const step = requested && canReach(requested, ctx.student) ? requested : furthestStep(ctx.student);
  switch (step) {
    case 'timetable':
      renderBlocksScreen(ctx, 'timetable');
      break;
    case 'commitments':
      renderBlocksScreen(ctx, 'commitments');
      break;
    case 'preference':
      renderPreference(ctx);
      break;
    case 'suggestions':
      void renderSuggestions(ctx);
      break;
  }
}

function dayOptions(): string {
  return DAY_NAMES.map((name, i) => `<option value="${i}">${name}</option>`).join('');
}

function blockRows(blocks: TimeBlock[]): string {
  if (!blocks.length) return '<p class="empty">Nothing entered yet.</p>';
  return `<ul class="block-list">${blocks
    .map(
      (b) =>
        `<li>${DAY_NAMES[b.day]} ${formatMinutes(b.start)}-${formatMinutes(b.end)} ` +
        `<span class="chip chip-${b.kind}">${b.kind}${b.class_id ? ` ${b.class_id}` : ''}</span></li>`,
    )
    .join('')}</ul>`;
}

function renderBlocksScreen(ctx: WizardContext, step: 'timetable' | 'commitments'): void {
  const classStep = step === 'timetable';
  const existing: DraftBlock[] = ctx.student.timetable
    ? ctx.student.timetable.blocks.map((b) => ({ ...b }))
    : [];
  const draft = existing.filter((b) => (classStep ? b.kind === 'class' : b.kind !== 'class'));
  const others = existing.filter((b) => (classStep ? b.kind !== 'class' : b.kind === 'class'));

  ctx.root.innerHTML = `
    <section class="wizard" data-step="${step}">
      <h2>${STEP_TITLES[step]}</h2>
      <p class="hint">${
        classStep
          ? 'Enter each class meeting so study sessions can be planned around them.'
          : 'Add work shifts, sport or anything else that repeats weekly. You can skip this.'
      }</p>
      <form id="block-form">
        ${classStep ? '<input id="class-id" placeholder="class code, e.g. c-web" required>' : ''}
        <select id="day">${dayOptions()}</select>
        <input id="start" type="time" value="09:00" required>
        <input id="end" type="time" value="11:00" required>
        ${classStep ? '' : '<select id="kind"><option value="work">work</option><option value="other">other</option></select>'}
        <button type="submit">Add</button>
      </form>
      <div id="draft"></div>
      <div class="wizard-nav">
        <button id="next" ${classStep && draft.length === 0 ? 'disabled' : ''}>
          ${classStep ? 'Save classes and continue' : 'Save and continue'}
        </button>
      </div>
    </section>`;

  const refresh = () => {
    const target = ctx.root.querySelector<HTMLDivElement>('#draft')!;
    target.innerHTML = blockRows(draft);
    const next = ctx.root.querySelector<HTMLButtonElement>('#next')!;
    if (classStep) next.disabled = draft.length === 0;
  };
  refresh();

  ctx.root.querySelector<HTMLFormElement>('#block-form')!.addEventListener('submit', (event) => {
    event.preventDefault();
    const minutes = (id: string) => {
      const [h, m] = ctx.root.querySelector<HTMLInputElement>(`#${id}`)!.value.split(':').map(Number);
      return h * 60 + m;
    };
    const block: DraftBlock = {
      day: Number(ctx.root.querySelector<HTMLSelectElement>('#day')!.value),
      start: minutes('start'),
      end: minutes('end'),
      kind: classStep
        ? 'class'
        : (ctx.root.querySelector<HTMLSelectElement>('#kind')!.value as 'work' | 'other'),
    };
    if (classStep) {
      block.class_id = ctx.root.querySelector<HTMLInputElement>('#class-id')!.value.trim();
      if (!block.class_id) return;
    }
    if (block.end <= block.start) {
      showToast('The end time needs to come after the start time.');
      return;
    }
    draft.push(block);
    refresh();
  });

  ctx.root.querySelector<HTMLButtonElement>('#next')!.addEventListener('click', async () => {
    try {
      const timetable = await ctx.client.putTimetable(ctx.student.student_id, [...others, ...draft]);
      ctx.student.timetable = timetable;
      ctx.student.classes = Array.from(
        new Set(timetable.blocks.filter((b) => b.kind === 'class').map((b) => b.class_id!)),
      ).sort();
      renderWizard(ctx, classStep ? 'commitments' : 'preference');
    } catch (error) {
      showToast(String((error as Error).message));
    }
  });
}

function renderPreference(ctx: WizardContext): void {
  ctx.root.innerHTML = `
    <section class="wizard" data-step="preference">
      <h2>${STEP_TITLES.preference}</h2>
      <p class="hint">Sessions will be suggested in your preferred part of the day first.</p>
      <div class="choice-row">
        <button class="choice" data-pref="early">Earlier, mornings suit me</button>
        <button class="choice" data-pref="late">Later, evenings suit me</button>
      </div>
    </section>`;
  ctx.root.querySelectorAll<HTMLButtonElement>('.choice').forEach((button) => {
    button.addEventListener('click', async () => {
      const pref = button.dataset.pref as 'early' | 'late';
      try {
        await ctx.client.putPreference(ctx.student.student_id, pref);
        ctx.student.preference = pref;
        renderWizard(ctx, 'suggestions');
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });
}

async function renderSuggestions(ctx: WizardContext, rejects: string[] = []): Promise<void> {
  const payload = await ctx.client.getSuggestions(ctx.student.student_id, rejects);
  const pending: Suggestion[] = payload.suggestions;
  ctx.root.innerHTML = `
    <section class="wizard" data-step="suggestions">
      <h2>${STEP_TITLES.suggestions}</h2>
      <p class="hint">One weekly slot per class. Accept it, or ask for another.</p>
      <div id="suggestion-list"></div>
      ${payload.unschedulable.length
        ? `<p class="warn">No room could be found for: ${payload.unschedulable.join(', ')}</p>`
        : ''}
      <div class="wizard-nav"><button id="finish">Go to my calendar</button></div>
    </section>`;

  const list = ctx.root.querySelector<HTMLDivElement>('#suggestion-list')!;
  list.innerHTML = pending
    .map(
      (s, index) => `
      <div class="suggestion" data-index="${index}">
        <strong>${s.class_id}</strong>
        ${DAY_NAMES[s.block.day]} ${formatMinutes(s.block.start)}-${formatMinutes(s.block.end)}
        <button class="accept" data-index="${index}">Accept</button>
        <button class="another" data-index="${index}">Suggest another</button>
      </div>`,
    )
    .join('');

  list.querySelectorAll<HTMLButtonElement>('.accept').forEach((button) => {
    button.addEventListener('click', async () => {
      const suggestion = pending[Number(button.dataset.index)];
      try {
        await ctx.client.acceptSuggestion(
          ctx.student.student_id,
          suggestion.class_id,
          suggestion.block.day,
          suggestion.block.start,
        );
        button.closest('.suggestion')!.innerHTML =
          `<strong>${suggestion.class_id}</strong> booked for ` +
          `${DAY_NAMES[suggestion.block.day]} ${formatMinutes(suggestion.block.start)} ✓`;
        showToast(`Weekly ${suggestion.class_id} session saved.`, 'reward');
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });

  list.querySelectorAll<HTMLButtonElement>('.another').forEach((button) => {
    button.addEventListener('click', () => {
      const suggestion = pending[Number(button.dataset.index)];
      const token = rejectToken(suggestion.class_id, suggestion.block.day, suggestion.block.start);
      void renderSuggestions(ctx, [...rejects, token]);
    });
  });

  ctx.root.querySelector<HTMLButtonElement>('#finish')!.addEventListener('click', ctx.onFinished);
}
