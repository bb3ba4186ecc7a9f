// Weekly reading checklist: completion bar in the engine's band colors,
// reward toasts on band crossings and on finishing every source.

import { ApiClient, Checklist, Student } from './api.js';
import { BAND_CSS, currentWeekTag } from './viewmodel.js';
import { showToast } from './toast.js';

export interface ChecklistContext {
  client: ApiClient;
  student: Student;
  root: HTMLElement;
  week?: string;
}

export async function renderChecklists(ctx: ChecklistContext): Promise<void> {
  const week = ctx.week ?? currentWeekTag();
  const payload = await ctx.client.getChecklists(ctx.student.student_id, week);
  ctx.root.innerHTML = `
    <section class="checklists">
      <h2>Reading list, week ${week}</h2>
      ${payload.checklists.length ? '' : '<p class="empty">No materials published for this week yet.</p>'}
      <div id="checklist-cards">
        ${payload.checklists.map(checklistCard).join('')}
      </div>
    </section>`;
  payload.checklists.forEach((checklist) => wireChecklist(ctx, checklist));
}

export function checklistCard(checklist: Checklist): string {
  const pct = Math.round(checklist.progress * 100);
  return `
    <div class="checklist-card" data-class="${checklist.class_id}">
      <h3>${checklist.class_id}</h3>
      ${checklist.sparse ? '<p class="hint">Nothing required this week; add your own reading.</p>' : ''}
      <div class="progress-track">
        <div class="progress-fill ${BAND_CSS[checklist.band]}" data-progress-bar="${checklist.class_id}"
             style="width: ${pct}%"></div>
      </div>
      <span class="progress-label" data-progress-label="${checklist.class_id}">${pct}%</span>
      <ul class="check-items">
        ${checklist.items
          .map(
            (item) => `
          <li>
            <label>
              <input type="checkbox" data-item="${item.item_id}"
                     ${item.ticked_at ? 'checked disabled' : ''}>
              ${item.label}${item.required ? '' : ' <em>(optional)</em>'}
            </label>
          </li>`,
          )
          .join('')}
      </ul>
      <form class="note-form" data-class="${checklist.class_id}">
        <input name="note" placeholder="Summary notes for this week...">
        <button type="submit">Save notes</button>
      </form>
    </div>`;
}

function wireChecklist(ctx: ChecklistContext, checklist: Checklist): void {
  const card = ctx.root.querySelector<HTMLDivElement>(
    `.checklist-card[data-class="${checklist.class_id}"]`,
  )!;
  card.querySelectorAll<HTMLInputElement>('input[type="checkbox"]').forEach((box) => {
    box.addEventListener('change', async () => {
      if (!box.checked) return;
      box.disabled = true;
      try {
        const result = await ctx.client.tickItem(box.dataset.item!);
        applyTickResult(card, checklist.class_id, result.progress, result.band, {
          crossed: result.crossed_band,
          completed: result.completed,
        });
      } catch (error) {
        box.disabled = false;
        box.checked = false;
        showToast(String((error as Error).message));
      }
    });
  });
  card.querySelector<HTMLFormElement>('.note-form')!.addEventListener('submit', async (event) => {
    event.preventDefault();
    const input = card.querySelector<HTMLInputElement>('input[name="note"]')!;
    if (!input.value.trim()) return;
    try {
      await ctx.client.submitNote(ctx.student.student_id, checklist.class_id, checklist.week, input.value);
      input.value = '';
      showToast('Notes saved. Future-you says thanks.', 'reward');
    } catch (error) {
      showToast(String((error as Error).message));
    }
  });
}

// Exported for tests: move the bar, recolor it at band crossings, toast on
// crossing and on completion.
export function applyTickResult(
  card: HTMLElement,
  classId: string,
  progress: number,
  band: 'red' | 'amber' | 'green',
  outcome: { crossed: boolean; completed: boolean },
): void {
  const bar = card.querySelector<HTMLDivElement>(`[data-progress-bar="${classId}"]`)!;
  const label = card.querySelector<HTMLSpanElement>(`[data-progress-label="${classId}"]`)!;
  bar.style.width = `${Math.round(progress * 100)}%`;
  bar.className = `progress-fill ${BAND_CSS[band]}`;
  label.textContent = `${Math.round(progress * 100)}%`;
  if (outcome.crossed && !outcome.completed) {
    showToast(`Reading progress for ${classId} is now ${band}.`, 'reward');
  }
  if (outcome.completed) {
    showToast(`Every source for ${classId} read this week. Superb preparation.`, 'reward');
  }
}
