// Weekly calendar with the session check-in/check-out flow. The checkout
// modal carries the two 1-5 sliders; submit stays locked until both have
// been deliberately set.

import { ApiClient, Metrics, Session, Student } from './api.js';
import {
  BAND_CSS,
  CheckoutDraft,
  DAY_NAMES,
  checkoutReady,
  formatMinutes,
  sessionAction,
  sessionDisplayState,
} from './viewmodel.js';
import { showToast } from './toast.js';

export interface CalendarContext {
  client: ApiClient;
  student: Student;
  root: HTMLElement;
  now: () => string;
}

export async function renderCalendar(ctx: CalendarContext): Promise<void> {
  const [sessions, metrics] = await Promise.all([
    ctx.client.getSessions(ctx.student.student_id),
    ctx.client.getMetrics(ctx.student.student_id),
  ]);
  ctx.root.innerHTML = `
    <section class="calendar">
      <h2>Your study week</h2>
      ${adherenceBadge(metrics)}
      <div id="session-grid">${sessionCards(sessions.sessions, ctx.now())}</div>
    </section>`;
  wireSessionButtons(ctx, sessions.sessions);
}

function adherenceBadge(metrics: Metrics): string {
  if (metrics.adherence === null) {
    return '<p class="adherence">No sessions resolved yet this term.</p>';
  }
  const pct = Math.round(metrics.adherence * 100);
  return `<p class="adherence ${BAND_CSS[metrics.band ?? 'red']}">
    Schedule adherence: ${pct}% (${metrics.band})
  </p>`;
}

function sessionCards(sessions: Session[], nowIso: string): string {
  if (!sessions.length) return '<p class="empty">No sessions scheduled yet.</p>';
  return sessions
    .map((s) => {
      const display = sessionDisplayState(s, nowIso);
      const action = sessionAction(s, nowIso);
      return `
      <div class="session state-${display}" data-session="${s.session_id}">
        <strong>${s.class_id}</strong>
        ${DAY_NAMES[s.block.day]} ${formatMinutes(s.block.start)}-${formatMinutes(s.block.end)}
        <span class="chip">${s.week}</span>
        <span class="state">${display.replace('_', ' ')}</span>
        ${action === 'check-in' ? `<button class="checkin" data-session="${s.session_id}">Check in</button>` : ''}
        ${action === 'check-out' ? `<button class="checkout" data-session="${s.session_id}">Check out</button>` : ''}
        ${s.effectiveness !== null ? `<span class="ratings">effectiveness ${s.effectiveness}/5, environment ${s.environment}/5</span>` : ''}
      </div>`;
    })
    .join('');
}

function wireSessionButtons(ctx: CalendarContext, sessions: Session[]): void {
  ctx.root.querySelectorAll<HTMLButtonElement>('.checkin').forEach((button) => {
    button.addEventListener('click', async () => {
      try {
        await ctx.client.checkIn(button.dataset.session!);
        showToast('Checked in. Good luck with the session.', 'reward');
        await renderCalendar(ctx);
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });
  ctx.root.querySelectorAll<HTMLButtonElement>('.checkout').forEach((button) => {
    const session = sessions.find((s) => s.session_id === button.dataset.session)!;
    button.addEventListener('click', () => {
      openCheckoutModal(session, async (effectiveness, environment) => {
        try {
          await ctx.client.checkOut(session.session_id, effectiveness, environment);
          const metrics = await ctx.client.getMetrics(ctx.student.student_id);
          const band = metrics.band ?? 'red';
          showToast(`Session saved. Adherence is ${band}.`, 'reward');
          await renderCalendar(ctx);
        } catch (error) {
          showToast(String((error as Error).message));
        }
      });
    });
  });
}

export function openCheckoutModal(
  session: Session,
  onSubmit: (effectiveness: number, environment: number) => void | Promise<void>,
): HTMLElement {
  const draft: CheckoutDraft = { effectiveness: null, environment: null };
  const overlay = document.createElement('div');
  overlay.className = 'modal-overlay';
  overlay.innerHTML = `
    <div class="modal checkout-modal">
      <h3>Check out of ${session.class_id}</h3>
      <p class="hint">Rate the session before you wrap up. Both sliders are needed.</p>
      <label>How effective was the session?
        <input id="eff-slider" type="range" min="1" max="5" step="1" value="3">
        <span id="eff-value">not set</span>
      </label>
      <label>How was the study environment?
        <input id="env-slider" type="range" min="1" max="5" step="1" value="3">
        <span id="env-value">not set</span>
      </label>
      <div class="modal-actions">
        <button id="checkout-cancel">Back</button>
        <button id="checkout-submit" disabled>Submit ratings</button>
      </div>
    </div>`;
  document.body.appendChild(overlay);

  const submit = overlay.querySelector<HTMLButtonElement>('#checkout-submit')!;
  const wire = (sliderId: string, valueId: string, key: keyof CheckoutDraft) => {
    const slider = overlay.querySelector<HTMLInputElement>(`#${sliderId}`)!;
    slider.addEventListener('input', () => {
      draft[key] = Number(slider.value);
      overlay.querySelector(`#${valueId}`)!.textContent = `${slider.value}/5`;
      submit.disabled = !checkoutReady(draft);
    });
  };
  wire('eff-slider', 'eff-value', 'effectiveness');
  wire('env-slider', 'env-value', 'environment');

  overlay.querySelector<HTMLButtonElement>('#checkout-cancel')!.addEventListener('click', () => {
    overlay.remove();
  });
  submit.addEventListener('click', async () => {
    if (!checkoutReady(draft)) return;
    await onSubmit(draft.effectiveness!, draft.environment!);
    overlay.remove();
  });
  return overlay;
}
