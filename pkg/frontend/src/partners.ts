// Study partners: helper suggestions for a class topic, group creation,
// rating a finished group session, and the "helpful" endorsement.

import { ApiClient, PartnerCandidate, Student, StudyGroup } from './api.js';
import { showToast } from './toast.js';

export interface PartnersContext {
  client: ApiClient;
  student: Student;
  root: HTMLElement;
}

export function renderPartners(ctx: PartnersContext): void {
  ctx.root.innerHTML = `
    <section class="partners">
      <h2>Study partners</h2>
      <p class="hint">Only classmates who share their schedule appear here.</p>
      <form id="partner-search">
        <select id="class-select">
          ${ctx.student.classes.map((c) => `<option value="${c}">${c}</option>`).join('')}
        </select>
        <input id="topic" placeholder="topic, e.g. css" required>
        <button type="submit">Find partners</button>
      </form>
      <div id="partner-results"></div>
      <div id="group-panel"></div>
    </section>`;

  ctx.root.querySelector<HTMLFormElement>('#partner-search')!.addEventListener('submit', async (event) => {
    event.preventDefault();
    const classId = ctx.root.querySelector<HTMLSelectElement>('#class-select')!.value;
    const topic = ctx.root.querySelector<HTMLInputElement>('#topic')!.value.trim();
    if (!topic) return;
    try {
      const payload = await ctx.client.partnerSuggestions(ctx.student.student_id, classId, topic);
      renderCandidates(ctx, classId, topic, payload.status, payload.candidates);
    } catch (error) {
      showToast(String((error as Error).message));
    }
  });
}

function renderCandidates(
  ctx: PartnersContext,
  classId: string,
  topic: string,
  status: string,
  candidates: PartnerCandidate[],
): void {
  const results = ctx.root.querySelector<HTMLDivElement>('#partner-results')!;
  if (status === 'not_weak') {
    results.innerHTML = `<p class="empty">You are doing fine on ${topic}; no help needed right now.</p>`;
    return;
  }
  if (!candidates.length) {
    results.innerHTML = '<p class="empty">No matching classmates right now.</p>';
    return;
  }
  results.innerHTML = `
    <ul class="candidate-list">
      ${candidates
        .map(
          (c) => `
        <li>
          <strong>${c.display_name}</strong>
          <span class="chip">topic score ${Math.round(c.topic_score)}</span>
          <button class="invite" data-partner="${c.student_id}">Invite to study</button>
        </li>`,
        )
        .join('')}
    </ul>`;
  results.querySelectorAll<HTMLButtonElement>('.invite').forEach((button) => {
    button.addEventListener('click', async () => {
      try {
        const group = await ctx.client.createGroup(
          ctx.student.student_id,
          [ctx.student.student_id, button.dataset.partner!],
          classId,
          topic,
        );
        showToast('Study group created. Rate the session afterwards.', 'reward');
        renderGroupPanel(ctx, group);
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });
}

export function renderGroupPanel(ctx: PartnersContext, group: StudyGroup): void {
  const panel = ctx.root.querySelector<HTMLDivElement>('#group-panel')!;
  const partners = group.members.filter((m) => m !== ctx.student.student_id);
  panel.innerHTML = `
    <div class="group-card" data-group="${group.group_id}">
      <h3>Group session: ${group.topic} (${group.class_id})</h3>
      ${partners
        .map(
          (partner) => `
        <div class="partner-row" data-partner="${partner}">
          <span>${partner}</span>
          <select class="rate" data-partner="${partner}">
            <option value="">rate 1-5</option>
            ${[1, 2, 3, 4, 5].map((v) => `<option value="${v}">${v}</option>`).join('')}
          </select>
          <button class="endorse gone" data-partner="${partner}">Endorse as helpful</button>
        </div>`,
        )
        .join('')}
    </div>`;

  panel.querySelectorAll<HTMLSelectElement>('.rate').forEach((select) => {
    select.addEventListener('change', async () => {
      const rating = Number(select.value);
      if (!rating) return;
      const partner = select.dataset.partner!;
      try {
        await ctx.client.rateGroup(group.group_id, ctx.student.student_id, { [partner]: rating });
        showToast(`Rating saved for ${partner}.`);
        const endorse = panel.querySelector<HTMLButtonElement>(`.endorse[data-partner="${partner}"]`)!;
        endorse.classList.toggle('gone', rating < 4);
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });
  panel.querySelectorAll<HTMLButtonElement>('.endorse').forEach((button) => {
    button.addEventListener('click', async () => {
      try {
        await ctx.client.endorse(group.group_id, ctx.student.student_id, button.dataset.partner!);
        button.textContent = 'Endorsed ✓';
        button.disabled = true;
        showToast('Endorsement sent.', 'reward');
      } catch (error) {
        showToast(String((error as Error).message));
      }
    });
  });
}
