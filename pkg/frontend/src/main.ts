// App bootstrap: resolve the student, route between wizard and the main
// tabs. A new student is tunnelled through the wizard; a returning one
// lands on the calendar.

import { ApiClient } from './api.js';
import { renderCalendar } from './calendar.js';
import { renderChecklists } from './checklist.js';
import { renderFeed, startFeedPolling, toastFreshItems } from './feed.js';
import { renderPartners } from './partners.js';
import { showToast } from './toast.js';
import { renderWizard } from './wizard.js';
import { wizardComplete } from './viewmodel.js';

const TABS = [
  ['calendar', 'Calendar'],
  ['checklist', 'Reading'],
  ['partners', 'Partners'],
  ['feed', 'Notifications'],
] as const;

type Tab = (typeof TABS)[number][0];

export async function boot(root: HTMLElement, client: ApiClient, studentId: string): Promise<void> {
  let student;
  try {
    student = await client.getStudent(studentId);
  } catch (error) {
    root.innerHTML = `<p class="warn">Could not load student ${studentId}: ${(error as Error).message}</p>`;
    return;
  }

  const app = document.createElement('div');
  app.id = 'screen';
  root.innerHTML = `
    <header>
      <h1>studyloop</h1>
      <span class="who">${student.display_name}</span>
      <nav id="tabs" class="gone">
        ${TABS.map(([key, label]) => `<button data-tab="${key}">${label}</button>`).join('')}
      </nav>
    </header>`;
  root.appendChild(app);

  const poller = startFeedPolling(client, studentId, (all, fresh) => {
    toastFreshItems(fresh);
    if (location.hash === '#/feed') renderFeed(app, all);
  });
  window.addEventListener('beforeunload', poller.stop);

  const showTab = async (tab: Tab) => {
    location.hash = `#/${tab}`;
    switch (tab) {
      case 'calendar':
        await renderCalendar({ client, student, root: app, now: () => new Date().toISOString() });
        break;
      case 'checklist':
        await renderChecklists({ client, student, root: app });
        break;
      case 'partners':
        renderPartners({ client, student, root: app });
        break;
      case 'feed': {
        const { items } = await client.getFeed(studentId);
        renderFeed(app, items);
        break;
      }
    }
  };

  const enterMainApp = () => {
    root.querySelector('#tabs')!.classList.remove('gone');
    void showTab('calendar');
  };

  root.querySelectorAll<HTMLButtonElement>('#tabs button').forEach((button) => {
    button.addEventListener('click', () => void showTab(button.dataset.tab as Tab));
  });

  if (wizardComplete(student)) {
    enterMainApp();
  } else {
    renderWizard({ client, student, root: app, onFinished: enterMainApp });
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const params = new URLSearchParams(location.search);
  const studentId = params.get('student') ?? localStorage.getItem('studyloop.student') ?? '';
  if (!studentId) {
    document.getElementById('app')!.innerHTML =
      '<p class="warn">Open this page as ?student=&lt;your id&gt; to sign in.</p>';
  } else {
    localStorage.setItem('studyloop.student', studentId);
    void boot(document.getElementById('app')!, new ApiClient(''), studentId).catch((error) => {
      showToast(String(error));
    });
  }
}
