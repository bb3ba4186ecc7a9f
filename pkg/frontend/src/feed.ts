// Notification feed. Polls the API every 30 seconds in lieu of push and
// raises a toast for anything that arrived since the previous poll.

import { ApiClient, FeedItem } from './api.js';
import { feedItemText, newFeedItems } from './viewmodel.js';
import { showToast } from './toast.js';

export const FEED_POLL_MS = 30_000;

export function renderFeed(root: HTMLElement, items: FeedItem[]): void {
  root.innerHTML = `
    <section class="feed">
      <h2>Notifications</h2>
      ${items.length ? '' : '<p class="empty">Nothing yet. Check back after your first session.</p>'}
      <ul class="feed-list">
        ${[...items]
          .reverse()
          .map(
            (item) => `
          <li class="feed-item feed-${item.type}">
            <span class="when">${new Date(item.delivered_at).toLocaleString()}</span>
            ${item.type === 'reward' ? '<span class="chip chip-reward">reward</span>' : ''}
            <span class="text">${feedItemText(item)}</span>
          </li>`,
          )
          .join('')}
      </ul>
    </section>`;
}

export interface FeedPoller {
  stop: () => void;
  pollNow: () => Promise<FeedItem[]>;
}

export function startFeedPolling(
  client: ApiClient,
  studentId: string,
  onItems: (all: FeedItem[], fresh: FeedItem[]) => void,
  intervalMs: number = FEED_POLL_MS,
): FeedPoller {
  let previous: FeedItem[] = [];
  let stopped = false;

  const poll = async (): Promise<FeedItem[]> => {
    const { items } = await client.getFeed(studentId);
    const fresh = newFeedItems(previous, items);
    previous = items;
    if (!stopped) onItems(items, fresh);
    return items;
  };

  const timer = window.setInterval(() => {
    void poll().catch(() => undefined);
  }, intervalMs);
  void poll().catch(() => undefined);

  return {
    stop: () => {
      stopped = true;
      window.clearInterval(timer);
    },
    pollNow: poll,
  };
}

export function toastFreshItems(fresh: FeedItem[]): void {
  for (const item of fresh) {
    showToast(feedItemText(item), item.type === 'reward' ? 'reward' : 'info');
  }
}
