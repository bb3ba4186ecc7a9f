// Transient reward/notification toasts stacked bottom-right.

let container: HTMLDivElement | null = null;

function ensureContainer(): HTMLDivElement {
  if (!container || !document.body.contains(container)) {
    container = document.createElement('div');
    container.id = 'toast-stack';
    document.body.appendChild(container);
  }
  return container;
}

export function showToast(message: string, flavor: 'reward' | 'info' = 'info', ttlMs = 6000): HTMLElement {
  const stack = ensureContainer();
  const toast = document.createElement('div');
  toast.className = `toast toast-${flavor}`;
  toast.textContent = message;
  stack.appendChild(toast);
  window.setTimeout(() => toast.remove(), ttlMs);
  return toast;
}
