// Checkout modal: both sliders must be deliberately set before submit
// unlocks, and the submitted values are what the sliders say.

import { beforeEach, describe, expect, it, vi } from 'vitest';

import { openCheckoutModal } from '../src/calendar.js';
import { checkoutReady, sessionDisplayState } from '../src/viewmodel.js';
import { makeSession } from './fixtures.js';

beforeEach(() => {
  document.body.innerHTML = '';
});

function slide(overlay: HTMLElement, id: string, value: string) {
  const slider = overlay.querySelector<HTMLInputElement>(`#${id}`)!;
  slider.value = value;
  slider.dispatchEvent(new Event('input', { bubbles: true }));
}

describe('checkout readiness', () => {
  it('requires both ratings', () => {
    expect(checkoutReady({ effectiveness: null, environment: null })).toBe(false);
    expect(checkoutReady({ effectiveness: 4, environment: null })).toBe(false);
    expect(checkoutReady({ effectiveness: null, environment: 2 })).toBe(false);
    expect(checkoutReady({ effectiveness: 4, environment: 2 })).toBe(true);
  });

  it('rejects out-of-range ratings', () => {
    expect(checkoutReady({ effectiveness: 0, environment: 3 })).toBe(false);
    expect(checkoutReady({ effectiveness: 3, environment: 6 })).toBe(false);
  });
});

describe('checkout modal', () => {
  it('submit stays locked until both sliders are set', () => {
    const overlay = openCheckoutModal(makeSession({ state: 'checked_in' }), vi.fn());
    const submit = overlay.querySelector<HTMLButtonElement>('#checkout-submit')!;
    expect(submit.disabled).toBe(true);

    slide(overlay, 'eff-slider', '4');
    expect(submit.disabled).toBe(true);

    slide(overlay, 'env-slider', '2');
    expect(submit.disabled).toBe(false);
  });

  it('clicking a locked submit never fires the callback', () => {
    const onSubmit = vi.fn();
    const overlay = openCheckoutModal(makeSession({ state: 'checked_in' }), onSubmit);
    overlay.querySelector<HTMLButtonElement>('#checkout-submit')!.click();
    expect(onSubmit).not.toHaveBeenCalled();
  });

  it('submits the slider values and closes', async () => {
    const onSubmit = vi.fn();
    const overlay = openCheckoutModal(makeSession({ state: 'checked_in' }), onSubmit);
    slide(overlay, 'eff-slider', '5');
    slide(overlay, 'env-slider', '2');
    overlay.querySelector<HTMLButtonElement>('#checkout-submit')!.click();
    await vi.waitFor(() => expect(onSubmit).toHaveBeenCalledWith(5, 2));
    expect(document.body.contains(overlay)).toBe(false);
  });

  it('cancel closes without submitting', () => {
    const onSubmit = vi.fn();
    const overlay = openCheckoutModal(makeSession({ state: 'checked_in' }), onSubmit);
    overlay.querySelector<HTMLButtonElement>('#checkout-cancel')!.click();
    expect(onSubmit).not.toHaveBeenCalled();
    expect(document.body.contains(overlay)).toBe(false);
  });
});

describe('late session display', () => {
  it('a session opened after its window renders as missed', () => {
    const session = makeSession({ state: 'notified' });
    expect(sessionDisplayState(session, '2026-01-05T20:00:00+00:00')).toBe('missed');
    expect(sessionDisplayState(session, '2026-01-05T18:30:00+00:00')).toBe('notified');
  });
});
