// Progress bands and the checklist bar: red -> amber at 0.34, amber ->
// green at 0.67, reward toast on completion.

import { beforeEach, describe, expect, it } from 'vitest';

import { applyTickResult, checklistCard } from '../src/checklist.js';
import { bandFor, checklistTransition } from '../src/viewmodel.js';
import { makeChecklist } from './fixtures.js';

beforeEach(() => {
  document.body.innerHTML = '';
});

describe('band thresholds', () => {
  it('matches the engine boundaries exactly', () => {
    expect(bandFor(0)).toBe('red');
    expect(bandFor(0.3399)).toBe('red');
    expect(bandFor(0.34)).toBe('amber');
    expect(bandFor(0.6699)).toBe('amber');
    expect(bandFor(0.67)).toBe('green');
    expect(bandFor(1)).toBe('green');
  });

  it('reports crossings and completion', () => {
    expect(checklistTransition(0.2, 0.3).crossed).toBe(false);
    expect(checklistTransition(0.3, 0.34)).toMatchObject({ crossed: true, bandAfter: 'amber' });
    expect(checklistTransition(0.5, 0.67)).toMatchObject({ crossed: true, bandAfter: 'green' });
    expect(checklistTransition(0.9, 1)).toMatchObject({ completed: true });
    expect(checklistTransition(1, 1).completed).toBe(false);
  });
});

describe('checklist bar in the DOM', () => {
  function mountCard(ticked: number): HTMLElement {
    const host = document.createElement('div');
    host.innerHTML = checklistCard(makeChecklist(ticked));
    document.body.appendChild(host);
    return host.querySelector<HTMLElement>('.checklist-card')!;
  }

  it('renders the band color for the current progress', () => {
    expect(mountCard(0).querySelector('.progress-fill')!.className).toContain('band-red');
    document.body.innerHTML = '';
    expect(mountCard(3).querySelector('.progress-fill')!.className).toContain('band-amber');
    document.body.innerHTML = '';
    expect(mountCard(6).querySelector('.progress-fill')!.className).toContain('band-green');
  });

  it('walks red -> amber -> green as ticks land', () => {
    const card = mountCard(0);
    const bar = () => card.querySelector<HTMLDivElement>('.progress-fill')!;

    applyTickResult(card, 'c-web', 2 / 6, 'red', { crossed: false, completed: false });
    expect(bar().className).toContain('band-red');

    applyTickResult(card, 'c-web', 3 / 6, 'amber', { crossed: true, completed: false });
    expect(bar().className).toContain('band-amber');
    expect(bar().style.width).toBe('50%');

    applyTickResult(card, 'c-web', 5 / 6, 'green', { crossed: true, completed: false });
    expect(bar().className).toContain('band-green');
  });

  it('raises a reward toast at full completion', () => {
    const card = mountCard(5);
    applyTickResult(card, 'c-web', 1, 'green', { crossed: false, completed: true });
    const toasts = [...document.querySelectorAll('.toast-reward')];
    expect(toasts.some((t) => t.textContent!.includes('Every source for c-web'))).toBe(true);
  });

  it('raises a toast on a band crossing', () => {
    const card = mountCard(2);
    applyTickResult(card, 'c-web', 3 / 6, 'amber', { crossed: true, completed: false });
    const toasts = [...document.querySelectorAll('.toast-reward')];
    expect(toasts.some((t) => t.textContent!.includes('now amber'))).toBe(true);
  });
});
