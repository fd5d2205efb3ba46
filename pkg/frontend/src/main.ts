/** Browser bootstrap: wires the upload form, polls the session, renders. */

import { createApiClient } from './api.js';
import { canSubmit, missingRoles, slotProblem, type FormSlots } from './form.js';
import { ResultsCache, pollUntilDone } from './poll.js';
import { UPLOAD_ROLES, type UploadRole } from './types.js';
import { renderInlineError, renderResults, renderStatusBanner } from './views.js';

const client = createApiClient(
  (window as { PADDLEKIT_BASE_URL?: string }).PADDLEKIT_BASE_URL ?? '',
);
const cache = new ResultsCache();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function readSlots(): { slots: FormSlots; files: Partial<Record<UploadRole, File>> } {
  const slots: FormSlots = {};
  const files: Partial<Record<UploadRole, File>> = {};
  for (const role of UPLOAD_ROLES) {
    const input = el<HTMLInputElement>(`file-${role}`);
    const file = input.files?.[0];
    if (file) {
      slots[role] = { name: file.name, size: file.size };
      files[role] = file;
    }
  }
  return { slots, files };
}

function refreshSubmitState(): void {
  const { slots } = readSlots();
  el<HTMLButtonElement>('submit').disabled = !canSubmit(slots);
  const problems: string[] = [];
  for (const [role, file] of Object.entries(slots)) {
    const problem = file && slotProblem(file);
    if (problem) {
      problems.push(`${role}: ${problem}`);
    }
  }
  el('form-hint').textContent = problems.length
    ? problems.join('; ')
    : missingRoles(slots).length
      ? `waiting for: ${missingRoles(slots).join(', ')}`
      : 'ready to submit';
}

async function onSubmit(): Promise<void> {
  const { slots, files } = readSlots();
  if (!canSubmit(slots)) {
    return;
  }
  const banner = el('banner');
  const results = el('results');
  results.innerHTML = '';
  banner.innerHTML = '<div class="banner banner-info">Uploading&hellip;</div>';
  try {
    const created = await client.createSession(files as Record<UploadRole, Blob>);
    banner.innerHTML = renderStatusBanner({
      v: 1,
      id: created.id,
      status: created.status,
      created_at: 0,
      files: {},
    });
    const status = await pollUntilDone(client, created.id);
    banner.innerHTML = renderStatusBanner(status);
    if (status.status !== 'ready') {
      return;
    }
    const { analysis, graphs } = await cache.fetch(client, created.id);
    results.innerHTML = renderResults(analysis, graphs);
    const button = results.querySelector('[data-action="generate-feedback"]');
    button?.addEventListener('click', async () => {
      button.setAttribute('disabled', 'true');
      try {
        const doc = await client.requestFeedback(created.id);
        const refreshed = { ...analysis, feedback: doc.feedback };
        results.innerHTML = renderResults(refreshed, graphs);
      } catch (error) {
        banner.innerHTML = renderInlineError(
          `feedback unavailable: ${error instanceof Error ? error.message : error}`,
        );
      }
    });
  } catch (error) {
    banner.innerHTML = renderInlineError(
      error instanceof Error ? error.message : String(error),
    );
  }
}

export function start(): void {
  for (const role of UPLOAD_ROLES) {
    el<HTMLInputElement>(`file-${role}`).addEventListener('change', refreshSubmitState);
  }
  el<HTMLButtonElement>('submit').addEventListener('click', () => {
    void onSubmit();
  });
  refreshSubmitState();
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
  start();
} else if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', start);
}
