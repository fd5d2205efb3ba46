/** Session submission and status polling with retry/backoff. */

import type { ApiClient } from './api.js';
import type {
  AnalysisDoc,
  GraphsDoc,
  SessionStatusDoc,
  UploadRole,
} from './types.js';

export interface PollOptions {
  intervalMs?: number;
  maxNetworkRetries?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Poll the status endpoint until the session leaves `processing`.
 *
 * Network errors are retried with exponential backoff up to
 * `maxNetworkRetries` consecutive failures, then surfaced to the caller.
 */
export async function pollUntilDone(
  client: ApiClient,
  id: string,
  options: PollOptions = {},
): Promise<SessionStatusDoc> {
  const interval = options.intervalMs ?? 500;
  const maxRetries = options.maxNetworkRetries ?? 3;
  const timeout = options.timeoutMs ?? 120_000;
  const sleep = options.sleep ?? defaultSleep;

  const started = Date.now();
  let consecutiveFailures = 0;
  for (;;) {
    try {
      const status = await client.getStatus(id);
      consecutiveFailures = 0;
      if (status.status !== 'processing') {
        return status;
      }
    } catch (error) {
      consecutiveFailures += 1;
      if (consecutiveFailures > maxRetries) {
        throw error;
      }
      await sleep(interval * 2 ** (consecutiveFailures - 1));
      continue;
    }
    if (Date.now() - started > timeout) {
      throw new Error(`session ${id} still processing after ${timeout} ms`);
    }
    await sleep(interval);
  }
}

/** Upload the five files and wait for a terminal status. */
export async function submitSession(
  client: ApiClient,
  files: Record<UploadRole, Blob>,
  options: PollOptions = {},
): Promise<SessionStatusDoc> {
  const created = await client.createSession(files);
  return pollUntilDone(client, created.id, options);
}

export interface SessionResults {
  analysis: AnalysisDoc;
  graphs: GraphsDoc;
}

/** Per-id client-side cache: results are immutable once a session is ready. */
export class ResultsCache {
  private cache = new Map<string, SessionResults>();

  async fetch(client: ApiClient, id: string): Promise<SessionResults> {
    const hit = this.cache.get(id);
    if (hit) {
      return hit;
    }
    const [analysis, graphs] = await Promise.all([
      client.getAnalysis(id),
      client.getGraphs(id),
    ]);
    const results = { analysis, graphs };
    this.cache.set(id, results);
    return results;
  }
}
