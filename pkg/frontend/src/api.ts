/** Thin typed client over the paddlekit session endpoints. */

import type {
  AnalysisDoc,
  FeedbackDoc,
  GraphsDoc,
  SessionCreated,
  SessionStatusDoc,
  UploadRole,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ApiClient {
  createSession(files: Record<UploadRole, Blob>): Promise<SessionCreated>;
  getStatus(id: string): Promise<SessionStatusDoc>;
  getAnalysis(id: string): Promise<AnalysisDoc>;
  getGraphs(id: string): Promise<GraphsDoc>;
  requestFeedback(id: string): Promise<FeedbackDoc>;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly stage: string | null = null,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let message = `${response.status} ${response.statusText}`;
  let stage: string | null = null;
  try {
    const body = await response.json();
    if (body?.error?.message) {
      message = body.error.message;
      stage = body.error.stage ?? null;
    } else if (body?.detail) {
      message = String(body.detail);
    }
  } catch {
    // keep the HTTP status text
  }
  throw new ApiError(message, response.status, stage);
}

/**
 * Build a client bound to a service base URL.  The fetch implementation is
 * injectable so the upload flow can run against a stub service in tests.
 */
export function createApiClient(baseUrl = '', fetchImpl?: FetchLike): ApiClient {
  const doFetch: FetchLike = fetchImpl ?? ((input, init) => fetch(input, init));
  const root = baseUrl.replace(/\/$/, '');

  return {
    async createSession(files) {
      const form = new FormData();
      for (const [role, blob] of Object.entries(files)) {
        form.append(role, blob, `${role}.csv`);
      }
      const response = await doFetch(`${root}/api/v1/sessions`, {
        method: 'POST',
        body: form,
      });
      return parseOrThrow<SessionCreated>(response);
    },

    async getStatus(id) {
      return parseOrThrow<SessionStatusDoc>(
        await doFetch(`${root}/api/v1/sessions/${id}`),
      );
    },

    async getAnalysis(id) {
      return parseOrThrow<AnalysisDoc>(
        await doFetch(`${root}/api/v1/sessions/${id}/analysis`),
      );
    },

    async getGraphs(id) {
      return parseOrThrow<GraphsDoc>(
        await doFetch(`${root}/api/v1/sessions/${id}/graphs`),
      );
    },

    async requestFeedback(id) {
      return parseOrThrow<FeedbackDoc>(
        await doFetch(`${root}/api/v1/sessions/${id}/feedback`, { method: 'POST' }),
      );
    },
  };
}
