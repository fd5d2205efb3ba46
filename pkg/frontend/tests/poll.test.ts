import { describe, expect, test } from 'vitest';

import { createApiClient, type FetchLike } from '../src/api';
import { ResultsCache, pollUntilDone, submitSession } from '../src/poll';
import { UPLOAD_ROLES, type UploadRole } from '../src/types';

const noSleep = () => Promise.resolve();

function uploadBlobs(): Record<UploadRole, Blob> {
  return Object.fromEntries(
    UPLOAD_ROLES.map((role) => [role, new Blob([`${role} bytes`])]),
  ) as Record<UploadRole, Blob>;
}

/** Minimal in-memory service: one session that is ready after two polls. */
function stubService(pollsUntilReady = 2): { fetch: FetchLike; log: string[] } {
  let polls = 0;
  const log: string[] = [];
  const analysis = {
    v: 1,
    per_phase_percent: { catch: 100, pull: 90, recovery: 100 },
    overall_percent: 96.66666666666667,
    predictions: [],
    display_strokes: [0, 1],
    rejected_strokes: 0,
    accepted_strokes: 10,
    feedback: null,
  };
  const graphs = { v: 1, strokes: [], reference: { frames: 0, traces: {} } };

  const fetchImpl: FetchLike = async (input, init) => {
    log.push(`${init?.method ?? 'GET'} ${input}`);
    if (input.endsWith('/api/v1/sessions') && init?.method === 'POST') {
      return Response.json({ v: 1, id: 'sess-1', status: 'processing' });
    }
    if (input.endsWith('/api/v1/sessions/sess-1')) {
      polls += 1;
      const status = polls >= pollsUntilReady ? 'ready' : 'processing';
      return Response.json({ v: 1, id: 'sess-1', status, created_at: 0, files: {} });
    }
    if (input.endsWith('/sess-1/analysis')) {
      return Response.json(analysis);
    }
    if (input.endsWith('/sess-1/graphs')) {
      return Response.json(graphs);
    }
    return Response.json({ detail: 'unknown session id' }, { status: 404 });
  };
  return { fetch: fetchImpl, log };
}

describe('upload and poll flow', () => {
  test('stub-service upload reaches ready', async () => {
    const stub = stubService(3);
    const client = createApiClient('http://svc', stub.fetch);
    const status = await submitSession(client, uploadBlobs(), { sleep: noSleep });
    expect(status.status).toBe('ready');
    expect(stub.log[0]).toBe('POST http://svc/api/v1/sessions');
    expect(stub.log.filter((l) => l === 'GET http://svc/api/v1/sessions/sess-1')).toHaveLength(3);
  });

  test('results are fetched once and cached per session id', async () => {
    const stub = stubService(1);
    const client = createApiClient('http://svc', stub.fetch);
    const cache = new ResultsCache();
    const first = await cache.fetch(client, 'sess-1');
    const second = await cache.fetch(client, 'sess-1');
    expect(second).toBe(first);
    expect(stub.log.filter((l) => l.includes('/analysis'))).toHaveLength(1);
  });

  test('network errors are retried with backoff then recovered', async () => {
    let calls = 0;
    const flaky: FetchLike = async () => {
      calls += 1;
      if (calls <= 2) {
        throw new TypeError('network unreachable');
      }
      return Response.json({ v: 1, id: 'x', status: 'ready', created_at: 0, files: {} });
    };
    const waits: number[] = [];
    const client = createApiClient('', flaky);
    const status = await pollUntilDone(client, 'x', {
      intervalMs: 10,
      sleep: async (ms) => {
        waits.push(ms);
      },
    });
    expect(status.status).toBe('ready');
    expect(waits).toEqual([10, 20]); // exponential backoff between retries
  });

  test('persistent network failure is surfaced', async () => {
    const dead: FetchLike = async () => {
      throw new TypeError('connection refused');
    };
    const client = createApiClient('', dead);
    await expect(
      pollUntilDone(client, 'x', { sleep: noSleep, maxNetworkRetries: 2 }),
    ).rejects.toThrow('connection refused');
  });

  test('service 400 bodies become typed errors with the stage', async () => {
    const rejecting: FetchLike = async () =>
      Response.json(
        { v: 1, error: { stage: 'upload', message: "missing file field 'watch_left'" } },
        { status: 400 },
      );
    const client = createApiClient('', rejecting);
    await expect(client.createSession(uploadBlobs())).rejects.toMatchObject({
      name: 'ApiError',
      status: 400,
      stage: 'upload',
    });
  });
});
