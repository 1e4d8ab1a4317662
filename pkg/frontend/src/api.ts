/**
 * Typed client for the garden HTTP API.  All state transitions round-trip
 * through here; nothing in the UI mutates graph data locally.
 */

import type { GraphPayload, SessionView, StatusEvent, StepPayload } from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class StepInProgressError extends Error {
  constructor() {
    super('step in progress');
    this.name = 'StepInProgressError';
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

export class GardenApi {
  constructor(
    private base: string = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    if (response.status === 409) throw new StepInProgressError();
    if (!response.ok) {
      throw new ApiError(response.status, `${response.status} ${await response.text()}`);
    }
    return (await response.json()) as T;
  }

  listSessions(): Promise<SessionView[]> {
    return this.request('/api/sessions');
  }

  createSession(seed: string, mode: 'steered' | 'autonomous'): Promise<SessionView> {
    return this.request('/api/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ seed, mode }),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/api/sessions/${id}`);
  }

  /**
   * POST one growth step.  A prompt makes it a steered step ({"prompt": ...});
   * omitting the prompt requests an autonomous step ({}).
   */
  postStep(id: string, prompt?: string): Promise<{ session: string; step: number }> {
    const body = prompt === undefined ? {} : { prompt };
    return this.request(`/api/sessions/${id}/step`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getGraph(id: string, step?: number): Promise<GraphPayload> {
    const suffix = step === undefined ? '' : `?step=${step}`;
    return this.request(`/api/sessions/${id}/graph${suffix}`);
  }

  getStep(id: string, k: number): Promise<StepPayload> {
    return this.request(`/api/sessions/${id}/steps/${k}`);
  }

  exportUrl(id: string, format: 'graphml' | 'json'): string {
    return `${this.base}/api/sessions/${id}/export?format=${format}`;
  }

  /**
   * Subscribe to the status event stream; returns an unsubscribe function.
   * EventSource is injectable so tests can drive transitions synchronously.
   */
  subscribe(
    id: string,
    onEvent: (event: StatusEvent) => void,
    eventSourceFactory: (url: string) => EventSourceLike = (url) => new EventSource(url),
  ): () => void {
    const source = eventSourceFactory(`${this.base}/api/sessions/${id}/events`);
    const handler = (message: { data: string }) => {
      onEvent(JSON.parse(message.data) as StatusEvent);
    };
    source.addEventListener('status', handler);
    return () => source.close();
  }
}

export interface EventSourceLike {
  addEventListener(type: string, handler: (message: { data: string }) => void): void;
  close(): void;
}
