/** Thin typed client over the session server's HTTP+JSON API. */

import type {
  AnswerResponse,
  BoLaunchResponse,
  BoStatusResponse,
  Choice,
  CreateSessionResponse,
  GridPayload,
  QuestionPayload,
  ResultPayload,
  SessionDonePayload,
  SessionStateResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(res.status, (body as { detail?: string }).detail ?? res.statusText);
  }
  return body as T;
}

export interface CreateSessionOptions {
  benchmark: string;
  M?: number;
  seed?: number;
  memorize_seconds?: number;
  elicit_epochs?: number;
  pool_size?: number;
}

export class SessionApi {
  constructor(readonly baseUrl: string = "") {}

  createSession(opts: CreateSessionOptions): Promise<CreateSessionResponse> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(opts),
    });
  }

  state(sid: string): Promise<SessionStateResponse> {
    return request(`${this.baseUrl}/sessions/${sid}`);
  }

  grid(sid: string): Promise<{ grid: GridPayload; phase: string }> {
    return request(`${this.baseUrl}/sessions/${sid}/grid`);
  }

  question(sid: string): Promise<QuestionPayload | SessionDonePayload> {
    return request(`${this.baseUrl}/sessions/${sid}/question`);
  }

  answer(sid: string, pairId: number, choice: Choice): Promise<AnswerResponse> {
    return request(`${this.baseUrl}/sessions/${sid}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, choice }),
    });
  }

  result(sid: string): Promise<ResultPayload> {
    return request(`${this.baseUrl}/sessions/${sid}/result`);
  }

  launchBo(sid: string, opts: { J?: number; n_simulations?: number; bo_epochs?: number } = {}): Promise<BoLaunchResponse> {
    return request(`${this.baseUrl}/sessions/${sid}/bo`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(opts),
    });
  }

  boStatus(handle: string): Promise<BoStatusResponse> {
    return request(`${this.baseUrl}/bo/${handle}`);
  }
}

export function isDone(
  q: QuestionPayload | SessionDonePayload,
): q is SessionDonePayload {
  return (q as SessionDonePayload).done === true;
}
