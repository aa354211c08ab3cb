/** Payload types for the session server's JSON API. */

export type Phase = "memorize" | "question" | "done";

export interface GridPayload {
  /** Native x coordinates of the grid columns. */
  xs: number[];
  /** Native y coordinates of the grid rows. */
  ys: number[];
  /** values[row][col] = objective at (xs[col], ys[row]). */
  values: number[][];
}

export interface CreateSessionResponse {
  session_id: string;
  schema_version: number;
  phase: Phase;
  memorize_deadline: number;
  memorize_seconds_remaining: number;
  grid: GridPayload;
}

export interface SessionStateResponse {
  session_id: string;
  phase: Phase;
  benchmark: string;
  progress: Progress;
  memorize_seconds_remaining: number;
}

export interface Progress {
  answered: number;
  total: number;
}

export interface QuestionPayload {
  pair_id: number;
  /** Native coordinates of the first candidate point. */
  first: number[];
  /** Native coordinates of the second candidate point. */
  second: number[];
  progress: Progress;
}

export interface SessionDonePayload {
  done: true;
  accuracy: number;
}

export interface AnswerResponse {
  ok: boolean;
  progress: Progress;
  phase: Phase;
}

export interface ResultPayload {
  accuracy: number;
  answered: number;
  model_grid: GridPayload;
}

export interface BoLaunchResponse {
  handle: string;
  status: BoStatus;
}

export type BoStatus = "running" | "done" | "failed";

export interface BoStatusResponse {
  handle: string;
  status: BoStatus;
  completed_runs: number;
  curves?: number[][];
  mean_curve?: number[];
  error?: string;
}

export type Choice = "first" | "second";
