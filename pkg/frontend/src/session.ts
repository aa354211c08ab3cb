/**
 * Client-side session controller: a state machine over the server API.
 *
 * The controller owns all session data the view may render. Two contracts
 * matter beyond plain wiring:
 *  - the objective grid is held only during the memorization phase and is
 *    destroyed the moment the deadline passes (no cached copy survives);
 *  - at most one answer may be in flight for the outstanding question.
 * All phase transitions are driven by server responses.
 */

import { ApiError, isDone, SessionApi } from "./api.js";
import type {
  BoStatusResponse,
  Choice,
  GridPayload,
  Phase,
  Progress,
  QuestionPayload,
  ResultPayload,
} from "./types.js";

export interface SessionView {
  sessionId: string;
  phase: Phase;
  /** Whole seconds left in the memorization window (server-authoritative). */
  countdownSeconds: number;
  /** Objective heatmap; only non-null while memorizing. */
  grid: GridPayload | null;
  question: QuestionPayload | null;
  progress: Progress;
  result: ResultPayload | null;
  bo: BoStatusResponse | null;
}

export interface StartOptions {
  benchmark: string;
  M?: number;
  seed?: number;
  memorizeSeconds?: number;
  elicitEpochs?: number;
  poolSize?: number;
}

type Listener = (view: SessionView) => void;

export class SessionController {
  private sessionId = "";
  private phase: Phase = "memorize";
  private deadlineMs = 0;
  private grid: GridPayload | null = null;
  private question: QuestionPayload | null = null;
  private progress: Progress = { answered: 0, total: 0 };
  private result: ResultPayload | null = null;
  private bo: BoStatusResponse | null = null;
  private submitting = false;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: SessionApi,
    private readonly now: () => number = () => Date.now(),
  ) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    const view = this.view();
    for (const fn of this.listeners) fn(view);
  }

  view(): SessionView {
    return {
      sessionId: this.sessionId,
      phase: this.phase,
      countdownSeconds: this.countdownSeconds(),
      grid: this.phase === "memorize" ? this.grid : null,
      question: this.question,
      progress: this.progress,
      result: this.result,
      bo: this.bo,
    };
  }

  countdownSeconds(): number {
    if (this.phase !== "memorize") return 0;
    return Math.max(0, Math.ceil((this.deadlineMs - this.now()) / 1000));
  }

  async start(opts: StartOptions): Promise<SessionView> {
    const res = await this.api.createSession({
      benchmark: opts.benchmark,
      M: opts.M,
      seed: opts.seed,
      memorize_seconds: opts.memorizeSeconds,
      elicit_epochs: opts.elicitEpochs,
      pool_size: opts.poolSize,
    });
    this.sessionId = res.session_id;
    this.phase = res.phase;
    this.deadlineMs = this.now() + res.memorize_seconds_remaining * 1000;
    this.grid = res.grid;
    this.emit();
    return this.view();
  }

  /** Resume an existing session after a reload; the grid is refetched only
   * if the server confirms memorization is still running. */
  async resume(sessionId: string): Promise<SessionView> {
    const state = await this.api.state(sessionId);
    this.sessionId = sessionId;
    this.phase = state.phase;
    this.progress = state.progress;
    this.deadlineMs = this.now() + state.memorize_seconds_remaining * 1000;
    if (state.phase === "memorize") {
      try {
        const g = await this.api.grid(sessionId);
        this.grid = g.grid;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // deadline passed between the two calls
          this.transitionToQuestions();
        } else {
          throw err;
        }
      }
    }
    this.emit();
    return this.view();
  }

  /** Called by the view's timer tick. Destroys the grid at the deadline and
   * moves on to the question phase. */
  tick(): SessionView {
    if (this.phase === "memorize" && this.now() >= this.deadlineMs) {
      this.transitionToQuestions();
      this.emit();
    }
    return this.view();
  }

  private transitionToQuestions(): void {
    this.grid = null; // the function view must not survive the deadline
    this.phase = "question";
  }

  async fetchQuestion(): Promise<SessionView> {
    if (this.phase === "memorize") {
      throw new Error("still memorizing");
    }
    const q = await this.api.question(this.sessionId);
    if (isDone(q)) {
      this.phase = "done";
      this.question = null;
      this.result = await this.api.result(this.sessionId);
      this.emit();
      return this.view();
    }
    this.question = q;
    this.progress = q.progress;
    this.emit();
    return this.view();
  }

  /** Submit the answer to the outstanding question. Concurrent submits are
   * rejected client-side; a server conflict refetches the current question. */
  async submitAnswer(choice: Choice): Promise<SessionView> {
    if (!this.question) throw new Error("no outstanding question");
    if (this.submitting) throw new Error("answer already in flight");
    this.submitting = true;
    try {
      const res = await this.api.answer(this.sessionId, this.question.pair_id, choice);
      this.progress = res.progress;
      this.question = null;
      if (res.phase === "done") {
        this.phase = "done";
        this.result = await this.api.result(this.sessionId);
      }
      this.emit();
      return this.view();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.question = null;
        return this.fetchQuestion();
      }
      throw err;
    } finally {
      this.submitting = false;
    }
  }

  async launchBo(opts: { J?: number; nSimulations?: number; boEpochs?: number } = {}): Promise<string> {
    const res = await this.api.launchBo(this.sessionId, {
      J: opts.J,
      n_simulations: opts.nSimulations,
      bo_epochs: opts.boEpochs,
    });
    this.bo = { handle: res.handle, status: res.status, completed_runs: 0 };
    this.emit();
    return res.handle;
  }

  async pollBo(): Promise<BoStatusResponse> {
    if (!this.bo) throw new Error("no BO run launched");
    this.bo = await this.api.boStatus(this.bo.handle);
    this.emit();
    return this.bo;
  }
}
