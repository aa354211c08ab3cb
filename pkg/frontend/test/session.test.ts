import { describe, expect, it } from "vitest";

import { ApiError, SessionApi } from "../src/api.js";
import { SessionController } from "../src/session.js";
import type {
  AnswerResponse,
  GridPayload,
  QuestionPayload,
  ResultPayload,
  SessionDonePayload,
} from "../src/types.js";

const GRID: GridPayload = {
  xs: [0, 1],
  ys: [0, 1],
  values: [
    [1, 2],
    [3, 4],
  ],
};

const RESULT: ResultPayload = {
  accuracy: 0.8,
  answered: 2,
  model_grid: GRID,
};

function makeQuestion(pairId: number, answered: number): QuestionPayload {
  return {
    pair_id: pairId,
    first: [0.1, 0.2],
    second: [0.8, 0.9],
    progress: { answered, total: 2 },
  };
}

/** In-memory fake of the server with the same phase rules. */
class FakeApi extends SessionApi {
  answered = 0;
  total = 2;
  currentPair: number | null = null;
  nextPair = 0;
  answerCalls = 0;
  /** resolvers for in-flight answer() promises, to test the submit guard */
  pendingAnswers: Array<() => void> = [];
  holdAnswers = false;

  constructor() {
    super("http://fake");
  }

  override async createSession() {
    return {
      session_id: "s1",
      schema_version: 1,
      phase: "memorize" as const,
      memorize_deadline: 0,
      memorize_seconds_remaining: 10,
      grid: GRID,
    };
  }

  override async state() {
    return {
      session_id: "s1",
      phase: (this.answered >= this.total ? "done" : "question") as "done" | "question",
      benchmark: "camel3_2d",
      progress: { answered: this.answered, total: this.total },
      memorize_seconds_remaining: 0,
    };
  }

  override async grid(): Promise<{ grid: GridPayload; phase: string }> {
    throw new ApiError(409, "memorization phase is over");
  }

  override async question(): Promise<QuestionPayload | SessionDonePayload> {
    if (this.answered >= this.total) {
      return { done: true, accuracy: RESULT.accuracy };
    }
    if (this.currentPair === null) {
      this.currentPair = this.nextPair++;
    }
    return makeQuestion(this.currentPair, this.answered);
  }

  override async answer(_sid: string, pairId: number): Promise<AnswerResponse> {
    this.answerCalls++;
    if (this.holdAnswers) {
      await new Promise<void>((resolve) => this.pendingAnswers.push(resolve));
    }
    if (pairId !== this.currentPair) {
      throw new ApiError(409, "answer does not match the outstanding question");
    }
    this.currentPair = null;
    this.answered++;
    return {
      ok: true,
      progress: { answered: this.answered, total: this.total },
      phase: this.answered >= this.total ? "done" : "question",
    };
  }

  override async result(): Promise<ResultPayload> {
    return RESULT;
  }
}

function makeController(nowRef: { t: number }) {
  const api = new FakeApi();
  const controller = new SessionController(api, () => nowRef.t);
  return { api, controller };
}

describe("memorization phase", () => {
  it("exposes the grid and counts down from server-remaining time", async () => {
    const now = { t: 0 };
    const { controller } = makeController(now);
    const view = await controller.start({ benchmark: "camel3_2d" });
    expect(view.phase).toBe("memorize");
    expect(view.grid).toEqual(GRID);
    expect(view.countdownSeconds).toBe(10);
    now.t = 4000;
    expect(controller.view().countdownSeconds).toBe(6);
  });

  it("destroys the grid at the deadline — no function data survives", async () => {
    const now = { t: 0 };
    const { controller } = makeController(now);
    await controller.start({ benchmark: "camel3_2d" });
    now.t = 10_001;
    const view = controller.tick();
    expect(view.phase).toBe("question");
    expect(view.grid).toBeNull();
    expect(view.countdownSeconds).toBe(0);
    // grid stays unreachable through every later view
    expect(controller.view().grid).toBeNull();
  });

  it("rejects question fetches while memorizing", async () => {
    const now = { t: 0 };
    const { controller } = makeController(now);
    await controller.start({ benchmark: "camel3_2d" });
    await expect(controller.fetchQuestion()).rejects.toThrow("still memorizing");
  });
});

describe("question phase", () => {
  async function toQuestions() {
    const now = { t: 0 };
    const made = makeController(now);
    await made.controller.start({ benchmark: "camel3_2d" });
    now.t = 11_000;
    made.controller.tick();
    return made;
  }

  it("fetches and renders the outstanding question", async () => {
    const { controller } = await toQuestions();
    const view = await controller.fetchQuestion();
    expect(view.question?.pair_id).toBe(0);
    expect(view.question?.first).toEqual([0.1, 0.2]);
  });

  it("advances progress on answer and finishes after M answers", async () => {
    const { controller } = await toQuestions();
    await controller.fetchQuestion();
    let view = await controller.submitAnswer("first");
    expect(view.progress.answered).toBe(1);
    expect(view.phase).toBe("question");
    await controller.fetchQuestion();
    view = await controller.submitAnswer("second");
    expect(view.phase).toBe("done");
    // accuracy is a verbatim server passthrough
    expect(view.result?.accuracy).toBe(0.8);
    expect(view.grid).toBeNull();
  });

  it("guards against double submits", async () => {
    const { api, controller } = await toQuestions();
    await controller.fetchQuestion();
    api.holdAnswers = true;
    const first = controller.submitAnswer("first");
    await expect(controller.submitAnswer("second")).rejects.toThrow("in flight");
    expect(api.answerCalls).toBe(1);
    api.pendingAnswers.forEach((resolve) => resolve());
    await first;
  });

  it("refetches the current question on a server conflict", async () => {
    const { api, controller } = await toQuestions();
    await controller.fetchQuestion();
    // another tab answered in between: the outstanding pair moved on
    api.currentPair = null;
    api.nextPair = 5;
    const view = await controller.submitAnswer("first");
    expect(view.question?.pair_id).toBe(5);
  });

  it("reports completion when all questions are already answered", async () => {
    const { api, controller } = await toQuestions();
    api.answered = 2;
    const view = await controller.fetchQuestion();
    expect(view.phase).toBe("done");
    expect(view.result?.accuracy).toBe(0.8);
  });
});

describe("resume", () => {
  it("resumes into the question phase without ever caching a grid", async () => {
    const now = { t: 0 };
    const { controller } = makeController(now);
    const view = await controller.resume("s1");
    expect(view.phase).toBe("question");
    expect(view.grid).toBeNull();
  });
});
