"""HTTP session server for live human elicitation and follow-up BO runs.

Flow per session: timed memorization of the objective's heatmap grid, PBALD-
selected pairwise questions, an accuracy report with the learned expert
surrogate, and an optional asynchronous BO run seeded with the collected
preferences. Every state change is journaled to a JSONL file so a session
can be reconstructed by replay.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import active, boloop, mtl, pbnn
from .bench import Benchmark, get_benchmark, to_native

SCHEMA_VERSION = 1

PHASE_MEMORIZE = "memorize"
PHASE_QUESTION = "question"
PHASE_DONE = "done"

DEFAULT_M = 25
DEFAULT_MEMORIZE_SECONDS = 120.0
DEFAULT_GRID = 64
DEFAULT_ELICIT_EPOCHS = 100
DEFAULT_POOL = 2000


class CreateSessionRequest(BaseModel):
    benchmark: str
    M: int = DEFAULT_M
    seed: int = 0
    memorize_seconds: float = DEFAULT_MEMORIZE_SECONDS
    elicit_epochs: int = DEFAULT_ELICIT_EPOCHS
    pool_size: int = DEFAULT_POOL


class AnswerRequest(BaseModel):
    pair_id: int
    choice: str  # "first" | "second"


class BoRequest(BaseModel):
    J: int = 20
    n_simulations: int = 10
    bo_epochs: int = 200


@dataclass
class Session:
    id: str
    benchmark: Benchmark
    M: int
    seed: int
    memorize_deadline: float
    elicit_epochs: int
    pool: active.CandidatePool
    model: mtl.MtlModel
    rng: np.random.Generator
    journal_path: Path
    phase: str = PHASE_MEMORIZE
    asked: set = field(default_factory=set)
    answers: list = field(default_factory=list)  # (pair_id, choice, correct)
    data: pbnn.PreferenceDataset = None
    current_pair: int | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if self.data is None:
            self.data = pbnn.PreferenceDataset(d=self.benchmark.d)

    def journal(self, event: dict) -> None:
        event = {"ts": time.time(), **event}
        with open(self.journal_path, "a") as fh:
            fh.write(json.dumps(event) + "\n")

    def maybe_transition(self) -> None:
        if self.phase == PHASE_MEMORIZE and time.time() >= self.memorize_deadline:
            self.phase = PHASE_QUESTION
            self.journal({"type": "phase", "phase": PHASE_QUESTION})

    def grid_payload(self, n: int = DEFAULT_GRID) -> dict:
        lo0, hi0 = self.benchmark.native_bounds[0]
        lo1, hi1 = self.benchmark.native_bounds[1]
        xs = np.linspace(lo0, hi0, n)
        ys = np.linspace(lo1, hi1, n)
        values = [
            [self.benchmark.evaluate([x, y]) for x in xs] for y in ys
        ]
        return {"xs": xs.tolist(), "ys": ys.tolist(), "values": values}

    def model_grid_payload(self, n: int = DEFAULT_GRID) -> dict:
        lo0, hi0 = self.benchmark.native_bounds[0]
        lo1, hi1 = self.benchmark.native_bounds[1]
        us = np.linspace(0.0, 1.0, n)
        UU, VV = np.meshgrid(us, us)
        pts = np.column_stack([UU.ravel(), VV.ravel()])
        mean = mtl.predict_g(self.model, pts, T=50, rng=self.rng).mean(axis=0)
        return {
            "xs": np.linspace(lo0, hi0, n).tolist(),
            "ys": np.linspace(lo1, hi1, n).tolist(),
            "values": mean.reshape(n, n).tolist(),
        }

    def fraction_correct(self) -> float:
        if not self.answers:
            return 0.0
        return sum(1 for _, _, ok in self.answers if ok) / len(self.answers)

    def pick_question(self) -> int:
        if not self.answers:
            k = int(self.rng.integers(0, len(self.pool.pairs)))
            while k in self.asked:
                k = int(self.rng.integers(0, len(self.pool.pairs)))
            return k
        W = self.model.sample_task_weights("g", active.DEFAULT_T_BALD, self.rng)
        scores = active.score_pool_from_samples(W, self.model.task_spec(), self.pool)
        return boloop._argmax_unasked(scores, self.asked)

    def question_payload(self) -> dict:
        i, j = self.pool.pairs[self.current_pair]
        a = to_native(self.benchmark, self.pool.points[i])
        b = to_native(self.benchmark, self.pool.points[j])
        return {
            "pair_id": self.current_pair,
            "first": a.tolist(),
            "second": b.tolist(),
            "progress": {"answered": len(self.answers), "total": self.M},
        }


@dataclass
class BoJob:
    handle: str
    status: str = "running"  # running | done | failed
    curves: list = field(default_factory=list)
    error: str | None = None


def create_app(data_dir: str | Path = "prefbo-sessions") -> FastAPI:
    app = FastAPI(title="prefbo session server", version=str(SCHEMA_VERSION))
    data_path = Path(data_dir)
    data_path.mkdir(parents=True, exist_ok=True)
    sessions: dict[str, Session] = {}
    bo_jobs: dict[str, BoJob] = {}

    static_dir = Path(__file__).parent / "static"
    if static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    def get_session(sid: str) -> Session:
        if sid not in sessions:
            raise HTTPException(status_code=404, detail="unknown session")
        return sessions[sid]

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            benchmark = get_benchmark(req.benchmark)
        except KeyError:
            raise HTTPException(status_code=400, detail=f"unknown benchmark {req.benchmark}")
        if benchmark.d != 2:
            raise HTTPException(
                status_code=400, detail="only 2D benchmarks are supported for sessions"
            )
        sid = uuid.uuid4().hex
        ss = np.random.SeedSequence([req.seed, int(sid[:8], 16)])
        s_pool, s_model, s_rng = ss.spawn(3)
        pool_seed = int(np.random.default_rng(s_pool).integers(0, 2**31 - 1))
        pool = active.build_pool(2, req.pool_size, req.pool_size, pool_seed)
        model = mtl.create_model(2, np.random.default_rng(s_model))
        sess = Session(
            id=sid,
            benchmark=benchmark,
            M=req.M,
            seed=req.seed,
            memorize_deadline=time.time() + req.memorize_seconds,
            elicit_epochs=req.elicit_epochs,
            pool=pool,
            model=model,
            rng=np.random.default_rng(s_rng),
            journal_path=data_path / f"{sid}.jsonl",
        )
        sessions[sid] = sess
        sess.journal(
            {
                "type": "created",
                "schema_version": SCHEMA_VERSION,
                "benchmark": req.benchmark,
                "M": req.M,
                "seed": req.seed,
                "memorize_seconds": req.memorize_seconds,
                "memorize_deadline": sess.memorize_deadline,
                "pool_seed": pool_seed,
            }
        )
        return {
            "session_id": sid,
            "schema_version": SCHEMA_VERSION,
            "phase": sess.phase,
            "memorize_deadline": sess.memorize_deadline,
            "memorize_seconds_remaining": max(0.0, sess.memorize_deadline - time.time()),
            "grid": sess.grid_payload(),
        }

    @app.get("/sessions/{sid}")
    def session_state(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.maybe_transition()
            return {
                "session_id": sid,
                "phase": sess.phase,
                "benchmark": sess.benchmark.name,
                "progress": {"answered": len(sess.answers), "total": sess.M},
                "memorize_seconds_remaining": max(0.0, sess.memorize_deadline - time.time()),
            }

    @app.get("/sessions/{sid}/grid")
    def session_grid(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.maybe_transition()
            if sess.phase != PHASE_MEMORIZE:
                raise HTTPException(
                    status_code=409,
                    detail="memorization phase is over; the grid is no longer available",
                )
            return {"grid": sess.grid_payload(), "phase": sess.phase}

    @app.get("/sessions/{sid}/question")
    def next_question(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.maybe_transition()
            if sess.phase == PHASE_MEMORIZE:
                raise HTTPException(
                    status_code=409, detail="still in memorization phase"
                )
            if sess.phase == PHASE_DONE or len(sess.answers) >= sess.M:
                sess.phase = PHASE_DONE
                return {"done": True, "accuracy": sess.fraction_correct()}
            if sess.current_pair is None:
                sess.current_pair = sess.pick_question()
                sess.asked.add(sess.current_pair)
                sess.journal({"type": "question", "pair_id": sess.current_pair})
            return sess.question_payload()

    @app.post("/sessions/{sid}/answer")
    def submit_answer(sid: str, req: AnswerRequest):
        sess = get_session(sid)
        with sess.lock:
            sess.maybe_transition()
            if sess.phase != PHASE_QUESTION:
                raise HTTPException(status_code=409, detail=f"phase is {sess.phase}")
            if req.pair_id != sess.current_pair:
                raise HTTPException(
                    status_code=409, detail="answer does not match the outstanding question"
                )
            if req.choice not in ("first", "second"):
                raise HTTPException(status_code=400, detail="choice must be first or second")
            i, j = sess.pool.pairs[req.pair_id]
            x, xp = sess.pool.points[i], sess.pool.points[j]
            label = 1 if req.choice == "first" else 0
            truth = int(
                sess.benchmark.evaluate_unit(x) >= sess.benchmark.evaluate_unit(xp)
            )
            correct = label == truth
            sess.data.add(x, xp, label)
            sess.answers.append((req.pair_id, req.choice, correct))
            sess.journal(
                {"type": "answer", "pair_id": req.pair_id, "choice": req.choice,
                 "label": label, "correct": correct}
            )
            cfg = pbnn.ElicitTrainConfig(epochs=sess.elicit_epochs, batch_size=10)
            mtl.elicit_model(sess.model, sess.data, cfg, sess.rng)
            sess.current_pair = None
            if len(sess.answers) >= sess.M:
                sess.phase = PHASE_DONE
                sess.journal({"type": "phase", "phase": PHASE_DONE})
            return {
                "ok": True,
                "progress": {"answered": len(sess.answers), "total": sess.M},
                "phase": sess.phase,
            }

    @app.get("/sessions/{sid}/result")
    def session_result(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.maybe_transition()
            if sess.phase != PHASE_DONE:
                raise HTTPException(status_code=409, detail="session is not finished")
            return {
                "accuracy": sess.fraction_correct(),
                "answered": len(sess.answers),
                "model_grid": sess.model_grid_payload(),
            }

    @app.post("/sessions/{sid}/bo")
    def launch_bo(sid: str, req: BoRequest):
        sess = get_session(sid)
        with sess.lock:
            if sess.phase != PHASE_DONE:
                raise HTTPException(status_code=409, detail="session is not finished")
            handle = uuid.uuid4().hex
            job = BoJob(handle=handle)
            bo_jobs[handle] = job
            data_copy = pbnn.PreferenceDataset(
                d=sess.data.d, X=sess.data.X.copy(), Xp=sess.data.Xp.copy(),
                y=sess.data.y.copy(),
            )
            benchmark = sess.benchmark
            base_seed = sess.seed

        def worker():
            try:
                cfg = boloop.BoConfig(bo_epochs=req.bo_epochs)
                for s in range(req.n_simulations):
                    h = boloop.run_algorithm1(
                        benchmark, None, 0, req.J, cfg, base_seed + 7919 * (s + 1),
                        initial_pref_data=data_copy,
                    )
                    job.curves.append(h.y_best_curve)
                job.status = "done"
            except Exception as exc:  # pragma: no cover - surfaced via status
                job.status = "failed"
                job.error = str(exc)

        threading.Thread(target=worker, daemon=True).start()
        sess.journal({"type": "bo_launched", "handle": handle, "J": req.J,
                      "n_simulations": req.n_simulations})
        return {"handle": handle, "status": job.status}

    @app.get("/bo/{handle}")
    def bo_status(handle: str):
        if handle not in bo_jobs:
            raise HTTPException(status_code=404, detail="unknown BO handle")
        job = bo_jobs[handle]
        out = {"handle": handle, "status": job.status,
               "completed_runs": len(job.curves)}
        if job.status == "done":
            out["curves"] = job.curves
            out["mean_curve"] = np.array(job.curves).mean(axis=0).tolist()
        if job.error:
            out["error"] = job.error
        return out

    return app
