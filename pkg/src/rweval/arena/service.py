"""HTTP API for the expert arena, versioned under /v1.

Expert-facing session payloads never contain generator identities; panes are
labeled "Model 1" / "Model 2" with a randomized, persisted side assignment.
The operator posts drafts by generator name; the service resolves panes
internally and annotates each draft with missing/hallucinated citations and
the length check so experts see them precomputed.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from ..corpus import CitationSet, load_corpus
from ..errors import ValidationError
from .store import ArenaStore, EventLog


class RegisterGenerator(BaseModel):
    name: str = Field(min_length=1)


class CreateSession(BaseModel):
    expert_id: str = Field(min_length=1)
    paper_id: str = Field(min_length=1)
    generator_a: str = Field(min_length=1)
    generator_b: str = Field(min_length=1)
    iterations: int = 3


class PostDraft(BaseModel):
    iteration: int
    generator: str
    text: str


class PostFeedback(BaseModel):
    iteration: int
    pane: str
    text: str


class PostJudgment(BaseModel):
    iteration: int
    criterion: str
    choice: str


def create_app(
    log_path: str | Path,
    corpus: Sequence[CitationSet] | str | Path,
    seed: int = 0,
) -> FastAPI:
    if isinstance(corpus, (str, Path)):
        corpus = load_corpus(corpus)
    store = ArenaStore(EventLog(log_path), corpus, seed=seed)
    app = FastAPI(title="rweval arena", version="1")
    app.state.store = store

    def _fail(exc: ValidationError) -> HTTPException:
        return HTTPException(status_code=400, detail=str(exc))

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/v1/generators")
    def register(body: RegisterGenerator) -> dict:
        return store.register_generator(body.name)

    @app.get("/v1/leaderboard")
    def leaderboard(anonymous: bool = False) -> dict:
        return {"entries": store.leaderboard(anonymous=anonymous)}

    @app.get("/v1/next-pair")
    def next_pair() -> dict:
        try:
            a, b = store.suggest_pair()
        except ValidationError as exc:
            raise _fail(exc)
        from .ratings import match_quality

        return {
            "a": a,
            "b": b,
            "quality": match_quality(store.ratings[a], store.ratings[b]),
        }

    @app.post("/v1/sessions")
    def create_session(body: CreateSession) -> dict:
        try:
            session = store.create_session(
                body.expert_id,
                body.paper_id,
                body.generator_a,
                body.generator_b,
                iterations=body.iterations,
            )
        except ValidationError as exc:
            raise _fail(exc)
        return {"session_id": session.session_id, "panes": ["1", "2"], "iterations": session.iterations}

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        try:
            return store.sessions[session_id].expert_view()
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.post("/v1/sessions/{session_id}/drafts")
    def post_draft(session_id: str, body: PostDraft) -> dict:
        try:
            entry = store.post_draft(session_id, body.iteration, body.generator, body.text)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        except ValidationError as exc:
            raise _fail(exc)
        return {
            "missing": entry.missing,
            "hallucinated": entry.hallucinated,
            "draft_tokens": entry.draft_tokens,
            "gold_tokens": entry.gold_tokens,
            "length_pass": entry.length_pass,
        }

    @app.post("/v1/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: PostFeedback) -> dict:
        try:
            store.post_feedback(session_id, body.iteration, body.pane, body.text)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        except ValidationError as exc:
            raise _fail(exc)
        return {"accepted": True}

    @app.post("/v1/sessions/{session_id}/judgments")
    def post_judgment(session_id: str, body: PostJudgment) -> dict:
        try:
            result = store.post_judgment(session_id, body.iteration, body.criterion, body.choice)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        except ValidationError as exc:
            if "need both drafts" in str(exc):
                raise HTTPException(status_code=409, detail=str(exc))
            raise _fail(exc)
        judgment = dict(result["judgment"])
        # judgment acknowledgments go to the expert client: no identities
        judgment.pop("winner", None)
        judgment.pop("loser", None)
        return {"recorded": result["recorded"], "judgment": judgment}

    return app


def serve(
    log_path: str | Path,
    corpus_path: str | Path,
    host: str = "127.0.0.1",
    port: int = 8321,
    seed: int = 0,
) -> None:
    import uvicorn

    app = create_app(log_path, corpus_path, seed=seed)
    uvicorn.run(app, host=host, port=port, log_level="info")
