"""Append-only event log and the derived arena state.

Every mutation is validated, appended to a newline-delimited JSON log, and
then applied to the in-memory snapshot. Restarting a service replays the log,
which reproduces ratings, sessions, and match records exactly; replaying a
duplicate judgment event is a no-op, so replays are idempotent.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from ..corpus import CitationSet
from ..errors import ValidationError
from ..metrics.hard import verify_citations
from ..metrics.soft import length_check
from ..textops import segment
from .ratings import Outcome, Rating, update_ratings

JUDGMENT_CRITERIA = ("coherence", "positioning", "feedback-following")
PANES = ("1", "2")


class EventLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, ensure_ascii=False)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()

    def replay(self) -> Iterator[dict]:
        if not self.path.exists():
            return
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    yield json.loads(line)


@dataclass
class DraftEntry:
    text: str
    missing: list[int]
    hallucinated: list[int]
    draft_tokens: int
    gold_tokens: int
    length_pass: bool


@dataclass
class Session:
    session_id: str
    expert_id: str
    paper_id: str
    pane_to_generator: dict[str, str]
    iterations: int
    drafts: dict[int, dict[str, DraftEntry]] = field(default_factory=dict)
    feedback: dict[int, dict[str, list[str]]] = field(default_factory=dict)
    judgments: dict[str, dict] = field(default_factory=dict)  # "iter:criterion" -> record

    def drafts_complete(self, iteration: int) -> bool:
        per_pane = self.drafts.get(iteration, {})
        return all(pane in per_pane for pane in PANES)

    def expert_view(self) -> dict:
        """Session state with generator identities stripped."""
        return {
            "session_id": self.session_id,
            "expert_id": self.expert_id,
            "paper_id": self.paper_id,
            "iterations": self.iterations,
            "panes": {
                pane: {
                    "label": f"Model {pane}",
                    "drafts": {
                        str(it): _draft_payload(per_pane[pane])
                        for it, per_pane in sorted(self.drafts.items())
                        if pane in per_pane
                    },
                    "feedback": {
                        str(it): list(per_pane.get(pane, []))
                        for it, per_pane in sorted(self.feedback.items())
                    },
                }
                for pane in PANES
            },
            "judgments": {
                key: {"iteration": rec["iteration"], "criterion": rec["criterion"], "choice": rec["choice"]}
                for key, rec in sorted(self.judgments.items())
            },
            "judgment_ready": {
                str(it): self.drafts_complete(it) for it in range(1, self.iterations + 1)
            },
        }


def _draft_payload(entry: DraftEntry) -> dict:
    return {
        "text": entry.text,
        "missing": entry.missing,
        "hallucinated": entry.hallucinated,
        "draft_tokens": entry.draft_tokens,
        "gold_tokens": entry.gold_tokens,
        "length_pass": entry.length_pass,
    }


@dataclass(frozen=True)
class MatchRecord:
    criterion: str
    winner: str
    loser: str
    tie: bool
    timestamp: float
    session_id: str = ""
    iteration: int = 0


class ArenaStore:
    """Single-writer arena state derived from the event log."""

    def __init__(self, log: EventLog, corpus: Sequence[CitationSet], seed: int = 0):
        self._log = log
        self._lock = threading.Lock()
        self._rng = random.Random(seed)
        self.corpus = {cs.main.id: cs for cs in corpus}
        self.ratings: dict[str, Rating] = {}
        self.aliases: dict[str, str] = {}
        self.match_counts: dict[str, int] = {}
        self.matches: list[MatchRecord] = []
        self.sessions: dict[str, Session] = {}
        for event in log.replay():
            self._apply(event)

    # -- mutations -------------------------------------------------------

    def register_generator(self, name: str) -> dict:
        with self._lock:
            if name in self.ratings:
                return {"name": name, "alias": self.aliases[name], "created": False}
            event = {"type": "generator_registered", "name": name, "ts": time.time()}
            self._log.append(event)
            self._apply(event)
            return {"name": name, "alias": self.aliases[name], "created": True}

    def create_session(
        self, expert_id: str, paper_id: str, generator_a: str, generator_b: str,
        iterations: int = 3,
    ) -> Session:
        if generator_a == generator_b:
            raise ValidationError("a session needs two distinct generators")
        if iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if paper_id not in self.corpus:
            raise ValidationError(f"unknown paper id {paper_id!r}")
        with self._lock:
            for name in (generator_a, generator_b):
                if name not in self.ratings:
                    event = {"type": "generator_registered", "name": name, "ts": time.time()}
                    self._log.append(event)
                    self._apply(event)
            sides = [generator_a, generator_b]
            self._rng.shuffle(sides)  # randomized side assignment against position bias
            event = {
                "type": "session_created",
                "session_id": uuid.uuid4().hex,
                "expert_id": expert_id,
                "paper_id": paper_id,
                "panes": {"1": sides[0], "2": sides[1]},
                "iterations": iterations,
                "ts": time.time(),
            }
            self._log.append(event)
            self._apply(event)
            return self.sessions[event["session_id"]]

    def post_draft(self, session_id: str, iteration: int, generator: str, text: str) -> DraftEntry:
        with self._lock:
            session = self._session(session_id)
            self._check_iteration(session, iteration)
            pane = self._pane_of(session, generator)
            event = {
                "type": "draft_posted",
                "session_id": session_id,
                "iteration": iteration,
                "pane": pane,
                "text": text,
                "ts": time.time(),
            }
            self._log.append(event)
            self._apply(event)
            return session.drafts[iteration][pane]

    def post_feedback(self, session_id: str, iteration: int, pane: str, text: str) -> None:
        with self._lock:
            session = self._session(session_id)
            self._check_iteration(session, iteration)
            if pane not in PANES:
                raise ValidationError(f"unknown pane {pane!r}")
            event = {
                "type": "feedback_posted",
                "session_id": session_id,
                "iteration": iteration,
                "pane": pane,
                "text": text,
                "ts": time.time(),
            }
            self._log.append(event)
            self._apply(event)

    def post_judgment(self, session_id: str, iteration: int, criterion: str, choice: str) -> dict:
        """Record one expert judgment; idempotent per (iteration, criterion)."""
        with self._lock:
            session = self._session(session_id)
            self._check_iteration(session, iteration)
            if criterion not in JUDGMENT_CRITERIA:
                raise ValidationError(f"unknown criterion {criterion!r}")
            if choice not in (*PANES, "tie"):
                raise ValidationError(f"choice must be one of {PANES} or 'tie'")
            if not session.drafts_complete(iteration):
                raise ValidationError(
                    f"judgments for iteration {iteration} need both drafts first"
                )
            key = f"{iteration}:{criterion}"
            existing = session.judgments.get(key)
            if existing is not None:
                return {"recorded": False, "judgment": existing}
            event = {
                "type": "judgment_posted",
                "session_id": session_id,
                "iteration": iteration,
                "criterion": criterion,
                "choice": choice,
                "ts": time.time(),
            }
            self._log.append(event)
            self._apply(event)
            return {"recorded": True, "judgment": session.judgments[key]}

    # -- queries -----------------------------------------------------------

    def leaderboard(self, anonymous: bool = False) -> list[dict]:
        entries = []
        for name, rating in self.ratings.items():
            entry = {
                "alias": self.aliases[name],
                "mu": rating.mu,
                "sigma": rating.sigma,
                "conservative": rating.conservative,
                "matches": self.match_counts.get(name, 0),
            }
            if not anonymous:
                entry["name"] = name
            entries.append(entry)
        entries.sort(key=lambda e: (-e["conservative"], e["alias"]))
        return entries

    def suggest_pair(self) -> tuple[str, str]:
        from .ratings import next_pair

        pool = sorted(self.ratings.items())
        history = [(m.winner, m.loser) for m in self.matches]
        return next_pair(pool, history)

    # -- internals -----------------------------------------------------------

    def _session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    @staticmethod
    def _check_iteration(session: Session, iteration: int) -> None:
        if not 1 <= iteration <= session.iterations:
            raise ValidationError(
                f"iteration {iteration} outside 1..{session.iterations}"
            )

    @staticmethod
    def _pane_of(session: Session, generator: str) -> str:
        for pane, name in session.pane_to_generator.items():
            if name == generator:
                return pane
        raise ValidationError(f"generator {generator!r} is not part of the session")

    def _annotate(self, paper_id: str, text: str) -> DraftEntry:
        cs = self.corpus[paper_id]
        draft = segment(text)
        gold = segment(cs.gold_related_work)
        verification = verify_citations(draft, cs.indices)
        length = length_check(draft, gold)
        return DraftEntry(
            text=text,
            missing=sorted(verification.missing_indices),
            hallucinated=sorted(verification.hallucinated_indices),
            draft_tokens=length.draft_tokens,
            gold_tokens=length.gold_tokens,
            length_pass=length.passed,
        )

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "generator_registered":
            name = event["name"]
            if name not in self.ratings:
                self.ratings[name] = Rating()
                self.aliases[name] = f"G-{len(self.aliases) + 1:02d}"
                self.match_counts[name] = 0
        elif kind == "session_created":
            self.sessions[event["session_id"]] = Session(
                session_id=event["session_id"],
                expert_id=event["expert_id"],
                paper_id=event["paper_id"],
                pane_to_generator=dict(event["panes"]),
                iterations=event["iterations"],
            )
        elif kind == "draft_posted":
            session = self.sessions[event["session_id"]]
            entry = self._annotate(session.paper_id, event["text"])
            session.drafts.setdefault(event["iteration"], {})[event["pane"]] = entry
        elif kind == "feedback_posted":
            session = self.sessions[event["session_id"]]
            session.feedback.setdefault(event["iteration"], {}).setdefault(
                event["pane"], []
            ).append(event["text"])
        elif kind == "judgment_posted":
            session = self.sessions[event["session_id"]]
            key = f"{event['iteration']}:{event['criterion']}"
            if key in session.judgments:
                return  # replayed duplicate
            choice = event["choice"]
            gen_1 = session.pane_to_generator["1"]
            gen_2 = session.pane_to_generator["2"]
            if choice == "tie":
                winner, loser, tie = gen_1, gen_2, True
                outcome = Outcome.TIE
            else:
                winner = session.pane_to_generator[choice]
                loser = gen_2 if winner == gen_1 else gen_1
                tie = False
                outcome = Outcome.WIN
            new_winner, new_loser = update_ratings(
                self.ratings[winner], self.ratings[loser], outcome
            )
            self.ratings[winner] = new_winner
            self.ratings[loser] = new_loser
            self.match_counts[winner] += 1
            self.match_counts[loser] += 1
            record = MatchRecord(
                criterion=event["criterion"],
                winner=winner,
                loser=loser,
                tie=tie,
                timestamp=event["ts"],
                session_id=event["session_id"],
                iteration=event["iteration"],
            )
            self.matches.append(record)
            session.judgments[key] = {
                "iteration": event["iteration"],
                "criterion": event["criterion"],
                "choice": choice,
                "winner": winner,
                "loser": loser,
                "tie": tie,
            }
        else:
            raise ValidationError(f"unknown event type {kind!r}")
