"""Session-oriented chat service exposing a trained agent over a JSON API.

Endpoints (bodies documented in the README):
  POST /api/session                  -> create a session; agent opens with its greeting turn
  POST /api/session/{id}/message     -> one dialogue turn; returns the TurnPayload
  POST /api/session/{id}/feedback    -> end-of-dialogue human success judgment
  GET  /api/info                     -> checkpoint id, ontology hash, slots, actions
  GET  /api/health                   -> liveness
Static chat-UI files are served from the configured bundle directory at /.

Parameters are shared read-only across sessions; each session is guarded by
its own lock, and feedback episodes append to a JSONL log (same record schema
as simulator episodes, with tracker argmaxes standing in for goal labels and
the reward recomputed from the human judgment).
"""

from __future__ import annotations

import hashlib
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .checkpoint import load_checkpoint
from .config import RewardConfig
from .errors import LoadError
from .kb import KnowledgeBase, load_kb
from .model import AgentSession, AgentTurnResult
from .ontology import SlotOntology
from .seeding import episode_rng
from .simulator import Episode, EpisodeTurn, UserGoal, compute_rewards, episode_to_record
from .templates import TemplateLibrary
from .tokens import Vocabulary

SESSION_IDLE_SECONDS = 30 * 60

OPEN = "open"
CLOSED_SUCCESS = "closed-success"
CLOSED_FAILURE = "closed-failure"
CLOSED_ABANDONED = "closed-abandoned"


class CreateSessionRequest(BaseModel):
    mode: str = "greedy"
    checkpoint_id: str | None = None   # must match the loaded checkpoint when given


class MessageRequest(BaseModel):
    text: str


class FeedbackRequest(BaseModel):
    success: bool


@dataclass
class ChatSessionRecord:
    session_id: str
    agent: AgentSession
    transcript: list[dict] = field(default_factory=list)   # {role, text, ts}
    status: str = OPEN
    feedback: dict | None = None
    turns: list[dict] = field(default_factory=list)         # per agent turn
    last_active: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def closed(self) -> bool:
        return self.status != OPEN


class DialogueService:
    """All mutable serving state; the FastAPI app delegates here."""

    def __init__(self, params, hyper, ontology: SlotOntology, vocab: Vocabulary,
                 kb: KnowledgeBase, library: TemplateLibrary, checkpoint_id: str,
                 ontology_hash: str, feedback_log: str | None, seed: int = 1234):
        self.params = params
        self.hyper = hyper
        self.ontology = ontology
        self.vocab = vocab
        self.kb = kb
        self.library = library
        self.checkpoint_id = checkpoint_id
        self.ontology_hash = ontology_hash
        self.feedback_log = feedback_log
        self.seed = seed
        self.reward = RewardConfig()
        self.sessions: dict[str, ChatSessionRecord] = {}
        self._registry_lock = threading.Lock()
        self._log_lock = threading.Lock()
        self._session_counter = 0

    # -- session lifecycle -------------------------------------------------

    def create_session(self, mode: str) -> tuple[ChatSessionRecord, dict]:
        with self._registry_lock:
            index = self._session_counter
            self._session_counter += 1
            session_id = uuid.uuid4().hex
        agent = AgentSession(self.params, self.hyper, self.ontology, self.vocab,
                             self.kb, self.library, mode=mode,
                             rng=episode_rng(self.seed, index))
        record = ChatSessionRecord(session_id=session_id, agent=agent)
        with self._registry_lock:
            self.sessions[session_id] = record
        with record.lock:
            payload = self._run_turn(record, "")
        return record, payload

    def _get(self, session_id: str) -> ChatSessionRecord:
        record = self.sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        if (record.status == OPEN
                and time.time() - record.last_active > SESSION_IDLE_SECONDS):
            record.status = CLOSED_ABANDONED
        return record

    def _run_turn(self, record: ChatSessionRecord, text: str) -> dict:
        result = record.agent.agent_turn(text)
        record.last_active = time.time()
        if text or record.turns:
            record.transcript.append({"role": "user", "text": text,
                                      "ts": record.last_active})
        record.transcript.append({"role": "agent", "text": result.text,
                                  "ts": record.last_active})
        record.turns.append({
            "user_text": text,
            "action_id": result.action_id,
            "labels": {d.slot: d.argmax_value(self.ontology) for d in result.dists},
            "kb_count": result.kb_result.count if result.kb_result else 0,
            "kb_available": result.kb_result.available if result.kb_result else False,
            "logprob": result.logprob,
        })
        terminal = record.agent.terminated
        if terminal and record.status == OPEN:
            record.status = CLOSED_FAILURE  # pessimistic until human feedback
        return self._payload(record, result, terminal)

    def _payload(self, record: ChatSessionRecord, result: AgentTurnResult,
                 terminal: bool) -> dict:
        beliefs = [{
            "slot": d.slot,
            "top": [{"value": value, "p": round(p, 6)}
                    for value, p in d.top_values(self.ontology, 3)],
        } for d in result.dists]
        return {
            "session_id": record.session_id,
            "turn_index": record.agent.turn_index,
            "agent_text": result.text,
            "action": result.action.name,
            "beliefs": beliefs,
            "kb": {"count": result.kb_result.count if result.kb_result else 0,
                   "available": bool(result.kb_result.available)
                   if result.kb_result else False},
            "terminal": terminal,
            "status": record.status,
        }

    def post_message(self, session_id: str, text: str) -> dict:
        record = self._get(session_id)
        with record.lock:
            if record.closed:
                raise HTTPException(status_code=409,
                                    detail=f"session is {record.status}")
            return self._run_turn(record, text)

    def submit_feedback(self, session_id: str, success: bool) -> dict:
        record = self._get(session_id)
        with record.lock:
            if not record.closed:
                raise HTTPException(status_code=409, detail="session is still open")
            if record.feedback is not None:
                return {**record.feedback, "duplicate": True}
            turns = len(record.turns)
            rewards = compute_rewards(turns, success, self.reward)
            record.status = CLOSED_SUCCESS if success else CLOSED_FAILURE
            episode = Episode(
                episode_id=f"human-{record.session_id}",
                goal=UserGoal(values=dict(record.turns[-1]["labels"])),
                turns=[EpisodeTurn(
                    user_text=t["user_text"], user_act=None, labels=t["labels"],
                    action_id=t["action_id"], reward=r, kb_count=t["kb_count"],
                    kb_available=t["kb_available"], action_logprob=t["logprob"])
                    for t, r in zip(record.turns, rewards)],
                success=success, offer_accepted=success)
            self._append_log(episode)
            record.feedback = {
                "session_id": record.session_id, "success": success,
                "turns": turns, "logged_reward": float(sum(rewards)),
                "status": record.status,
            }
            return {**record.feedback, "duplicate": False}

    def _append_log(self, episode: Episode) -> None:
        if not self.feedback_log:
            return
        import json
        with self._log_lock, open(self.feedback_log, "a") as fh:
            fh.write(json.dumps(episode_to_record(episode), sort_keys=True) + "\n")

    def info(self) -> dict:
        return {
            "checkpoint_id": self.checkpoint_id,
            "ontology_hash": self.ontology_hash,
            "slots": list(self.ontology.slots),
            "actions": [a.name for a in self.ontology.actions],
            "max_turns": self.hyper.max_turns,
            "kb_entities": len(self.kb),
        }


def create_app(service: DialogueService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="taskdial dialogue service")
    app.state.service = service

    @app.post("/api/session")
    def create_session(body: CreateSessionRequest):
        if body.mode not in ("greedy", "sample"):
            raise HTTPException(status_code=422, detail="mode must be greedy|sample")
        if body.checkpoint_id is not None and body.checkpoint_id != service.checkpoint_id:
            raise HTTPException(status_code=404,
                                detail=f"unknown checkpoint {body.checkpoint_id!r}")
        _record, payload = service.create_session(body.mode)
        return JSONResponse(payload)

    @app.post("/api/session/{session_id}/message")
    def post_message(session_id: str, body: MessageRequest):
        return JSONResponse(service.post_message(session_id, body.text))

    @app.post("/api/session/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackRequest):
        return JSONResponse(service.submit_feedback(session_id, body.success))

    @app.get("/api/info")
    def info():
        return JSONResponse(service.info())

    @app.get("/api/health")
    def health():
        return JSONResponse({"status": "ok"})

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def build_service(checkpoint_path: str, kb_path: str, ontology: SlotOntology,
                  library: TemplateLibrary, ui_dir: str | None = None,
                  feedback_log: str | None = None, seed: int = 1234) -> FastAPI:
    """Load artifacts from disk and assemble the FastAPI app."""
    ckpt = load_checkpoint(checkpoint_path)
    if ckpt.ontology_hash != ontology.content_hash():
        raise LoadError("checkpoint ontology hash does not match the supplied ontology")
    kb = load_kb(kb_path, ontology)
    with open(checkpoint_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()[:12]
    service = DialogueService(
        params=ckpt.params, hyper=ckpt.hyper, ontology=ontology, vocab=ckpt.vocab,
        kb=kb, library=library, checkpoint_id=digest,
        ontology_hash=ckpt.ontology_hash, feedback_log=feedback_log, seed=seed)
    return create_app(service, ui_dir=ui_dir)
