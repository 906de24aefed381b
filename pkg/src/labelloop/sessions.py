"""Live annotation sessions: single-writer state machines over the engine loop.

A session wraps one ``ActiveLearningLoop`` and feeds it human labels. Labels
may arrive in partial batches; once a batch completes, the engine advances
(train, self-train, evaluate, next query) on a worker thread while clients
poll the phase. Every accepted submission is appended to a per-session JSON
event log, and a state snapshot (including the current model) is persisted
after every phase transition, so replaying the event log reconstructs the
identical session.
"""

from __future__ import annotations

import json
import threading
import uuid
from enum import Enum
from pathlib import Path
from typing import Callable

from .config import ExperimentConfig
from .data import Dataset
from .engine import (
    PHASE_AWAITING,
    PHASE_DONE,
    PHASE_EVALUATING,
    PHASE_SELF_TRAINING,
    PHASE_TRAINING,
    ActiveLearningLoop,
    auc,
)


class Phase(str, Enum):
    AWAITING_LABELS = "awaiting-labels"
    TRAINING = "training"
    SELF_TRAINING = "self-training"
    EVALUATING = "evaluating"
    DONE = "done"


_ENGINE_PHASES = {
    PHASE_AWAITING: Phase.AWAITING_LABELS,
    PHASE_TRAINING: Phase.TRAINING,
    PHASE_SELF_TRAINING: Phase.SELF_TRAINING,
    PHASE_EVALUATING: Phase.EVALUATING,
    PHASE_DONE: Phase.DONE,
}


class SessionError(Exception):
    status_code = 400


class UnknownSessionError(SessionError):
    status_code = 404


class PhaseError(SessionError):
    status_code = 409


class DuplicateLabelError(SessionError):
    status_code = 409


class InvalidLabelsError(SessionError):
    status_code = 422


class LiveSession:
    """One human-labeled run. Single writer; reads are lock-free snapshots."""

    def __init__(
        self,
        session_id: str,
        dataset_ref: str,
        dataset: Dataset,
        config: ExperimentConfig,
        root: Path | None = None,
        async_advance: bool = True,
        record_events: bool = True,
        reveal_predictions: bool = False,
    ):
        self.session_id = session_id
        self.dataset_ref = dataset_ref
        self.dataset = dataset
        self.config = config
        self.async_advance = async_advance
        self.reveal_predictions = reveal_predictions
        self._record_events = record_events
        self._dir = Path(root) / session_id if root is not None else None
        self._lock = threading.RLock()
        self._submitted: dict[int, int] = {}
        self._phase = Phase.AWAITING_LABELS
        self._public: dict = {}
        self.loop = ActiveLearningLoop(dataset, config, phase_hook=self._on_engine_phase)

    @classmethod
    def create(
        cls,
        dataset_ref: str,
        dataset: Dataset,
        config: ExperimentConfig,
        root: Path | None = None,
        session_id: str | None = None,
        async_advance: bool = True,
        reveal_predictions: bool = False,
    ) -> "LiveSession":
        session = cls(
            session_id or uuid.uuid4().hex,
            dataset_ref, dataset, config, root, async_advance,
            reveal_predictions=reveal_predictions,
        )
        session._append_event(
            {"type": "created", "session_id": session.session_id,
             "dataset": dataset_ref, "config": config.to_json_dict(),
             "reveal_predictions": reveal_predictions}
        )
        session.loop.begin()
        session._publish()
        return session

    # -- reads -------------------------------------------------------------

    @property
    def phase(self) -> Phase:
        return self._phase

    def metrics(self) -> dict:
        return self._public

    def pending_batch(self) -> dict:
        with self._lock:
            if self._phase != Phase.AWAITING_LABELS or self.loop.pending is None:
                raise PhaseError(f"no pending query batch in phase {self._phase.value}")
            pending = self.loop.pending
            batch = {
                "ids": list(pending.ids),
                "texts": [self.dataset.instance(i).text for i in pending.ids],
                "batch_index": pending.batch_index,
                "remaining": len(pending.ids) - len(self._submitted),
                "predictions": None,
            }
            # model hints stay hidden unless the session opted into revealing them
            if self.reveal_predictions and self.loop.eval_model is not None:
                labels, confidences = self.loop.eval_model.predict_batch(
                    self.dataset.embeddings(pending.ids)
                )
                batch["predictions"] = [
                    {"label": int(l), "confidence": float(c)}
                    for l, c in zip(labels, confidences)
                ]
            return batch

    def export(self) -> dict:
        with self._lock:
            return {
                "session_id": self.session_id,
                "dataset": self.dataset_ref,
                "config": self.config.to_json_dict(),
                "phase": self._phase.value,
                "curve": self.loop.curve().to_json_dict(),
            }

    # -- writes ------------------------------------------------------------

    def submit_labels(self, items: list[tuple[int, int]]) -> dict:
        """Record a (possibly partial) batch of labels; advance when complete.

        The whole submission is validated before any label is accepted, so a
        rejected request leaves the session untouched.
        """
        with self._lock:
            if self._phase != Phase.AWAITING_LABELS or self.loop.pending is None:
                raise PhaseError(f"labels not accepted in phase {self._phase.value}")
            pending_ids = set(self.loop.pending.ids)
            seen: set[int] = set()
            for instance_id, label in items:
                if instance_id not in pending_ids:
                    raise InvalidLabelsError(f"instance {instance_id} is not in the pending batch")
                if instance_id in self._submitted or instance_id in seen:
                    raise DuplicateLabelError(f"instance {instance_id} was already labeled")
                if not 0 <= label < self.dataset.num_classes:
                    raise InvalidLabelsError(
                        f"label {label} outside [0, {self.dataset.num_classes})"
                    )
                seen.add(instance_id)
            for instance_id, label in items:
                self._submitted[instance_id] = label
            self._append_event(
                {"type": "labels", "items": [[int(i), int(l)] for i, l in items]}
            )
            remaining = len(pending_ids) - len(self._submitted)
            accepted = len(items)
            if remaining == 0:
                batch = dict(self._submitted)
                self._submitted = {}
                self._set_phase(Phase.TRAINING)
                if self.async_advance:
                    worker = threading.Thread(target=self._advance, args=(batch,), daemon=True)
                    worker.start()
                else:
                    self._advance(batch)
            else:
                self._publish()
            return {"accepted": accepted, "remaining": remaining, "phase": self._phase.value}

    def _advance(self, batch: dict[int, int]) -> None:
        with self._lock:
            self.loop.submit_labels(batch)

    # -- internals -----------------------------------------------------------

    def _on_engine_phase(self, engine_phase: str) -> None:
        self._set_phase(_ENGINE_PHASES[engine_phase])

    def _set_phase(self, phase: Phase) -> None:
        self._phase = phase
        self._publish()
        self._snapshot_to_disk()

    def _publish(self) -> None:
        loop = self.loop
        pending = loop.pending
        self._public = {
            "session_id": self.session_id,
            "phase": self._phase.value,
            "dataset": {
                "name": self.dataset.name,
                "num_classes": self.dataset.num_classes,
                "metric": self.dataset.metric.value,
                "train_size": self.dataset.train_size,
            },
            "config": self.config.to_json_dict(),
            "curve": [p.to_json_dict() for p in loop.points],
            "pseudo_counts": [p.pseudo_count for p in loop.points],
            "final_score": loop.points[-1].score if loop.points else None,
            "auc": (
                auc([(p.labeled_count, p.score) for p in loop.points])
                if len(loop.points) >= 2
                else None
            ),
            "labeled_count": len(loop.pool.labeled),
            "pending": (
                {
                    "batch_index": pending.batch_index,
                    "size": len(pending.ids),
                    "submitted": len(self._submitted),
                }
                if pending is not None and self._phase == Phase.AWAITING_LABELS
                else None
            ),
        }

    def _append_event(self, event: dict) -> None:
        if not self._record_events or self._dir is None:
            return
        self._dir.mkdir(parents=True, exist_ok=True)
        with open(self._dir / "events.jsonl", "a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")

    def _snapshot_to_disk(self) -> None:
        if self._dir is None:
            return
        self._dir.mkdir(parents=True, exist_ok=True)
        snapshot = {
            "state": self._public,
            "submitted": {str(k): v for k, v in sorted(self._submitted.items())},
            "model": self.loop.eval_model.to_dict() if self.loop.eval_model is not None else None,
        }
        tmp = self._dir / "snapshot.json.tmp"
        tmp.write_text(json.dumps(snapshot, sort_keys=True))
        tmp.replace(self._dir / "snapshot.json")


def replay_session(
    root: Path,
    session_id: str,
    resolver: Callable[[str], Dataset],
) -> LiveSession:
    """Rebuild a session by replaying its event log from disk.

    The engine is deterministic given dataset, config, and submitted labels,
    so the replayed session reaches a state identical to the recorded one.
    Replay advances synchronously and does not re-write the event log.
    """
    events_path = Path(root) / session_id / "events.jsonl"
    if not events_path.exists():
        raise UnknownSessionError(f"no recorded events for session {session_id}")
    events = [json.loads(line) for line in events_path.read_text().splitlines() if line.strip()]
    if not events or events[0].get("type") != "created":
        raise SessionError(f"event log for {session_id} does not start with a creation event")
    created = events[0]
    config = ExperimentConfig.from_json_dict(created["config"])
    dataset = resolver(created["dataset"])
    session = LiveSession(
        session_id, created["dataset"], dataset, config,
        root=None, async_advance=False, record_events=False,
        reveal_predictions=created.get("reveal_predictions", False),
    )
    session.loop.begin()
    session._publish()
    for event in events[1:]:
        if event.get("type") == "labels":
            session.submit_labels([(int(i), int(l)) for i, l in event["items"]])
    return session


class SessionStore:
    """In-memory registry of live sessions with idempotent creation."""

    def __init__(
        self,
        data_dir: Path | None,
        resolver: Callable[[str], Dataset],
        async_advance: bool = True,
    ):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.sessions_dir = self.data_dir / "sessions" if self.data_dir is not None else None
        self.resolver = resolver
        self.async_advance = async_advance
        self._sessions: dict[str, LiveSession] = {}
        self._idempotency: dict[str, str] = {}
        self._lock = threading.Lock()

    def create(
        self,
        dataset_ref: str,
        config_obj: dict | None = None,
        idempotency_key: str | None = None,
        seed_labels: list[tuple[int, int]] | None = None,
        reveal_predictions: bool = False,
    ) -> tuple[LiveSession, bool]:
        """Create (or idempotently fetch) a session; returns (session, created)."""
        with self._lock:
            if idempotency_key is not None and idempotency_key in self._idempotency:
                return self._sessions[self._idempotency[idempotency_key]], False
            dataset = self.resolver(dataset_ref)
            config = ExperimentConfig.from_json_dict(config_obj or {})
            config.validate_for(dataset)
            session = LiveSession.create(
                dataset_ref, dataset, config,
                root=self.sessions_dir, async_advance=self.async_advance,
                reveal_predictions=reveal_predictions,
            )
            self._sessions[session.session_id] = session
            if idempotency_key is not None:
                self._idempotency[idempotency_key] = session.session_id
        if seed_labels:
            session.submit_labels(seed_labels)
        return session, True

    def get(self, session_id: str) -> LiveSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"unknown session {session_id}") from None

    def replay(self, session_id: str) -> LiveSession:
        if self.sessions_dir is None:
            raise SessionError("session persistence is disabled (no data directory)")
        return replay_session(self.sessions_dir, session_id, self.resolver)
