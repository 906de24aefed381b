"""The active-learning loop: query, label, retrain, self-train, evaluate.

One loop instance is a sequential state machine. ``begin()`` returns the
seed batch as the first pending query; every completed batch of labels
advances the loop one round (train from scratch on the human pool,
self-train per config, evaluate, compute the next query). Labels may come
from the simulated oracle (``run_active_learning``) or from a live session
feeding human answers; both paths run the identical machinery, and all
randomness is split over independent, purpose-keyed RNG streams so a live
session with ground-truth answers reproduces a noise-free simulated run
exactly.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classifier import ProbModel, TrainParams, train_weighted
from .config import ExperimentConfig
from .data import Dataset, Instance, Metric, PoolState, draw_seed_ids, subsample_unlabeled
from .selftrain import SelfTrainResult, run_self_training
from .strategies import QueryResult, run_query

logger = logging.getLogger(__name__)


class OracleAbort(Exception):
    """Raised by an external oracle to abort a run; yields a truncated curve."""


@dataclass
class RngStreams:
    """Independent generators per purpose, derived from one run seed.

    The oracle stream is consumed only by the simulated oracle, so a live
    session (which never draws from it) stays in lockstep with simulation.
    """

    init: np.random.Generator
    oracle: np.random.Generator
    query: np.random.Generator
    selftrain: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        return cls(
            init=np.random.default_rng([seed, 0]),
            oracle=np.random.default_rng([seed, 1]),
            query=np.random.default_rng([seed, 2]),
            selftrain=np.random.default_rng([seed, 3]),
        )


# -- metrics --------------------------------------------------------------------


def accuracy_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def macro_f1_score(y_true: np.ndarray, y_pred: np.ndarray, num_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with no precision+recall scores 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    f1s = []
    for cls in range(num_classes):
        tp = int(np.sum((y_pred == cls) & (y_true == cls)))
        fp = int(np.sum((y_pred == cls) & (y_true != cls)))
        fn = int(np.sum((y_pred != cls) & (y_true == cls)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1s.append(2.0 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0)
    return float(np.mean(f1s))


def evaluate(model: ProbModel, instances: Sequence[Instance], metric: Metric | str) -> float:
    """Score a model on a held-out set with the dataset's metric."""
    if not instances:
        raise ValueError("cannot evaluate on an empty test set")
    X = np.stack([inst.embedding for inst in instances])
    y_true = np.array([inst.true_label for inst in instances], dtype=np.int64)
    y_pred, _ = model.predict_batch(X)
    metric = Metric(metric)
    if metric == Metric.ACCURACY:
        return accuracy_score(y_true, y_pred)
    return macro_f1_score(y_true, y_pred, model.num_classes)


# -- learning curves --------------------------------------------------------------


@dataclass
class CurvePoint:
    labeled_count: int
    score: float
    pseudo_count: int
    query_ids: list[int]

    def to_json_dict(self) -> dict:
        return {
            "labeled_count": int(self.labeled_count),
            "score": float(self.score),
            "pseudo_count": int(self.pseudo_count),
            "query_ids": [int(i) for i in self.query_ids],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CurvePoint":
        return cls(obj["labeled_count"], obj["score"], obj["pseudo_count"], list(obj["query_ids"]))


@dataclass
class LearningCurve:
    """Per-round evaluation scores with pseudo-label counts and query audit."""

    points: list[CurvePoint]
    metric: str
    config_fingerprint: str
    rng_seed: int
    truncated: bool = False

    def scores(self) -> np.ndarray:
        return np.array([p.score for p in self.points])

    def labeled_counts(self) -> np.ndarray:
        return np.array([p.labeled_count for p in self.points])

    def final_score(self) -> float:
        return self.points[-1].score

    def to_json_dict(self) -> dict:
        return {
            "metric": str(Metric(self.metric).value),
            "config_fingerprint": self.config_fingerprint,
            "rng_seed": int(self.rng_seed),
            "truncated": bool(self.truncated),
            "points": [p.to_json_dict() for p in self.points],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "LearningCurve":
        return cls(
            points=[CurvePoint.from_json_dict(p) for p in obj["points"]],
            metric=obj["metric"],
            config_fingerprint=obj["config_fingerprint"],
            rng_seed=obj["rng_seed"],
            truncated=obj.get("truncated", False),
        )


def canonical_json(obj: dict) -> str:
    """Stable byte-for-byte JSON encoding for reproducibility checks."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def auc(curve: LearningCurve | Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under score vs labeled count, normalized by the count range.

    A constant curve's AUC equals the constant.
    """
    if isinstance(curve, LearningCurve):
        xs = curve.labeled_counts().astype(np.float64)
        ys = curve.scores()
    else:
        xs = np.array([p[0] for p in curve], dtype=np.float64)
        ys = np.array([p[1] for p in curve], dtype=np.float64)
    if len(xs) < 2:
        raise ValueError("AUC requires at least 2 curve points")
    area = float(np.sum((ys[1:] + ys[:-1]) / 2.0 * np.diff(xs)))
    return area / float(xs[-1] - xs[0])


@dataclass
class RunAggregate:
    """Mean and sample standard deviation over repeated runs of one config."""

    num_runs: int
    final_score_mean: float
    final_score_std: float
    auc_mean: float
    auc_std: float
    labeled_counts: list[int]
    mean_pseudo_counts: list[float]
    final_scores: list[float]
    aucs: list[float]
    metric: str
    config_fingerprint: str
    single_run: bool = False

    def to_json_dict(self) -> dict:
        return {
            "num_runs": self.num_runs,
            "final_score_mean": self.final_score_mean,
            "final_score_std": self.final_score_std,
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "labeled_counts": self.labeled_counts,
            "mean_pseudo_counts": self.mean_pseudo_counts,
            "final_scores": self.final_scores,
            "aucs": self.aucs,
            "metric": self.metric,
            "config_fingerprint": self.config_fingerprint,
            "single_run": self.single_run,
        }


def _sample_std(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def aggregate_runs(curves: Sequence[LearningCurve]) -> RunAggregate:
    """Aggregate curves from repeated runs of the same config (seeds may differ)."""
    if not curves:
        raise ValueError("aggregate_runs requires at least one curve")
    first = curves[0]
    for curve in curves[1:]:
        if curve.config_fingerprint != first.config_fingerprint or curve.metric != first.metric:
            raise ValueError("curves come from mismatched configs")
        if [p.labeled_count for p in curve.points] != [p.labeled_count for p in first.points]:
            raise ValueError("curves have mismatched labeled-count grids")
    finals = np.array([c.final_score() for c in curves])
    aucs = np.array([auc(c) for c in curves])
    pseudo = np.array([[p.pseudo_count for p in c.points] for c in curves], dtype=np.float64)
    return RunAggregate(
        num_runs=len(curves),
        final_score_mean=float(np.mean(finals)),
        final_score_std=_sample_std(finals),
        auc_mean=float(np.mean(aucs)),
        auc_std=_sample_std(aucs),
        labeled_counts=[int(c) for c in first.labeled_counts()],
        mean_pseudo_counts=[float(v) for v in pseudo.mean(axis=0)],
        final_scores=[float(v) for v in finals],
        aucs=[float(v) for v in aucs],
        metric=first.metric,
        config_fingerprint=first.config_fingerprint,
        single_run=len(curves) == 1,
    )


# -- oracle ----------------------------------------------------------------------


def simulated_oracle(
    dataset: Dataset,
    instance_id: int,
    label_noise: float,
    rng: np.random.Generator,
) -> int:
    """Ground-truth lookup, corrupted with probability ``label_noise``.

    A corrupted answer is uniform over the other C-1 labels. One uniform is
    drawn per call regardless of the noise level, so the consumption pattern
    does not depend on outcomes.
    """
    if not 0.0 <= label_noise < 1.0:
        raise ValueError("label_noise must lie in [0, 1)")
    truth = dataset.true_label(instance_id)
    u = rng.random()
    if u >= label_noise:
        return truth
    wrong = int(rng.integers(0, dataset.num_classes - 1))
    return wrong if wrong < truth else wrong + 1


# -- the loop ----------------------------------------------------------------------


PHASE_TRAINING = "training"
PHASE_SELF_TRAINING = "self-training"
PHASE_EVALUATING = "evaluating"
PHASE_AWAITING = "awaiting-labels"
PHASE_DONE = "done"


@dataclass
class RoundOutcome:
    point: CurvePoint
    self_train: SelfTrainResult | None


class ActiveLearningLoop:
    """Sequential state machine over one dataset + config.

    The canonical pool holds human labels only; pseudo-labels live inside
    each round's self-training call and never persist across rounds.
    """

    def __init__(
        self,
        dataset: Dataset,
        config: ExperimentConfig,
        phase_hook: Callable[[str], None] | None = None,
    ):
        config.validate_for(dataset)
        if not dataset.test_instances:
            raise ValueError("the loop requires a non-empty test set for evaluation")
        self.dataset = dataset
        self.config = config
        self.streams = RngStreams.from_seed(config.rng_seed)
        self.pool = PoolState.fresh(dataset)
        self.points: list[CurvePoint] = []
        self.round_logs: list[list[dict]] = []
        self.pending: QueryResult | None = None
        self.round_index = 0
        self.done = False
        self.model: ProbModel | None = None
        self.eval_model: ProbModel | None = None
        self._phase_hook = phase_hook

    def _phase(self, phase: str) -> None:
        if self._phase_hook is not None:
            self._phase_hook(phase)

    def begin(self) -> QueryResult:
        """Draw the seed ids; they become the first pending batch."""
        if self.pending is not None or self.points:
            raise RuntimeError("loop already started")
        seed_ids = draw_seed_ids(
            self.dataset, self.config.seed_size, self.streams.init,
            stratified=self.config.stratified_seed,
        )
        self.pending = QueryResult(ids=[int(i) for i in seed_ids], scores=[0.0] * len(seed_ids), batch_index=0)
        self._phase(PHASE_AWAITING)
        return self.pending

    def _train_on_human_pool(self) -> ProbModel:
        ids = [rec.instance_id for rec in self.pool.labeled]
        X = self.dataset.embeddings(ids)
        y = np.array([rec.label for rec in self.pool.labeled], dtype=np.int64)
        weights = np.full(len(y), 1.0 / len(y))
        params = TrainParams(
            kind=self.config.classifier,
            learning_rate=self.config.learning_rate,
            epochs=self.config.epochs,
            temperature=self.config.temperature,
        )
        return train_weighted(X, y, weights, self.dataset.num_classes, params, self.config.rng_seed)

    def submit_labels(self, labels: Mapping[int, int]) -> RoundOutcome:
        """Consume a complete batch of labels and advance one round."""
        if self.done or self.pending is None:
            raise RuntimeError("no pending query batch")
        pending_ids = list(self.pending.ids)
        if set(labels.keys()) != set(pending_ids):
            raise ValueError("labels must cover exactly the pending batch")
        for instance_id in pending_ids:
            label = int(labels[instance_id])
            if not 0 <= label < self.dataset.num_classes:
                raise ValueError(f"label {label} outside [0, {self.dataset.num_classes})")
            self.pool.add_human(instance_id, label)
        query_ids = pending_ids
        self.pending = None

        self._phase(PHASE_TRAINING)
        model = self._train_on_human_pool()

        self_train: SelfTrainResult | None = None
        eval_model: ProbModel = model
        pseudo_count = 0
        if self.round_index > 0 and self.config.self_training != "none":
            self._phase(PHASE_SELF_TRAINING)
            self_train = run_self_training(
                self.config.self_training, self.dataset, self.pool, model,
                self.config, self.streams.selftrain,
            )
            eval_model = self_train.model
            pseudo_count = self_train.pseudo_count

        self._phase(PHASE_EVALUATING)
        score = evaluate(eval_model, self.dataset.test_instances, self.dataset.metric)
        point = CurvePoint(
            labeled_count=len(self.pool.labeled),
            score=float(score),
            pseudo_count=pseudo_count,
            query_ids=query_ids,
        )
        self.points.append(point)
        self.round_logs.append([r.to_json_dict() for r in self_train.rounds] if self_train else [])
        self.model = model
        self.eval_model = eval_model

        if self.round_index >= self.config.num_queries:
            self.done = True
            self._phase(PHASE_DONE)
        else:
            self.round_index += 1
            self.pending = self._next_query()
            self._phase(PHASE_AWAITING)
        return RoundOutcome(point=point, self_train=self_train)

    def _next_query(self) -> QueryResult:
        driver = self.eval_model if self.config.query_uses_self_trained else self.model
        candidates = None
        if (
            self.config.query_strategy != "random"
            and len(self.pool.unlabeled) > self.config.subsample_size
        ):
            candidates = subsample_unlabeled(self.pool, self.config.subsample_size, self.streams.query)
            logger.info(
                "round %d: query scoring subsampled to %d of %d unlabeled",
                self.round_index, len(candidates), len(self.pool.unlabeled),
            )
        return run_query(
            self.config.query_strategy, driver, self.pool, self.dataset,
            self.config.batch_size, self.streams.query,
            m_neighbors=self.config.m_neighbors, candidates=candidates,
            batch_index=self.round_index,
        )

    def curve(self, truncated: bool = False) -> LearningCurve:
        return LearningCurve(
            points=list(self.points),
            metric=str(self.dataset.metric.value),
            config_fingerprint=self.config.fingerprint(),
            rng_seed=self.config.rng_seed,
            truncated=truncated,
        )


def run_active_learning(
    dataset: Dataset,
    config: ExperimentConfig,
    oracle: Callable[[int], int] | None = None,
) -> LearningCurve:
    """Run the full loop with a simulated (default) or external oracle.

    The simulated oracle answers with ground truth corrupted at the
    configured noise level; seed labels stay noise-free unless
    ``noise_includes_seed`` is set. An external oracle may raise
    ``OracleAbort`` to stop early, which returns the partial curve with its
    truncation marker set.
    """
    loop = ActiveLearningLoop(dataset, config)

    def noisy(instance_id: int) -> int:
        return simulated_oracle(dataset, instance_id, config.label_noise, loop.streams.oracle)

    def seed_source(instance_id: int) -> int:
        if config.noise_includes_seed:
            return noisy(instance_id)
        return dataset.true_label(instance_id)

    pending = loop.begin()
    truncated = False
    while not loop.done:
        if oracle is not None:
            source = oracle
        elif pending.batch_index == 0:
            source = seed_source
        else:
            source = noisy
        try:
            labels = {instance_id: int(source(instance_id)) for instance_id in pending.ids}
        except OracleAbort:
            truncated = True
            break
        loop.submit_labels(labels)
        pending = loop.pending
    return loop.curve(truncated=truncated)
