"""Self-training: pseudo-label selection, class-balance weighting, and retraining.

Three methods are provided, chosen by config string:

``hast``
    Hard-label, KNN-regularized self-training. A candidate is pseudo-labeled
    iff its top predicted confidence strictly exceeds 0.5 AND the majority
    vote of its k nearest labeled neighbors agrees with the predicted label.
    Selected candidates move into the (temporary) labeled pool and the model
    retrains from scratch with per-instance weights: human records weigh 1.0,
    pseudo records weigh alpha[label] * beta, where alpha is a per-class
    balance factor in (0, 10) and beta in (0, 1] down-weights pseudo-labels
    globally. Weights are L1-normalized before training.

``verips``
    Margin-thresholded selection verified against a model trained on human
    labels only: a candidate is kept iff its prediction margin exceeds a
    fixed threshold and both models predict the same label. Uniform weights.

``threshold``
    Plain confidence > 0.5 selection, uniform weights. Isolates the effect
    of the KNN agreement gate relative to ``hast``.

All methods operate on a clone of the caller's pool: pseudo-labels never
leak back into the engine's canonical human-labeled pool.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .classifier import ProbModel, TrainParams, train_weighted
from .config import ExperimentConfig
from .data import Dataset, PoolState, Provenance, subsample_unlabeled

logger = logging.getLogger(__name__)

ALPHA_CEILING = 10.0


@dataclass(frozen=True)
class PseudoRecord:
    instance_id: int
    label: int
    confidence: float
    knn_label: int


@dataclass
class PseudoLabelBatch:
    """One round's accepted pseudo-labels with their label histogram."""

    records: list[PseudoRecord]
    histogram: np.ndarray
    total: int

    def __post_init__(self):
        if int(self.histogram.sum()) != self.total:
            raise ValueError("histogram does not sum to the batch size")


@dataclass
class SelfTrainRound:
    """Audit log for one self-training round, serializable as a JSON record."""

    iteration: int
    num_selected: int
    histogram: list[int]
    alpha: list[float] | None = None
    beta: float | None = None
    weight_sum_human: float = 0.0
    weight_sum_pseudo: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "num_selected": self.num_selected,
            "histogram": self.histogram,
            "alpha": self.alpha,
            "beta": self.beta,
            "weight_sum_human": self.weight_sum_human,
            "weight_sum_pseudo": self.weight_sum_pseudo,
        }


@dataclass
class SelfTrainResult:
    model: ProbModel
    rounds: list[SelfTrainRound] = field(default_factory=list)
    pool: PoolState | None = None

    @property
    def pseudo_count(self) -> int:
        return sum(r.num_selected for r in self.rounds)


def _vote_from_distances(
    dists: np.ndarray,
    ref_labels: np.ndarray,
    ref_ids: np.ndarray,
    k: int,
    num_classes: int,
) -> int:
    """Majority vote over the k nearest references.

    Vote ties are broken by the tied class with the smallest mean distance
    to the query, then by the lowest class index. Distance ties while
    choosing the k nearest are broken by instance id, which keeps the vote
    independent of reference-pool ordering.
    """
    k_eff = min(k, len(ref_labels))
    top = np.lexsort((ref_ids, dists))[:k_eff]
    counts = np.bincount(ref_labels[top], minlength=num_classes)
    best = counts.max()
    tied = np.flatnonzero(counts == best)
    if len(tied) == 1:
        return int(tied[0])
    top_labels = ref_labels[top]
    top_dists = dists[top]
    mean_dists = np.array([top_dists[top_labels == cls].mean() for cls in tied])
    return int(tied[int(np.argmin(mean_dists))])


def knn_vote(
    embedding: np.ndarray,
    pool: PoolState,
    dataset: Dataset,
    k: int,
    *,
    num_classes: int | None = None,
) -> int:
    """Modal label of the embedding's k nearest labeled records (cosine distance)."""
    if not pool.labeled:
        raise ValueError("knn_vote requires a non-empty labeled pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    num_classes = num_classes or dataset.num_classes
    ref_ids = np.array([rec.instance_id for rec in pool.labeled], dtype=np.int64)
    ref_labels = np.array([rec.label for rec in pool.labeled], dtype=np.int64)
    ref_emb = dataset.embeddings(ref_ids)
    dists = 1.0 - ref_emb @ np.asarray(embedding, dtype=np.float64)
    return _vote_from_distances(dists, ref_labels, ref_ids, k, num_classes)


def select_pseudo_labels(
    model,
    candidate_ids: np.ndarray,
    pool: PoolState,
    dataset: Dataset,
    k: int,
) -> PseudoLabelBatch:
    """Apply the pseudo-label gate to every candidate.

    A candidate passes iff its top confidence is strictly greater than 0.5
    and the KNN vote over the current labeled pool equals the predicted
    label. An empty result is valid.
    """
    if not pool.labeled:
        raise ValueError("pseudo-label selection requires a non-empty labeled pool")
    candidate_ids = np.asarray(candidate_ids, dtype=np.int64)
    num_classes = dataset.num_classes
    records: list[PseudoRecord] = []
    if len(candidate_ids) > 0:
        ref_ids = np.array([rec.instance_id for rec in pool.labeled], dtype=np.int64)
        ref_labels = np.array([rec.label for rec in pool.labeled], dtype=np.int64)
        ref_emb = dataset.embeddings(ref_ids)
        cand_emb = dataset.embeddings(candidate_ids)
        labels, confidences = model.predict_batch(cand_emb)
        dists = 1.0 - cand_emb @ ref_emb.T
        for row, instance_id in enumerate(candidate_ids):
            conf = float(confidences[row])
            if conf <= 0.5:
                continue
            vote = _vote_from_distances(dists[row], ref_labels, ref_ids, k, num_classes)
            if vote != int(labels[row]):
                continue
            records.append(PseudoRecord(int(instance_id), int(labels[row]), conf, vote))
    histogram = np.bincount([rec.label for rec in records], minlength=num_classes)
    return PseudoLabelBatch(records=records, histogram=histogram, total=len(records))


def class_balance_alpha(histogram: np.ndarray, total: int) -> np.ndarray:
    """Per-class balance factor in the open interval (0, 10).

    For each class, the deviation of its count from the balanced expectation
    total/C, relative to the count itself (floored at 1 so empty classes are
    well-defined), is squashed by a sigmoid scaled to (0, 10). Classes at
    exactly the balanced count get 5; over-represented classes get less,
    under-represented classes more.
    """
    histogram = np.asarray(histogram)
    if np.any(histogram < 0):
        raise ValueError("histogram counts must be non-negative")
    if int(histogram.sum()) != int(total):
        raise ValueError("histogram must sum to the total count")
    num_classes = len(histogram)
    z = (total / num_classes - histogram) / np.maximum(1, histogram)
    alpha = ALPHA_CEILING / (1.0 + np.exp(-z))
    # exp(-z) underflows for huge z; keep the contract's open interval at float precision
    return np.where(alpha >= ALPHA_CEILING, np.nextafter(ALPHA_CEILING, 0.0), alpha)


def compute_weights(pool: PoolState, alpha: np.ndarray, beta: float) -> np.ndarray:
    """Raw weights (human 1.0, pseudo alpha[label]*beta) L1-normalized over the pool.

    Refreshes each record's stored raw_weight as a side effect, so the pool
    always reflects the latest weighting round.
    """
    if not pool.labeled:
        raise ValueError("cannot compute weights for an empty pool")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    raw = np.empty(len(pool.labeled))
    for pos, rec in enumerate(pool.labeled):
        if rec.provenance == Provenance.HUMAN:
            raw[pos] = 1.0
        else:
            raw[pos] = float(alpha[rec.label]) * beta
            rec.raw_weight = raw[pos]
    return raw / raw.sum()


def _train_params(config: ExperimentConfig) -> TrainParams:
    return TrainParams(
        kind=config.classifier,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        temperature=config.temperature,
    )


def _pool_arrays(pool: PoolState, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    ids = [rec.instance_id for rec in pool.labeled]
    labels = np.array([rec.label for rec in pool.labeled], dtype=np.int64)
    return dataset.embeddings(ids), labels


def _log_round(method: str, entry: SelfTrainRound) -> None:
    logger.info("self-train %s %s", method, json.dumps(entry.to_json_dict(), sort_keys=True))


def hast_self_train(
    dataset: Dataset,
    pool: PoolState,
    model: ProbModel,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> SelfTrainResult:
    """KNN-regularized hard-label self-training with class-balance weighting.

    Runs the configured number of rounds. Each round subsamples the
    unlabeled pool, applies the pseudo-label gate with the input model's
    predictions, moves accepted candidates into the working labeled pool,
    recomputes weights for every record from that round's label histogram,
    and retrains from scratch. A round that selects nothing leaves the model
    unchanged and logs a zero count.
    """
    pool_st = pool.clone()
    current = model
    rounds: list[SelfTrainRound] = []
    human_count = len(pool_st.human_records())

    for iteration in range(1, config.self_train_iterations + 1):
        candidates = subsample_unlabeled(pool_st, config.subsample_size, rng)
        batch = select_pseudo_labels(model, candidates, pool_st, dataset, config.k)
        if batch.total == 0:
            entry = SelfTrainRound(iteration, 0, [0] * dataset.num_classes)
            rounds.append(entry)
            _log_round("hast", entry)
            continue

        if config.use_class_balance:
            alpha = class_balance_alpha(batch.histogram, batch.total)
        else:
            alpha = np.ones(dataset.num_classes)
        beta = config.beta
        if config.dynamic_beta:
            beta = min(1.0, human_count / max(1, batch.total))

        for rec in batch.records:
            pool_st.add_pseudo(rec.instance_id, rec.label, float(alpha[rec.label]) * beta)
        weights = compute_weights(pool_st, alpha, beta)
        X, y = _pool_arrays(pool_st, dataset)
        current = train_weighted(X, y, weights, dataset.num_classes, _train_params(config), config.rng_seed)

        human_mask = np.array([rec.provenance == Provenance.HUMAN for rec in pool_st.labeled])
        entry = SelfTrainRound(
            iteration=iteration,
            num_selected=batch.total,
            histogram=[int(c) for c in batch.histogram],
            alpha=[float(a) for a in alpha],
            beta=beta,
            weight_sum_human=float(weights[human_mask].sum()),
            weight_sum_pseudo=float(weights[~human_mask].sum()),
        )
        rounds.append(entry)
        _log_round("hast", entry)

    return SelfTrainResult(model=current, rounds=rounds, pool=pool_st)


def _retrain_uniform(dataset: Dataset, pool_st: PoolState, config: ExperimentConfig) -> ProbModel:
    X, y = _pool_arrays(pool_st, dataset)
    weights = np.full(len(y), 1.0 / len(y))
    return train_weighted(X, y, weights, dataset.num_classes, _train_params(config), config.rng_seed)


def verips_self_train(
    dataset: Dataset,
    pool: PoolState,
    model: ProbModel,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> SelfTrainResult:
    """Margin-thresholded pseudo-labels verified by a human-only model.

    Candidates whose margin exceeds the configured threshold are kept only
    when the current model and a fresh model trained on human records alone
    predict the same label. Retains uniform weights and a single retrain.
    """
    pool_st = pool.clone()
    human = pool_st.human_records()
    if not human:
        raise ValueError("verips requires human-labeled records")
    X_h = dataset.embeddings([rec.instance_id for rec in human])
    y_h = np.array([rec.label for rec in human], dtype=np.int64)
    verification = train_weighted(
        X_h, y_h, np.full(len(y_h), 1.0 / len(y_h)), dataset.num_classes,
        _train_params(config), config.rng_seed,
    )

    candidates = subsample_unlabeled(pool_st, config.subsample_size, rng)
    selected: list[PseudoRecord] = []
    if len(candidates) > 0:
        cand_emb = dataset.embeddings(candidates)
        probs = model.predict_proba(cand_emb)
        order = np.sort(probs, axis=1)
        margins = order[:, -1] - order[:, -2] if probs.shape[1] > 1 else np.ones(len(candidates))
        labels = np.argmax(probs, axis=1)
        verify_labels = np.argmax(verification.predict_proba(cand_emb), axis=1)
        for row, instance_id in enumerate(candidates):
            if margins[row] <= config.verips_tau:
                continue
            if int(labels[row]) != int(verify_labels[row]):
                continue
            selected.append(
                PseudoRecord(int(instance_id), int(labels[row]), float(probs[row, labels[row]]), int(verify_labels[row]))
            )

    histogram = np.bincount([rec.label for rec in selected], minlength=dataset.num_classes)
    current = model
    if selected:
        for rec in selected:
            pool_st.add_pseudo(rec.instance_id, rec.label, 1.0)
        current = _retrain_uniform(dataset, pool_st, config)
    entry = SelfTrainRound(1, len(selected), [int(c) for c in histogram])
    _log_round("verips", entry)
    return SelfTrainResult(model=current, rounds=[entry], pool=pool_st)


def threshold_self_train(
    dataset: Dataset,
    pool: PoolState,
    model: ProbModel,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> SelfTrainResult:
    """Confidence > 0.5 selection with uniform weights and a single retrain."""
    pool_st = pool.clone()
    candidates = subsample_unlabeled(pool_st, config.subsample_size, rng)
    selected: list[PseudoRecord] = []
    if len(candidates) > 0:
        labels, confidences = model.predict_batch(dataset.embeddings(candidates))
        for row, instance_id in enumerate(candidates):
            if confidences[row] > 0.5:
                selected.append(PseudoRecord(int(instance_id), int(labels[row]), float(confidences[row]), int(labels[row])))

    histogram = np.bincount([rec.label for rec in selected], minlength=dataset.num_classes)
    current = model
    if selected:
        for rec in selected:
            pool_st.add_pseudo(rec.instance_id, rec.label, 1.0)
        current = _retrain_uniform(dataset, pool_st, config)
    entry = SelfTrainRound(1, len(selected), [int(c) for c in histogram])
    _log_round("threshold", entry)
    return SelfTrainResult(model=current, rounds=[entry], pool=pool_st)


def run_self_training(
    method: str,
    dataset: Dataset,
    pool: PoolState,
    model: ProbModel,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> SelfTrainResult:
    if method == "none":
        return SelfTrainResult(model=model, rounds=[], pool=pool.clone())
    if method == "hast":
        return hast_self_train(dataset, pool, model, config, rng)
    if method == "verips":
        return verips_self_train(dataset, pool, model, config, rng)
    if method == "threshold":
        return threshold_self_train(dataset, pool, model, config, rng)
    raise ValueError(f"unknown self-training method {method!r}")
