"""Query strategies: rank unlabeled instances and pick the next batch.

All strategies return ids drawn only from the unlabeled pool (optionally a
pre-drawn candidate subsample of it), with deterministic tie-breaking by
instance id so identical model and pool state always reproduce the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, PoolState, _as_rng

KL_EPS = 1e-12


@dataclass
class QueryResult:
    """Selected batch plus the per-instance scores that ranked it, for audit."""

    ids: list[int]
    scores: list[float]
    batch_index: int = 0

    def __post_init__(self):
        if len(self.ids) != len(self.scores):
            raise ValueError("ids and scores must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("query batch contains duplicate ids")


def _candidate_ids(pool: PoolState, candidates: np.ndarray | None) -> np.ndarray:
    if candidates is None:
        return pool.unlabeled_sorted()
    candidates = np.asarray(candidates, dtype=np.int64)
    if not set(candidates.tolist()) <= pool.unlabeled:
        raise ValueError("candidates must be a subset of the unlabeled pool")
    return candidates


def query_random(
    pool: PoolState,
    batch_size: int,
    rng: np.random.Generator | int,
    *,
    batch_index: int = 0,
) -> QueryResult:
    """Uniform draw without replacement; scores are all zero."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = pool.unlabeled_sorted()
    take = min(batch_size, len(ids))
    picked = _as_rng(rng).choice(ids, size=take, replace=False)
    return QueryResult(ids=[int(i) for i in picked], scores=[0.0] * take, batch_index=batch_index)


def margin_scores(model, dataset: Dataset, ids: np.ndarray) -> np.ndarray:
    """Margin between the two largest predicted probabilities, per instance."""
    probs = model.predict_proba(dataset.embeddings(ids))
    if probs.shape[1] < 2:
        return np.ones(len(ids))
    part = np.sort(probs, axis=1)
    return part[:, -1] - part[:, -2]


def query_breaking_ties(
    model,
    pool: PoolState,
    dataset: Dataset,
    batch_size: int,
    *,
    candidates: np.ndarray | None = None,
    batch_index: int = 0,
) -> QueryResult:
    """Select the smallest-margin instances (most uncertain), ties by lower id."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = _candidate_ids(pool, candidates)
    margins = margin_scores(model, dataset, ids)
    order = np.lexsort((ids, margins))
    take = order[: min(batch_size, len(ids))]
    return QueryResult(
        ids=[int(ids[i]) for i in take],
        scores=[float(margins[i]) for i in take],
        batch_index=batch_index,
    )


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats with probabilities floored at KL_EPS."""
    p = np.maximum(np.asarray(p, dtype=np.float64), KL_EPS)
    q = np.maximum(np.asarray(q, dtype=np.float64), KL_EPS)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def contrastive_scores(
    model,
    pool: PoolState,
    dataset: Dataset,
    ids: np.ndarray,
    m_neighbors: int,
) -> np.ndarray:
    """Mean KL from each candidate's nearest labeled neighbors' predictions to its own.

    Neighbors are found by cosine similarity in embedding space over the
    labeled pool (exact brute force; labeled pools here are small).
    """
    records = pool.labeled
    if not records:
        raise ValueError("contrastive predictions require a non-empty labeled pool")
    ref_ids = np.array([rec.instance_id for rec in records], dtype=np.int64)
    ref_emb = dataset.embeddings(ref_ids)
    ref_probs = np.maximum(model.predict_proba(ref_emb), KL_EPS)
    ref_log = np.log(ref_probs)
    neg_entropy = np.sum(ref_probs * ref_log, axis=1)

    cand_emb = dataset.embeddings(ids)
    cand_probs = np.maximum(model.predict_proba(cand_emb), KL_EPS)
    cand_log = np.log(cand_probs)

    m = min(m_neighbors, len(records))
    dists = 1.0 - cand_emb @ ref_emb.T
    scores = np.empty(len(ids))
    for row in range(len(ids)):
        order = np.lexsort((ref_ids, dists[row]))[:m]
        # KL(p_n || p_x) = sum p_n log p_n - sum p_n log p_x, averaged over neighbors
        cross = ref_probs[order] @ cand_log[row]
        scores[row] = float(np.mean(neg_entropy[order] - cross))
    return scores


def query_contrastive(
    model,
    pool: PoolState,
    dataset: Dataset,
    batch_size: int,
    m_neighbors: int = 10,
    *,
    candidates: np.ndarray | None = None,
    batch_index: int = 0,
) -> QueryResult:
    """Select the candidates whose predictions diverge most from their labeled neighbors."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = _candidate_ids(pool, candidates)
    scores = contrastive_scores(model, pool, dataset, ids, m_neighbors)
    order = np.lexsort((ids, -scores))
    take = order[: min(batch_size, len(ids))]
    return QueryResult(
        ids=[int(ids[i]) for i in take],
        scores=[float(scores[i]) for i in take],
        batch_index=batch_index,
    )


def run_query(
    strategy: str,
    model,
    pool: PoolState,
    dataset: Dataset,
    batch_size: int,
    rng: np.random.Generator,
    *,
    m_neighbors: int = 10,
    candidates: np.ndarray | None = None,
    batch_index: int = 0,
) -> QueryResult:
    if strategy == "random":
        return query_random(pool, batch_size, rng, batch_index=batch_index)
    if strategy == "breaking-ties":
        return query_breaking_ties(
            model, pool, dataset, batch_size, candidates=candidates, batch_index=batch_index
        )
    if strategy == "contrastive-predictions":
        return query_contrastive(
            model, pool, dataset, batch_size, m_neighbors,
            candidates=candidates, batch_index=batch_index,
        )
    raise ValueError(f"unknown query strategy {strategy!r}")
