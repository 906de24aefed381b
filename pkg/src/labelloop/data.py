"""Datasets, label pools, and ingestion.

The engine operates on fixed embedding vectors: every instance carries a
pre-computed feature vector and no representation learning happens here.
Embeddings are L2-normalized at load time so that cosine similarity reduces
to a dot product everywhere downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset files."""


class Metric(str, Enum):
    ACCURACY = "accuracy"
    MACRO_F1 = "macro-f1"


class Provenance(str, Enum):
    HUMAN = "human"
    PSEUDO = "pseudo"


@dataclass(frozen=True)
class Instance:
    """One pool element: id, optional text, fixed embedding, hidden true label.

    The true label is visible only to the oracle and the evaluator; query
    strategies and self-training must never read it.
    """

    id: int
    embedding: np.ndarray
    true_label: int
    text: str | None = None


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise DatasetError(f"embedding at position {bad} has zero norm and cannot be normalized")
    return matrix / norms[:, None]


def _freeze(vector: np.ndarray) -> np.ndarray:
    vector = np.ascontiguousarray(vector, dtype=np.float64)
    vector.flags.writeable = False
    return vector


class Dataset:
    """A named train/test split over embedded instances.

    Instances keep their construction order (file order for loaded data),
    which downstream RNG draws rely on for reproducibility.
    """

    def __init__(
        self,
        name: str,
        instances: Sequence[Instance],
        num_classes: int,
        test_instances: Sequence[Instance] = (),
        metric: Metric = Metric.ACCURACY,
    ):
        if not instances:
            raise DatasetError("empty dataset")
        if num_classes < 1:
            raise DatasetError("num_classes must be positive")
        self.name = name
        self.num_classes = int(num_classes)
        self.metric = Metric(metric)
        self.instances = self._validate_and_normalize(list(instances), "train")
        self.test_instances = self._validate_and_normalize(list(test_instances), "test")

        train_ids = {inst.id for inst in self.instances}
        test_ids = {inst.id for inst in self.test_instances}
        overlap = train_ids & test_ids
        if overlap:
            raise DatasetError(f"train and test id spaces overlap (e.g. id {min(overlap)})")
        present = {inst.true_label for inst in self.instances}
        missing = sorted(set(range(self.num_classes)) - present)
        if missing:
            raise DatasetError(f"class {missing[0]} has no training instances")

        self._by_id = {inst.id: inst for inst in self.instances}
        self._by_id.update({inst.id: inst for inst in self.test_instances})
        self.dim = self.instances[0].embedding.shape[0]

    def _validate_and_normalize(self, instances: list[Instance], split: str) -> list[Instance]:
        if not instances:
            return []
        seen: set[int] = set()
        dim = instances[0].embedding.shape[0]
        rows = np.empty((len(instances), dim), dtype=np.float64)
        for pos, inst in enumerate(instances):
            if inst.id < 0:
                raise DatasetError(f"{split} instance at position {pos}: negative id {inst.id}")
            if inst.id in seen:
                raise DatasetError(f"{split} instance id {inst.id} appears twice")
            seen.add(inst.id)
            emb = np.asarray(inst.embedding, dtype=np.float64)
            if emb.ndim != 1 or emb.shape[0] != dim:
                raise DatasetError(
                    f"{split} instance id {inst.id}: embedding dimension "
                    f"{emb.shape} differs from {dim}"
                )
            if not np.all(np.isfinite(emb)):
                raise DatasetError(f"{split} instance id {inst.id}: embedding has non-finite entries")
            if not 0 <= inst.true_label < self.num_classes:
                raise DatasetError(
                    f"{split} instance id {inst.id}: label {inst.true_label} "
                    f"outside [0, {self.num_classes})"
                )
            rows[pos] = emb
        rows = _normalize_rows(rows)
        return [
            Instance(id=inst.id, embedding=_freeze(rows[pos]), true_label=inst.true_label, text=inst.text)
            for pos, inst in enumerate(instances)
        ]

    # -- lookup helpers -----------------------------------------------------

    def instance(self, instance_id: int) -> Instance:
        return self._by_id[instance_id]

    def true_label(self, instance_id: int) -> int:
        return self._by_id[instance_id].true_label

    def embedding(self, instance_id: int) -> np.ndarray:
        return self._by_id[instance_id].embedding

    def embeddings(self, ids: Iterable[int]) -> np.ndarray:
        return np.stack([self._by_id[i].embedding for i in ids])

    def train_ids(self) -> np.ndarray:
        return np.array(sorted(inst.id for inst in self.instances), dtype=np.int64)

    @property
    def train_size(self) -> int:
        return len(self.instances)


@dataclass
class LabelRecord:
    """One labeled-pool entry with provenance and pre-normalization weight.

    Human records always carry raw_weight 1.0; pseudo records carry the
    class-balance weight times the pseudo-label down-weighting factor as of
    the most recent weight computation.
    """

    instance_id: int
    label: int
    provenance: Provenance
    raw_weight: float = 1.0

    def __post_init__(self):
        if self.provenance == Provenance.HUMAN and self.raw_weight != 1.0:
            raise ValueError("human records must have raw_weight 1.0 before normalization")
        if self.raw_weight <= 0.0:
            raise ValueError("raw_weight must be positive")


@dataclass
class PoolState:
    """Disjoint labeled/unlabeled partition of a dataset's training ids."""

    labeled: list[LabelRecord] = field(default_factory=list)
    unlabeled: set[int] = field(default_factory=set)

    @classmethod
    def fresh(cls, dataset: Dataset) -> "PoolState":
        return cls(labeled=[], unlabeled={inst.id for inst in dataset.instances})

    def labeled_ids(self) -> set[int]:
        return {rec.instance_id for rec in self.labeled}

    def unlabeled_sorted(self) -> np.ndarray:
        return np.array(sorted(self.unlabeled), dtype=np.int64)

    def human_records(self) -> list[LabelRecord]:
        return [rec for rec in self.labeled if rec.provenance == Provenance.HUMAN]

    def add_human(self, instance_id: int, label: int) -> None:
        self._take(instance_id)
        self.labeled.append(LabelRecord(instance_id, label, Provenance.HUMAN, 1.0))

    def add_pseudo(self, instance_id: int, label: int, raw_weight: float) -> None:
        self._take(instance_id)
        self.labeled.append(LabelRecord(instance_id, label, Provenance.PSEUDO, raw_weight))

    def _take(self, instance_id: int) -> None:
        if instance_id not in self.unlabeled:
            raise ValueError(f"instance {instance_id} is not in the unlabeled pool")
        self.unlabeled.discard(instance_id)

    def clone(self) -> "PoolState":
        return PoolState(
            labeled=[LabelRecord(r.instance_id, r.label, r.provenance, r.raw_weight) for r in self.labeled],
            unlabeled=set(self.unlabeled),
        )

    def check_invariants(self) -> None:
        ids = [rec.instance_id for rec in self.labeled]
        if len(ids) != len(set(ids)):
            raise AssertionError("an instance id appears twice in the labeled pool")
        if set(ids) & self.unlabeled:
            raise AssertionError("labeled and unlabeled pools overlap")
        for rec in self.labeled:
            if rec.provenance == Provenance.HUMAN and rec.raw_weight != 1.0:
                raise AssertionError("human record with raw_weight != 1.0")


# -- ingestion ----------------------------------------------------------------


def _parse_jsonl(path: Path, num_classes: int | None) -> list[Instance]:
    instances: list[Instance] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            for key in ("id", "embedding", "label"):
                if key not in obj:
                    raise DatasetError(f"{path}:{lineno}: missing field '{key}'")
            if not isinstance(obj["id"], int) or isinstance(obj["id"], bool):
                raise DatasetError(f"{path}:{lineno}: id must be an integer")
            if not isinstance(obj["label"], int) or isinstance(obj["label"], bool):
                raise DatasetError(f"{path}:{lineno}: label must be an integer")
            emb_raw = obj["embedding"]
            if not isinstance(emb_raw, list) or not emb_raw:
                raise DatasetError(f"{path}:{lineno}: embedding must be a non-empty array")
            try:
                emb = np.array(emb_raw, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: embedding entries must be numbers") from exc
            if emb.ndim != 1 or not np.all(np.isfinite(emb)):
                raise DatasetError(f"{path}:{lineno}: embedding entries must be finite numbers")
            if dim is None:
                dim = emb.shape[0]
            elif emb.shape[0] != dim:
                raise DatasetError(
                    f"{path}:{lineno}: embedding has length {emb.shape[0]}, expected {dim}"
                )
            label = obj["label"]
            if label < 0:
                raise DatasetError(f"{path}:{lineno}: negative label {label}")
            if num_classes is not None and label >= num_classes:
                raise DatasetError(f"{path}:{lineno}: label {label} >= num_classes {num_classes}")
            text = obj.get("text")
            if text is not None and not isinstance(text, str):
                raise DatasetError(f"{path}:{lineno}: text must be a string when present")
            instances.append(Instance(id=obj["id"], embedding=emb, true_label=label, text=text))
    return instances


def load_dataset(
    train_path: str | Path,
    test_path: str | Path | None = None,
    *,
    name: str | None = None,
    metric: Metric | str = Metric.ACCURACY,
    num_classes: int | None = None,
) -> Dataset:
    """Load a dataset from JSONL files (one object per line).

    Each line must hold ``{"id": int, "embedding": [float, ...], "label": int}``
    with an optional ``"text"`` field. Instance order is file order. When
    ``num_classes`` is omitted it is inferred as max(train label) + 1.
    """
    train_path = Path(train_path)
    if not train_path.exists():
        raise DatasetError(f"no such file: {train_path}")
    train = _parse_jsonl(train_path, num_classes)
    if not train:
        raise DatasetError(f"{train_path}: empty dataset")
    if num_classes is None:
        num_classes = max(inst.true_label for inst in train) + 1
    test: list[Instance] = []
    if test_path is not None:
        test_path = Path(test_path)
        if not test_path.exists():
            raise DatasetError(f"no such file: {test_path}")
        test = _parse_jsonl(test_path, num_classes)
    return Dataset(
        name=name or train_path.stem,
        instances=train,
        num_classes=num_classes,
        test_instances=test,
        metric=Metric(metric),
    )


def dump_dataset(dataset: Dataset, train_path: str | Path, test_path: str | Path | None = None) -> None:
    """Write a dataset back to JSONL, one instance per line in pool order."""

    def write(path: Path, instances: Sequence[Instance]) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for inst in instances:
                obj: dict = {"id": inst.id, "embedding": [float(v) for v in inst.embedding], "label": inst.true_label}
                if inst.text is not None:
                    obj["text"] = inst.text
                handle.write(json.dumps(obj) + "\n")

    write(Path(train_path), dataset.instances)
    if test_path is not None:
        write(Path(test_path), dataset.test_instances)


def generate_blobs(
    num_classes: int,
    per_class: int,
    dim: int,
    separation: float,
    rng_seed: int,
) -> Dataset:
    """Generate isotropic Gaussian clusters as a synthetic benchmark.

    Class centroids sit pairwise ``separation`` apart (scaled orthogonal
    axes, so dim >= num_classes is required) with unit-variance noise.
    Per class, ``per_class`` points go to train and ``per_class // 2`` to
    test (a 2:1 stratified split). Deterministic given the seed.
    """
    if num_classes < 1 or per_class < 1 or dim < 1 or separation <= 0:
        raise ValueError("all blob parameters must be positive")
    if dim < num_classes:
        raise ValueError("dim must be >= num_classes for orthogonal centroid placement")
    rng = np.random.default_rng(rng_seed)
    scale = separation / math.sqrt(2.0)
    test_per_class = per_class // 2

    train: list[Instance] = []
    test: list[Instance] = []
    per_class_points = []
    for cls in range(num_classes):
        centroid = np.zeros(dim)
        centroid[cls] = scale
        pts = rng.normal(loc=centroid, scale=1.0, size=(per_class + test_per_class, dim))
        per_class_points.append(pts)

    next_id = 0
    for cls, pts in enumerate(per_class_points):
        for row in pts[:per_class]:
            train.append(Instance(id=next_id, embedding=row, true_label=cls))
            next_id += 1
    for cls, pts in enumerate(per_class_points):
        for row in pts[per_class:]:
            test.append(Instance(id=next_id, embedding=row, true_label=cls))
            next_id += 1

    return Dataset(
        name=f"blobs{num_classes}",
        instances=train,
        num_classes=num_classes,
        test_instances=test,
        metric=Metric.ACCURACY,
    )


# -- pool operations -----------------------------------------------------------


def _as_rng(rng: np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_seed_ids(
    dataset: Dataset,
    seed_size: int,
    rng: np.random.Generator | int,
    *,
    stratified: bool = False,
) -> np.ndarray:
    """Pick the initial ids to label, uniformly or class-stratified."""
    if seed_size > dataset.train_size:
        raise ValueError(f"seed_size {seed_size} exceeds training-set size {dataset.train_size}")
    gen = _as_rng(rng)
    ids = dataset.train_ids()
    if not stratified:
        return np.sort(gen.choice(ids, size=seed_size, replace=False))

    by_class: dict[int, list[int]] = {c: [] for c in range(dataset.num_classes)}
    for inst in dataset.instances:
        by_class[inst.true_label].append(inst.id)
    quota, extra = divmod(seed_size, dataset.num_classes)
    picked: list[np.ndarray] = []
    for cls in range(dataset.num_classes):
        want = quota + (1 if cls < extra else 0)
        candidates = np.array(sorted(by_class[cls]), dtype=np.int64)
        if want > len(candidates):
            raise ValueError(f"class {cls} has only {len(candidates)} instances, need {want} for stratified seed")
        picked.append(gen.choice(candidates, size=want, replace=False))
    return np.sort(np.concatenate(picked))


def init_pools(
    dataset: Dataset,
    seed_size: int,
    rng: np.random.Generator | int,
    *,
    stratified: bool = False,
    labeler: Callable[[int], int] | None = None,
) -> PoolState:
    """Draw the seed set and label it (ground truth unless a labeler is given)."""
    labeler = labeler or dataset.true_label
    seed_ids = draw_seed_ids(dataset, seed_size, rng, stratified=stratified)
    pool = PoolState.fresh(dataset)
    for instance_id in seed_ids:
        pool.add_human(int(instance_id), int(labeler(int(instance_id))))
    return pool


def subsample_unlabeled(pool: PoolState, n: int, rng: np.random.Generator | int) -> np.ndarray:
    """Draw min(n, |U|) unlabeled ids uniformly without replacement."""
    if n < 1:
        raise ValueError("subsample size must be >= 1")
    ids = pool.unlabeled_sorted()
    if n >= len(ids):
        return ids
    gen = _as_rng(rng)
    return np.sort(gen.choice(ids, size=n, replace=False))


# -- dataset references ----------------------------------------------------------

_BLOB_DEFAULTS = {"per_class": 120, "dim": 16, "separation": 8.0, "seed": 0}


def resolve_dataset(ref: str, data_dir: str | Path | None = None) -> Dataset:
    """Resolve a dataset reference to a loaded dataset.

    Supported forms:
      - ``blobs<C>`` with optional overrides, e.g. ``blobs4`` or
        ``blobs4:per_class=500,dim=16,separation=8.0,seed=0`` (synthetic);
      - a directory containing ``train.jsonl`` and ``test.jsonl`` plus an
        optional ``meta.json`` with ``name``, ``metric``, ``num_classes``.
        Relative directories are resolved against ``data_dir`` when given.
    """
    if ref.startswith("blobs"):
        head, _, tail = ref.partition(":")
        suffix = head[len("blobs"):]
        if suffix.isdigit():
            params = dict(_BLOB_DEFAULTS)
            if tail:
                for item in tail.split(","):
                    key, _, value = item.partition("=")
                    if key not in params:
                        raise DatasetError(f"unknown blob parameter {key!r} in dataset ref {ref!r}")
                    params[key] = float(value) if key == "separation" else int(value)
            return generate_blobs(
                int(suffix), params["per_class"], params["dim"], params["separation"], params["seed"]
            )

    directory = Path(ref)
    if not directory.is_absolute() and data_dir is not None:
        candidate = Path(data_dir) / ref
        if candidate.exists():
            directory = candidate
    if not directory.is_dir():
        raise DatasetError(f"unknown dataset {ref!r}: not a blobs reference and not a directory")
    train_path = directory / "train.jsonl"
    test_path = directory / "test.jsonl"
    if not train_path.exists():
        raise DatasetError(f"dataset directory {directory} is missing train.jsonl")
    meta: dict = {}
    meta_path = directory / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    return load_dataset(
        train_path,
        test_path if test_path.exists() else None,
        name=meta.get("name", directory.name),
        metric=meta.get("metric", Metric.ACCURACY),
        num_classes=meta.get("num_classes"),
    )
