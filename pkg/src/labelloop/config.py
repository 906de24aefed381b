"""Experiment configuration: every knob of the labeling protocol."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .data import Dataset

QUERY_STRATEGIES = ("random", "breaking-ties", "contrastive-predictions")
SELF_TRAINING_METHODS = ("none", "hast", "verips", "threshold")
CLASSIFIER_KINDS = ("logistic-regression", "nearest-centroid")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Full protocol configuration.

    Defaults reproduce the standard budget: 30 seed labels plus 10 query
    rounds of 10, i.e. 130 human labels total.
    """

    seed_size: int = 30
    num_queries: int = 10
    batch_size: int = 10
    query_strategy: str = "breaking-ties"
    self_training: str = "hast"
    k: int = 5
    beta: float = 0.1
    self_train_iterations: int = 1
    subsample_size: int = 16384
    label_noise: float = 0.0
    rng_seed: int = 0
    num_runs: int = 5
    classifier: str = "logistic-regression"
    learning_rate: float = 0.5
    epochs: int = 300
    temperature: float = 10.0
    m_neighbors: int = 10
    verips_tau: float = 0.9
    use_class_balance: bool = True
    dynamic_beta: bool = False
    stratified_seed: bool = False
    query_uses_self_trained: bool = True
    noise_includes_seed: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.seed_size < 1:
            raise ConfigError("seed_size must be >= 1")
        if self.num_queries < 0:
            raise ConfigError("num_queries must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.query_strategy not in QUERY_STRATEGIES:
            raise ConfigError(
                f"unknown query_strategy {self.query_strategy!r}; valid: {', '.join(QUERY_STRATEGIES)}"
            )
        if self.self_training not in SELF_TRAINING_METHODS:
            raise ConfigError(
                f"unknown self_training {self.self_training!r}; valid: {', '.join(SELF_TRAINING_METHODS)}"
            )
        if self.classifier not in CLASSIFIER_KINDS:
            raise ConfigError(
                f"unknown classifier {self.classifier!r}; valid: {', '.join(CLASSIFIER_KINDS)}"
            )
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError("beta must lie in (0, 1]")
        if self.self_train_iterations < 1:
            raise ConfigError("self_train_iterations must be >= 1")
        if self.subsample_size < 1:
            raise ConfigError("subsample_size must be >= 1")
        if not 0.0 <= self.label_noise < 1.0:
            raise ConfigError("label_noise must lie in [0, 1)")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be >= 0")
        if self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.m_neighbors < 1:
            raise ConfigError("m_neighbors must be >= 1")
        if not 0.0 < self.verips_tau <= 1.0:
            raise ConfigError("verips_tau must lie in (0, 1]")

    def validate_for(self, dataset: Dataset) -> None:
        budget = self.seed_size + self.num_queries * self.batch_size
        if budget > dataset.train_size:
            raise ConfigError(
                f"label budget {budget} (seed {self.seed_size} + {self.num_queries}x{self.batch_size}) "
                f"exceeds training-set size {dataset.train_size}"
            )

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config field {unknown[0]!r}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def fingerprint(self) -> str:
        """Stable hash of the config with the run seed masked out."""
        obj = self.to_json_dict()
        obj.pop("rng_seed")
        canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
