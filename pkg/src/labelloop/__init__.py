"""Pool-based active learning with hard-label, KNN-regularized self-training."""

from .classifier import (
    LogisticRegressionModel,
    NearestCentroidModel,
    TrainParams,
    model_from_dict,
    train_weighted,
)
from .config import ExperimentConfig
from .data import (
    Dataset,
    DatasetError,
    Instance,
    LabelRecord,
    Metric,
    PoolState,
    Provenance,
    draw_seed_ids,
    dump_dataset,
    generate_blobs,
    init_pools,
    load_dataset,
    subsample_unlabeled,
)
from .engine import (
    ActiveLearningLoop,
    LearningCurve,
    OracleAbort,
    RunAggregate,
    aggregate_runs,
    auc,
    evaluate,
    run_active_learning,
    simulated_oracle,
)
from .selftrain import (
    PseudoLabelBatch,
    SelfTrainResult,
    class_balance_alpha,
    compute_weights,
    hast_self_train,
    knn_vote,
    select_pseudo_labels,
    threshold_self_train,
    verips_self_train,
)
from .strategies import QueryResult, query_breaking_ties, query_contrastive, query_random

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningLoop",
    "Dataset",
    "DatasetError",
    "ExperimentConfig",
    "Instance",
    "LabelRecord",
    "LearningCurve",
    "LogisticRegressionModel",
    "Metric",
    "NearestCentroidModel",
    "OracleAbort",
    "PoolState",
    "Provenance",
    "PseudoLabelBatch",
    "QueryResult",
    "RunAggregate",
    "SelfTrainResult",
    "TrainParams",
    "aggregate_runs",
    "auc",
    "class_balance_alpha",
    "compute_weights",
    "draw_seed_ids",
    "dump_dataset",
    "evaluate",
    "generate_blobs",
    "hast_self_train",
    "init_pools",
    "knn_vote",
    "load_dataset",
    "model_from_dict",
    "query_breaking_ties",
    "query_contrastive",
    "query_random",
    "run_active_learning",
    "select_pseudo_labels",
    "simulated_oracle",
    "subsample_unlabeled",
    "threshold_self_train",
    "train_weighted",
    "verips_self_train",
]
