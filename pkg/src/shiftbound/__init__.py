"""Reliable accuracy lower bounds for classifiers under distribution shift.

The pipeline: train (or ingest) a classifier on labeled source data, search for
worst-case critics against it, estimate domain overlap with a source-vs-target
classifier, and turn source accuracy, discrepancy, and a finite-sample term
into a certified lower bound on unlabeled-target accuracy.
"""

from .bounds import (
    BoundConfig,
    BoundReport,
    OverlapDiagnostics,
    SplitBound,
    assumption2_gap,
    bound_report,
    concentration,
    dis2_discrepancy,
    disagreement,
    odd_discrepancy,
    overlap_diagnostics,
    overlap_discrepancy,
    split_bound_report,
)
from .critic import (
    CriticConfig,
    CriticResult,
    discrepancy_trace,
    find_critic,
    load_critic_result,
    save_critic_result,
)
from .datasets import (
    CsvFormatError,
    Dataset,
    DatasetPair,
    SyntheticConfig,
    TrainValPair,
    apply_overlap,
    draw_synthetic_config,
    generate_pair,
    label_point,
    label_points,
    load_csv,
    save_csv,
)
from .harness import (
    MetricsReport,
    RunRecord,
    SweepConfig,
    SweepSummary,
    evaluate,
    export,
    run_single,
    run_sweep,
    summarize,
)
from .losses import (
    dis2_objective,
    dis_loss,
    disagreement_losses,
    logistic_loss,
    logistic_losses,
    odd_objective,
)
from .nn import (
    AdamState,
    MlpClassifier,
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    identity_model,
    init_mlp,
    load_model,
    loss_and_grads,
    save_model,
    train,
)
from .overlap import (
    DomainClassifier,
    OverlapWeights,
    gaussian_overlap_interval,
    hard_weights,
    save_weights_csv,
    soft_weights,
    train_domain_classifier,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "BoundConfig", "BoundReport", "CriticConfig", "CriticResult",
    "CsvFormatError", "Dataset", "DatasetPair", "DomainClassifier",
    "MetricsReport", "MlpClassifier", "MlpModel", "OverlapDiagnostics",
    "OverlapWeights", "RunRecord", "SplitBound", "SweepConfig", "SweepSummary",
    "SyntheticConfig", "TrainConfig", "TrainValPair", "TrainingDivergedError",
    "apply_overlap", "assumption2_gap", "bound_report", "concentration",
    "dis2_discrepancy", "dis2_objective", "dis_loss", "disagreement",
    "disagreement_losses", "discrepancy_trace", "draw_synthetic_config",
    "evaluate", "export", "find_critic", "gaussian_overlap_interval",
    "generate_pair", "hard_weights", "identity_model", "init_mlp",
    "label_point", "label_points", "load_csv", "load_critic_result",
    "load_model", "logistic_loss", "logistic_losses", "loss_and_grads",
    "odd_discrepancy", "odd_objective", "overlap_diagnostics",
    "overlap_discrepancy", "run_single", "run_sweep", "save_critic_result",
    "save_csv", "save_model", "save_weights_csv", "soft_weights",
    "split_bound_report", "summarize", "train", "train_domain_classifier",
]
