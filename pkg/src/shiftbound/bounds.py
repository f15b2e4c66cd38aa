"""Discrepancy measures, the finite-sample term, and accuracy/error bound reports.

All empirical discrepancies are differences of (optionally weighted) argmax
disagreement rates between two classifiers, measured on the target side minus
the source side. The weighted variants keep the full-set 1/n normalization, so
for any weight vectors in [0, 1] the full discrepancy decomposes exactly into
its non-overlap and overlap parts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import as_float_matrix, as_weight_vector
from .datasets import Dataset, DatasetPair
from .overlap import OverlapWeights


def disagreement_from_predictions(pred_a, pred_b, per_sample_weights=None) -> float:
    """Weighted mean of the prediction-mismatch indicator: sum(w * 1{a != b}) / n."""
    pred_a = np.asarray(pred_a)
    pred_b = np.asarray(pred_b)
    if pred_a.shape != pred_b.shape or pred_a.ndim != 1:
        raise ValueError(f"prediction vectors must share one shape, "
                         f"got {pred_a.shape} and {pred_b.shape}")
    n = pred_a.shape[0]
    if n == 0:
        raise ValueError("cannot measure disagreement on an empty set")
    w = np.ones(n) if per_sample_weights is None else as_weight_vector(
        per_sample_weights, n, "per_sample_weights")
    mismatch = (pred_a != pred_b).astype(np.float64)
    return float((w * mismatch).sum() / n)


def disagreement(h, h_prime, X, per_sample_weights=None) -> float:
    """Rate at which two classifiers' argmax predictions differ on ``X``."""
    X = as_float_matrix(X, "X")
    return disagreement_from_predictions(h.predict(X), h_prime.predict(X),
                                         per_sample_weights)


def dis2_discrepancy(h, h_prime, pair: DatasetPair) -> float:
    """Target disagreement minus source disagreement, unweighted; lies in [-1, 1]."""
    return (disagreement(h, h_prime, pair.target.features)
            - disagreement(h, h_prime, pair.source.features))


def odd_discrepancy(h, h_prime, pair: DatasetPair, weights: OverlapWeights) -> float:
    """Non-overlap discrepancy: disagreement rates weighted toward samples outside overlap."""
    weights.check_alignment(pair)
    return (disagreement(h, h_prime, pair.target.features, weights.target_w)
            - disagreement(h, h_prime, pair.source.features, weights.source_w))


def overlap_discrepancy(h, h_prime, pair: DatasetPair, weights: OverlapWeights) -> float:
    """Complementary discrepancy inside the overlap, via the (1 - w) weights.

    For any shared weight vector, dis2_discrepancy = odd_discrepancy +
    overlap_discrepancy up to floating-point rounding.
    """
    weights.check_alignment(pair)
    return (disagreement(h, h_prime, pair.target.features, 1.0 - weights.target_w)
            - disagreement(h, h_prime, pair.source.features, 1.0 - weights.source_w))


def concentration(n_source: int, n_target: int, delta: float) -> float:
    """Finite-sample correction sqrt((n_S + 4 n_T) log(1/delta) / (2 n_S n_T)).

    Strictly decreasing in each sample size and in delta.
    """
    if n_source < 1 or n_target < 1:
        raise ValueError("sample counts must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt((n_source + 4.0 * n_target) * math.log(1.0 / delta)
                     / (2.0 * n_source * n_target))


_DISCREPANCY_MODES = ("full", "nonoverlap-soft", "nonoverlap-hard")
_CONVENTIONS = ("accuracy-lower-bound", "error-bound")

# column order of a BoundReport CSV row (matches the dataclass field order)
BOUND_REPORT_FIELDS = (
    "source_val_accuracy", "source_val_error", "discrepancy_full",
    "discrepancy_nonoverlap", "overlap_discrepancy", "concentration_term",
    "predicted_accuracy_lower", "predicted_error_upper",
    "predicted_accuracy_lower_no_delta", "predicted_error_upper_no_delta",
    "delta", "discrepancy_mode", "convention", "n_source", "n_target",
    "true_target_accuracy", "valid", "method", "run_id",
)


@dataclass
class BoundConfig:
    """Choices entering a bound: confidence level, which discrepancy, which convention.

    ``full`` uses the plain discrepancy in the prediction (never tighter than the
    non-overlap variants, and needs no overlap partition at bound time);
    ``nonoverlap-soft``/``nonoverlap-hard`` use the weighted non-overlap
    discrepancy and require weights of the matching mode.
    """

    delta: float = 0.01
    discrepancy_mode: str = "full"
    convention: str = "accuracy-lower-bound"

    def validate(self) -> "BoundConfig":
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.discrepancy_mode not in _DISCREPANCY_MODES:
            raise ValueError(f"discrepancy_mode must be one of {_DISCREPANCY_MODES}")
        if self.convention not in _CONVENTIONS:
            raise ValueError(f"convention must be one of {_CONVENTIONS}")
        return self


@dataclass
class BoundReport:
    """Every ingredient of one bound computation, flat and serialization-ready.

    Arithmetic invariants: predicted_accuracy_lower + selected discrepancy +
    concentration_term = source_val_accuracy, and discrepancy_full =
    discrepancy_nonoverlap + overlap_discrepancy (same weights). ``valid`` is
    set only when target labels were available.
    """

    source_val_accuracy: float
    source_val_error: float
    discrepancy_full: float
    discrepancy_nonoverlap: float
    overlap_discrepancy: float
    concentration_term: float
    predicted_accuracy_lower: float
    predicted_error_upper: float
    predicted_accuracy_lower_no_delta: float
    predicted_error_upper_no_delta: float
    delta: float
    discrepancy_mode: str
    convention: str
    n_source: int
    n_target: int
    true_target_accuracy: float | None = None
    valid: bool | None = None
    method: str | None = None
    run_id: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv_row(self) -> str:
        """One comma-separated row in BOUND_REPORT_FIELDS order (None -> empty cell)."""
        def cell(value):
            if value is None:
                return ""
            if isinstance(value, bool):
                return "1" if value else "0"
            if isinstance(value, float):
                return repr(value)
            return str(value)
        data = self.to_dict()
        return ",".join(cell(data[f]) for f in BOUND_REPORT_FIELDS)

    @classmethod
    def from_csv_row(cls, row: str) -> "BoundReport":
        cells = row.split(",")
        if len(cells) != len(BOUND_REPORT_FIELDS):
            raise ValueError(f"expected {len(BOUND_REPORT_FIELDS)} cells, "
                             f"got {len(cells)}")
        kwargs = {}
        for name, cell in zip(BOUND_REPORT_FIELDS, cells):
            if cell == "":
                kwargs[name] = None
            elif name == "valid":
                kwargs[name] = bool(int(cell))
            elif name in ("n_source", "n_target", "run_id"):
                kwargs[name] = int(cell)
            elif name in ("discrepancy_mode", "convention", "method"):
                kwargs[name] = cell
            else:
                kwargs[name] = float(cell)
        return cls(**kwargs)


@dataclass
class OverlapDiagnostics:
    """Label-aware overlap health check plus critic agreement split by region.

    ``assumption2_gap`` is the overlap-weighted error of the classifier against
    true labels on target minus the same on source; the overlap-discounted bound
    leans on this staying at or below zero. Agreement rates are weight-mass
    normalized and live in [0, 1].
    """

    assumption2_gap: float | None
    source_agreement_overlap: float
    source_agreement_nonoverlap: float
    target_agreement_overlap: float
    target_agreement_nonoverlap: float


def _accuracy(h, ds: Dataset) -> float:
    mask = ds.labeled_mask
    if not mask.any():
        raise ValueError(f"{ds.domain_tag} set has no labeled rows")
    pred = h.predict(ds.features[mask])
    return float(np.mean(pred == ds.labels[mask]))


def _resolve_weights(weights: OverlapWeights | None, pair: DatasetPair,
                     config: BoundConfig) -> OverlapWeights:
    if weights is None:
        if config.discrepancy_mode != "full":
            raise ValueError(f"discrepancy_mode {config.discrepancy_mode!r} needs overlap weights")
        return OverlapWeights.all_ones(pair.source.n, pair.target.n)
    weights.check_alignment(pair)
    if config.discrepancy_mode == "nonoverlap-soft" and weights.mode != "soft":
        raise ValueError("nonoverlap-soft requires soft weights")
    if config.discrepancy_mode == "nonoverlap-hard" and weights.mode != "hard":
        raise ValueError("nonoverlap-hard requires hard weights")
    return weights


def bound_report(
    h_hat,
    critic,
    pair: DatasetPair,
    source_val: Dataset,
    weights: OverlapWeights | None = None,
    config: BoundConfig | None = None,
) -> BoundReport:
    """Assemble the full bound report for one (classifier, critic, pair) triple.

    ``critic`` may be a critic-search result or a bare model. Discrepancies are
    measured on ``pair``; the source accuracy comes from the held-out labeled
    ``source_val``; the finite-sample term uses the sizes of ``pair``. The
    prediction is also reported with the finite-sample term dropped
    (``*_no_delta``). When the pair's target rows carry labels, the true target
    accuracy and a validity flag are filled in.
    """
    config = (config or BoundConfig()).validate()
    critic_model = getattr(critic, "critic", critic)
    if not source_val.is_fully_labeled():
        raise ValueError("source_val must be fully labeled")
    weights = _resolve_weights(weights, pair, config)

    src_acc = _accuracy(h_hat, source_val)
    disc_full = dis2_discrepancy(h_hat, critic_model, pair)
    disc_non = odd_discrepancy(h_hat, critic_model, pair, weights)
    disc_over = overlap_discrepancy(h_hat, critic_model, pair, weights)
    selected = disc_full if config.discrepancy_mode == "full" else disc_non
    conc = concentration(pair.source.n, pair.target.n, config.delta)

    truth = None
    valid = None
    if pair.target.labeled_mask.any():
        truth = _accuracy(h_hat, pair.target)
        valid = bool(src_acc - selected - conc <= truth)

    return BoundReport(
        source_val_accuracy=src_acc,
        source_val_error=1.0 - src_acc,
        discrepancy_full=disc_full,
        discrepancy_nonoverlap=disc_non,
        overlap_discrepancy=disc_over,
        concentration_term=conc,
        predicted_accuracy_lower=src_acc - selected - conc,
        predicted_error_upper=(1.0 - src_acc) + selected + conc,
        predicted_accuracy_lower_no_delta=src_acc - selected,
        predicted_error_upper_no_delta=(1.0 - src_acc) + selected,
        delta=config.delta,
        discrepancy_mode=config.discrepancy_mode,
        convention=config.convention,
        n_source=pair.source.n,
        n_target=pair.target.n,
        true_target_accuracy=truth,
        valid=valid,
    )


@dataclass
class SplitBound:
    """Error upper bound split into its non-overlap and overlap discrepancy terms."""

    nonoverlap_term: float
    overlap_term: float
    total_error_upper: float


def split_bound_report(
    h_hat,
    critic,
    pair: DatasetPair,
    source_val: Dataset,
    weights: OverlapWeights | None = None,
    config: BoundConfig | None = None,
) -> SplitBound:
    """Diagnostic two-term decomposition; the total matches the full-mode error bound."""
    config = (config or BoundConfig()).validate()
    report = bound_report(h_hat, critic, pair, source_val, weights, config)
    total = (report.source_val_error + report.discrepancy_nonoverlap
             + report.overlap_discrepancy + report.concentration_term)
    return SplitBound(report.discrepancy_nonoverlap, report.overlap_discrepancy, total)


def assumption2_gap(h_hat, pair: DatasetPair, weights: OverlapWeights) -> float:
    """Overlap-weighted true-label error on target minus the same on source.

    Needs labels on both sides (synthetic or evaluation data only). Uses the
    complement weights (1 - w), i.e. the overlap region, with full-set 1/n
    normalization, matching the overlap discrepancy convention.
    """
    weights.check_alignment(pair)
    if not pair.target.is_fully_labeled():
        raise ValueError("assumption2_gap needs target labels")
    if not pair.source.is_fully_labeled():
        raise ValueError("assumption2_gap needs source labels")
    t_err = (h_hat.predict(pair.target.features) != pair.target.labels).astype(np.float64)
    s_err = (h_hat.predict(pair.source.features) != pair.source.labels).astype(np.float64)
    t_term = ((1.0 - weights.target_w) * t_err).sum() / pair.target.n
    s_term = ((1.0 - weights.source_w) * s_err).sum() / pair.source.n
    return float(t_term - s_term)


def _mass_rate(values: np.ndarray, mass: np.ndarray) -> float:
    total = mass.sum()
    if total <= 1e-12:
        return 1.0  # vacuous region: report full agreement
    return float((mass * values).sum() / total)


def overlap_diagnostics(h_hat, critic, pair: DatasetPair,
                        weights: OverlapWeights) -> OverlapDiagnostics:
    """Agreement of classifier and critic inside/outside the overlap, plus the gap."""
    weights.check_alignment(pair)
    critic_model = getattr(critic, "critic", critic)
    gap = None
    if pair.target.labeled_mask.all() and pair.source.labeled_mask.all():
        gap = assumption2_gap(h_hat, pair, weights)
    agree_t = (h_hat.predict(pair.target.features)
               == critic_model.predict(pair.target.features)).astype(np.float64)
    agree_s = (h_hat.predict(pair.source.features)
               == critic_model.predict(pair.source.features)).astype(np.float64)
    return OverlapDiagnostics(
        assumption2_gap=gap,
        source_agreement_overlap=_mass_rate(agree_s, 1.0 - weights.source_w),
        source_agreement_nonoverlap=_mass_rate(agree_s, weights.source_w),
        target_agreement_overlap=_mass_rate(agree_t, 1.0 - weights.target_w),
        target_agreement_nonoverlap=_mass_rate(agree_t, weights.target_w),
    )
