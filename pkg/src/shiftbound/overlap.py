"""Domain-overlap estimation via a source-vs-target domain classifier.

A two-output MLP is trained on class-balanced domain-labeled samples; its
softmax probability of "target" plays the role of a per-sample indicator that
the point lies outside the region where both domains have support. Those
weights are what the overlap-discounted critic objective and discrepancies
consume. A closed-form 1-D Gaussian overlap interval is included purely as a
test oracle for this pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_float_matrix, as_label_vector, as_weight_vector, require_fitted
from .datasets import DatasetPair
from .nn import TrainConfig, init_mlp, train
from .seeding import derive_seed, rng_from_seed


@dataclass
class OverlapWeights:
    """Per-sample weights in [0, 1] estimating membership *outside* the overlap.

    ``target_w[i]`` weights target row i (softmax probability of the target
    domain, or its 0/1 hard version); ``source_w[j]`` weights source row j
    symmetrically. Complementary weights (1 - w) select the overlap region.
    """

    target_w: np.ndarray
    source_w: np.ndarray
    mode: str  # "soft" | "hard"

    def __post_init__(self) -> None:
        self.target_w = as_weight_vector(self.target_w, len(self.target_w),
                                         "target_w", unit_interval=True)
        self.source_w = as_weight_vector(self.source_w, len(self.source_w),
                                         "source_w", unit_interval=True)
        if self.mode not in ("soft", "hard"):
            raise ValueError(f"mode must be 'soft' or 'hard', got {self.mode!r}")
        if self.mode == "hard":
            for name, w in (("target_w", self.target_w), ("source_w", self.source_w)):
                if not np.all((w == 0.0) | (w == 1.0)):
                    raise ValueError(f"hard-mode {name} must be 0/1")

    @classmethod
    def all_ones(cls, n_source: int, n_target: int, mode: str = "soft") -> "OverlapWeights":
        """No-overlap weights: every sample counts fully (reduces ODD paths to plain ones)."""
        return cls(np.ones(n_target), np.ones(n_source), mode)

    def check_alignment(self, pair: DatasetPair) -> "OverlapWeights":
        if len(self.target_w) != pair.target.n or len(self.source_w) != pair.source.n:
            raise ValueError(
                f"weights sized ({len(self.source_w)}, {len(self.target_w)}) do not match "
                f"pair sizes ({pair.source.n}, {pair.target.n})")
        return self


def _softmax_two(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class DomainClassifier(BaseEstimator):
    """Source-vs-target classifier trained on a class-balanced subsample.

    The majority domain is subsampled uniformly without replacement so both
    domains contribute equally, a holdout slice is carved per domain to report
    ``balanced_accuracy_`` (diagnostic only), and the network trains with Adam
    at a low learning rate until the loss plateaus.

    With ``hidden_layer_sizes=None`` the architecture defaults to two hidden
    layers as wide as the feature dimension.
    """

    def __init__(self, hidden_layer_sizes=None, learning_rate=1e-4,
                 max_epochs=2000, batch_size=0, convergence_tol=1e-4,
                 convergence_patience=10, holdout_fraction=0.1, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.convergence_tol = convergence_tol
        self.convergence_patience = convergence_patience
        self.holdout_fraction = holdout_fraction
        self.random_state = random_state
        self.model_ = None

    def fit(self, X, y):
        """Fit on features ``X`` with domain labels ``y`` (0 = source, 1 = target)."""
        X = as_float_matrix(X, "X")
        y = as_label_vector(y, n=X.shape[0], name="y")
        if y.max() > 1:
            raise ValueError("domain labels must be 0 (source) or 1 (target)")
        idx0 = np.flatnonzero(y == 0)
        idx1 = np.flatnonzero(y == 1)
        if len(idx0) == 0 or len(idx1) == 0:
            raise ValueError("both domains must be nonempty")
        frac = float(self.holdout_fraction)
        if not 0.0 <= frac < 1.0:
            raise ValueError("holdout_fraction must lie in [0, 1)")

        rng = rng_from_seed(int(self.random_state))
        m = min(len(idx0), len(idx1))
        picks = []
        for idx in (idx0, idx1):
            chosen = idx if len(idx) == m else rng.choice(idx, size=m, replace=False)
            picks.append(rng.permutation(chosen))
        n_hold = int(round(frac * m)) if frac > 0 else 0
        if m - n_hold < 1:
            raise ValueError("not enough samples per domain after balancing/holdout")

        hold_idx = np.concatenate([p[:n_hold] for p in picks]) if n_hold else None
        train_idx = np.concatenate([p[n_hold:] for p in picks])
        dims = self._dims(X.shape[1])
        initial = init_mlp(dims, seed=derive_seed(int(self.random_state), 1))
        config = TrainConfig(
            learning_rate=self.learning_rate, max_epochs=self.max_epochs,
            batch_size=self.batch_size, seed=derive_seed(int(self.random_state), 2),
            convergence_tol=self.convergence_tol,
            convergence_patience=self.convergence_patience)
        self.model_, self.loss_trace_ = train(
            initial, X[train_idx], y[train_idx], loss_kind="logistic", config=config)
        self.epochs_run_ = len(self.loss_trace_)
        self.n_features_in_ = X.shape[1]
        self.n_balanced_per_domain_ = m
        if hold_idx is not None:
            pred = self.model_.predict(X[hold_idx])
            truth = y[hold_idx]
            accs = [float(np.mean(pred[truth == c] == c)) for c in (0, 1)]
            self.balanced_accuracy_ = float(np.mean(accs))
        else:
            self.balanced_accuracy_ = None
        return self

    def _dims(self, n_features: int) -> list[int]:
        hidden = self.hidden_layer_sizes
        if hidden is None:
            hidden = (n_features, n_features)
        return [n_features, *map(int, hidden), 2]

    def decision_function(self, X) -> np.ndarray:
        require_fitted(self, "model_")
        return self.model_.forward(X)

    def predict(self, X) -> np.ndarray:
        require_fitted(self, "model_")
        return self.model_.predict(X)


def train_domain_classifier(
    pair: DatasetPair,
    hidden_layer_sizes=None,
    config: TrainConfig | None = None,
    holdout_fraction: float = 0.1,
) -> DomainClassifier:
    """Train a domain classifier on a pair with the default low-lr plateau recipe."""
    config = config or TrainConfig(learning_rate=1e-4, max_epochs=2000,
                                   convergence_tol=1e-4, convergence_patience=10)
    X = np.vstack([pair.source.features, pair.target.features])
    y = np.concatenate([np.zeros(pair.source.n, dtype=np.int64),
                        np.ones(pair.target.n, dtype=np.int64)])
    clf = DomainClassifier(
        hidden_layer_sizes=hidden_layer_sizes, learning_rate=config.learning_rate,
        max_epochs=config.max_epochs, batch_size=config.batch_size,
        convergence_tol=config.convergence_tol,
        convergence_patience=config.convergence_patience,
        holdout_fraction=holdout_fraction, random_state=config.seed)
    return clf.fit(X, y)


def soft_weights(clf: DomainClassifier, pair: DatasetPair) -> OverlapWeights:
    """Softmax-probability weights: target rows get p(target|x), source rows p(source|x)."""
    require_fitted(clf, "model_")
    p_target = _softmax_two(clf.decision_function(pair.target.features))[:, 1]
    p_source = _softmax_two(clf.decision_function(pair.source.features))[:, 0]
    return OverlapWeights(p_target, p_source, "soft")


def hard_weights(clf: DomainClassifier, pair: DatasetPair) -> OverlapWeights:
    """Indicator weights from the classified domain; argmax ties resolve to source (0)."""
    require_fitted(clf, "model_")
    t_pred = clf.predict(pair.target.features)
    s_pred = clf.predict(pair.source.features)
    return OverlapWeights((t_pred == 1).astype(np.float64),
                          (s_pred == 0).astype(np.float64), "hard")


def gaussian_overlap_interval(
    mu_s: float, mu_t: float, sigma_sq: float, alpha: float
) -> tuple[float, float] | None:
    """Closed-form overlap of two equal-variance 1-D Gaussian superlevel sets.

    The second Gaussian parameter is the *variance*. Returns the interval where
    both N(mu_s, sigma_sq) and N(mu_t, sigma_sq) have density above ``alpha``,
    or None when that set is empty (including alpha at or above the peak
    density). Test oracle for the domain-classifier pipeline; not used by the
    estimators themselves.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be > 0")
    peak = 1.0 / math.sqrt(2.0 * math.pi * sigma_sq)
    if alpha >= peak:
        return None
    radius = math.sqrt(-2.0 * sigma_sq * math.log(alpha * math.sqrt(2.0 * math.pi * sigma_sq)))
    lo = max(mu_s - radius, mu_t - radius)
    hi = min(mu_s + radius, mu_t + radius)
    return (lo, hi) if lo <= hi else None


def save_weights_csv(weights: OverlapWeights, path) -> None:
    """Audit export: one row per sample as index,domain,weight (domain 0 = source)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,domain,weight\n")
        for domain, w in ((0, weights.source_w), (1, weights.target_w)):
            for i, v in enumerate(w):
                fh.write(f"{i},{domain},{float(v)!r}\n")
