"""Small dense MLP with hand-written backpropagation and Adam.

This is the one trainable building block in the package: the studied
classifier, every critic, and the domain classifier are all instances of
:class:`MlpModel`. Gradients are exact (they are checked against central finite
differences in the test suite), training is bit-reproducible for a fixed seed,
and logits are raw (no softmax baked into the forward pass).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import (
    InputShapeError,
    as_float_matrix,
    as_label_vector,
    as_weight_vector,
    require_fitted,
)
from .losses import LOSS_KINDS, _loss_and_logit_grad
from .seeding import rng_from_seed


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss becomes NaN or infinite."""


@dataclass
class MlpModel:
    """Dense ReLU network; ``weights[i]`` maps layer_dims[i] -> layer_dims[i+1]."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: str = "relu"

    def __post_init__(self) -> None:
        dims = [int(d) for d in self.layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"layer_dims must be >= 2 positive sizes, got {dims}")
        if self.hidden_activation != "relu":
            raise ValueError(f"unsupported activation {self.hidden_activation!r}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise InputShapeError("parameter count does not match layer_dims")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise InputShapeError(
                    f"layer {i} parameters have shape {W.shape}/{b.shape}, "
                    f"expected {(dims[i], dims[i + 1])}/{(dims[i + 1],)}")
        self.layer_dims = dims

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(list(self.layer_dims), [W.copy() for W in self.weights],
                        [b.copy() for b in self.biases], self.hidden_activation)

    def forward(self, X) -> np.ndarray:
        """Logits for a batch; shape (n, layer_dims[-1]). Does not mutate the model."""
        A = as_float_matrix(X, "X")
        if A.shape[1] != self.n_inputs:
            raise InputShapeError(
                f"X has {A.shape[1]} features, model expects {self.n_inputs}")
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            A = A @ W + b
            if i < last:
                A = np.maximum(A, 0.0)
        return A

    def predict(self, X) -> np.ndarray:
        """Argmax class per row; ties resolve to the lowest class index."""
        return np.argmax(self.forward(X), axis=1).astype(np.int64)


def init_mlp(layer_dims, seed: int) -> MlpModel:
    """Glorot-uniform weights (per-layer bound sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = rng_from_seed(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_dims), weights, biases)


def identity_model(n_classes: int) -> MlpModel:
    """Single linear layer fixed to the identity map; used when inputs already are logits."""
    if n_classes < 2:
        raise ValueError("identity model needs at least 2 classes")
    return MlpModel([n_classes, n_classes], [np.eye(n_classes)], [np.zeros(n_classes)])


def _forward_cached(model: MlpModel, X: np.ndarray):
    """Unchecked forward pass keeping the activations and pre-activations."""
    activations = [X]
    pre = []
    A = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        Z = A @ W + b
        pre.append(Z)
        A = np.maximum(Z, 0.0) if i < last else Z
        activations.append(A)
    return activations, pre


def _backward_from_logit_grad(model: MlpModel, activations, pre, dZ):
    """Exact parameter gradients given the loss gradient at the output logits."""
    last = len(model.weights) - 1
    d_weights: list[np.ndarray] = [None] * len(model.weights)  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * len(model.biases)  # type: ignore[list-item]
    for i in range(last, -1, -1):
        d_weights[i] = activations[i].T @ dZ
        d_biases[i] = dZ.sum(axis=0)
        if i > 0:
            dZ = (dZ @ model.weights[i].T) * (pre[i - 1] > 0.0)
    return d_weights, d_biases


def _forward_backward(
    model: MlpModel, X: np.ndarray, y: np.ndarray, loss_kind: str, w: np.ndarray
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Unchecked forward + exact backward pass; training loops call this per epoch."""
    activations, pre = _forward_cached(model, X)
    loss, dZ = _loss_and_logit_grad(pre[-1], y, loss_kind, w)
    return loss, _backward_from_logit_grad(model, activations, pre, dZ)


def loss_and_grads(
    model: MlpModel,
    X,
    targets,
    loss_kind: str,
    per_sample_weights=None,
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Weighted mean loss over the batch and exact parameter gradients.

    Returns ``(loss, (d_weights, d_biases))`` with gradient arrays shaped like the
    corresponding parameters. The reduction matches
    :func:`shiftbound.losses.batch_loss_and_logit_grad`: sum(w_i * loss_i) / n.
    """
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss_kind {loss_kind!r}")
    X = as_float_matrix(X, "X")
    if X.shape[1] != model.n_inputs:
        raise InputShapeError(
            f"X has {X.shape[1]} features, model expects {model.n_inputs}")
    y = as_label_vector(targets, n=X.shape[0], name="targets")
    if y.max() >= model.n_outputs:
        raise ValueError("target class index out of range")
    if per_sample_weights is None:
        w = np.ones(X.shape[0])
    else:
        w = as_weight_vector(per_sample_weights, X.shape[0], "per_sample_weights")
    return _forward_backward(model, X, y, loss_kind, w)


@dataclass
class AdamState:
    """Adam moment accumulators mirroring a model's parameter shapes."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_weights: list[np.ndarray] = field(default_factory=list)
    v_weights: list[np.ndarray] = field(default_factory=list)
    m_biases: list[np.ndarray] = field(default_factory=list)
    v_biases: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_model(cls, model: MlpModel, learning_rate: float) -> "AdamState":
        state = cls(learning_rate=float(learning_rate))
        state.m_weights = [np.zeros_like(W) for W in model.weights]
        state.v_weights = [np.zeros_like(W) for W in model.weights]
        state.m_biases = [np.zeros_like(b) for b in model.biases]
        state.v_biases = [np.zeros_like(b) for b in model.biases]
        return state

    def update(self, model: MlpModel, grads) -> None:
        """One in-place Adam step. A zero gradient moves the parameter by exactly zero."""
        d_weights, d_biases = grads
        self.step += 1
        bc1 = 1.0 - self.beta1 ** self.step
        bc2 = 1.0 - self.beta2 ** self.step
        for params, gs, ms, vs in (
            (model.weights, d_weights, self.m_weights, self.v_weights),
            (model.biases, d_biases, self.m_biases, self.v_biases),
        ):
            for p, g, m, v in zip(params, gs, ms, vs):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                p -= self.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainConfig:
    """Hyperparameters for one Adam training run.

    ``batch_size`` 0 means full batch. Training stops once the epoch-to-epoch
    loss delta stays below ``convergence_tol`` for ``convergence_patience``
    consecutive epochs, or after ``max_epochs``.
    """

    learning_rate: float = 1e-3
    max_epochs: int = 300
    batch_size: int = 0
    seed: int = 0
    convergence_tol: float = 1e-4
    convergence_patience: int = 10

    def validate(self) -> "TrainConfig":
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.convergence_patience < 1:
            raise ValueError("convergence_patience must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be >= 0")
        if self.batch_size < 0:
            raise ValueError("batch_size must be >= 0 (0 = full batch)")
        return self


def train(
    model: MlpModel,
    X,
    y,
    loss_kind: str = "logistic",
    per_sample_weights=None,
    config: TrainConfig | None = None,
) -> tuple[MlpModel, list[float]]:
    """Train a copy of ``model`` with Adam; returns (trained model, per-epoch loss trace).

    The input model is left untouched. Each traced loss is the epoch's weighted
    mean training loss evaluated before that epoch's parameter updates were
    completed (for full-batch runs: the loss at the epoch's start).
    """
    config = (config or TrainConfig()).validate()
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss_kind {loss_kind!r}")
    X = as_float_matrix(X, "X")
    if X.shape[1] != model.n_inputs:
        raise InputShapeError(
            f"X has {X.shape[1]} features, model expects {model.n_inputs}")
    y = as_label_vector(y, n=X.shape[0], name="y")
    if y.max() >= model.n_outputs:
        raise ValueError("label class index out of range")
    n = X.shape[0]
    if per_sample_weights is None:
        w = np.ones(n)
    else:
        w = as_weight_vector(per_sample_weights, n, "per_sample_weights")

    model = model.copy()
    adam = AdamState.for_model(model, config.learning_rate)
    rng = rng_from_seed(config.seed)
    batch = n if config.batch_size == 0 else min(config.batch_size, n)

    trace: list[float] = []
    calm_epochs = 0
    prev_loss = None
    for epoch in range(config.max_epochs):
        if batch == n:
            epoch_loss, grads = _forward_backward(model, X, y, loss_kind, w)
            _check_finite_loss(epoch_loss, epoch)
            adam.update(model, grads)
        else:
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                batch_loss, grads = _forward_backward(model, X[idx], y[idx],
                                                      loss_kind, w[idx])
                _check_finite_loss(batch_loss, epoch)
                adam.update(model, grads)
                total += batch_loss * idx.shape[0]
            epoch_loss = total / n
        trace.append(epoch_loss)

        if prev_loss is not None and abs(epoch_loss - prev_loss) < config.convergence_tol:
            calm_epochs += 1
            if calm_epochs >= config.convergence_patience:
                break
        else:
            calm_epochs = 0
        prev_loss = epoch_loss
    return model, trace


def _check_finite_loss(loss: float, epoch: int) -> None:
    if not np.isfinite(loss):
        raise TrainingDivergedError(
            f"training loss became {loss!r} at epoch {epoch}; "
            "lower the learning rate or check the inputs")


# --- flat text serialization -------------------------------------------------

_FORMAT_TAG = "shiftbound-mlp 1"


def dump_model(model: MlpModel) -> str:
    """Self-describing flat text form: header, then row-major parameters at 17 digits."""
    out = io.StringIO()
    out.write(_FORMAT_TAG + "\n")
    out.write("layer_dims " + " ".join(str(d) for d in model.layer_dims) + "\n")
    out.write(f"activation {model.hidden_activation}\n")
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        out.write(f"W{i}\n")
        for row in W:
            out.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        out.write(f"b{i}\n")
        out.write(" ".join(f"{v:.17g}" for v in b) + "\n")
    return out.getvalue()


def parse_model(text: str) -> MlpModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _FORMAT_TAG:
        raise ValueError(f"not a {_FORMAT_TAG!r} file")
    if not lines[1].startswith("layer_dims "):
        raise ValueError("missing layer_dims header")
    dims = [int(tok) for tok in lines[1].split()[1:]]
    activation = lines[2].split()[1]
    pos = 3
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if lines[pos].strip() != f"W{i}":
            raise ValueError(f"expected W{i} at line {pos + 1}")
        pos += 1
        W = np.array([[float(tok) for tok in lines[pos + r].split()]
                      for r in range(fan_in)])
        pos += fan_in
        if lines[pos].strip() != f"b{i}":
            raise ValueError(f"expected b{i} at line {pos + 1}")
        pos += 1
        b = np.array([float(tok) for tok in lines[pos].split()])
        pos += 1
        weights.append(W)
        biases.append(b)
    return MlpModel(dims, weights, biases, activation)


def save_model(model: MlpModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_model(model))


def load_model(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


# --- sklearn-style estimator wrapper -----------------------------------------


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn style front end for the manual-backprop MLP.

    Parameters mirror :class:`TrainConfig` plus the architecture; fitted state
    lives in ``model_`` (an :class:`MlpModel`) and ``loss_trace_``. With
    ``n_classes=None`` the output width is inferred as ``max(y) + 1``.
    """

    def __init__(self, hidden_layer_sizes=(16, 16), n_classes=None,
                 loss="logistic", learning_rate=1e-3, max_epochs=300,
                 batch_size=0, convergence_tol=1e-4, convergence_patience=10,
                 random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.n_classes = n_classes
        self.loss = loss
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.convergence_tol = convergence_tol
        self.convergence_patience = convergence_patience
        self.random_state = random_state
        self.model_ = None

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, max_epochs=self.max_epochs,
            batch_size=self.batch_size, seed=self.random_state,
            convergence_tol=self.convergence_tol,
            convergence_patience=self.convergence_patience).validate()

    def fit(self, X, y, sample_weight=None):
        X = as_float_matrix(X, "X")
        y = as_label_vector(y, n=X.shape[0], name="y")
        k = int(self.n_classes) if self.n_classes is not None else int(y.max()) + 1
        if k < 2:
            raise ValueError("need at least 2 classes")
        if y.max() >= k:
            raise ValueError("label outside [0, n_classes)")
        dims = [X.shape[1], *map(int, self.hidden_layer_sizes), k]
        initial = init_mlp(dims, seed=int(self.random_state))
        self.model_, self.loss_trace_ = train(
            initial, X, y, loss_kind=self.loss,
            per_sample_weights=sample_weight, config=self._train_config())
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.arange(k)
        return self

    def decision_function(self, X) -> np.ndarray:
        require_fitted(self, "model_")
        return self.model_.forward(X)

    def predict(self, X) -> np.ndarray:
        require_fitted(self, "model_")
        return self.model_.predict(X)
