"""Worst-case critic search: multi-restart surrogate maximization of discrepancy.

Given a trained classifier, the search minimizes the combined source-agreement /
target-disagreement objective from several warm starts (the first is the
classifier itself, the rest are small Gaussian perturbations of it) and returns
the restart with the largest empirical discrepancy. The overlap-aware variants
differ only in the per-sample weights they thread through the objective and the
selection metric, so unit weights reproduce the plain variant bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bounds import disagreement_from_predictions
from .datasets import DatasetPair
from .losses import _loss_and_logit_grad
from .nn import (
    AdamState,
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    _backward_from_logit_grad,
    _forward_cached,
    load_model,
    save_model,
)
from .overlap import OverlapWeights
from .seeding import derive_seed, rng_from_seed

CRITIC_METHODS = ("dis2", "odd-soft", "odd-hard")
TRAINABLE_SCOPES = ("all", "last-layer")


@dataclass
class CriticConfig:
    """Search settings: method, number of restarts, trainer, and parameter scope.

    ``max_epochs=0`` in the nested trainer is allowed here (unlike plain
    training) and means "evaluate the warm starts without updating them".
    """

    method: str = "dis2"
    restarts: int = 30
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=1e-3, max_epochs=300))
    trainable_scope: str = "all"
    discount_source: bool = False
    trace: bool = False

    def validate(self) -> "CriticConfig":
        if self.method not in CRITIC_METHODS:
            raise ValueError(f"method must be one of {CRITIC_METHODS}, got {self.method!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.trainable_scope not in TRAINABLE_SCOPES:
            raise ValueError(f"trainable_scope must be one of {TRAINABLE_SCOPES}")
        if self.discount_source and self.method == "dis2":
            raise ValueError("discount_source applies only to the odd methods")
        if self.train.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        return self


@dataclass
class RestartOutcome:
    seed: int
    final_objective: float
    discrepancy: float


@dataclass
class CriticResult:
    """Winning critic plus the per-restart audit trail.

    ``empirical_discrepancy`` is the maximum selection discrepancy across
    restarts and belongs to ``critic``. ``trace`` (present only when tracing was
    enabled) holds the winning restart's discrepancy at initialization followed
    by its value after each training epoch.
    """

    critic: MlpModel
    empirical_discrepancy: float
    per_restart: list[RestartOutcome]
    method: str
    weights: OverlapWeights | None
    epochs_run: int
    trace: list[float] | None = None


def discrepancy_trace(result: CriticResult) -> np.ndarray:
    """Per-epoch discrepancy series of the winning restart (requires tracing enabled)."""
    if result.trace is None:
        raise ValueError("tracing was disabled for this critic search")
    return np.asarray(result.trace, dtype=np.float64)


def _perturbed_copy(model: MlpModel, seed: int, scale: float = 0.05) -> MlpModel:
    """Copy with Gaussian noise of sd = scale * RMS of all parameters pooled."""
    flat = np.concatenate([W.ravel() for W in model.weights]
                          + [b.ravel() for b in model.biases])
    sd = scale * float(np.sqrt(np.mean(flat * flat)))
    out = model.copy()
    rng = rng_from_seed(seed)
    for arr in (*out.weights, *out.biases):
        arr += rng.normal(0.0, sd, size=arr.shape)
    return out


def find_critic(
    h_hat: MlpModel,
    pair: DatasetPair,
    weights: OverlapWeights | None = None,
    config: CriticConfig | None = None,
) -> CriticResult:
    """Run the multi-restart critic search against ``h_hat`` on one pair.

    Pseudo-labels (the classifier's own predictions on both domains) are
    computed once up front. The odd methods require overlap weights of the
    matching mode; the plain method takes none and is equivalent to odd weights
    that are all ones.
    """
    config = (config or CriticConfig()).validate()
    Xs, Xt = pair.source.features, pair.target.features

    if config.method == "dis2":
        if weights is not None:
            raise ValueError("dis2 takes no overlap weights")
        sel_weights = OverlapWeights.all_ones(pair.source.n, pair.target.n)
    else:
        if weights is None:
            raise ValueError(f"method {config.method!r} requires overlap weights")
        weights.check_alignment(pair)
        wanted = "soft" if config.method == "odd-soft" else "hard"
        if weights.mode != wanted:
            raise ValueError(f"method {config.method!r} requires {wanted} weights, "
                             f"got {weights.mode}")
        sel_weights = weights

    target_w = sel_weights.target_w
    objective_source_w = (sel_weights.source_w if config.discount_source
                          else np.ones(pair.source.n))

    source_pseudo = h_hat.predict(Xs)
    target_pseudo = h_hat.predict(Xt)
    n_s = pair.source.n
    X_all = np.vstack([Xs, Xt])

    def objective_and_grads(model):
        # one stacked pass; the two loss kinds split at the logits
        activations, pre = _forward_cached(model, X_all)
        logits = pre[-1]
        loss_s, dZ_s = _loss_and_logit_grad(logits[:n_s], source_pseudo,
                                            "logistic", objective_source_w)
        loss_t, dZ_t = _loss_and_logit_grad(logits[n_s:], target_pseudo,
                                            "disagreement", target_w)
        dZ = np.vstack([dZ_s, dZ_t])
        return loss_s + loss_t, _backward_from_logit_grad(model, activations, pre, dZ)

    # selection metric = the (possibly weighted) empirical discrepancy; the odd
    # methods weight both sides even when the objective leaves source unweighted
    def selection(model) -> float:
        return (disagreement_from_predictions(target_pseudo, model.predict(Xt),
                                              target_w)
                - disagreement_from_predictions(source_pseudo, model.predict(Xs),
                                                sel_weights.source_w))

    tcfg = config.train
    best = None
    per_restart: list[RestartOutcome] = []
    for r in range(config.restarts):
        seed_r = derive_seed(tcfg.seed, r)
        model = h_hat.copy() if r == 0 else _perturbed_copy(h_hat, seed_r)
        adam = AdamState.for_model(model, tcfg.learning_rate)
        trace_r = [selection(model)] if config.trace else None

        calm = 0
        prev = None
        epochs = 0
        for epoch in range(tcfg.max_epochs):
            objective, grads = objective_and_grads(model)
            if not np.isfinite(objective):
                raise TrainingDivergedError(
                    f"critic objective became {objective!r} at restart {r}, epoch {epoch}")
            if config.trainable_scope == "last-layer":
                for arrs in grads:
                    for g in arrs[:-1]:
                        g.fill(0.0)
            adam.update(model, grads)
            epochs += 1
            if config.trace:
                trace_r.append(selection(model))
            if prev is not None and abs(objective - prev) < tcfg.convergence_tol:
                calm += 1
                if calm >= tcfg.convergence_patience:
                    break
            else:
                calm = 0
            prev = objective

        final_objective, _ = objective_and_grads(model)
        disc = selection(model)
        per_restart.append(RestartOutcome(seed_r, float(final_objective), float(disc)))
        if best is None or disc > best[0]:
            best = (disc, model, epochs, trace_r)

    disc, model, epochs, trace_r = best
    return CriticResult(
        critic=model,
        empirical_discrepancy=float(disc),
        per_restart=per_restart,
        method=config.method,
        weights=weights,
        epochs_run=epochs,
        trace=trace_r,
    )


def save_critic_result(result: CriticResult, model_path, meta_path) -> None:
    """Persist the winning model in the flat text format plus a JSON metadata sidecar."""
    save_model(result.critic, model_path)
    meta = {
        "method": result.method,
        "empirical_discrepancy": result.empirical_discrepancy,
        "epochs_run": result.epochs_run,
        "per_restart": [
            {"seed": o.seed, "final_objective": o.final_objective,
             "discrepancy": o.discrepancy}
            for o in result.per_restart
        ],
        "trace": result.trace,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_critic_result(model_path, meta_path) -> CriticResult:
    model = load_model(model_path)
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    return CriticResult(
        critic=model,
        empirical_discrepancy=meta["empirical_discrepancy"],
        per_restart=[RestartOutcome(o["seed"], o["final_objective"], o["discrepancy"])
                     for o in meta["per_restart"]],
        method=meta["method"],
        weights=None,
        epochs_run=meta["epochs_run"],
        trace=meta.get("trace"),
    )
