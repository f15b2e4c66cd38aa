"""Surrogate losses for critic training.

Two per-sample losses over logit vectors, both normalized so that uniform logits
score 1, plus the combined source/target objectives whose minimization drives a
critic to agree with the reference classifier on source samples while
disagreeing on (optionally overlap-discounted) target samples.
"""

from __future__ import annotations

import numpy as np

from ._validation import InputShapeError, as_float_matrix, as_label_vector, as_weight_vector

LOSS_KINDS = ("logistic", "disagreement")

_LOG2 = np.log(2.0)


def _check_loss_kind(loss_kind: str) -> str:
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss_kind {loss_kind!r}, expected one of {LOSS_KINDS}")
    return loss_kind


def _check_logit_batch(logits, targets):
    Z = as_float_matrix(logits, "logits")
    if Z.shape[1] < 2:
        raise InputShapeError("logits need at least 2 classes")
    y = as_label_vector(targets, n=Z.shape[0], name="targets")
    if y.max() >= Z.shape[1]:
        raise ValueError("target class index out of range")
    return Z, y


def logistic_losses(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-sample cross-entropy -log softmax(z)_y, rescaled by 1/log(num_classes).

    Computed through a log-sum-exp shift so arbitrarily large logit magnitudes
    cannot overflow.
    """
    Z, y = _check_logit_batch(logits, targets)
    shifted = Z - Z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    return (lse - shifted[np.arange(Z.shape[0]), y]) / np.log(Z.shape[1])


def disagreement_losses(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-sample log(1 + exp(margin)) / log 2 with margin = z_y - mean of the other logits.

    Always positive, and at least 1 whenever y is the argmax (margin >= 0), which
    makes the value an upper bound on the 0-1 agreement indicator; minimizing it
    therefore pushes the classifier to *disagree* with the given targets.
    """
    Z, y = _check_logit_batch(logits, targets)
    n, k = Z.shape
    z_y = Z[np.arange(n), y]
    margin = z_y - (Z.sum(axis=1) - z_y) / (k - 1)
    return np.logaddexp(0.0, margin) / _LOG2


def logistic_loss(logits, y: int) -> float:
    """Scalar version of :func:`logistic_losses` for one logit vector."""
    return float(logistic_losses(np.atleast_2d(logits), np.asarray([y]))[0])


def dis_loss(logits, y: int) -> float:
    """Scalar version of :func:`disagreement_losses` for one logit vector."""
    return float(disagreement_losses(np.atleast_2d(logits), np.asarray([y]))[0])


def _loss_and_logit_grad(Z: np.ndarray, y: np.ndarray, loss_kind: str,
                         w: np.ndarray) -> tuple[float, np.ndarray]:
    """Unchecked kernel behind :func:`batch_loss_and_logit_grad`.

    Callers guarantee Z is (n, k>=2) float64, y valid int indices, w a length-n
    nonnegative float64 vector. Kept validation-free because training loops hit
    it once or twice per epoch.
    """
    n, k = Z.shape
    rows = np.arange(n)
    if loss_kind == "logistic":
        shifted = Z - Z.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        sums = expz.sum(axis=1)
        losses = (np.log(sums) - shifted[rows, y]) / np.log(k)
        grad = expz / sums[:, None]
        grad[rows, y] -= 1.0
        grad /= np.log(k)
    else:
        z_y = Z[rows, y]
        margin = z_y - (Z.sum(axis=1) - z_y) / (k - 1)
        lse = np.logaddexp(0.0, margin)
        losses = lse / _LOG2
        # sigmoid(margin), computed in log space to stay finite for huge margins
        sig = np.exp(margin - lse)
        grad = np.full((n, k), -1.0 / (k - 1))
        grad[rows, y] = 1.0
        grad *= (sig / _LOG2)[:, None]

    loss = float((w * losses).sum() / n)
    grad *= (w / n)[:, None]
    return loss, grad


def batch_loss_and_logit_grad(
    logits: np.ndarray,
    targets: np.ndarray,
    loss_kind: str,
    per_sample_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted mean loss over a batch and its exact gradient w.r.t. the logits.

    The reduction is sum(w_i * loss_i) / n, so unit weights give the plain mean
    and zero weights contribute exactly nothing (value and gradient alike).
    """
    _check_loss_kind(loss_kind)
    Z, y = _check_logit_batch(logits, targets)
    n = Z.shape[0]
    if per_sample_weights is None:
        w = np.ones(n)
    else:
        w = as_weight_vector(per_sample_weights, n, "per_sample_weights")
    return _loss_and_logit_grad(Z, y, loss_kind, w)


def dis2_objective(
    critic,
    source_X: np.ndarray,
    source_pseudo: np.ndarray,
    target_X: np.ndarray,
    target_pseudo: np.ndarray,
) -> float:
    """Mean source logistic loss plus mean target disagreement loss of a critic.

    Pseudo-labels are the reference classifier's predictions; minimizing this in
    the critic maximizes a concave surrogate of the empirical discrepancy.
    """
    return odd_objective(critic, source_X, source_pseudo, target_X, target_pseudo,
                         target_weights=np.ones(as_float_matrix(target_X, "target_X").shape[0]))


def odd_objective(
    critic,
    source_X: np.ndarray,
    source_pseudo: np.ndarray,
    target_X: np.ndarray,
    target_pseudo: np.ndarray,
    target_weights: np.ndarray,
    discount_source: bool = False,
    source_weights: np.ndarray | None = None,
) -> float:
    """Overlap-discounted critic objective.

    The target disagreement term is weighted per sample by ``target_weights`` (the
    estimated probability of lying outside the domain overlap), so overlapping
    target samples stop competing with the source agreement term. With unit
    weights this reduces exactly to :func:`dis2_objective`. When
    ``discount_source`` is set the source logistic term is weighted by
    ``source_weights`` as well.
    """
    source_X = as_float_matrix(source_X, "source_X")
    target_X = as_float_matrix(target_X, "target_X")
    tw = as_weight_vector(target_weights, target_X.shape[0], "target_weights",
                          unit_interval=True)
    sw = None
    if discount_source:
        if source_weights is None:
            raise ValueError("discount_source requires source_weights")
        sw = as_weight_vector(source_weights, source_X.shape[0], "source_weights",
                              unit_interval=True)

    source_term, _ = batch_loss_and_logit_grad(
        critic.forward(source_X), source_pseudo, "logistic", sw)
    target_term, _ = batch_loss_and_logit_grad(
        critic.forward(target_X), target_pseudo, "disagreement", tw)
    return source_term + target_term
