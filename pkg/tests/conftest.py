"""Shared fixtures: small deterministic two-domain datasets and trained models."""

from __future__ import annotations

import numpy as np
import pytest

from shiftbound.datasets import Dataset, DatasetPair
from shiftbound.nn import MlpClassifier


def gaussian_blob(rng, mean, sd, n):
    return rng.normal(loc=mean, scale=sd, size=(n, 2))


def make_two_domain_pair(seed=0, n=120, source_mean=(-4.0, 0.0),
                         target_mean=(4.0, 0.0), sd=0.8,
                         label_rule=None) -> DatasetPair:
    """Two Gaussian clouds with a simple labeling rule (default: sign of x2)."""
    rng = np.random.default_rng(seed)
    Xs = gaussian_blob(rng, source_mean, sd, n)
    Xt = gaussian_blob(rng, target_mean, sd, n)
    rule = label_rule or (lambda X: (X[:, 1] > 0).astype(np.int64))
    return DatasetPair(Dataset(Xs, rule(Xs), "source"),
                       Dataset(Xt, rule(Xt), "target"))


def make_identical_pair(seed=0, n=120, mean=(0.0, 0.0), sd=1.0) -> DatasetPair:
    """Source and target drawn from the same distribution."""
    rng = np.random.default_rng(seed)
    Xs = gaussian_blob(rng, mean, sd, n)
    Xt = gaussian_blob(rng, mean, sd, n)
    labels = lambda X: (X[:, 1] > 0).astype(np.int64)  # noqa: E731
    return DatasetPair(Dataset(Xs, labels(Xs), "source"),
                       Dataset(Xt, labels(Xt), "target"))


@pytest.fixture(scope="session")
def separable_pair() -> DatasetPair:
    return make_two_domain_pair(seed=7)


@pytest.fixture(scope="session")
def toy_classifier(separable_pair):
    """Small MLP fit on the separable fixture's source split."""
    clf = MlpClassifier(hidden_layer_sizes=(8,), max_epochs=200, random_state=3)
    clf.fit(separable_pair.source.features, separable_pair.source.labels)
    return clf
