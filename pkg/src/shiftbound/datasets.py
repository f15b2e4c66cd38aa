"""Two-domain datasets: the 2-D synthetic Gaussian benchmark and CSV ingestion.

The synthetic generator draws source/target Gaussian clouds whose means are
pulled together by an overlap factor, then labels every point with a wavy
threshold curve in the first coordinate. Externally computed representations
(deep features or logits) enter through a single flat CSV schema:
``domain,label,f0,...,f{d-1}`` with domain 0=source / 1=target and label -1
for unknown.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._validation import InputShapeError, as_float_matrix, as_label_vector
from .seeding import derive_seed, rng_from_seed

SOURCE, TARGET = "source", "target"


class CsvFormatError(ValueError):
    """Malformed dataset CSV; messages carry the 1-based offending line number."""


@dataclass
class Dataset:
    """Feature matrix with per-row integer labels (-1 = unknown) and a domain tag."""

    features: np.ndarray
    labels: np.ndarray
    domain_tag: str

    def __post_init__(self) -> None:
        self.features = as_float_matrix(self.features, "features")
        self.labels = as_label_vector(self.labels, n=self.features.shape[0],
                                      name="labels", allow_unknown=True)
        if self.domain_tag not in (SOURCE, TARGET):
            raise ValueError(f"domain_tag must be 'source' or 'target', got {self.domain_tag!r}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels >= 0

    def is_fully_labeled(self) -> bool:
        return bool(np.all(self.labels >= 0))


@dataclass
class DatasetPair:
    """A source dataset and a target dataset over the same feature space."""

    source: Dataset
    target: Dataset

    def __post_init__(self) -> None:
        if self.source.dim != self.target.dim:
            raise InputShapeError(
                f"source dim {self.source.dim} != target dim {self.target.dim}")
        if self.source.domain_tag != SOURCE or self.target.domain_tag != TARGET:
            raise ValueError("pair sides must carry source/target domain tags")

    @property
    def dim(self) -> int:
        return self.source.dim


@dataclass
class TrainValPair:
    """Disjoint train/validation splits of the same two-domain draw."""

    train: DatasetPair
    val: DatasetPair


@dataclass
class SyntheticConfig:
    """Parameters of one synthetic two-domain draw.

    ``label_params`` are the (a, b, c, d) coefficients of the labeling threshold
    curve; ``overlap_factor`` in [0, 1] translates the target mean toward the
    source mean (1 = coincident means).
    """

    mean_s: tuple[float, float] = (-3.0, 0.0)
    mean_t: tuple[float, float] = (3.0, 0.0)
    cov_s: np.ndarray | None = None
    cov_t: np.ndarray | None = None
    overlap_factor: float = 0.0
    label_params: tuple[float, float, float, float] = (1.0, 1.0, 0.5, 0.5)
    label_noise_sd: float = 0.05
    n_train: int = 2000
    n_val: int = 1250
    seed: int = 0

    def __post_init__(self) -> None:
        if self.cov_s is None:
            self.cov_s = np.eye(2)
        if self.cov_t is None:
            self.cov_t = np.eye(2)
        self.cov_s = _check_covariance(np.asarray(self.cov_s, dtype=np.float64), "cov_s")
        self.cov_t = _check_covariance(np.asarray(self.cov_t, dtype=np.float64), "cov_t")
        if not 0.0 <= self.overlap_factor <= 1.0:
            raise ValueError(f"overlap_factor must lie in [0, 1], got {self.overlap_factor}")
        if self.label_noise_sd < 0:
            raise ValueError("label_noise_sd must be >= 0")
        if len(self.label_params) != 4:
            raise ValueError("label_params must be (a, b, c, d)")
        if self.n_train < 1 or self.n_val < 1:
            raise ValueError("n_train and n_val must be >= 1")


def _check_covariance(cov: np.ndarray, name: str) -> np.ndarray:
    if cov.shape != (2, 2):
        raise InputShapeError(f"{name} must be 2x2")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive-definite") from None
    return cov


def apply_overlap(config: SyntheticConfig) -> SyntheticConfig:
    """Translate the target mean toward the source mean by the overlap factor.

    mean_t <- mean_t + (mean_s - mean_t) * overlap_factor; the source mean and
    both covariances are untouched.
    """
    f = config.overlap_factor
    ms, mt = np.asarray(config.mean_s, float), np.asarray(config.mean_t, float)
    moved = mt + (ms - mt) * f
    return replace(config, mean_t=(float(moved[0]), float(moved[1])))


def label_threshold(x2, params) -> np.ndarray:
    """The wavy class boundary in x1 as a function of x2; always in [-1, 1]."""
    a, b, c, d = (float(v) for v in params)
    x2 = np.asarray(x2, dtype=np.float64)
    # exp argument clipped so the function stays total for extreme coordinates
    arg = a * np.sin(b * x2) + c * np.exp(np.clip(d * x2, -700.0, 700.0))
    arg = arg + (x2 * x2 + 2.0 * x2 - 5.0) / 2.0
    return np.cos(arg)


def label_points(X, params, noise) -> np.ndarray:
    """Class 0 where x1 <= threshold(x2) + noise, else class 1."""
    X = as_float_matrix(X, "X")
    noise = np.asarray(noise, dtype=np.float64)
    thr = label_threshold(X[:, 1], params) + noise
    return np.where(X[:, 0] <= thr, 0, 1).astype(np.int64)


def label_point(x1: float, x2: float, params, noise_draw: float = 0.0) -> int:
    """Scalar version of :func:`label_points` (noise_draw 0 gives the noiseless rule)."""
    return int(label_points(np.array([[x1, x2]]), params, np.array([noise_draw]))[0])


def standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals via the Box-Muller transform of uniform draws."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n]


def _sample_gaussian(rng, mean, cov, n: int) -> np.ndarray:
    L = np.linalg.cholesky(cov)
    Z = standard_normals(rng, n * 2).reshape(n, 2)
    return np.asarray(mean, float) + Z @ L.T


def generate_pair(config: SyntheticConfig) -> TrainValPair:
    """Sample, label, and split one synthetic two-domain draw.

    The target mean is translated by the overlap factor first; every point gets
    a fresh label-noise draw; the first n_train rows of each domain form the
    train split and the remaining n_val rows the validation split.
    """
    cfg = apply_overlap(config)
    rng = rng_from_seed(cfg.seed)
    sd = cfg.label_noise_sd

    splits: dict[str, list[Dataset]] = {SOURCE: [], TARGET: []}
    for tag, mean, cov in ((SOURCE, cfg.mean_s, cfg.cov_s), (TARGET, cfg.mean_t, cfg.cov_t)):
        total = cfg.n_train + cfg.n_val
        X = _sample_gaussian(rng, mean, cov, total)
        noise = sd * standard_normals(rng, total)
        y = label_points(X, cfg.label_params, noise)
        splits[tag] = [
            Dataset(X[:cfg.n_train], y[:cfg.n_train], tag),
            Dataset(X[cfg.n_train:], y[cfg.n_train:], tag),
        ]
    return TrainValPair(
        train=DatasetPair(splits[SOURCE][0], splits[TARGET][0]),
        val=DatasetPair(splits[SOURCE][1], splits[TARGET][1]),
    )


def draw_synthetic_config(template: SyntheticConfig, draw_seed: int) -> SyntheticConfig:
    """Randomize one sweep cell from a template: means, covariances, labeling curve, overlap.

    Source mean ~ U([-4,-2] x [-2,2]) and target mean ~ U([2,4] x [-2,2]) so the
    labeling boundary region (|x1| <= 1) sits between the domains; covariances
    get axis variances U[0.5, 2.5] under a uniformly random rotation; the curve
    coefficients a, b, c, d ~ U[-2, 2]; overlap factor ~ U[0, 1]. Sizes and
    label noise come from the template.
    """
    rng = rng_from_seed(draw_seed)

    def random_cov():
        v = rng.uniform(0.5, 2.5, size=2)
        theta = rng.uniform(0.0, np.pi)
        c, s = np.cos(theta), np.sin(theta)
        R = np.array([[c, -s], [s, c]])
        C = R @ np.diag(v) @ R.T
        return (C + C.T) / 2.0  # exact symmetry despite rounding

    mean_s = (rng.uniform(-4.0, -2.0), rng.uniform(-2.0, 2.0))
    mean_t = (rng.uniform(2.0, 4.0), rng.uniform(-2.0, 2.0))
    cov_s, cov_t = random_cov(), random_cov()
    label_params = tuple(rng.uniform(-2.0, 2.0, size=4))
    overlap_factor = float(rng.uniform(0.0, 1.0))
    return replace(
        template, mean_s=mean_s, mean_t=mean_t, cov_s=cov_s, cov_t=cov_t,
        label_params=label_params, overlap_factor=overlap_factor,
        seed=derive_seed(draw_seed, 1))


# --- CSV schema ---------------------------------------------------------------


def save_csv(pair: DatasetPair, path) -> None:
    """Write a pair in the flat schema, source rows first, 17 significant digits."""
    dim = pair.dim
    header = "domain,label," + ",".join(f"f{j}" for j in range(dim))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for code, ds in ((0, pair.source), (1, pair.target)):
            for row, label in zip(ds.features, ds.labels):
                cells = [str(code), str(int(label))]
                cells += [f"{v:.17g}" for v in row]
                fh.write(",".join(cells) + "\n")


def load_csv(path, mode: str = "features") -> DatasetPair:
    """Read a pair from the flat schema; row problems are reported with line numbers.

    In ``logits`` mode the feature columns are taken to be classifier logits, so
    there must be at least two of them and every known label must index one.
    """
    if mode not in ("features", "logits"):
        raise ValueError(f"mode must be 'features' or 'logits', got {mode!r}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError("line 1: empty file")

    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "domain" or header[1] != "label":
        raise CsvFormatError(f"line 1: header must start with domain,label,f0,... "
                             f"got {lines[0]!r}")
    dim = len(header) - 2
    expected = ["domain", "label"] + [f"f{j}" for j in range(dim)]
    if header != expected:
        raise CsvFormatError(f"line 1: malformed feature columns in header {lines[0]!r}")
    if mode == "logits" and dim < 2:
        raise CsvFormatError("line 1: logits mode needs at least 2 feature columns")

    rows: dict[int, list[tuple[np.ndarray, int]]] = {0: [], 1: []}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != dim + 2:
            raise CsvFormatError(f"line {lineno}: expected {dim + 2} cells, got {len(cells)}")
        try:
            domain = int(cells[0])
        except ValueError:
            raise CsvFormatError(f"line {lineno}: non-integer domain {cells[0]!r}") from None
        if domain not in (0, 1):
            raise CsvFormatError(f"line {lineno}: domain must be 0 or 1, got {cells[0]!r}")
        try:
            label = int(cells[1])
        except ValueError:
            raise CsvFormatError(f"line {lineno}: non-integer label {cells[1]!r}") from None
        if label < -1:
            raise CsvFormatError(f"line {lineno}: label must be >= -1, got {label}")
        if mode == "logits" and label >= dim:
            raise CsvFormatError(f"line {lineno}: label {label} outside the {dim} logit columns")
        try:
            feats = np.array([float(tok) for tok in cells[2:]], dtype=np.float64)
        except ValueError:
            raise CsvFormatError(f"line {lineno}: non-numeric feature cell") from None
        if not np.all(np.isfinite(feats)):
            raise CsvFormatError(f"line {lineno}: non-finite feature value")
        rows[domain].append((feats, label))

    for code, tag in ((0, "source"), (1, "target")):
        if not rows[code]:
            raise CsvFormatError(f"no {tag} rows (domain={code}) in file")

    def build(code: int, tag: str) -> Dataset:
        feats = np.vstack([r[0] for r in rows[code]])
        labels = np.array([r[1] for r in rows[code]], dtype=np.int64)
        return Dataset(feats, labels, tag)

    return DatasetPair(build(0, SOURCE), build(1, TARGET))
