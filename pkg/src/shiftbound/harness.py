"""Experiment orchestration: synthetic overlap sweeps, single-run bounds, metrics.

A sweep cell draws a fresh randomized two-domain dataset, trains the studied
classifier and the domain classifier, then runs both critic searches (plain and
overlap-discounted) so every comparison is paired. Cell seeds derive from the
master seed with a splitmix64 stream, so results are reproducible byte for byte
and cells are independent of execution order. The per-run CSV column set is
fixed; bin summaries and metric reports are exportable to CSV and JSON with a
lossless round trip.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import BoundConfig, BoundReport, bound_report, disagreement
from .bounds import assumption2_gap as compute_assumption2_gap
from .critic import CriticConfig, find_critic
from .datasets import (
    Dataset,
    DatasetPair,
    SyntheticConfig,
    draw_synthetic_config,
    generate_pair,
    load_csv,
)
from .nn import (
    MlpClassifier,
    TrainConfig,
    TrainingDivergedError,
    identity_model,
)
from .overlap import hard_weights, soft_weights, train_domain_classifier
from .seeding import derive_seed, rng_from_seed

RUN_CSV_COLUMNS = (
    "run_id", "seed", "overlap_factor", "method", "source_acc",
    "true_target_acc", "pred_lower", "disc_full", "disc_nonoverlap",
    "overlap_disc", "concentration", "assumption2_gap", "valid", "failure",
)


@dataclass
class SweepConfig:
    """Sweep shape, per-component training settings, and output location."""

    num_overlap_draws: int = 100
    repeats: int = 4
    bins: int = 20
    synthetic: SyntheticConfig = field(default_factory=lambda: SyntheticConfig(
        n_train=500, n_val=300))
    hidden_layer_sizes: tuple = (16, 16)
    domain_hidden_layer_sizes: tuple = (16, 16)
    h_hat_train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=1e-3, max_epochs=300))
    # desk-scale domain classifier trains at 1e-3: the 1e-4 recipe stops on the
    # loss-delta plateau long before converging at these sample sizes, leaving
    # near-uniform weights that inflate the overlap term
    domain_train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=1e-3, max_epochs=2000))
    critic_dis2: CriticConfig = field(default_factory=lambda: CriticConfig(
        method="dis2", restarts=3, train=TrainConfig(
            learning_rate=1e-3, max_epochs=200)))
    critic_odd: CriticConfig = field(default_factory=lambda: CriticConfig(
        method="odd-soft", restarts=3, train=TrainConfig(
            learning_rate=1e-3, max_epochs=200)))
    bound: BoundConfig = field(default_factory=BoundConfig)
    weight_mode: str = "soft"
    output_dir: str = "."
    master_seed: int = 20260808

    def validate(self) -> "SweepConfig":
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.num_overlap_draws < self.bins:
            raise ValueError("num_overlap_draws must be >= bins")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.weight_mode not in ("soft", "hard"):
            raise ValueError("weight_mode must be 'soft' or 'hard'")
        if self.critic_dis2.method != "dis2":
            raise ValueError("critic_dis2 must use method 'dis2'")
        wanted = f"odd-{self.weight_mode}"
        if self.critic_odd.method != wanted:
            raise ValueError(f"critic_odd method must be {wanted!r} for "
                             f"weight_mode {self.weight_mode!r}")
        return self

    @property
    def methods(self) -> tuple[str, str]:
        return ("dis2", self.critic_odd.method)

    @classmethod
    def desk_scale(cls, output_dir: str = ".", master_seed: int = 20260808,
                   **overrides) -> "SweepConfig":
        """Defaults sized to finish in minutes on one core."""
        return replace(cls(output_dir=output_dir, master_seed=master_seed),
                       **overrides)

    @classmethod
    def full_scale(cls, output_dir: str = ".", master_seed: int = 20260808,
                   **overrides) -> "SweepConfig":
        """Paper-scale settings: 100 draws x 40 repeats, 2000/1250 samples, 30 restarts."""
        cfg = cls(
            repeats=40,
            synthetic=SyntheticConfig(n_train=2000, n_val=1250),
            h_hat_train=TrainConfig(learning_rate=1e-3, max_epochs=300),
            domain_train=TrainConfig(learning_rate=1e-4, max_epochs=10000),
            critic_dis2=CriticConfig(method="dis2", restarts=30),
            critic_odd=CriticConfig(method="odd-soft", restarts=30),
            output_dir=output_dir, master_seed=master_seed)
        return replace(cfg, **overrides)


@dataclass
class RunRecord:
    """One (sweep cell, method) outcome; ``failure`` is empty on success."""

    run_id: int
    seed: int
    overlap_factor: float
    method: str
    report: BoundReport | None
    assumption2_gap: float | None
    source_agreement: float | None
    target_agreement: float | None
    failure: str = ""


@dataclass
class MethodBinStats:
    mean_pred_lower: float | None
    mean_source_agreement: float | None
    mean_target_agreement: float | None
    mean_disc_full: float | None
    mean_disc_nonoverlap: float | None
    mean_overlap_disc: float | None
    coverage: float | None


@dataclass
class BinSummary:
    bin_index: int
    lo: float
    hi: float
    n_runs: int
    n_failures: int
    mean_overlap: float | None
    mean_true_target_acc: float | None
    mean_assumption2_gap: float | None
    methods: dict[str, MethodBinStats] = field(default_factory=dict)


@dataclass
class SweepSummary:
    bins: list[BinSummary]
    methods: tuple[str, ...]
    n_runs_total: int
    n_failures_total: int


@dataclass
class MetricsReport:
    """Aggregate prediction quality: MAE, coverage, invalid-only MAE, validity cells."""

    mae: float
    coverage: float
    overestimation_mae: float
    n_reports: int
    cells: dict[str, int]

    def to_dict(self) -> dict:
        return {"mae": self.mae, "coverage": self.coverage,
                "overestimation_mae": self.overestimation_mae,
                "n_reports": self.n_reports, "cells": dict(self.cells)}


def bin_index(overlap_factor: float, bins: int) -> int:
    """Equal-width bins [i/bins, (i+1)/bins) over [0, 1], last bin closed."""
    if not 0.0 <= overlap_factor <= 1.0:
        raise ValueError("overlap_factor outside [0, 1]")
    return min(int(overlap_factor * bins), bins - 1)


def _failure_text(stage: str, err: Exception) -> str:
    text = f"{stage}:{type(err).__name__}"
    return text.replace(",", ";").replace("\n", " ")


def _weights_fn(mode: str):
    return soft_weights if mode == "soft" else hard_weights


def run_one_cell(config: SweepConfig, run_id: int) -> list[RunRecord]:
    """Execute one sweep cell; always returns one record per method."""
    run_seed = derive_seed(config.master_seed, run_id)
    syn = draw_synthetic_config(config.synthetic, derive_seed(run_seed, 0))
    methods = config.methods

    def failed(stage: str, err: Exception) -> list[RunRecord]:
        msg = _failure_text(stage, err)
        return [RunRecord(run_id, run_seed, syn.overlap_factor, m, None,
                          None, None, None, failure=msg) for m in methods]

    try:
        tv = generate_pair(syn)
        clf = MlpClassifier(
            hidden_layer_sizes=config.hidden_layer_sizes, n_classes=2,
            learning_rate=config.h_hat_train.learning_rate,
            max_epochs=config.h_hat_train.max_epochs,
            batch_size=config.h_hat_train.batch_size,
            convergence_tol=config.h_hat_train.convergence_tol,
            convergence_patience=config.h_hat_train.convergence_patience,
            random_state=derive_seed(run_seed, 1))
        clf.fit(tv.train.source.features, tv.train.source.labels)
        h_hat = clf.model_

        dclf = train_domain_classifier(
            tv.train, hidden_layer_sizes=config.domain_hidden_layer_sizes,
            config=replace(config.domain_train, seed=derive_seed(run_seed, 2)))
        make_weights = _weights_fn(config.weight_mode)
        w_train = make_weights(dclf, tv.train)
        w_val = make_weights(dclf, tv.val)
        gap = compute_assumption2_gap(h_hat, tv.val, w_val)
    except (TrainingDivergedError, np.linalg.LinAlgError) as err:
        return failed("setup", err)

    records = []
    for method, critic_cfg, seed_slot in (
        (methods[0], config.critic_dis2, 3),
        (methods[1], config.critic_odd, 4),
    ):
        try:
            cfg = replace(critic_cfg,
                          train=replace(critic_cfg.train,
                                        seed=derive_seed(run_seed, seed_slot)))
            w = None if method == "dis2" else w_train
            result = find_critic(h_hat, tv.train, weights=w, config=cfg)
            report = bound_report(h_hat, result, tv.val, tv.val.source,
                                  w_val, config.bound)
            report.method = method
            report.run_id = run_id
            records.append(RunRecord(
                run_id, run_seed, syn.overlap_factor, method, report, gap,
                1.0 - disagreement(h_hat, result.critic, tv.val.source.features),
                1.0 - disagreement(h_hat, result.critic, tv.val.target.features)))
        except (TrainingDivergedError, np.linalg.LinAlgError) as err:
            records.append(RunRecord(run_id, run_seed, syn.overlap_factor, method,
                                     None, None, None, None,
                                     failure=_failure_text("critic", err)))
    return records


def run_sweep(config: SweepConfig) -> tuple[SweepSummary, list[RunRecord]]:
    """Run the whole sweep, write the per-run CSV, and return the bin summary."""
    config.validate()
    records: list[RunRecord] = []
    n_cells = config.repeats * config.num_overlap_draws
    for run_id in range(n_cells):
        records.extend(run_one_cell(config, run_id))

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_runs_csv(records_to_rows(records), out_dir / "runs.csv")
    summary = summarize(records, config.bins, config.methods)
    return summary, records


def summarize(records: list[RunRecord], bins: int,
              methods: tuple[str, ...]) -> SweepSummary:
    """Aggregate paired run records into equal-width overlap-factor bins."""
    by_run: dict[int, dict[str, RunRecord]] = {}
    for rec in records:
        by_run.setdefault(rec.run_id, {})[rec.method] = rec

    complete: dict[int, list[int]] = {b: [] for b in range(bins)}
    failures = np.zeros(bins, dtype=int)
    for run_id, per_method in by_run.items():
        rec0 = next(iter(per_method.values()))
        b = bin_index(rec0.overlap_factor, bins)
        anything_failed = any(r.failure for r in per_method.values())
        failures[b] += sum(1 for r in per_method.values() if r.failure)
        if not anything_failed and set(per_method) == set(methods):
            complete[b].append(run_id)

    def mean(vals):
        vals = list(vals)
        return float(np.mean(vals)) if vals else None

    out_bins = []
    for b in range(bins):
        ids = sorted(complete[b])
        runs = [by_run[i] for i in ids]
        per_method_stats = {}
        for m in methods:
            recs = [r[m] for r in runs]
            per_method_stats[m] = MethodBinStats(
                mean_pred_lower=mean(r.report.predicted_accuracy_lower for r in recs),
                mean_source_agreement=mean(r.source_agreement for r in recs),
                mean_target_agreement=mean(r.target_agreement for r in recs),
                mean_disc_full=mean(r.report.discrepancy_full for r in recs),
                mean_disc_nonoverlap=mean(r.report.discrepancy_nonoverlap for r in recs),
                mean_overlap_disc=mean(r.report.overlap_discrepancy for r in recs),
                coverage=mean(float(r.report.predicted_accuracy_lower
                                    <= r.report.true_target_accuracy)
                              for r in recs) if runs else None,
            )
        out_bins.append(BinSummary(
            bin_index=b, lo=b / bins, hi=(b + 1) / bins,
            n_runs=len(ids), n_failures=int(failures[b]),
            mean_overlap=mean(r[methods[0]].overlap_factor for r in runs),
            mean_true_target_acc=mean(r[methods[0]].report.true_target_accuracy
                                      for r in runs),
            mean_assumption2_gap=mean(r[methods[0]].assumption2_gap for r in runs),
            methods=per_method_stats,
        ))
    return SweepSummary(
        bins=out_bins, methods=tuple(methods), n_runs_total=len(by_run),
        n_failures_total=int(failures.sum()))


# --- flat rows and their CSV/JSON forms ---------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def records_to_rows(records: list[RunRecord]) -> list[dict]:
    """Project run records onto the fixed per-run CSV schema."""
    rows = []
    for rec in records:
        rep = rec.report
        rows.append({
            "run_id": rec.run_id,
            "seed": rec.seed,
            "overlap_factor": rec.overlap_factor,
            "method": rec.method,
            "source_acc": rep.source_val_accuracy if rep else None,
            "true_target_acc": rep.true_target_accuracy if rep else None,
            "pred_lower": rep.predicted_accuracy_lower if rep else None,
            "disc_full": rep.discrepancy_full if rep else None,
            "disc_nonoverlap": rep.discrepancy_nonoverlap if rep else None,
            "overlap_disc": rep.overlap_discrepancy if rep else None,
            "concentration": rep.concentration_term if rep else None,
            "assumption2_gap": rec.assumption2_gap,
            "valid": rep.valid if rep else None,
            "failure": rec.failure,
        })
    return rows


def write_runs_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RUN_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in RUN_CSV_COLUMNS) + "\n")


def parse_runs_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != ",".join(RUN_CSV_COLUMNS):
        raise ValueError(f"{path}: not a per-run CSV (unexpected header)")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(RUN_CSV_COLUMNS):
            raise ValueError(f"{path}: row has {len(cells)} cells")
        row = {}
        for col, cell in zip(RUN_CSV_COLUMNS, cells):
            if col in ("run_id", "seed"):
                row[col] = int(cell)
            elif col == "method":
                row[col] = cell
            elif col == "failure":
                row[col] = cell
            elif col == "valid":
                row[col] = None if cell == "" else bool(int(cell))
            else:
                row[col] = None if cell == "" else float(cell)
        rows.append(row)
    return rows


def write_runs_json(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def parse_runs_json(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _summary_columns(methods: tuple[str, ...]) -> list[str]:
    cols = ["bin_index", "lo", "hi", "n_runs", "n_failures", "mean_overlap",
            "mean_true_target_acc", "mean_assumption2_gap"]
    for m in methods:
        cols += [f"{m}_mean_pred_lower", f"{m}_mean_source_agreement",
                 f"{m}_mean_target_agreement", f"{m}_mean_disc_full",
                 f"{m}_mean_disc_nonoverlap", f"{m}_mean_overlap_disc",
                 f"{m}_coverage"]
    return cols


def summary_to_rows(summary: SweepSummary) -> list[dict]:
    rows = []
    for b in summary.bins:
        row = {
            "bin_index": b.bin_index, "lo": b.lo, "hi": b.hi,
            "n_runs": b.n_runs, "n_failures": b.n_failures,
            "mean_overlap": b.mean_overlap,
            "mean_true_target_acc": b.mean_true_target_acc,
            "mean_assumption2_gap": b.mean_assumption2_gap,
        }
        for m in summary.methods:
            st = b.methods[m]
            row[f"{m}_mean_pred_lower"] = st.mean_pred_lower
            row[f"{m}_mean_source_agreement"] = st.mean_source_agreement
            row[f"{m}_mean_target_agreement"] = st.mean_target_agreement
            row[f"{m}_mean_disc_full"] = st.mean_disc_full
            row[f"{m}_mean_disc_nonoverlap"] = st.mean_disc_nonoverlap
            row[f"{m}_mean_overlap_disc"] = st.mean_overlap_disc
            row[f"{m}_coverage"] = st.coverage
        rows.append(row)
    return rows


def rows_to_summary(rows: list[dict]) -> SweepSummary:
    if not rows:
        raise ValueError("summary has no rows")
    methods = tuple(key[:-len("_coverage")] for key in rows[0]
                    if key.endswith("_coverage"))
    bins = []
    failures = 0
    run_total = 0
    for row in rows:
        stats = {}
        for m in methods:
            stats[m] = MethodBinStats(
                mean_pred_lower=row[f"{m}_mean_pred_lower"],
                mean_source_agreement=row[f"{m}_mean_source_agreement"],
                mean_target_agreement=row[f"{m}_mean_target_agreement"],
                mean_disc_full=row[f"{m}_mean_disc_full"],
                mean_disc_nonoverlap=row[f"{m}_mean_disc_nonoverlap"],
                mean_overlap_disc=row[f"{m}_mean_overlap_disc"],
                coverage=row[f"{m}_coverage"])
        bins.append(BinSummary(
            bin_index=int(row["bin_index"]), lo=row["lo"], hi=row["hi"],
            n_runs=int(row["n_runs"]), n_failures=int(row["n_failures"]),
            mean_overlap=row["mean_overlap"],
            mean_true_target_acc=row["mean_true_target_acc"],
            mean_assumption2_gap=row["mean_assumption2_gap"],
            methods=stats))
        failures += int(row["n_failures"])
        run_total += int(row["n_runs"])
    return SweepSummary(bins=bins, methods=methods, n_runs_total=run_total,
                        n_failures_total=failures)


def write_summary_csv(summary: SweepSummary, path) -> None:
    cols = _summary_columns(summary.methods)
    rows = summary_to_rows(summary)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def parse_summary_csv(path) -> SweepSummary:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        row = {}
        for col, cell in zip(header, cells):
            if col in ("bin_index", "n_runs", "n_failures"):
                row[col] = int(cell)
            else:
                row[col] = None if cell == "" else float(cell)
        rows.append(row)
    return rows_to_summary(rows)


def write_summary_json(summary: SweepSummary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary_to_rows(summary), fh, indent=2)
        fh.write("\n")


def parse_summary_json(path) -> SweepSummary:
    with open(path, "r", encoding="utf-8") as fh:
        return rows_to_summary(json.load(fh))


def export(obj, format: str, path) -> None:
    """Write a summary or a run-record collection as CSV or JSON."""
    if format not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    if isinstance(obj, SweepSummary):
        (write_summary_csv if format == "csv" else write_summary_json)(obj, path)
        return
    rows = obj
    if rows and isinstance(rows[0], RunRecord):
        rows = records_to_rows(rows)
    (write_runs_csv if format == "csv" else write_runs_json)(rows, path)


# --- metrics -------------------------------------------------------------------


def _as_metric_tuple(item) -> tuple[str | None, int | None, float, float]:
    if isinstance(item, RunRecord):
        if item.failure:
            raise ValueError(f"run {item.run_id} failed; filter failures before evaluate")
        rep = item.report
        return item.method, item.run_id, rep.predicted_accuracy_lower, rep.true_target_accuracy
    if isinstance(item, BoundReport):
        return item.method, item.run_id, item.predicted_accuracy_lower, item.true_target_accuracy
    if isinstance(item, dict):
        if item.get("failure"):
            raise ValueError(f"run {item.get('run_id')} failed; filter failures before evaluate")
        return (item.get("method"), item.get("run_id"),
                item["pred_lower"], item["true_target_acc"])
    raise TypeError(f"cannot evaluate item of type {type(item).__name__}")


def evaluate(items) -> MetricsReport:
    """MAE / coverage / invalid-only MAE over bound predictions with known truths.

    Accepts run records, bound reports, or parsed per-run rows. When the items
    form complete (plain, overlap-discounted) pairs per run id, the validity
    cells use the four-way paired layout; otherwise they reduce to
    valid/invalid counts.
    """
    triples = [_as_metric_tuple(it) for it in items]
    if not triples:
        raise ValueError("nothing to evaluate")
    for method, run_id, pred, truth in triples:
        if pred is None or truth is None:
            raise ValueError("every report must carry a prediction and a true accuracy")

    preds = np.array([t[2] for t in triples])
    truths = np.array([t[3] for t in triples])
    valid = preds <= truths
    err = np.abs(preds - truths)
    over = err[~valid]
    cells = _validity_cells(triples, valid)
    return MetricsReport(
        mae=float(err.mean()),
        coverage=float(valid.mean()),
        overestimation_mae=float(over.mean()) if over.size else 0.0,
        n_reports=len(triples),
        cells=cells)


def _validity_cells(triples, valid) -> dict[str, int]:
    methods = sorted({t[0] for t in triples if t[0] is not None})
    odd_names = [m for m in methods if m.startswith("odd")]
    if len(methods) == 2 and "dis2" in methods and len(odd_names) == 1:
        by_run: dict[int, dict[str, bool]] = {}
        for (method, run_id, _, _), ok in zip(triples, valid):
            if run_id is None:
                break
            by_run.setdefault(run_id, {})[method] = bool(ok)
        else:
            if all(set(flags) == set(methods) for flags in by_run.values()):
                cells = {"both_valid": 0, "dis2_only_valid": 0,
                         "odd_only_valid": 0, "both_invalid": 0}
                for flags in by_run.values():
                    d, o = flags["dis2"], flags[odd_names[0]]
                    key = ("both_valid" if d and o else
                           "dis2_only_valid" if d else
                           "odd_only_valid" if o else "both_invalid")
                    cells[key] += 1
                return cells
    n_valid = int(valid.sum())
    return {"valid": n_valid, "invalid": len(valid) - n_valid}


# --- single ingested-file runs ---------------------------------------------------


def run_single(
    csv_path,
    mode: str = "features",
    method: str = "odd-soft",
    val_fraction: float = 0.25,
    hidden_layer_sizes: tuple = (),
    domain_hidden_layer_sizes=None,
    h_hat_train: TrainConfig | None = None,
    domain_train: TrainConfig | None = None,
    critic: CriticConfig | None = None,
    bound: BoundConfig | None = None,
    seed: int = 0,
) -> BoundReport:
    """One end-to-end bound on an ingested CSV of features or logits.

    Features mode holds out a seeded ``val_fraction`` of the labeled source rows
    for the source-accuracy term and trains the studied classifier (default: a
    linear head) on the rest. Logits mode treats the columns as the classifier's
    own logits via a fixed identity map, so every labeled source row is held
    out. Critic search runs with last-layer scope in both modes.
    """
    if method == "odd":
        method = "odd-soft"
    pair = load_csv(csv_path, mode)
    if not pair.source.is_fully_labeled():
        raise ValueError("source rows must be labeled")

    if mode == "features":
        n = pair.source.n
        rng = rng_from_seed(derive_seed(seed, 0))
        perm = rng.permutation(n)
        n_val = max(1, int(round(val_fraction * n)))
        if n - n_val < 1:
            raise ValueError("val_fraction leaves no source training rows")
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        src_train = Dataset(pair.source.features[train_idx],
                            pair.source.labels[train_idx], "source")
        src_val = Dataset(pair.source.features[val_idx],
                          pair.source.labels[val_idx], "source")
        k = int(pair.source.labels.max()) + 1
        if k < 2:
            raise ValueError("source rows must span at least 2 classes")
        tcfg = h_hat_train or TrainConfig(learning_rate=1e-3, max_epochs=300)
        clf = MlpClassifier(
            hidden_layer_sizes=hidden_layer_sizes, n_classes=k,
            learning_rate=tcfg.learning_rate, max_epochs=tcfg.max_epochs,
            batch_size=tcfg.batch_size, convergence_tol=tcfg.convergence_tol,
            convergence_patience=tcfg.convergence_patience,
            random_state=derive_seed(seed, 1))
        clf.fit(src_train.features, src_train.labels)
        h_hat = clf.model_
        fit_pair = DatasetPair(src_train, pair.target)
        eval_pair = DatasetPair(src_val, pair.target)
    else:
        h_hat = identity_model(pair.dim)
        src_val = pair.source
        fit_pair = pair
        eval_pair = pair

    weights_fit = weights_eval = None
    if method != "dis2":
        dcfg = domain_train or TrainConfig(learning_rate=1e-4, max_epochs=2000)
        dclf = train_domain_classifier(
            fit_pair, hidden_layer_sizes=domain_hidden_layer_sizes,
            config=replace(dcfg, seed=derive_seed(seed, 2)))
        make_weights = _weights_fn("soft" if method == "odd-soft" else "hard")
        weights_fit = make_weights(dclf, fit_pair)
        weights_eval = make_weights(dclf, eval_pair)

    ccfg = critic or CriticConfig(method=method, restarts=5,
                                  trainable_scope="last-layer")
    ccfg = replace(ccfg, method=method,
                   train=replace(ccfg.train, seed=derive_seed(seed, 3)))
    result = find_critic(h_hat, fit_pair, weights=weights_fit, config=ccfg)
    report = bound_report(h_hat, result, eval_pair, src_val, weights_eval,
                          bound or BoundConfig())
    report.method = method
    return report


def output_dir_from_env(default: str) -> str:
    """Resolve the output directory, honoring the SHIFTBOUND_OUTPUT_DIR override."""
    return os.environ.get("SHIFTBOUND_OUTPUT_DIR", default)
