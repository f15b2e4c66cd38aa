"""Command-line entry points: synth-sweep, run-single, evaluate, export."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bounds import BoundConfig
from .critic import CriticConfig
from .harness import (
    SweepConfig,
    evaluate,
    export,
    output_dir_from_env,
    parse_runs_csv,
    parse_runs_json,
    parse_summary_csv,
    parse_summary_json,
    run_single,
    run_sweep,
    write_summary_csv,
    write_summary_json,
)
from .nn import TrainConfig


def _parse_value(text: str):
    low = text.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    for cast in (int, float):
        try:
            return cast(low)
        except ValueError:
            pass
    return low


def load_config_file(path) -> dict:
    """key = value lines ('#' comments allowed); keys are flag names with underscores."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = _parse_value(val)
    return values


def _hidden(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(tok) for tok in text.split(","))


def _build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="shiftbound",
        description="Accuracy lower bounds for classifiers under distribution shift.")
    parser.add_argument("--config", help="key=value file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("synth-sweep", help="run the synthetic overlap sweep")
    sweep.add_argument("--scale", choices=["desk", "full"], default="desk")
    sweep.add_argument("--draws", type=int, default=None,
                       help="overlap draws per repeat")
    sweep.add_argument("--repeats", type=int, default=None)
    sweep.add_argument("--bins", type=int, default=None)
    sweep.add_argument("--n-train", type=int, default=None)
    sweep.add_argument("--n-val", type=int, default=None)
    sweep.add_argument("--label-noise-sd", type=float, default=None)
    sweep.add_argument("--restarts", type=int, default=None,
                       help="critic restarts for both methods")
    sweep.add_argument("--critic-epochs", type=int, default=None)
    sweep.add_argument("--critic-lr", type=float, default=None)
    sweep.add_argument("--domain-epochs", type=int, default=None)
    sweep.add_argument("--domain-lr", type=float, default=None)
    sweep.add_argument("--delta", type=float, default=None)
    sweep.add_argument("--weight-mode", choices=["soft", "hard"], default=None)
    sweep.add_argument("--discrepancy-mode",
                       choices=["full", "nonoverlap-soft", "nonoverlap-hard"],
                       default=None)
    sweep.add_argument("--master-seed", type=int, default=None)
    sweep.add_argument("--output-dir", default=".")

    single = sub.add_parser("run-single", help="bound one ingested CSV")
    single.add_argument("--csv", required=True)
    single.add_argument("--mode", choices=["features", "logits"], default="features")
    single.add_argument("--method",
                        choices=["dis2", "odd", "odd-soft", "odd-hard"],
                        default="odd-soft")
    single.add_argument("--val-fraction", type=float, default=0.25)
    single.add_argument("--hidden", type=_hidden, default=(),
                        help="comma-separated hidden sizes for the studied classifier")
    single.add_argument("--restarts", type=int, default=5)
    single.add_argument("--critic-epochs", type=int, default=300)
    single.add_argument("--critic-lr", type=float, default=1e-3)
    single.add_argument("--delta", type=float, default=0.01)
    single.add_argument("--discrepancy-mode",
                        choices=["full", "nonoverlap-soft", "nonoverlap-hard"],
                        default="full")
    single.add_argument("--seed", type=int, default=0)
    single.add_argument("--out", default=None, help="write the report JSON here")

    ev = sub.add_parser("evaluate", help="metrics over a per-run CSV/JSON")
    ev.add_argument("--runs", required=True)
    ev.add_argument("--out", default=None)

    ex = sub.add_parser("export", help="convert runs/summary between CSV and JSON")
    ex.add_argument("--kind", choices=["runs", "summary"], required=True)
    ex.add_argument("--input", required=True)
    ex.add_argument("--format", choices=["csv", "json"], required=True)
    ex.add_argument("--output", required=True)
    return parser, [sweep, single, ev, ex]


def _sweep_config(args) -> SweepConfig:
    base = SweepConfig.full_scale() if args.scale == "full" else SweepConfig.desk_scale()
    cfg = base
    if args.draws is not None:
        cfg = replace(cfg, num_overlap_draws=args.draws)
    if args.repeats is not None:
        cfg = replace(cfg, repeats=args.repeats)
    if args.bins is not None:
        cfg = replace(cfg, bins=args.bins)
    syn = cfg.synthetic
    if args.n_train is not None:
        syn = replace(syn, n_train=args.n_train)
    if args.n_val is not None:
        syn = replace(syn, n_val=args.n_val)
    if args.label_noise_sd is not None:
        syn = replace(syn, label_noise_sd=args.label_noise_sd)
    cfg = replace(cfg, synthetic=syn)

    def tweak_critic(ccfg: CriticConfig) -> CriticConfig:
        train = ccfg.train
        if args.critic_epochs is not None:
            train = replace(train, max_epochs=args.critic_epochs)
        if args.critic_lr is not None:
            train = replace(train, learning_rate=args.critic_lr)
        out = replace(ccfg, train=train)
        if args.restarts is not None:
            out = replace(out, restarts=args.restarts)
        return out

    cfg = replace(cfg, critic_dis2=tweak_critic(cfg.critic_dis2),
                  critic_odd=tweak_critic(cfg.critic_odd))
    domain = cfg.domain_train
    if args.domain_epochs is not None:
        domain = replace(domain, max_epochs=args.domain_epochs)
    if args.domain_lr is not None:
        domain = replace(domain, learning_rate=args.domain_lr)
    cfg = replace(cfg, domain_train=domain)

    bound = cfg.bound
    if args.delta is not None:
        bound = replace(bound, delta=args.delta)
    if args.discrepancy_mode is not None:
        bound = replace(bound, discrepancy_mode=args.discrepancy_mode)
    cfg = replace(cfg, bound=bound)
    if args.weight_mode is not None:
        cfg = replace(cfg, weight_mode=args.weight_mode,
                      critic_odd=replace(cfg.critic_odd,
                                         method=f"odd-{args.weight_mode}"))
    if args.master_seed is not None:
        cfg = replace(cfg, master_seed=args.master_seed)
    return replace(cfg, output_dir=output_dir_from_env(args.output_dir))


def _cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    summary, records = run_sweep(cfg)
    out = Path(cfg.output_dir)
    write_summary_csv(summary, out / "summary.csv")
    write_summary_json(summary, out / "summary.json")
    print(f"wrote {out / 'runs.csv'}, {out / 'summary.csv'}, {out / 'summary.json'}")
    ok = [r for r in records if not r.failure]
    print(f"runs: {summary.n_runs_total}  failures: {summary.n_failures_total}")
    for method in summary.methods:
        metrics = evaluate([r for r in ok if r.method == method])
        print(f"{method}: mae={metrics.mae:.4f} coverage={metrics.coverage:.4f} "
              f"overestimation_mae={metrics.overestimation_mae:.4f}")
    return 0


def _cmd_single(args) -> int:
    critic = CriticConfig(
        method="odd-soft" if args.method == "odd" else args.method,
        restarts=args.restarts, trainable_scope="last-layer",
        train=TrainConfig(learning_rate=args.critic_lr,
                          max_epochs=args.critic_epochs))
    report = run_single(
        args.csv, mode=args.mode, method=args.method,
        val_fraction=args.val_fraction, hidden_layer_sizes=args.hidden,
        critic=critic,
        bound=BoundConfig(delta=args.delta,
                          discrepancy_mode=args.discrepancy_mode),
        seed=args.seed)
    payload = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0


def _cmd_evaluate(args) -> int:
    rows = (parse_runs_json(args.runs) if args.runs.endswith(".json")
            else parse_runs_csv(args.runs))
    metrics = evaluate([r for r in rows if not r.get("failure")])
    payload = json.dumps(metrics.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0


def _cmd_export(args) -> int:
    src_is_json = args.input.endswith(".json")
    if args.kind == "runs":
        rows = parse_runs_json(args.input) if src_is_json else parse_runs_csv(args.input)
        export(rows, args.format, args.output)
    else:
        summary = (parse_summary_json(args.input) if src_is_json
                   else parse_summary_csv(args.input))
        export(summary, args.format, args.output)
    print(f"wrote {args.output}")
    return 0


_COMMANDS = {
    "synth-sweep": _cmd_sweep,
    "run-single": _cmd_single,
    "evaluate": _cmd_evaluate,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subparsers = _build_parser()
    # pre-scan for --config so file values become defaults that flags override;
    # defaults must land on the subparsers (each subcommand parses into a fresh
    # namespace, clobbering any top-level defaults)
    config_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
            break
        if tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
            break
    if config_path:
        file_values = load_config_file(config_path)
        for sp in subparsers:
            known = {action.dest for action in sp._actions}
            sp.set_defaults(**{k: v for k, v in file_values.items() if k in known})
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
