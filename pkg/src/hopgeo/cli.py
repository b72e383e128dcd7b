"""Command-line entry point.

Subcommands: train, spectrum, phase, recall, render. Exit codes are a
stable contract: 0 success, 2 usage/config errors, 3 numeric failures.
Every output directory receives a manifest.json recording the command
line, resolved configuration, seeds, tool version, timestamps, and
sha256 digests of the emitted files (the manifest itself is excluded
from digest comparisons, so reruns are byte-identical apart from it).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, KVView, read_kv_file
from .dynamics import recall
from .errors import ArgumentError, NumericError, TrainingDivergenceError
from .infogeo import fisher_matrix, spectrum, write_spectrum_csv
from .kernel_core import (
    KernelConfig,
    corrupt,
    generate_patterns,
    gram,
    load_patterns,
    save_patterns,
)
from .klr import TrainConfig, load_weights, save_weights, train
from .sweep import (
    grid_config_from_file,
    read_grid_csv,
    run_grid,
    write_grid_csv,
)
from .svgplot import render_heatmap, render_spectrum_lines

# default transform per heatmap metric
DEFAULT_LOG10 = {
    "lambda_max": True,
    "d_eff": False,
    "euclid_norm_sq": True,
    "riemann_norm_sq": True,
    "rank1_residual": False,
    "recall_rate": False,
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, argv, resolved_config: dict, seeds: dict, started: str):
    outputs = {
        p.name: _sha256(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "tool": "hopgeo",
        "version": __version__,
        "command_line": list(argv),
        "resolved_config": resolved_config,
        "seeds": seeds,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _train_config_from_file(path, seed_override=None):
    view = KVView(path, read_kv_file(path))
    P = view.require("num_patterns", "int")
    N = view.require("num_neurons", "int")
    gamma = view.require("gamma", "float")
    seed = view.get_int("seed", 0)
    tcfg = TrainConfig(
        lam=view.get_float("lambda", 1e-4),
        learning_rate=view.get_float("learning_rate", 0.1),
        max_epochs=view.get_int("max_epochs", 100_000),
        grad_tol=view.get_float("grad_tol", 1e-6),
    )
    view.reject_unknown()
    if gamma <= 0:
        raise view.error("gamma", f"must be positive, got {gamma}")
    if P < 1:
        raise view.error("num_patterns", f"must be >= 1, got {P}")
    if N < 1:
        raise view.error("num_neurons", f"must be >= 1, got {N}")
    if seed_override is not None:
        seed = seed_override
    return P, N, gamma, seed, tcfg


def cmd_train(args, argv) -> int:
    started = _now()
    out = Path(args.out)
    P, N, gamma, seed, tcfg = _train_config_from_file(args.config, args.seed)
    out.mkdir(parents=True, exist_ok=True)
    patterns = generate_patterns(P, N, seed)
    pat_path = out / "patterns.txt"
    wt_path = out / "weights.txt"
    try:
        save_patterns(patterns, pat_path)
        weights = train(patterns, KernelConfig(gamma=gamma), tcfg)
        save_weights(weights, wt_path)
    except TrainingDivergenceError:
        for p in (pat_path, wt_path):
            if p.exists():
                p.unlink()
        raise
    resolved = {
        "num_patterns": P,
        "num_neurons": N,
        "gamma": gamma,
        "seed": seed,
        "lambda": tcfg.lam,
        "learning_rate": tcfg.learning_rate,
        "max_epochs": tcfg.max_epochs,
        "grad_tol": tcfg.grad_tol,
    }
    _write_manifest(out, argv, resolved, {"pattern_seed": seed}, started)
    return EXIT_OK


def _load_artifacts(weights_dir):
    d = Path(weights_dir)
    pat_path = d / "patterns.txt"
    wt_path = d / "weights.txt"
    if not pat_path.exists() or not wt_path.exists():
        raise FileNotFoundError(f"missing patterns.txt or weights.txt in {d}")
    return load_patterns(pat_path), load_weights(wt_path)


def cmd_spectrum(args, argv) -> int:
    patterns, weights = _load_artifacts(args.weights)
    K = gram(patterns, KernelConfig(gamma=weights.gamma))
    specs = [
        spectrum(fisher_matrix(weights.alpha[:, i], K, neuron_index=i))
        for i in range(patterns.num_neurons)
    ]
    write_spectrum_csv(specs, args.out)
    if args.svg:
        render_spectrum_lines(specs, args.svg)
    return EXIT_OK


def cmd_phase(args, argv) -> int:
    started = _now()
    cfg = grid_config_from_file(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = run_grid(cfg, workers=args.workers)
    write_grid_csv(cells, out / "grid.csv")
    for metric in cfg.metrics:
        render_heatmap(cells, metric, DEFAULT_LOG10[metric], out / f"{metric}.svg")
    degen = sum(c.degenerate_count for c in cells)
    diverg = sum(c.divergence_count for c in cells)
    if degen or diverg:
        print(
            f"flags: {degen} degenerate neuron-trials, {diverg} divergent neuron-trials",
            file=sys.stderr,
        )
    resolved = {
        "gamma_values": list(cfg.gamma_values),
        "load_values": list(cfg.load_values),
        "num_neurons": cfg.num_neurons,
        "trials_per_cell": cfg.trials_per_cell,
        "base_seed": cfg.base_seed,
        "lambda": cfg.train.lam,
        "learning_rate": cfg.train.learning_rate,
        "max_epochs": cfg.train.max_epochs,
        "grad_tol": cfg.train.grad_tol,
        "rel_cutoff": cfg.rel_cutoff,
        "metrics": list(cfg.metrics),
    }
    _write_manifest(out, argv, resolved, {"base_seed": cfg.base_seed}, started)
    return EXIT_OK


def cmd_recall(args, argv) -> int:
    fractions = [float(v) for v in args.flip_fractions.split()]
    if not fractions:
        raise ArgumentError("flip fractions list is empty")
    for f in fractions:
        if not (0.0 <= f <= 1.0):
            raise ArgumentError(f"flip fraction {f} outside [0, 1]")
    if args.trials < 1:
        raise ArgumentError(f"trials must be >= 1, got {args.trials}")
    patterns, weights = _load_artifacts(args.weights)
    kcfg = KernelConfig(gamma=weights.gamma)
    base_seed = args.seed if args.seed is not None else 0
    lines = ["trial,target,flip_fraction,steps,converged,overlap,success"]
    summary = {}
    for fi, frac in enumerate(fractions):
        hits = 0
        total = 0
        for t in range(args.trials):
            for mu in range(patterns.num_patterns):
                cue_seed = ((base_seed * 1_000_003 + fi) * 1_000_003 + t) * 1_000_003 + mu
                cue = corrupt(patterns.patterns[mu], frac, cue_seed)
                r = recall(
                    cue, mu, patterns, weights, kcfg,
                    max_steps=args.max_steps,
                    success_threshold=args.success_threshold,
                )
                hits += int(r.success)
                total += 1
                lines.append(
                    f"{t},{mu},{frac:.17g},{r.steps},{str(r.converged).lower()},"
                    f"{r.overlap:.17g},{str(r.success).lower()}"
                )
        summary[frac] = hits / total
    for frac, rate in summary.items():
        lines.append(f"# success_rate flip_fraction={frac:.17g} rate={rate:.17g}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_render(args, argv) -> int:
    cells = read_grid_csv(args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = args.metrics.split() if args.metrics else list(DEFAULT_LOG10)
    for metric in metrics:
        if metric not in DEFAULT_LOG10:
            raise ArgumentError(f"unknown metric {metric!r}")
        render_heatmap(cells, metric, DEFAULT_LOG10[metric], out / f"{metric}.svg")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopgeo",
        description="Kernel Hopfield training, Fisher-geometry analysis, and phase sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"hopgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_help):
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel worker cap")

    p = sub.add_parser("train", help="generate patterns and train dual weights")
    p.add_argument("--config", required=True, help="flat key-value training config")
    add_common(p, "output directory for patterns.txt, weights.txt, manifest.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("spectrum", help="per-neuron Fisher spectrum CSV from trained artifacts")
    p.add_argument("--weights", required=True, help="directory holding patterns.txt + weights.txt")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", default=None, help="optional normalized-spectrum SVG path")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("phase", help="run a (gamma, load) grid sweep")
    p.add_argument("--config", required=True, help="grid config file")
    add_common(p, "output directory for grid.csv, SVGs, manifest.json")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("recall", help="recall batch from corrupted cues")
    p.add_argument("--weights", required=True, help="directory holding patterns.txt + weights.txt")
    p.add_argument("--flip-fractions", required=True,
                   help="whitespace-separated corruption fractions in [0,1]")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--success-threshold", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_recall)

    p = sub.add_parser("render", help="re-render heatmap SVGs from an existing grid CSV")
    p.add_argument("--grid", required=True, help="grid.csv from a phase run")
    p.add_argument("--metrics", default=None, help="subset of metrics to render")
    p.add_argument("--out", required=True, help="output directory for SVGs")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.func(args, argv)
    except (TrainingDivergenceError, NumericError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ArgumentError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
