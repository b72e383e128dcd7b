"""Phase-diagram sweeps over the (gamma, load) plane.

Every grid cell trains fresh networks and measures Fisher-geometry
scalars plus (optionally) recall success. Seeding is a stated 64-bit
mix: the seed of trial t in cell (gi, li) is
numpy.random.SeedSequence([base_seed, gi, li, t]).generate_state(1),
which makes cells independent and runs reproducible bit-for-bit at any
worker count.

Aggregation: arithmetic mean over neurons within a trial, then mean
(and standard deviation for lambda_max and d_eff) over trials.
Neuron-trials with a fully degenerate spectrum contribute d_eff = 0 and
are counted in degenerate_count; neurons whose descent monitor tripped
are frozen at their last accepted iterate, still measured, and counted
in divergence_count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import KVView, read_kv_file
from .dynamics import recall
from .errors import ArgumentError
from .infogeo import DEFAULT_REL_CUTOFF, fisher_matrix, gradient_report, spectrum
from .kernel_core import KernelConfig, corrupt, generate_patterns, gram
from .klr import DualWeights, TrainConfig, all_targets, fit_dual_weights

KNOWN_METRICS = (
    "lambda_max",
    "d_eff",
    "euclid_norm_sq",
    "riemann_norm_sq",
    "rank1_residual",
    "recall_rate",
)

CSV_COLUMNS = [
    "gamma",
    "load",
    "P",
    "N",
    "seed",
    "trials",
    "lambda_max_mean",
    "lambda_max_sd",
    "d_eff_mean",
    "d_eff_sd",
    "euclid_norm_sq_mean",
    "riemann_norm_sq_mean",
    "rank1_residual_mean",
    "recall_rate",
    "degenerate_count",
    "divergence_count",
]


@dataclass
class GridConfig:
    gamma_values: list
    load_values: list
    num_neurons: int
    trials_per_cell: int
    base_seed: int
    train: TrainConfig
    rel_cutoff: float = DEFAULT_REL_CUTOFF
    metrics: tuple = KNOWN_METRICS[:5]
    recall_flip_fraction: float = 0.1
    success_threshold: float = 0.95
    recall_max_steps: int = 100

    def __post_init__(self):
        if not self.gamma_values or not self.load_values:
            raise ArgumentError("gamma_values and load_values must be nonempty")
        if any(g <= 0 for g in self.gamma_values):
            raise ArgumentError("gamma_values must be positive")
        if list(self.gamma_values) != sorted(self.gamma_values):
            raise ArgumentError("gamma_values must be ascending")
        if list(self.load_values) != sorted(self.load_values):
            raise ArgumentError("load_values must be ascending")
        if any(not (0 < l <= 1) for l in self.load_values):
            raise ArgumentError("load_values must lie in (0, 1]")
        if round(self.num_neurons * min(self.load_values)) < 1:
            raise ArgumentError("N * min(load) must round to at least 1 pattern")
        if self.trials_per_cell < 1:
            raise ArgumentError("trials_per_cell must be >= 1")
        unknown = set(self.metrics) - set(KNOWN_METRICS)
        if unknown:
            raise ArgumentError(f"unknown metrics: {sorted(unknown)}")


@dataclass
class SweepCell:
    gamma: float
    load: float
    P: int
    N: int
    seed: int
    trials: int
    lambda_max_mean: float = float("nan")
    lambda_max_sd: float = float("nan")
    d_eff_mean: float = float("nan")
    d_eff_sd: float = float("nan")
    euclid_norm_sq_mean: float = float("nan")
    riemann_norm_sq_mean: float = float("nan")
    rank1_residual_mean: float = float("nan")
    recall_rate: float = float("nan")
    degenerate_count: int = 0
    divergence_count: int = 0


def cell_seed(base_seed: int, gamma_index: int, load_index: int) -> int:
    """64-bit cell identity derived from grid position via SeedSequence."""
    ss = np.random.SeedSequence([int(base_seed), int(gamma_index), int(load_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_seed(base_seed: int, gamma_index: int, load_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(
        [int(base_seed), int(gamma_index), int(load_index), int(trial)]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_cell(
    gamma: float,
    load: float,
    cfg: GridConfig,
    gamma_index: int,
    load_index: int,
) -> SweepCell:
    """Train and analyze one (gamma, load) grid point over all trials."""
    N = cfg.num_neurons
    P = max(1, int(round(load * N)))
    kcfg = KernelConfig(gamma=gamma)
    want_recall = "recall_rate" in cfg.metrics
    per_trial = {k: [] for k in ("lambda_max", "d_eff", "euclid", "riemann", "rank1")}
    recall_hits = 0
    recall_total = 0
    degenerate = 0
    divergence = 0
    for t in range(cfg.trials_per_cell):
        seed = trial_seed(cfg.base_seed, gamma_index, load_index, t)
        patterns = generate_patterns(P, N, seed)
        K = gram(patterns, kcfg)
        T = all_targets(patterns)
        res = fit_dual_weights(K.values, T, cfg.train)
        divergence += len(res.diverged)
        lmax, deff, eu, ri, r1 = [], [], [], [], []
        for i in range(N):
            rep = gradient_report(
                res.alpha[:, i], K, T[:, i], cfg.train.lam, cfg.rel_cutoff
            )
            if rep.degenerate:
                degenerate += 1
            lmax.append(rep.lambda_max)
            deff.append(rep.d_eff)
            eu.append(rep.euclid_norm_sq)
            ri.append(rep.riemann_norm_sq)
            r1.append(rep.rank1_residual)
        per_trial["lambda_max"].append(float(np.mean(lmax)))
        per_trial["d_eff"].append(float(np.mean(deff)))
        per_trial["euclid"].append(float(np.mean(eu)))
        per_trial["riemann"].append(float(np.mean(ri)))
        per_trial["rank1"].append(float(np.mean(r1)))
        if want_recall:
            weights = DualWeights(
                alpha=res.alpha, gamma=gamma, lam=cfg.train.lam, trained_epochs=res.epochs
            )
            for mu in range(P):
                cue_seed = trial_seed(cfg.base_seed, gamma_index, load_index,
                                      cfg.trials_per_cell + t * P + mu)
                cue = corrupt(patterns.patterns[mu], cfg.recall_flip_fraction, cue_seed)
                r = recall(
                    cue, mu, patterns, weights, kcfg,
                    max_steps=cfg.recall_max_steps,
                    success_threshold=cfg.success_threshold,
                )
                recall_hits += int(r.success)
                recall_total += 1
    def sd(vals):
        return float(np.std(vals, ddof=0))
    return SweepCell(
        gamma=gamma,
        load=load,
        P=P,
        N=N,
        seed=cell_seed(cfg.base_seed, gamma_index, load_index),
        trials=cfg.trials_per_cell,
        lambda_max_mean=float(np.mean(per_trial["lambda_max"])),
        lambda_max_sd=sd(per_trial["lambda_max"]),
        d_eff_mean=float(np.mean(per_trial["d_eff"])),
        d_eff_sd=sd(per_trial["d_eff"]),
        euclid_norm_sq_mean=float(np.mean(per_trial["euclid"])),
        riemann_norm_sq_mean=float(np.mean(per_trial["riemann"])),
        rank1_residual_mean=float(np.mean(per_trial["rank1"])),
        recall_rate=(recall_hits / recall_total) if recall_total else float("nan"),
        degenerate_count=degenerate,
        divergence_count=divergence,
    )


def _cell_task(args):
    cfg, gi, li = args
    return (li, gi), run_cell(cfg.gamma_values[gi], cfg.load_values[li], cfg, gi, li)


def run_grid(cfg: GridConfig, workers: int = 1) -> list:
    """Evaluate every (gamma, load) pair; output sorted by (load, gamma).

    Cells are independent; scheduling never changes values or order.
    """
    tasks = [
        (cfg, gi, li)
        for li in range(len(cfg.load_values))
        for gi in range(len(cfg.gamma_values))
    ]
    if workers <= 1:
        results = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_task, tasks))
    results.sort(key=lambda kv: kv[0])
    return [cell for _, cell in results]


def write_grid_csv(cells: list, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in cells:
            w.writerow(
                [
                    f"{c.gamma:.17g}",
                    f"{c.load:.17g}",
                    c.P,
                    c.N,
                    c.seed,
                    c.trials,
                    f"{c.lambda_max_mean:.17g}",
                    f"{c.lambda_max_sd:.17g}",
                    f"{c.d_eff_mean:.17g}",
                    f"{c.d_eff_sd:.17g}",
                    f"{c.euclid_norm_sq_mean:.17g}",
                    f"{c.riemann_norm_sq_mean:.17g}",
                    f"{c.rank1_residual_mean:.17g}",
                    f"{c.recall_rate:.17g}",
                    c.degenerate_count,
                    c.divergence_count,
                ]
            )


def read_grid_csv(path) -> list:
    cells = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            cells.append(
                SweepCell(
                    gamma=float(row["gamma"]),
                    load=float(row["load"]),
                    P=int(row["P"]),
                    N=int(row["N"]),
                    seed=int(row["seed"]),
                    trials=int(row["trials"]),
                    lambda_max_mean=float(row["lambda_max_mean"]),
                    lambda_max_sd=float(row["lambda_max_sd"]),
                    d_eff_mean=float(row["d_eff_mean"]),
                    d_eff_sd=float(row["d_eff_sd"]),
                    euclid_norm_sq_mean=float(row["euclid_norm_sq_mean"]),
                    riemann_norm_sq_mean=float(row["riemann_norm_sq_mean"]),
                    rank1_residual_mean=float(row["rank1_residual_mean"]),
                    recall_rate=float(row["recall_rate"]),
                    degenerate_count=int(row["degenerate_count"]),
                    divergence_count=int(row["divergence_count"]),
                )
            )
    return cells


def grid_config_from_file(path) -> GridConfig:
    """Build a GridConfig from a flat key-value file (see README for keys)."""
    view = KVView(path, read_kv_file(path))
    gamma_values = view.get_float_list("gamma_values")
    if gamma_values is None:
        lo = view.get_float("gamma_min")
        hi = view.get_float("gamma_max")
        count = view.get_int("gamma_count")
        if None in (lo, hi, count):
            raise view.error("gamma_values", "need gamma_values or gamma_min/max/count")
        gamma_values = list(np.logspace(np.log10(lo), np.log10(hi), count))
    load_values = view.require("load_values", "float_list")
    train = TrainConfig(
        lam=view.get_float("lambda", 1e-4),
        learning_rate=view.get_float("learning_rate", 0.1),
        max_epochs=view.get_int("max_epochs", 100_000),
        grad_tol=view.get_float("grad_tol", 1e-6),
    )
    metrics = view.get_str_list("metrics", list(KNOWN_METRICS[:5]))
    cfg_kwargs = dict(
        gamma_values=gamma_values,
        load_values=load_values,
        num_neurons=view.require("num_neurons", "int"),
        trials_per_cell=view.get_int("trials_per_cell", 1),
        base_seed=view.get_int("base_seed", 0),
        train=train,
        rel_cutoff=view.get_float("rel_cutoff", DEFAULT_REL_CUTOFF),
        metrics=tuple(metrics),
        recall_flip_fraction=view.get_float("recall_flip_fraction", 0.1),
        success_threshold=view.get_float("success_threshold", 0.95),
        recall_max_steps=view.get_int("recall_max_steps", 100),
    )
    view.reject_unknown()
    return GridConfig(**cfg_kwargs)
