"""Per-neuron kernel logistic regression over stored patterns.

Each neuron i is an independent binary classifier: targets are
t_mu = (xi_mu_i + 1)/2 and the field on pattern mu is (K alpha_i)_mu.
The objective is binary cross-entropy plus the RKHS ridge penalty
(lambda/2) alpha' K alpha, minimized by full-batch fixed-step gradient
descent from alpha = 0. The optimizer is deliberately plain first-order
descent so curvature effects are visible rather than hidden by a
second-order solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError, TrainingDivergenceError
from .kernel_core import GramMatrix, KernelConfig, PatternSet, gram

# Loss may not increase by more than this between accepted epochs.
DESCENT_SLACK = 1e-12


@dataclass
class TrainConfig:
    lam: float = 1e-4
    learning_rate: float = 0.1
    max_epochs: int = 100_000
    grad_tol: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ArgumentError(f"lambda must be >= 0, got {self.lam}")
        if self.learning_rate <= 0:
            raise ArgumentError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_epochs < 1:
            raise ArgumentError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.grad_tol <= 0:
            raise ArgumentError(f"grad_tol must be > 0, got {self.grad_tol}")


@dataclass
class DualWeights:
    """alpha[:, i] is the dual coefficient vector of neuron i."""

    alpha: np.ndarray  # (P, N)
    gamma: float
    lam: float
    trained_epochs: int

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 2:
            raise DimensionError("alpha must be a P x N matrix")
        if not np.isfinite(self.alpha).all():
            raise ArgumentError("alpha entries must all be finite")


def neuron_targets(patterns: PatternSet, neuron: int) -> np.ndarray:
    """{0,1} targets of one neuron: t_mu = (xi_mu_i + 1) / 2."""
    return (patterns.patterns[:, neuron] + 1) // 2


def all_targets(patterns: PatternSet) -> np.ndarray:
    """(P, N) matrix of {0,1} targets, one column per neuron."""
    return ((patterns.patterns + 1) // 2).astype(float)


def sigmoid(h):
    """Numerically stable logistic function, elementwise."""
    h = np.asarray(h, dtype=float)
    out = np.empty_like(h)
    pos = h >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-h[pos]))
    eh = np.exp(h[~pos])
    out[~pos] = eh / (1.0 + eh)
    if out.ndim == 0:
        return float(out)
    return out


def predict_probs(alpha_col: np.ndarray, K: GramMatrix) -> np.ndarray:
    """p_mu = sigma((K alpha)_mu) for each stored pattern."""
    alpha_col = np.asarray(alpha_col, dtype=float)
    if alpha_col.shape != (K.values.shape[0],):
        raise DimensionError(
            f"alpha length {alpha_col.shape} does not match Gram size {K.values.shape}"
        )
    return sigmoid(K.values @ alpha_col)


def _bce_terms(h: np.ndarray, t: np.ndarray) -> np.ndarray:
    # softplus(h) - t*h == -[t log p + (1-t) log(1-p)], stable for any h
    return np.logaddexp(0.0, h) - t * h


def loss(alpha_col, K: GramMatrix, targets, lam: float) -> float:
    """Cross-entropy over stored patterns plus (lam/2) alpha' K alpha."""
    alpha_col = np.asarray(alpha_col, dtype=float)
    t = np.asarray(targets, dtype=float)
    if lam < 0:
        raise ArgumentError("lambda must be >= 0")
    if alpha_col.shape != t.shape or alpha_col.shape != (K.values.shape[0],):
        raise DimensionError("alpha, targets and Gram matrix sizes disagree")
    h = K.values @ alpha_col
    return float(np.sum(_bce_terms(h, t)) + 0.5 * lam * alpha_col @ h)


def loss_gradient(alpha_col, K: GramMatrix, targets, lam: float) -> np.ndarray:
    """grad = K (p - t) + lam K alpha."""
    alpha_col = np.asarray(alpha_col, dtype=float)
    t = np.asarray(targets, dtype=float)
    if alpha_col.shape != t.shape or alpha_col.shape != (K.values.shape[0],):
        raise DimensionError("alpha, targets and Gram matrix sizes disagree")
    p = sigmoid(K.values @ alpha_col)
    return K.values @ (p - t) + lam * (K.values @ alpha_col)


@dataclass
class FitResult:
    alpha: np.ndarray          # (P, N) final iterates
    epochs: int                # epochs actually run
    diverged: list             # neuron indices frozen after a divergence
    converged: np.ndarray      # bool per neuron: reached grad_tol


def fit_dual_weights(K: np.ndarray, T: np.ndarray, cfg: TrainConfig) -> FitResult:
    """Gradient descent on every neuron column at once.

    Columns are independent (the update of column i reads only column i),
    so this matches per-neuron training while batching the matmuls. A
    column is frozen once its gradient norm drops below grad_tol. A column
    whose loss becomes non-finite or increases by more than DESCENT_SLACK
    is reverted to its last accepted iterate and recorded in `diverged`.
    """
    P, N = T.shape
    A = np.zeros((P, N))
    active = np.ones(N, dtype=bool)
    converged = np.zeros(N, dtype=bool)
    diverged: list[int] = []
    prev_loss = np.full(N, np.inf)
    prev_A = A.copy()
    epochs_run = 0
    for epoch in range(cfg.max_epochs):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Aa = A[:, idx]
        H = K @ Aa
        Ta = T[:, idx]
        ls = np.sum(_bce_terms(H, Ta), axis=0) + 0.5 * cfg.lam * np.sum(Aa * H, axis=0)
        bad = ~np.isfinite(ls) | (ls > prev_loss[idx] + DESCENT_SLACK)
        if bad.any():
            for j in idx[bad]:
                diverged.append((int(j), epoch))
            A[:, idx[bad]] = prev_A[:, idx[bad]]
            active[idx[bad]] = False
            idx = idx[~bad]
            if idx.size == 0:
                continue
            H = H[:, ~bad]
            Ta = Ta[:, ~bad]
            ls = ls[~bad]
        prev_loss[idx] = ls
        Pm = _sigmoid_matrix(H)
        Grad = K @ (Pm - Ta) + cfg.lam * H
        gnorm = np.sqrt(np.sum(Grad * Grad, axis=0))
        done = gnorm < cfg.grad_tol
        converged[idx[done]] = True
        active[idx[done]] = False
        step = ~done
        if step.any():
            prev_A[:, idx[step]] = A[:, idx[step]]
            A[:, idx[step]] -= cfg.learning_rate * Grad[:, step]
        epochs_run = epoch + 1
    return FitResult(alpha=A, epochs=epochs_run, diverged=diverged, converged=converged)


def _sigmoid_matrix(H: np.ndarray) -> np.ndarray:
    out = np.empty_like(H)
    pos = H >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-H[pos]))
    eh = np.exp(H[~pos])
    out[~pos] = eh / (1.0 + eh)
    return out


def train(patterns: PatternSet, kcfg: KernelConfig, tcfg: TrainConfig) -> DualWeights:
    """Train every neuron; raise TrainingDivergenceError on the first bad neuron."""
    K = gram(patterns, kcfg)
    T = all_targets(patterns)
    res = fit_dual_weights(K.values, T, tcfg)
    if res.diverged:
        neuron, epoch = res.diverged[0]
        raise TrainingDivergenceError(neuron, epoch)
    return DualWeights(
        alpha=res.alpha, gamma=kcfg.gamma, lam=tcfg.lam, trained_epochs=res.epochs
    )


def save_weights(w: DualWeights, path) -> None:
    """Header `P N gamma lambda epochs`, then P lines of N floats (17 sig digits)."""
    P, N = w.alpha.shape
    lines = [f"{P} {N} {w.gamma:.17g} {w.lam:.17g} {w.trained_epochs}"]
    for row in w.alpha:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_weights(path) -> DualWeights:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    P, N = int(head[0]), int(head[1])
    gamma, lam, epochs = float(head[2]), float(head[3]), int(head[4])
    alpha = np.array([[float(v) for v in line.split()] for line in lines[1 : 1 + P]])
    if alpha.shape != (P, N):
        raise DimensionError(f"weights file body {alpha.shape} does not match header ({P}, {N})")
    return DualWeights(alpha=alpha, gamma=gamma, lam=lam, trained_epochs=epochs)
