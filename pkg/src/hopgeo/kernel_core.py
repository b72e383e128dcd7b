"""Bipolar pattern sets, the RBF kernel, and Gram matrices.

Conventions (fixed, so gamma values in configs are unambiguous):
  * patterns are raw {-1,+1} vectors, never normalized by sqrt(N);
  * distances are squared Euclidean on those raw vectors, so
    ||x - y||^2 = 4 * hamming(x, y);
  * the kernel is the Gaussian RBF exp(-gamma * ||x - y||^2);
  * all randomness comes from numpy's PCG64 generator seeded with a
    single 64-bit integer, so regeneration is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError


@dataclass
class KernelConfig:
    """RBF kernel with width parameter gamma > 0."""

    gamma: float
    kind: str = "rbf"

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ArgumentError(f"gamma must be positive and finite, got {self.gamma}")
        if self.kind != "rbf":
            raise ArgumentError(f"unsupported kernel kind {self.kind!r}")


@dataclass
class PatternSet:
    """P stored bipolar patterns of dimension N, plus the seed that made them."""

    patterns: np.ndarray  # (P, N) with entries in {-1, +1}
    seed: int

    def __post_init__(self):
        self.patterns = np.asarray(self.patterns)
        if self.patterns.ndim != 2:
            raise DimensionError("patterns must be a P x N matrix")
        if self.patterns.shape[0] < 1 or self.patterns.shape[1] < 1:
            raise ArgumentError("P and N must both be at least 1")
        if not np.isin(self.patterns, (-1, 1)).all():
            raise ArgumentError("pattern entries must be exactly -1 or +1")

    @property
    def num_patterns(self) -> int:
        return self.patterns.shape[0]

    @property
    def num_neurons(self) -> int:
        return self.patterns.shape[1]


@dataclass
class GramMatrix:
    """P x P kernel matrix over stored patterns; symmetric PSD with unit diagonal."""

    values: np.ndarray
    gamma: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise DimensionError("Gram matrix must be square")


def kernel_eval(x, y, config: KernelConfig) -> float:
    """RBF kernel between two bipolar vectors: exp(-gamma * ||x - y||^2)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"vector length mismatch: {x.shape} vs {y.shape}")
    d2 = float(np.sum((x.astype(float) - y.astype(float)) ** 2))
    return math.exp(-config.gamma * d2)


def gram(patterns: PatternSet, config: KernelConfig) -> GramMatrix:
    """Gram matrix K[mu][nu] = kernel(xi_mu, xi_nu).

    For bipolar entries ||x - y||^2 = 2*(N - <x, y>); the inner products are
    exact small integers, so the result is exactly symmetric with unit
    diagonal by construction.
    """
    X = patterns.patterns.astype(float)
    inner = X @ X.T
    d2 = 2.0 * (patterns.num_neurons - inner)
    return GramMatrix(values=np.exp(-config.gamma * d2), gamma=config.gamma)


def generate_patterns(P: int, N: int, seed: int) -> PatternSet:
    """P x N matrix of i.i.d. uniform {-1,+1} entries from PCG64(seed)."""
    if P < 1 or N < 1:
        raise ArgumentError(f"P and N must be >= 1, got P={P}, N={N}")
    rng = np.random.Generator(np.random.PCG64(seed))
    pats = rng.integers(0, 2, size=(P, N), dtype=np.int64) * 2 - 1
    return PatternSet(patterns=pats, seed=int(seed))


def corrupt(pattern, flip_fraction: float, seed: int) -> np.ndarray:
    """Sign-flip exactly round(flip_fraction * N) distinct positions.

    Rounding is half-away-from-zero; positions come from PCG64(seed).
    Applying the same corruption twice restores the input.
    """
    if not (0.0 <= flip_fraction <= 1.0):
        raise ArgumentError(f"flip_fraction must be in [0, 1], got {flip_fraction}")
    pattern = np.asarray(pattern)
    n = pattern.shape[0]
    n_flip = int(math.floor(flip_fraction * n + 0.5))
    out = pattern.copy()
    if n_flip == 0:
        return out
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.choice(n, size=n_flip, replace=False)
    out[idx] = -out[idx]
    return out


def save_patterns(ps: PatternSet, path) -> None:
    """Text format: header line `P N seed`, then P lines of N +/-1 integers."""
    lines = [f"{ps.num_patterns} {ps.num_neurons} {ps.seed}"]
    for row in ps.patterns:
        lines.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_patterns(path) -> PatternSet:
    lines = Path(path).read_text().splitlines()
    P, N, seed = lines[0].split()
    P, N, seed = int(P), int(N), int(seed)
    pats = np.array([[int(v) for v in line.split()] for line in lines[1 : 1 + P]])
    if pats.shape != (P, N):
        raise DimensionError(f"pattern file body {pats.shape} does not match header ({P}, {N})")
    return PatternSet(patterns=pats, seed=seed)
