"""Recall dynamics of a trained kernel Hopfield network.

The probe state enters only through kernel evaluations against the
stored patterns: h_i = sum_nu alpha_nu_i K(state, xi_nu). Updates are
deterministic synchronous threshold dynamics s_i <- sign(h_i), with ties
(h_i == 0) keeping the current value; this is the maximum-probability
decision of the logistic model. Synchronous updates can enter 2-cycles,
which are detected and reported as non-converged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError
from .kernel_core import KernelConfig, PatternSet
from .klr import DualWeights

DEFAULT_SUCCESS_THRESHOLD = 0.95


@dataclass
class RecallResult:
    final_state: np.ndarray
    overlap: float
    converged: bool
    steps: int
    success: bool


def overlap(state, pattern) -> float:
    """Normalized inner product (1/N) sum state_i * pattern_i, in [-1, 1]."""
    state = np.asarray(state)
    pattern = np.asarray(pattern)
    if state.shape != pattern.shape:
        raise DimensionError(f"length mismatch: {state.shape} vs {pattern.shape}")
    return float(state @ pattern) / state.shape[0]


def local_field(state, patterns: PatternSet, weights: DualWeights, kcfg: KernelConfig):
    """h_i = sum_nu alpha_nu_i K(state, xi_nu) for every neuron i."""
    state = np.asarray(state)
    if state.shape != (patterns.num_neurons,):
        raise DimensionError(
            f"state length {state.shape} does not match N={patterns.num_neurons}"
        )
    X = patterns.patterns.astype(float)
    d2 = 2.0 * (patterns.num_neurons - X @ state.astype(float))
    k = np.exp(-kcfg.gamma * d2)  # kernel values against each stored pattern
    return weights.alpha.T @ k


def step(state, patterns: PatternSet, weights: DualWeights, kcfg: KernelConfig):
    """One synchronous update; returns (new_state, number of flipped neurons)."""
    state = np.asarray(state)
    h = local_field(state, patterns, weights, kcfg)
    new = np.where(h > 0, 1, np.where(h < 0, -1, state)).astype(state.dtype)
    changed = int(np.count_nonzero(new != state))
    return new, changed


def recall(
    cue,
    target_index: int,
    patterns: PatternSet,
    weights: DualWeights,
    kcfg: KernelConfig,
    max_steps: int = 100,
    success_threshold: float = DEFAULT_SUCCESS_THRESHOLD,
) -> RecallResult:
    """Iterate synchronous updates until a fixed point, 2-cycle, or max_steps.

    On a 2-cycle the higher-overlap state of the cycle is reported with
    converged=False.
    """
    if max_steps < 1:
        raise ArgumentError(f"max_steps must be >= 1, got {max_steps}")
    if not (0.0 < success_threshold <= 1.0):
        raise ArgumentError(f"success_threshold must be in (0, 1], got {success_threshold}")
    target = patterns.patterns[target_index]
    state = np.asarray(cue).copy()
    prev = None
    converged = False
    steps = 0
    for _ in range(max_steps):
        new, changed = step(state, patterns, weights, kcfg)
        steps += 1
        if changed == 0:
            converged = True
            break
        if prev is not None and np.array_equal(new, prev):
            # 2-cycle: keep whichever of the two states matches the target better
            if overlap(prev, target) > overlap(state, target):
                state = prev
            break
        prev = state
        state = new
    m = overlap(state, target)
    return RecallResult(
        final_state=state,
        overlap=m,
        converged=converged,
        steps=steps,
        success=m >= success_threshold,
    )
