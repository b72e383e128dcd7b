"""Fisher-information geometry of a trained neuron.

The Fisher matrix of one neuron's Bernoulli model over the stored
patterns is G = K D K with D = diag(p_mu (1 - p_mu)). The expectation
form (two-outcome enumeration of the score outer product) is kept as an
independent oracle; the two must agree to machine precision.

Probabilities entering D are never clamped: vanishing information under
sigmoid saturation is real behavior of the model and must stay visible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateSpectrumError, DimensionError, NumericError
from .kernel_core import GramMatrix
from .klr import loss_gradient, predict_probs

DEFAULT_REL_CUTOFF = 1e-10


@dataclass
class FisherMatrix:
    values: np.ndarray  # (P, P), symmetric PSD
    neuron_index: int = -1
    source_gamma: float = float("nan")


@dataclass
class FisherSpectrum:
    eigenvalues: np.ndarray   # descending, clamped at 0
    eigenvectors: np.ndarray  # orthonormal columns, same order
    lambda_max: float
    d_eff: float              # 0.0 signals a fully degenerate spectrum
    ratio_2_1: float
    ratio_tail: float


@dataclass
class GradientReport:
    euclid_norm_sq: float
    riemann_norm_sq: float
    rank1_residual: float
    nat_grad_norm: float
    cutoff_used: float
    retained_modes: int
    lambda_max: float
    d_eff: float
    degenerate: bool


def _check_pair(alpha_col, K: GramMatrix) -> np.ndarray:
    alpha_col = np.asarray(alpha_col, dtype=float)
    if alpha_col.shape != (K.values.shape[0],):
        raise DimensionError(
            f"alpha length {alpha_col.shape} does not match Gram size {K.values.shape}"
        )
    return alpha_col


def fisher_matrix(alpha_col, K: GramMatrix, neuron_index: int = -1) -> FisherMatrix:
    """G = K diag(p(1-p)) K, symmetrized as (G + G')/2."""
    alpha_col = _check_pair(alpha_col, K)
    p = predict_probs(alpha_col, K)
    d = p * (1.0 - p)
    G = (K.values * d) @ K.values
    G = 0.5 * (G + G.T)
    return FisherMatrix(values=G, neuron_index=neuron_index, source_gamma=K.gamma)


def fim_empirical_oracle(alpha_col, K: GramMatrix, neuron_index: int = -1) -> FisherMatrix:
    """Expectation form of the Fisher matrix, by explicit enumeration.

    For each pattern mu the Bernoulli score at outcome s in {0,1} is
    (s - p_mu) * K[:, mu]; the two outcomes are enumerated with their
    probabilities and the score outer products summed over patterns.
    Deliberately loop-based and independent of fisher_matrix.
    """
    alpha_col = _check_pair(alpha_col, K)
    P = K.values.shape[0]
    p = predict_probs(alpha_col, K)
    G = np.zeros((P, P))
    for mu in range(P):
        k_mu = K.values[:, mu]
        for s, prob in ((1.0, p[mu]), (0.0, 1.0 - p[mu])):
            score = (s - p[mu]) * k_mu
            G += prob * np.outer(score, score)
    G = 0.5 * (G + G.T)
    return FisherMatrix(values=G, neuron_index=neuron_index, source_gamma=K.gamma)


def effective_dimension(eigenvalues) -> float:
    """Stable rank (sum lambda)^2 / (sum lambda^2) of a nonnegative spectrum."""
    lam = np.asarray(eigenvalues, dtype=float)
    s2 = float(np.sum(lam * lam))
    if s2 == 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero")
    return float(np.sum(lam)) ** 2 / s2


def spectrum(G: FisherMatrix) -> FisherSpectrum:
    """Full symmetric eigendecomposition, sorted descending, clamped at 0."""
    vals = G.values
    if not np.isfinite(vals).all():
        raise NumericError("Fisher matrix contains non-finite entries")
    w, V = np.linalg.eigh(vals)
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    w = np.clip(w, 0.0, None)
    lam1 = float(w[0])
    if lam1 > 0.0:
        d_eff = effective_dimension(w)
        ratio_2_1 = float(w[1] / lam1) if w.size > 1 else 0.0
        ratio_tail = float(w[-1] / lam1) if w.size > 1 else 1.0
    else:
        d_eff = 0.0
        ratio_2_1 = 0.0
        ratio_tail = 0.0
    return FisherSpectrum(
        eigenvalues=w,
        eigenvectors=V,
        lambda_max=lam1,
        d_eff=d_eff,
        ratio_2_1=ratio_2_1,
        ratio_tail=ratio_tail,
    )


def natural_gradient(grad, spec: FisherSpectrum, rel_cutoff: float = DEFAULT_REL_CUTOFF):
    """Spectral pseudo-inverse of the metric applied to the gradient.

    Only modes with lambda_k > rel_cutoff * lambda_1 are inverted; returns
    (natural gradient, number of retained modes).
    """
    if not (0.0 < rel_cutoff < 1.0):
        raise ArgumentError(f"rel_cutoff must lie in (0, 1), got {rel_cutoff}")
    if spec.lambda_max <= 0.0:
        raise DegenerateSpectrumError("cannot invert an all-zero spectrum")
    grad = np.asarray(grad, dtype=float)
    keep = spec.eigenvalues > rel_cutoff * spec.lambda_max
    coeffs = spec.eigenvectors[:, keep].T @ grad
    nat = spec.eigenvectors[:, keep] @ (coeffs / spec.eigenvalues[keep])
    return nat, int(np.count_nonzero(keep))


def gradient_report(
    alpha_col,
    K: GramMatrix,
    targets,
    lam: float,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
) -> GradientReport:
    """Euclidean and Riemannian gradient norms plus the rank-1 residual.

    rank1_residual measures how much of the Euclidean gradient escapes the
    top Fisher mode: ||grad - lambda_1 (v1' natgrad) v1|| / max(||grad||, 1e-30).
    """
    alpha_col = _check_pair(alpha_col, K)
    grad = loss_gradient(alpha_col, K, targets, lam)
    spec = spectrum(fisher_matrix(alpha_col, K))
    euclid = float(grad @ grad)
    if spec.lambda_max <= 0.0:
        return GradientReport(
            euclid_norm_sq=euclid,
            riemann_norm_sq=0.0,
            rank1_residual=0.0 if euclid == 0.0 else 1.0,
            nat_grad_norm=0.0,
            cutoff_used=rel_cutoff,
            retained_modes=0,
            lambda_max=0.0,
            d_eff=0.0,
            degenerate=True,
        )
    keep = spec.eigenvalues > rel_cutoff * spec.lambda_max
    coeffs = spec.eigenvectors[:, keep].T @ grad
    riemann = float(np.sum(coeffs * coeffs / spec.eigenvalues[keep]))
    nat, retained = natural_gradient(grad, spec, rel_cutoff)
    v1 = spec.eigenvectors[:, 0]
    rank1_term = spec.lambda_max * float(v1 @ nat) * v1
    gnorm = float(np.linalg.norm(grad))
    residual = float(np.linalg.norm(grad - rank1_term)) / max(gnorm, 1e-30)
    return GradientReport(
        euclid_norm_sq=euclid,
        riemann_norm_sq=riemann,
        rank1_residual=residual,
        nat_grad_norm=float(np.linalg.norm(nat)),
        cutoff_used=rel_cutoff,
        retained_modes=retained,
        lambda_max=spec.lambda_max,
        d_eff=spec.d_eff,
        degenerate=False,
    )


def write_spectrum_csv(specs: list[FisherSpectrum], path) -> None:
    """Columns: neuron,k,lambda_k,lambda_k_over_lambda_1 (one row per mode)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["neuron", "k", "lambda_k", "lambda_k_over_lambda_1"])
        for i, spec in enumerate(specs):
            lam1 = spec.lambda_max
            for k, lk in enumerate(spec.eigenvalues, start=1):
                ratio = lk / lam1 if lam1 > 0 else 0.0
                w.writerow([i, k, f"{lk:.17g}", f"{ratio:.17g}"])


def write_report_csv(reports: list[GradientReport], path) -> None:
    """One row per neuron with norms, spectrum summaries and cutoff."""
    cols = [
        "neuron",
        "euclid_norm_sq",
        "riemann_norm_sq",
        "nat_grad_norm",
        "rank1_residual",
        "lambda_max",
        "d_eff",
        "retained_modes",
        "cutoff",
    ]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for i, r in enumerate(reports):
            w.writerow(
                [
                    i,
                    f"{r.euclid_norm_sq:.17g}",
                    f"{r.riemann_norm_sq:.17g}",
                    f"{r.nat_grad_norm:.17g}",
                    f"{r.rank1_residual:.17g}",
                    f"{r.lambda_max:.17g}",
                    f"{r.d_eff:.17g}",
                    r.retained_modes,
                    f"{r.cutoff_used:.17g}",
                ]
            )
