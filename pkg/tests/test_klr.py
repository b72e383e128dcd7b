import math

import mpmath
import numpy as np
import pytest

from hopgeo.errors import DimensionError, TrainingDivergenceError
from hopgeo.kernel_core import GramMatrix, KernelConfig, generate_patterns, gram
from hopgeo.klr import (
    DualWeights,
    TrainConfig,
    all_targets,
    fit_dual_weights,
    load_weights,
    loss,
    loss_gradient,
    neuron_targets,
    predict_probs,
    save_weights,
    sigmoid,
    train,
)


def random_instance(rng, P):
    """Random PSD Gram-like matrix, alpha, binary targets."""
    B = rng.normal(size=(P, P))
    K = B @ B.T / P + np.eye(P) * 0.1
    return (
        GramMatrix(values=K, gamma=float("nan")),
        rng.normal(scale=0.8, size=P),
        rng.integers(0, 2, size=P).astype(float),
    )


def test_sigmoid_basics():
    assert sigmoid(0.0) == 0.5
    for h in (-30.0, -2.5, 0.3, 7.0):
        assert sigmoid(h) + sigmoid(-h) == pytest.approx(1.0, abs=1e-15)
    assert sigmoid(500.0) == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= sigmoid(-500.0) < 1e-200
    # vector form agrees with scalar form
    hs = np.array([-3.0, 0.0, 2.0])
    assert np.allclose(sigmoid(hs), [sigmoid(h) for h in hs])


def test_predict_probs_zero_alpha():
    K = gram(generate_patterns(5, 10, 1), KernelConfig(gamma=0.1))
    assert np.allclose(predict_probs(np.zeros(5), K), 0.5)


def test_predict_probs_scalar_case():
    K = GramMatrix(values=np.array([[1.0]]), gamma=1.0)
    assert predict_probs(np.array([2.0]), K)[0] == pytest.approx(0.8807970779778823)


def test_predict_probs_matches_loop_oracle():
    rng = np.random.default_rng(2)
    K, alpha, _ = random_instance(rng, 6)
    p = predict_probs(alpha, K)
    for mu in range(6):
        h = sum(alpha[nu] * K.values[mu, nu] for nu in range(6))
        assert p[mu] == pytest.approx(1 / (1 + math.exp(-h)), rel=1e-12)


def test_predict_probs_dimension_mismatch():
    K = GramMatrix(values=np.eye(3), gamma=1.0)
    with pytest.raises(DimensionError):
        predict_probs(np.zeros(4), K)


def test_loss_at_zero_alpha():
    K = gram(generate_patterns(7, 12, 3), KernelConfig(gamma=0.2))
    t = neuron_targets(generate_patterns(7, 12, 3), 0)
    assert loss(np.zeros(7), K, t, 0.0) == pytest.approx(7 * math.log(2), rel=1e-14)
    # penalty vanishes at alpha = 0 no matter how large lambda is
    assert loss(np.zeros(7), K, t, 5.0) == pytest.approx(7 * math.log(2), rel=1e-14)


def test_loss_matches_high_precision_oracle():
    rng = np.random.default_rng(4)
    K, alpha, t = random_instance(rng, 5)
    lam = 0.37
    got = loss(alpha, K, t, lam)
    with mpmath.workdps(50):
        h = [mpmath.fsum(mpmath.mpf(K.values[m, n]) * mpmath.mpf(alpha[n]) for n in range(5))
             for m in range(5)]
        total = mpmath.mpf(0)
        for m in range(5):
            p = 1 / (1 + mpmath.e ** (-h[m]))
            total += -(mpmath.mpf(t[m]) * mpmath.log(p) + (1 - mpmath.mpf(t[m])) * mpmath.log(1 - p))
        total += mpmath.mpf(lam) / 2 * mpmath.fsum(mpmath.mpf(alpha[m]) * h[m] for m in range(5))
        expected = float(total)
    assert got == pytest.approx(expected, rel=1e-12)


def test_loss_stable_under_saturation():
    K = GramMatrix(values=np.eye(2), gamma=1.0)
    val = loss(np.array([800.0, -800.0]), K, np.array([1.0, 0.0]), 0.0)
    assert math.isfinite(val)
    assert val == pytest.approx(0.0, abs=1e-12)


def test_gradient_identity_kernel_case():
    K = GramMatrix(values=np.eye(2), gamma=1.0)
    g = loss_gradient(np.zeros(2), K, np.array([1.0, 0.0]), 0.0)
    assert np.allclose(g, [-0.5, 0.5])


def central_difference(alpha, K, t, lam, eps=1e-6):
    g = np.zeros_like(alpha)
    for i in range(alpha.size):
        up = alpha.copy(); up[i] += eps
        dn = alpha.copy(); dn[i] -= eps
        g[i] = (loss(up, K, t, lam) - loss(dn, K, t, lam)) / (2 * eps)
    return g


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(11)
    for _ in range(100):
        P = int(rng.integers(2, 17))
        K, alpha, t = random_instance(rng, P)
        lam = float(rng.uniform(0, 0.5))
        g = loss_gradient(alpha, K, t, lam)
        fd = central_difference(alpha, K, t, lam)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-12)


def test_train_separates_two_patterns():
    ps = generate_patterns(2, 16, 21)
    kcfg = KernelConfig(gamma=0.5)
    w = train(ps, kcfg, TrainConfig(lam=1e-3, learning_rate=0.1, max_epochs=50000, grad_tol=1e-8))
    K = gram(ps, kcfg)
    T = all_targets(ps)
    for i in range(ps.num_neurons):
        p = predict_probs(w.alpha[:, i], K)
        assert np.all(np.abs(p - T[:, i]) < 0.05)


def test_train_gradient_norm_at_stop():
    ps = generate_patterns(3, 8, 2)
    kcfg = KernelConfig(gamma=0.5)
    tcfg = TrainConfig(lam=1e-2, learning_rate=0.2, max_epochs=100000, grad_tol=1e-8)
    w = train(ps, kcfg, tcfg)
    K = gram(ps, kcfg)
    T = all_targets(ps)
    for i in range(ps.num_neurons):
        assert np.linalg.norm(loss_gradient(w.alpha[:, i], K, T[:, i], tcfg.lam)) < 1e-8


def test_train_huge_lambda_shrinks_weights():
    ps = generate_patterns(4, 8, 13)
    kcfg = KernelConfig(gamma=0.3)
    w = train(ps, kcfg, TrainConfig(lam=1e6, learning_rate=1e-7, max_epochs=2000, grad_tol=1e-9))
    assert np.abs(w.alpha).max() < 1e-2
    K = gram(ps, kcfg)
    for i in range(ps.num_neurons):
        assert np.allclose(predict_probs(w.alpha[:, i], K), 0.5, atol=0.02)


def test_train_deterministic():
    ps = generate_patterns(3, 12, 5)
    kcfg = KernelConfig(gamma=0.2)
    tcfg = TrainConfig(lam=1e-4, learning_rate=0.1, max_epochs=2000, grad_tol=1e-6)
    a = train(ps, kcfg, tcfg)
    b = train(ps, kcfg, tcfg)
    assert np.array_equal(a.alpha, b.alpha)
    assert a.trained_epochs == b.trained_epochs


def test_train_divergence_error_names_neuron_and_epoch():
    ps = generate_patterns(8, 8, 17)
    # gamma tiny -> near-singular Gram with curvature ~ P^2/4; lr far above 2/L
    with pytest.raises(TrainingDivergenceError) as exc:
        train(ps, KernelConfig(gamma=1e-4), TrainConfig(lam=0.0, learning_rate=5.0,
                                                        max_epochs=500, grad_tol=1e-12))
    assert exc.value.neuron >= 0
    assert exc.value.epoch >= 0


def test_convex_objective_same_minimum_for_different_rates():
    ps = generate_patterns(4, 10, 31)
    kcfg = KernelConfig(gamma=0.4)
    K = gram(ps, kcfg)
    T = all_targets(ps)
    losses = []
    for lr in (0.05, 0.2):
        tcfg = TrainConfig(lam=1e-2, learning_rate=lr, max_epochs=200000, grad_tol=1e-10)
        res = fit_dual_weights(K.values, T, tcfg)
        assert not res.diverged
        assert res.converged.all()
        losses.append([loss(res.alpha[:, i], K, T[:, i], 1e-2) for i in range(ps.num_neurons)])
    a, b = np.array(losses)
    assert np.all(np.abs(a - b) <= 1e-6 * np.abs(a))


def test_loss_symmetry_under_target_and_sign_flip():
    rng = np.random.default_rng(6)
    K, alpha, t = random_instance(rng, 6)
    assert loss(alpha, K, t, 0.2) == pytest.approx(loss(-alpha, K, 1 - t, 0.2), rel=1e-12)


def test_weights_roundtrip_exact(tmp_path):
    ps = generate_patterns(3, 5, 77)
    w = train(ps, KernelConfig(gamma=0.11), TrainConfig(lam=1e-4, learning_rate=0.1,
                                                        max_epochs=500, grad_tol=1e-6))
    path = tmp_path / "weights.txt"
    save_weights(w, path)
    back = load_weights(path)
    assert np.array_equal(back.alpha, w.alpha)
    assert back.gamma == w.gamma
    assert back.lam == w.lam
    assert back.trained_epochs == w.trained_epochs


def test_dual_weights_rejects_nonfinite():
    with pytest.raises(Exception):
        DualWeights(alpha=np.array([[np.inf]]), gamma=1.0, lam=0.0, trained_epochs=1)
