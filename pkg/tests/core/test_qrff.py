"""
tests.core.qrff

Test cases for quantum random Fourier features against the classical map.
"""

import math

import numpy as np
import pytest

from eqkernel.core.pauli_state import mixture_to_dense
from eqkernel.core.qrff import (
    QrffModel,
    build_qrff_model,
    g_factor,
    qrff_encode,
    qrff_estimate_with_factors,
    qrff_kernel_estimate,
)
from eqkernel.core.rff import build_rff_map, rff_features, rff_kernel_estimate
from eqkernel.core.spectral import GaussianKernel

GAUSSIAN_2D = GaussianKernel(sigma=1.0, d=2)


def test_model_qubit_count():
    model = build_qrff_model(GAUSSIAN_2D, 62, seed=0)
    assert model.n == 3
    assert model.D == 62

    with pytest.raises(ValueError):
        QrffModel(map=model.map, n=4)


def test_g_factor_is_feature_one_norm(rng):
    model = build_qrff_model(GAUSSIAN_2D, 100, seed=1)
    for x in rng.uniform(-1, 1, size=(20, 2)):
        g = g_factor(model, x)
        assert 1.0 <= g <= 10.0
        assert g == pytest.approx(float(np.abs(rff_features(model.map, x).entries).sum()))


def test_encoded_state_is_density_matrix(rng):
    model = build_qrff_model(GAUSSIAN_2D, 62, seed=2)
    rho = qrff_encode(model, rng.uniform(-1, 1, size=2))
    dense = mixture_to_dense(rho)
    assert dense.n == 3
    assert dense.min_eigenvalue >= -1e-10


def test_self_estimate_is_one(rng):
    model = build_qrff_model(GAUSSIAN_2D, 14, seed=3)
    x = rng.uniform(-1, 1, size=2)
    assert qrff_kernel_estimate(model, x, x) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("D, n", [(2, 1), (14, 2), (62, 3), (254, 4)])
def test_exact_path_matches_classical(D, n):
    rng = np.random.default_rng(D)
    for seed in range(3):
        model = build_qrff_model(GAUSSIAN_2D, D, seed)
        assert model.n == n
        X, Y = rng.uniform(-1, 1, size=(2, 100, 2))
        diffs = [abs(qrff_kernel_estimate(model, x, y) - rff_kernel_estimate(model.map, x, y)) for x, y in zip(X, Y)]
        assert max(diffs) <= 1e-9, f"D={D} seed={seed}: max diff {max(diffs)}"


def test_estimate_reports_factors(rng):
    model = build_qrff_model(GAUSSIAN_2D, 14, seed=4)
    x, y = rng.uniform(-1, 1, size=(2, 2))
    est = qrff_estimate_with_factors(model, x, y)
    assert est.n_qubits == 2
    assert est.g == pytest.approx(g_factor(model, x))
    assert est.g_prime == pytest.approx(g_factor(model, y))


def test_shot_estimate_within_binomial_error(rng):
    """The SWAP-test error is scaled by g g' 2^n."""

    model = build_qrff_model(GAUSSIAN_2D, 14, seed=5)
    shots = 10**6
    shot_rng = np.random.default_rng(9)
    for x, y in rng.uniform(-1, 1, size=(10, 2, 2)):
        exact = qrff_estimate_with_factors(model, x, y)
        sampled = qrff_kernel_estimate(model, x, y, shots=shots, rng=shot_rng)
        tolerance = 5.0 * exact.g * exact.g_prime * 2**model.n / math.sqrt(shots)
        assert abs(sampled - exact.value) <= tolerance


def test_model_from_existing_map():
    rff = build_rff_map(GAUSSIAN_2D, 254, seed=0)
    model = QrffModel.from_map(rff)
    assert model.map is rff
    assert model.n == 4


def test_shot_estimate_requires_rng(rng):
    model = build_qrff_model(GAUSSIAN_2D, 14, seed=5)
    x, y = rng.uniform(-1, 1, size=(2, 2))
    with pytest.raises(ValueError, match="rng"):
        qrff_kernel_estimate(model, x, y, shots=100)


def test_seeded_shot_estimate_is_reproducible(rng):
    model = build_qrff_model(GAUSSIAN_2D, 14, seed=5)
    x, y = rng.uniform(-1, 1, size=(2, 2))
    first = qrff_kernel_estimate(model, x, y, shots=1000, rng=np.random.default_rng(3))
    second = qrff_kernel_estimate(model, x, y, shots=1000, rng=np.random.default_rng(3))
    assert first == second
