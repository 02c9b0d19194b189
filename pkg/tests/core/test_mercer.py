"""
tests.core.mercer

Test cases for Gram eigendecomposition, Nystrom features, truncation errors
and the embedding-kernel read-out of a Mercer feature map.
"""

import math

import numpy as np
import pytest

from eqkernel.core._errors import SymmetryError
from eqkernel.core.mercer import (
    DECAY_COLUMNS,
    FiniteFeatureMap,
    MercerTruncation,
    build_mercer_truncation,
    eigenvalue_decay_report,
    gram_eigendecompose,
    mercer_to_eqk,
    nystrom_feature_matrix,
    nystrom_features,
    rank_for_tail,
    truncation_error_bound,
    truncation_frobenius_error,
)
from eqkernel.core.spectral import CustomKernel, GaussianKernel, cross_gram, gram_matrix

GAUSSIAN = GaussianKernel(sigma=1.0, d=1)
GRID_40 = np.linspace(-1.0, 1.0, 40)[:, None]


def constant_kernel():
    return CustomKernel(d=1, evaluator=lambda delta: 1.0, name="constant")


def narrow_truncation():
    """Well-conditioned Gram: sigma = 0.2 on 10 landmarks in [-1, 1]."""
    return build_mercer_truncation(GaussianKernel(0.2, 1), np.linspace(-1.0, 1.0, 10))


def test_constant_gram_spectrum():
    spectrum = gram_eigendecompose(np.ones((6, 6)))
    np.testing.assert_allclose(spectrum.eigenvalues, [6, 0, 0, 0, 0, 0], atol=1e-10)
    assert spectrum.is_psd


def test_identity_gram_spectrum():
    spectrum = gram_eigendecompose(np.eye(5))
    np.testing.assert_allclose(spectrum.eigenvalues, np.ones(5))
    np.testing.assert_allclose(spectrum.eigenvectors.T @ spectrum.eigenvectors, np.eye(5), atol=1e-10)


def test_gram_eigendecompose_counts_violations():
    spectrum = gram_eigendecompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert spectrum.psd_violations == 1
    assert not spectrum.is_psd
    assert spectrum.eigenvalues[-1] == pytest.approx(-1.0)


def test_gram_eigendecompose_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        gram_eigendecompose(np.array([[1.0, 0.2], [0.0, 1.0]]))


def test_gaussian_spectrum_decays():
    t = build_mercer_truncation(GAUSSIAN, GRID_40)
    assert t.psd_violations == 0
    assert np.all(np.diff(t.eigenvalues) <= 0)
    assert t.eigenvalues[0] > 1.0
    assert t.eigenvalues[10] < 1e-6 * t.eigenvalues[0]
    np.testing.assert_allclose(t.eigenvectors.T @ t.eigenvectors, np.eye(40), atol=1e-10)


def test_decay_report():
    report = eigenvalue_decay_report(gram_eigendecompose(gram_matrix(GAUSSIAN, GRID_40)))
    assert list(report.columns) == DECAY_COLUMNS
    assert len(report) == 40
    assert report["exp_rate"].iloc[0] > 0
    assert report["tail_sum"].iloc[-1] == 0.0


def test_rank_for_tail():
    spectrum = gram_eigendecompose(gram_matrix(GAUSSIAN, GRID_40))
    rank = rank_for_tail(spectrum, 1e-6)
    tail = float(np.sum(spectrum.eigenvalues[rank:]))
    assert tail <= 1e-6 < float(np.sum(spectrum.eigenvalues[rank - 1 :]))

    with pytest.raises(ValueError):
        rank_for_tail(spectrum, -1.0)


def test_truncation_validation():
    landmarks = np.zeros((2, 1))
    with pytest.raises(ValueError):
        MercerTruncation(landmarks, np.array([0.5, 1.0]), np.eye(2), rank=1)
    with pytest.raises(ValueError):
        MercerTruncation(landmarks, np.array([1.0, 0.5]), np.eye(2), rank=3)


def test_feature_map_rejects_zero_eigenvalue():
    t = MercerTruncation(np.array([[0.0], [1.0]]), np.array([1.0, 0.0]), np.eye(2), rank=2)
    with pytest.raises(ValueError):
        FiniteFeatureMap(t, GAUSSIAN)
    assert FiniteFeatureMap(t.with_rank(1), GAUSSIAN).dimension == 1


def test_constant_kernel_rank_one():
    """Every point maps to the same scalar and all inner products are 1."""

    k = constant_kernel()
    fm = FiniteFeatureMap(build_mercer_truncation(k, np.linspace(-1, 1, 5), rank=1), k)
    features = nystrom_feature_matrix(fm, np.array([[-3.0], [0.2], [7.0]]))
    assert features.shape == (3, 1)
    np.testing.assert_allclose(np.abs(features), 1.0, atol=1e-12)
    np.testing.assert_allclose(features @ features.T, 1.0, atol=1e-12)
    assert mercer_to_eqk(fm, [0.4], [-2.0]) == pytest.approx(1.0, abs=1e-12)
    assert truncation_error_bound(fm.truncation) == pytest.approx(0.0, abs=1e-12)


def test_full_rank_reproduces_gram():
    t = narrow_truncation()
    fm = FiniteFeatureMap(t, GaussianKernel(0.2, 1))
    Phi = nystrom_feature_matrix(fm, t.landmarks)
    G = gram_matrix(GaussianKernel(0.2, 1), t.landmarks)
    assert np.max(np.abs(Phi @ Phi.T - G)) <= 1e-8
    assert truncation_error_bound(t) == 0.0


def test_eqk_at_landmark_is_gram_diagonal():
    t = narrow_truncation()
    fm = FiniteFeatureMap(t, GaussianKernel(0.2, 1))
    landmark = t.landmarks[3]
    assert mercer_to_eqk(fm, landmark, landmark) == pytest.approx(1.0, abs=1e-8)


def test_truncation_bound_decreases_with_rank():
    t = build_mercer_truncation(GAUSSIAN, GRID_40)
    assert truncation_error_bound(t, 10) < truncation_error_bound(t, 5)
    with pytest.raises(ValueError):
        truncation_error_bound(t, 41)


@pytest.mark.parametrize("rank", [3, 5, 8])
def test_reconstruction_error_matches_frobenius_tail(rank):
    t = build_mercer_truncation(GAUSSIAN, GRID_40, rank=rank)
    fm = FiniteFeatureMap(t, GAUSSIAN)
    Phi = nystrom_feature_matrix(fm, t.landmarks)
    G = gram_matrix(GAUSSIAN, t.landmarks)

    reconstruction = float(np.linalg.norm(G - Phi @ Phi.T, "fro"))
    frobenius = truncation_frobenius_error(t)
    assert reconstruction <= frobenius + 1e-8
    assert frobenius <= truncation_error_bound(t) + 1e-12


def test_nystrom_features_single_point():
    t = build_mercer_truncation(GAUSSIAN, GRID_40, rank=6)
    fm = FiniteFeatureMap(t, GAUSSIAN)
    np.testing.assert_allclose(nystrom_features(fm, 0.37), nystrom_feature_matrix(fm, [[0.37]])[0])


def test_eqk_matches_classical_nystrom(rng):
    fm = FiniteFeatureMap(build_mercer_truncation(GAUSSIAN, GRID_40, rank=10), GAUSSIAN)
    for x, y in rng.uniform(-1, 1, size=(100, 2, 1)):
        classical = float(nystrom_features(fm, x) @ nystrom_features(fm, y))
        assert abs(mercer_to_eqk(fm, x, y) - classical) <= 1e-9


def test_end_to_end_kernel_error():
    """m = 40, m' = 12: the embedding read-out tracks the Gaussian within 0.02 on a 20 x 20 grid."""

    fm = FiniteFeatureMap(build_mercer_truncation(GAUSSIAN, GRID_40, rank=12), GAUSSIAN)
    test_grid = (-1.0 + 0.1 * (np.arange(20) + 0.5))[:, None]
    exact = cross_gram(GAUSSIAN, test_grid, test_grid)

    eqk = np.array([[mercer_to_eqk(fm, x, y) for y in test_grid] for x in test_grid])
    assert np.max(np.abs(eqk - exact)) <= 0.02
    assert math.isfinite(float(eqk.sum()))
