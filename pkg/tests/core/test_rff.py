"""
tests.core.rff

Test cases for random Fourier feature maps, the dimension bound and its
inversion, finite-difference precision and the sup-error harness.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqkernel.core._errors import DimensionError, GuardError
from eqkernel.core.pauli_state import qubit_count_for
from eqkernel.core.rff import (
    DomainBox,
    RffMap,
    build_rff_map,
    central_second_derivative,
    failure_bound,
    finite_difference_error_bound,
    gaussian_dimension_growth,
    grid_points,
    growth_exponents,
    required_dimension,
    required_precision_bits,
    rff_feature_matrix,
    rff_features,
    rff_gram,
    rff_kernel_estimate,
    smooth_dimension_bound,
    sup_error_estimate,
)
from eqkernel.core.spectral import GaussianKernel, gaussian_fourth_derivative_bound

DIAM_UNIT_SQUARE = 2.0 * math.sqrt(2.0)


################################ MAPS

@pytest.mark.parametrize("D", [0, 3, -2])
def test_build_rejects_odd_or_small_dimension(D):
    with pytest.raises(ValueError):
        build_rff_map(GaussianKernel(1.0, 1), D, seed=0)


def test_map_is_seeded():
    k = GaussianKernel(1.0, 2)
    a, b = build_rff_map(k, 20, seed=5), build_rff_map(k, 20, seed=5)
    np.testing.assert_array_equal(a.frequencies, b.frequencies)
    assert a.frequencies.shape == (10, 2)
    assert len(a.samples) == 10
    assert not np.array_equal(a.frequencies, build_rff_map(k, 20, seed=6).frequencies)


def test_map_validates_frequency_count():
    with pytest.raises(ValueError):
        RffMap(d=1, D=4, frequencies=np.zeros((3, 1)), seed=0)


def test_gaussian_frequency_variance():
    rff = build_rff_map(GaussianKernel(1.0, 1), 200_000, seed=0)
    assert float(np.var(rff.frequencies)) == pytest.approx(1.0, abs=0.03)


def test_features_have_unit_norm(rng):
    rff = build_rff_map(GaussianKernel(0.7, 3), 1000, seed=1)
    X = rng.uniform(-2, 2, size=(50, 3))
    norms = np.linalg.norm(rff_feature_matrix(rff, X), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-13)

    z = rff_features(rff, X[0])
    assert z.d == 1000


def test_feature_layout_is_interleaved():
    rff = RffMap(d=1, D=4, frequencies=np.array([[1.0], [2.0]]), seed=0)
    z = rff_feature_matrix(rff, [[0.5]])[0]
    expected = math.sqrt(0.5) * np.array([math.cos(0.5), math.sin(0.5), math.cos(1.0), math.sin(1.0)])
    np.testing.assert_allclose(z, expected)


def test_kernel_estimate_is_feature_inner_product(rng):
    rff = build_rff_map(GaussianKernel(1.0, 2), 200, seed=2)
    x, y = rng.uniform(-1, 1, size=(2, 2))
    inner = float(rff_features(rff, x).entries @ rff_features(rff, y).entries)
    assert rff_kernel_estimate(rff, x, y) == pytest.approx(inner, abs=1e-12)
    assert rff_kernel_estimate(rff, x, x) == pytest.approx(1.0, abs=1e-12)


def test_kernel_estimate_is_unbiased_over_seeds():
    """Averaged over independent maps, the estimate converges to k(x - y)."""

    k = GaussianKernel(1.0, 2)
    x, y = np.array([0.3, -0.4]), np.array([-0.5, 0.6])
    estimates = np.array([rff_kernel_estimate(build_rff_map(k, 10, seed=s), x, y) for s in range(1000)])

    exact = float(np.asarray(k(x - y)))
    tolerance = 4.0 * estimates.std(ddof=1) / math.sqrt(len(estimates))
    assert abs(estimates.mean() - exact) <= tolerance


def test_kernel_estimate_dimension_check():
    rff = build_rff_map(GaussianKernel(1.0, 2), 10, seed=0)
    with pytest.raises(DimensionError):
        rff_kernel_estimate(rff, [0.0], [0.0])


def test_rff_gram_is_psd(rng):
    rff = build_rff_map(GaussianKernel(1.0, 2), 50, seed=3)
    G = rff_gram(rff, rng.uniform(-1, 1, size=(40, 2)))
    assert np.linalg.eigvalsh(G).min() >= -1e-10


################################ BOUNDS

def test_failure_bound_at_known_dimension():
    assert failure_bound(53872, 2, 0.1, 1.0, DIAM_UNIT_SQUARE) <= 0.01


def test_failure_bound_clamps_to_one():
    assert failure_bound(2, 2, 0.1, 1.0, DIAM_UNIT_SQUARE) == 1.0
    with pytest.raises(ValueError):
        failure_bound(0, 2, 0.1, 1.0, 1.0)


def test_required_dimension_is_smallest_even():
    report = required_dimension(2, 0.1, 1.0, DIAM_UNIT_SQUARE, 0.01)
    D = report.D_required

    assert D % 2 == 0
    assert D == 53872
    assert failure_bound(D, 2, 0.1, 1.0, DIAM_UNIT_SQUARE) <= 0.01 < failure_bound(D - 2, 2, 0.1, 1.0, DIAM_UNIT_SQUARE)
    assert report.failure_probability <= 0.01
    assert report.sigma_p_sq == pytest.approx(1.0)
    assert report.to_dict()["exponent_constant"] == 8


def test_required_dimension_vacuous_delta():
    report = required_dimension(2, 0.1, 1.0, DIAM_UNIT_SQUARE, 1.0)
    assert report.D_required == 2
    assert any("vacuous" in note for note in report.notes)


def test_smaller_exponent_constant_needs_fewer_features():
    c8 = required_dimension(2, 0.1, 1.0, DIAM_UNIT_SQUARE, 0.01)
    c4 = required_dimension(2, 0.1, 1.0, DIAM_UNIT_SQUARE, 0.01, exponent_constant=4)
    assert c4.D_required < c8.D_required
    assert failure_bound(c4.D_required, 2, 0.1, 1.0, DIAM_UNIT_SQUARE, exponent_constant=4) <= 0.01


@pytest.mark.parametrize("epsilon, delta", [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.5)])
def test_required_dimension_rejects_bad_arguments(epsilon, delta):
    with pytest.raises(ValueError):
        required_dimension(2, epsilon, 1.0, 1.0, delta)


def test_smooth_dimension_bound():
    d, eps, R, B, delta = 5, 0.2, 1.0, 1.0, 0.05
    report = smooth_dimension_bound(d, eps, R, B, delta)
    sigma_p, diam = math.sqrt(d * B), 2.0 * R * math.sqrt(d)

    D = report.D_required
    assert failure_bound(D, d, eps, sigma_p, diam) <= delta < failure_bound(D - 2, d, eps, sigma_p, diam)
    assert report.diameter == pytest.approx(diam)
    assert len(report.notes) == 3


################################ DIMENSION GROWTH

GROWTH_DIMS = [1, 2, 4, 8, 16, 32, 64]


def test_growth_matches_required_dimension():
    points = gaussian_dimension_growth(1.0, [2], 0.1, 1.0, 0.01)
    expected = required_dimension(2, 0.1, math.sqrt(2.0), DIAM_UNIT_SQUARE, 0.01)
    assert [p.D_required for p in points] == [expected.D_required]


def test_growth_is_essentially_linear_in_d():
    points = gaussian_dimension_growth(1.0, GROWTH_DIMS, 0.1, 1.0, 0.01)
    D = [p.D_required for p in points]

    assert [p.d for p in points] == GROWTH_DIMS
    assert all(a < b for a, b in zip(D, D[1:]))
    slopes = growth_exponents(points)
    assert len(slopes) == len(GROWTH_DIMS) - 1
    assert all(0.0 < s <= 1.25 for s in slopes), slopes


def test_growth_resource_counts():
    for p in gaussian_dimension_growth(0.5, GROWTH_DIMS, 0.2, 2.0, 0.05):
        assert p.n_qubits == qubit_count_for(p.D_required)
        assert p.sampler_draws == p.D_required // 2 * p.d
        assert p.feature_ops == p.sampler_draws + p.D_required


def test_growth_sorts_and_deduplicates_dims():
    points = gaussian_dimension_growth(1.0, [8, 2, 8], 0.1, 1.0, 0.01)
    assert [p.d for p in points] == [2, 8]


@pytest.mark.parametrize("sigma, R, dims", [(0.0, 1.0, [2]), (1.0, -1.0, [2]), (1.0, 1.0, [0])])
def test_growth_rejects_bad_arguments(sigma, R, dims):
    with pytest.raises(ValueError):
        gaussian_dimension_growth(sigma, dims, 0.1, R, 0.01)


################################ FINITE DIFFERENCES

def test_second_derivative_of_cosine():
    value = central_second_derivative(lambda p: math.cos(p[0]), 0, [0.0], 1e-3)
    assert value == pytest.approx(-1.0, abs=1e-6)


def test_second_derivative_of_gaussian():
    value = central_second_derivative(GaussianKernel(1.0, 1), 0, np.zeros(1), 1e-3)
    assert value == pytest.approx(-1.0, abs=1e-5)


def test_second_derivative_rejects_bad_step():
    with pytest.raises(ValueError):
        central_second_derivative(GaussianKernel(1.0, 1), 0, np.zeros(1), 0.0)


@settings(max_examples=200, deadline=None)
@given(
    delta=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
    h=st.floats(min_value=1e-3, max_value=0.5, allow_nan=False),
)
def test_finite_difference_error_within_bound(delta, h):
    """The unit Gaussian has |k''''| <= 3, so the central difference is within 2*3*h^2/4! of k''."""

    exact = (delta**2 - 1.0) * math.exp(-0.5 * delta**2)
    fd = central_second_derivative(GaussianKernel(1.0, 1), 0, [delta], h)
    assert abs(fd - exact) <= finite_difference_error_bound(3.0, h) + 1e-8


@pytest.mark.parametrize(
    "L, epsilon, P",
    [(12.0, 1.0, 0), (192.0, 1.0, 2), (12.0, 10.0, 0), (3.0, 1e-2, 3), (3.0, 1e-4, 6)],
)
def test_required_precision_bits(L, epsilon, P):
    assert required_precision_bits(L, epsilon) == P


def test_precision_bits_meet_target_for_gaussian():
    """h = 2^-P keeps the curvature error of the Gaussian below epsilon."""

    L = gaussian_fourth_derivative_bound(1.0)
    for epsilon in (1e-2, 1e-4):
        h = 2.0 ** -required_precision_bits(L, epsilon)
        assert finite_difference_error_bound(L, h) <= epsilon
        fd = central_second_derivative(GaussianKernel(1.0, 1), 0, np.zeros(1), h)
        assert abs(fd + 1.0) <= epsilon


################################ SUP-ERROR HARNESS

def test_grid_points():
    points = grid_points(DomainBox.symmetric(1.0, 2), 0.25)
    assert points.shape == (81, 2)
    assert points.min() == -1.0 and points.max() == 1.0


def test_grid_points_includes_upper_endpoint():
    points = grid_points(DomainBox(lower=[0.0], upper=[1.0]), 0.3)
    np.testing.assert_allclose(points[:, 0], [0.0, 0.3, 0.6, 0.9, 1.0])


def test_grid_step_larger_than_box_keeps_both_ends():
    points = grid_points(DomainBox(lower=[0.0], upper=[0.1]), 1.0)
    np.testing.assert_allclose(points[:, 0], [0.0, 0.1])
    with pytest.raises(ValueError):
        grid_points(DomainBox(lower=[0.0], upper=[0.1]), 0.0)


def test_box_geometry():
    box = DomainBox.symmetric(1.0, 2)
    assert box.d == 2
    assert box.diameter == pytest.approx(DIAM_UNIT_SQUARE)
    with pytest.raises(ValueError):
        DomainBox(lower=[1.0], upper=[0.0])


def test_sup_error_guard():
    rff = build_rff_map(GaussianKernel(1.0, 2), 10, seed=0)
    with pytest.raises(GuardError):
        sup_error_estimate(rff, GaussianKernel(1.0, 2), DomainBox.symmetric(1.0, 2), 1e-3)


def test_sup_error_dimension_mismatch():
    rff = build_rff_map(GaussianKernel(1.0, 2), 10, seed=0)
    with pytest.raises(DimensionError):
        sup_error_estimate(rff, GaussianKernel(1.0, 1), DomainBox.symmetric(1.0, 1), 0.5)


def test_sup_error_single_frequency():
    """D = 2: the sup error is max |cos(w D) - exp(-D^2 / 2)| over grid differences."""

    k = GaussianKernel(1.0, 1)
    rff = build_rff_map(k, 2, seed=4)
    box = DomainBox.symmetric(1.0, 1)

    grid = grid_points(box, 0.1)[:, 0]
    deltas = grid[:, None] - grid[None, :]
    w = rff.frequencies[0, 0]
    expected = float(np.max(np.abs(np.cos(w * deltas) - np.exp(-0.5 * deltas**2))))

    assert sup_error_estimate(rff, k, box, 0.1) == pytest.approx(expected, abs=1e-12)


def test_sup_error_small_at_large_dimension():
    """D = 10^4 on [-1, 1] keeps the sup error below 0.05 for at least 90% of seeds."""

    k = GaussianKernel(1.0, 1)
    box = DomainBox.symmetric(1.0, 1)
    errors = [sup_error_estimate(build_rff_map(k, 10_000, seed), k, box, 0.1) for seed in range(50)]
    assert sum(e <= 0.05 for e in errors) >= 45, f"sup errors: {sorted(errors)[-5:]}"
