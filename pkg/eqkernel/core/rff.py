"""
eqkernel.core.rff

Random Fourier features for shift-invariant kernels, the uniform-convergence
bound used to size them, finite-difference curvature estimates, and the grid
harness that measures the sup error of a sampled map.

Feature layout: z(x) = sqrt(2/D) (cos<w_1,x>, sin<w_1,x>, ..., cos<w_{D/2},x>, sin<w_{D/2},x>).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._defaults import (
    BOUND_PREFACTOR_LOG2,
    DEFAULT_EXPONENT_CONSTANT,
    GRID_BLOCK_ROWS,
    MAX_GRID_PAIRS,
)
from ._errors import DimensionError, GuardError, SamplerError
from .pauli_state import L2UnitVector, qubit_count_for
from .spectral import ShiftInvariantKernel, SpectralSample, as_points, cross_gram

logger = logging.getLogger("eqkernel.core.rff")


################################ MAPS

@dataclass(frozen=True, eq=False)
class RffMap:
    """D/2 frequencies sampled i.i.d. from a kernel's spectral density."""

    d: int
    D: int
    frequencies: NDArray[np.float64]
    seed: int
    kernel: str = ""

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=np.float64).reshape(-1, self.d)
        if self.D < 2 or self.D % 2:
            raise ValueError(f"Feature dimension D must be even and >= 2, got {self.D}.")
        if freqs.shape[0] != self.D // 2:
            raise ValueError(f"Expected {self.D // 2} frequencies, got {freqs.shape[0]}.")
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def samples(self) -> list[SpectralSample]:
        return [SpectralSample(w) for w in self.frequencies]


def _check_even(D: int) -> None:
    if D < 2 or D % 2:
        raise ValueError(f"Feature dimension D must be even and >= 2, got {D}.")


def build_rff_map(k: ShiftInvariantKernel, D: int, seed: int) -> RffMap:
    """Draw D/2 frequencies from k's spectral density with a generator seeded by `seed`."""

    _check_even(D)
    if not k.has_sampler:
        raise SamplerError(f"{k.descriptor} has no spectral sampler.")

    rng = np.random.default_rng(seed)
    frequencies = k.sample(rng, D // 2)
    logger.debug("Built RFF map D=%d seed=%d for %s", D, seed, k.descriptor)
    return RffMap(d=k.d, D=D, frequencies=frequencies, seed=seed, kernel=k.descriptor)


def rff_feature_matrix(rff: RffMap, X: ArrayLike) -> NDArray[np.float64]:
    """Feature rows z(x) for each point in X, shape (m, D)."""

    pts = as_points(X, rff.d)
    phase = pts @ rff.frequencies.T
    features = np.empty((pts.shape[0], rff.D), dtype=np.float64)
    features[:, 0::2] = np.cos(phase)
    features[:, 1::2] = np.sin(phase)
    return features * math.sqrt(2.0 / rff.D)


def _single_point(rff: RffMap, x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != rff.d:
        raise DimensionError(f"Input has dimension {x.size}, map expects {rff.d}.")
    return x


def rff_features(rff: RffMap, x: ArrayLike) -> L2UnitVector:
    return L2UnitVector(rff_feature_matrix(rff, _single_point(rff, x)[None, :])[0])


def rff_kernel_estimate(rff: RffMap, x: ArrayLike, x_prime: ArrayLike) -> float:
    """<z(x), z(x')> = (2/D) sum_j cos<w_j, x - x'>."""

    delta = _single_point(rff, x) - _single_point(rff, x_prime)
    return float(np.mean(np.cos(rff.frequencies @ delta)))


def rff_gram(rff: RffMap, X: ArrayLike, Y: ArrayLike | None = None) -> NDArray[np.float64]:
    ZX = rff_feature_matrix(rff, X)
    ZY = ZX if Y is None else rff_feature_matrix(rff, Y)
    return ZX @ ZY.T


################################ BOUNDS

@dataclass(frozen=True, eq=False)
class DomainBox:
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self):
        lower = np.array(self.lower, dtype=np.float64).ravel()
        upper = np.array(self.upper, dtype=np.float64).ravel()
        if lower.shape != upper.shape or lower.size == 0:
            raise DimensionError("Box bounds must be non-empty and of equal length.")
        if np.any(lower >= upper):
            raise ValueError("Box needs lower < upper on every coordinate.")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, R: float, d: int) -> "DomainBox":
        return cls(lower=np.full(d, -R), upper=np.full(d, R))

    @property
    def d(self) -> int:
        return int(self.lower.size)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        return rng.uniform(self.lower, self.upper, size=(size, self.d))


@dataclass(frozen=True)
class BoundReport:
    D_required: int
    epsilon: float
    failure_probability: float
    sigma_p_sq: float
    diameter: float
    d: int
    delta: float = 1.0
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.D_required < 2 or self.D_required % 2:
            raise ValueError(f"D_required must be even and >= 2, got {self.D_required}.")
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValueError(f"failure_probability {self.failure_probability} outside [0, 1].")

    def to_dict(self) -> dict:
        return {
            "D_required": self.D_required,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "failure_probability": self.failure_probability,
            "sigma_p_sq": self.sigma_p_sq,
            "diameter": self.diameter,
            "d": self.d,
            "exponent_constant": self.exponent_constant,
        }


def _log_failure_bound(D: float, d: int, epsilon: float, sigma_p: float, diam: float, c: float) -> float:
    return (
        BOUND_PREFACTOR_LOG2 * math.log(2.0)
        + 2.0 * math.log(sigma_p * diam / epsilon)
        - D * epsilon**2 / (c * (d + 2))
    )


def failure_bound(
    D: int,
    d: int,
    epsilon: float,
    sigma_p: float,
    diam: float,
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT,
) -> float:
    """
    2^8 (sigma_p diam / eps)^2 exp(-D eps^2 / (c (d + 2))), clamped to [0, 1].

    Evaluated in log space.
    """

    for name, value in (("D", D), ("d", d), ("epsilon", epsilon), ("sigma_p", sigma_p), ("diam", diam)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}.")

    log_bound = _log_failure_bound(D, d, epsilon, sigma_p, diam, exponent_constant)
    if log_bound >= 0.0:
        return 1.0
    return math.exp(log_bound)


def required_dimension(
    d: int,
    epsilon: float,
    sigma_p: float,
    diam: float,
    delta: float,
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT,
) -> BoundReport:
    """Smallest even D with failure_bound(D) <= delta, from the closed-form inversion."""

    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}.")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}.")
    if not (sigma_p > 0 and diam > 0):
        raise ValueError("sigma_p and diam must be positive.")

    log_target = math.log(delta)
    log_prefactor = _log_failure_bound(0.0, d, epsilon, sigma_p, diam, exponent_constant)
    scale = exponent_constant * (d + 2) / epsilon**2

    bound = lambda D_: failure_bound(D_, d, epsilon, sigma_p, diam, exponent_constant)  # noqa: E731
    vacuous = delta >= 1.0 or log_prefactor <= log_target

    if vacuous:
        D = 2
    else:
        D_star = scale * (log_prefactor - log_target)
        D = max(2, 2 * math.ceil(D_star / 2.0))
        # the closed form can be off by one step after rounding
        while bound(D) > delta:
            D += 2
        while D > 2 and bound(D - 2) <= delta:
            D -= 2

    notes = [f"exponent constant {exponent_constant:g}(d+2)"]
    if vacuous:
        notes.append("bound is vacuous at this delta; any map qualifies")
        logger.warning("Bound vacuous for eps=%g delta=%g: D=2 suffices.", epsilon, delta)

    return BoundReport(
        D_required=D,
        epsilon=epsilon,
        failure_probability=bound(D),
        sigma_p_sq=sigma_p**2,
        diameter=diam,
        d=d,
        delta=delta,
        exponent_constant=exponent_constant,
        notes=tuple(notes),
    )


def smooth_dimension_bound(
    d: int,
    epsilon: float,
    R: float,
    B: float,
    delta: float,
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT,
) -> BoundReport:
    """D for kernels on [-R, R]^d with |d^2_i k(0)| <= B: sigma_p^2 <= d B and diam <= 2 R sqrt(d)."""

    if not (R > 0 and B > 0):
        raise ValueError("R and B must be positive.")

    report = required_dimension(
        d, epsilon, math.sqrt(d * B), 2.0 * R * math.sqrt(d), delta, exponent_constant
    )
    return replace(report, notes=report.notes + (f"sigma_p^2 <= d*B = {d * B:g}", "diam <= 2R sqrt(d)"))


################################ DIMENSION GROWTH

@dataclass(frozen=True)
class GrowthPoint:
    """Resources an RFF / QRFF approximation of a d-dimensional Gaussian needs at fixed (eps, delta)."""

    d: int
    D_required: int
    n_qubits: int
    sampler_draws: int
    feature_ops: int


def gaussian_dimension_growth(
    sigma: float,
    dims: list[int],
    epsilon: float,
    R: float,
    delta: float,
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT,
) -> list[GrowthPoint]:
    """
    D_required and operation counts for k_d = Gaussian(sigma) on [-R, R]^d, per d.

    sigma_p = sqrt(d) / sigma and diam = 2 R sqrt(d). Sampling costs D/2 normal
    vectors of length d; one feature vector costs D/2 length-d dot products plus
    D trig evaluations.
    """

    if not (sigma > 0 and R > 0):
        raise ValueError("sigma and R must be positive.")

    points = []
    for d in sorted(set(dims)):
        if d < 1:
            raise ValueError(f"Dimensions must be positive, got {d}.")
        report = required_dimension(
            d, epsilon, math.sqrt(d) / sigma, 2.0 * R * math.sqrt(d), delta, exponent_constant=exponent_constant
        )
        D = report.D_required
        points.append(
            GrowthPoint(
                d=d,
                D_required=D,
                n_qubits=qubit_count_for(D),
                sampler_draws=(D // 2) * d,
                feature_ops=(D // 2) * d + D,
            )
        )
    return points


def growth_exponents(points: list[GrowthPoint]) -> list[float]:
    """Local log-log slopes of D_required against d between consecutive points."""

    return [
        math.log(b.D_required / a.D_required) / math.log(b.d / a.d)
        for a, b in zip(points, points[1:])
    ]


################################ FINITE DIFFERENCES

def central_second_derivative(
    k: Callable[[NDArray[np.float64]], ArrayLike], i: int, delta: ArrayLike, h: float
) -> float:
    """(k(D + h e_i) + k(D - h e_i) - 2 k(D)) / h^2."""

    if not h > 0:
        raise ValueError(f"Step h must be positive, got {h}.")

    point = np.array(delta, dtype=np.float64).ravel()
    step = np.zeros_like(point)
    step[i] = h
    value = lambda p: float(np.asarray(k(p)))  # noqa: E731
    return (value(point + step) + value(point - step) - 2.0 * value(point)) / h**2


def required_precision_bits(L: float, epsilon: float) -> int:
    """P = max(0, ceil(log_4(L / 12 eps))), so h = 2^-P keeps the curvature error below eps."""

    if not (L > 0 and epsilon > 0):
        raise ValueError("L and epsilon must be positive.")

    ratio = L / (12.0 * epsilon)
    if ratio <= 1.0:
        return 0
    P = max(0, math.ceil(math.log(ratio, 4)))
    # exact integer check against floating log
    while P > 0 and 4 ** (P - 1) >= ratio:
        P -= 1
    while 4**P < ratio:
        P += 1
    return P


def finite_difference_error_bound(L: float, h: float) -> float:
    """|d^2 k - delta^2 k| <= 2 L h^2 / 4!."""

    return 2.0 * L * h**2 / 24.0


################################ SUP-ERROR HARNESS

def _grid_axes(box: DomainBox, grid_step: float) -> list[NDArray[np.float64]]:
    if not grid_step > 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}.")

    axes = []
    for lo, hi in zip(box.lower, box.upper):
        count = int(math.floor((hi - lo) / grid_step + 1e-9)) + 1
        axis = lo + grid_step * np.arange(count)
        if hi - axis[-1] > 1e-9 * grid_step:
            axis = np.append(axis, hi)
        if axis.size < 2:
            raise ValueError("Grid needs at least 2 points per axis.")
        axes.append(axis)
    return axes


def grid_points(box: DomainBox, grid_step: float) -> NDArray[np.float64]:
    """Cartesian grid over the box with the given step, endpoints included."""

    mesh = np.meshgrid(*_grid_axes(box, grid_step), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sup_error_estimate(
    rff: RffMap,
    k: ShiftInvariantKernel | Callable,
    box: DomainBox,
    grid_step: float,
    features: Callable[[NDArray[np.float64]], NDArray[np.float64]] | None = None,
) -> float:
    """
    max over ordered grid pairs of |<z(x), z(x')> - k(x, x')|.

    `features` overrides the feature rows (used by preprocessed maps).
    """

    if features is None and box.d != rff.d:
        raise DimensionError(f"Box dimension {box.d} differs from map dimension {rff.d}.")

    m = math.prod(axis.size for axis in _grid_axes(box, grid_step))
    if m * m > MAX_GRID_PAIRS:
        raise GuardError(f"Grid has {m * m} pairs, above the {MAX_GRID_PAIRS} guard.")

    points = grid_points(box, grid_step)
    Z = rff_feature_matrix(rff, points) if features is None else features(points)
    worst = 0.0
    for start in range(0, m, GRID_BLOCK_ROWS):
        block = slice(start, min(start + GRID_BLOCK_ROWS, m))
        approx = Z[block] @ Z.T
        exact = cross_gram(k, points[block], points)
        worst = max(worst, float(np.max(np.abs(approx - exact))))
    return worst
