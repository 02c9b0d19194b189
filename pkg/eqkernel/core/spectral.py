"""
eqkernel.core.spectral

Shift-invariant kernel specifications and their spectral measures.

- GaussianKernel / TrigPolynomialKernel / CustomKernel: evaluators k(Delta) with samplers
- spectral_variance: sigma_p^2 = -tr H(k)(0)
- TrigPolynomial PSD test (even + non-negative cosine coefficients)
- Gram matrix oracles used to cross-check PSD verdicts
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, linalg

from ._defaults import (
    FD_AGREEMENT_TOL,
    FD_STEPS,
    GRAM_EIG_TOL,
    KERNEL_TOL,
    PSD_COEF_TOL,
    SYMMETRY_TOL,
)
from ._errors import DimensionError, SamplerError, SmoothnessError, SymmetryError

logger = logging.getLogger("eqkernel.core.spectral")

PairEvaluator = Callable[[NDArray, NDArray], float]


def as_deltas(delta: ArrayLike, d: int) -> NDArray[np.float64]:
    """Coerce to shape (..., d). For d == 1 a trailing axis is added to scalars and 1-d batches."""

    arr = np.asarray(delta, dtype=np.float64)
    if d == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.ndim == 0 or arr.shape[-1] != d:
        raise DimensionError(f"Expected trailing dimension {d}, got shape {arr.shape}.")
    return arr


def as_points(points: ArrayLike, d: int | None = None) -> NDArray[np.float64]:
    """Coerce a point list to shape (m, d)."""

    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None] if d in (None, 1) else arr[None, :]
    if arr.ndim != 2:
        raise DimensionError(f"Points must be a 2-d array, got shape {arr.shape}.")
    if d is not None and arr.shape[1] != d:
        raise DimensionError(f"Points have dimension {arr.shape[1]}, expected {d}.")
    return arr


@dataclass(frozen=True, eq=False)
class SpectralSample:
    omega: NDArray[np.float64]

    def __post_init__(self):
        omega = np.array(self.omega, dtype=np.float64).ravel()
        if not np.all(np.isfinite(omega)):
            raise ValueError("Spectral sample has non-finite entries.")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def d(self) -> int:
        return int(self.omega.size)


################################ KERNELS

class ShiftInvariantKernel(ABC):
    """k(x, x') = k(x - x') with k(0) = 1."""

    d: int

    @abstractmethod
    def __call__(self, delta: ArrayLike) -> NDArray[np.float64]:
        """Evaluate k on an array of differences shaped (..., d)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        """Draw `size` frequencies from the spectral density, shape (size, d)."""

    @abstractmethod
    def spectral_variance(self) -> float:
        """E_p ||omega||^2 = -sum_i d^2 k / d Delta_i^2 at 0."""

    @property
    def has_sampler(self) -> bool:
        return True

    @property
    @abstractmethod
    def descriptor(self) -> str:
        pass

    def pair(self, x: ArrayLike, x_prime: ArrayLike) -> float:
        x = as_deltas(x, self.d)
        x_prime = as_deltas(x_prime, self.d)
        return float(self(x - x_prime))

    def check(self, rng: np.random.Generator, n_points: int = 100, scale: float = 1.0) -> None:
        """Raise if k(0) != 1 or k(Delta) != k(-Delta) on random differences."""

        origin = float(self(np.zeros(self.d)))
        if abs(origin - 1.0) > KERNEL_TOL:
            raise ValueError(f"{self.descriptor}: k(0) = {origin!r}, expected 1.")

        deltas = rng.uniform(-scale, scale, size=(n_points, self.d))
        gap = float(np.max(np.abs(self(deltas) - self(-deltas))))
        if gap > KERNEL_TOL:
            raise ValueError(f"{self.descriptor}: not even, max |k(D) - k(-D)| = {gap!r}.")


@dataclass(frozen=True)
class GaussianKernel(ShiftInvariantKernel):
    sigma: float
    d: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}.")
        if self.d < 1:
            raise ValueError(f"Dimension must be positive, got {self.d}.")

    def __call__(self, delta: ArrayLike) -> NDArray[np.float64]:
        delta = as_deltas(delta, self.d)
        return np.exp(-np.sum(delta**2, axis=-1) / (2.0 * self.sigma**2))

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        return rng.normal(0.0, 1.0 / self.sigma, size=(size, self.d))

    def spectral_variance(self) -> float:
        return self.d / self.sigma**2

    @property
    def descriptor(self) -> str:
        return f"gaussian(sigma={self.sigma!r},d={self.d})"


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """
    f(Delta) = sum_w a_w cos<w, Delta> + b_w sin<w, Delta> over integer frequencies w.

    `frequencies` has shape (m, d); frequency vectors are pairwise distinct.
    """

    d: int
    frequencies: NDArray[np.int64]
    cos_coeffs: NDArray[np.float64]
    sin_coeffs: NDArray[np.float64]

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=np.int64).reshape(-1, self.d)
        a = np.array(self.cos_coeffs, dtype=np.float64).ravel()
        b = np.array(self.sin_coeffs, dtype=np.float64).ravel()
        if not (freqs.shape[0] == a.size == b.size):
            raise ValueError("Frequency and coefficient lists must have equal length.")
        if freqs.shape[0] != len({tuple(w) for w in freqs}):
            raise ValueError("Trigonometric polynomial frequencies must be pairwise distinct.")
        for arr in (freqs, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @classmethod
    def from_terms(cls, d: int, terms: Sequence[tuple[Sequence[int] | int, float, float]]) -> "TrigPolynomial":
        freqs = [np.atleast_1d(np.asarray(w, dtype=np.int64)) for w, _, _ in terms]
        return cls(
            d=d,
            frequencies=np.array(freqs, dtype=np.int64).reshape(-1, d),
            cos_coeffs=[a for _, a, _ in terms],
            sin_coeffs=[b for _, _, b in terms],
        )

    @property
    def terms(self) -> list[tuple[tuple[int, ...], float, float]]:
        return [
            (tuple(int(v) for v in w), float(a), float(b))
            for w, a, b in zip(self.frequencies, self.cos_coeffs, self.sin_coeffs)
        ]

    def __call__(self, delta: ArrayLike) -> NDArray[np.float64]:
        delta = as_deltas(delta, self.d)
        phase = delta @ self.frequencies.T.astype(np.float64)
        return np.cos(phase) @ self.cos_coeffs + np.sin(phase) @ self.sin_coeffs

    def canonical(self) -> "TrigPolynomial":
        """
        Merge w with -w so each frequency pair appears once, with the first
        nonzero coordinate positive. cos is even (a adds), sin is odd (b subtracts);
        the sine coefficient at w = 0 has no effect and is dropped.
        """

        merged: dict[tuple[int, ...], list[float]] = {}
        for w, a, b in self.terms:
            nonzero = [v for v in w if v != 0]
            if nonzero and nonzero[0] < 0:
                w, b = tuple(-v for v in w), -b
            if not nonzero:
                b = 0.0
            entry = merged.setdefault(w, [0.0, 0.0])
            entry[0] += a
            entry[1] += b
        return TrigPolynomial.from_terms(self.d, [(w, a, b) for w, (a, b) in sorted(merged.items())])

    def is_even(self) -> bool:
        return bool(np.all(np.abs(self.canonical().sin_coeffs) <= PSD_COEF_TOL))

    def is_psd(self) -> bool:
        return self.is_even() and bool(np.all(self.canonical().cos_coeffs >= -PSD_COEF_TOL))

    def spectral_variance(self) -> float:
        """Term-by-term -sum_i d^2/dDelta_i^2 at 0: sum_w a_w ||w||^2."""
        return float(self.cos_coeffs @ np.sum(self.frequencies.astype(np.float64) ** 2, axis=1))


def trig_poly_is_even(p: TrigPolynomial) -> bool:
    return p.is_even()


def trig_poly_is_psd(p: TrigPolynomial) -> bool:
    return p.is_psd()


@dataclass(frozen=True)
class TrigPolynomialKernel(ShiftInvariantKernel):
    """Kernel view of a trigonometric polynomial normalized to f(0) = 1."""

    poly: TrigPolynomial
    d: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "d", self.poly.d)
        if not self.poly.is_even():
            raise ValueError("Trig-polynomial kernel needs an even polynomial (all sine coefficients zero).")
        total = float(np.sum(self.poly.cos_coeffs))
        if abs(total - 1.0) > KERNEL_TOL:
            raise ValueError(f"Trig-polynomial kernel needs sum of cosine coefficients = 1, got {total!r}.")

    def __call__(self, delta: ArrayLike) -> NDArray[np.float64]:
        return self.poly(delta)

    @property
    def has_sampler(self) -> bool:
        return self.poly.is_psd()

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        # the spectral measure is discrete: mass a_w split evenly between +w and -w
        if not self.poly.is_psd():
            raise SamplerError(f"{self.descriptor} is not PSD and has no spectral measure.")
        canon = self.poly.canonical()
        probs = np.clip(canon.cos_coeffs, 0.0, None)
        probs = probs / probs.sum()
        picks = rng.choice(probs.size, size=size, p=probs)
        signs = rng.choice((-1.0, 1.0), size=size)
        return canon.frequencies[picks].astype(np.float64) * signs[:, None]

    def spectral_variance(self) -> float:
        return self.poly.spectral_variance()

    @property
    def descriptor(self) -> str:
        body = "+".join(f"{a:g}cos{list(w)}" + (f"+{b:g}sin{list(w)}" if b else "") for w, a, b in self.poly.terms)
        return f"trig({body})"


@dataclass(frozen=True)
class CustomKernel(ShiftInvariantKernel):
    """User-supplied evaluator Delta -> k(Delta) and optional sampler rng -> omega."""

    d: int
    evaluator: Callable[[NDArray[np.float64]], float]
    sampler: Callable[[np.random.Generator], ArrayLike] | None = None
    name: str = "custom"

    def __call__(self, delta: ArrayLike) -> NDArray[np.float64]:
        delta = as_deltas(delta, self.d)
        flat = delta.reshape(-1, self.d)
        values = np.fromiter((self.evaluator(row) for row in flat), dtype=np.float64, count=flat.shape[0])
        return values.reshape(delta.shape[:-1])

    @property
    def has_sampler(self) -> bool:
        return self.sampler is not None

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        if self.sampler is None:
            raise SamplerError(f"{self.descriptor} has no spectral sampler.")
        return np.array([np.asarray(self.sampler(rng), dtype=np.float64).reshape(self.d) for _ in range(size)])

    def spectral_variance(self) -> float:
        from .rff import central_second_derivative

        origin = np.zeros(self.d)
        estimates = []
        for h in FD_STEPS:
            curvature = sum(central_second_derivative(self, i, origin, h) for i in range(self.d))
            estimates.append(-curvature)

        coarse, fine = estimates[-2], estimates[-1]
        if not np.isfinite(fine) or abs(fine - coarse) > FD_AGREEMENT_TOL * max(1.0, abs(fine)):
            raise SmoothnessError(
                f"{self.descriptor}: finite differences at the origin diverge ({coarse!r} -> {fine!r})."
            )
        return float(fine)

    @property
    def descriptor(self) -> str:
        return f"{self.name}(d={self.d})"


################################ SPECTRAL SAMPLING / VARIANCE

def gaussian_spectral_sample(sigma: float, d: int, rng: np.random.Generator) -> SpectralSample:
    """omega ~ N(0, I / sigma^2), the spectral density of exp(-||Delta||^2 / 2 sigma^2)."""

    return SpectralSample(GaussianKernel(sigma, d).sample(rng, 1)[0])


def spectral_variance(k: ShiftInvariantKernel) -> float:
    return k.spectral_variance()


def gaussian_second_moment_quadrature(sigma: float, d: int) -> float:
    """d * int x^2 e^{-sigma^2 x^2 / 2} dx / int e^{-sigma^2 x^2 / 2} dx by numerical quadrature."""

    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}.")

    weight = lambda x: math.exp(-0.5 * (sigma * x) ** 2)  # noqa: E731
    second, _ = integrate.quad(lambda x: x * x * weight(x), -np.inf, np.inf, epsabs=0.0, epsrel=1e-12)
    zeroth, _ = integrate.quad(weight, -np.inf, np.inf, epsabs=0.0, epsrel=1e-12)
    return d * second / zeroth


def gaussian_fourth_derivative_bound(sigma: float) -> float:
    """max |d^4/dx^4 exp(-x^2 / 2 sigma^2)| = 3 / sigma^4, attained at x = 0."""

    return 3.0 / sigma**4


@dataclass(frozen=True)
class VarianceReport:
    sigma: float
    d: int
    closed_form: float
    quadrature: float
    d_over_sigma: float

    @property
    def closed_form_agrees(self) -> bool:
        return math.isclose(self.closed_form, self.quadrature, rel_tol=1e-6)

    @property
    def d_over_sigma_agrees(self) -> bool:
        return math.isclose(self.d_over_sigma, self.quadrature, rel_tol=1e-6)

    @property
    def note(self) -> str:
        if self.d_over_sigma_agrees:
            return "d/sigma and d/sigma^2 coincide at sigma=1; quadrature agrees with both."
        return (
            f"d/sigma = {self.d_over_sigma!r} disagrees with the quadrature value {self.quadrature!r}; "
            f"the second moment of the Gaussian spectral density is d/sigma^2 = {self.closed_form!r}."
        )


def gaussian_variance_report(sigma: float, d: int) -> VarianceReport:
    report = VarianceReport(
        sigma=sigma,
        d=d,
        closed_form=GaussianKernel(sigma, d).spectral_variance(),
        quadrature=gaussian_second_moment_quadrature(sigma, d),
        d_over_sigma=d / sigma,
    )
    if not report.d_over_sigma_agrees:
        logger.warning(report.note)
    return report


################################ GRAM MATRICES

def cross_gram(k: ShiftInvariantKernel | PairEvaluator, X: ArrayLike, Y: ArrayLike) -> NDArray[np.float64]:
    """[k(x_i, y_j)] for all pairs, vectorized for shift-invariant kernels."""

    if isinstance(k, ShiftInvariantKernel):
        X, Y = as_points(X, k.d), as_points(Y, k.d)
        return np.asarray(k(X[:, None, :] - Y[None, :, :]), dtype=np.float64)
    if hasattr(k, "cross_gram"):
        return k.cross_gram(X, Y)

    X, Y = as_points(X), as_points(Y)
    return np.array([[k(x, y) for y in Y] for x in X], dtype=np.float64)


def gram_matrix(k: ShiftInvariantKernel | PairEvaluator, points: ArrayLike) -> NDArray[np.float64]:
    """K_ij = k(x_i, x_j) evaluated for i <= j and mirrored, so K is symmetric."""

    if isinstance(k, ShiftInvariantKernel) or hasattr(k, "cross_gram"):
        full = cross_gram(k, points, points)
        upper = np.triu(full)
        return upper + np.triu(full, 1).T

    pts = as_points(points)
    m = pts.shape[0]
    if m < 1:
        raise ValueError("Gram matrix needs at least one point.")
    gram = np.empty((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = k(pts[i], pts[j])
    return gram


def check_symmetric(G: ArrayLike, tol: float = SYMMETRY_TOL) -> NDArray[np.float64]:
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise SymmetryError(f"Expected a square matrix, got shape {G.shape}.")
    gap = float(np.max(np.abs(G - G.T))) if G.size else 0.0
    if gap > tol:
        raise SymmetryError(f"Matrix is not symmetric: max |G - G^T| = {gap!r}.")
    return G


def gram_min_eigenvalue(G: ArrayLike) -> float:
    G = check_symmetric(G)
    return float(linalg.eigh(G, eigvals_only=True, subset_by_index=[0, 0])[0])


@dataclass(frozen=True)
class GramVerdict:
    symmetric: bool
    asymmetry: float
    min_eigenvalue: float

    @property
    def is_psd(self) -> bool:
        return self.symmetric and self.min_eigenvalue >= -GRAM_EIG_TOL


def gram_psd_verdict(k: ShiftInvariantKernel | PairEvaluator, points: ArrayLike) -> GramVerdict:
    """
    Brute-force kernel oracle: the full Gram must be symmetric, and the Gram built
    from its upper triangle (as gram_matrix does) must have min eigenvalue >= -GRAM_EIG_TOL.
    """

    full = cross_gram(k, points, points)
    asymmetry = float(np.max(np.abs(full - full.T)))
    return GramVerdict(
        symmetric=asymmetry <= SYMMETRY_TOL,
        asymmetry=asymmetry,
        min_eigenvalue=gram_min_eigenvalue(np.triu(full) + np.triu(full, 1).T),
    )


def random_trig_polynomial(
    rng: np.random.Generator,
    d: int = 1,
    max_frequency: int = 8,
    max_terms: int = 4,
    even_probability: float = 0.5,
    nonnegative_probability: float = 0.5,
) -> TrigPolynomial:
    """Random polynomial over frequencies in {0..max_frequency}^d with coefficient magnitudes in [0.05, 1]."""

    grid = np.array(np.meshgrid(*[np.arange(max_frequency + 1)] * d, indexing="ij")).reshape(d, -1).T
    n_terms = int(rng.integers(1, min(max_terms, grid.shape[0]) + 1))
    freqs = grid[rng.choice(grid.shape[0], size=n_terms, replace=False)]

    a = rng.uniform(0.05, 1.0, size=n_terms) * rng.choice((-1.0, 1.0), size=n_terms)
    if rng.random() < nonnegative_probability:
        a = np.abs(a)
    b = np.zeros(n_terms)
    if rng.random() >= even_probability:
        b = rng.uniform(0.05, 1.0, size=n_terms) * rng.choice((-1.0, 1.0), size=n_terms)
    b[np.all(freqs == 0, axis=1)] = 0.0

    return TrigPolynomial(d=d, frequencies=freqs, cos_coeffs=a, sin_coeffs=b)
