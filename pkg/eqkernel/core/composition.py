"""
eqkernel.core.composition

Composition kernels k_f(x, x') = exp(-||f(x) - f(x')||^2 / 2 sigma^2), their
random-feature approximations with preprocessing (classical and quantum), and
the projected quantum kernel built from single-qubit reduced density matrices.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._defaults import BOX_TOL, DEFAULT_EXPONENT_CONSTANT
from ._errors import BoxViolationError, DimensionError
from .circuit import EmbeddingCircuit, circuit_rdm_features, reduced_density_matrices, statevector_encode
from .pauli_state import L2UnitVector
from .qrff import QrffModel, qrff_kernel_estimate
from .rff import (
    BoundReport,
    RffMap,
    build_rff_map,
    required_dimension,
    rff_feature_matrix,
    rff_features,
    rff_kernel_estimate,
)
from .spectral import GaussianKernel, as_points

logger = logging.getLogger("eqkernel.core.composition")


################################ PREPROCESSORS

@dataclass(frozen=True)
class Preprocessor:
    """f: R^d -> [-B, B]^g1. Every evaluation is checked against the declared box."""

    input_dim: int
    output_dim: int
    bound: float
    evaluator: Callable[[NDArray[np.float64]], ArrayLike] = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("Preprocessor dimensions must be positive.")
        if not self.bound > 0:
            raise ValueError(f"Preprocessor bound must be positive, got {self.bound}.")

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
        if x.size != self.input_dim:
            raise DimensionError(f"{self.name} expects inputs of dimension {self.input_dim}, got {x.size}.")

        y = np.asarray(self.evaluator(x), dtype=np.float64).ravel()
        if y.size != self.output_dim:
            raise DimensionError(f"{self.name} returned {y.size} values, declared {self.output_dim}.")
        overshoot = float(np.max(np.abs(y))) - self.bound
        if overshoot > BOX_TOL:
            raise BoxViolationError(f"{self.name} output leaves [-{self.bound}, {self.bound}] by {overshoot!r}.")
        return y

    def evaluate_many(self, X: ArrayLike) -> NDArray[np.float64]:
        pts = as_points(X, self.input_dim)
        return np.array([self(x) for x in pts], dtype=np.float64).reshape(-1, self.output_dim)

    @classmethod
    def identity(cls, d: int, R: float) -> "Preprocessor":
        return cls(input_dim=d, output_dim=d, bound=R, evaluator=lambda x: x, name="identity")

    @classmethod
    def from_circuit(cls, circuit: EmbeddingCircuit, input_dim: int | None = None) -> "Preprocessor":
        """Flattened single-qubit RDMs of U(x)|0>; 4N outputs bounded by 1."""

        dim = input_dim if input_dim is not None else max(1, circuit.input_dim)
        return cls(
            input_dim=dim,
            output_dim=4 * circuit.n_qubits,
            bound=1.0,
            evaluator=lambda x: circuit_rdm_features(circuit, x),
            name=f"rdm[{circuit.n_qubits}q]",
        )


################################ COMPOSITION KERNEL

@dataclass(frozen=True)
class CompositionKernel:
    f: Preprocessor
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}.")

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.sigma**2)

    @property
    def d(self) -> int:
        return self.f.input_dim

    @property
    def descriptor(self) -> str:
        return f"composition({self.f.name},sigma={self.sigma!r})"

    def __call__(self, x: ArrayLike, x_prime: ArrayLike) -> float:
        return composition_kernel_eval(self, x, x_prime)

    def cross_gram(self, X: ArrayLike, Y: ArrayLike) -> NDArray[np.float64]:
        FX = self.f.evaluate_many(X)
        FY = self.f.evaluate_many(Y)
        sq = np.sum((FX[:, None, :] - FY[None, :, :]) ** 2, axis=-1)
        return np.exp(-self.gamma * sq)


def composition_kernel_eval(k: CompositionKernel, x: ArrayLike, x_prime: ArrayLike) -> float:
    diff = k.f(x) - k.f(x_prime)
    return float(np.exp(-float(diff @ diff) / (2.0 * k.sigma**2)))


################################ RFF / QRFF WITH PREPROCESSING

@dataclass(frozen=True)
class PreprocessedRffModel:
    """RFF map sampled on the preprocessed domain f(X); z_f(x) = z(f(x))."""

    kernel: CompositionKernel
    map: RffMap

    @property
    def D(self) -> int:
        return self.map.D

    def feature_matrix(self, X: ArrayLike) -> NDArray[np.float64]:
        return rff_feature_matrix(self.map, self.kernel.f.evaluate_many(X))


def rff_pp_build(k: CompositionKernel, D: int, seed: int) -> PreprocessedRffModel:
    gaussian = GaussianKernel(sigma=k.sigma, d=k.f.output_dim)
    model = PreprocessedRffModel(kernel=k, map=build_rff_map(gaussian, D, seed))
    logger.debug("Built RFF_pp model D=%d over %d preprocessed coordinates", D, k.f.output_dim)
    return model


def rff_pp_features(model: PreprocessedRffModel, x: ArrayLike) -> L2UnitVector:
    return rff_features(model.map, model.kernel.f(x))


def rff_pp_estimate(model: PreprocessedRffModel, x: ArrayLike, x_prime: ArrayLike) -> float:
    f = model.kernel.f
    return rff_kernel_estimate(model.map, f(x), f(x_prime))


def qrff_pp_estimate(
    model: PreprocessedRffModel,
    x: ArrayLike,
    x_prime: ArrayLike,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """g(f(x)) g(f(x')) (2^n Tr{rho_f(x) rho_f(x')} - 1)."""

    f = model.kernel.f
    return qrff_kernel_estimate(QrffModel.from_map(model.map), f(x), f(x_prime), shots=shots, rng=rng)


################################ PROJECTED QUANTUM KERNEL

def projected_kernel_eval(circuit: EmbeddingCircuit, gamma: float, x: ArrayLike, x_prime: ArrayLike) -> float:
    """exp(-gamma sum_k ||rho_k(x) - rho_k(x')||_F^2) by direct simulation."""

    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}.")

    N = circuit.n_qubits
    rs = reduced_density_matrices(statevector_encode(circuit, x), N)
    rs_prime = reduced_density_matrices(statevector_encode(circuit, x_prime), N)
    distance = sum(float(np.linalg.norm(a - b, "fro") ** 2) for a, b in zip(rs.rdms, rs_prime.rdms))
    return math.exp(-gamma * distance)


def projected_composition_kernel(circuit: EmbeddingCircuit, gamma: float, input_dim: int | None = None) -> CompositionKernel:
    """The projected kernel as a composition kernel with sigma^2 = 1 / (2 gamma)."""

    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}.")
    return CompositionKernel(f=Preprocessor.from_circuit(circuit, input_dim), sigma=math.sqrt(1.0 / (2.0 * gamma)))


def projected_kernel_bound(
    d: int,
    epsilon: float,
    B: float,
    g1: int,
    sigma: float,
    delta: float,
    exponent_constant: float = DEFAULT_EXPONENT_CONSTANT,
) -> BoundReport:
    """
    Feature dimension for RFF_pp on a composition kernel.

    The RFF domain is f(X), so the bound runs in g1 dimensions with
    sigma_p^2 = g1 / sigma^2 and diam <= 2 B sqrt(g1).
    """

    for name, value in (("d", d), ("B", B), ("g1", g1), ("sigma", sigma)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}.")

    report = required_dimension(
        g1, epsilon, math.sqrt(g1) / sigma, 2.0 * B * math.sqrt(g1), delta, exponent_constant
    )
    notes = report.notes + (f"input dimension d={d}", f"preprocessed dimension g1={g1}, bound B={B:g}")
    return replace(report, notes=notes)
