"""
eqkernel.core.pauli_state

Classical-to-quantum embedding (C2QE) of 1-norm unit vectors as Pauli mixture
states, the dense density-matrix backend used to validate it, and the
Hilbert-Schmidt inner-product identities built on top of it.

A mixture state on n qubits is stored by its Pauli coefficients only:

    rho_r = (I + sum_i r_i P_i) / 2^n

Pauli words are indexed by little-endian base-4 digits over qubits with the
digit map {0: I, 1: X, 2: Y, 3: Z}. Index 0 (all identity) is never stored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._defaults import (
    DENSE_CHECK_QUBITS,
    DENSE_MAX_QUBITS,
    DENSITY_EIG_TOL,
    HERMITIAN_TOL,
    NORM_INPUT_TOL,
    NORM_INTERNAL_TOL,
    TRACE_TOL,
)
from ._errors import DimensionError, GuardError, NormalizationError

logger = logging.getLogger("eqkernel.core.pauli_state")

PAULI_LABELS = "IXYZ"


def _frozen(values: ArrayLike, dtype=np.float64) -> NDArray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


################################ UNIT VECTORS

@dataclass(frozen=True, eq=False)
class L1UnitVector:
    """Real vector with unit 1-norm. Entries are renormalized after validation."""

    entries: NDArray[np.float64]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64).ravel()
        if arr.size == 0:
            raise NormalizationError("L1UnitVector needs at least one entry.")
        if not np.all(np.isfinite(arr)):
            raise NormalizationError("L1UnitVector entries must be finite.")
        norm = float(np.abs(arr).sum())
        if abs(norm - 1.0) > NORM_INPUT_TOL:
            raise NormalizationError(f"Expected unit 1-norm, got {norm!r}.")
        object.__setattr__(self, "entries", _frozen(arr / norm))

    @classmethod
    def normalize(cls, values: ArrayLike) -> "L1UnitVector":
        arr = np.asarray(values, dtype=np.float64).ravel()
        norm = float(np.abs(arr).sum())
        if norm == 0.0 or not np.isfinite(norm):
            raise NormalizationError("Cannot 1-normalize a zero or non-finite vector.")
        return cls(arr / norm)

    @property
    def d(self) -> int:
        return int(self.entries.size)

    def __len__(self) -> int:
        return self.d


@dataclass(frozen=True, eq=False)
class L2UnitVector:
    """Real vector with unit Euclidean norm."""

    entries: NDArray[np.float64]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64).ravel()
        if arr.size == 0:
            raise NormalizationError("L2UnitVector needs at least one entry.")
        if not np.all(np.isfinite(arr)):
            raise NormalizationError("L2UnitVector entries must be finite.")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_INPUT_TOL:
            raise NormalizationError(f"Expected unit 2-norm, got {norm!r}.")
        object.__setattr__(self, "entries", _frozen(arr / norm))

    @classmethod
    def normalize(cls, values: ArrayLike) -> "L2UnitVector":
        arr = np.asarray(values, dtype=np.float64).ravel()
        norm = float(np.linalg.norm(arr))
        if norm == 0.0 or not np.isfinite(norm):
            raise NormalizationError("Cannot 2-normalize a zero or non-finite vector.")
        return cls(arr / norm)

    @property
    def d(self) -> int:
        return int(self.entries.size)

    def __len__(self) -> int:
        return self.d


################################ PAULI WORDS

@dataclass(frozen=True)
class PauliWordIndex:
    index: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Qubit count must be positive, got {self.n}.")
        if not 1 <= self.index <= 4**self.n - 1:
            raise ValueError(f"Pauli index {self.index} outside [1, {4**self.n - 1}] for n={self.n}.")

    @property
    def digits(self) -> tuple[int, ...]:
        """Base-4 digit per qubit, qubit 0 first."""
        return tuple((self.index // 4**q) % 4 for q in range(self.n))

    @property
    def label(self) -> str:
        return "".join(PAULI_LABELS[digit] for digit in self.digits)

    def __str__(self) -> str:
        return self.label


def qubit_count_for(d: int) -> int:
    """Smallest n with 4^n - 1 >= d, i.e. ceil(log_4(d + 1))."""

    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}.")
    n = 1
    while 4**n - 1 < d:
        n += 1
    return n


def pauli_matrix(word: PauliWordIndex) -> NDArray[np.complex128]:
    """
    Dense 2^n x 2^n matrix of a Pauli word, qubit 0 as the most significant bit.

    Uses P = i^{#Y} (X^x)(Z^z), so column b has a single entry at row b XOR x
    with value i^{#Y} (-1)^{|b & z|}.
    """

    n = word.n
    x_mask = z_mask = n_y = 0
    for q, digit in enumerate(word.digits):
        bit = 1 << (n - 1 - q)
        if digit in (1, 2):
            x_mask |= bit
        if digit in (2, 3):
            z_mask |= bit
        if digit == 2:
            n_y += 1

    dim = 1 << n
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ x_mask
    parity = np.bitwise_count(cols & z_mask) & 1
    values = (1j**n_y) * (1 - 2 * parity.astype(np.float64))

    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[rows, cols] = values
    return mat


################################ STATES

@dataclass(frozen=True, eq=False)
class PauliMixtureState:
    """
    Sparse Pauli-coefficient representation of rho_r.

    `indices` is sorted and strictly increasing; zero coefficients are not stored.
    """

    n: int
    indices: NDArray[np.int64]
    values: NDArray[np.float64]

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if indices.shape != values.shape:
            raise ValueError("indices and values must have equal length.")
        if self.n < 1:
            raise ValueError(f"Qubit count must be positive, got {self.n}.")

        order = np.argsort(indices, kind="stable")
        indices, values = indices[order], values[order]
        if indices.size and (indices[0] < 1 or indices[-1] > 4**self.n - 1):
            raise ValueError(f"Pauli indices must lie in [1, {4**self.n - 1}].")
        if np.any(np.diff(indices) == 0):
            raise ValueError("Duplicate Pauli indices.")

        keep = values != 0.0
        indices, values = indices[keep], values[keep]

        total = float(np.abs(values).sum())
        if abs(total - 1.0) > NORM_INTERNAL_TOL:
            raise NormalizationError(f"Pauli coefficients must have unit 1-norm, got {total!r}.")

        object.__setattr__(self, "indices", _frozen(indices, np.int64))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def coeffs(self) -> dict[PauliWordIndex, float]:
        return {PauliWordIndex(int(i), self.n): float(v) for i, v in zip(self.indices, self.values)}

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def support_size(self) -> int:
        return int(self.indices.size)

    def coefficient(self, index: int) -> float:
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return float(self.values[pos])
        return 0.0


@dataclass(frozen=True, eq=False)
class DenseDensityMatrix:
    """Explicit 2^n x 2^n density matrix. Construction checks Hermiticity and trace."""

    entries: NDArray[np.complex128]

    def __post_init__(self):
        mat = np.array(self.entries, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"Density matrix must be square, got shape {mat.shape}.")
        dim = mat.shape[0]
        if dim & (dim - 1):
            raise DimensionError(f"Density matrix dimension must be a power of two, got {dim}.")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise ValueError("Density matrix is not Hermitian.")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"Density matrix trace {trace} differs from 1.")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def validate(self) -> "DenseDensityMatrix":
        """Raise if the matrix is not PSD within tolerance."""

        if self.min_eigenvalue < -DENSITY_EIG_TOL:
            raise ValueError(f"Density matrix not PSD: min eigenvalue {self.min_eigenvalue!r}.")
        return self


################################ ENCODING

def c2qe_encode(r: L1UnitVector | ArrayLike) -> PauliMixtureState:
    """Encode r as rho_r on ceil(log_4(d+1)) qubits; entry i becomes the P_{i+1} coefficient."""

    if not isinstance(r, L1UnitVector):
        r = L1UnitVector(r)

    n = qubit_count_for(r.d)
    nonzero = np.flatnonzero(r.entries)
    return PauliMixtureState(n=n, indices=nonzero + 1, values=r.entries[nonzero])


def sample_pure_components(
    r: L1UnitVector, size: int, rng: np.random.Generator
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Draw `size` Pauli indices with probability |r_i|, returned with their signs."""

    if not isinstance(r, L1UnitVector):
        r = L1UnitVector(r)

    probs = np.abs(r.entries)
    probs = probs / probs.sum()
    positions = rng.choice(r.d, size=size, p=probs)
    signs = np.where(r.entries[positions] < 0, -1, 1).astype(np.int64)
    return positions.astype(np.int64) + 1, signs


def sample_pure_component(r: L1UnitVector, rng: np.random.Generator) -> tuple[PauliWordIndex, int]:
    if not isinstance(r, L1UnitVector):
        r = L1UnitVector(r)
    indices, signs = sample_pure_components(r, 1, rng)
    n = qubit_count_for(r.d)
    return PauliWordIndex(int(indices[0]), n), int(signs[0])


def mixture_to_dense(rho: PauliMixtureState) -> DenseDensityMatrix:
    """(I + sum_i r_i P_i) / 2^n as an explicit matrix."""

    if rho.n > DENSE_MAX_QUBITS:
        raise GuardError(f"Dense backend is capped at {DENSE_MAX_QUBITS} qubits, got n={rho.n}.")

    dim = rho.dim
    mat = np.eye(dim, dtype=np.complex128)
    for index, value in zip(rho.indices, rho.values):
        mat += value * pauli_matrix(PauliWordIndex(int(index), rho.n))
    mat /= dim

    dense = DenseDensityMatrix(mat)
    if rho.n <= DENSE_CHECK_QUBITS:
        dense.validate()
    return dense


################################ INNER PRODUCTS

def _check_pair(rho: PauliMixtureState, rho_prime: PauliMixtureState) -> None:
    if rho.n != rho_prime.n:
        raise DimensionError(f"Qubit counts differ: {rho.n} vs {rho_prime.n}.")


def _coefficient_overlap(rho: PauliMixtureState, rho_prime: PauliMixtureState) -> float:
    _, i, j = np.intersect1d(rho.indices, rho_prime.indices, assume_unique=True, return_indices=True)
    return float(np.dot(rho.values[i], rho_prime.values[j]))


def hs_inner(rho: PauliMixtureState, rho_prime: PauliMixtureState) -> float:
    """Tr{rho rho'} = (1 + <r, r'>) / 2^n, evaluated on shared Pauli support."""

    _check_pair(rho, rho_prime)
    return (1.0 + _coefficient_overlap(rho, rho_prime)) / rho.dim


def hs_inner_dense(rho: PauliMixtureState, rho_prime: PauliMixtureState) -> float:
    _check_pair(rho, rho_prime)
    a = mixture_to_dense(rho).entries
    b = mixture_to_dense(rho_prime).entries
    return float(np.einsum("ij,ji->", a, b).real)


def hs_inner_sampled(
    rho: PauliMixtureState, rho_prime: PauliMixtureState, shots: int, rng: np.random.Generator
) -> float:
    """
    SWAP-test estimate of Tr{rho rho'}.

    Each shot succeeds with probability (1 + Tr{rho rho'}) / 2; the estimate is
    2 * (success fraction) - 1.
    """

    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}.")

    p = min(1.0, max(0.0, 0.5 * (1.0 + hs_inner(rho, rho_prime))))
    successes = rng.binomial(shots, p)
    return 2.0 * successes / shots - 1.0


def euclid_from_states(rho_r: PauliMixtureState, rho_r_prime: PauliMixtureState) -> float:
    """<r, r'> recovered as 2^n Tr{rho_r rho_r'} - 1."""

    return rho_r.dim * hs_inner(rho_r, rho_r_prime) - 1.0


class RenormalizedInner(NamedTuple):
    value: float
    l1_factor: float
    l1_factor_prime: float


def renormalized_inner(r: L2UnitVector | ArrayLike, r_prime: L2UnitVector | ArrayLike) -> RenormalizedInner:
    """
    Inner product of two 2-norm unit vectors through their 1-norm renormalized
    encodings: ||r||_1 ||r'||_1 (2^n Tr{rho rho'} - 1).
    """

    if not isinstance(r, L2UnitVector):
        r = L2UnitVector(r)
    if not isinstance(r_prime, L2UnitVector):
        r_prime = L2UnitVector(r_prime)
    if r.d != r_prime.d:
        raise DimensionError(f"Vector lengths differ: {r.d} vs {r_prime.d}.")

    l1 = float(np.abs(r.entries).sum())
    l1_prime = float(np.abs(r_prime.entries).sum())
    upper = np.sqrt(r.d) + NORM_INPUT_TOL
    for factor in (l1, l1_prime):
        if not 1.0 - NORM_INPUT_TOL <= factor <= upper:
            raise NormalizationError(f"1-norm factor {factor!r} outside [1, sqrt({r.d})].")

    rho = c2qe_encode(L1UnitVector(r.entries / l1))
    rho_prime = c2qe_encode(L1UnitVector(r_prime.entries / l1_prime))
    value = l1 * l1_prime * euclid_from_states(rho, rho_prime)
    return RenormalizedInner(value=value, l1_factor=l1, l1_factor_prime=l1_prime)
