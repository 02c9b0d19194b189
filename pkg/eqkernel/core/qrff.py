"""
eqkernel.core.qrff

Quantum random Fourier features: RFF vectors are 1-norm renormalized, encoded
as Pauli mixture states, and the kernel is read back from their trace overlap

    k(x - x') ~ g(x) g(x') (2^n Tr{rho(x) rho(x')} - 1),   g(x) = ||z(x)||_1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from ._defaults import QRFF_MAX_QUBITS
from ._errors import GuardError
from .pauli_state import (
    L1UnitVector,
    PauliMixtureState,
    c2qe_encode,
    hs_inner,
    hs_inner_sampled,
    qubit_count_for,
)
from .rff import RffMap, build_rff_map, rff_features
from .spectral import ShiftInvariantKernel

logger = logging.getLogger("eqkernel.core.qrff")


@dataclass(frozen=True)
class QrffModel:
    map: RffMap
    n: int

    def __post_init__(self):
        expected = qubit_count_for(self.map.D)
        if self.n != expected:
            raise ValueError(f"D={self.map.D} needs n={expected} qubits, got {self.n}.")
        if self.n > QRFF_MAX_QUBITS:
            raise GuardError(f"QRFF models are capped at {QRFF_MAX_QUBITS} qubits, D={self.map.D} needs {self.n}.")

    @classmethod
    def from_map(cls, rff: RffMap) -> "QrffModel":
        return cls(map=rff, n=qubit_count_for(rff.D))

    @property
    def D(self) -> int:
        return self.map.D


def build_qrff_model(k: ShiftInvariantKernel, D: int, seed: int) -> QrffModel:
    return QrffModel.from_map(build_rff_map(k, D, seed))


class QrffEstimate(NamedTuple):
    value: float
    g: float
    g_prime: float
    n_qubits: int


def g_factor(model: QrffModel, x: ArrayLike) -> float:
    """||z(x)||_1, always in [1, sqrt(D)]."""

    return float(np.abs(rff_features(model.map, x).entries).sum())


def _encode(model: QrffModel, x: ArrayLike) -> tuple[PauliMixtureState, float]:
    z = rff_features(model.map, x).entries
    g = float(np.abs(z).sum())
    return c2qe_encode(L1UnitVector(z / g)), g


def qrff_encode(model: QrffModel, x: ArrayLike) -> PauliMixtureState:
    return _encode(model, x)[0]


def qrff_estimate_with_factors(
    model: QrffModel,
    x: ArrayLike,
    x_prime: ArrayLike,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> QrffEstimate:
    """
    Kernel estimate with the g factors that scale any trace-estimation error.

    With `shots` the trace comes from a simulated SWAP test instead of the
    exact coefficient overlap.
    """

    if shots is not None and rng is None:
        raise ValueError("A seeded rng is required when shots is given.")

    rho, g = _encode(model, x)
    rho_prime, g_prime = _encode(model, x_prime)

    if shots is None:
        trace = hs_inner(rho, rho_prime)
    else:
        trace = hs_inner_sampled(rho, rho_prime, shots, rng)

    value = g * g_prime * (rho.dim * trace - 1.0)
    return QrffEstimate(value=value, g=g, g_prime=g_prime, n_qubits=model.n)


def qrff_kernel_estimate(
    model: QrffModel,
    x: ArrayLike,
    x_prime: ArrayLike,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    return qrff_estimate_with_factors(model, x, x_prime, shots=shots, rng=rng).value
