"""
eqkernel.core.circuit

Small statevector simulator for data-embedding circuits and the single-qubit
reduced density matrices that feed the projected quantum kernel.

The state is held as a tensor of shape (2,) * N with qubit 0 on the first axis,
so the flattened vector is big-endian in qubit order.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._defaults import CIRCUIT_MAX_QUBITS, HERMITIAN_TOL, RDM_TOL, STATE_NORM_TOL
from ._errors import CircuitError, DimensionError, GuardError

logger = logging.getLogger("eqkernel.core.circuit")

ROTATION_AXES = ("X", "Y", "Z")
ENTANGLERS = ("CNOT", "CZ")

_TWO_QUBIT = {
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ).reshape(2, 2, 2, 2),
    "CZ": np.diag([1, 1, 1, -1]).astype(np.complex128).reshape(2, 2, 2, 2),
}


################################ GATES

@dataclass(frozen=True)
class RotationGate:
    """exp(-i theta a / 2) on `qubit` with theta = scale * x[data_index] + bias."""

    axis: Literal["X", "Y", "Z"]
    qubit: int
    data_index: int | None = None
    scale: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if self.axis not in ROTATION_AXES:
            raise CircuitError(f"Unknown rotation axis {self.axis!r}; expected one of {ROTATION_AXES}.")
        if self.qubit < 0:
            raise CircuitError(f"Negative qubit index {self.qubit}.")
        if self.data_index is not None and self.data_index < 0:
            raise CircuitError(f"Negative data index {self.data_index}.")

    def angle(self, x: NDArray[np.float64]) -> float:
        if self.data_index is None:
            return self.bias
        return self.scale * float(x[self.data_index]) + self.bias

    def matrix(self, theta: float) -> NDArray[np.complex128]:
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        if self.axis == "X":
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
        if self.axis == "Y":
            return np.array([[c, -s], [s, c]], dtype=np.complex128)
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=np.complex128)


@dataclass(frozen=True)
class EntanglerGate:
    kind: Literal["CNOT", "CZ"]
    control: int
    target: int

    def __post_init__(self):
        if self.kind not in ENTANGLERS:
            raise CircuitError(f"Unknown entangler {self.kind!r}; expected one of {ENTANGLERS}.")
        if self.control == self.target:
            raise CircuitError(f"{self.kind} needs distinct control and target, got {self.control} twice.")
        if min(self.control, self.target) < 0:
            raise CircuitError("Negative qubit index in entangler.")


Gate = RotationGate | EntanglerGate


def gate_from_record(record: Mapping) -> Gate:
    """Build a gate from a config record such as {"type": "rotation", "axis": "Y", "qubit": 0}."""

    fields = dict(record)
    kind = str(fields.pop("type", "rotation")).lower()
    try:
        if kind == "rotation":
            return RotationGate(**fields)
        if kind == "entangler":
            return EntanglerGate(**fields)
    except TypeError as e:
        raise CircuitError(f"Invalid {kind} gate record {record!r}: {e}") from e
    raise CircuitError(f"Unknown gate type {kind!r}.")


################################ CIRCUITS

@dataclass(frozen=True)
class EmbeddingCircuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError(f"A circuit needs at least one qubit, got {self.n_qubits}.")
        if self.n_qubits > CIRCUIT_MAX_QUBITS:
            raise GuardError(f"Circuits are capped at {CIRCUIT_MAX_QUBITS} qubits, got {self.n_qubits}.")

        object.__setattr__(self, "gates", tuple(self.gates))
        for position, gate in enumerate(self.gates):
            qubits = (gate.qubit,) if isinstance(gate, RotationGate) else (gate.control, gate.target)
            if max(qubits) >= self.n_qubits:
                raise CircuitError(f"Gate {position} references qubit {max(qubits)} on a {self.n_qubits}-qubit circuit.")

    @classmethod
    def from_spec(cls, n_qubits: int, gates: Iterable[Gate | Mapping]) -> "EmbeddingCircuit":
        built = [g if isinstance(g, (RotationGate, EntanglerGate)) else gate_from_record(g) for g in gates]
        return cls(n_qubits=n_qubits, gates=tuple(built))

    @property
    def input_dim(self) -> int:
        indices = [g.data_index for g in self.gates if isinstance(g, RotationGate) and g.data_index is not None]
        return max(indices) + 1 if indices else 0

    @property
    def depth(self) -> int:
        return len(self.gates)


def _apply_single(psi: NDArray, U: NDArray, q: int) -> NDArray:
    return np.moveaxis(np.tensordot(U, psi, axes=([1], [q])), 0, q)


def _apply_two(psi: NDArray, U: NDArray, control: int, target: int) -> NDArray:
    out = np.tensordot(U, psi, axes=([2, 3], [control, target]))
    return np.moveaxis(out, [0, 1], [control, target])


def statevector_encode(circuit: EmbeddingCircuit, x: ArrayLike) -> NDArray[np.complex128]:
    """U(x)|0...0> as a flat vector of length 2^N."""

    x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    if x.size < circuit.input_dim:
        raise DimensionError(f"Circuit reads {circuit.input_dim} data coordinates, got {x.size}.")

    N = circuit.n_qubits
    psi = np.zeros((2,) * N, dtype=np.complex128)
    psi[(0,) * N] = 1.0

    for gate in circuit.gates:
        if isinstance(gate, RotationGate):
            psi = _apply_single(psi, gate.matrix(gate.angle(x)), gate.qubit)
        else:
            psi = _apply_two(psi, _TWO_QUBIT[gate.kind], gate.control, gate.target)

    state = psi.reshape(-1)
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > STATE_NORM_TOL:
        raise CircuitError(f"Statevector norm drifted to {norm!r}.")
    return state


def random_circuit(
    rng: np.random.Generator,
    n_qubits: int,
    input_dim: int,
    depth: int = 2,
    scale: float = 1.0,
) -> EmbeddingCircuit:
    """Layers of data-fed rotations on every qubit followed by a nearest-neighbour entangler chain."""

    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}.")

    gates: list[Gate] = []
    for layer in range(depth):
        for q in range(n_qubits):
            gates.append(
                RotationGate(
                    axis=str(rng.choice(ROTATION_AXES)),
                    qubit=q,
                    data_index=int((q + layer) % input_dim),
                    scale=float(scale * rng.uniform(0.5, 1.5)),
                    bias=float(rng.uniform(0.0, 2.0 * math.pi)),
                )
            )
        for q in range(n_qubits - 1):
            gates.append(EntanglerGate(kind=str(rng.choice(ENTANGLERS)), control=q, target=q + 1))
    return EmbeddingCircuit(n_qubits=n_qubits, gates=tuple(gates))


################################ REDUCED STATES

@dataclass(frozen=True, eq=False)
class ReducedStateVector:
    rdms: tuple[NDArray[np.complex128], ...]

    def __post_init__(self):
        checked = []
        for k, rho in enumerate(self.rdms):
            rho = np.array(rho, dtype=np.complex128)
            if rho.shape != (2, 2):
                raise DimensionError(f"RDM {k} has shape {rho.shape}, expected (2, 2).")
            if np.max(np.abs(rho - rho.conj().T)) > max(HERMITIAN_TOL, RDM_TOL):
                raise ValueError(f"RDM {k} is not Hermitian.")
            if abs(np.trace(rho).real - 1.0) > RDM_TOL:
                raise ValueError(f"RDM {k} has trace {np.trace(rho).real!r}.")
            if np.linalg.eigvalsh(rho)[0] < -RDM_TOL:
                raise ValueError(f"RDM {k} is not positive semidefinite.")
            rho.setflags(write=False)
            checked.append(rho)
        object.__setattr__(self, "rdms", tuple(checked))

    def __len__(self) -> int:
        return len(self.rdms)


def reduced_density_matrices(state: ArrayLike, n_qubits: int) -> ReducedStateVector:
    """Partial trace onto each single qubit."""

    state = np.asarray(state, dtype=np.complex128).ravel()
    if state.size != 2**n_qubits:
        raise DimensionError(f"State has {state.size} amplitudes, expected 2^{n_qubits}.")

    psi = state.reshape((2,) * n_qubits)
    rdms = []
    for k in range(n_qubits):
        block = np.moveaxis(psi, k, 0).reshape(2, -1)
        rdms.append(block @ block.conj().T)
    return ReducedStateVector(tuple(rdms))


def rdm_feature_vector(rs: ReducedStateVector | Sequence[ArrayLike]) -> NDArray[np.float64]:
    """
    Flatten each RDM to (rho_00, rho_11, sqrt2 Re rho_01, sqrt2 Im rho_01).

    Euclidean distance between flattenings equals the Frobenius distance
    between the RDM lists.
    """

    if not isinstance(rs, ReducedStateVector):
        rs = ReducedStateVector(tuple(rs))

    root2 = math.sqrt(2.0)
    out = np.empty(4 * len(rs), dtype=np.float64)
    for k, rho in enumerate(rs.rdms):
        out[4 * k : 4 * k + 4] = (
            rho[0, 0].real,
            rho[1, 1].real,
            root2 * rho[0, 1].real,
            root2 * rho[0, 1].imag,
        )
    return out


def circuit_rdm_features(circuit: EmbeddingCircuit, x: ArrayLike) -> NDArray[np.float64]:
    return rdm_feature_vector(reduced_density_matrices(statevector_encode(circuit, x), circuit.n_qubits))
