"""
eqkernel.pipelines.records

Experiment config schema (validated from YAML) and the result-row schema shared
by every command.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from ..core._errors import ConfigError
from ..core.circuit import EmbeddingCircuit, EntanglerGate, RotationGate, random_circuit
from ..core.rff import DomainBox
from ..core.spectral import GaussianKernel, ShiftInvariantKernel, TrigPolynomial, TrigPolynomialKernel

################################ RESULT SCHEMA

RESULT_COLUMNS = ["experiment_id", "kernel", "D", "seed", "metric", "value", "wall_time_ms"]
SORT_COLUMNS = ["experiment_id", "kernel", "D", "seed", "metric"]


@dataclass
class ResultRow:
    experiment_id: str
    kernel: str
    D: int | None
    seed: int | None
    metric: str
    value: float
    wall_time_ms: float = field(default=0.0)


def rows_to_frame(rows: list[ResultRow]) -> pd.DataFrame:
    """Rows as a frame in the fixed column order, sorted so scheduling never changes the output."""

    frame = pd.DataFrame([asdict(r) for r in rows], columns=RESULT_COLUMNS)
    frame = frame.astype({"D": "Int64", "seed": "Int64", "value": "float64", "wall_time_ms": "float64"})
    return frame.sort_values(SORT_COLUMNS, kind="mergesort", na_position="last").reset_index(drop=True)


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


################################ KERNEL SPECS

class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GaussianSpec(_Spec):
    type: Literal["gaussian"] = "gaussian"
    sigma: PositiveFloat = 1.0
    d: PositiveInt = 1

    def build(self) -> GaussianKernel:
        return GaussianKernel(sigma=self.sigma, d=self.d)


class TrigTermSpec(_Spec):
    frequency: list[int] | int
    cos: float = 0.0
    sin: float = 0.0


class TrigPolynomialSpec(_Spec):
    name: str | None = None
    d: PositiveInt = 1
    terms: list[TrigTermSpec] = Field(min_length=1)

    def build(self) -> TrigPolynomial:
        return TrigPolynomial.from_terms(self.d, [(t.frequency, t.cos, t.sin) for t in self.terms])


class TrigKernelSpec(_Spec):
    type: Literal["trig_polynomial"]
    polynomial: TrigPolynomialSpec

    def build(self) -> TrigPolynomialKernel:
        return TrigPolynomialKernel(self.polynomial.build())


KernelSpec = Annotated[GaussianSpec | TrigKernelSpec, Field(discriminator="type")]


class RandomPolynomialSpec(_Spec):
    count: PositiveInt = 100
    seed: int = 0
    d: PositiveInt = 1
    max_frequency: PositiveInt = 8
    max_terms: PositiveInt = 4


################################ DOMAIN / CIRCUIT SPECS

class BoxSpec(_Spec):
    """Either explicit `lower`/`upper` lists or a symmetric box [-R, R]^d."""

    lower: list[float] | None = None
    upper: list[float] | None = None
    R: PositiveFloat | None = None
    d: PositiveInt | None = None

    @model_validator(mode="after")
    def _one_form(self) -> "BoxSpec":
        explicit = self.lower is not None and self.upper is not None
        symmetric = self.R is not None and self.d is not None
        if explicit == symmetric:
            raise ValueError("box needs either lower/upper or R/d")
        return self

    def build(self) -> DomainBox:
        if self.R is not None:
            return DomainBox.symmetric(self.R, self.d)
        return DomainBox(lower=self.lower, upper=self.upper)


class RotationSpec(_Spec):
    type: Literal["rotation"] = "rotation"
    axis: Literal["X", "Y", "Z"]
    qubit: int = Field(ge=0)
    data_index: int | None = Field(default=None, ge=0)
    scale: float = 1.0
    bias: float = 0.0


class EntanglerSpec(_Spec):
    type: Literal["entangler"]
    kind: Literal["CNOT", "CZ"] = "CNOT"
    control: int = Field(ge=0)
    target: int = Field(ge=0)


GateSpec = Annotated[RotationSpec | EntanglerSpec, Field(discriminator="type")]


class RandomCircuitSpec(_Spec):
    seed: int = 0
    depth: PositiveInt = 2
    scale: PositiveFloat = 1.0


class CircuitSpec(_Spec):
    n_qubits: PositiveInt
    input_dim: PositiveInt | None = None
    gates: list[GateSpec] = Field(default_factory=list)
    random: RandomCircuitSpec | None = None

    def build(self) -> EmbeddingCircuit:
        if self.random is not None:
            rng = np.random.default_rng(self.random.seed)
            return random_circuit(rng, self.n_qubits, self.input_dim or 1, self.random.depth, self.random.scale)

        gates = [
            RotationGate(g.axis, g.qubit, g.data_index, g.scale, g.bias)
            if isinstance(g, RotationSpec)
            else EntanglerGate(g.kind, g.control, g.target)
            for g in self.gates
        ]
        return EmbeddingCircuit(n_qubits=self.n_qubits, gates=tuple(gates))


################################ BOUND SPECS

class SmoothBoundSpec(_Spec):
    R: PositiveFloat
    B: PositiveFloat


class ProjectedBoundSpec(_Spec):
    d: PositiveInt
    g1: PositiveInt
    B: PositiveFloat = 1.0
    sigma: PositiveFloat = Field(default_factory=lambda: math.sqrt(0.5))


class SeedRange(_Spec):
    start: int = Field(default=0, ge=0)
    count: PositiveInt


################################ EXPERIMENT CONFIG

class ExperimentConfig(BaseModel):
    """One experiment. Each command reads the subset of fields it needs."""

    model_config = ConfigDict(extra="forbid")

    experiment_id: str = "experiment"
    output: Path | None = None

    # shared
    kernel: KernelSpec | None = None
    box: BoxSpec | None = None
    grid_step: PositiveFloat | None = None
    D_values: list[int] = Field(default_factory=list)
    seeds: list[int] = Field(default_factory=lambda: [0])
    epsilon: float | None = Field(default=None, gt=0.0, lt=1.0)
    delta: float | None = Field(default=None, gt=0.0, le=1.0)
    shots: PositiveInt | None = None
    pairs: PositiveInt = 100
    pair_seed: int = 0

    # rff-sweep
    include_required_dimension: bool = False

    # projected-demo
    circuit: CircuitSpec | None = None
    preprocessor: Literal["circuit", "identity"] = "circuit"
    gamma: PositiveFloat = 1.0
    check_qrff: bool = False

    # psd-check
    trig_polynomials: list[TrigPolynomialSpec] = Field(default_factory=list)
    random_polynomials: RandomPolynomialSpec | None = None
    n_points: PositiveInt = 30
    point_scale: PositiveFloat = math.pi

    # bounds
    d: PositiveInt | None = None
    sigma_p: PositiveFloat | None = None
    diameter: PositiveFloat | None = None
    smooth: SmoothBoundSpec | None = None
    projected_bound: ProjectedBoundSpec | None = None
    L: PositiveFloat | None = None
    precision_epsilons: list[PositiveFloat] = Field(default_factory=list)
    growth_dims: list[PositiveInt] = Field(default_factory=list)

    # mercer-demo
    landmarks: PositiveInt = 40
    ranks: list[PositiveInt] = Field(default_factory=list)
    test_grid: PositiveInt = 20
    tail_tol: PositiveFloat | None = None

    @field_validator("seeds", mode="before")
    @classmethod
    def _expand_seeds(cls, value):
        if isinstance(value, dict):
            span = SeedRange(**value)
            return list(range(span.start, span.start + span.count))
        if isinstance(value, int):
            return [value]
        return value

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, value: list[int]) -> list[int]:
        if any(s < 0 for s in value):
            raise ValueError("seeds must be non-negative")
        return list(dict.fromkeys(value))

    @field_validator("D_values")
    @classmethod
    def _even_dimensions(cls, value: list[int]) -> list[int]:
        bad = [D for D in value if D < 2 or D % 2]
        if bad:
            raise ValueError(f"D values must be even and >= 2, got {bad}")
        return value

    def require(self, *names: str, command: str) -> None:
        missing = [n for n in names if getattr(self, n) in (None, [])]
        if missing:
            raise ConfigError(f"{command} requires config field(s): {', '.join(missing)}.")

    def build_kernel(self) -> ShiftInvariantKernel:
        if self.kernel is None:
            raise ConfigError("No kernel configured.")
        try:
            return self.kernel.build()
        except ValueError as e:
            raise ConfigError(f"Invalid kernel: {e}") from e

    def build_box(self) -> DomainBox:
        if self.box is None:
            raise ConfigError("No box configured.")
        try:
            return self.box.build()
        except ValueError as e:
            raise ConfigError(f"Invalid box: {e}") from e

    def build_circuit(self) -> EmbeddingCircuit:
        if self.circuit is None:
            raise ConfigError("No circuit configured.")
        try:
            return self.circuit.build()
        except ValueError as e:
            raise ConfigError(f"Invalid circuit: {e}") from e


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a YAML experiment config; overrides with value None are ignored."""

    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Config {path} is not valid YAML: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"Config {path} must be a mapping at the top level.")

    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e
