"""
eqkernel.pipelines.experiments

One Experiment subclass per CLI command. Subclasses register themselves by
command name:

    class RffSweep(Experiment, command="rff-sweep"): ...

    frame = run_experiment("rff-sweep", config, threads=4)

Per-(D, seed) work runs through joblib threads; rows are sorted before they
are returned so the schedule never shows up in the CSV.
"""

from __future__ import annotations

import logging
import math
import time
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from typing import ClassVar

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..core._defaults import DENSE_CHECK_QUBITS, GROWTH_TIMED_MAX_D, QRFF_MAX_QUBITS
from ..core._errors import ConfigError, GuardError
from ..core.composition import (
    CompositionKernel,
    Preprocessor,
    projected_composition_kernel,
    projected_kernel_bound,
    projected_kernel_eval,
    qrff_pp_estimate,
    rff_pp_build,
    rff_pp_estimate,
)
from ..core.mercer import (
    FiniteFeatureMap,
    MercerTruncation,
    eigenvalue_decay_report,
    gram_eigendecompose,
    mercer_to_eqk,
    nystrom_feature_matrix,
    rank_for_tail,
    truncation_error_bound,
    truncation_frobenius_error,
)
from ..core.pauli_state import hs_inner, hs_inner_dense, qubit_count_for
from ..core.qrff import QrffModel, qrff_encode, qrff_estimate_with_factors
from ..core.rff import (
    DomainBox,
    build_rff_map,
    central_second_derivative,
    gaussian_dimension_growth,
    growth_exponents,
    required_dimension,
    required_precision_bits,
    rff_features,
    rff_kernel_estimate,
    smooth_dimension_bound,
    sup_error_estimate,
)
from ..core.spectral import (
    GaussianKernel,
    ShiftInvariantKernel,
    cross_gram,
    gaussian_fourth_derivative_bound,
    gaussian_variance_report,
    gram_matrix,
    gram_psd_verdict,
    random_trig_polynomial,
)
from .records import ExperimentConfig, ResultRow, rows_to_frame

logger = logging.getLogger("eqkernel.pipelines")

SUMMARY_QUANTILES = {"p10": 0.1, "median": 0.5, "p90": 0.9}
EXPONENT_CONSTANTS = (8, 4)
DENSE_AGREEMENT_TOL = 1e-10


def _ms(start: float) -> float:
    return 1000.0 * (time.perf_counter() - start)


class Experiment(ABC):
    """Base class: validate the config on construction, produce rows on `run()`."""

    registry: ClassVar[dict[str, type[Experiment]]] = {}
    command: ClassVar[str] = ""
    required: ClassVar[tuple[str, ...]] = ()

    def __init_subclass__(cls, command: str | None = None, **kwargs):
        super().__init_subclass__(**kwargs)
        if command:
            cls.command = command
            Experiment.registry[command] = cls

    def __init__(self, config: ExperimentConfig, threads: int = 1, timing: bool = True):
        config.require(*self.required, command=self.command)
        self.config = config
        self.threads = max(1, threads)
        self.timing = timing

    @abstractmethod
    def rows(self) -> list[ResultRow]:
        pass

    def run(self) -> pd.DataFrame:
        logger.info("Running %s (%s)", self.command, self.config.experiment_id)
        frame = rows_to_frame(self.rows())
        if not self.timing:
            frame["wall_time_ms"] = 0.0
        logger.info("%s produced %d rows", self.command, len(frame))
        return frame

    def row(self, kernel: str, D: int | None, seed: int | None, metric: str, value: float, wall: float = 0.0) -> ResultRow:
        return ResultRow(
            experiment_id=self.config.experiment_id,
            kernel=kernel,
            D=D,
            seed=seed,
            metric=metric,
            value=float(value),
            wall_time_ms=wall if self.timing else 0.0,
        )

    def parallel(self, fn: Callable, items: Iterable[tuple]) -> list:
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(*item) for item in items]
        return Parallel(n_jobs=self.threads, prefer="threads")(delayed(fn)(*item) for item in items)

    def points_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.config.pair_seed)

    def summarize(self, kernel: str, frame_rows: list[ResultRow], metric: str) -> list[ResultRow]:
        """p10 / median / p90 of `metric` across seeds, one set per D."""

        values: dict[int, list[float]] = {}
        for r in frame_rows:
            if r.metric == metric:
                values.setdefault(r.D, []).append(r.value)

        out = []
        for D, series in values.items():
            for label, q in SUMMARY_QUANTILES.items():
                out.append(self.row(kernel, D, None, f"{metric}_{label}", float(np.quantile(series, q))))
        return out


################################ RFF SWEEP

class RffSweep(Experiment, command="rff-sweep"):
    required = ("kernel", "box", "grid_step", "D_values", "seeds")

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        k = cfg.build_kernel()
        box = cfg.build_box()
        if box.d != k.d:
            raise ConfigError(f"Box dimension {box.d} does not match kernel dimension {k.d}.")

        D_values = list(cfg.D_values)
        rows: list[ResultRow] = []

        if cfg.include_required_dimension:
            cfg.require("epsilon", "delta", command=self.command)
            report = required_dimension(k.d, cfg.epsilon, math.sqrt(k.spectral_variance()), box.diameter, cfg.delta)
            rows.append(self.row(k.descriptor, report.D_required, None, "required_dimension", report.D_required))
            rows.append(self.row(k.descriptor, report.D_required, None, "failure_bound", report.failure_probability))
            if report.D_required not in D_values:
                D_values.append(report.D_required)

        def point(D: int, seed: int) -> list[ResultRow]:
            start = time.perf_counter()
            rff = build_rff_map(k, D, seed)
            err = sup_error_estimate(rff, k, box, cfg.grid_step)
            out = [self.row(k.descriptor, D, seed, "sup_error", err, _ms(start))]
            if cfg.epsilon is not None:
                out.append(self.row(k.descriptor, D, seed, "exceeds_epsilon", float(err >= cfg.epsilon)))
            return out

        per_seed = [r for batch in self.parallel(point, ((D, s) for D in D_values for s in cfg.seeds)) for r in batch]
        rows.extend(per_seed)
        rows.extend(self.summarize(k.descriptor, per_seed, "sup_error"))

        if cfg.epsilon is not None:
            for D in D_values:
                flags = [r.value for r in per_seed if r.D == D and r.metric == "exceeds_epsilon"]
                rows.append(self.row(k.descriptor, D, None, "exceed_fraction", float(np.mean(flags))))
        return rows


################################ QRFF VERIFY

class QrffVerify(Experiment, command="qrff-verify"):
    required = ("kernel", "D_values", "seeds")

    def _points(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        box = cfg.build_box() if cfg.box is not None else DomainBox.symmetric(1.0, d)
        rng = self.points_rng()
        return box.sample(rng, cfg.pairs), box.sample(rng, cfg.pairs)

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        k = cfg.build_kernel()
        X, Y = self._points(k.d)

        for D in cfg.D_values:
            if qubit_count_for(D) > QRFF_MAX_QUBITS:
                raise GuardError(f"D={D} needs {qubit_count_for(D)} qubits, above the {QRFF_MAX_QUBITS}-qubit guard.")

        def point(D: int, seed: int) -> list[ResultRow]:
            start = time.perf_counter()
            model = QrffModel.from_map(build_rff_map(k, D, seed))
            diffs = [
                abs(qrff_estimate_with_factors(model, x, y).value - rff_kernel_estimate(model.map, x, y))
                for x, y in zip(X, Y)
            ]
            out = [
                self.row(k.descriptor, D, seed, "max_abs_diff", max(diffs), _ms(start)),
                self.row(k.descriptor, D, seed, "n_qubits", model.n),
            ]

            if model.n <= DENSE_CHECK_QUBITS:
                rho, rho_prime = qrff_encode(model, X[0]), qrff_encode(model, Y[0])
                gap = abs(hs_inner(rho, rho_prime) - hs_inner_dense(rho, rho_prime))
                out.append(self.row(k.descriptor, D, seed, "dense_agrees", float(gap <= DENSE_AGREEMENT_TOL)))

            if cfg.shots is not None:
                shot_rng = np.random.default_rng([seed, D])
                errors = np.array([
                    qrff_estimate_with_factors(model, x, y, shots=cfg.shots, rng=shot_rng).value
                    - qrff_estimate_with_factors(model, x, y).value
                    for x, y in zip(X, Y)
                ])
                out.append(self.row(k.descriptor, D, seed, "shot_std_error", float(np.std(errors, ddof=1)) if errors.size > 1 else 0.0))
                out.append(self.row(k.descriptor, D, seed, "shot_max_abs_error", float(np.max(np.abs(errors)))))
            return out

        return [r for batch in self.parallel(point, ((D, s) for D in cfg.D_values for s in cfg.seeds)) for r in batch]


################################ PROJECTED DEMO

class ProjectedDemo(Experiment, command="projected-demo"):
    required = ("D_values", "seeds")

    def _kernel(self) -> tuple[CompositionKernel, DomainBox]:
        cfg = self.config
        if cfg.preprocessor == "identity":
            cfg.require("kernel", "box", command=self.command)
            base = cfg.build_kernel()
            if not isinstance(base, GaussianKernel):
                raise ConfigError("The identity preprocessor needs a gaussian kernel spec.")
            box = cfg.build_box()
            R = float(max(np.max(np.abs(box.lower)), np.max(np.abs(box.upper))))
            return CompositionKernel(f=Preprocessor.identity(base.d, R), sigma=base.sigma), box

        cfg.require("circuit", command=self.command)
        circuit = cfg.build_circuit()
        kernel = projected_composition_kernel(circuit, cfg.gamma, cfg.circuit.input_dim)
        box = cfg.build_box() if cfg.box is not None else DomainBox.symmetric(math.pi, kernel.f.input_dim)
        if box.d != kernel.f.input_dim:
            raise ConfigError(f"Box dimension {box.d} does not match circuit input dimension {kernel.f.input_dim}.")
        return kernel, box

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        kernel, box = self._kernel()
        name = kernel.descriptor
        rows: list[ResultRow] = []

        X = Y = None
        if cfg.grid_step is None:
            rng = self.points_rng()
            X, Y = box.sample(rng, cfg.pairs), box.sample(rng, cfg.pairs)
            FX, FY = kernel.f.evaluate_many(X), kernel.f.evaluate_many(Y)
            exact = np.exp(-kernel.gamma * np.sum((FX - FY) ** 2, axis=1))

            if cfg.preprocessor == "circuit":
                circuit = cfg.build_circuit()
                direct = np.array([projected_kernel_eval(circuit, cfg.gamma, x, y) for x, y in zip(X, Y)])
                rows.append(self.row(name, None, None, "projected_vs_composition", float(np.max(np.abs(direct - exact)))))

        if cfg.epsilon is not None and cfg.delta is not None:
            report = projected_kernel_bound(
                kernel.f.input_dim, cfg.epsilon, kernel.f.bound, kernel.f.output_dim, kernel.sigma, cfg.delta
            )
            rows.append(self.row(name, report.D_required, None, "required_dimension", report.D_required))

        def point(D: int, seed: int) -> list[ResultRow]:
            start = time.perf_counter()
            model = rff_pp_build(kernel, D, seed)
            if X is None:
                err = sup_error_estimate(model.map, kernel, box, cfg.grid_step, features=model.feature_matrix)
            else:
                approx = np.sum(model.feature_matrix(X) * model.feature_matrix(Y), axis=1)
                err = float(np.max(np.abs(approx - exact)))
            out = [self.row(name, D, seed, "sup_error", err, _ms(start))]
            if cfg.epsilon is not None:
                out.append(self.row(name, D, seed, "exceeds_epsilon", float(err >= cfg.epsilon)))

            if cfg.check_qrff and X is not None:
                checked = min(len(X), 20)
                diffs = [
                    abs(qrff_pp_estimate(model, x, y) - rff_pp_estimate(model, x, y))
                    for x, y in zip(X[:checked], Y[:checked])
                ]
                out.append(self.row(name, D, seed, "qrff_pp_max_abs_diff", max(diffs)))
            return out

        per_seed = [r for batch in self.parallel(point, ((D, s) for D in cfg.D_values for s in cfg.seeds)) for r in batch]
        rows.extend(per_seed)
        rows.extend(self.summarize(name, per_seed, "sup_error"))
        if cfg.epsilon is not None:
            for D in cfg.D_values:
                flags = [r.value for r in per_seed if r.D == D and r.metric == "exceeds_epsilon"]
                rows.append(self.row(name, D, None, "exceed_fraction", float(np.mean(flags))))
        return rows


################################ PSD CHECK

class PsdCheck(Experiment, command="psd-check"):
    def _inputs(self) -> list[tuple[str, object, int]]:
        cfg = self.config
        inputs = []
        for i, spec in enumerate(cfg.trig_polynomials):
            try:
                poly = spec.build()
            except ValueError as e:
                raise ConfigError(f"Invalid trig polynomial {i}: {e}") from e
            inputs.append((spec.name or f"poly[{i}]", poly, poly.d))

        if (rp := cfg.random_polynomials) is not None:
            rng = np.random.default_rng(rp.seed)
            for i in range(rp.count):
                poly = random_trig_polynomial(rng, rp.d, rp.max_frequency, rp.max_terms)
                inputs.append((f"random[{i:03d}]", poly, poly.d))

        if cfg.kernel is not None:
            k = cfg.build_kernel()
            inputs.append((k.descriptor, k, k.d))

        if not inputs:
            raise ConfigError("psd-check requires trig_polynomials, random_polynomials or kernel.")
        return inputs

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        rows: list[ResultRow] = []
        agreements = []

        for name, target, d in self._inputs():
            start = time.perf_counter()
            rng = np.random.default_rng(cfg.pair_seed)
            points = rng.uniform(-cfg.point_scale, cfg.point_scale, size=(cfg.n_points, d))

            if isinstance(target, ShiftInvariantKernel):
                verdict = gram_psd_verdict(target, points)
                criterion = None
            else:
                verdict = gram_psd_verdict(lambda x, y, p=target: float(p(x - y)), points)
                criterion = target.is_psd()

            rows.append(self.row(name, None, None, "gram_min_eigenvalue", verdict.min_eigenvalue, _ms(start)))
            rows.append(self.row(name, None, None, "gram_symmetric", float(verdict.symmetric)))
            rows.append(self.row(name, None, None, "gram_psd", float(verdict.is_psd)))
            if criterion is not None:
                agree = criterion == verdict.is_psd
                agreements.append(agree)
                rows.append(self.row(name, None, None, "coefficient_psd", float(criterion)))
                rows.append(self.row(name, None, None, "agreement", float(agree)))
                if not agree:
                    logger.warning("PSD verdicts disagree for %s (min eig %r)", name, verdict.min_eigenvalue)

        if agreements:
            rows.append(self.row("all", None, None, "agreement_count", sum(agreements)))
            rows.append(self.row("all", None, None, "polynomial_count", len(agreements)))
        return rows


################################ BOUNDS

class Bounds(Experiment, command="bounds"):
    required = ("epsilon", "delta")

    def _geometry(self) -> tuple[str, int, float, float]:
        cfg = self.config
        if cfg.d is not None and cfg.sigma_p is not None and cfg.diameter is not None:
            return "explicit", cfg.d, cfg.sigma_p, cfg.diameter

        cfg.require("kernel", "box", command=self.command)
        k, box = cfg.build_kernel(), cfg.build_box()
        return k.descriptor, k.d, math.sqrt(k.spectral_variance()), box.diameter

    def _growth(self, gaussian: GaussianKernel | None) -> list[ResultRow]:
        """D_required, qubits and operation counts of the Gaussian family over growth_dims."""

        cfg = self.config
        if gaussian is None or cfg.box is None:
            raise ConfigError("growth_dims needs a gaussian kernel and a box.")
        box = cfg.build_box()
        R = float(np.max(np.abs(np.concatenate([box.lower, box.upper]))))
        points = gaussian_dimension_growth(gaussian.sigma, cfg.growth_dims, cfg.epsilon, R, cfg.delta)

        rows: list[ResultRow] = []
        for p in points:
            name = f"gaussian-growth(d={p.d})"
            D_timed = min(p.D_required, GROWTH_TIMED_MAX_D)
            start = time.perf_counter()
            rff = build_rff_map(GaussianKernel(gaussian.sigma, p.d), D_timed, seed=cfg.seeds[0])
            rff_features(rff, np.zeros(p.d))
            rows.extend(
                [
                    self.row(name, p.D_required, None, "growth_D_required", p.D_required),
                    self.row(name, p.D_required, None, "growth_n_qubits", p.n_qubits),
                    self.row(name, p.D_required, None, "growth_sampler_draws", p.sampler_draws),
                    self.row(name, p.D_required, None, "growth_feature_ops", p.feature_ops),
                    self.row(name, D_timed, None, "growth_timed_D", D_timed, _ms(start)),
                ]
            )
        for p, slope in zip(points[1:], growth_exponents(points)):
            rows.append(self.row(f"gaussian-growth(d={p.d})", p.D_required, None, "growth_exponent", slope))
            logger.debug("growth d=%d: D=%d, log-log slope %.3f", p.d, p.D_required, slope)
        return rows

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        name, d, sigma_p, diam = self._geometry()
        rows: list[ResultRow] = [
            self.row(name, None, None, "sigma_p_sq", sigma_p**2),
            self.row(name, None, None, "diameter", diam),
        ]

        for c in EXPONENT_CONSTANTS:
            start = time.perf_counter()
            report = required_dimension(d, cfg.epsilon, sigma_p, diam, cfg.delta, exponent_constant=c)
            rows.append(self.row(name, report.D_required, None, f"D_required_c{c}", report.D_required, _ms(start)))
            rows.append(self.row(name, report.D_required, None, f"failure_bound_c{c}", report.failure_probability))
            for note in report.notes:
                logger.info("bound c=%d: %s", c, note)

        gaussian = cfg.build_kernel() if cfg.kernel is not None else None
        if not isinstance(gaussian, GaussianKernel):
            gaussian = None
        else:
            variance = gaussian_variance_report(gaussian.sigma, gaussian.d)
            rows.extend(
                [
                    self.row(name, None, None, "variance_closed_form", variance.closed_form),
                    self.row(name, None, None, "variance_quadrature", variance.quadrature),
                    self.row(name, None, None, "variance_d_over_sigma", variance.d_over_sigma),
                    self.row(name, None, None, "variance_d_over_sigma_agrees", float(variance.d_over_sigma_agrees)),
                ]
            )
            logger.info("variance: %s", variance.note)

        if cfg.smooth is not None:
            report = smooth_dimension_bound(d, cfg.epsilon, cfg.smooth.R, cfg.smooth.B, cfg.delta)
            rows.append(self.row(name, report.D_required, None, "smooth_D_required", report.D_required))

        if (pb := cfg.projected_bound) is not None:
            report = projected_kernel_bound(pb.d, cfg.epsilon, pb.B, pb.g1, pb.sigma, cfg.delta)
            rows.append(self.row(f"projected(g1={pb.g1})", report.D_required, None, "projected_D_required", report.D_required))

        if cfg.growth_dims:
            rows.extend(self._growth(gaussian))

        L = cfg.L
        if L is None and gaussian is not None:
            L = gaussian_fourth_derivative_bound(gaussian.sigma)
        if L is not None:
            for eps in cfg.precision_epsilons or [cfg.epsilon]:
                P = required_precision_bits(L, eps)
                rows.append(self.row(name, None, None, f"precision_bits@{eps:g}", P))
                if gaussian is not None:
                    one_d = GaussianKernel(gaussian.sigma, 1)
                    fd = central_second_derivative(one_d, 0, np.zeros(1), 2.0**-P)
                    rows.append(self.row(name, None, None, f"fd_error@{eps:g}", abs(fd + 1.0 / gaussian.sigma**2)))
        return rows


################################ MERCER DEMO

class MercerDemo(Experiment, command="mercer-demo"):
    required = ("kernel", "box")

    def _landmarks(self, box: DomainBox) -> np.ndarray:
        m = self.config.landmarks
        if box.d == 1:
            return np.linspace(box.lower[0], box.upper[0], m)[:, None]
        return box.sample(self.points_rng(), m)

    def _test_points(self, box: DomainBox) -> np.ndarray:
        n = self.config.test_grid
        if box.d == 1:
            # offset from the landmark grid
            step = (box.upper[0] - box.lower[0]) / n
            return (box.lower[0] + step * (np.arange(n) + 0.5))[:, None]
        return box.sample(np.random.default_rng([self.config.pair_seed, 1]), n)

    def rows(self) -> list[ResultRow]:
        cfg = self.config
        k = cfg.build_kernel()
        box = cfg.build_box()
        if box.d != k.d:
            raise ConfigError(f"Box dimension {box.d} does not match kernel dimension {k.d}.")
        name = k.descriptor

        start = time.perf_counter()
        landmarks = self._landmarks(box)
        G = gram_matrix(k, landmarks)
        spectrum = gram_eigendecompose(G)
        truncation = MercerTruncation.from_spectrum(landmarks, spectrum)
        rows = [self.row(name, None, None, "psd_violations", spectrum.psd_violations, _ms(start))]

        decay = eigenvalue_decay_report(spectrum)
        for j, value in zip(decay["j"], decay["eigenvalue"]):
            rows.append(self.row(name, int(j), None, "eigenvalue", value))
        rows.append(self.row(name, None, None, "decay_exp_rate", decay["exp_rate"].iloc[0]))
        rows.append(self.row(name, None, None, "decay_power_rate", decay["power_rate"].iloc[0]))

        ranks = list(cfg.ranks)
        if cfg.tail_tol is not None:
            tail_rank = rank_for_tail(spectrum, cfg.tail_tol)
            rows.append(self.row(name, tail_rank, None, "rank_for_tail", tail_rank))
            ranks.append(tail_rank)
        ranks = sorted(set(ranks or [truncation.m]))

        T = self._test_points(box)
        exact = cross_gram(k, T, T)

        def point(rank: int) -> list[ResultRow]:
            if rank > truncation.m:
                raise ConfigError(f"rank {rank} exceeds the {truncation.m} landmarks.")
            start = time.perf_counter()
            try:
                fm = FiniteFeatureMap(truncation.with_rank(rank), k)
            except ValueError as e:
                raise ConfigError(f"rank {rank}: {e}") from e

            Phi_L = nystrom_feature_matrix(fm, truncation.landmarks)
            Phi_T = nystrom_feature_matrix(fm, T)
            classical = Phi_T @ Phi_T.T
            eqk = np.array([[mercer_to_eqk(fm, x, y) for y in T] for x in T])
            t = truncation.with_rank(rank)
            return [
                self.row(name, rank, None, "truncation_bound", truncation_error_bound(t), _ms(start)),
                self.row(name, rank, None, "frobenius_error", truncation_frobenius_error(t)),
                self.row(name, rank, None, "reconstruction_error", float(np.linalg.norm(G - Phi_L @ Phi_L.T, "fro"))),
                self.row(name, rank, None, "off_landmark_max_error", float(np.max(np.abs(classical - exact)))),
                self.row(name, rank, None, "eqk_vs_classical", float(np.max(np.abs(eqk - classical)))),
                self.row(name, rank, None, "eqk_vs_kernel", float(np.max(np.abs(eqk - exact)))),
            ]

        rows.extend(r for batch in self.parallel(point, ((r,) for r in ranks)) for r in batch)
        return rows


################################ RUNNER

def run_experiment(command: str, config: ExperimentConfig, threads: int = 1, timing: bool = True) -> pd.DataFrame:
    try:
        experiment_cls = Experiment.registry[command]
    except KeyError as e:
        raise ConfigError(f"Unknown experiment command {command!r}.") from e
    return experiment_cls(config, threads=threads, timing=timing).run()
