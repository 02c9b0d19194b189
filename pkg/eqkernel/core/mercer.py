"""
eqkernel.core.mercer

Empirical Mercer truncation of a kernel: Gram eigendecomposition on a landmark
set, Nystrom extension of the retained eigenvectors to a finite feature map,
and the 1-norm renormalized C2QE read-out of that map.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from ._defaults import GRAM_EIG_TOL
from ._errors import NormalizationError
from .pauli_state import L1UnitVector, c2qe_encode, euclid_from_states
from .spectral import PairEvaluator, ShiftInvariantKernel, as_points, check_symmetric, cross_gram, gram_matrix

logger = logging.getLogger("eqkernel.core.mercer")

DECAY_COLUMNS = ["j", "eigenvalue", "ratio", "tail_sum", "exp_rate", "power_rate"]


################################ SPECTRUM

@dataclass(frozen=True, eq=False)
class GramSpectrum:
    eigenvalues: NDArray[np.float64]
    raw_eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]
    psd_violations: int

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def is_psd(self) -> bool:
        return self.psd_violations == 0


def gram_eigendecompose(G: ArrayLike) -> GramSpectrum:
    """
    Symmetric eigendecomposition sorted non-increasing.

    Eigenvalues in [-1e-8, 0) are clipped to zero. Anything more negative is
    counted as a PSD violation and left in place.
    """

    G = check_symmetric(G)
    values, vectors = linalg.eigh(G)
    order = np.argsort(values)[::-1]
    raw = values[order]
    vectors = vectors[:, order]

    violations = int(np.sum(raw < -GRAM_EIG_TOL))
    if violations:
        logger.warning("Gram has %d eigenvalues below -%g (min %r).", violations, GRAM_EIG_TOL, float(raw[-1]))

    clipped = np.where((raw < 0.0) & (raw >= -GRAM_EIG_TOL), 0.0, raw)
    return GramSpectrum(
        eigenvalues=clipped,
        raw_eigenvalues=raw,
        eigenvectors=vectors,
        psd_violations=violations,
    )


def rank_for_tail(spectrum: GramSpectrum, tol: float) -> int:
    """Smallest rank m' whose discarded eigenvalue sum is at most tol."""

    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}.")
    tails = _tail_sums(spectrum.eigenvalues)
    return max(1, int(np.argmax(tails <= tol)))


def _tail_sums(eigenvalues: NDArray[np.float64]) -> NDArray[np.float64]:
    """tails[r] = sum_{j >= r} lambda_j, with tails[m] = 0."""

    positive = np.clip(eigenvalues, 0.0, None)
    return np.append(np.cumsum(positive[::-1])[::-1], 0.0)


def eigenvalue_decay_report(spectrum: GramSpectrum) -> pd.DataFrame:
    """Observed decay of the spectrum with fitted exponential and power-law rates."""

    lam = spectrum.eigenvalues
    j = np.arange(1, lam.size + 1)
    ratio = np.full(lam.size, np.nan)
    ratio[1:] = np.divide(lam[1:], lam[:-1], out=np.full(lam.size - 1, np.nan), where=lam[:-1] > 0)

    positive = lam > GRAM_EIG_TOL
    exp_rate = power_rate = np.nan
    if positive.sum() >= 2:
        log_lam = np.log(lam[positive])
        exp_rate = -float(np.polyfit(j[positive], log_lam, 1)[0])
        power_rate = -float(np.polyfit(np.log(j[positive]), log_lam, 1)[0])

    return pd.DataFrame(
        {
            "j": j,
            "eigenvalue": lam,
            "ratio": ratio,
            "tail_sum": _tail_sums(lam)[1:],
            "exp_rate": exp_rate,
            "power_rate": power_rate,
        },
        columns=DECAY_COLUMNS,
    )


################################ TRUNCATION

@dataclass(frozen=True, eq=False)
class MercerTruncation:
    landmarks: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]
    rank: int
    psd_violations: int = 0

    def __post_init__(self):
        m = self.landmarks.shape[0]
        if self.eigenvalues.shape != (m,) or self.eigenvectors.shape != (m, m):
            raise ValueError(f"Spectrum shape does not match {m} landmarks.")
        if not 1 <= self.rank <= m:
            raise ValueError(f"rank must lie in [1, {m}], got {self.rank}.")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValueError("Eigenvalues must be sorted non-increasing.")

    @property
    def m(self) -> int:
        return int(self.landmarks.shape[0])

    @property
    def retained(self) -> NDArray[np.float64]:
        return self.eigenvalues[: self.rank]

    @classmethod
    def from_spectrum(cls, landmarks: NDArray[np.float64], spectrum: GramSpectrum, rank: int | None = None) -> "MercerTruncation":
        return cls(
            landmarks=landmarks,
            eigenvalues=spectrum.eigenvalues,
            eigenvectors=spectrum.eigenvectors,
            rank=rank if rank is not None else spectrum.size,
            psd_violations=spectrum.psd_violations,
        )

    def with_rank(self, rank: int) -> "MercerTruncation":
        return MercerTruncation(self.landmarks, self.eigenvalues, self.eigenvectors, rank, self.psd_violations)


def build_mercer_truncation(
    k: ShiftInvariantKernel | PairEvaluator, landmarks: ArrayLike, rank: int | None = None
) -> MercerTruncation:
    pts = as_points(landmarks, getattr(k, "d", None))
    truncation = MercerTruncation.from_spectrum(pts, gram_eigendecompose(gram_matrix(k, pts)), rank)
    logger.debug("Mercer truncation: m=%d rank=%d", truncation.m, truncation.rank)
    return truncation


def truncation_error_bound(t: MercerTruncation, rank: int | None = None) -> float:
    """sum_{j > m'} lambda_j."""

    rank = t.rank if rank is None else rank
    if not 0 <= rank <= t.m:
        raise ValueError(f"rank must lie in [0, {t.m}], got {rank}.")
    return float(_tail_sums(t.eigenvalues)[rank])


def truncation_frobenius_error(t: MercerTruncation, rank: int | None = None) -> float:
    """sqrt(sum_{j > m'} lambda_j^2), the Frobenius error of the rank-m' Gram."""

    rank = t.rank if rank is None else rank
    if not 0 <= rank <= t.m:
        raise ValueError(f"rank must lie in [0, {t.m}], got {rank}.")
    return float(math.sqrt(np.sum(t.eigenvalues[rank:] ** 2)))


################################ FEATURE MAP

@dataclass(frozen=True, eq=False)
class FiniteFeatureMap:
    truncation: MercerTruncation
    kernel: ShiftInvariantKernel | PairEvaluator

    def __post_init__(self):
        if np.any(self.truncation.retained <= 0.0):
            raise ValueError(
                f"Retained eigenvalues must be positive; rank {self.truncation.rank} "
                f"includes {float(self.truncation.retained.min())!r}."
            )

    @property
    def dimension(self) -> int:
        return self.truncation.rank

    @cached_property
    def projection(self) -> NDArray[np.float64]:
        """V_m' diag(1 / sqrt(lambda)) so that Phi(X) = K(X, landmarks) @ projection."""

        t = self.truncation
        return t.eigenvectors[:, : t.rank] / np.sqrt(t.retained)


def nystrom_feature_matrix(fm: FiniteFeatureMap, X: ArrayLike) -> NDArray[np.float64]:
    pts = as_points(X, fm.truncation.landmarks.shape[1])
    return cross_gram(fm.kernel, pts, fm.truncation.landmarks) @ fm.projection


def nystrom_features(fm: FiniteFeatureMap, x: ArrayLike) -> NDArray[np.float64]:
    """Phi_j(x) = (1 / sqrt(lambda_j)) sum_i v_j[i] k(x, landmark_i)."""

    x = np.atleast_1d(np.asarray(x, dtype=np.float64)).reshape(1, -1)
    return nystrom_feature_matrix(fm, x)[0]


def mercer_to_eqk(fm: FiniteFeatureMap, x: ArrayLike, x_prime: ArrayLike) -> float:
    """
    ||Phi(x)||_1 ||Phi(x')||_1 (2^n Tr{rho rho'} - 1) with rho the C2QE state of
    the 1-norm renormalized features.
    """

    phi = nystrom_features(fm, x)
    phi_prime = nystrom_features(fm, x_prime)
    l1 = float(np.abs(phi).sum())
    l1_prime = float(np.abs(phi_prime).sum())
    if l1 == 0.0 or l1_prime == 0.0:
        raise NormalizationError("Feature vector is zero; it cannot be encoded.")

    rho = c2qe_encode(L1UnitVector(phi / l1))
    rho_prime = c2qe_encode(L1UnitVector(phi_prime / l1_prime))
    return l1 * l1_prime * euclid_from_states(rho, rho_prime)
