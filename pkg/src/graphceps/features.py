"""Graph cepstrum, spatial cepstrum, classical cepstrum and basis similarity."""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .eig import sym_eig
from .errors import ContractError, EmptyInputError
from .graph import GraphBasis

KINDS = ("GC", "SC", "CEP")
DEFAULT_ORDER = 13


@dataclass(frozen=True)
class PcaBasis:
    """SC matrix ``e_t`` (eigenvectors of the second-moment matrix as rows)."""

    e_t: np.ndarray
    eigvals: np.ndarray
    frames_used: int
    centered: bool = False
    mean: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.e_t.shape[0]

    @property
    def hash(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.e_t).tobytes())
        if self.mean is not None:
            h.update(np.ascontiguousarray(self.mean).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class FeatureSequence:
    values: np.ndarray  # (T, K)
    kind: str
    source: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown feature kind {self.kind!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ContractError(f"feature values must be (T, K), got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return self.values.shape[1]

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def _frames(q, width: int, what: str) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if q.shape[1] != width:
        raise ContractError(f"{what}: vectors have length {q.shape[1]}, basis expects {width}")
    return q


def _check_order(order: int, limit: int) -> None:
    if not 1 <= order <= limit:
        raise ContractError(f"order must lie in [1, {limit}], got {order}")


def graph_cepstrum(q, basis: GraphBasis, order: int = DEFAULT_ORDER) -> FeatureSequence:
    """IGFT of channel log-amplitudes: ``e_tau = U q_tau``, lowest ``order`` rows.

    ``q`` is one log-amplitude vector of length N or a ``(T, N)`` stack.
    """
    q = _frames(q, basis.n, "graph_cepstrum")
    _check_order(order, basis.n)
    return FeatureSequence(q @ basis.u[:order].T, "GC", basis.graph_hash)


def fit_pca_basis(qs, centered: bool = False, kernel=None) -> PcaBasis:
    """Eigenvectors of ``R_q = (1/T) sum_tau q_tau q_tau^T``, descending eigenvalues.

    No mean is removed unless ``centered`` is set, in which case the
    ordinary covariance is used and the mean is stored with the basis.
    """
    q = np.atleast_2d(np.asarray(qs, dtype=np.float64))
    t, n = q.shape
    if t == 0:
        raise EmptyInputError("fit_pca_basis needs at least one frame")
    if t < n:
        warnings.warn(f"fitting a {n}-channel PCA basis on only {t} frames", stacklevel=2)
    mean = q.mean(axis=0) if centered else None
    x = q - mean if centered else q
    r = x.T @ x / t
    eigvals, rows = sym_eig(0.5 * (r + r.T), descending=True, kernel=kernel)
    return PcaBasis(rows, eigvals, t, centered, mean)


def spatial_cepstrum(q, basis: PcaBasis, order: int = DEFAULT_ORDER) -> FeatureSequence:
    """Project log-amplitudes onto the SC matrix: ``d_tau = E^T q_tau``."""
    q = _frames(q, basis.n, "spatial_cepstrum")
    _check_order(order, basis.n)
    if basis.mean is not None:
        q = q - basis.mean
    return FeatureSequence(q @ basis.e_t[:order].T, "SC", basis.hash)


def cepstrum(p, order: int = DEFAULT_ORDER) -> FeatureSequence:
    """Real part of the unitary IDFT of each log spectrum, first ``order`` quefrencies.

    ``Z[j, k] = exp(2j*pi*j*k/Omega) / sqrt(Omega)``, so ``Z p`` equals
    ``sqrt(Omega) * ifft(p)``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    omega = p.shape[1]
    _check_order(order, omega)
    c = np.fft.ifft(p, axis=1) * np.sqrt(omega)
    return FeatureSequence(c.real[:, :order].copy(), "CEP", f"idft{omega}")


def basis_similarity(m1, m2) -> float:
    """Sum of squared differences between element magnitudes.

    Comparing magnitudes makes the score blind to per-row sign flips,
    which eigendecompositions leave undetermined.
    """
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if m1.shape != m2.shape:
        raise ContractError(f"shape mismatch {m1.shape} vs {m2.shape}")
    return float(np.sum((np.abs(m1) - np.abs(m2)) ** 2))


def similarity_table(named: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    names = list(named)
    table = np.zeros((len(names), len(names)))
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            table[i, j] = table[j, i] = basis_similarity(named[a], named[names[j]])
    return names, table
