"""Microphone connection graphs and their Laplacian eigenbases.

Connected microphones (same synchronized group, or an explicit edge) get
adjacency weight 1; every other distinct pair gets the weak weight
``alpha``. The rows of the IGFT matrix ``U`` are the Laplacian
eigenvectors in ascending eigenvalue order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eig import clusters, sym_eig
from .errors import ConfigError, ContractError


@dataclass(frozen=True)
class MicGraph:
    n: int
    groups: tuple[tuple[int, ...], ...] = ()
    extra_edges: tuple[tuple[int, int], ...] = ()
    alpha: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(int(c) for c in g) for g in self.groups))
        object.__setattr__(
            self, "extra_edges", tuple(tuple(int(c) for c in e) for e in self.extra_edges)
        )
        if self.n < 1:
            raise ConfigError(f"graph needs at least one channel, got n={self.n}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        seen: dict[int, int] = {}
        for gi, group in enumerate(self.groups):
            for ch in group:
                if not 0 <= ch < self.n:
                    raise ConfigError(f"group {gi}: channel {ch} outside [0, {self.n})")
                if ch in seen:
                    raise ConfigError(f"channel {ch} appears in groups {seen[ch]} and {gi}")
                seen[ch] = gi
        for edge in self.extra_edges:
            if len(edge) != 2 or not all(0 <= c < self.n for c in edge):
                raise ConfigError(f"bad edge {edge} for n={self.n}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "groups": [list(g) for g in self.groups],
            "extra_edges": [list(e) for e in self.extra_edges],
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MicGraph":
        try:
            return cls(
                n=int(d["n"]),
                groups=d.get("groups", ()),
                extra_edges=d.get("extra_edges", ()),
                alpha=float(d.get("alpha", 0.01)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad graph config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "MicGraph":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read graph config {path}: {exc}") from exc

    def with_alpha(self, alpha: float) -> "MicGraph":
        return MicGraph(self.n, self.groups, self.extra_edges, alpha)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def ring_graph(n: int) -> MicGraph:
    """Cycle 0-1-...-(n-1)-0 with no weak connections."""
    return MicGraph(n, extra_edges=tuple((i, (i + 1) % n) for i in range(n)), alpha=0.0)


def adjacency(g: MicGraph) -> np.ndarray:
    a = np.full((g.n, g.n), float(g.alpha))
    for group in g.groups:
        idx = np.array(group, dtype=int)
        a[np.ix_(idx, idx)] = 1.0
    for i, j in g.extra_edges:
        a[i, j] = a[j, i] = 1.0
    np.fill_diagonal(a, 0.0)
    return a


def degree(a) -> np.ndarray:
    return np.diag(np.asarray(a, dtype=np.float64).sum(axis=1))


def laplacian(g: MicGraph) -> np.ndarray:
    a = adjacency(g)
    return degree(a) - a


@dataclass(frozen=True)
class GraphBasis:
    """IGFT matrix ``u`` (eigenvectors as rows) and ascending eigenvalues."""

    u: np.ndarray
    lam: np.ndarray
    graph_hash: str = ""

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def to_dict(self) -> dict:
        return {"u": self.u.tolist(), "lam": self.lam.tolist(), "graph_hash": self.graph_hash}


def eigenbasis(l, graph_hash: str = "", kernel=None) -> GraphBasis:
    """Diagonalize a symmetric Laplacian: ``l == u.T @ diag(lam) @ u``."""
    lam, u = sym_eig(l, descending=False, kernel=kernel)
    return GraphBasis(u, lam, graph_hash)


def graph_basis(g: MicGraph, kernel=None) -> GraphBasis:
    return eigenbasis(laplacian(g), g.hash, kernel=kernel)


def ring_idft_basis(n: int) -> np.ndarray:
    """Unitary IDFT matrix with entries ``zeta**(j*k) / sqrt(n)``, ``zeta = exp(2j*pi/n)``."""
    if n < 2:
        raise ContractError(f"ring basis needs n >= 2, got {n}")
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(2j * np.pi * jk / n) / np.sqrt(n)


def ring_eigenvalues(n: int) -> np.ndarray:
    return 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(n) / n)


def eigenspace_projectors(b: GraphBasis, tol: float = 1e-8) -> list[np.ndarray]:
    """Orthogonal projectors onto each cluster of (near-)equal eigenvalues."""
    return [b.u[c].T @ b.u[c] for c in clusters(b.lam, tol)]


def ring_idft_projectors(n: int, tol: float = 1e-8) -> tuple[np.ndarray, list[np.ndarray]]:
    """Projectors built from IDFT columns grouped by the ring eigenvalue they carry.

    Returns the sorted distinct eigenvalues and one real projector per
    eigenvalue, in ascending order.
    """
    z = ring_idft_basis(n)
    lam = ring_eigenvalues(n)
    order = np.argsort(lam, kind="stable")
    lam_sorted = lam[order]
    values, projectors = [], []
    for members in clusters(lam_sorted, tol):
        cols = z[:, order[members]]
        projectors.append((cols @ cols.conj().T).real)
        values.append(float(lam_sorted[members].mean()))
    return np.array(values), projectors
