"""Deterministic symmetric eigendecomposition.

Both the graph basis and the PCA basis go through :func:`sym_eig`, so
they share one set of conventions:

* eigenvectors are returned as *rows*;
* each row is sign-normalized so its largest-magnitude entry is positive
  (entries within ``SIGN_TIE_RTOL`` of the maximum count as tied, the
  lowest index wins);
* eigenvalues closer than the cluster tolerance form a degenerate
  cluster. The solver's basis for such a cluster is an arbitrary rotation,
  so it is replaced by Gram-Schmidt over the columns of the cluster's
  projector taken in index order (rotation-independent, and localized
  on the lowest-indexed channels that the eigenspace touches). Rows are
  then ordered by the index of their largest-magnitude entry while the
  eigenvalue list stays sorted.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from .errors import ContractError

SYMMETRY_TOL = 1e-12
SIGN_TIE_RTOL = 1e-9
JACOBI_RTOL = 1e-12


def cluster_tolerance(w: np.ndarray) -> float:
    return 1e-10 * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)


def peak_index(row: np.ndarray) -> int:
    mag = np.abs(row)
    top = mag.max()
    return int(np.flatnonzero(mag >= top * (1.0 - SIGN_TIE_RTOL))[0])


def fix_signs(rows: np.ndarray) -> np.ndarray:
    rows = np.array(rows, dtype=np.float64, copy=True)
    for i, row in enumerate(rows):
        if row[peak_index(row)] < 0:
            rows[i] = -row
    return rows


def clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    """Split sorted eigenvalues into runs whose consecutive gaps are <= tol."""
    groups: list[list[int]] = []
    for i in range(len(w)):
        if groups and abs(w[i] - w[i - 1]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def canonical_cluster_basis(rows: np.ndarray, min_residual: float = 1e-6) -> np.ndarray:
    """Rotation-independent orthonormal basis for the span of ``rows``."""
    d, n = rows.shape
    proj = rows.T @ rows
    basis: list[np.ndarray] = []
    for j in range(n):
        r = proj[:, j].copy()
        for _ in range(2):
            for b in basis:
                r -= (b @ r) * b
        norm = float(np.linalg.norm(r))
        if norm > min_residual:
            basis.append(r / norm)
            if len(basis) == d:
                return np.array(basis)
    return rows


def sym_eig(m, descending=False, kernel=None):
    """Eigendecomposition ``m = rows.T @ diag(w) @ rows`` with fixed conventions.

    Returns ``(w, rows)``. ``kernel`` selects a jacobi implementation
    (defaults to the active backend).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix has non-finite entries")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ContractError(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")
    m = 0.5 * (m + m.T)
    jacobi = kernel or _backend.jacobi_eigh
    w, v, _ = jacobi(m, JACOBI_RTOL)
    order = np.argsort(-w if descending else w, kind="stable")
    w = w[order]
    rows = fix_signs(v[:, order].T)

    out = np.empty_like(rows)
    for members in clusters(w, cluster_tolerance(w)):
        if len(members) > 1:
            rows[members] = fix_signs(canonical_cluster_basis(rows[members]))
        ranked = sorted(members, key=lambda i: (peak_index(rows[i]), i))
        out[members] = rows[ranked]
    return w, out
