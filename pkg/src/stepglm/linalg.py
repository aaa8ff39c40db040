"""Dense symmetric linear algebra for p×p information matrices.

Own Cholesky/solve/inverse rather than a LAPACK binding: matrices here
are tiny, and a failed pivot must surface the offending index as a
modelling error instead of silently regularising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RankDeficiencyError


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix in packed lower-triangular (row-major) storage."""

    p: int
    packed: np.ndarray  # length p(p+1)/2

    def __post_init__(self):
        packed = np.asarray(self.packed, dtype=float)
        object.__setattr__(self, "packed", packed)
        if packed.shape != (self.p * (self.p + 1) // 2,):
            raise ConfigError("packed storage length does not match dimension")
        if not np.all(np.isfinite(packed)):
            raise ConfigError("matrix entries must be finite")

    @classmethod
    def from_full(cls, a, rtol: float = 1e-8) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("expected a square matrix")
        scale = max(np.max(np.abs(a)), 1.0)
        if np.max(np.abs(a - a.T)) > rtol * scale:
            raise ConfigError("matrix is not symmetric")
        p = a.shape[0]
        idx = np.tril_indices(p)
        return cls(p, ((a + a.T) / 2.0)[idx])

    def full(self) -> np.ndarray:
        a = np.zeros((self.p, self.p))
        a[np.tril_indices(self.p)] = self.packed
        return a + np.tril(a, -1).T

    def diag(self) -> np.ndarray:
        return np.diag(self.full())

    def scaled(self, c: float) -> "SymMatrix":
        return SymMatrix(self.p, self.packed * c)


def _as_full(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.full()
    return np.asarray(a, dtype=float)


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L·Lᵀ = a; raises on a non-PD pivot."""
    a = _as_full(a)
    p = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(p):
        d = a[j, j] - lower[j, :j] @ lower[j, :j]
        # relative pivot floor so exactly collinear designs fail loudly
        # instead of producing astronomical coefficients
        if not np.isfinite(d) or d <= 1e-12 * max(a[j, j], 0.0):
            raise RankDeficiencyError(j)
        lower[j, j] = np.sqrt(d)
        if j + 1 < p:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(a, b) -> np.ndarray:
    """Solve a·x = b for symmetric positive-definite a."""
    lower = cholesky(a)
    b = np.asarray(b, dtype=float)
    p = lower.shape[0]
    # forward substitution L z = b
    z = np.zeros_like(b, dtype=float)
    for i in range(p):
        z[i] = (b[i] - lower[i, :i] @ z[:i]) / lower[i, i]
    # back substitution Lᵀ x = z
    x = np.zeros_like(z)
    for i in range(p - 1, -1, -1):
        x[i] = (z[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def inverse_spd(a) -> SymMatrix:
    """Inverse of a symmetric positive-definite matrix."""
    full = _as_full(a)
    p = full.shape[0]
    inv = np.column_stack([solve_spd(full, e) for e in np.eye(p)])
    return SymMatrix.from_full((inv + inv.T) / 2.0)
