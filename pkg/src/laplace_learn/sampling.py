"""Seeded sampling from Gaussians whose precision matrix is a graph Laplacian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from laplace_learn.errors import InvalidParameterError, SingularityError
from laplace_learn.numerics import regularized_inverse


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    trial_index: int = 0

    def generator(self) -> np.random.Generator:
        # Philox is counter-based; the (seed, trial) pair is hashed by SeedSequence
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1), int(self.trial_index)])
        return np.random.Generator(np.random.Philox(ss))


def laplacian_factor(Lstar) -> np.ndarray:
    """``B`` (p x (p-1)) with ``B B^T = L^+``, from the nonzero eigenpairs of ``L``.

    The null eigenpair is the one whose eigenvector overlaps most with the
    all-ones vector, not the smallest in magnitude.
    """
    L = np.asarray(Lstar, dtype=float)
    p = L.shape[0]
    regularized_inverse(L)  # raises SingularityError when disconnected
    lam, U = np.linalg.eigh(L)
    null = int(np.argmax(np.abs(U.sum(axis=0))))
    keep = np.arange(p) != null
    lam, U = lam[keep], U[:, keep]
    if np.any(lam <= 0):
        raise SingularityError("Laplacian has more than one null direction")
    recon = (U * lam) @ U.T
    if np.abs(recon - L).max() > 1e-8 * max(np.abs(L).max(), 1.0):
        raise SingularityError("eigendecomposition failed to reconstruct the Laplacian")
    return U / np.sqrt(lam)


def sample_lgmrf(Lstar, n: int, cfg: SamplerConfig | None = None) -> np.ndarray:
    """``p x n`` matrix with i.i.d. ``N(0, L^+)`` columns.

    Draws are consumed column by column, so the first ``k`` columns of an
    ``n``-column sample use the same normals as a ``k``-column sample.
    """
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    cfg = cfg or SamplerConfig()
    B = laplacian_factor(Lstar)
    Z = cfg.generator().standard_normal((n, B.shape[1]))
    return B @ Z.T


def sample_covariance(X) -> np.ndarray:
    """``X X^T / n`` without centering (the model is zero mean)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidParameterError("need a p x n matrix with n >= 1")
    S = (X @ X.T) / X.shape[1]
    return 0.5 * (S + S.T)
