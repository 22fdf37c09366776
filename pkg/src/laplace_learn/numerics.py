"""Dense linear algebra for Laplacians of connected graphs.

Everything here goes through the regularized inverse ``M = (L + J/p)^-1``;
the pseudo-inverse is ``M - J/p`` and ``det(L + J/p)`` is the product of the
nonzero eigenvalues of ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from laplace_learn.errors import BridgeRemovalError, InvalidInputError, SingularityError
from laplace_learn.graph import Topology, is_connected

# relative pivot threshold below which L + J/p is treated as singular
_PIVOT_RTOL = 1e-13


def _check_laplacian(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise InvalidInputError(f"Laplacian must be square, got shape {L.shape}")
    return L


def support_topology(L: np.ndarray) -> Topology:
    p = L.shape[0]
    iu, ju = np.triu_indices(p, k=1)
    keep = L[iu, ju] < 0
    return Topology(p, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def _factor(L: np.ndarray):
    p = L.shape[0]
    if not is_connected(support_topology(L)):
        raise SingularityError("Laplacian of a disconnected graph: L + J/p is singular")
    A = L + 1.0 / p
    try:
        c, low = linalg.cho_factor(A, lower=False, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularityError(f"L + J/p is not positive definite: {exc}") from exc
    piv = np.diag(c)
    if piv.min() ** 2 <= _PIVOT_RTOL * np.abs(np.diag(A)).max():
        raise SingularityError("L + J/p is numerically singular")
    return c, low


@dataclass
class RegularizedInverse:
    """``M = (L + J/p)^-1`` together with the Laplacian it inverts.

    ``drift_counter`` counts rank-one updates since the last full factorization;
    once it reaches ``p`` the next update refactorizes from ``L``.
    """

    M: np.ndarray
    L: np.ndarray
    drift_counter: int = 0
    refreshes: int = field(default=0, repr=False)

    @property
    def p(self) -> int:
        return self.M.shape[0]

    def pinv(self) -> np.ndarray:
        return self.M - 1.0 / self.p

    def refresh(self) -> None:
        c, low = _factor(self.L)
        self.M = linalg.cho_solve((c, low), np.eye(self.p))
        self.M = 0.5 * (self.M + self.M.T)
        self.drift_counter = 0
        self.refreshes += 1

    def residual(self) -> float:
        """``||(L + J/p) M - I||_inf``."""
        R = (self.L + 1.0 / self.p) @ self.M - np.eye(self.p)
        return float(np.abs(R).sum(axis=1).max())

    def copy(self) -> "RegularizedInverse":
        return RegularizedInverse(self.M.copy(), self.L.copy(), self.drift_counter)


def regularized_inverse(L) -> RegularizedInverse:
    L = _check_laplacian(L)
    out = RegularizedInverse(np.empty_like(L), L.copy())
    out.refresh()
    out.refreshes = 0
    return out


def log_pdet(L) -> float:
    """Log pseudo-determinant, ``log det(L + J/p)``, from the Cholesky diagonal."""
    c, _ = _factor(_check_laplacian(L))
    return float(2.0 * np.log(np.diag(c)).sum())


def spanning_tree_weight(L) -> float:
    """Weighted spanning-tree count ``det(L + J/p) / p``; 0 for disconnected graphs."""
    L = _check_laplacian(L)
    try:
        lp = log_pdet(L)
    except SingularityError:
        return 0.0
    return math.exp(lp - math.log(L.shape[0]))


def effective_resistances(M, pairs) -> np.ndarray:
    """Resistance ``M_ii + M_jj - 2 M_ij`` for each ``(i, j)``; exact 0 when ``i == j``."""
    if isinstance(M, RegularizedInverse):
        M = M.M
    pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
    I, J = pairs[:, 0], pairs[:, 1]
    d = np.diag(M)
    r = d[I] + d[J] - 2.0 * M[I, J]
    r[I == J] = 0.0
    return r


def rank_one_update(inv: RegularizedInverse, e, delta: float) -> RegularizedInverse:
    """Apply ``w_e += delta`` to ``inv`` in place (Sherman-Morrison) and return it.

    Raises BridgeRemovalError when ``1 + delta * r_e`` vanishes, i.e. the update
    would delete a bridge.
    """
    if delta == 0.0:
        return inv
    i, j = e
    M = inv.M
    r = M[i, i] + M[j, j] - 2.0 * M[i, j]
    denom = 1.0 + delta * r
    if denom <= 1e-12 * (1.0 + abs(delta) * r):
        raise BridgeRemovalError(f"update of edge {e} by {delta} disconnects the graph")
    L = inv.L
    L[i, i] += delta
    L[j, j] += delta
    L[i, j] -= delta
    L[j, i] -= delta
    if inv.drift_counter + 1 >= inv.p:
        inv.refresh()
        return inv
    u = M[:, i] - M[:, j]
    M -= (delta / denom) * np.outer(u, u)
    inv.drift_counter += 1
    return inv
