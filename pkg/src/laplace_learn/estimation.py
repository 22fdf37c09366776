"""Laplacian estimators driven by sample distances.

The CGL solver is cyclic coordinate descent over edge weights. For an edge
with current weight ``w`` and resistance ``r``, the leave-one-out resistance
is ``r / (1 - w r)``, and the exact minimizer along that coordinate is

    w_new = max(0, 1/h - (1 - w r) / r) = max(0, w + 1/h - 1/r),

after which the edge's resistance equals ``h`` whenever ``w_new > 0``. The
inverse ``M = (L + J/p)^-1`` is kept current by Sherman-Morrison updates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import nnls

from laplace_learn.errors import (
    InvalidInputError,
    InvalidParameterError,
    NonConvergenceError,
    NonExistenceError,
    SingularityError,
)
from laplace_learn import _kernels
from laplace_learn.graph import Topology, components, is_connected, laplacian_from_weights
from laplace_learn.numerics import effective_resistances, log_pdet, rank_one_update, regularized_inverse

log = logging.getLogger(__name__)

EDGE_ORDERS = ("canonical", "reversed", "random")
# threshold on 1 - w r below which an edge is treated as a bridge
_BRIDGE_EPS = 1e-12


@dataclass(frozen=True)
class SampleStats:
    """Sample covariance ``S`` and pairwise squared distances ``H``.

    ``h_ij = S_ii + S_jj - 2 S_ij``; ``n`` is None when built from a covariance.
    """

    S: np.ndarray
    H: np.ndarray
    n: int | None = None

    @property
    def p(self) -> int:
        return self.S.shape[0]

    def h(self, t: Topology) -> np.ndarray:
        I, J = t.index_arrays()
        return self.H[I, J]

    def default_tolerance(self) -> float:
        return 1e-12 * float(np.max(np.diag(self.S), initial=0.0))


def pairwise_distances(X=None, *, S=None) -> SampleStats:
    """Build SampleStats from a ``p x n`` data matrix or a ``p x p`` covariance."""
    if (X is None) == (S is None):
        raise InvalidInputError("give exactly one of a data matrix or a covariance")
    n = None
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError(f"data matrix must be p x n with p, n >= 1, got {X.shape}")
        n = X.shape[1]
        S = (X @ X.T) / n
        S = 0.5 * (S + S.T)
    else:
        S = np.array(S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InvalidInputError(f"covariance must be square, got {S.shape}")
        scale = max(np.abs(S).max(), np.finfo(float).tiny)
        if np.abs(S - S.T).max() > 1e-10 * scale:
            raise InvalidInputError("covariance matrix is not symmetric")
        S = 0.5 * (S + S.T)
    d = np.diag(S)
    H = d[:, None] + d[None, :] - 2.0 * S
    H = np.maximum(H, 0.0)
    np.fill_diagonal(H, 0.0)
    S.setflags(write=False)
    H.setflags(write=False)
    return SampleStats(S=S, H=H, n=n)


@dataclass(frozen=True)
class ExistenceReport:
    """Outcome of the existence test.

    ``violation`` is None on success, otherwise ``(kind, (i, j))`` where kind is
    ``"edge"`` (constraint edge with zero distance), ``"data_graph"`` (nodes in
    different components of the data graph) or ``"constraint"`` (the
    constraint graph itself is disconnected).
    """

    exists: bool
    data_graph: Topology
    violation: tuple[str, tuple[int, int]] | None = None


def _split_witness(t: Topology) -> tuple[int, int]:
    labels = components(t)
    other = int(np.flatnonzero(labels != labels[0])[0])
    return (0, other)


def existence_check(stats: SampleStats, constraint: Topology, tol: float | None = None) -> ExistenceReport:
    """The estimator exists iff the data graph is connected and contains the constraint edges."""
    if constraint.p != stats.p:
        raise InvalidInputError(f"constraint has p={constraint.p}, data has p={stats.p}")
    if tol is None:
        tol = stats.default_tolerance()
    p = stats.p
    iu, ju = np.triu_indices(p, k=1)
    keep = stats.H[iu, ju] > tol
    data_graph = Topology(p, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))
    if not is_connected(data_graph):
        return ExistenceReport(False, data_graph, ("data_graph", _split_witness(data_graph)))
    h = stats.h(constraint)
    bad = np.flatnonzero(h <= tol)
    if bad.size:
        return ExistenceReport(False, data_graph, ("edge", constraint.edges[int(bad[0])]))
    if not is_connected(constraint):
        return ExistenceReport(False, data_graph, ("constraint", _split_witness(constraint)))
    return ExistenceReport(True, data_graph)


def describe_violation(report: ExistenceReport) -> str:
    if report.violation is None:
        return "estimator exists"
    kind, (i, j) = report.violation
    a, b = i + 1, j + 1
    if kind == "edge":
        return f"constraint edge ({a}, {b}) has zero sample distance"
    if kind == "data_graph":
        if report.data_graph.m == 0:
            return f"data graph is empty; nodes {a} and {b} are disconnected"
        return f"data graph is disconnected; nodes {a} and {b} lie in different components"
    return f"constraint graph is disconnected; nodes {a} and {b} lie in different components"


@dataclass(frozen=True)
class SolverConfig:
    kkt_tolerance: float = 1e-8
    max_sweeps: int = 10000
    existence_tolerance: float | None = None
    edge_order: str = "canonical"
    order_seed: int = 0
    backend: str = "compiled"

    def __post_init__(self):
        if not self.kkt_tolerance > 0 or self.max_sweeps < 1:
            raise InvalidParameterError("kkt_tolerance and max_sweeps must be positive")
        if self.existence_tolerance is not None and not self.existence_tolerance > 0:
            raise InvalidParameterError("existence_tolerance must be positive")
        if self.edge_order not in EDGE_ORDERS:
            raise InvalidParameterError(f"edge_order must be one of {EDGE_ORDERS}")
        if self.backend not in ("compiled", "python"):
            raise InvalidParameterError("backend must be 'compiled' or 'python'")


@dataclass
class SolverReport:
    topology: Topology
    weights: np.ndarray
    laplacian: np.ndarray
    resistances: np.ndarray
    kkt_stationarity: float
    kkt_dual_feasibility: float
    sweeps: int
    objective: float
    config: SolverConfig = field(default_factory=SolverConfig)

    def as_dict(self) -> dict:
        return {
            "p": self.topology.p,
            "edges": self.topology.m,
            "active_edges": int(np.count_nonzero(self.weights > 0)),
            "objective": self.objective,
            "kkt_stationarity": self.kkt_stationarity,
            "kkt_dual_feasibility": self.kkt_dual_feasibility,
            "sweeps": self.sweeps,
            "kkt_tolerance": self.config.kkt_tolerance,
            "max_sweeps": self.config.max_sweeps,
            "edge_order": self.config.edge_order,
        }


def _residuals(w, r, h) -> tuple[float, float]:
    active = w > 0
    stat = float(np.max(np.abs(h[active] - r[active]) / h[active], initial=0.0))
    dual = float(np.max(np.maximum(0.0, r - h) / h, initial=0.0))
    return stat, dual


def kkt_residual(L_hat, stats: SampleStats, E: Topology) -> tuple[float, float]:
    """``(stationarity, dual_feasibility)``, both relative to ``h_e``."""
    L_hat = np.asarray(L_hat, dtype=float)
    I, J = E.index_arrays()
    w = np.maximum(-L_hat[I, J], 0.0)
    r = effective_resistances(regularized_inverse(L_hat), E.edges)
    return _residuals(w, r, stats.h(E))


def _require_exists(stats, constraint, tol):
    report = existence_check(stats, constraint, tol)
    if not report.exists:
        raise NonExistenceError(describe_violation(report), witness=report.violation)
    return report


def _finish(E, w, h, sweeps, config) -> SolverReport:
    L = laplacian_from_weights(E, w)
    r = effective_resistances(regularized_inverse(L), E.edges)
    stat, dual = _residuals(w, r, h)
    objective = -log_pdet(L) + float(np.dot(w, h))
    return SolverReport(E, w, L, r, stat, dual, sweeps, objective, config)


def _sweep_order(m, config, sweep) -> np.ndarray:
    if config.edge_order == "canonical":
        return np.arange(m)
    if config.edge_order == "reversed":
        return np.arange(m - 1, -1, -1)
    return np.random.default_rng([config.order_seed, sweep]).permutation(m)


def _python_sweep(inv, w, inv_h, edges, order):
    for k in order.tolist():
        i, j = edges[k]
        M = inv.M
        rk = M[i, i] + M[j, j] - 2.0 * M[i, j]
        wk = w[k]
        if 1.0 - wk * rk <= _BRIDGE_EPS:
            new = inv_h[k]
        else:
            new = max(0.0, wk + inv_h[k] - 1.0 / rk)
        if new != wk:
            rank_one_update(inv, (i, j), new - wk)
            w[k] = new


def _compiled_sweep(inv, w, inv_h, I, J, order, probe):
    pos, drift = 0, 0
    while pos < order.shape[0]:
        pos, drift, status = _kernels.cd_sweep(inv.M, inv.L, w, inv_h, I, J, order, pos, drift, probe)
        if status == _kernels.BRIDGE:
            raise SingularityError("coordinate update would disconnect the graph")
        if status == _kernels.REFRESH:
            log.debug("drift probe exceeded tolerance; refactorizing")
            inv.refresh()


def estimate_cgl(stats: SampleStats, constraint: Topology, config: SolverConfig | None = None) -> SolverReport:
    """Minimize ``-log det+(L) + tr(L S)`` over Laplacians supported on ``constraint``.

    Starts from ``w_e = 1/h_e`` and sweeps the edges until both relative KKT
    residuals drop below ``config.kkt_tolerance``. The inverse is refactorized
    from scratch before each residual check.
    """
    config = config or SolverConfig()
    _require_exists(stats, constraint, config.existence_tolerance)
    E = constraint
    h = stats.h(E)
    inv_h = 1.0 / h
    w = inv_h.copy()
    I, J = E.index_arrays()
    inv = regularized_inverse(laplacian_from_weights(E, w))
    probe = np.random.default_rng(0).choice([-1.0, 1.0], size=E.p)
    tol = config.kkt_tolerance
    for sweep in range(config.max_sweeps + 1):
        if sweep:
            inv.L = laplacian_from_weights(E, w)
            inv.refresh()
        M = inv.M
        d = np.diag(M)
        r = d[I] + d[J] - 2.0 * M[I, J]
        stat, dual = _residuals(w, r, h)
        if stat <= tol and dual <= tol:
            break
        if sweep == config.max_sweeps:
            raise NonConvergenceError(
                f"no convergence after {sweep} sweeps (stationarity={stat:.3g}, dual={dual:.3g})",
                stationarity=stat, dual_feasibility=dual, sweeps=sweep,
            )
        order = _sweep_order(E.m, config, sweep)
        if config.backend == "python":
            _python_sweep(inv, w, inv_h, E.edges, order)
        else:
            _compiled_sweep(inv, w, inv_h, I, J, order, probe)
    return _finish(E, w, h, sweep, config)


def estimate_tree_cgl(stats: SampleStats, tree: Topology) -> SolverReport:
    """Closed form on a spanning tree: ``w_e = 1 / h_e``."""
    if tree.p != stats.p:
        raise InvalidParameterError("tree and data have different node counts")
    if not tree.is_tree():
        raise InvalidParameterError("topology is not a spanning tree")
    h = stats.h(tree)
    bad = np.flatnonzero(h <= 0)
    if bad.size:
        e = tree.edges[int(bad[0])]
        raise NonExistenceError(f"tree edge ({e[0] + 1}, {e[1] + 1}) has zero sample distance", witness=("edge", e))
    return _finish(tree, 1.0 / h, h, 0, SolverConfig())


def cgl_weight_bound(stats: SampleStats, E: Topology) -> np.ndarray:
    h = stats.h(E)
    if np.any(h <= 0):
        e = E.edges[int(np.flatnonzero(h <= 0)[0])]
        raise NonExistenceError("zero sample distance on a constraint edge", witness=("edge", e))
    return 1.0 / h


@dataclass(frozen=True)
class ProbeResult:
    hit_cap: bool
    l1_norm: float
    sweeps: int
    objective_trace: tuple[float, ...]


def divergence_probe(stats: SampleStats, constraint: Topology, cap: float = 1e6,
                     max_sweeps: int = 200, tol: float | None = None) -> ProbeResult:
    """Run capped coordinate descent with no existence guard.

    Coordinates with zero sample distance have no finite minimizer (the
    objective decreases without bound along them), so they are doubled each
    sweep; the rest follow the usual exact update. Stops once ``||w||_1``
    exceeds ``cap`` or after ``max_sweeps`` sweeps.
    """
    if not is_connected(constraint):
        raise InvalidParameterError("probe needs a connected constraint graph")
    if tol is None:
        tol = stats.default_tolerance()
    E = constraint
    h = stats.h(E)
    degenerate = h <= tol
    w = np.where(degenerate, 1.0, 1.0 / np.where(degenerate, 1.0, h))
    inv = regularized_inverse(laplacian_from_weights(E, w))

    def objective():
        return -log_pdet(inv.L) + float(np.dot(w, h))

    trace = [objective()]
    sweeps = 0
    while w.sum() <= cap and sweeps < max_sweeps:
        sweeps += 1
        for k, (i, j) in enumerate(E.edges):
            M = inv.M
            rk = M[i, i] + M[j, j] - 2.0 * M[i, j]
            if degenerate[k]:
                new = 2.0 * w[k]
            elif 1.0 - w[k] * rk <= _BRIDGE_EPS:
                new = 1.0 / h[k]
            else:
                new = max(0.0, w[k] + 1.0 / h[k] - 1.0 / rk)
            if new != w[k]:
                rank_one_update(inv, (i, j), new - w[k])
                w[k] = new
        inv.L = laplacian_from_weights(E, w)
        inv.refresh()
        trace.append(objective())
    return ProbeResult(bool(w.sum() > cap), float(w.sum()), sweeps, tuple(trace))


# --- generalized graph Laplacian (M-matrix) estimator -------------------------


def _ggl_K(S, alpha):
    p = S.shape[0]
    return S + alpha * (np.eye(p) - np.ones((p, p)))


def max_correlation(S) -> float:
    S = np.asarray(S, dtype=float)
    d = np.sqrt(np.diag(S))
    if np.any(d <= 0):
        return math.inf
    C = S / np.outer(d, d)
    np.fill_diagonal(C, -np.inf)
    return float(C.max()) if S.shape[0] > 1 else -math.inf


def ggl_weight_bound(stats: SampleStats, alpha: float = 0.0) -> np.ndarray:
    """Off-diagonal bounds ``max(0, K_ij) / (K_ii K_jj - K_ij^2)``, ``K = S + alpha (I - 11^T)``."""
    K = _ggl_K(stats.S, alpha)
    d = np.diag(K)
    denom = np.outer(d, d) - K ** 2
    pos = K > 0
    np.fill_diagonal(pos, False)
    if np.any(denom[pos] <= 0):
        raise InvalidInputError("degenerate bound: a pair has |correlation| >= 1")
    B = np.zeros_like(K)
    B[pos] = K[pos] / denom[pos]
    return B


def ggl_kkt_residual(theta, K) -> tuple[float, float]:
    """``(stationarity, dual_feasibility)`` of the GGL optimality system.

    With ``Lambda = theta^-1 - K``: stationarity covers the diagonal and the
    nonzero off-diagonals (where Lambda must vanish); dual feasibility covers
    ``Lambda_ij >= 0`` on zero entries and the sign constraint on theta. All
    entries are scaled by ``sqrt(K_ii K_jj)``.
    """
    p = K.shape[0]
    W = linalg.inv(theta)
    Lam = W - K
    scale = np.sqrt(np.outer(np.diag(K), np.diag(K)))
    rel = Lam / scale
    off = ~np.eye(p, dtype=bool)
    active = off & (theta < 0)
    inactive = off & ~active
    stat = max(float(np.abs(np.diag(rel)).max()), float(np.abs(rel[active]).max(initial=0.0)))
    dual = float(np.maximum(0.0, -rel[inactive]).max(initial=0.0))
    dual = max(dual, float(np.maximum(0.0, theta[off] * scale[off]).max(initial=0.0)))
    return stat, dual


def estimate_ggl(stats: SampleStats, alpha: float = 0.0, config: SolverConfig | None = None) -> np.ndarray:
    """Sign-constrained Gaussian MLE with an off-diagonal l1 penalty.

    Block coordinate descent over columns: each step solves the
    nonnegative least-squares subproblem for one column of ``-theta`` exactly
    and refreshes ``theta^-1`` by the partitioned inverse formulas.
    """
    config = config or SolverConfig()
    if alpha < 0:
        raise InvalidParameterError("alpha must be nonnegative")
    S = stats.S
    p = stats.p
    if np.any(np.diag(S) <= 0):
        raise NonExistenceError("a variable has zero sample variance")
    rho = max_correlation(S)
    if p > 1 and rho >= 1:
        raise NonExistenceError(f"max sample correlation {rho:.6g} >= 1")
    K = _ggl_K(S, alpha)
    theta = np.diag(1.0 / np.diag(K))
    if p == 1:
        return theta
    W = np.diag(np.diag(K)).astype(float)
    tol = config.kkt_tolerance
    idx = np.arange(p)
    for sweep in range(config.max_sweeps + 1):
        if sweep:
            W = linalg.inv(theta)
            W = 0.5 * (W + W.T)
        stat, dual = ggl_kkt_residual(theta, K)
        if stat <= tol and dual <= tol:
            return theta
        if sweep == config.max_sweeps:
            raise NonConvergenceError(
                f"GGL: no convergence after {sweep} sweeps", stationarity=stat, dual_feasibility=dual, sweeps=sweep
            )
        for u in range(p):
            rest = idx != u
            W11 = W[np.ix_(rest, rest)]
            w12 = W[rest, u]
            A = W11 - np.outer(w12, w12) / W[u, u]  # inverse of theta[rest, rest]
            A = 0.5 * (A + A.T)
            k22 = K[u, u]
            k12 = K[rest, u]
            # min over beta >= 0 of k22 beta' A beta - 2 k12' beta, with theta12 = -beta
            C = linalg.cholesky(k22 * A, lower=False)
            rhs = linalg.solve_triangular(C, k12, trans="T", lower=False)
            beta, _ = nnls(C, rhs, maxiter=50 * p)
            t12 = -beta
            At = A @ t12
            theta[rest, u] = t12
            theta[u, rest] = t12
            theta[u, u] = 1.0 / k22 + t12 @ At
            W[u, u] = k22
            W[rest, u] = -k22 * At
            W[u, rest] = -k22 * At
            W[np.ix_(rest, rest)] = A + k22 * np.outer(At, At)
    return theta
