"""Stein-type losses between Laplacians of connected graphs, and the
deviation statistic that controls the estimator's error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from laplace_learn.errors import InvalidInputError, SingularityError
from laplace_learn.graph import Topology, union, weights_from_laplacian
from laplace_learn.numerics import effective_resistances, log_pdet, regularized_inverse


def _pair(L1, L2):
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    if L1.shape != L2.shape or L1.ndim != 2 or L1.shape[0] != L1.shape[1]:
        raise InvalidInputError(f"shape mismatch: {L1.shape} vs {L2.shape}")
    if L1.shape[0] < 2:
        raise InvalidInputError("losses need p >= 2")
    try:
        inv1, inv2 = regularized_inverse(L1), regularized_inverse(L2)
    except SingularityError as exc:
        raise InvalidInputError(f"both Laplacians must be connected: {exc}") from exc
    return L1, L2, inv1, inv2


def _stein(L1, L2, pinv2, p):
    return (float(np.sum(L1 * pinv2)) - log_pdet(L1) + log_pdet(L2)) / (p - 1) - 1.0


def stein_loss(L1, L2) -> float:
    """``(tr(L1 L2^+) - log det+ L1 + log det+ L2) / (p - 1) - 1``."""
    L1, L2, _, inv2 = _pair(L1, L2)
    return _stein(L1, L2, inv2.pinv(), L1.shape[0])


def trace_form(A, B, A_pinv, B_pinv) -> float:
    """``tr((A - B)(B^+ - A^+)) / (2 (p - 1))``; works for either argument order
    or for pseudo-inverses passed in place of the Laplacians."""
    p = A.shape[0]
    return float(np.sum((A - B) * (B_pinv - A_pinv))) / (2.0 * (p - 1))


def edge_form(L1, L2, M1, M2) -> float:
    """Sum over the union support of ``(w1 - w2)(r2 - r1) / (2 (p - 1))``."""
    p = L1.shape[0]
    t1, _ = weights_from_laplacian(L1)
    t2, _ = weights_from_laplacian(L2)
    t = union(t1, t2)
    I, J = t.index_arrays()
    w1 = -L1[I, J]
    w2 = -L2[I, J]
    r1 = effective_resistances(M1, t.edges)
    r2 = effective_resistances(M2, t.edges)
    return float(np.dot(w1 - w2, r2 - r1)) / (2.0 * (p - 1))


@dataclass(frozen=True)
class LossReport:
    stein_forward: float
    stein_backward: float
    symmetrized: float
    trace_form: float
    edge_form: float
    cross_check_gap: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def sym_stein_loss(L1, L2) -> LossReport:
    L1, L2, inv1, inv2 = _pair(L1, L2)
    p = L1.shape[0]
    P1, P2 = inv1.pinv(), inv2.pinv()
    fwd = _stein(L1, L2, P2, p)
    bwd = _stein(L2, L1, P1, p)
    tf = trace_form(L1, L2, P1, P2)
    ef = edge_form(L1, L2, inv1.M, inv2.M)
    return LossReport(fwd, bwd, tf, tf, ef, abs(tf - ef))


def delta_E(stats, Lstar, E: Topology) -> float:
    """``max_e |1 - h_e / r*_e|`` over the constraint edges."""
    r = effective_resistances(regularized_inverse(Lstar), E.edges)
    if r.size == 0:
        return 0.0
    return float(np.max(np.abs(1.0 - stats.h(E) / r)))


@dataclass(frozen=True)
class Prop1Result:
    delta: float
    loss: float
    inequality_holds: bool
    bound_3delta_applicable: bool
    bound_3delta_holds: bool | None


def prop1_check(stats, Lstar, Lhat, E: Topology, slack: float = 1e-10) -> Prop1Result:
    """Check ``loss <= delta (3/2 + loss)`` and, when ``delta < 1/2``, ``loss <= 3 delta``.

    ``slack`` absorbs roundoff: each inequality is tested with that much
    absolute room.
    """
    delta = delta_E(stats, Lstar, E)
    loss = sym_stein_loss(Lhat, Lstar).symmetrized
    holds = loss <= delta * (1.5 + loss) + slack
    applicable = delta < 0.5
    three = (loss <= 3.0 * delta + slack) if applicable else None
    return Prop1Result(delta, loss, bool(holds), applicable, three)
