"""Exception hierarchy shared by all modules."""


class LaplaceLearnError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(LaplaceLearnError, ValueError):
    pass


class InvalidInputError(LaplaceLearnError, ValueError):
    pass


class SingularityError(LaplaceLearnError, ArithmeticError):
    """The Laplacian belongs to a disconnected graph, so L + J/p is singular."""


class BridgeRemovalError(SingularityError):
    """A rank-one downdate would remove a bridge and disconnect the graph."""


class NonExistenceError(LaplaceLearnError):
    """The estimator does not exist for the given data and constraint set.

    ``witness`` is either an edge ``(i, j)`` of the constraint set with zero
    sample distance, or a pair of nodes lying in different components of the
    data graph. Node indices are 0-based.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NonConvergenceError(LaplaceLearnError):
    def __init__(self, message, stationarity=float("nan"), dual_feasibility=float("nan"), sweeps=0):
        super().__init__(message)
        self.stationarity = stationarity
        self.dual_feasibility = dual_feasibility
        self.sweeps = sweeps
