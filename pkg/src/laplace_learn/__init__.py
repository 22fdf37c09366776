"""Laplacian-constrained precision matrix estimation under Stein's loss."""

from laplace_learn.errors import (
    InvalidInputError,
    InvalidParameterError,
    LaplaceLearnError,
    NonConvergenceError,
    NonExistenceError,
    SingularityError,
)
from laplace_learn.graph import (
    Topology,
    edge_vector,
    is_connected,
    laplacian_from_weights,
    make_graph,
    weights_from_laplacian,
)
from laplace_learn.numerics import (
    RegularizedInverse,
    effective_resistances,
    log_pdet,
    rank_one_update,
    regularized_inverse,
    spanning_tree_weight,
)
from laplace_learn.estimation import (
    ExistenceReport,
    SampleStats,
    SolverConfig,
    SolverReport,
    cgl_weight_bound,
    divergence_probe,
    estimate_cgl,
    estimate_ggl,
    estimate_tree_cgl,
    existence_check,
    ggl_kkt_residual,
    ggl_weight_bound,
    kkt_residual,
    pairwise_distances,
)
from laplace_learn.losses import (
    LossReport,
    Prop1Result,
    delta_E,
    prop1_check,
    stein_loss,
    sym_stein_loss,
)
from laplace_learn.sampling import SamplerConfig, sample_covariance, sample_lgmrf

__version__ = "0.1.0"
