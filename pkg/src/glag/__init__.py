"""Group-lasso graph matching and alignment-free joint graphical lasso.

The matcher relaxes graph matching to the Birkhoff polytope with a
group-lasso cost that couples ``(AP)_ij`` and ``(PB)_ij``, solves it with a
linearized ADMM, and rounds to a permutation.  Frobenius-norm baselines,
random graph generators, sparse inverse covariance estimators and an
experiment harness are included.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .baselines import BaselineConfig, faq_match, qcp_match
from .errors import ConvergenceError, FormatError, ParameterError
from .graphs import (
    DEFAULT_WEIGHTS,
    Constant,
    Gaussian,
    Graph,
    NoiseSpec,
    Uniform,
    add_noise,
    assign_weights,
    gen_barabasi_albert,
    gen_bter_geometric,
    gen_erdos_renyi,
    permute_graph,
    read_graph,
    read_permutation,
    write_graph,
    write_permutation,
)
from .inference import (
    empirical_covariance,
    gen_gmrf_data,
    graphical_lasso,
    joint_graphical_lasso,
    joint_infer_unaligned,
)
from .matcher import GlagConfig, MatchResult, glag_match, group_objective, matching_error
from .polytope import Permutation, project_doubly_stochastic, round_to_permutation, spectral_norm

__all__ = [
    "BACKEND", "BaselineConfig", "Constant", "ConvergenceError", "DEFAULT_WEIGHTS",
    "FormatError", "Gaussian", "GlagConfig", "Graph", "MatchResult", "NoiseSpec",
    "ParameterError", "Permutation", "Uniform", "add_noise", "assign_weights",
    "empirical_covariance", "faq_match", "gen_barabasi_albert", "gen_bter_geometric",
    "gen_erdos_renyi", "gen_gmrf_data", "glag_match", "graphical_lasso", "group_objective",
    "joint_graphical_lasso", "joint_infer_unaligned", "matching_error", "permute_graph",
    "project_doubly_stochastic", "qcp_match", "read_graph", "read_permutation",
    "round_to_permutation", "spectral_norm", "write_graph", "write_permutation",
]
