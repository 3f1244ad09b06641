"""Multiple testing under dependence with MRF-coupled two-group mixtures.

Hypotheses live on the nodes of a graph; their null/alternative labels follow
a binary Markov random field and each observed statistic is standard normal
under the null and N(mu1, sigma1^2) under the alternative. The local index of
significance LIS_i = P(theta_i = 0 | x) is thresholded by a step-up rule that
controls the false discovery rate.
"""

from .errors import (
    DegeneratePosteriorError,
    DegenerateTableError,
    DivergenceError,
    GraphSizeError,
    MissingParameterError,
    ScenarioError,
    StructureError,
)
from .graph import (
    EdgeClass,
    Graph,
    R2Record,
    build_chain,
    build_grid,
    build_max_r2_graph,
    build_perfect_binary_tree,
)
from .inference import (
    McmcConfig,
    PairwiseMarginals,
    Posterior,
    bp_marginals,
    enumerate_marginals,
    gibbs_conditional,
    gibbs_marginals,
    posterior,
)
from .io import __version__
from .learning import EmConfig, EmResult, PcdConfig, SufficientStats, data_stats, em_fit, pcd_fit, update_psi
from .model import (
    EmissionParams,
    ModelParams,
    coupling_to_matrix,
    log_emission,
    log_joint_unnormalized,
    log_prior_unnormalized,
    logistic,
    matrix_to_coupling,
)
from .procedures import (
    CountsTable,
    Decision,
    adaptive_p,
    bh,
    catt,
    counts_from_truth,
    lis_stepup,
    local_fdr_scores,
    two_proportion_z,
    z_to_pvalue,
)
from .sampling import PriorSampleConfig, sample_observations, sample_prior
from .seeds import child_seed
from .simulation import MetricsReport, Scenario, roc_pr_points, run_replication, run_scenario

_SUBMODULES = {"errors", "genetic", "graph", "inference", "io", "learning", "model", "procedures", "sampling", "seeds", "simulation"}
__all__ = sorted(name for name in dir() if not name.startswith("_") and name not in _SUBMODULES)
