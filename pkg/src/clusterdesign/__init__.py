"""Design and evaluation of cluster-randomized experiments on networks."""

from .baselines import epsilon_net, louvain, random_balanced, spectral_fixed
from .graph import (
    Graph,
    generate_barabasi,
    generate_erdos_renyi,
    generate_geometric,
    load_edge_list,
    power_graph,
    save_edge_list,
    threshold,
)
from .metrics import (
    DesignReport,
    Heterogeneity,
    RuleOfThumb,
    bias_fraction,
    build_report,
    frontier,
    frontier_csv,
    objective_abs,
    objective_hetero,
    objective_sq,
    rule_of_thumb,
    surrogate_hetero,
    variance_proxy,
    worst_case_bias,
    xi_threshold,
)
from .optimizer import (
    SdpResult,
    SolverConfig,
    TraceMatrix,
    build_trace_matrix,
    causal_cluster,
    constrained_kmeans,
    integral_trace_value,
    kmeans,
    refine_labels,
    round_to_clusters,
    solve_sdp,
    spectral_equal_size,
    symmetric_eigen,
)
from .partition import Clustering, load_clustering, make_clustering, save_clustering, trivial_partitions
from .simulate import (
    CALIBRATED_PHI_BAR,
    NOISE_VARIANCE_GRID,
    MonteCarloResult,
    OutcomeModel,
    WorstCaseOutcome,
    assign_treatments,
    estimate,
    estimate_adjusted,
    exact_design_moments,
    monte_carlo_mse,
    simulate_outcomes,
    true_tau_of,
    worst_case_mu,
)
from .tuning import (
    PhiRange,
    phi_range_from_endogenous,
    phi_range_from_gamma,
    residual_variance,
    xi_from_psi_phi,
    xi_range,
)

__version__ = "0.1.0"
