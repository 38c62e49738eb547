"""Critical geometric random graphs on the 2-torus: exploration, limits, checks."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .branching import OffspringLaw, max_tail_estimate, sample_offspring, simulate_tree, simulate_trees
from .exploration import (
    BudgetError,
    ExplorationTrace,
    component_sizes,
    explore,
    explore_batch,
    explore_fast,
    rescale_walk,
    tree_distance,
)
from .graph import (
    C_CRIT,
    AdjacencyGraph,
    GraphParams,
    RevealOracle,
    expected_degree_sum,
    materialize_graph,
    neighbor_prob_mass,
    reveal_neighbors,
    second_moment_sum,
)
from .limit import excursion_lengths, sample_drifted_bm, sample_limit_components
from .markov import KernelSpec, kernel_row, mixing_profile, return_probability, tv_distance, two_step_dominance_check
from .stats import (
    component_vs_excursion,
    growth_bound_report,
    ks_two_sample,
    poisson_domination,
    walk_moments,
    walker_uniformity,
)
from .torus import TorusPoint, edge_probability, enumerate_ring, ring_size, torus_distance
