"""Finite-graph approximation of kernel dimensions for group-ring matrices over amenable groups."""

from .errors import *  # noqa: F401,F403
from .groups import GroupContext, GroupElement, ball_tree, parse_group, word_length
from .graphs import ColoredGraph, cayley_subgraph, k_similar_vertices, similar_count
from .linalg import GaussianRational, SparseExactMatrix, exact_rank, kernel_dimension, modular_rank_probe
from .operators import GroupRingMatrix, build_Tn, quotient_matrix, subspace_dims
from .tiling import quasi_tile, select_epsilon_disjoint
from .harness import ExperimentSpec, bound_check, dimension_sequence, torus_oracle

__version__ = "0.1.0"
