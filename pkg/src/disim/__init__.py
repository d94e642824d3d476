"""Spectral co-clustering of directed and bipartite graphs.

The DI-SIM algorithm takes the leading singular vectors of a regularized
graph Laplacian and clusters their rows, giving each node a sending and a
receiving cluster. Stochastic co-Blockmodel samplers and population
quantities support simulation studies of when the clusters are recovered.
"""

__version__ = "0.1.0"

from .evaluation import (
    BoundReport,
    MisclusterReport,
    concentration_check,
    misclustered,
    procrustes,
    subspace_deviation,
    theorem_bounds,
)
from .exceptions import (
    ConvergenceError,
    DisimError,
    EdgeListParseError,
    EmptyGraphError,
    SizeCapError,
)
from .graph import (
    SparseGraph,
    common_offspring,
    common_parents,
    in_degrees,
    load_edge_list,
    out_degrees,
    write_edge_list,
)
from .kmeans import SeededKMeans, kmeans
from .laplacian import Laplacian, build_laplacian, default_tau
from .model import (
    BlockModel,
    PopulationObjects,
    build_four_param,
    gamma_z,
    min_leverage,
    population_objects,
    sample_adjacency,
    sample_degree_params,
)
from .pipeline import (
    UNASSIGNED,
    CoClustering,
    DiSim,
    block_connectivity,
    cocluster_embedding,
    disim,
    movement_scores,
)
from .spectral import Embedding, dense_svd_oracle, truncated_svd

__all__ = [
    "BlockModel", "BoundReport", "CoClustering", "ConvergenceError", "DiSim", "DisimError",
    "EdgeListParseError", "Embedding", "EmptyGraphError", "Laplacian", "MisclusterReport",
    "PopulationObjects", "SeededKMeans", "SizeCapError", "SparseGraph", "UNASSIGNED",
    "block_connectivity", "build_four_param", "build_laplacian", "cocluster_embedding",
    "common_offspring", "common_parents", "concentration_check", "default_tau",
    "dense_svd_oracle", "disim", "gamma_z", "in_degrees", "kmeans", "load_edge_list",
    "min_leverage", "misclustered", "movement_scores", "out_degrees", "population_objects",
    "procrustes", "sample_adjacency", "sample_degree_params", "subspace_deviation",
    "theorem_bounds", "truncated_svd", "write_edge_list",
]
