"""Coresets for k-clustering under relaxed-triangle cost models.

Offline sensitivity sampling, a single-pass streaming path (online
bicriterion plus monotone-threshold sampler), and a merge-and-reduce
baseline, with brute-force oracles and an experiment harness.
"""

from .bicriterion import (Assignment, assign_to_centers, compose,
                          compose_alpha, dsquared_seed, reduce_to_constant)
from .dataio import DataError, ingest_stream, read_points, write_coreset, write_report
from .harness import ConfigError, ExperimentConfig, evaluate, gen_mixture, \
    make_queries, run
from .merge_reduce import MergeReduce, MergeReduceResult, plan_tree
from .metric import (CostModel, cauchy, custom, huber, kmeans, kmedian, lp,
                     model_from_spec, psi, tukey)
from .offline import (AliasTable, CoresetSample, build_coreset,
                      sampling_distribution, sensitivity_from_assignment)
from .points import Point, dense, sparse
from .rng import generator, split
from .solvers import (Solution, exact_partition, medoid_swap,
                      opt_lower_bound, weighted_lloyd)
from .stream_bicriterion import Snapshot, StreamBicriterion, lambda_phases
from .stream_sampler import (SensitivitySampler, StreamCoreset, StreamResult,
                             WindowSampler, assemble, t_prime_for, x_scale_for)
from .weighted import (QuerySpec, SensitivityProfile, WeightedSet, bar_cost,
                       brute_sensitivity, nu_distance, sample_size)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "assign_to_centers", "compose", "compose_alpha",
    "dsquared_seed", "reduce_to_constant",
    "DataError", "ingest_stream", "read_points", "write_coreset", "write_report",
    "ConfigError", "ExperimentConfig", "evaluate", "gen_mixture",
    "make_queries", "run",
    "MergeReduce", "MergeReduceResult", "plan_tree",
    "CostModel", "cauchy", "custom", "huber", "kmeans", "kmedian", "lp",
    "model_from_spec", "psi", "tukey",
    "AliasTable", "CoresetSample", "build_coreset", "sampling_distribution",
    "sensitivity_from_assignment",
    "Point", "dense", "sparse",
    "generator", "split",
    "Solution", "exact_partition", "medoid_swap", "opt_lower_bound",
    "weighted_lloyd",
    "Snapshot", "StreamBicriterion", "lambda_phases",
    "SensitivitySampler", "StreamCoreset", "StreamResult", "WindowSampler",
    "assemble", "t_prime_for", "x_scale_for",
    "QuerySpec", "SensitivityProfile", "WeightedSet", "bar_cost",
    "brute_sensitivity", "nu_distance", "sample_size",
    "__version__",
]
