"""Lifted factor-graph construction with scale-independent factor grouping."""

from .colour_passing import Partition, init_colours, refine_step, run_colour_passing
from .estimator import LiftedModelBuilder, LiftedQueryEngine
from .exchangeability import (
    ExchangeabilityWitness,
    approx_collinear,
    brute_force_exchangeable,
    buckets,
    collinear_exact,
    cosine_distance,
    detect_exchangeable,
    is_commutative,
)
from .factor_graph import (
    Factor,
    FactorGraph,
    FactorGraphError,
    RandomVariable,
    assignment_index,
    boolean_rv,
    index_assignment,
    joint_weight,
    normalise,
    scale_factor,
)
from .inference import LVEStats, Query, lve_query, ve_ground
from .io import read_fg, write_fg
from .pfg import ParametricFactorGraph, construct_pfg, ground_pfg, read_pfg, write_pfg

__version__ = "0.1.0"
