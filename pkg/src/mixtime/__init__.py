"""Exact mixing times, spectral bounds and congestion bounds for small Markov chains."""

from .analysis import AnalysisOptions, AnalysisRecord, LinearFit, fit_linear, fit_loglog
from .chain_api import MarkovChain, Proposal, make_rng, random_walk
from .chains import (
    CHAINS,
    MatchingChainOne,
    MatchingChainTwo,
    SwitchChainOne,
    SwitchChainTwo,
    canonical_scheme_for,
    make_chain,
)
from .congestion import CongestionResult, bfs_scheme, congestion_bound
from .errors import ComputationError, InputError, MixtimeError
from .instances import (
    BipartiteGraph,
    DegreeSequencePair,
    enumerate_bipartite_graphs,
    enumerate_pairs,
    gale_ryser,
    parse_instance,
    scaling_family,
)
from .mixing import mixing_time_naive, total_mixing_time, tv_distance
from .spectral import spectral_bounds, symmetrize
from .state_graph import StateGraph, build, check_ergodic, graph_stats, loop_reduce

__version__ = "0.1.0"
