"""Distributed online convex optimization with compressed gossip."""

from .adversary import (
    GradientEstimate,
    LossStream,
    best_fixed_comparator,
    linear_adversarial_stream,
    lower_bound_convex_stream,
    lower_bound_groups,
    lower_bound_sc_stream,
    one_point_estimate,
    quadratic_stream,
    two_point_estimate,
    zero_stream,
)
from .algorithms import (
    EtaSchedule,
    HyperParams,
    RunRecords,
    d_ogd_run,
    dc_dogd_run,
    derive_hyperparams,
    top_dobd1_run,
    top_dobd2_run,
    top_dogd_run,
)
from .compress import CompressorKind, compress, omega_of, payload_bytes, repeated_compress
from .geometry import Domain, project, shrink
from .gossip import choco_step, choco_step_efficient, consensus_error
from .topology import GossipMatrix, build_topology, gossip_matrix, lazify, max_degree_weights, spectral_quantities

__version__ = "0.1.0"
