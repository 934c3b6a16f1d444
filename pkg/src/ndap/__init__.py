"""Network- and data-aware placement of composite applications in a simulated data center."""
from .model import (
    ApplicationEnvironment,
    DataBlock,
    LinkKind,
    PlacementOutcome,
    PlacementState,
    VirtualLink,
    VirtualMachine,
    apply_deployment,
    audit,
    deploy_cost,
    terminate_deployment,
)
from .placement import ffd_place, get_placer, ndap_place, nva_place, oracle_place
from .sim import MetricsSummary, ScenarioConfig, run, run_group, run_individual, sweep
from .topology import BandwidthPools, DataCenterTopology, build_topology, toy_topology
from .workload import DemandParams, TraceStream, generate_trace, montage_template, sample_ae, three_tier_template

__version__ = "0.1.0"
