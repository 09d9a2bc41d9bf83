"""flowmatch: deterministic SDN flow-table simulation with adaptive
flow-matching control.

A simulated switch installs flow entries under per-destination matching
schemes ranging from MAC-destination-only aggregation to full-header
granularity. A tabular policy learner picks schemes to maximize granularity
while an overload predictor and an overflow guard keep the table below
capacity; seeded traffic generators supply benign load and DoS patterns.
"""

from .control import (
    ControlConfig,
    DataController,
    Origin,
    PolicyDirective,
    QdataController,
    select_critical_hosts,
    select_fms_candidates,
)
from .flow_table import FlowEntry, FlowTable, Observation, PacketOutcome
from .harness import (
    DetectionOutcome,
    MetricsRow,
    ScenarioConfig,
    ScenarioResult,
    baseline_detector,
    calibrate_threshold,
    desk_scenario,
    fitness,
    load_config,
    run_scenario,
)
from .match_schemes import (
    FMS_ID,
    MMOS_ID,
    MatchField,
    MatchScheme,
    PacketKey,
    catalog,
    project,
    theta,
)
from .qlearning import (
    OnlineAgent,
    QTable,
    SwitchTrainingEnv,
    bin_state,
    load_qtable,
    reward,
    save_qtable,
)
from .svm import LabeledSample, SvmModel, Verdict
from .traffic import Host, TrafficSpec, generate, make_topology, merge_streams

__version__ = "0.1.0"

__all__ = [
    "ControlConfig", "DataController", "Origin", "PolicyDirective",
    "QdataController", "select_critical_hosts", "select_fms_candidates",
    "FlowEntry", "FlowTable", "Observation", "PacketOutcome",
    "DetectionOutcome", "MetricsRow", "ScenarioConfig", "ScenarioResult",
    "baseline_detector", "calibrate_threshold", "desk_scenario", "fitness",
    "load_config", "run_scenario",
    "FMS_ID", "MMOS_ID", "MatchField", "MatchScheme", "PacketKey",
    "catalog", "project", "theta",
    "OnlineAgent", "QTable", "SwitchTrainingEnv", "bin_state", "load_qtable",
    "reward", "save_qtable",
    "LabeledSample", "SvmModel", "Verdict",
    "Host", "TrafficSpec", "generate", "make_topology", "merge_streams",
]
