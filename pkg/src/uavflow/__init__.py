"""uavflow: multi-service UAV swarm traffic modeling, simulation, and replay."""

__version__ = "0.1.0"

from .model import (
    ModelError,
    DegenerateSegmentError,
    DegenerateServiceError,
    InfeasiblePartitionError,
    ModelParams,
    RateMatrix,
    SegmentRates,
    ServiceClass,
    ShareMatrix,
    Subgroup,
    SubgroupPartition,
    TrafficForecast,
    alpha_from_gini,
    derive_model,
    derive_rate_matrix,
    forecast,
    frequency_share_matrix,
    gini_from_alpha,
    lorenz_share,
    partition_subgroups,
    rate_share_matrix,
    segment_rates,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    SizeKind,
    SizeModel,
    emit_scenario,
    load_scenario,
    parse_scenario,
    preset,
    preset_document,
)
from .simulator import (
    CapacityError,
    ComparisonReport,
    EventBatch,
    MalformedEventError,
    PacketEvent,
    SummaryAccumulator,
    TraceSummary,
    UavAssignment,
    assign_uavs,
    compare_forecast,
    expected_segment_counts,
    generate_events,
    simulate_summary,
    summarize_trace,
)
from .traceio import read_trace, write_trace
from .loadgen import (
    CodecError,
    PacingError,
    ReplayStats,
    SinkReport,
    decode_packet,
    encode_packet,
    replay_trace,
    run_sink,
)

__all__ = [name for name in dir() if not name.startswith("_")]
