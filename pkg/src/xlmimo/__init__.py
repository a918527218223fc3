"""Downlink multi-user scheduling over very large linear arrays.

Spherical-wavefront and plane-wave channel construction, zero-forcing and
maximum-ratio precoding, exact waterfilling, distance-based greedy schedulers
with reference baselines, near-field interference analysis, and a
deterministic Monte-Carlo campaign harness with a CLI front end.
"""

from .arrays import (
    CHANNEL_MODELS,
    DEFAULT_SPACING,
    MODEL_PW,
    MODEL_SW,
    ArrayConfig,
    ChannelMatrix,
    UserPosition,
    channel_matrix,
    critical_distance,
    element_distance,
    element_distances,
    element_offsets,
    steering_vector_pw,
    steering_vector_sw,
)
from .campaign import (
    BENCH_CSV_HEADER,
    CSV_HEADER,
    METHOD_DBS,
    METHOD_DBS_S,
    METHOD_MRT,
    METHOD_SUS,
    SCHEDULING_METHODS,
    BenchRow,
    CampaignConfig,
    CampaignResult,
    CampaignRow,
    Scenario,
    SummaryRow,
    benchmark_timing,
    config_from_sources,
    default_distance_range,
    desk_config,
    emit_bench_csv,
    emit_csv,
    emit_plot_script,
    full_scale_config,
    generate_scenario,
    parse_config_file,
    read_csv,
    run_campaign,
    run_trial,
    summarize,
)
from .nearfield import (
    PartitionRow,
    PartitionTable,
    UniformAngles,
    angular_aperture,
    effective_aperture,
    interference_kernel,
    partition_table,
    power_concentration,
    semiorth_prob_bound,
    semiorth_prob_mc,
)
from .precoding import (
    RCOND_FLOOR,
    PrecoderSet,
    RankDeficientChannelError,
    effective_gains,
    mrt_precoder,
    zf_precoders,
)
from .rates import RateReport, rate_report, sinr, sum_rate
from .scheduling import (
    ScheduleResult,
    StoppingRule,
    dbs_s_schedule,
    dbs_schedule,
    equivalent_distance,
    exhaustive_schedule,
    mrt_schedule,
    sus_schedule,
)
from .waterfilling import PowerAllocation, rate_from_gains, waterfill

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "BENCH_CSV_HEADER",
    "BenchRow",
    "CHANNEL_MODELS",
    "CSV_HEADER",
    "CampaignConfig",
    "CampaignResult",
    "CampaignRow",
    "ChannelMatrix",
    "DEFAULT_SPACING",
    "METHOD_DBS",
    "METHOD_DBS_S",
    "METHOD_MRT",
    "METHOD_SUS",
    "MODEL_PW",
    "MODEL_SW",
    "PartitionRow",
    "PartitionTable",
    "PowerAllocation",
    "PrecoderSet",
    "RCOND_FLOOR",
    "RankDeficientChannelError",
    "RateReport",
    "SCHEDULING_METHODS",
    "Scenario",
    "ScheduleResult",
    "StoppingRule",
    "SummaryRow",
    "UniformAngles",
    "UserPosition",
    "angular_aperture",
    "benchmark_timing",
    "channel_matrix",
    "config_from_sources",
    "critical_distance",
    "dbs_s_schedule",
    "dbs_schedule",
    "default_distance_range",
    "desk_config",
    "effective_aperture",
    "effective_gains",
    "element_distance",
    "element_distances",
    "element_offsets",
    "emit_bench_csv",
    "emit_csv",
    "emit_plot_script",
    "equivalent_distance",
    "exhaustive_schedule",
    "full_scale_config",
    "generate_scenario",
    "interference_kernel",
    "mrt_precoder",
    "mrt_schedule",
    "parse_config_file",
    "partition_table",
    "power_concentration",
    "rate_from_gains",
    "rate_report",
    "read_csv",
    "run_campaign",
    "run_trial",
    "semiorth_prob_bound",
    "semiorth_prob_mc",
    "sinr",
    "steering_vector_pw",
    "steering_vector_sw",
    "sum_rate",
    "summarize",
    "sus_schedule",
    "waterfill",
    "zf_precoders",
]
