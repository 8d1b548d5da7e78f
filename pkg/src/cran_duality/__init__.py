"""Uplink-downlink duality for cloud radio access networks with compressed fronthaul."""
__version__ = "0.1.0"

from .model import (
    ChannelMatrix,
    DownlinkDesign,
    PerformanceReport,
    SystemParams,
    UplinkDesign,
    check_feasible,
    downlink_fronthaul_rates,
    downlink_sum_power,
    downlink_user_rates,
    evaluate,
    uplink_fronthaul_rates,
    uplink_sum_power,
    uplink_user_rates,
)
from .duality import (
    CouplingSystem,
    build_coupling_dl,
    build_coupling_ul,
    dl_to_ul,
    quantization_from_fronthaul_dl,
    quantization_from_fronthaul_ul,
    spectral_radius,
    ul_to_dl,
)
from .optimizer import (
    RateTargets,
    SolveResult,
    SolverOptions,
    fixed_point_solve,
    interference_map,
    mmse_receivers,
    solve_downlink_min_power,
)
