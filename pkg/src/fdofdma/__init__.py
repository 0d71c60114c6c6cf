"""Sub-channel and power allocation for OFDMA cells with full-duplex nodes."""
from .allocator import allocate, rank_subchannels
from .channel import INDOOR, OUTDOOR, TEMPLATES, ScenarioTemplate, sample_drop
from .core import (Assignment, ChannelRealization, ConstraintViolation, NetworkScenario,
                   PowerAllocation, RateReport, check_feasible, weighted_sum_rate)
from .dcpower import DcProblem, DcSettings, dc_iterate, waterfill
from .estimators import ResourceAllocator
from .pairwise import PairInstance, solve_pair
from .schemes import (exhaustive_oracle, scheme_fd, scheme_hd_downlink, scheme_hd_uplink,
                      scheme_hhd, scheme_upper_bound)

__all__ = [
    "Assignment", "ChannelRealization", "ConstraintViolation", "DcProblem", "DcSettings",
    "INDOOR", "NetworkScenario", "OUTDOOR", "PairInstance", "PowerAllocation", "RateReport",
    "ResourceAllocator", "ScenarioTemplate", "TEMPLATES", "allocate", "check_feasible",
    "dc_iterate", "exhaustive_oracle", "rank_subchannels", "sample_drop", "scheme_fd",
    "scheme_hd_downlink", "scheme_hd_uplink", "scheme_hhd", "scheme_upper_bound", "solve_pair",
    "waterfill", "weighted_sum_rate",
]
