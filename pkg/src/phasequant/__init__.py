"""Capacity and outage of AWGN channels observed through a b-bit phase quantizer."""

from .errors import (
    DomainError,
    InsufficientDataError,
    NumericError,
    PhaseQuantError,
    QuadratureError,
    UnattainableRateError,
)
from .info import (
    InputDistribution,
    MassPoint,
    RateReport,
    capacity,
    capacity_from_snr,
    cond_entropy,
    cond_entropy_point,
    denormalize,
    entropy_bits,
    kkt_gap,
    mutual_information,
    psk_input,
    symmetrize,
)
from .oracle import (
    InputGrid,
    OracleResult,
    best_rotation,
    blahut_arimoto,
    gaussian_input,
    rate_sweep,
)
from .outage import (
    ExponentFit,
    FadingScenario,
    FixedPSK,
    GenieCapacity,
    OutageCurve,
    OutageRow,
    RateTable,
    instantaneous_rate,
    outage_curve,
    outage_exponent_fit,
    outage_mc,
    outage_semianalytic,
    parse_policy,
    policy_compare,
    rate_threshold_gain,
)
from .quantizer import (
    ChannelParams,
    ComplexPoint,
    PhaseQuantizer,
    angular_phase_pdf,
    mc_transition_oracle,
    sector_of,
    transition_matrix,
    transition_prob,
    transition_row,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "ComplexPoint",
    "DomainError",
    "ExponentFit",
    "FadingScenario",
    "FixedPSK",
    "GenieCapacity",
    "InputDistribution",
    "InputGrid",
    "InsufficientDataError",
    "MassPoint",
    "NumericError",
    "OracleResult",
    "OutageCurve",
    "OutageRow",
    "PhaseQuantError",
    "PhaseQuantizer",
    "QuadratureError",
    "RateReport",
    "RateTable",
    "UnattainableRateError",
    "angular_phase_pdf",
    "best_rotation",
    "blahut_arimoto",
    "capacity",
    "capacity_from_snr",
    "cond_entropy",
    "cond_entropy_point",
    "denormalize",
    "entropy_bits",
    "gaussian_input",
    "instantaneous_rate",
    "kkt_gap",
    "mc_transition_oracle",
    "mutual_information",
    "outage_curve",
    "outage_exponent_fit",
    "outage_mc",
    "outage_semianalytic",
    "parse_policy",
    "policy_compare",
    "psk_input",
    "rate_sweep",
    "rate_threshold_gain",
    "sector_of",
    "symmetrize",
    "transition_matrix",
    "transition_prob",
    "transition_row",
]
