"""Differential received-signal-strength source localization toolkit."""

from .channel import (
    ChannelParams,
    DrssSampleSet,
    FadingParams,
    RssSampleSet,
    drss_from_rss,
    estimate_rss_ml,
    mean_rss_db,
    rss_estimator_variance_db,
    sample_instantaneous_power,
    sample_rss,
)
from .crlb import CrlbRequest, crlb, fim
from .estimators import (
    BcdOpts,
    BracketingError,
    Diagnostics,
    EstimationError,
    HardCaseError,
    LocationEstimate,
    RobustOpts,
    SingularModelError,
    SolverFailureError,
    a_blue,
    le,
    rsdp_bcde,
    rsdpe,
    u_blue,
    zeta_tls,
)
from .localizers import (
    ABlueLocalizer,
    JointPleLocalizer,
    LagrangianLocalizer,
    RobustSdpLocalizer,
    UBlueLocalizer,
)
from .model import (
    PleModel,
    UnwhitenedModel,
    WhitenedModel,
    build_ple_model,
    build_unwhitened,
    build_whitened,
    gamma_matrix,
    verify_rss_equivalence,
    whitener,
)
from .scenario import (
    Scenario,
    clustered_scenario,
    fig1_scenario,
    load_scenario,
    random_scenario,
    save_scenario,
)
from .sdp import LmiBlock, SdpProblem, SdpSolution, min_eig, solve

__version__ = "0.1.0"

__all__ = [
    "ABlueLocalizer",
    "BcdOpts",
    "BracketingError",
    "ChannelParams",
    "CrlbRequest",
    "Diagnostics",
    "DrssSampleSet",
    "EstimationError",
    "FadingParams",
    "HardCaseError",
    "JointPleLocalizer",
    "LagrangianLocalizer",
    "LmiBlock",
    "LocationEstimate",
    "PleModel",
    "RobustOpts",
    "RobustSdpLocalizer",
    "RssSampleSet",
    "Scenario",
    "SdpProblem",
    "SdpSolution",
    "SingularModelError",
    "SolverFailureError",
    "UBlueLocalizer",
    "UnwhitenedModel",
    "WhitenedModel",
    "a_blue",
    "build_ple_model",
    "build_unwhitened",
    "build_whitened",
    "clustered_scenario",
    "crlb",
    "drss_from_rss",
    "estimate_rss_ml",
    "fig1_scenario",
    "fim",
    "gamma_matrix",
    "le",
    "load_scenario",
    "mean_rss_db",
    "min_eig",
    "random_scenario",
    "rsdp_bcde",
    "rsdpe",
    "rss_estimator_variance_db",
    "sample_instantaneous_power",
    "sample_rss",
    "save_scenario",
    "solve",
    "u_blue",
    "verify_rss_equivalence",
    "whitener",
    "zeta_tls",
]
