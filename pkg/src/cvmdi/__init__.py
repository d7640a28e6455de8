"""Key rates for continuous-variable MDI QKD over beam-wander fading channels."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, InfeasibleLossError, ShapeError, UnphysicalStateError
from .fading import (
    FadingParams,
    asymmetry_ratio,
    averaged_key_rate,
    expectation_over_fading,
    fading_cdf,
    fading_pdf,
    fixed_channel_key_rate,
    mean_loss_db,
    mean_transmissivity,
    solve_sigma_b,
    solve_sigma_b_pair,
    weibull_params,
)
from .gaussian import (
    Detection,
    Reference,
    TwoModeCM,
    conditional_nu,
    entropy_f,
    holevo_bound,
    key_rate_from_cm,
    mutual_info,
    squeezing_db_to_variance,
    symplectic_eigenvalues,
    tmsv_cm,
    von_neumann_entropy,
)
from .protocols import (
    ProtocolParams,
    Scheme,
    direct_transmission_cm,
    lossy_tmsv_cm,
    mdi_conditional_cm,
    modulation_variance,
    point_key_rate,
)
from .quadrature import QuadratureKind, QuadratureRule
