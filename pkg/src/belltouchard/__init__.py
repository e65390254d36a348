"""Bell-Touchard counting processes: pmfs, path simulation and a ruin model."""

__version__ = "0.1.0"

from .bellpoly import (
    BellPolyEngine,
    bell_generating_fn,
    bell_poly,
    bell_poly_dobinski,
    bell_poly_partition,
    log_bell_poly,
)
from .distributions import (
    BTParams,
    MixedBTParams,
    ZTPParams,
    bt_cdf,
    bt_mean,
    bt_mgf,
    bt_pgf,
    bt_pmf,
    bt_sample,
    bt_variance,
    mixed_bt_pmf,
    polylog_neg_int,
    ztp_pmf,
    ztp_sample,
)
from .exceptions import (
    BellTouchardError,
    BoundViolationError,
    DegreeExceededError,
    DomainError,
    IntegrationError,
    NonConvergenceError,
    NumericOverflowError,
    ParameterMismatchError,
    TruncationError,
)
from .processes import (
    EventPath,
    EventRecord,
    RateFunction,
    decompose,
    mean_jump_fn,
    simulate_bt,
    simulate_bt_batch,
    simulate_nhbt,
    superpose,
)
from .risk import GammaParams, RiskConfig, ruin_probability_mc, simulate_risk_path
from .stats import chi_square_gof, empirical_pmf, tv_distance
from .streams import derive_seed, path_rng, run_batch
