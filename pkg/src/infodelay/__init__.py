"""Information-delay ordering policies for a two-tier supply chain."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .transfer_core import (  # noqa: F401
    AutocovarianceSequence,
    BlaschkeFactor,
    ExponentialTransfer,
    Polynomial,
    RationalTransfer,
    autocovariances,
    evaluate,
    group_delay,
    impulse_response,
)
from .policy_factory import (  # noqa: F401
    PolicySpec,
    arma_approx,
    build_policy,
    epsilon_policy,
    limit_policy,
    ma1_optimal,
    solve_gamma,
)
from .metrics import (  # noqa: F401
    CostParameters,
    PolicyMetrics,
    inventory_variance,
    optimal_cost,
    policy_metrics,
    relative_cost_table,
    supplier_msfe,
)
from .finite_memory import finite_past_msfe, msfe_curve, optimal_complexity_scan  # noqa: F401
from .simulator import FiniteMemory, FullHistory, SimulationConfig, simulate  # noqa: F401
