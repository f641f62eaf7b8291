"""Value-pacing equilibria for budget-constrained buyers in repeated auctions."""

from .auctions import (
    AuctionFormat,
    bid_oracle,
    equilibrium_bid,
    expected_payment,
    interim_utility,
    revenue_equivalence_report,
    simulate_revenue,
)
from .distributions import (
    Analytic,
    EmpiricalStep,
    arc_distribution,
    cdf_integral,
    highest_competitor_distribution,
    paced_value,
    paced_value_distribution,
    sigma,
    uniform_power,
)
from .dual import Market, best_response, dual_derivative, dual_value, expected_expenditure
from .equilibrium import (
    EquilibriumReport,
    SolveOptions,
    best_response_step,
    check_budgets,
    check_colinear_pacing,
    check_monotonicity,
    population_dual_objective,
    solve_equilibrium,
)
from .instance import (
    AuctionInstance,
    BuyerAtom,
    InstanceError,
    ItemAtom,
    PacingProfile,
    gen_arc_instance,
    gen_grid_instance,
    load_instance,
    save_instance,
    validate_instance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
