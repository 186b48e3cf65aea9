"""Revenue of simple auctions under quasi-regular and quasi-MHR buyers.

Distributions are piecewise analytic (``dist_core``); mechanisms are evaluated
by quadrature where possible and by reproducible Monte Carlo otherwise.
"""

__version__ = "0.1.0"

from ._accel import BACKEND
from .dist_core import (
    IronedCurve, PiecewiseDistribution, best_price, distribution, iron, monopoly, point_mass,
    revenue_curve, truncate,
)
from .errors import (
    AuctionLabError, CapabilityError, ContractError, DivergenceError, DomainError,
    UndefinedPointError, ValidationError,
)
from .family import Family, FamilyReport, check, memberships
from .mechanisms import (
    MechanismReport, bom_revenue, boup_revenue, bosp_boup_constant, bosp_revenue, bour_revenue,
    identity_pricing_revenue, spa_duplicate_one, spa_reserve_revenue,
)
from .order_stats import order_statistic

__all__ = [
    "BACKEND", "IronedCurve", "PiecewiseDistribution", "best_price", "distribution", "iron",
    "monopoly", "point_mass", "revenue_curve", "truncate",
    "AuctionLabError", "CapabilityError", "ContractError", "DivergenceError", "DomainError",
    "UndefinedPointError", "ValidationError",
    "Family", "FamilyReport", "check", "memberships",
    "MechanismReport", "bom_revenue", "boup_revenue", "bosp_boup_constant", "bosp_revenue",
    "bour_revenue", "identity_pricing_revenue", "spa_duplicate_one", "spa_reserve_revenue",
    "order_statistic",
]
