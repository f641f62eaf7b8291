"""Best-response dynamics over pacing profiles and structural diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dual import Market, best_responses, dual_value, expenditure_parts
from .instance import AuctionInstance, PacingProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    damping: float = 0.5
    max_rounds: int = 10_000
    fixpoint_tol: float = 1e-8
    budget_tol: float = 1e-6

    def __post_init__(self):
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be nonnegative")
        if self.fixpoint_tol <= 0 or self.budget_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class EquilibriumReport:
    profile: PacingProfile
    rounds: int
    converged: bool
    linf_residual: float
    max_budget_violation: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "profile": self.profile.to_list(),
            "rounds": self.rounds,
            "converged": self.converged,
            "linf_residual": self.linf_residual,
            "max_budget_violation": self.max_budget_violation,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EquilibriumReport":
        return cls(
            profile=PacingProfile(data["profile"]),
            rounds=int(data["rounds"]),
            converged=bool(data["converged"]),
            linf_residual=float(data["linf_residual"]),
            max_budget_violation=float(data["max_budget_violation"]),
            diagnostics=dict(data.get("diagnostics", {})),
        )


def best_response_multipliers(instance: AuctionInstance, profile: PacingProfile) -> np.ndarray:
    """Smallest dual minimizer of every buyer atom against the frozen ``profile``."""
    market = Market.from_profile(instance, profile.check(instance))
    res = best_responses(market, instance.weight_matrix(), instance.budgets())
    return np.array([r.t_star for r in res])


def best_response_step(instance: AuctionInstance, profile: PacingProfile, damping: float = 1.0) -> PacingProfile:
    """Jacobi update: (1 - damping) * profile + damping * best responses."""
    target = best_response_multipliers(instance, profile)
    new = (1.0 - damping) * profile.multipliers + damping * target
    return PacingProfile(np.clip(new, 0.0, instance.t_max))


def _detect_cycle(history: list[float], max_period: int = 4, rtol: float = 1e-9) -> int | None:
    """Smallest period p <= max_period for which the tail of ``history`` repeats."""
    for p in range(1, max_period + 1):
        if len(history) < 3 * p:
            break
        tail = np.array(history[-3 * p :])
        if np.allclose(tail[:p], tail[p : 2 * p], rtol=rtol, atol=0) and np.allclose(
            tail[p : 2 * p], tail[2 * p :], rtol=rtol, atol=0
        ):
            return p
    return None


def solve_equilibrium(instance: AuctionInstance, options: SolveOptions | None = None) -> EquilibriumReport:
    """Damped best-response dynamics from the all-zeros profile.

    Stops when the largest multiplier change drops to ``fixpoint_tol`` or
    after ``max_rounds``. Not converging is a legitimate outcome and is
    reported, never raised.
    """
    options = options or SolveOptions()
    profile = PacingProfile.zeros(instance)
    history: list[float] = []
    linf = float("inf")
    rounds = 0
    while rounds < options.max_rounds:
        new = best_response_step(instance, profile, options.damping)
        linf = float(np.max(np.abs(new.multipliers - profile.multipliers)))
        profile = new
        rounds += 1
        history.append(linf)
        if linf <= options.fixpoint_tol:
            break
    # each multiplier sits within linf / damping of its best response
    resolution = linf / options.damping if rounds else 0.0
    budgets = check_budgets(instance, profile, resolution=resolution)
    max_violation = float(max((row["violation"] / row["budget"] for row in budgets), default=0.0))
    converged = rounds > 0 and linf <= options.fixpoint_tol and max_violation <= options.budget_tol
    diagnostics: dict[str, Any] = {
        "paced_types": int(np.sum(profile.multipliers > 1e-9)),
        "max_tie_band": float(max((row["tie_band"] / row["budget"] for row in budgets), default=0.0)),
        "budget_resolution": resolution,
    }
    if not converged and rounds:
        period = _detect_cycle(history)
        if period is not None:
            diagnostics["oscillation_period"] = period
        log.warning("best-response dynamics did not converge (residual %.3g)", linf)
    return EquilibriumReport(
        profile=profile,
        rounds=rounds,
        converged=converged,
        linf_residual=linf if rounds else float("nan"),
        max_budget_violation=max_violation,
        diagnostics=diagnostics,
    )


def check_budgets(
    instance: AuctionInstance, profile: PacingProfile, resolution: float = 0.0
) -> list[dict[str, float]]:
    """Per-type expenditure at the type's own multiplier.

    A type's own paced value is always an atom of the competitor law, so its
    expenditure is only pinned down up to a tie share. ``expenditure`` is the
    tie share closest to the budget, ``violation`` the overspend that remains
    even when every tie is lost, and ``slackness`` is t * (B - expenditure).
    ``expenditure_uniform`` is the uniform-tie-break value the simulator sees.

    ``resolution`` widens the tie band to every multiplier within that
    distance of t, for profiles only known up to a solver tolerance.
    """
    market = Market.from_profile(instance, profile.check(instance))
    values = market.values(instance.weight_matrix())
    budgets = instance.budgets()
    t = profile.multipliers
    _, uniform, _ = expenditure_parts(market, values, t)
    low, _, _ = expenditure_parts(market, values, np.minimum(t + resolution, instance.t_max))
    _, _, high = expenditure_parts(market, values, np.maximum(t - resolution, 0.0))
    spend = np.minimum(np.maximum(budgets, low), high)
    return [
        {
            "type": i,
            "multiplier": float(t[i]),
            "budget": float(budgets[i]),
            "expenditure": float(spend[i]),
            "expenditure_uniform": float(uniform[i]),
            "tie_band": float(high[i] - low[i]),
            "violation": float(max(spend[i] - budgets[i], 0.0)),
            "slackness": float(t[i] * (budgets[i] - spend[i])),
        }
        for i in range(len(t))
    ]


def check_monotonicity(instance: AuctionInstance, profile: PacingProfile, tol: float = 1e-6) -> dict[str, Any]:
    """Look for multipliers that fall as one weight component (or the budget falls) rises.

    Comparable pairs differ in exactly one coordinate of (w, B). A violation
    is t(lower) > t(higher) + tol along a weight axis, or t(larger budget) >
    t(smaller budget) + tol along the budget axis.
    """
    profile.check(instance)
    W = instance.weight_matrix()
    B = instance.budgets()
    coords = np.column_stack([W, B])
    t = profile.multipliers
    violations = []
    pairs = 0
    n_types, dims = coords.shape
    for axis in range(dims):
        others = np.delete(coords, axis, axis=1)
        # group types sharing every other coordinate
        groups: dict[bytes, list[int]] = {}
        for i in range(n_types):
            groups.setdefault(others[i].tobytes(), []).append(i)
        for members in groups.values():
            if len(members) < 2:
                continue
            members = sorted(members, key=lambda i: coords[i, axis])
            for x, lo in enumerate(members):
                for hi in members[x + 1 :]:
                    if coords[hi, axis] == coords[lo, axis]:
                        continue
                    pairs += 1
                    if axis < dims - 1:
                        bad = t[lo] > t[hi] + tol
                    else:
                        bad = t[hi] > t[lo] + tol
                    if bad:
                        violations.append(
                            {"axis": "budget" if axis == dims - 1 else f"w{axis + 1}", "lower": lo, "higher": hi,
                             "gap": float(abs(t[lo] - t[hi]))}
                        )
    return {"pairs": pairs, "vacuous": pairs == 0, "violations": violations, "count": len(violations)}


def check_colinear_pacing(
    instance: AuctionInstance, profile: PacingProfile, mult_tol: float = 1e-9, digits: int = 9
) -> dict[str, Any]:
    """Paced weight vectors of co-directional, equal-budget types.

    Within each group of buyer atoms sharing a direction (rounded to
    ``digits`` decimals) and a budget, paced types should share one paced
    weight vector; if the group also has unpaced types, that vector should be
    the largest unpaced weight vector. On a finite grid the collapse point can
    sit anywhere in the cell above that type, so ``max_spread`` and
    ``max_distance_to_critical`` are reported separately.
    """
    profile.check(instance)
    W = instance.weight_matrix()
    t = profile.multipliers
    norms = np.linalg.norm(W, axis=1)
    dirs = np.round(W / norms[:, None], digits)
    groups: dict[tuple, list[int]] = {}
    for i in range(len(W)):
        key = (tuple(dirs[i]), instance.buyers[i].budget)
        groups.setdefault(key, []).append(i)
    report = []
    for key, members in groups.items():
        paced = [i for i in members if t[i] > mult_tol]
        unpaced = [i for i in members if t[i] <= mult_tol]
        pw = W[paced] / (1.0 + t[paced, None]) if paced else np.empty((0, W.shape[1]))
        spread = 0.0
        if len(paced) > 1:
            diff = pw[:, None, :] - pw[None, :, :]
            spread = float(np.max(np.linalg.norm(diff, axis=2)))
        to_critical = None
        if paced and unpaced:
            critical = max(unpaced, key=lambda i: norms[i])
            to_critical = float(np.max(np.linalg.norm(pw - W[critical], axis=1)))
        report.append(
            {
                "direction": list(key[0]),
                "budget": key[1],
                "members": len(members),
                "paced": len(paced),
                "spread": spread,
                "distance_to_critical": to_critical,
                "max_deviation": max(spread, to_critical or 0.0),
            }
        )
    return {
        "groups": report,
        "max_spread": max((g["spread"] for g in report), default=0.0),
        "max_distance_to_critical": max((g["distance_to_critical"] or 0.0 for g in report), default=0.0),
        "max_deviation": max((g["max_deviation"] for g in report), default=0.0),
    }


def population_dual_objective(
    instance: AuctionInstance, profile: PacingProfile, candidate: PacingProfile
) -> float:
    """Probability-weighted dual value of ``candidate`` multipliers against ``profile``."""
    market = Market.from_profile(instance, profile.check(instance))
    candidate.check(instance)
    total = 0.0
    for i, buyer in enumerate(instance.buyers):
        total += buyer.probability * dual_value(market, buyer, candidate[i])
    return float(total)
