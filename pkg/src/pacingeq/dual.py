"""The per-type dual problem and its smallest minimizer.

For a buyer with weights w and budget B facing competitor laws H_a (one per
item), the dual function is

    q(t) = (1 + t) * sum_a p_a * 1{v_a(t) >= r_a} * int_{r_a}^{v_a(t)} H_a(s) ds + t * B

with v_a(t) = w.a / (1 + t). Its derivative is B minus expected expenditure,
and it is convex in t for any competitor law.

With atoms in H the expenditure jumps wherever a paced value crosses an atom
(or a reserve), and q has a kink there. At a kink the buyer is indifferent, in
the Lagrangian, between winning and losing the tied mass, so any expenditure
between the two one-sided values is attainable. The best response reports the
one closest to the budget (exactly the budget at an interior kink).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import TIE_RTOL, competitor_distributions
from .instance import AuctionInstance, BuyerAtom, PacingProfile, value_matrix

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Market:
    """What a single buyer faces: per-item competitor laws plus item data."""

    dists: tuple
    features: np.ndarray
    item_probs: np.ndarray
    reserves: np.ndarray
    n: int
    t_max: float

    @classmethod
    def from_profile(cls, instance: AuctionInstance, profile: PacingProfile) -> "Market":
        return cls(
            dists=tuple(competitor_distributions(instance, profile)),
            features=instance.feature_matrix(),
            item_probs=instance.item_probabilities(),
            reserves=instance.reserves(),
            n=instance.n,
            t_max=instance.t_max,
        )

    @classmethod
    def single_item(cls, H, value: float = 1.0, reserve: float = 0.0, n: int = 2, t_max: float = 10.0):
        """A one-item market where the buyer's unpaced value is ``value`` (for toy checks)."""
        return cls(
            dists=(H,),
            features=np.array([[1.0]]),
            item_probs=np.array([1.0]),
            reserves=np.array([reserve]),
            n=n,
            t_max=t_max,
        )

    def values(self, weights) -> np.ndarray:
        """Unpaced values; ``weights`` of shape (d,) or (buyers, d)."""
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        return value_matrix(w, self.features)


@dataclass(frozen=True)
class BestResponseResult:
    t_star: float
    dual_value: float
    expenditure: float
    binding: bool
    bracket_width: float
    # one-sided expenditures at t_star: all tied mass lost / all tied mass won
    expenditure_low: float = 0.0
    expenditure_high: float = 0.0


def _as_values(market: Market, buyer) -> np.ndarray:
    w = buyer.weights if isinstance(buyer, BuyerAtom) else buyer
    return market.values(w)[0]


def _utility_terms(market: Market, values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_a p_a 1{v >= r} int_r^v H, for values (..., items) and t broadcastable to (...)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros(np.broadcast_shapes(values.shape[:-1], t.shape))
    for a, H in enumerate(market.dists):
        v = values[..., a] / (1.0 + t)
        r = market.reserves[a]
        on = v >= r
        area = np.where(on, H.integral(r, np.where(on, v, r)), 0.0)
        total = total + market.item_probs[a] * area
    return total


def _q(market, values, budgets, t):
    t = np.asarray(t, dtype=float)
    return (1.0 + t) * _utility_terms(market, values, t) + t * budgets


def dual_value(market: Market, buyer: BuyerAtom, t):
    """q(t) for one buyer; ``t`` may be an array."""
    vals = _as_values(market, buyer)
    out = _q(market, vals, buyer.budget, np.asarray(t, dtype=float))
    return out if np.ndim(out) else float(out)


def expenditure_parts(market: Market, values: np.ndarray, t):
    """(lose-ties, uniform-ties, win-ties) expected expenditure; ``t`` scalar or 1-d array."""
    t = np.asarray(t, dtype=float)
    low = np.zeros(t.shape)
    mid = np.zeros(t.shape)
    high = np.zeros(t.shape)
    for a, H in enumerate(market.dists):
        v = values[..., a] / (1.0 + t)
        r = market.reserves[a]
        p = market.item_probs[a]
        on = v >= r * (1 - TIE_RTOL)
        area = np.where(v > r, H.integral(r, np.maximum(v, r)), 0.0)
        h_lo, h_hi = H.tie_bounds(v)
        win = H.win_probability(v)
        # Paying below the reserve is impossible, so at v == r losing means not participating.
        at_reserve = (r > 0) & (np.abs(v - r) <= TIE_RTOL * r)
        low = low + np.where(on & ~at_reserve, p * (v * h_lo - area), 0.0)
        mid = mid + np.where(on, p * (v * win - area), 0.0)
        high = high + np.where(on, p * (v * h_hi - area), 0.0)
    parts = (np.maximum(low, 0.0), np.maximum(mid, 0.0), np.maximum(high, 0.0))
    if t.ndim == 0:
        return tuple(float(x) for x in parts)
    return parts


def expected_expenditure(market: Market, buyer: BuyerAtom, t: float, ties: str = "uniform") -> float:
    """Expected payment per auction when bidding at multiplier ``t``.

    ``ties`` selects how mass tied with the buyer's paced value is treated:
    ``"uniform"`` (random tie-break, what the simulator does), ``"lose"`` or
    ``"win"``. The three agree whenever nothing is tied.
    """
    parts = expenditure_parts(market, _as_values(market, buyer), float(t))
    return parts[{"lose": 0, "uniform": 1, "win": 2}[ties]]


def expenditure_band(market: Market, buyer: BuyerAtom, t: float) -> tuple[float, float]:
    """(lose-ties, win-ties) expenditure at t; equal unless the paced value sits on an atom."""
    low, _, high = expenditure_parts(market, _as_values(market, buyer), float(t))
    return low, high


def dual_derivative(market: Market, buyer: BuyerAtom, t: float) -> float:
    """B minus expected expenditure (uniform tie-break at atoms)."""
    return buyer.budget - expected_expenditure(market, buyer, t)


def recovered_expenditure(budget: float, low: float, high: float) -> float:
    """Expenditure of the tie share that best matches the budget."""
    return min(max(budget, low), high)


def best_responses(
    market: Market,
    weights: np.ndarray,
    budgets: np.ndarray,
    scan_points: int = 256,
    width_tol: float = 1e-9,
    value_rtol: float = 1e-12,
    budget_tol: float = 1e-6,
    mult_tol: float = 1e-9,
) -> list[BestResponseResult]:
    """Smallest dual minimizer on [0, t_max] for many buyers at once.

    Coarse scan, golden-section refinement inside the bracket around the
    first near-minimal scan point, then a snap to any kink inside the final
    window (kinks are where a paced value meets an atom or a reserve).
    Among candidates within ``value_rtol * (1 + |q*|)`` of the best value
    the smallest t wins.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    budgets = np.asarray(budgets, dtype=float).reshape(-1)
    vals = market.values(weights)
    m = len(budgets)
    T = market.t_max

    grid = np.linspace(0.0, T, scan_points)
    q_scan = _q(market, vals[:, None, :], budgets[:, None], grid[None, :])
    q_min = q_scan.min(axis=1)
    tol = value_rtol * (1.0 + np.abs(q_min))
    first = np.argmax(q_scan <= (q_min + tol)[:, None], axis=1)
    lo = grid[np.clip(first - 1, 0, scan_points - 1)]
    hi = grid[np.clip(first + 1, 0, scan_points - 1)]

    # golden section, all buyers in lockstep
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = _q(market, vals, budgets, c)
    fd = _q(market, vals, budgets, d)
    while np.any(b - a > width_tol):
        left = fc <= fd  # ties keep the left part: smallest minimizer
        active = b - a > width_tol
        move_l = left & active
        move_r = ~left & active
        b = np.where(move_l, d, b)
        a = np.where(move_r, c, a)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        c_next = np.where(move_l, new_c, np.where(move_r, d, c))
        d_next = np.where(move_r, new_d, np.where(move_l, c, d))
        fc_next = np.where(move_r, fd, fc)
        fd_next = np.where(move_l, fc, fd)
        # evaluate only the freshly placed probes
        need_c = move_l
        need_d = move_r
        if np.any(need_c):
            fc_next = np.where(need_c, _q(market, vals, budgets, c_next), fc_next)
        if np.any(need_d):
            fd_next = np.where(need_d, _q(market, vals, budgets, d_next), fd_next)
        c, d, fc, fd = c_next, d_next, fc_next, fd_next

    # kink candidates per buyer: bracket points plus atoms/reserves swept by the window
    owners: list[np.ndarray] = []
    times: list[np.ndarray] = []
    window = np.maximum(2.0 * (b - a), 100.0 * width_tol)
    t_lo = np.maximum(a - window, 0.0)
    t_hi = np.minimum(b + window, T)
    base = np.column_stack([a, b, 0.5 * (a + b), lo, grid[first], np.where(t_lo == 0.0, 0.0, a)])
    owners.append(np.repeat(np.arange(m), base.shape[1]))
    times.append(base.ravel())
    for k, H in enumerate(market.dists):
        val = vals[:, k]
        pos = val > 0
        v_top = np.where(pos, val / (1.0 + t_lo), 0.0)
        v_bot = np.where(pos, val / (1.0 + t_hi), 0.0)
        support = getattr(H, "support", None)
        if support is not None:
            j0 = np.searchsorted(support, v_bot, side="left")
            j1 = np.where(pos, np.searchsorted(support, v_top, side="right"), j0)
            counts = np.maximum(j1 - j0, 0)
            if counts.sum():
                who = np.repeat(np.arange(m), counts)
                idx = np.repeat(j0 - np.cumsum(counts) + counts, counts) + np.arange(counts.sum())
                x = support[idx]
                keep = x > 0
                owners.append(who[keep])
                times.append(val[who[keep]] / x[keep] - 1.0)
        r = market.reserves[k]
        if r > 0:
            hit = pos & (v_bot <= r) & (r <= v_top)
            owners.append(np.flatnonzero(hit))
            times.append(val[hit] / r - 1.0)
    owner = np.concatenate(owners)
    cand = np.clip(np.concatenate(times), 0.0, T)
    inside = (cand >= t_lo[owner]) & (cand <= t_hi[owner])
    owner, cand = owner[inside], cand[inside]
    order = np.lexsort((cand, owner))
    owner, cand = owner[order], cand[order]

    # exact optimality: e_lose(t) <= B <= e_win(t), one-sided at the box ends
    low, _, high = expenditure_parts(market, vals[owner], cand)
    B = budgets[owner]
    slack = 1e-12 * B
    certified = ((cand >= T) | (low <= B + slack)) & ((cand <= 0.0) | (high >= B - slack))
    qc = _q(market, vals[owner], B, cand)

    t_star = np.empty(m)
    bounds = np.searchsorted(owner, np.arange(m + 1))
    for i in range(m):
        s, e = bounds[i], bounds[i + 1]
        hits = np.flatnonzero(certified[s:e])
        if hits.size:
            t_star[i] = cand[s + hits[0]]
        else:
            q_i = qc[s:e]
            best = q_i.min()
            t_star[i] = cand[s:e][q_i <= best + value_rtol * (1.0 + abs(best))].min()

    low, _, high = expenditure_parts(market, vals, t_star)
    q_star = _q(market, vals, budgets, t_star)
    spend = np.minimum(np.maximum(budgets, low), high)
    binding = (t_star > mult_tol) & (np.abs(spend - budgets) <= budget_tol * budgets)
    return [
        BestResponseResult(
            t_star=float(t_star[i]),
            dual_value=float(q_star[i]),
            expenditure=float(spend[i]),
            binding=bool(binding[i]),
            bracket_width=float(b[i] - a[i]),
            expenditure_low=float(low[i]),
            expenditure_high=float(high[i]),
        )
        for i in range(m)
    ]


def best_response(market: Market, buyer: BuyerAtom, **kwargs) -> BestResponseResult:
    """Smallest minimizer of q over [0, market.t_max] for one buyer."""
    return best_responses(market, [buyer.weights], [buyer.budget], **kwargs)[0]


def brute_force_minimizer(market: Market, buyer: BuyerAtom, points: int = 100_000) -> tuple[float, float]:
    """Grid minimizer of q (smallest grid point attaining the grid minimum) and the grid spacing."""
    grid = np.linspace(0.0, market.t_max, points)
    q = dual_value(market, buyer, grid)
    return float(grid[int(np.argmin(q))]), float(grid[1] - grid[0])
