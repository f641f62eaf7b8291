"""Standard auction formats, their equilibrium bids, and revenue checks.

All three formats share one interim payment rule per bidder: with win
probability A(x) (the competitor CDF, ties split uniformly)

    m(x) = 1{x >= r} * (x * A(x) - int_r^x H)

so analytic revenue is format-free. The simulator is the independent check.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .distributions import TIE_RTOL, competitor_distributions, paced_values, sigma
from .instance import AuctionInstance, PacingProfile

# Samples per simulation shard; each shard gets its own spawned substream.
SHARD_SIZE = 1 << 16


class AuctionFormat(enum.Enum):
    FIRST_PRICE = "fp"
    SECOND_PRICE = "sp"
    ALL_PAY = "ap"

    @classmethod
    def parse(cls, tag) -> "AuctionFormat":
        if isinstance(tag, cls):
            return tag
        aliases = {
            "fp": cls.FIRST_PRICE, "first": cls.FIRST_PRICE, "firstprice": cls.FIRST_PRICE,
            "sp": cls.SECOND_PRICE, "second": cls.SECOND_PRICE, "secondprice": cls.SECOND_PRICE,
            "ap": cls.ALL_PAY, "allpay": cls.ALL_PAY, "all-pay": cls.ALL_PAY,
        }
        key = str(tag).lower().replace("_", "")
        if key not in aliases:
            raise ValueError(f"unknown auction format {tag!r}")
        return aliases[key]


def interim_utility(H, r: float, x: float) -> float:
    """Expected surplus of a bidder with paced value ``x``: 1{x >= r} * int_r^x H."""
    if x < r:
        return 0.0
    return float(H.integral(r, x))


def expected_payment(H, r: float, x: float) -> float:
    """Interim expected payment of one bidder; identical for every format."""
    if x < r:
        return 0.0
    return max(float(x * H.win_probability(x) - H.integral(r, x)), 0.0)


def bid_oracle(fmt, H, r: float, x: float) -> float:
    """Symmetric-equilibrium bid at paced value ``x`` against competitor law ``H``."""
    fmt = AuctionFormat.parse(fmt)
    if fmt is AuctionFormat.FIRST_PRICE:
        return sigma(H, r, x)
    if fmt is AuctionFormat.SECOND_PRICE:
        return float(x)
    if r > 0:
        raise ValueError("all-pay auctions require a zero reserve")
    return expected_payment(H, 0.0, x)


def equilibrium_bid(instance: AuctionInstance, profile: PacingProfile, buyer: int, item: int, fmt) -> float:
    H = competitor_distributions(instance, profile)[item]
    x = paced_values(instance, profile)[buyer, item]
    return bid_oracle(fmt, H, instance.items[item].reserve, x)


def _check_all_pay(instance: AuctionInstance, fmt: AuctionFormat) -> None:
    if fmt is AuctionFormat.ALL_PAY and np.any(instance.reserves() > 0):
        raise ValueError("all-pay auctions require a zero reserve on every item")


def per_type_payments(instance: AuctionInstance, profile: PacingProfile) -> np.ndarray:
    """Expected payment per auction of each buyer atom, summed over items."""
    dists = competitor_distributions(instance, profile)
    x = paced_values(instance, profile)
    reserves = instance.reserves()
    probs = instance.item_probabilities()
    out = np.zeros(instance.num_buyers)
    for a, H in enumerate(dists):
        col = np.array([expected_payment(H, reserves[a], v) for v in x[:, a]])
        out += probs[a] * col
    return out


def analytic_revenue(instance: AuctionInstance, profile: PacingProfile) -> float:
    """Expected revenue per auction: n bidders' interim payments, type-weighted."""
    pay = per_type_payments(instance, profile)
    return float(instance.n * np.dot(instance.buyer_probabilities(), pay))


def _bid_table(instance, profile, fmt) -> tuple[np.ndarray, np.ndarray]:
    dists = competitor_distributions(instance, profile)
    x = paced_values(instance, profile)
    bids = np.empty_like(x)
    for a, H in enumerate(dists):
        r = instance.items[a].reserve
        for i in range(x.shape[0]):
            bids[i, a] = bid_oracle(fmt, H, r, x[i, a])
    return x, bids


@dataclass
class SimulationResult:
    format: str
    mean: float
    std_error: float
    samples: int
    tie_frequency: float
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def _simulate_shard(rng, size, x, bids, item_p, buyer_p, reserves, n, fmt):
    items = rng.choice(len(item_p), size=size, p=item_p)
    who = rng.choice(len(buyer_p), size=(size, n), p=buyer_p)
    vals = x[who, items[:, None]]
    bid = bids[who, items[:, None]]
    r = reserves[items]
    if fmt is AuctionFormat.ALL_PAY:
        return bid.sum(axis=1), np.zeros(size, dtype=bool)
    eligible = vals >= r[:, None]
    masked = np.where(eligible, vals, -np.inf)
    top = masked.max(axis=1)
    has_winner = np.isfinite(top)
    tied = eligible & (masked >= (top - TIE_RTOL * np.abs(top))[:, None])
    n_tied = tied.sum(axis=1)
    # uniform pick among the tied maxima
    pick = np.floor(rng.random(size) * np.maximum(n_tied, 1)).astype(int)
    order = np.cumsum(tied, axis=1) - 1
    winner = np.argmax(tied & (order == pick[:, None]), axis=1)
    rows = np.arange(size)
    if fmt is AuctionFormat.FIRST_PRICE:
        price = bid[rows, winner]
    else:
        others = bid.copy()
        others[rows, winner] = -np.inf
        price = np.maximum(r, others.max(axis=1))
    revenue = np.where(has_winner, price, 0.0)
    return revenue, has_winner & (n_tied > 1)


def simulate_revenue(
    instance: AuctionInstance, profile: PacingProfile, fmt, samples: int, seed: int = 0
) -> SimulationResult:
    """Monte Carlo revenue per auction with every bidder using the equilibrium bid.

    Paced values within a relative ``TIE_RTOL`` of the maximum tie; the
    winner among them is drawn uniformly. Sharded over fixed-size blocks with
    substreams spawned from ``seed``, so results do not depend on hardware.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    fmt = AuctionFormat.parse(fmt)
    profile.check(instance)
    _check_all_pay(instance, fmt)
    x, bids = _bid_table(instance, profile, fmt)
    item_p = instance.item_probabilities()
    buyer_p = instance.buyer_probabilities()
    reserves = instance.reserves()
    shards = -(-samples // SHARD_SIZE)
    streams = np.random.SeedSequence(seed).spawn(shards)
    revenue = np.empty(samples)
    ties = 0
    for s, stream in enumerate(streams):
        lo = s * SHARD_SIZE
        hi = min(lo + SHARD_SIZE, samples)
        rev, tied = _simulate_shard(
            np.random.default_rng(stream), hi - lo, x, bids, item_p, buyer_p, reserves, instance.n, fmt
        )
        revenue[lo:hi] = rev
        ties += int(tied.sum())
    se = float(revenue.std(ddof=1) / np.sqrt(samples)) if samples > 1 else float("nan")
    return SimulationResult(
        format=fmt.value,
        mean=float(revenue.mean()),
        std_error=se,
        samples=samples,
        tie_frequency=ties / samples,
        seed=seed,
    )


@dataclass
class RevenueReport:
    seed: int
    samples: int
    per_type: dict[str, list[float]] = field(default_factory=dict)
    analytic_total: dict[str, float] = field(default_factory=dict)
    simulated: dict[str, SimulationResult] = field(default_factory=dict)
    max_analytic_gap: float = 0.0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "per_type": self.per_type,
            "analytic_total": self.analytic_total,
            "simulated": {k: v.to_dict() for k, v in self.simulated.items()},
            "max_analytic_gap": self.max_analytic_gap,
            "flags": self.flags,
        }


def revenue_equivalence_report(
    instance: AuctionInstance,
    profile: PacingProfile,
    formats: Iterable = ("fp", "sp", "ap"),
    samples: int = 0,
    seed: int = 0,
) -> RevenueReport:
    """Analytic per-type payments per format, plus Monte Carlo totals when ``samples > 0``.

    Per-type payments come from the bids each format actually uses: the
    first-price bid times the win probability, the all-pay bid itself, and
    the generic interim formula for second price. Any cross-format gap above
    1e-9 and any simulated total more than 3 standard errors from the
    analytic one is flagged.
    """
    formats = [AuctionFormat.parse(f) for f in formats]
    if not formats:
        raise ValueError("need at least one format")
    report = RevenueReport(seed=seed, samples=samples)
    dists = competitor_distributions(instance, profile.check(instance))
    x = paced_values(instance, profile)
    item_p = instance.item_probabilities()
    g = instance.buyer_probabilities()
    for fmt in formats:
        _check_all_pay(instance, fmt)
        pay = np.zeros(instance.num_buyers)
        for a, H in enumerate(dists):
            r = instance.items[a].reserve
            for i in range(instance.num_buyers):
                pay[i] += item_p[a] * _format_payment(fmt, H, r, x[i, a])
        report.per_type[fmt.value] = pay.tolist()
        report.analytic_total[fmt.value] = float(instance.n * np.dot(g, pay))
    ref = np.array(report.per_type[formats[0].value])
    for fmt in formats[1:]:
        gap = float(np.max(np.abs(np.array(report.per_type[fmt.value]) - ref), initial=0.0))
        report.max_analytic_gap = max(report.max_analytic_gap, gap)
        if gap > 1e-9:
            report.flags.append(f"analytic payments differ: {formats[0].value} vs {fmt.value} by {gap:.3g}")
    if samples > 0:
        for fmt in formats:
            sim = simulate_revenue(instance, profile, fmt, samples, seed)
            report.simulated[fmt.value] = sim
            gap = abs(sim.mean - report.analytic_total[fmt.value])
            if gap > 3 * sim.std_error:
                report.flags.append(f"{fmt.value}: simulated revenue {gap:.3g} from analytic (> 3 SE)")
    return report


def _format_payment(fmt: AuctionFormat, H, r: float, x: float) -> float:
    """Interim payment computed from the format's own bid."""
    if x < r:
        return 0.0
    if fmt is AuctionFormat.FIRST_PRICE:
        return sigma(H, r, x) * float(H.win_probability(x))
    if fmt is AuctionFormat.ALL_PAY:
        return bid_oracle(fmt, H, r, x)
    return expected_payment(H, r, x)
