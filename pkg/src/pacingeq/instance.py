"""Discretized auction instances: item atoms, buyer atoms, pacing profiles.

An instance is a finite market. Item types carry a feature vector, a
probability and a reserve price; buyer types carry a weight vector, a budget
and a probability. A buyer's value for an item is the inner product of the
two vectors.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

# Tolerances on total probability mass.
MASS_RENORMALIZE_TOL = 1e-9
MASS_EXACT_TOL = 1e-12


class InstanceError(ValueError):
    """Raised when an instance description violates a model invariant."""


def dot(w: Sequence[float], alpha: Sequence[float]) -> float:
    """Inner product summed in ascending index order."""
    if len(w) != len(alpha):
        raise InstanceError(
            f"dimension mismatch: weights have {len(w)} entries, features {len(alpha)}"
        )
    total = 0.0
    for a, b in zip(w, alpha):
        total += float(a) * float(b)
    return total


@dataclass(frozen=True)
class ItemAtom:
    features: tuple[float, ...]
    probability: float
    reserve: float = 0.0


@dataclass(frozen=True)
class BuyerAtom:
    weights: tuple[float, ...]
    budget: float
    probability: float

    @property
    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.weights))


@dataclass(frozen=True)
class AuctionInstance:
    """A validated market. Build through :func:`validate_instance` or the generators."""

    n: int
    d: int
    items: tuple[ItemAtom, ...]
    buyers: tuple[BuyerAtom, ...]
    b_min: float
    omega: float

    @property
    def t_max(self) -> float:
        """Upper end of the multiplier search box, omega / b_min."""
        return self.omega / self.b_min

    @property
    def num_buyers(self) -> int:
        return len(self.buyers)

    @property
    def num_items(self) -> int:
        return len(self.items)

    def weight_matrix(self) -> np.ndarray:
        return np.array([b.weights for b in self.buyers], dtype=float)

    def feature_matrix(self) -> np.ndarray:
        return np.array([it.features for it in self.items], dtype=float)

    def budgets(self) -> np.ndarray:
        return np.array([b.budget for b in self.buyers], dtype=float)

    def buyer_probabilities(self) -> np.ndarray:
        return np.array([b.probability for b in self.buyers], dtype=float)

    def item_probabilities(self) -> np.ndarray:
        return np.array([it.probability for it in self.items], dtype=float)

    def reserves(self) -> np.ndarray:
        return np.array([it.reserve for it in self.items], dtype=float)

    def values(self) -> np.ndarray:
        """Unpaced values, shape (buyers, items)."""
        return value_matrix(self.weight_matrix(), self.feature_matrix())

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "items": [
                {
                    "features": list(it.features),
                    "probability": it.probability,
                    "reserve": it.reserve,
                }
                for it in self.items
            ],
            "buyers": [
                {
                    "weights": list(b.weights),
                    "budget": b.budget,
                    "probability": b.probability,
                }
                for b in self.buyers
            ],
        }


def value_matrix(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    """All pairwise inner products, accumulated feature by feature in index order."""
    weights = np.asarray(weights, dtype=float)
    features = np.asarray(features, dtype=float)
    out = np.zeros((weights.shape[0], features.shape[0]))
    for k in range(weights.shape[1]):
        out += weights[:, k, None] * features[None, :, k]
    return out


class PacingProfile:
    """One multiplier per buyer atom, stored as a read-only float array."""

    __slots__ = ("multipliers",)

    def __init__(self, multipliers: Sequence[float] | np.ndarray):
        arr = np.array(multipliers, dtype=float).reshape(-1)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0):
            raise InstanceError("multipliers must be finite and nonnegative")
        arr.setflags(write=False)
        self.multipliers = arr

    @classmethod
    def zeros(cls, instance: AuctionInstance) -> "PacingProfile":
        return cls(np.zeros(instance.num_buyers))

    def __len__(self) -> int:
        return len(self.multipliers)

    def __getitem__(self, i: int) -> float:
        return float(self.multipliers[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PacingProfile):
            return NotImplemented
        return np.array_equal(self.multipliers, other.multipliers)

    def __repr__(self) -> str:
        return f"PacingProfile({self.multipliers.tolist()!r})"

    def check(self, instance: AuctionInstance) -> "PacingProfile":
        """Validate against an instance: one entry per buyer, all within [0, omega/b_min]."""
        if len(self) != instance.num_buyers:
            raise InstanceError(
                f"profile has {len(self)} entries for {instance.num_buyers} buyer atoms"
            )
        # A few ulps of slack for values computed as omega/b_min elsewhere.
        if np.any(self.multipliers > instance.t_max * (1 + 1e-12)):
            raise InstanceError("multiplier above omega / b_min")
        return self

    def to_list(self) -> list[float]:
        return self.multipliers.tolist()


def _mass_check(probs: list[float], what: str) -> list[float]:
    total = math.fsum(probs)
    if abs(total - 1.0) <= MASS_EXACT_TOL:
        return probs
    if abs(total - 1.0) <= MASS_RENORMALIZE_TOL:
        return [p / total for p in probs]
    raise InstanceError(f"{what} probability mass sums to {total!r}, expected 1")


def validate_instance(raw: dict[str, Any]) -> AuctionInstance:
    """Turn a parsed instance document into an :class:`AuctionInstance`.

    Derives ``b_min`` (smallest budget) and ``omega`` (largest value over all
    buyer/item pairs). Probability lists within 1e-9 of unit mass are
    renormalized, anything further off is rejected.
    """
    try:
        n = int(raw["n"])
        d = int(raw["d"])
        raw_items = list(raw["items"])
        raw_buyers = list(raw["buyers"])
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance description: {exc}") from exc

    if n < 2:
        raise InstanceError("need at least n = 2 bidders per auction")
    if d < 1:
        raise InstanceError("feature dimension d must be at least 1")
    if d == 1:
        warnings.warn("d = 1 instance: structural results assume d >= 2", stacklevel=2)
    if not raw_items:
        raise InstanceError("empty item atom list")
    if not raw_buyers:
        raise InstanceError("empty buyer atom list")

    features, item_probs, reserves = [], [], []
    for k, it in enumerate(raw_items):
        f = tuple(float(x) for x in it["features"])
        if len(f) != d:
            raise InstanceError(f"dimension mismatch: item {k} has {len(f)} features, d = {d}")
        if any(not math.isfinite(x) or x < 0 for x in f) or not any(x > 0 for x in f):
            raise InstanceError(f"item {k}: features must be nonnegative with one positive entry")
        p = float(it["probability"])
        if not (0 < p <= 1):
            raise InstanceError(f"item {k}: probability mass must lie in (0, 1]")
        r = float(it.get("reserve", 0.0))
        if not math.isfinite(r) or r < 0:
            raise InstanceError(f"item {k}: reserve must be nonnegative")
        features.append(f)
        item_probs.append(p)
        reserves.append(r)

    weights, budgets, buyer_probs = [], [], []
    for j, b in enumerate(raw_buyers):
        w = tuple(float(x) for x in b["weights"])
        if len(w) != d:
            raise InstanceError(f"dimension mismatch: buyer {j} has {len(w)} weights, d = {d}")
        if any(not math.isfinite(x) or x < 0 for x in w) or not any(x > 0 for x in w):
            raise InstanceError(f"buyer {j}: nonpositive weight vector, need w >= 0 and w != 0")
        budget = float(b["budget"])
        if not math.isfinite(budget) or budget <= 0:
            raise InstanceError(f"buyer {j}: budget floor violated, budget must be > 0")
        p = float(b["probability"])
        if not (0 < p <= 1):
            raise InstanceError(f"buyer {j}: probability mass must lie in (0, 1]")
        weights.append(w)
        budgets.append(budget)
        buyer_probs.append(p)

    item_probs = _mass_check(item_probs, "item")
    buyer_probs = _mass_check(buyer_probs, "buyer")

    items = tuple(ItemAtom(f, p, r) for f, p, r in zip(features, item_probs, reserves))
    buyers = tuple(BuyerAtom(w, B, p) for w, B, p in zip(weights, budgets, buyer_probs))
    omega = max(dot(b.weights, it.features) for b in buyers for it in items)
    if not omega > 0:
        raise InstanceError("omega must be positive")
    return AuctionInstance(
        n=n, d=d, items=items, buyers=buyers, b_min=min(budgets), omega=omega
    )


def dumps_instance(instance: AuctionInstance) -> str:
    # repr-based float output round-trips exactly (shortest repr, <= 17 digits).
    return json.dumps(instance.to_dict(), indent=1)


def loads_instance(text: str) -> AuctionInstance:
    return validate_instance(json.loads(text))


def save_instance(instance: AuctionInstance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance))


def load_instance(path: str | Path) -> AuctionInstance:
    return loads_instance(Path(path).read_text())


def _near_square_factors(count: int) -> tuple[int, int]:
    """Factor pair (small, large) of ``count`` with the smallest gap."""
    small = int(math.isqrt(count))
    while count % small:
        small -= 1
    return small, count // small


def arc_budget(w: Sequence[float]) -> float:
    """Budget (2|w| - w1 - w2) / (pi |w|) of the arc example."""
    norm = math.hypot(w[0], w[1])
    return (2 * norm - w[0] - w[1]) / (math.pi * norm)


def gen_arc_instance(a: float = 2.0, b: float = 3.0, count: int = 320) -> AuctionInstance:
    """Discretize the quarter-annulus example with two basis-vector items.

    Buyer weights sit on a sheared radius x angle grid over
    ``{w >= 0 : a <= |w| <= b}``: ``count`` factors into radius rows and
    angle columns (the larger factor for the angles), radii evenly spaced in
    area from a to b, and each radius row shifted by a fraction of an angle
    cell so that all ``count`` angles are distinct and evenly spaced over
    [0, pi/2]. The last atom is (0, b), so omega = b. Every atom has equal
    mass and budget (2|w| - w1 - w2) / (pi |w|).

    Distinct angles matter: co-linear types with a common budget are paced
    onto a single point, and a heavy shared atom leaves a wide band of
    discrete fixed points.
    """
    if count < 1:
        raise InstanceError("count must be at least 1")
    if a < 1:
        raise InstanceError("inner radius a must be at least 1")
    if not b > a:
        raise InstanceError("outer radius b must exceed a")
    n_radii, n_angles = _near_square_factors(count)
    buyers = []
    for i in range(n_radii):
        frac = i / (n_radii - 1) if n_radii > 1 else 1.0
        rho = math.sqrt(a * a + (b * b - a * a) * frac)
        for j in range(n_angles):
            k = j * n_radii + i
            phi = k * (math.pi / 2) / max(count - 1, 1)
            # exact zeros on the two axes
            w = [rho * math.cos(phi), rho * math.sin(phi)] if 0 < k < count - 1 else (
                [rho, 0.0] if k == 0 else [0.0, rho])
            buyers.append({"weights": w, "budget": arc_budget(w), "probability": 1.0 / count})
    raw = {
        "n": 2,
        "d": 2,
        "items": [
            {"features": [1.0, 0.0], "probability": 0.5, "reserve": 0.0},
            {"features": [0.0, 1.0], "probability": 0.5, "reserve": 0.0},
        ],
        "buyers": buyers,
    }
    return validate_instance(raw)


def gen_grid_instance(points: int = 10, budget: float = 0.6, n: int = 3) -> AuctionInstance:
    """Uniform-grid instance: weights on (1,2)^2, items on the 1-simplex.

    ``points`` cell midpoints per weight axis, all budgets equal, and
    ``points`` items spaced evenly on {(x, 1-x) : x in [0, 1]} including both
    endpoints. Reserves are zero.
    """
    if points < 2:
        raise InstanceError("need at least 2 grid points per axis")
    axis = [1.0 + (i + 0.5) / points for i in range(points)]
    buyers = [
        {"weights": [w1, w2], "budget": budget, "probability": 1.0 / points**2}
        for w1 in axis
        for w2 in axis
    ]
    xs = [i / (points - 1) for i in range(points)]
    items = [
        {"features": [x, 1.0 - x], "probability": 1.0 / points, "reserve": 0.0} for x in xs
    ]
    return validate_instance({"n": n, "d": 2, "items": items, "buyers": buyers})
