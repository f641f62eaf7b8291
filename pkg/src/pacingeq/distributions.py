"""Paced values, their distributions, and the first-price bid function.

Two CDF representations share one small interface (``cdf``, ``cdf_left``,
``integral``, ``win_probability``):

* :class:`EmpiricalStep` -- a right-continuous step CDF over a finite support,
  integrated exactly from its rectangles.
* :class:`Analytic` -- a CDF given by a formula together with its exact
  antiderivative.

Discrete types put atoms in the paced-value distribution. A bidder whose paced
value lands on an atom ties with positive probability; ``win_probability``
resolves such ties uniformly at random, which is what the simulator does.
Away from atoms it equals the CDF.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .instance import AuctionInstance, PacingProfile, dot, value_matrix

# Two paced values closer than this (relative) are treated as a tie.
TIE_RTOL = 1e-12


def _widen(x, rtol):
    x = np.asarray(x, dtype=float)
    pad = rtol * np.abs(x)
    return x - pad, x + pad


class EmpiricalStep:
    """Step CDF with jumps at ``support``; ``cumulative[k]`` is P(X <= support[k]).

    ``competitors`` is the number of i.i.d. draws whose maximum this
    distribution describes (1 for a plain paced-value distribution). The
    single-draw CDF is kept in ``base`` so ties can be split exactly.
    """

    def __init__(
        self,
        support: Sequence[float],
        cumulative: Sequence[float],
        competitors: int = 1,
        base: Sequence[float] | None = None,
    ):
        s = np.asarray(support, dtype=float)
        c = np.asarray(cumulative, dtype=float)
        if s.ndim != 1 or s.shape != c.shape or s.size == 0:
            raise ValueError("support and cumulative must be matching nonempty 1-d arrays")
        if np.any(np.diff(s) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(c) < 0) or c[0] < 0:
            raise ValueError("cumulative must be nondecreasing and nonnegative")
        if abs(c[-1] - 1.0) > 1e-12:
            raise ValueError(f"final cumulative entry is {c[-1]!r}, expected 1")
        if competitors < 1:
            raise ValueError("competitors must be >= 1")
        self.support = s
        self.cumulative = c
        self.competitors = int(competitors)
        self.base = c if base is None else np.asarray(base, dtype=float)
        # area[k] = integral of the CDF from support[0] to support[k]
        self._area = np.concatenate(([0.0], np.cumsum(c[:-1] * np.diff(s))))

    @classmethod
    def from_atoms(cls, values: Sequence[float], weights: Sequence[float]) -> "EmpiricalStep":
        """Distribution of a weighted multiset. Exactly equal values are merged."""
        v = np.asarray(values, dtype=float)
        p = np.asarray(weights, dtype=float)
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        uniq, start = np.unique(v, return_index=True)
        mass = np.add.reduceat(p, start)
        cum = np.cumsum(mass)
        cum = cum / cum[-1]
        cum[-1] = 1.0
        return cls(uniq, cum)

    def __repr__(self) -> str:
        return (
            f"EmpiricalStep(atoms={self.support.size}, competitors={self.competitors}, "
            f"range=[{self.support[0]:.6g}, {self.support[-1]:.6g}])"
        )

    def _lookup(self, table, x, side):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.support, x, side=side) - 1
        out = np.where(idx >= 0, table[np.clip(idx, 0, None)], 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """P(X <= x)."""
        return self._lookup(self.cumulative, x, "right")

    def cdf_left(self, x):
        """P(X < x)."""
        return self._lookup(self.cumulative, x, "left")

    def antiderivative(self, x):
        """Integral of the CDF from -infinity to x."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.support, x, side="right") - 1
        safe = np.clip(idx, 0, None)
        out = np.where(
            idx >= 0,
            self._area[safe] + self.cumulative[safe] * (x - self.support[safe]),
            0.0,
        )
        return out if out.ndim else float(out)

    def integral(self, a, b):
        return self.antiderivative(b) - self.antiderivative(a)

    def win_probability(self, x, rtol: float = TIE_RTOL):
        """Probability that value ``x`` beats ``competitors`` draws, ties split uniformly.

        If the single-draw law has mass ``m`` tied with ``x`` and mass ``L``
        strictly below, the chance of winning against k draws with a uniform
        tie-break is ((L + m)^(k+1) - L^(k+1)) / ((k + 1) m).
        """
        lo, hi = _widen(x, rtol)
        low = self._lookup(self.base, lo, "left")
        high = self._lookup(self.base, hi, "right")
        k = self.competitors
        low = np.asarray(low)
        high = np.asarray(high)
        mass = high - low
        tied = mass > 0
        safe = np.where(tied, mass, 1.0)
        split = (high ** (k + 1) - low ** (k + 1)) / ((k + 1) * safe)
        out = np.where(tied, split, high**k)
        return out if out.ndim else float(out)

    def tie_bounds(self, x, rtol: float = TIE_RTOL):
        """(P(Y < x), P(Y <= x)) with values within ``rtol`` of x counted as tied."""
        lo, hi = _widen(x, rtol)
        return self.cdf_left(lo), self.cdf(hi)


class Analytic:
    """Atomless CDF given by a formula and an exact antiderivative.

    ``antiderivative(x)`` may use any additive constant; only differences are
    used. Both callables must accept numpy arrays.
    """

    def __init__(
        self,
        cdf: Callable[[np.ndarray], np.ndarray],
        antiderivative: Callable[[np.ndarray], np.ndarray],
        name: str = "analytic",
        probe: tuple[float, float] = (0.0, 1.0),
    ):
        self._cdf = cdf
        self._anti = antiderivative
        self.name = name
        grid = np.linspace(probe[0], probe[1], 257)
        vals = np.asarray(cdf(grid), dtype=float)
        if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12) or np.any(np.diff(vals) < -1e-12):
            raise ValueError(f"{name}: cdf is not a nondecreasing map into [0, 1]")

    def __repr__(self) -> str:
        return f"Analytic({self.name})"

    @staticmethod
    def _out(v):
        v = np.asarray(v, dtype=float)
        return v if v.ndim else float(v)

    def cdf(self, x):
        return self._out(self._cdf(np.asarray(x, dtype=float)))

    cdf_left = cdf

    def antiderivative(self, x):
        return self._out(self._anti(np.asarray(x, dtype=float)))

    def integral(self, a, b):
        return self._out(self._anti(np.asarray(b, dtype=float)) - self._anti(np.asarray(a, dtype=float)))

    def win_probability(self, x, rtol: float = TIE_RTOL):
        return self.cdf(x)

    def tie_bounds(self, x, rtol: float = TIE_RTOL):
        c = self.cdf(x)
        return c, c


def uniform_power(k: int) -> Analytic:
    """CDF s^k on [0, 1]: the highest of k i.i.d. uniform draws."""

    def cdf(s):
        return np.clip(s, 0.0, 1.0) ** k

    def anti(s):
        c = np.clip(s, 0.0, 1.0)
        return c ** (k + 1) / (k + 1) + np.maximum(s - 1.0, 0.0)

    return Analytic(cdf, anti, name=f"uniform^{k}")


def arc_distribution() -> Analytic:
    """CDF 2 arcsin(s) / pi on [0, 1], the competitor law of the arc example."""

    def cdf(s):
        return 2.0 * np.arcsin(np.clip(s, 0.0, 1.0)) / np.pi

    def anti(s):
        c = np.clip(s, 0.0, 1.0)
        inner = (2.0 / np.pi) * (c * np.arcsin(c) + np.sqrt(1.0 - c * c) - 1.0)
        return inner + np.maximum(s - 1.0, 0.0)

    return Analytic(cdf, anti, name="arc")


def paced_value(w: Sequence[float], alpha: Sequence[float], t: float) -> float:
    """w.alpha / (1 + t)."""
    if t < 0:
        raise ValueError("multiplier must be nonnegative")
    return dot(w, alpha) / (1.0 + t)


def paced_values(instance: AuctionInstance, profile: PacingProfile) -> np.ndarray:
    """Paced values of every buyer atom for every item, shape (buyers, items)."""
    profile.check(instance)
    raw = value_matrix(instance.weight_matrix(), instance.feature_matrix())
    return raw / (1.0 + profile.multipliers[:, None])


def paced_value_distribution(
    instance: AuctionInstance, profile: PacingProfile, item: int
) -> EmpiricalStep:
    """Distribution of paced values for one item under ``profile``."""
    vals = paced_values(instance, profile)[:, item]
    return EmpiricalStep.from_atoms(vals, instance.buyer_probabilities())


def highest_competitor_distribution(lam, n: int):
    """Distribution of the highest of ``n - 1`` i.i.d. draws from ``lam``."""
    if n < 2:
        raise ValueError("need n >= 2")
    k = n - 1
    if isinstance(lam, EmpiricalStep):
        if lam.competitors != 1:
            raise ValueError("expected a single-draw distribution")
        if k == 1:
            return lam
        return EmpiricalStep(lam.support, lam.cumulative**k, competitors=k, base=lam.cumulative)
    raise TypeError("analytic competitor laws are built directly, e.g. uniform_power(n - 1)")


def competitor_distributions(instance: AuctionInstance, profile: PacingProfile) -> list:
    """Highest-competitor distribution for every item."""
    vals = paced_values(instance, profile)
    probs = instance.buyer_probabilities()
    return [
        highest_competitor_distribution(EmpiricalStep.from_atoms(vals[:, k], probs), instance.n)
        for k in range(instance.num_items)
    ]


def cdf_integral(dist, a: float, b: float) -> float:
    """Integral of the CDF over [a, b]."""
    if b < a:
        raise ValueError("need a <= b")
    return dist.integral(a, b)


def sigma(H, r: float, x: float, ties: str = "uniform") -> float:
    """First-price equilibrium bid for paced value ``x`` against competitor law ``H``.

    Identity below the reserve; 0 when no competitor mass lies at or below x;
    otherwise x minus the integral of H over [r, x] divided by the probability
    of winning. ``ties="uniform"`` splits ties at random (the simulator's
    rule); ``ties="win"`` lets every tied top bidder win, so the win
    probability is H(x) itself. With an atomless H the two agree.
    """
    if x < r:
        return float(x)
    if ties == "uniform":
        win = H.win_probability(x)
    elif ties == "win":
        win = H.cdf(x)
    else:
        raise ValueError(f"unknown tie rule {ties!r}")
    if win <= 0:
        return 0.0
    return float(x - H.integral(r, x) / win)
