"""Distribution, quantile, and integrated (second-order) functions.

All four functions are evaluated exactly from a sorted scenario view: the CDF
is a right-continuous step function, the quantile function its left-continuous
inverse, and the two second-order functions are the piecewise-linear integrals
of those.  The Lorenz-type integral `lorenz` is the convex conjugate of
`integrated_cdf`; `lorenz_conjugate` evaluates that conjugate directly so the
pair can be cross-checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .scenario import RandomVariable, _sum_ascending


@dataclass(frozen=True)
class SortedScenarioView:
    """Scenarios of a random variable in nondecreasing value order.

    ``order`` is a stable permutation (ties keep ascending scenario index),
    ``cum_probs[j]`` is the probability mass of the first j+1 sorted atoms,
    with the last entry clamped to exactly 1.
    """

    rv: RandomVariable

    @cached_property
    def order(self) -> np.ndarray:
        idx = np.argsort(self.rv.values, kind="stable")
        idx.flags.writeable = False
        return idx

    @cached_property
    def sorted_values(self) -> np.ndarray:
        v = self.rv.values[self.order]
        v.flags.writeable = False
        return v

    @cached_property
    def sorted_probs(self) -> np.ndarray:
        p = self.rv.space.probs[self.order]
        p.flags.writeable = False
        return p

    @cached_property
    def cum_probs(self) -> np.ndarray:
        c = np.cumsum(self.sorted_probs)
        c[-1] = 1.0
        c.flags.writeable = False
        return c

    @cached_property
    def prefix_weighted(self) -> np.ndarray:
        """Cumulative sums of p_(j) * z_(j) over the sorted atoms."""
        s = np.cumsum(self.sorted_probs * self.sorted_values)
        s.flags.writeable = False
        return s

    @cached_property
    def distinct_values(self) -> np.ndarray:
        v = np.unique(self.sorted_values)
        v.flags.writeable = False
        return v

    @cached_property
    def distinct_integrated_cdf(self) -> np.ndarray:
        """E[max(eta - Z, 0)] evaluated at each distinct atom eta."""
        eta = self.distinct_values
        gaps = np.maximum(eta[:, None] - self.rv.values[None, :], 0.0)
        h2 = gaps @ self.rv.space.probs
        h2.flags.writeable = False
        return h2


def sorted_view(Z: RandomVariable) -> SortedScenarioView:
    """Sorted view of Z, cached on the (immutable) random variable."""
    cache = Z.__dict__.get("_sorted_view")
    if cache is None:
        cache = SortedScenarioView(Z)
        Z.__dict__["_sorted_view"] = cache
    return cache


def cdf(Z: RandomVariable, eta: float) -> float:
    """P[Z <= eta] (right-continuous step function)."""
    eta = float(eta)
    if math.isnan(eta):
        raise DomainError("cdf argument must not be NaN")
    view = sorted_view(Z)
    j = int(np.searchsorted(view.sorted_values, eta, side="right"))
    if j == 0:
        return 0.0
    return float(view.cum_probs[j - 1])


def quantile(Z: RandomVariable, p: float) -> float:
    """Left-continuous quantile: inf{eta : P[Z <= eta] >= p}, for p in (0, 1]."""
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise DomainError(f"quantile level must lie in (0, 1], got {p!r}")
    view = sorted_view(Z)
    j = int(np.searchsorted(view.cum_probs, p, side="left"))
    if j >= view.cum_probs.size:
        j = view.cum_probs.size - 1
    return float(view.sorted_values[j])


def integrated_cdf(Z: RandomVariable, eta: float) -> float:
    """E[max(eta - Z, 0)]: the integral of the CDF up to eta.

    Convex, nondecreasing, piecewise linear in eta with breakpoints at the
    atoms of Z.
    """
    eta = float(eta)
    if math.isnan(eta):
        raise DomainError("integrated_cdf argument must not be NaN")
    return _sum_ascending(Z.space.probs * np.maximum(eta - Z.values, 0.0))


def lorenz(Z: RandomVariable, p: float) -> float:
    """Integral of the quantile function over (0, p].

    Concave and piecewise linear on [0, 1] with breakpoints at the cumulative
    probabilities of the sorted atoms; returns +inf outside [0, 1] (the
    concave extended-real convention).  lorenz(Z, 1) equals E[Z].
    """
    p = float(p)
    if math.isnan(p):
        raise DomainError("lorenz level must not be NaN")
    if p < 0.0 or p > 1.0:
        return math.inf
    if p == 0.0:
        return 0.0
    view = sorted_view(Z)
    # Full atoms strictly below p, then the partial atom containing p.
    j = int(np.searchsorted(view.cum_probs, p, side="left"))
    if j >= view.cum_probs.size:
        j = view.cum_probs.size - 1
    total = 0.0
    if j > 0:
        total = float(view.prefix_weighted[j - 1])
    lower = float(view.cum_probs[j - 1]) if j > 0 else 0.0
    total += (p - lower) * float(view.sorted_values[j])
    return total


def lorenz_breakpoints(Z: RandomVariable) -> np.ndarray:
    """Levels in (0, 1] where the slope of lorenz(Z, .) can change."""
    return np.unique(sorted_view(Z).cum_probs)


def lorenz_conjugate(Z: RandomVariable, p: float) -> float:
    """sup_eta [p * eta - integrated_cdf(Z, eta)], for p in [0, 1].

    The supremum is attained at an atom of Z, so only the distinct scenario
    values need to be scanned.  Equals lorenz(Z, p) by conjugate duality.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"conjugate level must lie in [0, 1], got {p!r}")
    if p == 0.0:
        return 0.0
    view = sorted_view(Z)
    return float(np.max(p * view.distinct_values - view.distinct_integrated_cdf))
