"""Stochastic dominance tests and interval-restricted Lorenz dominance
constraints.

First- and second-order dominance each run two logically equivalent routes
(the distribution side and the quantile side); a disagreement raises an
invariant violation, acting as a built-in bug trap for the duality between
the integrated CDF and the Lorenz function.

The interval constraint "rho_p <= 0 for all p in [alpha, beta]" is reduced to
finitely many levels: both Lorenz functions are piecewise linear with
breakpoints among the cumulative scenario probabilities, so a grid augmented
with those breakpoints checks the continuum exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, DomainError, InvariantViolation, StructuralError
from .integrands import Curvature, DecisionPoint, MaxAffineIntegrand, evaluate, subgradient_selector
from .quantiles import lorenz, lorenz_breakpoints
from .risk import Orientation, avar_identifier
from .scenario import InfoPartition, RandomVariable


@dataclass(frozen=True)
class DominanceConstraint:
    """Benchmark Y with a level interval [alpha, beta] and a finite grid.

    Grid levels are strictly increasing inside [alpha, beta] and include both
    endpoints.  alpha = 0 is allowed only together with beta = 1 (the full-
    interval mode of the converse optimality branch); in that mode the grid
    stays inside (0, 1] and the p -> 0 endpoint is enforced through the
    augmented breakpoints, which is equivalent to comparing essential infima.
    """

    benchmark: RandomVariable
    alpha: float
    beta: float
    grid: tuple[float, ...]

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (0.0 <= a <= b <= 1.0):
            raise DomainError(f"interval [{a}, {b}] must satisfy 0 <= alpha <= beta <= 1")
        if a == 0.0 and b < 1.0:
            raise DomainError("alpha = 0 requires beta = 1 (full-interval mode)")
        grid = tuple(float(p) for p in self.grid)
        if not grid:
            raise StructuralError("grid must be nonempty")
        if any(q <= p for p, q in zip(grid, grid[1:])):
            raise StructuralError("grid levels must be strictly increasing")
        if grid[0] < a or grid[-1] > b:
            raise DomainError("grid levels must lie inside [alpha, beta]")
        if grid[0] <= 0.0:
            raise DomainError("grid levels must be strictly positive")
        if a > 0.0 and grid[0] != a:
            raise StructuralError("grid must include alpha")
        if grid[-1] != b:
            raise StructuralError("grid must include beta")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "grid", grid)

    def augmented_levels(self, *variables: RandomVariable) -> np.ndarray:
        """Grid levels plus every Lorenz breakpoint of the benchmark and the
        given variables that falls inside [alpha, beta].

        At any fixed x the continuum constraint over [alpha, beta] holds iff
        it holds on these levels.
        """
        pieces = [np.asarray(self.grid)]
        for Z in (self.benchmark, *variables):
            bp = lorenz_breakpoints(Z)
            pieces.append(bp[(bp >= self.alpha) & (bp <= self.beta)])
        merged = np.unique(np.concatenate(pieces))
        return merged[merged > 0.0]


# Dominance booleans run in exact rational arithmetic.  Every stored float is
# a rational number; renormalizing the probabilities inside Fraction makes an
# equiprobable space exactly equiprobable again, so tie cases (shifted copies,
# repeated lattice values) cannot be flipped by rounding and the two routes of
# each test agree identically whenever the implementation is correct.


def _exact_distribution(Z: RandomVariable) -> list[tuple[Fraction, Fraction]]:
    """(value, probability) pairs sorted by value, mass renormalized to 1."""
    probs = [Fraction(float(p)) for p in Z.space.probs]
    total = sum(probs)
    return sorted(
        (Fraction(float(v)), p / total) for v, p in zip(Z.values, probs)
    )


def _exact_cdf(pairs, eta: Fraction) -> Fraction:
    return sum((p for v, p in pairs if v <= eta), Fraction(0))


def _exact_quantile(pairs, level: Fraction) -> Fraction:
    acc = Fraction(0)
    for v, p in pairs:
        acc += p
        if acc >= level:
            return v
    return pairs[-1][0]


def _exact_integrated_cdf(pairs, eta: Fraction) -> Fraction:
    return sum((p * (eta - v) for v, p in pairs if v <= eta), Fraction(0))


def _exact_lorenz(pairs, level: Fraction) -> Fraction:
    acc = Fraction(0)
    mass = Fraction(0)
    for v, p in pairs:
        take = min(p, level - mass)
        if take <= 0:
            break
        acc += take * v
        mass += take
    return acc


def _merged_atoms(px, py) -> list[Fraction]:
    return sorted({v for v, _ in px} | {v for v, _ in py})


def _merged_breakpoints(px, py) -> list[Fraction]:
    out = set()
    for pairs in (px, py):
        acc = Fraction(0)
        for _, p in pairs:
            acc += p
            out.add(acc)
    return sorted(out)


def dominates_first_order(X: RandomVariable, Y: RandomVariable) -> bool:
    """X dominates Y in the first order (every nondecreasing utility prefers X).

    Distribution route: H_X <= H_Y on the merged atoms.  Quantile route:
    quantile_X >= quantile_Y on the merged cumulative breakpoints.  Both are
    exact for step functions; they must agree.
    """
    px, py = _exact_distribution(X), _exact_distribution(Y)
    direct = all(_exact_cdf(px, eta) <= _exact_cdf(py, eta) for eta in _merged_atoms(px, py))
    inverse = all(
        _exact_quantile(px, p) >= _exact_quantile(py, p)
        for p in _merged_breakpoints(px, py)
    )
    if direct != inverse:
        raise InvariantViolation(
            "first-order dominance routes disagree "
            f"(distribution: {direct}, quantile: {inverse})"
        )
    return direct


def dominates_second_order(X: RandomVariable, Y: RandomVariable) -> bool:
    """X dominates Y in the second order (every risk-averse utility prefers X).

    Direct route: integrated_cdf_X <= integrated_cdf_Y on the merged atoms
    (both sides are piecewise linear in eta with breakpoints at atoms).
    Inverse route: lorenz_X >= lorenz_Y on the merged cumulative breakpoints.
    The routes are conjugate-dual and must agree.
    """
    px, py = _exact_distribution(X), _exact_distribution(Y)
    direct = all(
        _exact_integrated_cdf(px, eta) <= _exact_integrated_cdf(py, eta)
        for eta in _merged_atoms(px, py)
    )
    inverse = all(
        _exact_lorenz(px, p) >= _exact_lorenz(py, p)
        for p in _merged_breakpoints(px, py)
    )
    if direct != inverse:
        raise InvariantViolation(
            "second-order dominance routes disagree "
            f"(integrated-CDF: {direct}, Lorenz: {inverse})"
        )
    return direct


def _require_concave(G: MaxAffineIntegrand):
    if G.curvature is not Curvature.CONCAVE:
        raise ConfigurationError("constraint integrand must be concave-flagged")


def constraint_values(
    G: MaxAffineIntegrand, x: DecisionPoint, C: DominanceConstraint
) -> list[float]:
    """rho_p = lorenz(Y, p) - lorenz(G(x), p) at each grid level.

    Feasibility of the dominance constraint on the grid means all values
    are <= 0.
    """
    _require_concave(G)
    Z = evaluate(G, x)
    return [lorenz(C.benchmark, p) - lorenz(Z, p) for p in C.grid]


def constraint_values_at(
    G: MaxAffineIntegrand, x: DecisionPoint, C: DominanceConstraint, levels
) -> np.ndarray:
    """rho_p at arbitrary levels in (0, 1] (used with augmented grids)."""
    _require_concave(G)
    Z = evaluate(G, x)
    return np.array([lorenz(C.benchmark, float(p)) - lorenz(Z, float(p)) for p in levels])


def in_B(X: RandomVariable, Y: RandomVariable, C: DominanceConstraint) -> bool:
    """Membership of X in the Lorenz-dominance set over Y at the grid levels."""
    return all(lorenz(X, p) >= lorenz(Y, p) for p in C.grid)


def uniform_dominance_margin(
    G: MaxAffineIntegrand, x_tilde: DecisionPoint, C: DominanceConstraint
) -> float:
    """min over the grid of lorenz(G(x_tilde), p) - lorenz(Y, p).

    A strictly positive margin is the Slater-type constraint qualification.
    With a grid refined by ``augmented_levels`` the minimum equals the true
    infimum over [alpha, beta].
    """
    _require_concave(G)
    Z = evaluate(G, x_tilde)
    return min(lorenz(Z, p) - lorenz(C.benchmark, p) for p in C.grid)


def constraint_subgradient(
    G: MaxAffineIntegrand,
    x: DecisionPoint,
    p: float,
    info: InfoPartition | None = None,
) -> np.ndarray:
    """Subgradient (block rows) of the convex map x -> rho_p(G(x)).

    Built from the lower identifier zeta of G(x) at level p and a concave
    selector s of G at x:  per block, -E[p * zeta * s | info].
    """
    _require_concave(G)
    from .composite import _check_measurable_structure, _conditional_blocks, _expand_decision

    _check_measurable_structure(x, info)
    x_exp = _expand_decision(x, info)
    Z = evaluate(G, x_exp)
    zeta = avar_identifier(Z, p, Orientation.LOWER).zeta
    sel = subgradient_selector(G, x_exp)
    blocks = _conditional_blocks(G.space, info, p * zeta, sel.rows)
    return -blocks
