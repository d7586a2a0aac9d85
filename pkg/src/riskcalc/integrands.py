"""Scenario-indexed max-affine (or min-affine) integrands.

An integrand maps a decision to a random variable, scenario by scenario:
CONVEX integrands take the max of finitely many affine pieces, CONCAVE ones
the min.  Decisions may be deterministic (one vector) or measurable with
respect to an information partition (one vector per block).

Because every piece is affine, directional derivatives, differential
quotients, and subgradient selectors are all exact: a selector picks one
active piece per scenario, and any scenario-wise convex combination of
selectors is again a valid selector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .scenario import InfoPartition, ProbSpace, RandomVariable, _readonly

# A piece is active when its value is within this of the scenario max/min.
ACTIVITY_TOL = 1e-10


class Curvature(enum.Enum):
    CONVEX = "convex"
    CONCAVE = "concave"


@dataclass(frozen=True, eq=False)
class DecisionPoint:
    """Decision vector(s): one row per partition block.

    ``partition is None`` means a deterministic decision, stored as a single
    row.  Block-measurable decisions carry the partition they refer to.
    """

    vectors: np.ndarray
    partition: InfoPartition | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2 or v.shape[1] == 0:
            raise StructuralError("decision must be a vector or a stack of vectors")
        if not np.all(np.isfinite(v)):
            raise DomainError("decision coordinates must be finite")
        expected = 1 if self.partition is None else self.partition.num_blocks
        if v.shape[0] != expected:
            raise StructuralError(
                f"decision has {v.shape[0]} rows, partition has {expected} blocks"
            )
        object.__setattr__(self, "vectors", _readonly(v))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_blocks(self) -> int:
        return self.vectors.shape[0]

    def same_structure(self, other: "DecisionPoint") -> bool:
        return (
            self.dim == other.dim
            and self.num_blocks == other.num_blocks
            and (
                (self.partition is None and other.partition is None)
                or self.partition == other.partition
            )
        )

    def row_for_scenario(self, k: int) -> np.ndarray:
        if self.partition is None:
            return self.vectors[0]
        return self.vectors[self.partition.block_of[k]]

    def scenario_matrix(self, space: ProbSpace) -> np.ndarray:
        """Expand to one row per scenario."""
        if self.partition is None:
            return np.broadcast_to(self.vectors[0], (space.size, self.dim))
        return self.vectors[self.partition.block_of]

    def combine(self, coeff: float, other: "DecisionPoint", ocoeff: float) -> "DecisionPoint":
        if not self.same_structure(other):
            raise StructuralError("decisions have different block structure")
        return DecisionPoint(coeff * self.vectors + ocoeff * other.vectors, self.partition)


def deterministic(x) -> DecisionPoint:
    return DecisionPoint(np.atleast_1d(np.asarray(x, dtype=float)))


@dataclass(frozen=True, eq=False)
class MaxAffineIntegrand:
    """Per scenario k: f(x, k) = max_j (<slopes[k][j], x> + offsets[k][j])
    for CONVEX curvature, min over the same pieces for CONCAVE.

    ``slopes[k]`` is an (m_k, n) array and ``offsets[k]`` an (m_k,) array;
    every scenario needs at least one piece.
    """

    space: ProbSpace
    slopes: tuple[np.ndarray, ...]
    offsets: tuple[np.ndarray, ...]
    curvature: Curvature

    def __post_init__(self):
        if len(self.slopes) != self.space.size or len(self.offsets) != self.space.size:
            raise StructuralError("need one piece family per scenario")
        dims = set()
        slopes = []
        offsets = []
        for k, (A, b) in enumerate(zip(self.slopes, self.offsets)):
            A = np.asarray(A, dtype=float)
            b = np.asarray(b, dtype=float)
            if A.ndim != 2 or A.shape[0] == 0:
                raise StructuralError(f"scenario {k} needs at least one affine piece")
            if b.shape != (A.shape[0],):
                raise StructuralError(f"scenario {k}: offsets do not match pieces")
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
                raise DomainError(f"scenario {k}: piece coefficients must be finite")
            dims.add(A.shape[1])
            slopes.append(_readonly(A))
            offsets.append(_readonly(b))
        if len(dims) != 1:
            raise StructuralError("all scenarios must share the decision dimension")
        object.__setattr__(self, "slopes", tuple(slopes))
        object.__setattr__(self, "offsets", tuple(offsets))

    @property
    def dim(self) -> int:
        return self.slopes[0].shape[1]

    def _check_decision(self, x: DecisionPoint):
        if x.dim != self.dim:
            raise StructuralError(
                f"decision dimension {x.dim} does not match integrand dimension {self.dim}"
            )
        if x.partition is not None and x.partition.space != self.space:
            raise StructuralError("decision partition lives on a different space")

    def piece_values(self, k: int, xk: np.ndarray) -> np.ndarray:
        return self.slopes[k] @ xk + self.offsets[k]

    def scenario_value(self, k: int, xk: np.ndarray) -> float:
        vals = self.piece_values(k, xk)
        if self.curvature is Curvature.CONVEX:
            return float(np.max(vals))
        return float(np.min(vals))

    def active_pieces(self, k: int, xk: np.ndarray) -> np.ndarray:
        """Indices of pieces within ACTIVITY_TOL of the scenario max/min."""
        vals = self.piece_values(k, xk)
        if self.curvature is Curvature.CONVEX:
            best = np.max(vals)
            return np.nonzero(vals >= best - ACTIVITY_TOL)[0]
        best = np.min(vals)
        return np.nonzero(vals <= best + ACTIVITY_TOL)[0]


@dataclass(frozen=True, eq=False)
class SubgradientSelector:
    """One active-piece gradient per scenario: rows[k] in the scenario-k
    subdifferential (superdifferential for concave integrands)."""

    space: ProbSpace
    rows: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=float)
        if r.ndim != 2 or r.shape[0] != self.space.size:
            raise StructuralError("selector needs one gradient row per scenario")
        object.__setattr__(self, "rows", _readonly(r))


def evaluate(F: MaxAffineIntegrand, x: DecisionPoint) -> RandomVariable:
    """The random variable F(x)."""
    F._check_decision(x)
    out = np.empty(F.space.size)
    for k in range(F.space.size):
        out[k] = F.scenario_value(k, x.row_for_scenario(k))
    return RandomVariable(F.space, out)


def directional_derivative(
    F: MaxAffineIntegrand, x: DecisionPoint, h: DecisionPoint
) -> RandomVariable:
    """Scenario-wise one-sided directional derivative F'(x; h).

    Exact for max-affine pieces: max over active pieces of <slope, h_k> for
    CONVEX, min for CONCAVE.
    """
    F._check_decision(x)
    if not x.same_structure(h):
        raise StructuralError("point and direction have different block structure")
    out = np.empty(F.space.size)
    for k in range(F.space.size):
        act = F.active_pieces(k, x.row_for_scenario(k))
        rates = F.slopes[k][act] @ h.row_for_scenario(k)
        out[k] = float(np.max(rates)) if F.curvature is Curvature.CONVEX else float(
            np.min(rates)
        )
    return RandomVariable(F.space, out)


def differential_quotient(
    F: MaxAffineIntegrand, x: DecisionPoint, h: DecisionPoint, t: float
) -> RandomVariable:
    """(F(x + t*h) - F(x)) / t, scenario-wise; requires t > 0.

    Nondecreasing in t for CONVEX integrands (nonincreasing for CONCAVE) and
    sandwiched between the t = -1 and t = 1 secants.
    """
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"quotient step must be positive, got {t!r}")
    shifted = evaluate(F, x.combine(1.0, h, t))
    base = evaluate(F, x)
    return RandomVariable(F.space, (shifted.values - base.values) / t)


def subgradient_selector(
    F: MaxAffineIntegrand,
    x: DecisionPoint,
    direction: DecisionPoint | None = None,
) -> SubgradientSelector:
    """Measurable selector of the scenario-wise subdifferential at x.

    Without a direction, picks the lowest-index active piece.  With one,
    picks per scenario the active piece maximizing <slope, direction_k>
    (minimizing for CONCAVE), so that <rows[k], direction_k> equals the
    directional derivative scenario-wise.  Ties go to the lowest index.
    """
    F._check_decision(x)
    if direction is not None and not x.same_structure(direction):
        raise StructuralError("point and direction have different block structure")
    rows = np.empty((F.space.size, F.dim))
    for k in range(F.space.size):
        act = F.active_pieces(k, x.row_for_scenario(k))
        if direction is None:
            chosen = act[0]
        else:
            rates = F.slopes[k][act] @ direction.row_for_scenario(k)
            pos = (
                int(np.argmax(rates))
                if F.curvature is Curvature.CONVEX
                else int(np.argmin(rates))
            )
            chosen = act[pos]
        rows[k] = F.slopes[k][chosen]
    return SubgradientSelector(F.space, rows)


def blend_selectors(
    s1: SubgradientSelector, s2: SubgradientSelector, alphas: np.ndarray
) -> SubgradientSelector:
    """Scenario-wise convex combination alphas[k]*s1 + (1-alphas[k])*s2.

    Valid subgradient selectors are closed under such blends.
    """
    if s1.space != s2.space:
        raise StructuralError("selectors live on different spaces")
    a = np.asarray(alphas, dtype=float)
    if a.shape != (s1.space.size,):
        raise StructuralError("need one blend coefficient per scenario")
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise DomainError("blend coefficients must lie in [0, 1]")
    return SubgradientSelector(s1.space, a[:, None] * s1.rows + (1.0 - a[:, None]) * s2.rows)


def local_property_check(F: MaxAffineIntegrand, x: DecisionPoint, h: DecisionPoint, B) -> bool:
    """Check that the selector-induced operator S is local: S(1_B h) = 1_B (Sh).

    ``B`` is a set of scenario indices.  S maps a direction to the scenario
    rates <s_k, h_k> of a fixed selector at x, so restricting the direction to
    an event commutes with restricting the output, scenario by scenario, with
    exact equality.
    """
    F._check_decision(x)
    if not x.same_structure(h):
        raise StructuralError("point and direction have different block structure")
    mask = np.zeros(F.space.size, dtype=bool)
    for i in B:
        i = int(i)
        if not 0 <= i < F.space.size:
            raise StructuralError(f"scenario index {i} out of range")
        mask[i] = True
    s = subgradient_selector(F, x)
    h_mat = h.scenario_matrix(F.space)
    rates_full = np.einsum("kd,kd->k", s.rows, h_mat)
    rates_local = np.einsum("kd,kd->k", s.rows, h_mat * mask[:, None])
    return bool(np.all(rates_local == mask * rates_full))
