"""The composition phi = rho(F(x)): values, directional derivatives, and the
subgradient chain rule.

A composite subgradient pairs a risk identifier zeta (at F(x)) with a
subgradient selector s (at x) and conditions the scenario products on the
decision's information partition:

    g_B = (1/P(B)) * sum_{k in B} pi_k * zeta_k * s_k     (= E[zeta s | G] on B)

With this block form the subgradient inequality holds in the probability-
weighted pairing sum_B P(B) <g_B, h_B>, which collapses to the plain inner
product for deterministic decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StructuralError
from .integrands import (
    Curvature,
    DecisionPoint,
    MaxAffineIntegrand,
    SubgradientSelector,
    directional_derivative,
    evaluate,
    subgradient_selector,
)
from .risk import (
    Orientation,
    SpectralMeasure,
    spectral_identifier,
    spectral_identifier_lmo,
    spectral_risk,
)
from .scenario import (
    InfoPartition,
    RandomVariable,
    _readonly,
    _sum_ascending,
    trivial_partition,
)


@dataclass(frozen=True, eq=False)
class CompositeGradient:
    """Element of the composite subdifferential in block coordinates.

    ``vectors`` has one row per block of ``partition`` (a single row for a
    deterministic decision).  ``zeta`` and ``selector`` record the provenance
    pair that produced it.
    """

    vectors: np.ndarray
    partition: InfoPartition | None
    zeta: np.ndarray
    selector: SubgradientSelector

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise StructuralError("gradient must be a stack of block rows")
        expected = 1 if self.partition is None else self.partition.num_blocks
        if v.shape[0] != expected:
            raise StructuralError("gradient rows do not match the partition")
        object.__setattr__(self, "vectors", _readonly(v))

    def pair(self, delta: DecisionPoint) -> float:
        """Probability-weighted pairing sum_B P(B) <g_B, delta_B>."""
        if delta.num_blocks != self.vectors.shape[0] or delta.dim != self.vectors.shape[1]:
            raise StructuralError("pairing requires matching block structure")
        if self.partition is None:
            return float(self.vectors[0] @ delta.vectors[0])
        weights = self.partition.block_probs
        return _sum_ascending(
            weights[j] * float(self.vectors[j] @ delta.vectors[j])
            for j in range(len(weights))
        )


def _require_objective_pair(risk: SpectralMeasure, F: MaxAffineIntegrand):
    if risk.orientation is not Orientation.UPPER:
        raise ConfigurationError(
            "objective risk must be upper-oriented to keep the composition convex"
        )
    if F.curvature is not Curvature.CONVEX:
        raise ConfigurationError("objective integrand must be convex-flagged")


def composite_value(risk: SpectralMeasure, F: MaxAffineIntegrand, x: DecisionPoint) -> float:
    """phi(x) = risk(F(x))."""
    _require_objective_pair(risk, F)
    return spectral_risk(evaluate(F, x), risk)


def composite_directional(
    risk: SpectralMeasure, F: MaxAffineIntegrand, x: DecisionPoint, h: DecisionPoint
) -> float:
    """phi'(x; h) = risk'(F(x); F'(x; h)).

    The outer directional derivative is the support function of the
    identifier polytope in the direction F'(x; h), evaluated by the exact
    sorting LMO.
    """
    _require_objective_pair(risk, F)
    Z = evaluate(F, x)
    rate = directional_derivative(F, x, h)
    zeta = spectral_identifier_lmo(Z, risk, rate.values)
    return _sum_ascending(Z.space.probs * zeta * rate.values)


def _conditional_blocks(
    space, partition: InfoPartition | None, weights: np.ndarray, rows: np.ndarray
) -> np.ndarray:
    """Per block B: (1/P(B)) sum_{k in B} pi_k * weights_k * rows_k."""
    if partition is None:
        acc = np.zeros(rows.shape[1])
        for k in range(space.size):
            acc += space.probs[k] * weights[k] * rows[k]
        return acc.reshape(1, -1)
    out = np.zeros((partition.num_blocks, rows.shape[1]))
    for j, b in enumerate(partition.blocks):
        acc = np.zeros(rows.shape[1])
        for k in b:
            acc += space.probs[k] * weights[k] * rows[k]
        out[j] = acc / partition.block_probs[j]
    return out


def _check_measurable_structure(x: DecisionPoint, partition: InfoPartition | None):
    """x must be measurable for the declared partition.

    A deterministic x is measurable for any partition; a block-structured x
    must carry exactly the declared partition.
    """
    if x.partition is None:
        return
    if partition is None or x.partition != partition:
        raise StructuralError("decision is not measurable for the declared partition")


def _expand_decision(x: DecisionPoint, partition: InfoPartition | None) -> DecisionPoint:
    if partition is None or x.partition is not None:
        return x
    return DecisionPoint(
        np.repeat(x.vectors, partition.num_blocks, axis=0), partition
    )


def composite_subgradient(
    risk: SpectralMeasure,
    F: MaxAffineIntegrand,
    x: DecisionPoint,
    partition: InfoPartition | None = None,
    direction: DecisionPoint | None = None,
) -> CompositeGradient:
    """Exact element of the composite subdifferential at x, in block form.

    Default provenance: the deterministic extreme identifier of the risk at
    F(x) and the lowest-index active selector of F at x.  With ``direction``,
    both are aligned to it, producing the element attaining phi'(x; direction)
    in the weighted pairing.

    The identifier is checked to be nonnegative before products are formed;
    a negative entry would break the monotonicity the chain rule relies on.
    """
    _require_objective_pair(risk, F)
    _check_measurable_structure(x, partition)
    x_exp = _expand_decision(x, partition)
    Z = evaluate(F, x_exp)
    if direction is None:
        zeta = spectral_identifier(Z, risk)
        sel = subgradient_selector(F, x_exp)
    else:
        _check_measurable_structure(direction, partition)
        d_exp = _expand_decision(direction, partition)
        rate = directional_derivative(F, x_exp, d_exp)
        zeta = spectral_identifier_lmo(Z, risk, rate.values)
        sel = subgradient_selector(F, x_exp, d_exp)
    if np.any(zeta < 0.0):
        raise StructuralError("risk identifier has a negative entry")
    blocks = _conditional_blocks(F.space, partition, zeta, sel.rows)
    return CompositeGradient(blocks, partition, _readonly(zeta.copy()), sel)


def strassen_gradient(F: MaxAffineIntegrand, x: DecisionPoint) -> CompositeGradient:
    """Gradient of x -> E[F(x)] for deterministic x: the scenario average
    E[s] of a selector (expectation and subdifferential commute)."""
    if x.partition is not None:
        raise StructuralError("Strassen form expects a deterministic decision")
    return composite_subgradient(SpectralMeasure.expectation(), F, x, None)
