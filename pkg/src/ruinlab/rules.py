"""Severity-weight rules for modified ruin.

A rule assigns each post-ruin level y < 0 a survival-to-ruin weight w(y) in
[0, 1]; classical ruin is the constant weight 1.  Each rule declares the
regularity flags (monotone, continuous, weight tending to 1 deep in deficit)
that the asymptotic regimes require, and `check_hypotheses` turns those flags
into a pass/fail report per regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, HypothesisViolation


class Regime(Enum):
    """Asymptotic regimes with their own hypothesis sets."""

    HEAVY_TAIL = "heavy_tail"
    LIGHT_FIXED = "light_fixed"
    LIGHT_ENDPOINT_ATOM = "light_endpoint_atom"
    LIGHT_ENDPOINT_DENSITY = "light_endpoint_density"


class Rule:
    """Base severity-weight rule."""

    is_monotone: bool
    is_continuous: bool
    limit_at_minus_infinity_is_one: bool

    def weight(self, y):
        """w(y) for y < 0; accepts scalars or arrays."""
        ya = np.asarray(y, dtype=float)
        if np.any(ya >= 0):
            raise DomainError("severity weights are defined for y < 0 only")
        val = self._weight(ya)
        return float(val) if np.ndim(y) == 0 else val

    __call__ = weight

    def _weight(self, ya):
        raise NotImplementedError

    def breakpoints(self):
        """Deficit magnitudes where w(-x) jumps or kinks (for quadrature)."""
        return ()


@dataclass(frozen=True)
class Classical(Rule):
    """w == 1: every ruin counts; reproduces classical ruin exactly."""

    is_monotone = True
    is_continuous = True
    limit_at_minus_infinity_is_one = True

    def _weight(self, ya):
        return np.ones_like(ya)


@dataclass(frozen=True)
class DeficitThreshold(Rule):
    """Ruin counts only when the deficit reaches depth d: w(y) = 1{y <= -d}.

    The boundary value w(-d) = 1 keeps the rule upper semicontinuous; the
    limiting overshoot law has no atoms, so the convention does not move any
    limit constant.
    """

    depth: float

    def __post_init__(self):
        if not self.depth > 0:
            raise DomainError("threshold depth must be positive")

    is_monotone = True
    is_continuous = False
    limit_at_minus_infinity_is_one = True

    def _weight(self, ya):
        return (ya <= -self.depth).astype(float)

    def breakpoints(self):
        return (self.depth,)


@dataclass(frozen=True)
class ExponentialAbsorption(Rule):
    """w(y) = 1 - exp(rate * y): shallow deficits are mostly forgiven."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("absorption rate must be positive")

    is_monotone = True
    is_continuous = True
    limit_at_minus_infinity_is_one = True

    def _weight(self, ya):
        return 1.0 - np.exp(self.rate * ya)


@dataclass(frozen=True)
class Tabulated(Rule):
    """Piecewise-linear rule over a grid of (y, w) pairs, y < 0 increasing.

    Values outside the grid clamp to the nearest endpoint.  Regularity flags
    are declared by the caller (tabulated rules come from external sources,
    e.g. Parisian-type severities computed elsewhere); declarations are
    checked against the grid where that is possible.
    """

    grid_y: tuple
    grid_w: tuple
    is_monotone: bool = True
    is_continuous: bool = True
    limit_at_minus_infinity_is_one: bool = True

    def __post_init__(self):
        ys = np.asarray(self.grid_y, dtype=float)
        ws = np.asarray(self.grid_w, dtype=float)
        if ys.ndim != 1 or ys.shape != ws.shape or len(ys) < 2:
            raise DomainError("tabulated rule needs matching grids, length >= 2")
        if np.any(ys >= 0) or np.any(np.diff(ys) <= 0):
            raise DomainError("grid ordinates must be negative and increasing")
        if np.any(ws < 0) or np.any(ws > 1):
            raise DomainError("weights must lie in [0, 1]")
        if self.is_monotone and np.any(np.diff(ws) > 1e-12):
            raise DomainError("declared monotone but grid weights increase in y")
        if self.limit_at_minus_infinity_is_one and ws[0] < 1.0 - 1e-6:
            raise DomainError(
                "declared limit 1 at -infinity but the leftmost weight is "
                f"{ws[0]}")
        object.__setattr__(self, "grid_y", tuple(float(v) for v in ys))
        object.__setattr__(self, "grid_w", tuple(float(v) for v in ws))

    def _weight(self, ya):
        return np.interp(ya, np.asarray(self.grid_y), np.asarray(self.grid_w))

    def breakpoints(self):
        return tuple(-y for y in reversed(self.grid_y))


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of checking a rule against one regime's hypotheses."""

    regime: Regime
    checks: tuple  # of (requirement, passed, reason)

    @property
    def ok(self):
        return all(passed for _, passed, _ in self.checks)

    @property
    def failed(self):
        return tuple(name for name, passed, _ in self.checks if not passed)

    def raise_if_failed(self):
        if not self.ok:
            raise HypothesisViolation(
                f"{self.regime.value}: failed {', '.join(self.failed)}",
                failed=self.failed)


def check_hypotheses(rule, regime):
    """Report which of the regime's rule hypotheses hold.

    The heavy-tail regime needs the weight to tend to 1 deep in deficit; the
    light-tail regimes need continuity or monotonicity so that the weight
    integrates against the (atomless) limiting overshoot law.
    """
    regime = Regime(regime)
    if regime is Regime.HEAVY_TAIL:
        passed = bool(rule.limit_at_minus_infinity_is_one)
        checks = ((
            "limit_at_minus_infinity_is_one", passed,
            "weight tends to 1 for deep deficits" if passed
            else "weight does not tend to 1 for deep deficits, so modified "
                 "and classical ruin need not be equivalent"),)
    else:
        passed = bool(rule.is_continuous or rule.is_monotone)
        checks = ((
            "is_continuous_or_monotone", passed,
            "weight is continuous or monotone" if passed
            else "weight is neither continuous nor monotone; no prediction "
                 "is emitted rather than guessing"),)
    return HypothesisReport(regime=regime, checks=checks)
