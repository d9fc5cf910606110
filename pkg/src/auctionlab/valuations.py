"""Interdependent valuation families and their assumption checkers.

``value(vp, i, s)`` evaluates agent i's worth of the service at a signal
profile.  Built-in families:

* ``private``            -- v_i(s) = s_i
* ``weighted_sum``       -- v_i(s) = s_i + beta * sum of the other signals
* ``additive``           -- v_i(s) = sum_j g_ij(s_j), nondecreasing steps
* ``concave_additive``   -- a concave piecewise-linear map of an additive form
* ``table``              -- explicit v_i per grid profile

The checkers verify, exhaustively over the grid, monotonicity with strict
own-signal increase, the single-crossing condition, and the concavity-type
condition that an agent's value responds less to others' signals as her own
signal grows.  Mechanisms consult these before running interdependent
variants.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .distributions import SignalGrid

FAMILIES = ("private", "weighted_sum", "additive", "concave_additive", "table")


class ValuationError(ValueError):
    pass


@dataclass(frozen=True)
class StepFunction:
    """Nondecreasing step function given by its values at grid points."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or not self.xs:
            raise ValuationError("step function needs matching x/y lists")
        if any(a >= b for a, b in zip(self.xs, self.xs[1:])):
            raise ValuationError("step function knots must increase")

    def __call__(self, x):
        k = bisect.bisect_right(self.xs, x) - 1
        if k < 0:
            raise ValuationError(f"step function queried left of its domain: {x}")
        return self.ys[k]

    @classmethod
    def from_pairs(cls, pairs) -> "StepFunction":
        pts = sorted(pairs)
        return cls(tuple(x for x, _ in pts), tuple(y for _, y in pts))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear interpolation through breakpoints, linear tails."""

    xs: tuple
    ys: tuple

    def __call__(self, x):
        xs, ys = self.xs, self.ys
        if len(xs) == 1:
            return ys[0]
        k = bisect.bisect_right(xs, x) - 1
        k = min(max(k, 0), len(xs) - 2)
        x0, x1 = xs[k], xs[k + 1]
        y0, y1 = ys[k], ys[k + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    @classmethod
    def from_pairs(cls, pairs) -> "PiecewiseLinear":
        pts = sorted(pairs)
        return cls(tuple(x for x, _ in pts), tuple(y for _, y in pts))


@dataclass(frozen=True)
class ValuationProfile:
    family: str
    agents: tuple
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValuationError(f"unknown valuation family {self.family!r}")
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def interdependent(self) -> bool:
        return self.family != "private"


def private(agents) -> ValuationProfile:
    return ValuationProfile("private", agents)


def weighted_sum(agents, beta) -> ValuationProfile:
    if not 0 <= beta <= 1:
        raise ValuationError("beta must lie in [0, 1]")
    return ValuationProfile("weighted_sum", agents, {"beta": beta})


def additive(agents, g: Mapping) -> ValuationProfile:
    """g[i][j] is agent i's step function of agent j's signal."""
    return ValuationProfile("additive", agents, {"g": g})


def concave_additive(agents, g: Mapping, outer: Mapping) -> ValuationProfile:
    return ValuationProfile("concave_additive", agents, {"g": g, "outer": outer})


def table(agents, values: Mapping) -> ValuationProfile:
    """values[i][profile] lists v_i explicitly for every grid profile."""
    return ValuationProfile("table", agents, {"values": values})


def value(vp: ValuationProfile, agent, s: Sequence):
    """Evaluate v_i at the signal profile (ordered like vp.agents)."""
    idx = vp.agents.index(agent)
    if vp.family == "private":
        return s[idx]
    if vp.family == "weighted_sum":
        beta = vp.params["beta"]
        return s[idx] + beta * sum(x for k, x in enumerate(s) if k != idx)
    if vp.family in ("additive", "concave_additive"):
        g = vp.params["g"][agent]
        total = sum(g[b](x) for b, x in zip(vp.agents, s))
        if vp.family == "additive":
            return total
        return vp.params["outer"][agent](total)
    try:
        return vp.params["values"][agent][tuple(s)]
    except KeyError:
        raise ValuationError(f"no tabulated value for agent {agent!r} at {tuple(s)}")


def check_monotonicity(vp: ValuationProfile, grid: SignalGrid) -> list:
    """Monotone in every signal, strictly in one's own; values nonnegative.

    Returns the violating tuples (agent, coordinate, profile, bumped profile).
    """
    bad = []
    for i, a in enumerate(grid.agents):
        for s in grid.profiles():
            v = value(vp, a, s)
            if v < 0 or (isinstance(v, float) and not math.isfinite(v)):
                bad.append((a, "nonnegative", s, None))
            for j, b in enumerate(grid.agents):
                axis = grid.axis(b)
                k = axis.index(s[j])
                if k + 1 == len(axis):
                    continue
                bumped = s[:j] + (axis[k + 1],) + s[j + 1:]
                dv = value(vp, a, bumped) - v
                if i == j and not dv > 0:
                    bad.append((a, b, s, bumped))
                elif i != j and dv < 0:
                    bad.append((a, b, s, bumped))
    return bad


def check_single_crossing(vp: ValuationProfile, grid: SignalGrid) -> list:
    """Once v_i reaches v_j, raising s_i must keep v_i strictly above v_j.

    Exhaustive over ordered pairs i != j, every s_{-i}, and every pair of own
    grid points s_i < s_i'.  Returns violating tuples.
    """
    violations = []
    agents = grid.agents
    for i, ai in enumerate(agents):
        axis = grid.axis(ai)
        for aj in agents:
            if aj == ai:
                continue
            for s in grid.profiles():
                k = axis.index(s[i])
                if value(vp, ai, s) < value(vp, aj, s):
                    continue
                for t in axis[k + 1:]:
                    bumped = s[:i] + (t,) + s[i + 1:]
                    if not value(vp, ai, bumped) > value(vp, aj, bumped):
                        violations.append((ai, aj, s, t))
    return violations


def check_cross_responsiveness(vp: ValuationProfile, grid: SignalGrid) -> list:
    """Cross-signal responsiveness must not grow with one's own signal.

    For i != j the forward difference of v_i along s_j is compared at
    consecutive own-signal levels; growth is a violation.
    """
    violations = []
    agents = grid.agents
    for i, ai in enumerate(agents):
        own_axis = grid.axis(ai)
        for j, aj in enumerate(agents):
            if aj == ai:
                continue
            other_axis = grid.axis(aj)
            for s in grid.profiles():
                ki = own_axis.index(s[i])
                kj = other_axis.index(s[j])
                if ki + 1 == len(own_axis) or kj + 1 == len(other_axis):
                    continue
                up_j = s[:j] + (other_axis[kj + 1],) + s[j + 1:]
                diff_low = value(vp, ai, up_j) - value(vp, ai, s)
                up_i = s[:i] + (own_axis[ki + 1],) + s[i + 1:]
                up_both = up_j[:i] + (own_axis[ki + 1],) + up_j[i + 1:]
                diff_high = value(vp, ai, up_both) - value(vp, ai, up_i)
                if diff_high > diff_low:
                    violations.append((ai, aj, s, diff_low, diff_high))
    return violations
