"""Exact optimal ex-post-IC, ex-post-IR expected revenue via linear programming.

The benchmark optimises over randomized mechanisms: at every relevant signal
profile the mechanism holds a probability distribution over feasible sets
plus a payment per agent.  Constraints are the simplex rows (one per
profile), truth-telling for every agent at every support profile against
every own-grid deviation, and nonnegative truthful utility at every support
profile.  Off-support profiles enter only where a unilateral deviation can
reach them; they carry no objective weight.

The optimum weakly dominates every implemented auction, so approximation
ratios measured against it are conservative.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .distributions import RATIONAL
from .mechanisms import Instance
from .simplex import LinearProgram, solve
from .valuations import value

DEFAULT_VAR_CAP = 200_000


class LPSizeError(RuntimeError):
    """The instance needs more LP variables than the configured cap."""


@dataclass(frozen=True)
class LPStats:
    profiles: int
    support: int
    feasible_sets: int
    y_vars: int
    p_vars: int
    simplex_rows: int
    ic_rows: int
    ir_rows: int

    @property
    def variables(self) -> int:
        return self.y_vars + self.p_vars

    @property
    def rows(self) -> int:
        return self.simplex_rows + self.ic_rows + self.ir_rows


@dataclass
class RevenueLP:
    instance: Instance
    lp: LinearProgram
    profiles: list
    support: list
    feasible: list
    y_index: dict
    p_index: dict
    stats: LPStats


@dataclass
class LPSolution:
    status: str
    objective: object
    assignment: dict               # ("y", s, S) / ("p", s, agent) -> value
    pivots: int


@dataclass
class OptResult:
    value: object
    witness: dict
    stats: LPStats
    solution: LPSolution


def _reachable_profiles(instance: Instance) -> tuple[list, list]:
    support = sorted(instance.dist.support_profiles())
    reach = set(support)
    for s in support:
        for k, a in enumerate(instance.agents):
            for t in instance.grid.axis(a):
                reach.add(s[:k] + (t,) + s[k + 1:])
    return sorted(reach), support


def build_revenue_lp(instance: Instance, var_cap: int = DEFAULT_VAR_CAP) -> RevenueLP:
    """Assemble the revenue LP; errors out with exact counts past the cap."""
    agents = instance.agents
    profiles, support = _reachable_profiles(instance)
    feasible = instance.feas.feasible_sets()
    n_y = len(profiles) * len(feasible)
    n_p = len(profiles) * len(agents)
    if n_y + n_p > var_cap:
        raise LPSizeError(
            f"{n_y} allocation + {n_p} payment variables exceed the cap {var_cap}")

    y_index: dict = {}
    p_index: dict = {}
    for s in profiles:
        for f in feasible:
            y_index[(s, f)] = len(y_index)
        for a in agents:
            p_index[(s, a)] = n_y + len(p_index)

    prob = {s: instance.dist.probability(s) for s in support}
    objective = [0] * (n_y + n_p)
    for s in support:
        for a in agents:
            objective[p_index[(s, a)]] = prob[s]

    lp = LinearProgram(n_y + n_p, objective)
    empty = frozenset()
    for s in profiles:
        coeffs = {y_index[(s, f)]: 1 for f in feasible}
        lp.add_eq(coeffs, 1, basic=y_index[(s, empty)])

    sets_with = {a: [f for f in feasible if a in f] for a in agents}
    n_ic = 0
    for s in support:
        for k, a in enumerate(agents):
            v_true = value(instance.vp, a, s)
            for t in instance.grid.axis(a):
                if t == s[k]:
                    continue
                dev = s[:k] + (t,) + s[k + 1:]
                coeffs: dict = {}
                for f in sets_with[a]:
                    coeffs[y_index[(dev, f)]] = v_true
                    coeffs[y_index[(s, f)]] = coeffs.get(y_index[(s, f)], 0) - v_true
                coeffs = {j: c for j, c in coeffs.items() if c != 0}
                coeffs[p_index[(dev, a)]] = -1
                coeffs[p_index[(s, a)]] = coeffs.get(p_index[(s, a)], 0) + 1
                lp.add_le(coeffs, 0)
                n_ic += 1

    n_ir = 0
    for s in support:
        for a in agents:
            coeffs = {y_index[(s, f)]: -value(instance.vp, a, s) for f in sets_with[a]}
            coeffs = {j: c for j, c in coeffs.items() if c != 0}
            coeffs[p_index[(s, a)]] = 1
            lp.add_le(coeffs, 0)
            n_ir += 1

    stats = LPStats(profiles=len(profiles), support=len(support),
                    feasible_sets=len(feasible), y_vars=n_y, p_vars=n_p,
                    simplex_rows=len(profiles), ic_rows=n_ic, ir_rows=n_ir)
    return RevenueLP(instance, lp, profiles, support, feasible, y_index, p_index, stats)


def solve_lp(rlp: RevenueLP, arithmetic: str | None = None) -> LPSolution:
    mode = arithmetic or rlp.instance.arithmetic
    result = solve(rlp.lp, "rational" if mode == RATIONAL else "double")
    assignment = {}
    if result.status == "optimal":
        for key, j in rlp.y_index.items():
            assignment[("y",) + key] = result.x[j]
        for key, j in rlp.p_index.items():
            assignment[("p",) + key] = result.x[j]
    return LPSolution(result.status, result.objective, assignment, result.pivots)


def witness_mechanism(rlp: RevenueLP, solution: LPSolution) -> dict:
    """Per-profile allocation lotteries, service probabilities and payments."""
    witness = {}
    for s in rlp.profiles:
        alloc = [(f, solution.assignment[("y", s, f)]) for f in rlp.feasible
                 if solution.assignment[("y", s, f)] != 0]
        x = {a: sum((p for f, p in alloc if a in f), Fraction(0) if
                    rlp.instance.arithmetic == RATIONAL else 0.0)
             for a in rlp.instance.agents}
        payments = {a: solution.assignment[("p", s, a)] for a in rlp.instance.agents}
        witness[s] = {"allocation": alloc, "service_probability": x,
                      "payments": payments}
    return witness


def opt_revenue(instance: Instance, var_cap: int = DEFAULT_VAR_CAP,
                arithmetic: str | None = None) -> OptResult:
    """Optimal expected revenue plus the mechanism achieving it."""
    if not instance.agents:
        empty_stats = LPStats(0, 0, 0, 0, 0, 0, 0, 0)
        zero = Fraction(0) if instance.arithmetic == RATIONAL else 0.0
        return OptResult(zero, {}, empty_stats,
                         LPSolution("optimal", zero, {}, 0))
    rlp = build_revenue_lp(instance, var_cap)
    solution = solve_lp(rlp, arithmetic)
    if solution.status != "optimal":
        raise RuntimeError(f"revenue LP terminated {solution.status}")
    return OptResult(solution.objective, witness_mechanism(rlp, solution),
                     rlp.stats, solution)


def verify_witness(instance: Instance, witness: Mapping, tolerance=0) -> list[str]:
    """Re-check every LP constraint on a witness; empty list means clean."""
    problems = []
    agents = instance.agents
    for s, cell in witness.items():
        total = sum((p for _, p in cell["allocation"]), Fraction(0))
        if not _close(total, 1, tolerance):
            problems.append(f"allocation at {s} sums to {total}")
        for f, p in cell["allocation"]:
            if p < -tolerance:
                problems.append(f"negative lottery weight at {s}")
            if not instance.feas.is_independent(f):
                problems.append(f"infeasible set {sorted(map(str, f))} at {s}")
    support = set(instance.dist.support_profiles())
    for s in sorted(support):
        cell = witness[s]
        for k, a in enumerate(agents):
            v_true = value(instance.vp, a, s)
            u_truth = v_true * cell["service_probability"][a] - cell["payments"][a]
            if u_truth < -tolerance:
                problems.append(f"IR violated for {a} at {s}: utility {u_truth}")
            for t in instance.grid.axis(a):
                if t == s[k]:
                    continue
                dev = s[:k] + (t,) + s[k + 1:]
                dev_cell = witness[dev]
                u_dev = v_true * dev_cell["service_probability"][a] - dev_cell["payments"][a]
                if u_dev > u_truth + tolerance:
                    problems.append(
                        f"IC violated for {a} at {s} deviating to {t}: "
                        f"{u_dev} > {u_truth}")
    return problems


def _close(a, b, tolerance):
    return abs(a - b) <= tolerance
