"""The auction family: generalized VCG, lazy/eager reserves, lookahead,
and the randomized-admission variants, together with exact expected-revenue
evaluation, the revenue upper bound, and the incentive audit.

Threshold semantics on grids: an agent's critical signal s* is the smallest
own grid value at which the agent enters the welfare-maximising set, holding
everyone else's report fixed; the threshold value is the agent's value at
that critical signal.  Ties everywhere are resolved by one global tie-break
order, which keeps the winner rule and the threshold scan consistent and
makes the incentive audit exact.

Every auction is a deterministic function of (instance, profile, admission
realization); randomness enters only through explicitly passed admission
sets or caller-owned seeded streams, so runs parallelise and replay freely.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

from . import valuations
from .distributions import (
    ConditioningError,
    JointDistribution,
    RATIONAL,
    SignalGrid,
    monopoly_price,
    truncate_above,
)
from .matching import maximum_bipartite_matching
from .matroid import (
    ExchangeInvariantError,
    FeasibilitySystem,
    default_tie_break,
    max_weight_basis,
)
from .valuations import ValuationProfile, value

log = logging.getLogger(__name__)

MECHANISM_IDS = ("gvcg", "gvcg-lazy", "lookahead", "rand-single", "rand-matroid", "vcg-eager")
RESERVE_SOURCES = ("none", "monopoly", "conditional", "fixed", "single-sample",
                   "unsafe-own-value")

NEVER_WINS = None  # threshold-signal marker; threshold value becomes +inf

DEFAULT_ATOM_CAP = 10 ** 7


class MechanismError(RuntimeError):
    pass


class AssumptionError(MechanismError):
    """The instance fails an assumption the mechanism's guarantees need."""


class WrongVariantError(MechanismError):
    """Mechanism called on a feasibility system outside its scope."""


class ReserveAuditError(MechanismError):
    """A reserve callback tried to read the agent's own signal."""


class SizeError(MechanismError):
    """Exact enumeration would exceed the configured atom cap."""


# ----------------------------------------------------------------------
# instance


@dataclass
class Instance:
    """A complete auction environment; immutable once constructed."""

    grid: SignalGrid
    dist: JointDistribution
    vp: ValuationProfile
    feas: FeasibilitySystem
    tie_break: tuple = None
    name: str = ""
    arithmetic: str = RATIONAL
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        agents = self.grid.agents
        if self.vp.agents != agents or set(self.feas.ground) != set(agents):
            raise MechanismError("agent sets disagree across instance fields")
        if self.tie_break is None:
            self.tie_break = default_tie_break(agents)
        else:
            self.tie_break = tuple(self.tie_break)
        self._restrictions: dict = {}
        self._checks: dict = {}

    @property
    def agents(self) -> tuple:
        return self.grid.agents

    def values_at(self, s: Sequence) -> dict:
        return {a: value(self.vp, a, s) for a in self.agents}

    def restricted(self, active: frozenset) -> FeasibilitySystem:
        sub = self._restrictions.get(active)
        if sub is None:
            sub = self.feas.restriction(active)
            self._restrictions[active] = sub
        return sub

    def assumption_report(self) -> dict:
        """Monotonicity / single-crossing / cross-responsiveness checks, cached."""
        if not self._checks:
            self._checks["monotonicity"] = valuations.check_monotonicity(
                self.vp, self.grid)
            self._checks["single_crossing"] = valuations.check_single_crossing(
                self.vp, self.grid)
            self._checks["cross_responsiveness"] = valuations.check_cross_responsiveness(
                self.vp, self.grid)
        return self._checks

    def require_monotone(self):
        if self.assumption_report()["monotonicity"]:
            raise AssumptionError(
                f"{self.name or 'instance'}: valuations fail monotonicity")

    def require_single_crossing(self):
        if not self.vp.interdependent:
            return
        if self.assumption_report()["single_crossing"]:
            raise AssumptionError(
                f"{self.name or 'instance'}: interdependent valuations fail single-crossing")
        if not self.feas.is_matroid:
            raise WrongVariantError(
                f"{self.name or 'instance'}: interdependent valuations need a "
                "matroid system for truthful thresholds")

    def require_private(self, what: str):
        if self.vp.interdependent:
            raise AssumptionError(f"{what} is defined for private values only")


# ----------------------------------------------------------------------
# outcome


@dataclass
class AuctionOutcome:
    """Everything one run of an auction decides, per agent and in sets."""

    alloc: dict
    payment: dict
    threshold_signal: dict
    threshold_value: dict
    reserve: dict
    tentative: frozenset          # welfare-max set among admitted agents
    served: frozenset
    admitted: frozenset | None    # None means no admission stage
    w_reference: frozenset        # welfare-max set over all agents

    @property
    def t_prime(self) -> frozenset:
        return self.tentative - self.w_reference

    @property
    def revenue(self):
        return sum((self.payment[a] for a in self.served), 0)

    def welfare(self, instance: Instance, s: Sequence):
        return sum((value(instance.vp, a, s) for a in self.served), 0)


# ----------------------------------------------------------------------
# winner selection and thresholds


def winner_set(instance: Instance, s: Sequence, active: frozenset) -> frozenset:
    """Welfare-maximising feasible subset of ``active`` at profile s."""
    if not active:
        return frozenset()
    sub = instance.restricted(active)
    weights = {a: value(instance.vp, a, s) for a in active}
    tie = [a for a in instance.tie_break if a in active]
    return max_weight_basis(sub, weights, tie, full=True).elements


def threshold(instance: Instance, s: Sequence, agent, active: frozenset):
    """(critical signal, threshold value) for the agent within ``active``.

    Scans the agent's grid from below; the smallest signal at which the agent
    joins the winner set is critical.  Returns (None, inf) when no grid
    signal wins.
    """
    if agent not in active:
        return NEVER_WINS, math.inf
    idx = instance.grid.index_of(agent)
    for t in instance.grid.axis(agent):
        st = tuple(s[:idx]) + (t,) + tuple(s[idx + 1:])
        if agent in winner_set(instance, st, active):
            return t, value(instance.vp, agent, st)
    return NEVER_WINS, math.inf


def gvcg(instance: Instance, s: Sequence, active: frozenset | None = None,
         *, admitted: frozenset | None = None) -> AuctionOutcome:
    """Generalized VCG: welfare-max winners pay their threshold values."""
    instance.require_monotone()
    instance.require_single_crossing()
    s = tuple(s)
    all_agents = frozenset(instance.agents)
    if active is None:
        active = all_agents
    active = frozenset(active)
    w = winner_set(instance, s, active)
    w_ref = w if active == all_agents else winner_set(instance, s, all_agents)
    zero = Fraction(0) if instance.arithmetic == RATIONAL else 0.0
    alloc, payment, t_sig, t_val, reserve = {}, {}, {}, {}, {}
    for a in instance.agents:
        t_sig[a], t_val[a] = threshold(instance, s, a, active)
        reserve[a] = zero
        if a in w:
            alloc[a] = 1
            payment[a] = t_val[a]
        else:
            alloc[a] = 0
            payment[a] = zero
    return AuctionOutcome(alloc, payment, t_sig, t_val, reserve,
                          tentative=w, served=w, admitted=admitted,
                          w_reference=w_ref)


# ----------------------------------------------------------------------
# reserves


@dataclass(frozen=True)
class ReserveQuote:
    """A posted price for one agent plus its conditional expected revenue."""

    agent: object
    price: object
    expected_revenue: object
    conditioning: str
    fallback: str = ""


def conditional_value_distribution(instance: Instance, agent, s: Sequence):
    """Distribution of v_agent given every other signal, as a value pmf."""
    others = {a: s[instance.grid.index_of(a)]
              for a in instance.agents if a != agent}
    signal_dist = instance.dist.conditional_signal(agent, others)
    idx = instance.grid.index_of(agent)

    def to_value(t):
        st = tuple(s[:idx]) + (t,) + tuple(s[idx + 1:])
        return value(instance.vp, agent, st)

    return signal_dist.map_values(to_value)


def conditional_monopoly_reserve(instance: Instance, agent, s: Sequence, *,
                                 event_mode: str = "winner_conditioned",
                                 active: frozenset | None = None) -> ReserveQuote:
    """Optimal posted price for the agent given everyone else's signals.

    ``winner_conditioned`` additionally conditions on the agent being a
    tentative winner within ``active`` (signal at or above the critical
    one).  Zero-probability events trigger a logged fallback chain: drop the
    winner conditioning first, then fall back to the agent's prior marginal;
    every stage reads only the other agents' signals, so the quote never
    depends on the agent's own report.
    """
    if active is None:
        active = frozenset(instance.agents)
    fallback = ""
    fixed = ", ".join(f"{a}={s[instance.grid.index_of(a)]}"
                      for a in instance.agents if a != agent)
    try:
        vdist = conditional_value_distribution(instance, agent, s)
        conditioning = f"signals fixed: {fixed}"
    except ConditioningError:
        idx = instance.grid.index_of(agent)

        def to_value(t):
            st = tuple(s[:idx]) + (t,) + tuple(s[idx + 1:])
            return value(instance.vp, agent, st)

        vdist = instance.dist.marginal(agent).map_values(to_value)
        conditioning = f"prior marginal (profile {fixed} off-support)"
        fallback = "prior-marginal"
        log.debug("reserve fallback to prior marginal for agent %r", agent)

    if event_mode == "winner_conditioned":
        t_sig, t_val = threshold(instance, s, agent, active)
        if t_sig is NEVER_WINS:
            fallback = fallback or "unconditioned"
            log.debug("winner event empty for agent %r; using unconditioned reserve", agent)
        else:
            try:
                vdist = truncate_above(vdist, t_val)
                conditioning += f"; winner within {sorted(map(str, active))} (value >= {t_val})"
            except ConditioningError:
                fallback = fallback or "unconditioned"
                log.debug("no conditional mass above threshold for agent %r", agent)
    elif event_mode != "unconditioned":
        raise MechanismError(f"unknown reserve event mode {event_mode!r}")

    price, revenue = monopoly_price(vdist)
    return ReserveQuote(agent, price, revenue, conditioning, fallback)


class SignalView:
    """Read view of a profile with one coordinate hidden from reserve callbacks."""

    def __init__(self, instance: Instance, s: Sequence, hidden):
        self._s = tuple(s)
        self._agents = instance.agents
        self._hidden = hidden

    def __getitem__(self, agent):
        if agent == self._hidden:
            raise ReserveAuditError(
                f"reserve callback for agent {agent!r} read its own signal")
        return self._s[self._agents.index(agent)]

    def items(self):
        return [(a, self[a]) for a in self._agents if a != self._hidden]


def resolve_reserves(instance: Instance, s: Sequence, agents, source,
                     *, active: frozenset | None = None,
                     event_mode: str = "winner_conditioned") -> dict:
    """Per-agent reserve prices from a named source, a map, or a callback.

    Callables receive (agent, masked profile view); reading the agent's own
    coordinate raises :class:`ReserveAuditError`.
    """
    zero = Fraction(0) if instance.arithmetic == RATIONAL else 0.0
    if source is None or source == "none":
        return {a: zero for a in agents}
    if isinstance(source, Mapping):
        return {a: source.get(a, zero) for a in agents}
    if callable(source):
        out = {}
        for a in agents:
            out[a] = source(a, SignalView(instance, s, a))
        return out
    if source == "monopoly":
        instance.require_private("the unconditional monopoly reserve")
        return {a: monopoly_price(instance.dist.marginal(a))[0] for a in agents}
    if source == "conditional":
        return {a: conditional_monopoly_reserve(
            instance, a, s, event_mode=event_mode, active=active).price
            for a in agents}
    if source == "unsafe-own-value":
        # deliberately illegal: reads the agent's own report; audit canary
        return {a: value(instance.vp, a, s) for a in agents}
    if source == "single-sample":
        raise MechanismError("single-sample reserves are integrated over by "
                             "expected_revenue, not resolved per run")
    raise MechanismError(f"unknown reserve source {source!r}")


# ----------------------------------------------------------------------
# the auctions


def gvcg_lazy(instance: Instance, s: Sequence, reserves, active: frozenset | None = None,
              *, admitted: frozenset | None = None,
              event_mode: str = "winner_conditioned") -> AuctionOutcome:
    """Tentative winners by generalized VCG, then take-it-or-leave-it at the
    higher of the reserve and the threshold value."""
    s = tuple(s)
    if active is None:
        active = frozenset(instance.agents)
    base = gvcg(instance, s, active, admitted=admitted)
    r = resolve_reserves(instance, s, base.tentative, reserves, active=active,
                         event_mode=event_mode)
    zero = Fraction(0) if instance.arithmetic == RATIONAL else 0.0
    served = set()
    payment = dict(base.payment)
    reserve = dict(base.reserve)
    vals = instance.values_at(s)
    for a in base.tentative:
        price = max(r[a], base.threshold_value[a])
        reserve[a] = r[a]
        if vals[a] >= price:
            served.add(a)
            payment[a] = price
        else:
            payment[a] = zero
    alloc = {a: (1 if a in served else 0) for a in instance.agents}
    return replace(base, alloc=alloc, payment=payment, reserve=reserve,
                   served=frozenset(served))


def lookahead(instance: Instance, s: Sequence) -> AuctionOutcome:
    """Lazy auction with winner-conditioned monopoly reserves."""
    return gvcg_lazy(instance, s, "conditional")


def randomized_single_item(instance: Instance, s: Sequence,
                           admission, *, rng=None,
                           event_mode: str = "winner_conditioned") -> AuctionOutcome:
    """Single-item variant: admit each agent with probability 2/3, then run
    the lazy auction inside the admitted set; reserves still condition on
    every other agent's signal, admitted or not."""
    feas = instance.feas
    single_item = (feas.is_matroid
                   and all(feas.is_independent({a}) for a in feas.ground)
                   and not any(len(f) > 1 for f in feas.feasible_sets()))
    if not single_item:
        raise WrongVariantError("the single-item variant needs a 1-uniform system")
    z = _resolve_admission(instance, admission, rng, Fraction(2, 3))
    return gvcg_lazy(instance, s, "conditional", active=z, admitted=z,
                     event_mode=event_mode)


def randomized_matroid(instance: Instance, s: Sequence, branch,
                       admission=None, *, rng=None,
                       event_mode: str = "winner_conditioned") -> AuctionOutcome:
    """Matroid variant: with probability 1/2 admit everyone, otherwise admit
    each agent independently with probability 1/2."""
    if not instance.feas.is_matroid:
        raise WrongVariantError("the matroid variant needs a matroid system")
    if branch == "all":
        z = frozenset(instance.agents)
    elif branch == "subsample":
        z = _resolve_admission(instance, admission, rng, Fraction(1, 2))
    else:
        raise MechanismError(f"unknown branch {branch!r}; use 'all' or 'subsample'")
    return gvcg_lazy(instance, s, "conditional", active=z, admitted=z,
                     event_mode=event_mode)


def _resolve_admission(instance, admission, rng, p_in) -> frozenset:
    if admission is not None:
        z = frozenset(admission)
        if not z <= set(instance.agents):
            raise MechanismError("admission set mentions unknown agents")
        return z
    if rng is None:
        raise MechanismError("need an explicit admission set or an rng")
    return frozenset(a for a in instance.agents if rng.random() < float(p_in))


def vcg_eager(instance: Instance, s: Sequence, reserves) -> AuctionOutcome:
    """Remove agents below their reserves first, then run the auction on the
    survivors; winners pay the higher of reserve and the threshold within the
    surviving set.  Private values only."""
    instance.require_private("the eager-reserve auction")
    s = tuple(s)
    all_agents = frozenset(instance.agents)
    r = resolve_reserves(instance, s, all_agents, reserves)
    vals = instance.values_at(s)
    u = frozenset(a for a in all_agents if vals[a] >= r[a])
    w_u = winner_set(instance, s, u)
    zero = Fraction(0) if instance.arithmetic == RATIONAL else 0.0
    alloc, payment, t_sig, t_val = {}, {}, {}, {}
    served = set()
    for a in instance.agents:
        scan_active = u | {a}
        t_sig[a], t_val[a] = threshold(instance, s, a, scan_active)
        alloc[a] = 0
        payment[a] = zero
        if a in w_u:
            price = max(r[a], t_val[a])
            if vals[a] >= price:
                served.add(a)
                alloc[a] = 1
                payment[a] = price
    return AuctionOutcome(alloc, payment, t_sig, t_val, dict(r),
                          tentative=w_u, served=frozenset(served), admitted=None,
                          w_reference=winner_set(instance, s, all_agents))


# ----------------------------------------------------------------------
# threshold matching (displaced agents charge to tentative winners)


def threshold_matching(instance: Instance, s: Sequence, w: frozenset,
                       tp: frozenset) -> dict:
    """Injective map f from ``tp`` into ``w`` with, for i = f(j),
    v_j(s_i*, s_-i) <= v_i(s_i*, s_-i).

    ``w`` must be the welfare-max set at s and ``tp`` independent and
    disjoint from it.  When tp is smaller than w it is padded to equal size
    with w elements (which accept a self edge) before matching.
    """
    s = tuple(s)
    w = frozenset(w)
    tp = frozenset(tp)
    if tp & w:
        raise MechanismError("tp must be disjoint from the winner set")
    if not instance.feas.is_independent(tp):
        raise MechanismError("tp must be independent")
    all_agents = frozenset(instance.agents)
    rank = {a: i for i, a in enumerate(instance.tie_break)}

    padded = set(tp)
    for a in sorted(w, key=lambda x: rank[x]):
        if len(padded) == len(w):
            break
        if instance.feas.is_independent(padded | {a}):
            padded.add(a)
    if len(padded) != len(w):
        raise ExchangeInvariantError("could not pad tp to the winner set's size")

    idx = {a: instance.grid.index_of(a) for a in instance.agents}
    crit: dict = {}
    for i in w:
        t_sig, t_val = threshold(instance, s, i, all_agents)
        if t_sig is NEVER_WINS:
            raise MechanismError(f"winner {i!r} has no critical signal")
        st = tuple(s[:idx[i]]) + (t_sig,) + tuple(s[idx[i] + 1:])
        crit[i] = (st, t_val)

    left = sorted(padded, key=lambda a: rank[a])
    adjacency = {}
    for j in left:
        neighbours = []
        for i in sorted(w, key=lambda a: rank[a]):
            st, t_val = crit[i]
            if j == i or value(instance.vp, j, st) <= t_val:
                neighbours.append(i)
        adjacency[j] = neighbours
    matching = maximum_bipartite_matching(left, adjacency)
    if len(matching) != len(left):
        raise ExchangeInvariantError(
            "no perfect threshold matching; single-crossing premises violated?")
    return {j: matching[j] for j in tp}


# ----------------------------------------------------------------------
# running mechanisms uniformly


@dataclass(frozen=True)
class MechanismSpec:
    """A runnable mechanism: id plus reserve configuration."""

    mech_id: str
    reserve_source: object = "none"
    event_mode: str = "winner_conditioned"

    def __post_init__(self):
        if self.mech_id not in MECHANISM_IDS:
            raise MechanismError(f"unknown mechanism {self.mech_id!r}")


def realizations(instance: Instance, spec: MechanismSpec):
    """Every internal-randomness outcome with its probability.

    Deterministic mechanisms yield one realization.  The single-item variant
    yields every admission set with product 2/3 weights; the matroid variant
    adds the all-agents branch at probability 1/2.
    """
    agents = tuple(instance.agents)
    one = Fraction(1)
    if spec.mech_id == "rand-single":
        p = Fraction(2, 3)
        for z in _all_subsets(agents):
            weight = (p ** len(z)) * ((1 - p) ** (len(agents) - len(z)))
            yield ("admit", z), weight
    elif spec.mech_id == "rand-matroid":
        yield ("all", None), Fraction(1, 2)
        p = Fraction(1, 2)
        for z in _all_subsets(agents):
            weight = Fraction(1, 2) * (p ** len(agents))
            yield ("admit", z), weight
    else:
        yield ("deterministic", None), one


def _all_subsets(agents):
    for r in range(len(agents) + 1):
        for combo in itertools.combinations(agents, r):
            yield frozenset(combo)


def run_realized(instance: Instance, spec: MechanismSpec, s: Sequence,
                 realization) -> AuctionOutcome:
    kind, z = realization
    if spec.mech_id == "gvcg":
        return gvcg(instance, s)
    if spec.mech_id == "gvcg-lazy":
        return gvcg_lazy(instance, s, spec.reserve_source)
    if spec.mech_id == "lookahead":
        return lookahead(instance, s)
    if spec.mech_id == "vcg-eager":
        return vcg_eager(instance, s, spec.reserve_source)
    if spec.mech_id == "rand-single":
        return randomized_single_item(instance, s, z, event_mode=spec.event_mode)
    if kind == "all":
        return randomized_matroid(instance, s, "all", event_mode=spec.event_mode)
    return randomized_matroid(instance, s, "subsample", z, event_mode=spec.event_mode)


def sample_realization(instance: Instance, spec: MechanismSpec, rng):
    if spec.mech_id == "rand-single":
        z = frozenset(a for a in instance.agents if rng.random() < 2 / 3)
        return ("admit", z)
    if spec.mech_id == "rand-matroid":
        if rng.random() < 1 / 2:
            return ("all", None)
        z = frozenset(a for a in instance.agents if rng.random() < 1 / 2)
        return ("admit", z)
    return ("deterministic", None)


# ----------------------------------------------------------------------
# revenue evaluation


@dataclass(frozen=True)
class RevenueEstimate:
    value: object
    std_error: object = None
    atoms: int = 0


def _single_sample_revenue(instance: Instance, s: tuple) -> object:
    """Exact per-profile expected revenue of the lazy auction whose reserve
    for each tentative winner is an independent draw from that agent's value
    distribution given the others' signals.

    The serving decision is separable per winner, so the expectation over
    the reserve vector factors agent by agent.
    """
    base = gvcg(instance, s)
    vals = instance.values_at(s)
    total = 0
    for a in base.tentative:
        vdist = conditional_value_distribution(instance, a, s)
        p_bar = base.threshold_value[a]
        for rho, p in vdist:
            price = max(rho, p_bar)
            if vals[a] >= price:
                total += p * price
    return total


def expected_revenue(instance: Instance, spec: MechanismSpec, mode: str = "exact",
                     *, trials: int = 10_000, seed: int = 0,
                     atom_cap: int = DEFAULT_ATOM_CAP) -> RevenueEstimate:
    """Expected revenue, exactly (profiles x internal randomness) or by
    Monte Carlo with the given seed."""
    if spec.reserve_source == "single-sample":
        if spec.mech_id != "gvcg-lazy":
            raise MechanismError("single-sample reserves integrate exactly for the "
                                 "lazy auction only")
        if mode != "exact":
            raise MechanismError("single-sample reserves run in exact mode")
        total = 0
        atoms = 0
        for s, p in instance.dist.enumerate_support():
            total += p * _single_sample_revenue(instance, s)
            atoms += 1
        return RevenueEstimate(total, atoms=atoms)

    if mode == "exact":
        support = list(instance.dist.enumerate_support())
        reals = list(realizations(instance, spec))
        atoms = len(support) * len(reals)
        if atoms > atom_cap:
            raise SizeError(f"exact evaluation needs {atoms} atoms (cap {atom_cap})")
        total = 0
        for s, p in support:
            for realization, weight in reals:
                out = run_realized(instance, spec, s, realization)
                total += p * weight * out.revenue
        return RevenueEstimate(total, atoms=atoms)

    if mode != "monte_carlo":
        raise MechanismError(f"unknown mode {mode!r}")
    import random

    rng = random.Random(seed)
    draws = []
    for _ in range(trials):
        s = instance.dist.sample(rng)
        realization = sample_realization(instance, spec, rng)
        out = run_realized(instance, spec, s, realization)
        draws.append(float(out.revenue))
    mean = sum(draws) / trials
    var = sum((x - mean) ** 2 for x in draws) / max(trials - 1, 1)
    return RevenueEstimate(mean, std_error=math.sqrt(var / trials), atoms=trials)


def opt_upper_bound(instance: Instance):
    """Expected winner-wise posted-price revenue plus the best feasible
    welfare disjoint from the winners; bounds every ex post IC mechanism."""
    if not instance.feas.is_matroid:
        raise WrongVariantError("the revenue upper bound needs a matroid system")
    all_agents = frozenset(instance.agents)
    total = 0
    for s, p in instance.dist.enumerate_support():
        w = winner_set(instance, s, all_agents)
        quote_sum = 0
        for a in w:
            q = conditional_monopoly_reserve(instance, a, s,
                                             event_mode="winner_conditioned")
            quote_sum += q.expected_revenue
        rest = all_agents - w
        loser_value = 0
        if rest:
            sub = instance.restricted(rest)
            weights = {a: value(instance.vp, a, s) for a in rest}
            tie = [a for a in instance.tie_break if a in rest]
            loser_value = max_weight_basis(sub, weights, tie).weight
        total += p * (quote_sum + loser_value)
    return total


# ----------------------------------------------------------------------
# incentive audit


@dataclass(frozen=True)
class AuditViolation:
    kind: str          # "ic" or "ir"
    realization: object
    profile: tuple
    agent: object
    deviation: object
    gap: object


def ic_ir_audit(instance: Instance, spec: MechanismSpec,
                tolerance=None) -> list[AuditViolation]:
    """Check ex post incentive compatibility and individual rationality.

    For every internal-randomness realization, every support profile, every
    agent, and every own-grid deviation: truthful utility must be at least
    the deviating utility and nonnegative, measured at the agent's true
    values.  Exact in rational mode; ``tolerance`` (default 1e-9) applies in
    double mode.
    """
    if tolerance is None:
        tolerance = 0 if instance.arithmetic == RATIONAL else 1e-9
    support = instance.dist.support_profiles()
    grid_profiles = list(instance.grid.profiles())
    violations = []
    for realization, _ in realizations(instance, spec):
        outcomes = {s: run_realized(instance, spec, s, realization)
                    for s in grid_profiles}
        for s in support:
            truth = outcomes[s]
            for k, a in enumerate(instance.agents):
                v_true = value(instance.vp, a, s)
                u_truth = v_true * truth.alloc[a] - truth.payment[a]
                if u_truth < -tolerance:
                    violations.append(AuditViolation(
                        "ir", realization, s, a, None, -u_truth))
                for t in instance.grid.axis(a):
                    if t == s[k]:
                        continue
                    dev = s[:k] + (t,) + s[k + 1:]
                    out = outcomes[dev]
                    u_dev = v_true * out.alloc[a] - out.payment[a]
                    if u_dev > u_truth + tolerance:
                        violations.append(AuditViolation(
                            "ic", realization, s, a, t, u_dev - u_truth))
    return violations
