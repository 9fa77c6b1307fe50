"""Compile observed play into a WCSP over strategies and payoffs.

The instance has one variable per strategy probability and one per payoff
entry of every observed joint profile, and four constraint families:

* strategy fit: unary negative log-likelihood of the observed action counts;
* simplex: each player's probabilities sum to one (hard);
* payoff fit: unary Gaussian negative log-likelihood of observed payoffs;
* rationality: ``alpha * |exp(lam*EP_k) - sigma_k * sum_j exp(lam*EP_j)|``
  per player and action, where expected payoffs only sum over opponent
  profiles that were observed together with the action.

In decomposed mode the simplex constraint becomes a chain of partial sums
and each rationality term a chain of products, sums and exponentials over
auxiliary variables, ending in a ternary soft constraint.  Every
auxiliary value is computed by the same floating-point operations, in the
same order, as the monolithic evaluator, so both forms cost every
assignment identically.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, empirical_counts
from .estimate import Estimate, Method
from .game import MixedProfile
from .wcsp import (
    Functional,
    HardPredicate,
    SoftFunction,
    SoftTable,
    Variable,
    Wcsp,
    image_domain,
    register,
)

AUX_DOMAIN_CAP = 1 << 16
SIMPLEX_TOL = 1e-9
LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
UNOBSERVED_MODES = ("omit", "midpoint", "free")


@dataclass(frozen=True)
class LearnerConfig:
    lam: float
    alpha: float = 100.0
    strategy_step: float = 0.05
    payoff_step: float = 0.1
    noise_stddev: float = 0.7
    log_zero_cap: float = 1e6
    decomposed: bool = True
    # rationality terms only for actions seen in the data (alternative reading)
    played_actions_only: bool = False
    # how unobserved profiles enter expected payoffs: "omit" the term, use the
    # "midpoint" fill as a constant, or give them "free" unconstrained variables
    unobserved_payoffs: str = "omit"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if not 0 < self.strategy_step <= 1:
            raise ValueError("strategy_step must lie in (0, 1]")
        n = round(1 / self.strategy_step)
        if abs(n * self.strategy_step - 1) > 1e-9:
            raise ValueError("1/strategy_step must be an integer")
        if not self.payoff_step > 0:
            raise ValueError("payoff_step must be positive")
        if not self.noise_stddev > 0:
            raise ValueError("noise_stddev must be positive")
        if self.unobserved_payoffs not in UNOBSERVED_MODES:
            raise ValueError(f"unobserved_payoffs must be one of {UNOBSERVED_MODES}")

    def strategy_grid(self) -> np.ndarray:
        n = round(1 / self.strategy_step)
        return np.arange(n + 1) / n


def payoff_grid(u_min: float, u_max: float, step: float) -> np.ndarray:
    """``u_min + j*step`` up to ``u_max``, with ``u_max`` appended if off-grid."""
    n = int(math.floor((u_max - u_min) / step + 1e-9))
    grid = u_min + step * np.arange(n + 1)
    if u_max - grid[-1] > 1e-9 * max(1.0, abs(u_max)):
        grid = np.append(grid, u_max)
    return grid


def strategy_ml_cost(count, value, cap: float = 1e6):
    """Negative log-likelihood ``-count * ln(value)`` with ``ln 0`` capped."""
    count = np.asarray(count, dtype=float)
    value = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        nll = -count * np.log(value) + 0.0
    out = np.where(count == 0, 0.0, np.where(value == 0, cap, nll))
    return float(out) if out.ndim == 0 else out


def payoff_ml_cost(observations, value, noise_stddev: float):
    """Gaussian negative log-likelihood of ``observations`` at mean ``value``."""
    obs = np.asarray(observations, dtype=float).ravel()
    value = np.asarray(value, dtype=float)
    const = math.log(noise_stddev) + LOG_SQRT_2PI
    sq = (obs[:, None] - value.ravel()[None, :]) ** 2 / (2 * noise_stddev**2) + const
    out = sq.sum(axis=0).reshape(value.shape) if obs.size else np.zeros(value.shape)
    return float(out) if out.ndim == 0 else out


def payoff_table(observations, grid, noise_stddev: float) -> np.ndarray:
    """Payoff fit costs over ``grid`` as emitted into the instance.

    A negative Gaussian normaliser (``R < 1/sqrt(2 pi)``) is dropped so the
    costs stay non-negative; it is constant per observation either way.
    """
    obs = np.asarray(observations, dtype=float).ravel()
    shift = min(0.0, math.log(noise_stddev) + LOG_SQRT_2PI)
    return np.maximum(payoff_ml_cost(obs, grid, noise_stddev) - obs.size * shift, 0.0)


def _rationality_weights(opp_values, terms, lam):
    """``exp(lam * EP)`` for one action, in the canonical operation order."""
    y = None
    for slots, payoff in terms:
        if not slots:
            x = payoff
        else:
            w = opp_values[slots[0]]
            for s in slots[1:]:
                w = w * opp_values[s]
            x = w * payoff
        y = x if y is None else y + x
    return np.exp(lam * y) if y is not None else np.float64(1.0)


def _rationality(own, opp_values, blocks, k, lam, alpha):
    """Shared evaluation order for the rationality cost.

    ``opp_values[b]`` are opponent probability arrays, ``blocks[a]`` lists
    ``(slots, payoff)`` pairs: the opponent slots whose product weights the
    payoff.  Both compilation modes must go through these exact operations.
    """
    weights = [_rationality_weights(opp_values, terms, lam) for terms in blocks]
    total = weights[0]
    for e in weights[1:]:
        total = total + e
    return alpha * np.abs(weights[k] - own * total)


def rationality_cost(sigma_ik, opponent_strategies, payoffs, action: int, lam: float,
                     alpha: float) -> float:
    """Rationality penalty for one player and action.

    ``payoffs`` has the player's own action on axis 0 and the opponents on
    the remaining axes (in player order); NaN entries mark profiles that were
    not observed and are left out of the expected payoffs.
    """
    payoffs = np.asarray(payoffs, dtype=float)
    opp_values, slot_of = [], {}
    for j, sigma in enumerate(opponent_strategies):
        for b, p in enumerate(np.asarray(sigma, dtype=float)):
            slot_of[j, b] = len(opp_values)
            opp_values.append(p)
    blocks = []
    for a in range(payoffs.shape[0]):
        terms = []
        for opp in itertools.product(*(range(n) for n in payoffs.shape[1:])):
            u = payoffs[(a,) + opp]
            if not np.isnan(u):
                terms.append((tuple(slot_of[j, b] for j, b in enumerate(opp)), u))
        blocks.append(terms)
    return float(_rationality(np.float64(sigma_ik), opp_values, blocks, action, lam, alpha))


@register("abs_residual")
def _abs_residual_factory(alpha):
    return lambda sigma, e, total: alpha * np.abs(e - sigma * total)


@register("sum_to_one")
def _sum_to_one_factory():
    def allows(*xs):
        total = xs[0]
        for x in xs[1:]:
            total = total + x
        return np.abs(total - 1.0) <= SIMPLEX_TOL

    return allows


@register("scale")
def _scale_factory(factor):
    return lambda x: x * factor


@register("rationality")
def _rationality_factory(k, lam, alpha, num_opp, blocks):
    blocks = [[(tuple(slots), pos, const) for slots, pos, const in terms] for terms in blocks]

    def evaluate(*values):
        opp = values[1:1 + num_opp]
        real = [[(slots, const if pos is None else values[pos]) for slots, pos, const in terms]
                for terms in blocks]
        return _rationality(values[0], opp, real, k, lam, alpha)

    return evaluate


class RationalityCost(SoftFunction):
    """Monolithic rationality constraint for player ``i``, action ``k``.

    Scope: ``sigma_i(a_k)``, then every opponent probability, then the
    player's payoff variables.  ``blocks[a]`` lists ``(slots, pos, const)``
    per opponent profile: the opponent slots weighting it and either the
    scope position of its payoff variable or, with ``pos=None``, a constant
    payoff.
    """

    def __init__(self, scope, k, lam, alpha, num_opp, blocks):
        params = {"k": k, "lam": lam, "alpha": alpha, "num_opp": num_opp,
                  "blocks": [[[list(slots), pos, const] for slots, pos, const in terms]
                             for terms in blocks]}
        super().__init__(scope, name="rationality", params=params)
        self.k, self.lam, self.alpha = k, lam, alpha
        self.num_opp = num_opp
        self.blocks = blocks

    def lower_bound(self, fixed, free, unary, enum_cap=32, block_cap=1 << 18):
        """Exact minimum for two-action players, ``None`` otherwise.

        With every probability fixed, the cost only couples the two actions'
        payoff blocks through ``|(1 - s) E_k - s E_other|``; the minimum over
        pairs of block completions is a lower envelope of cones, found by
        sorting one side.  Up to ``enum_cap`` completions of free
        probabilities are enumerated around that.
        """
        if len(self.blocks) != 2:
            return None
        sigma_ids = self.scope[: 1 + self.num_opp]
        free_sigma = [v for v in sigma_ids if v in free]
        if math.prod(free[v].size for v in free_sigma) > enum_cap:
            return None
        best = np.inf
        for combo in itertools.product(*(range(free[v].size) for v in free_sigma)):
            values = dict(fixed)
            extra = 0.0
            for v, i in zip(free_sigma, combo):
                values[v] = free[v][i]
                if v in unary:
                    extra += float(unary[v][i])
            got = self._envelope(values, free, unary, block_cap)
            if got is None:
                return None
            best = min(best, got + extra)
        return best

    def _block(self, terms, opp, values, free, unary, block_cap):
        ids = [self.scope[pos] for _, pos, _ in terms if pos is not None]
        free_ids = [v for v in ids if v in free]
        if math.prod(free[v].size for v in free_ids) > block_cap:
            return None
        shape = [free[v].size for v in free_ids]
        arrays, cost = {}, np.zeros([1] * len(free_ids))
        for axis, v in enumerate(free_ids):
            s = [1] * len(free_ids)
            s[axis] = -1
            arrays[v] = free[v].reshape(s)
            if v in unary:
                cost = cost + unary[v].reshape(s)
        real = []
        for slots, pos, const in terms:
            if pos is None:
                real.append((slots, const))
            else:
                vid = self.scope[pos]
                real.append((slots, arrays[vid] if vid in arrays else values[vid]))
        e = _rationality_weights(opp, real, self.lam)
        e = np.broadcast_to(e, shape).ravel()
        return e, np.broadcast_to(cost, shape).ravel()

    def _envelope(self, values, free, unary, block_cap):
        own = values[self.scope[0]]
        # probabilities that weight no observed profile may be absent
        opp = [values.get(v, 0.0) for v in self.scope[1:1 + self.num_opp]]
        blocks = []
        for terms in self.blocks:
            got = self._block(terms, opp, values, free, unary, block_cap)
            if got is None:
                return None
            blocks.append(got)
        (e_k, c_k), (e_o, c_o) = blocks[self.k], blocks[1 - self.k]
        x = (1 - own) * e_k
        y = own * e_o
        order = np.argsort(y)
        y, c_o = y[order], c_o[order]
        a = self.alpha
        below = np.minimum.accumulate(c_o - a * y)
        above = np.minimum.accumulate((c_o + a * y)[::-1])[::-1]
        cut = np.searchsorted(y, x, side="right")
        left = np.where(cut > 0, below[np.maximum(cut - 1, 0)] + a * x, np.inf)
        right = np.where(cut < y.size, above[np.minimum(cut, y.size - 1)] - a * x, np.inf)
        best = float(np.min(np.minimum(left, right) + c_k))
        # (1-s)E_k - sE_o and E_k - s(E_k+E_o) round differently
        slack = 1e-12 * a * (float(e_k.max()) + float(e_o.max())) + 1e-12
        return max(0.0, best - slack)


@dataclass
class VariableLayout:
    strategy: dict = field(default_factory=dict)  # (player, action) -> id
    payoff: dict = field(default_factory=dict)  # (player, profile) -> id
    auxiliary: list = field(default_factory=list)
    strategy_grid: np.ndarray | None = None
    payoff_grid: np.ndarray | None = None
    u_min: float = 0.0
    u_max: float = 0.0
    actions_per_player: tuple = ()
    observed_profiles: list = field(default_factory=list)

    @property
    def fill_value(self) -> float:
        """Stand-in payoff for unobserved profiles: the range midpoint."""
        return 0.5 * (self.u_min + self.u_max)


def _sid(i, a):
    return f"sigma[{i}][{a}]"


def _uid(i, profile):
    return f"u[{i}][{','.join(map(str, profile))}]"


class _Builder:
    def __init__(self):
        self.variables, self.constraints = [], []
        self.domains = {}
        self.aux = []

    def var(self, vid, domain):
        self.variables.append(Variable(vid, domain))
        self.domains[vid] = self.variables[-1].domain
        return vid

    def functional(self, out, inputs, name, params=None, domain="image"):
        f = Functional(out, inputs, name=name, params=params)
        if isinstance(domain, str):
            domain = image_domain(f.fn, [self.domains[i] for i in inputs], AUX_DOMAIN_CAP)
        self.var(out, domain)
        self.aux.append(out)
        self.constraints.append(f)
        return out


def _strategy_part(b: _Builder, layout: VariableLayout, counts, config: LearnerConfig):
    grid = config.strategy_grid()
    layout.strategy_grid = grid
    for i, k in enumerate(layout.actions_per_player):
        for a in range(k):
            layout.strategy[i, a] = b.var(_sid(i, a), grid)
    for i, k in enumerate(layout.actions_per_player):
        for a in range(k):
            table = strategy_ml_cost(counts.action_counts[i][a], grid, config.log_zero_cap)
            b.constraints.append(SoftTable([_sid(i, a)], np.atleast_1d(table)))
    for i, k in enumerate(layout.actions_per_player):
        ids = [_sid(i, a) for a in range(k)]
        if not config.decomposed:
            b.constraints.append(HardPredicate(ids, name="sum_to_one"))
            continue
        prev = b.functional(f"t[{i}][0]", [ids[0]], "identity") if k > 1 else ids[0]
        for a in range(1, k):
            last = a == k - 1
            prev = b.functional(f"t[{i}][{a}]", [prev, ids[a]], "sum",
                                domain=np.array([1.0]) if last else "image")
        if k == 1:
            b.functional(f"t[{i}][0]", [ids[0]], "identity", domain=np.array([1.0]))


def build_strategy_wcsp(dataset: Dataset, config: LearnerConfig):
    """Strategy variables with their fit and simplex constraints only."""
    counts = empirical_counts(dataset)
    layout = VariableLayout(actions_per_player=dataset.actions_per_player)
    b = _Builder()
    _strategy_part(b, layout, counts, config)
    layout.auxiliary = list(b.aux)
    return Wcsp(b.variables, b.constraints), layout


def build_wcsp(dataset: Dataset, config: LearnerConfig):
    """Compile ``dataset`` into ``(Wcsp, VariableLayout)``.

    Branching follows declaration order: strategy variables, then payoff
    variables player by player; auxiliaries are never branched on.
    """
    if dataset is None or dataset.m == 0:
        raise ValueError("cannot compile an empty dataset")
    counts = empirical_counts(dataset)
    shape = dataset.actions_per_player
    n = len(shape)
    observed = counts.observed_profiles()
    values = dataset.observed_payoffs()
    layout = VariableLayout(actions_per_player=shape, observed_profiles=list(observed))
    layout.u_min, layout.u_max = float(values.min()), float(values.max())
    grid = payoff_grid(layout.u_min, layout.u_max, config.payoff_step)
    layout.payoff_grid = grid
    fill = layout.fill_value

    b = _Builder()
    _strategy_part(b, layout, counts, config)
    modelled = observed
    if config.unobserved_payoffs == "free":
        modelled = [tuple(p) for p in itertools.product(*(range(k) for k in shape))]
    for i in range(n):
        for prof in modelled:
            layout.payoff[i, prof] = b.var(_uid(i, prof), grid)
    for i in range(n):
        for prof in observed:
            table = payoff_table(counts.payoff_observations(i, prof), grid, config.noise_stddev)
            b.constraints.append(SoftTable([_uid(i, prof)], table))

    for i in range(n):
        opponents = [j for j in range(n) if j != i]
        opp_ids = [_sid(j, a) for j in opponents for a in range(shape[j])]
        slot = {ja: s for s, ja in enumerate((j, a) for j in opponents for a in range(shape[j]))}
        pay_ids = []
        blocks = []  # per action: (slots, profile, constant or None)
        for a in range(shape[i]):
            terms = []
            for opp in itertools.product(*(range(shape[j]) for j in opponents)):
                prof = opp[:i] + (a,) + opp[i:]
                slots = tuple(slot[j, b_] for j, b_ in zip(opponents, opp))
                if (i, prof) in layout.payoff:
                    terms.append((slots, prof, None))
                    pay_ids.append(_uid(i, prof))
                elif config.unobserved_payoffs == "midpoint":
                    terms.append((slots, prof, fill))
            blocks.append(terms)
        scope_pos = {vid: 1 + len(opp_ids) + p for p, vid in enumerate(pay_ids)}
        mono_blocks = [[(slots, None if c is not None else scope_pos[_uid(i, prof)], c)
                        for slots, prof, c in terms] for terms in blocks]

        if config.decomposed:
            e_ids = _exp_chain(b, i, opponents, blocks, config.lam)
            s_id = e_ids[0]
            for a in range(1, shape[i]):
                s_id = b.functional(f"S[{i}][{a}]", [s_id, e_ids[a]], "sum")
        for k in range(shape[i]):
            if config.played_actions_only and counts.action_counts[i][k] == 0:
                continue
            mono = RationalityCost([_sid(i, k)] + opp_ids + pay_ids, k, config.lam,
                                   config.alpha, len(opp_ids), mono_blocks)
            if not config.decomposed:
                b.constraints.append(mono)
            else:
                b.constraints.append(SoftFunction([_sid(i, k), e_ids[k], s_id], name="abs_residual",
                                                  params={"alpha": config.alpha}, closed_form=mono))
    layout.auxiliary = list(b.aux)
    return Wcsp(b.variables, b.constraints), layout


def _exp_chain(b: _Builder, i, opponents, blocks, lam):
    """Auxiliaries for ``exp(lam * EP_i(a))`` per action; returns their ids."""
    weight = {}

    def weight_id(opp_profile):
        if opp_profile in weight:
            return weight[opp_profile]
        ids = [_sid(j, b_) for j, b_ in zip(opponents, opp_profile)]
        cur = ids[0]
        for m, nxt in enumerate(ids[1:], start=1):
            tag = ",".join(map(str, opp_profile[: m + 1]))
            cur = b.functional(f"w[{i}][{tag}]", [cur, nxt], "product")
        weight[opp_profile] = cur
        return cur

    e_ids = []
    for a, terms in enumerate(blocks):
        y = None
        for m, (_, prof, const) in enumerate(terms):
            opp = prof[:i] + prof[i + 1:]
            tag = f"x[{i}][{','.join(map(str, prof))}]"
            if not opp:
                x = b.functional(tag, [_uid(i, prof)], "identity")
            elif const is None:
                x = b.functional(tag, [weight_id(opp), _uid(i, prof)], "product")
            else:
                x = b.functional(tag, [weight_id(opp)], "scale", {"factor": const})
            y = x if y is None else b.functional(f"y[{i}][{a}][{m}]", [y, x], "sum")
        if y is None:
            e_ids.append(b.var(f"E[{i}][{a}]", np.array([1.0])))
            b.aux.append(e_ids[-1])
        else:
            e_ids.append(b.functional(f"E[{i}][{a}]", [y], "exp_scaled", {"scale": lam}))
    return e_ids


def extract_estimate(layout: VariableLayout, solution, dataset: Dataset = None,
                     method: Method = Method.LQRE) -> Estimate:
    """Read strategies and payoffs back out of a solved instance.

    Entries of profiles never observed are flagged as unconstrained; they
    hold the midpoint of the payoff range unless the instance modelled them.
    """
    shape = layout.actions_per_player
    strategies = [np.array([solution.assignment[layout.strategy[i, a]] for a in range(k)])
                  for i, k in enumerate(shape)]
    observed_set = set(layout.observed_profiles)
    payoffs, observed = [], []
    for i in range(len(shape)):
        table = np.full(shape, layout.fill_value)
        seen = np.zeros(shape, dtype=bool)
        for (p, prof), vid in layout.payoff.items():
            if p == i:
                table[prof] = solution.assignment[vid]
                seen[prof] = prof in observed_set
        payoffs.append(table)
        observed.append(seen)
    return Estimate(tuple(payoffs), tuple(observed), MixedProfile(strategies), method)
