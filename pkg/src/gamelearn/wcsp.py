"""Weighted constraint satisfaction: model, exact branch and bound, brute force.

A :class:`Wcsp` holds variables with finite real domains and three kinds of
constraints:

* soft constraints (:class:`SoftTable`, :class:`SoftFunction`) map scope
  tuples to non-negative finite costs;
* hard constraints (:class:`HardTable`, :class:`HardPredicate`) accept or
  reject scope tuples;
* functional constraints (:class:`Functional`) define an output variable as
  a function of input variables.

Variables that are not the output of a functional constraint are *decision*
variables.  Both solvers only ever choose values for decision variables;
functional outputs are computed from their inputs.  An output variable may
carry an explicit domain, in which case the computed value is snapped onto
it (within ``SNAP_TOL``) and rejected when no domain value is close enough,
or ``domain=None``, meaning its domain is the image of its defining function
(used when that image is too large to materialise).

All evaluators are vectorised: they receive numpy arrays that broadcast
against each other, one per scope variable, holding values (not indices).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable

import numpy as np

SNAP_TOL = 1e-9
IMAGE_CAP = 1 << 20


class Unsatisfiable(Exception):
    """No assignment satisfies every hard constraint."""


class ProblemTooLarge(ValueError):
    """Exhaustive enumeration would exceed the configured cap."""


class _Infeasible:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"

    def __bool__(self):
        return False


INFEASIBLE = _Infeasible()
"""Marker returned by :func:`evaluate_cost` when a hard constraint fails."""


# named evaluators, so constraints survive a JSON round trip
EVALUATORS: dict[str, Callable[..., Callable]] = {}


def register(name: str):
    def deco(factory):
        EVALUATORS[name] = factory
        return factory

    return deco


@register("sum")
def _sum_factory():
    def total(*xs):
        out = xs[0]
        for x in xs[1:]:
            out = out + x
        return out

    return total


@register("product")
def _product_factory():
    def prod(*xs):
        out = xs[0]
        for x in xs[1:]:
            out = out * x
        return out

    return prod


@register("identity")
def _identity_factory():
    return lambda x: x


@register("exp_scaled")
def _exp_factory(scale):
    return lambda x: np.exp(scale * x)


@dataclass(frozen=True)
class Variable:
    id: Hashable
    domain: np.ndarray | None

    def __post_init__(self):
        if self.domain is not None:
            dom = np.asarray(self.domain, dtype=float).ravel()
            if dom.size == 0:
                raise ValueError(f"variable {self.id!r} has an empty domain")
            if np.any(np.diff(dom) <= 0):
                raise ValueError(f"domain of {self.id!r} must be strictly increasing")
            dom.setflags(write=False)
            object.__setattr__(self, "domain", dom)

    @property
    def size(self) -> int | None:
        return None if self.domain is None else self.domain.size


class Constraint:
    """Base class; ``scope`` is a tuple of variable ids."""

    kind = "abstract"
    scope: tuple

    def to_json(self) -> dict:
        raise NotImplementedError


class SoftConstraint(Constraint):
    kind = "soft"

    def evaluate(self, *values):
        raise NotImplementedError

    def lower_bound(self, fixed: dict, free: dict, unary: dict):
        """Optional specialised bound; ``None`` defers to enumeration.

        ``fixed`` maps assigned scope ids to values, ``free`` maps the rest
        to their domains and ``unary`` holds cost vectors (aligned with
        ``free`` domains) that must be added to the constraint's own cost.
        """
        return None


class SoftTable(SoftConstraint):
    """Explicit cost table; axis ``k`` of ``table`` follows ``scope[k]``'s domain."""

    def __init__(self, scope, table, name: str | None = None):
        self.scope = tuple(scope)
        self.table = np.asarray(table, dtype=float)
        if self.table.ndim != len(self.scope):
            raise ValueError("table rank must match scope length")
        if not np.all(np.isfinite(self.table)) or np.any(self.table < 0):
            raise ValueError("soft costs must be finite and non-negative")
        self.name = name
        self._domains = None

    def bind(self, domains):
        for dom, n in zip(domains, self.table.shape):
            if dom is None or dom.size != n:
                raise ValueError(f"table shape {self.table.shape} does not fit scope {self.scope}")
        self._domains = tuple(domains)

    def evaluate(self, *values):
        idx = tuple(np.searchsorted(d, v) for d, v in zip(self._domains, values))
        return self.table[idx]

    def to_json(self):
        return {"scope": list(map(str, self.scope)), "kind": "soft-table", "table": self.table.tolist()}


class SoftFunction(SoftConstraint):
    """Closed-form soft constraint ``cost = fn(*scope_values)``."""

    def __init__(self, scope, fn=None, name: str | None = None, params: dict | None = None,
                 closed_form: SoftConstraint | None = None):
        self.scope = tuple(scope)
        self.name = name
        self.params = dict(params or {})
        if fn is None:
            fn = EVALUATORS[name](**self.params)
        self.fn = fn
        # an equivalent cost over decision variables, used only for bounding
        self.closed_form = closed_form

    def evaluate(self, *values):
        return self.fn(*values)

    def to_json(self):
        if self.name is None:
            raise ValueError("only named evaluators can be serialised")
        return {"scope": list(map(str, self.scope)), "kind": "soft",
                "evaluator": self.name, "params": self.params}


class HardConstraint(Constraint):
    kind = "hard"

    def allows(self, *values):
        raise NotImplementedError


class HardTable(HardConstraint):
    """Explicit relation; ``allowed`` is a boolean array over the scope's domains."""

    def __init__(self, scope, allowed):
        self.scope = tuple(scope)
        self.allowed = np.asarray(allowed, dtype=bool)
        self._domains = None

    bind = SoftTable.bind

    @property
    def table(self):
        return self.allowed

    def allows(self, *values):
        idx = tuple(np.searchsorted(d, v) for d, v in zip(self._domains, values))
        return self.allowed[idx]

    def to_json(self):
        return {"scope": list(map(str, self.scope)), "kind": "hard-table",
                "table": self.allowed.astype(int).tolist()}


class HardPredicate(HardConstraint):
    def __init__(self, scope, predicate=None, name: str | None = None, params: dict | None = None):
        self.scope = tuple(scope)
        self.name = name
        self.params = dict(params or {})
        if predicate is None:
            predicate = EVALUATORS[name](**self.params)
        self.predicate = predicate

    def allows(self, *values):
        return self.predicate(*values)

    def to_json(self):
        return {"scope": list(map(str, self.scope)), "kind": "hard",
                "evaluator": self.name, "params": self.params}


class Functional(Constraint):
    """Hard constraint ``output == fn(*inputs)``; the solver assigns ``output``."""

    kind = "functional"

    def __init__(self, output, inputs, fn=None, name: str | None = None, params: dict | None = None):
        self.output = output
        self.inputs = tuple(inputs)
        self.scope = self.inputs + (output,)
        self.name = name
        self.params = dict(params or {})
        if fn is None:
            fn = EVALUATORS[name](**self.params)
        self.fn = fn

    def to_json(self):
        return {"scope": list(map(str, self.scope)), "kind": "functional",
                "evaluator": self.name, "params": self.params}


def image_domain(fn, parent_domains, cap: int = IMAGE_CAP):
    """Sorted distinct values of ``fn`` over the product of parent domains.

    Returns ``None`` when a parent is implicit or the product exceeds ``cap``.
    """
    if any(d is None for d in parent_domains):
        return None
    if math.prod(d.size for d in parent_domains) > cap:
        return None
    grids = np.meshgrid(*parent_domains, indexing="ij", sparse=True)
    return np.unique(np.asarray(fn(*grids), dtype=float))


def snap(values, domain):
    """Map values onto the nearest domain entry; NaN where none is within tolerance."""
    values = np.asarray(values, dtype=float)
    hi = np.clip(np.searchsorted(domain, values), 0, domain.size - 1)
    lo = np.clip(hi - 1, 0, domain.size - 1)
    pick = np.where(np.abs(domain[lo] - values) <= np.abs(domain[hi] - values), lo, hi)
    near = domain[pick]
    ok = np.abs(near - values) <= SNAP_TOL * np.maximum(1.0, np.abs(values))
    return np.where(ok, near, np.nan)


class Wcsp:
    """Immutable problem instance.  Functional outputs must be declared after their inputs."""

    def __init__(self, variables, constraints):
        self.variables = tuple(variables)
        self.constraints = tuple(constraints)
        self.index = {}
        for pos, var in enumerate(self.variables):
            if var.id in self.index:
                raise ValueError(f"duplicate variable id {var.id!r}")
            self.index[var.id] = pos
        self.definition = {}
        for c in self.constraints:
            for vid in c.scope:
                if vid not in self.index:
                    raise ValueError(f"constraint refers to undeclared variable {vid!r}")
            if isinstance(c, Functional):
                if c.output in self.definition:
                    raise ValueError(f"variable {c.output!r} is defined twice")
                if any(self.index[i] >= self.index[c.output] for i in c.inputs):
                    raise ValueError(f"functional output {c.output!r} declared before its inputs")
                self.definition[c.output] = c
            if isinstance(c, (SoftTable, HardTable)):
                c.bind([self.domain(v) for v in c.scope])
        for var in self.variables:
            if var.domain is None and var.id not in self.definition:
                raise ValueError(f"decision variable {var.id!r} needs an explicit domain")
        self.decision_ids = tuple(v.id for v in self.variables if v.id not in self.definition)
        # explicit output domains smaller than the function image act as filters
        self.checked = {}
        for out, f in self.definition.items():
            dom = self.domain(out)
            if dom is None:
                self.checked[out] = False
                continue
            image = image_domain(f.fn, [self.domain(i) for i in f.inputs])
            self.checked[out] = image is None or not np.all(np.isin(image, dom))
        self._support = {}

    def domain(self, vid):
        return self.variables[self.index[vid]].domain

    @property
    def soft(self):
        return [c for c in self.constraints if isinstance(c, SoftConstraint)]

    def support(self, vid) -> tuple:
        """Decision variables that ``vid`` depends on, in declaration order."""
        if vid not in self._support:
            if vid in self.definition:
                found = set()
                for i in self.definition[vid].inputs:
                    found.update(self.support(i))
                self._support[vid] = tuple(sorted(found, key=self.index.get))
            else:
                self._support[vid] = (vid,)
        return self._support[vid]

    def constraint_support(self, c) -> tuple:
        found = set()
        for vid in c.scope:
            found.update(self.support(vid))
        return tuple(sorted(found, key=self.index.get))

    def derive(self, values: dict, needed=None) -> dict:
        """Extend ``values`` (decision id -> array) with functional outputs.

        Only outputs listed in ``needed`` are computed when it is given.
        Infeasible snaps yield NaN.
        """
        values = dict(values)
        for var in self.variables:
            vid = var.id
            if vid not in self.definition or vid in values:
                continue
            if needed is not None and vid not in needed:
                continue
            f = self.definition[vid]
            out = f.fn(*(values[i] for i in f.inputs))
            if self.checked[vid]:
                out = snap(out, var.domain)
            values[vid] = out
        return values

    def ancestors(self, ids) -> set:
        """Functional outputs needed to evaluate variables ``ids``."""
        needed, stack = set(), list(ids)
        while stack:
            vid = stack.pop()
            if vid in self.definition and vid not in needed:
                needed.add(vid)
                stack.extend(self.definition[vid].inputs)
        return needed

    def to_json(self) -> dict:
        return {
            "variables": [
                {"id": str(v.id), "domain": None if v.domain is None else v.domain.tolist()}
                for v in self.variables
            ],
            "constraints": [c.to_json() for c in self.constraints],
        }


def dump_wcsp(wcsp: Wcsp, path) -> None:
    with open(path, "w") as fh:
        json.dump(wcsp.to_json(), fh)


def wcsp_from_json(data: dict) -> Wcsp:
    """Rebuild an instance from :meth:`Wcsp.to_json`; ids come back as strings."""
    variables = [Variable(v["id"], None if v["domain"] is None else np.array(v["domain"]))
                 for v in data["variables"]]
    constraints = []
    for c in data["constraints"]:
        scope, kind = c["scope"], c["kind"]
        if kind == "soft-table":
            constraints.append(SoftTable(scope, c["table"]))
        elif kind == "hard-table":
            constraints.append(HardTable(scope, np.array(c["table"], dtype=bool)))
        elif kind == "soft":
            constraints.append(SoftFunction(scope, name=c["evaluator"], params=c["params"]))
        elif kind == "hard":
            constraints.append(HardPredicate(scope, name=c["evaluator"], params=c["params"]))
        elif kind == "functional":
            constraints.append(Functional(scope[-1], scope[:-1], name=c["evaluator"], params=c["params"]))
        else:
            raise ValueError(f"unknown constraint kind {kind!r}")
    return Wcsp(variables, constraints)


def _constraint_value(wcsp: Wcsp, c, values: dict):
    """Cost (soft) or acceptance (hard, functional) on already-derived values."""
    args = [values[v] for v in c.scope]
    if isinstance(c, SoftConstraint):
        out = np.asarray(c.evaluate(*args), dtype=float)
        return np.where(np.isnan(out), np.inf, out)
    if isinstance(c, HardConstraint):
        ok = np.asarray(c.allows(*args), dtype=bool)
        bad = np.zeros(ok.shape, dtype=bool)
        for a in args:
            bad = bad | np.isnan(a)
        return ok & ~bad
    # functional constraints are enforced by derive(); only NaN marks failure
    return ~np.isnan(values[c.output])


def evaluate_cost(wcsp: Wcsp, assignment: dict):
    """Sum of soft costs, or :data:`INFEASIBLE` if a hard constraint fails.

    The assignment must give a value for every variable, derived ones
    included; functional outputs are checked against their definition.
    """
    missing = [v.id for v in wcsp.variables if v.id not in assignment]
    if missing:
        raise ValueError(f"assignment is missing variables {missing}")
    values = {vid: float(val) for vid, val in assignment.items()}
    for var in wcsp.variables:
        if var.domain is not None and var.id not in wcsp.definition:
            if not np.any(var.domain == values[var.id]):
                raise ValueError(f"value {values[var.id]} not in domain of {var.id!r}")
    derived = wcsp.derive({vid: values[vid] for vid in wcsp.decision_ids})
    for out in wcsp.definition:
        d = float(derived[out])
        if math.isnan(d) or abs(d - values[out]) > SNAP_TOL * max(1.0, abs(d)):
            return INFEASIBLE
    total = 0.0
    for c in wcsp.constraints:
        if isinstance(c, SoftConstraint):
            total += float(_constraint_value(wcsp, c, derived))
        elif isinstance(c, HardConstraint) and not bool(_constraint_value(wcsp, c, derived)):
            return INFEASIBLE
    return total


def complete_assignment(wcsp: Wcsp, decisions: dict) -> dict:
    """Full assignment from decision values (derived values are computed)."""
    derived = wcsp.derive({vid: float(decisions[vid]) for vid in wcsp.decision_ids})
    return {v.id: float(derived[v.id]) for v in wcsp.variables}


@dataclass
class Solution:
    assignment: dict
    total_cost: float
    optimal: bool = True
    nodes: int = 0

    def __getitem__(self, vid):
        return self.assignment[vid]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve`.

    ``bound_cap`` limits how many completions a single constraint bound may
    enumerate; beyond it the bound falls back to the unary part only.
    ``fold_unaries`` charges each unary cost on an unassigned variable to
    the first larger soft constraint over it, which makes that constraint's
    bound see the data fit and the constraint together.
    """

    bound_cap: int = 1 << 20
    forward_check_cap: int = 4096
    fold_unaries: bool = True
    node_limit: int | None = None


BRUTE_FORCE_CAP = 10**8


def brute_force_solve(wcsp: Wcsp, cap: int = BRUTE_FORCE_CAP, chunk: int = 1 << 16) -> Solution:
    """Exhaustive minimisation over the decision variables.

    Assignments are visited lexicographically (declaration order, ascending
    domain index) and the first minimum wins, so ties break deterministically.
    """
    ids = wcsp.decision_ids
    doms = [wcsp.domain(v) for v in ids]
    sizes = [d.size for d in doms]
    total = math.prod(sizes)
    if total > cap:
        raise ProblemTooLarge(f"{total} assignments exceed the cap of {cap}")
    # trailing variables form a vectorised block, leading ones are looped
    split = len(ids)
    block = 1
    while split > 0 and block * sizes[split - 1] <= chunk:
        split -= 1
        block *= sizes[split]
    tail_idx = np.indices(sizes[split:]).reshape(len(sizes) - split, -1)
    best_cost, best = np.inf, None
    for head in itertools.product(*(range(n) for n in sizes[:split])):
        values = {}
        for k, i in enumerate(head):
            values[ids[k]] = np.full(block, doms[k][i])
        for k in range(split, len(ids)):
            values[ids[k]] = doms[k][tail_idx[k - split]]
        values = wcsp.derive(values)
        cost = np.zeros(block)
        for c in wcsp.constraints:
            v = _constraint_value(wcsp, c, values)
            if v.dtype == bool:
                cost = np.where(v, cost, np.inf)
            else:
                cost = cost + v
        j = int(np.argmin(cost))
        if cost[j] < best_cost:
            best_cost = cost[j]
            best = tuple(head) + tuple(tail_idx[:, j])
    if best is None:
        raise Unsatisfiable("no assignment satisfies the hard constraints")
    decisions = {vid: doms[k][i] for k, (vid, i) in enumerate(zip(ids, best))}
    full = complete_assignment(wcsp, decisions)
    return Solution(full, evaluate_cost(wcsp, full), True, total)


@dataclass
class _Term:
    """A constraint as seen by the search: its support and bounding data."""

    constraint: Constraint
    support: tuple  # decision positions, ascending
    needed: set
    owned: list = field(default_factory=list)  # positions of folded unaries
    first: int = 0
    last: int = 0


class _Search:
    def __init__(self, wcsp: Wcsp, config: SolverConfig):
        self.wcsp = wcsp
        self.config = config
        self.ids = wcsp.decision_ids
        self.pos = {vid: k for k, vid in enumerate(self.ids)}
        self.doms = [wcsp.domain(v) for v in self.ids]
        n = len(self.ids)

        self.soft, self.hard = [], []
        for c in wcsp.constraints:
            support = tuple(sorted(self.pos[v] for v in wcsp.constraint_support(c)))
            if not support:
                support = ()
            term = _Term(c, support, wcsp.ancestors(c.scope))
            if support:
                term.first, term.last = support[0], support[-1]
            else:
                term.first = term.last = -1
            if isinstance(c, SoftConstraint):
                self.soft.append(term)
            elif isinstance(c, HardConstraint) or (
                isinstance(c, Functional) and wcsp.checked[c.output]
            ):
                self.hard.append(term)

        # unary soft costs per decision variable, as vectors over its domain
        self.unary_terms = [t for t in self.soft if len(t.support) == 1]
        self.unary_cost = [np.zeros(d.size) for d in self.doms]
        for t in self.unary_terms:
            p = t.support[0]
            self.unary_cost[p] = self.unary_cost[p] + self._vector(t)
        self.owner = {}
        if config.fold_unaries:
            for t in self.unary_terms:
                for big in self.soft:
                    if len(big.support) > 1 and t.support[0] in big.support:
                        self.owner[id(t)] = big
                        big.owned.append(t)
                        break
        self.order = [np.argsort(self.unary_cost[p], kind="stable") for p in range(n)]

        self.completing = [[] for _ in range(n)]
        self.hard_completing = [[] for _ in range(n)]
        self.partial = [[] for _ in range(n)]
        self.hard_partial = [[] for _ in range(n)]
        for t in self.soft:
            if t.last >= 0:
                self.completing[t.last].append(t)
                for d in range(t.first, t.last):
                    self.partial[d].append(t)
        for t in self.hard:
            if t.last >= 0:
                self.hard_completing[t.last].append(t)
                for d in range(t.first, t.last):
                    self.hard_partial[d].append(t)

        self.memo = {}
        # bounds of constraints that have no assigned variable yet
        root = [0.0 if id(t) in self.owner else self._bound(t, {}) for t in self.soft]
        self.untouched = np.zeros(n + 1)
        for t, b in zip(self.soft, root):
            if t.first >= 0:
                self.untouched[: t.first + 1] += b
        self.constant = 0.0
        for t in self.soft:
            if t.first < 0:
                self.constant += float(self._evaluate(t, {}))
        for t in self.hard:
            if t.first < 0 and not bool(self._evaluate(t, {})):
                raise Unsatisfiable("a constant hard constraint fails")

    def _vector(self, t):
        p = t.support[0]
        return np.broadcast_to(self._evaluate(t, {p: self.doms[p]}), self.doms[p].shape).astype(float)

    def _evaluate(self, t, values_by_pos):
        values = {self.ids[p]: v for p, v in values_by_pos.items()}
        values = self.wcsp.derive(values, t.needed)
        return _constraint_value(self.wcsp, t.constraint, values)

    def _bound(self, t, fixed):
        """Lower bound of ``t`` plus its free folded unaries, given fixed positions."""
        free = [p for p in t.support if p not in fixed]
        owned = [u for u in t.owned if u.support[0] not in fixed]
        unary_part = sum(float(self.unary_cost_of(u).min()) for u in owned)
        c = t.constraint
        special = getattr(c, "closed_form", None) or c
        if isinstance(special, SoftConstraint):
            unary = {}
            for u in owned:
                vid = self.ids[u.support[0]]
                unary[vid] = unary.get(vid, 0.0) + self.unary_cost_of(u)
            got = special.lower_bound(
                {self.ids[p]: v for p, v in fixed.items()},
                {self.ids[p]: self.doms[p] for p in free},
                unary,
            )
            if got is not None:
                return got
        size = math.prod(self.doms[p].size for p in free)
        if size > self.config.bound_cap:
            return unary_part
        values = dict(fixed)
        shape = [1] * len(free)
        for k, p in enumerate(free):
            s = list(shape)
            s[k] = self.doms[p].size
            values[p] = self.doms[p].reshape(s)
        cost = self._evaluate(t, values) if free else np.asarray(self._evaluate(t, values))
        for u in owned:
            k = free.index(u.support[0])
            s = [1] * len(free)
            s[k] = -1
            cost = cost + self.unary_cost_of(u).reshape(s)
        return float(np.min(cost))

    def unary_cost_of(self, u):
        key = ("u", id(u))
        vec = self.memo.get(key)
        if vec is None:
            vec = self.memo[key] = self._vector(u)
        return vec

    def _hard_possible(self, t, fixed):
        free = [p for p in t.support if p not in fixed]
        size = math.prod(self.doms[p].size for p in free)
        if size > self.config.forward_check_cap:
            return True
        values = dict(fixed)
        for k, p in enumerate(free):
            s = [1] * len(free)
            s[k] = -1
            values[p] = self.doms[p].reshape(s)
        return bool(np.any(self._evaluate(t, values)))

    def _seed(self, incumbent):
        """Start from a known assignment of the decision variables, if feasible."""
        idx = []
        for p, vid in enumerate(self.ids):
            hits = np.flatnonzero(np.abs(self.doms[p] - incumbent[vid]) <= SNAP_TOL)
            if hits.size == 0:
                raise ValueError(f"incumbent value {incumbent[vid]!r} is not in the domain of {vid}")
            idx.append(int(hits[0]))
        decisions = {vid: self.doms[p][i] for p, (vid, i) in enumerate(zip(self.ids, idx))}
        cost = evaluate_cost(self.wcsp, complete_assignment(self.wcsp, decisions))
        if cost is not INFEASIBLE:
            self.best, self.best_cost = tuple(idx), float(cost)

    def run(self, incumbent=None) -> Solution:
        n = len(self.ids)
        self.best_cost = np.inf
        self.best = None
        if incumbent is not None:
            self._seed(incumbent)
        self.nodes = 0
        self.aborted = False
        self.idx = [0] * n
        self.vals = {}
        self.costs = {}
        if n == 0:
            self.best, self.best_cost = (), self.constant
        else:
            self._dfs(0, self.constant)
        if self.best is None:
            if self.aborted:
                raise Unsatisfiable("node limit reached before any solution was found")
            raise Unsatisfiable("no assignment satisfies the hard constraints")
        decisions = {vid: self.doms[k][i] for k, (vid, i) in enumerate(zip(self.ids, self.best))}
        full = complete_assignment(self.wcsp, decisions)
        return Solution(full, evaluate_cost(self.wcsp, full), not self.aborted, self.nodes)

    def bound_at(self, prefix) -> float:
        """Node bound after assigning domain indices ``prefix`` in branching order.

        Mirrors the pruning test of the search; ``inf`` when a hard
        constraint already rules the node out.
        """
        depth = len(prefix) - 1
        self.idx = list(prefix) + [0] * (len(self.ids) - len(prefix))
        vals = {p: self.doms[p][i] for p, i in enumerate(prefix)}
        acc = self.constant
        for d in range(depth + 1):
            for t in self.hard_completing[d]:
                if not bool(self._evaluate(t, {p: vals[p] for p in t.support})):
                    return np.inf
            for t in self.completing[d]:
                acc += float(self._evaluate(t, {p: vals[p] for p in t.support}))
        bound = acc + self.untouched[depth + 1]
        for t in self.partial[depth]:
            if id(t) not in self.owner:
                bound += self._bound(t, {p: vals[p] for p in t.support if p <= depth})
        return bound

    def _key(self, t, depth):
        return (id(t),) + tuple(self.idx[p] for p in t.support if p <= depth)

    def _dfs(self, depth, accumulated):
        n = len(self.ids)
        dom = self.doms[depth]
        for i in self.order[depth]:
            if self.config.node_limit is not None and self.nodes >= self.config.node_limit:
                self.aborted = True
                return
            self.nodes += 1
            self.idx[depth] = i
            self.vals[depth] = dom[i]

            feasible = True
            for t in self.hard_completing[depth]:
                if not bool(self._evaluate(t, {p: self.vals[p] for p in t.support})):
                    feasible = False
                    break
            if not feasible:
                continue
            for t in self.hard_partial[depth]:
                key = self._key(t, depth)
                ok = self.memo.get(key)
                if ok is None:
                    fixed = {p: self.vals[p] for p in t.support if p <= depth}
                    ok = self.memo[key] = self._hard_possible(t, fixed)
                if not ok:
                    feasible = False
                    break
            if not feasible:
                continue

            acc = accumulated
            for t in self.completing[depth]:
                key = self._key(t, depth)
                cost = self.memo.get(key)
                if cost is None:
                    cost = self.memo[key] = float(self._evaluate(t, {p: self.vals[p] for p in t.support}))
                self.costs[id(t)] = cost
                acc += cost
            if acc == np.inf:
                continue
            bound = acc + self.untouched[depth + 1]
            if bound >= self.best_cost:
                continue
            for t in self.partial[depth]:
                if id(t) in self.owner:
                    continue
                key = self._key(t, depth)
                b = self.memo.get(key)
                if b is None:
                    fixed = {p: self.vals[p] for p in t.support if p <= depth}
                    b = self.memo[key] = self._bound(t, fixed)
                bound += b
                if bound >= self.best_cost:
                    break
            if bound >= self.best_cost:
                continue

            if depth + 1 == n:
                # canonical sum in declaration order, as evaluate_cost does
                total = self.constant
                for t in self.soft:
                    if t.first >= 0:
                        total += self.costs[id(t)]
                if total < self.best_cost:
                    self.best_cost = total
                    self.best = tuple(self.idx)
            else:
                self._dfs(depth + 1, acc)


def solve(wcsp: Wcsp, config: SolverConfig | None = None, incumbent: dict | None = None) -> Solution:
    """Exact depth-first branch and bound.

    Decision variables are branched in declaration order; values are tried
    in ascending order of their unary cost, then domain order.  A node's
    bound is the cost of the constraints already fully assigned plus, for
    every other soft constraint, the minimum of its cost over the
    completions of its unassigned variables (enumerated up to
    ``config.bound_cap``).  The incumbent is only replaced by a strictly
    cheaper leaf, so the result is the first optimum in search order.

    ``incumbent`` maps every decision variable to a domain value.  When it
    is feasible its cost is the starting upper bound, and it is returned
    unless the search finds something strictly cheaper.
    """
    return _Search(wcsp, config or SolverConfig()).run(incumbent)
