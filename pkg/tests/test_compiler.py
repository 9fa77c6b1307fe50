import itertools
import math

import numpy as np
import pytest

from conftest import make_dataset
from gamelearn.compiler import (
    LearnerConfig,
    RationalityCost,
    build_wcsp,
    extract_estimate,
    payoff_grid,
    payoff_ml_cost,
    payoff_table,
    rationality_cost,
    strategy_ml_cost,
)
from gamelearn.data import Dataset, PlaySample, empirical_counts
from gamelearn.game import Game, MixedProfile, lqre_residual
from gamelearn.learners import round_to_grid
from gamelearn.wcsp import (
    INFEASIBLE,
    HardTable,
    SoftConstraint,
    Wcsp,
    brute_force_solve,
    complete_assignment,
    evaluate_cost,
    solve,
)

COARSE = dict(strategy_step=0.5, payoff_step=1.0)


def test_strategy_ml_cost_values():
    assert strategy_ml_cost(7, 0.7) == pytest.approx(2.4967, abs=1e-4)
    assert strategy_ml_cost(10, 1.0) == 0.0
    assert strategy_ml_cost(3, 0.0) == 1e6
    assert strategy_ml_cost(3, 0.0, cap=5.0) == 5.0
    assert strategy_ml_cost(0, 0.0) == 0.0
    assert np.allclose(strategy_ml_cost(2, np.array([0.0, 0.5, 1.0])), [1e6, 2 * math.log(2), 0.0])


def test_payoff_ml_cost_values():
    assert payoff_ml_cost([], 1.5, 0.7) == 0.0
    assert payoff_ml_cost([1.5], 1.5, 0.7) == pytest.approx(0.56226, abs=1e-5)
    assert payoff_ml_cost([1.5], 2.2, 0.7) == pytest.approx(1.06226, abs=1e-5)
    assert payoff_ml_cost([1.4, 1.6], 1.5, 0.7) == pytest.approx(2 * 0.56226 + 2 * 0.01 / 0.98, abs=1e-5)


def test_payoff_table_stays_non_negative():
    # the normaliser is negative for R below 1/sqrt(2 pi)
    grid = np.array([1.0, 1.5])
    table = payoff_table([1.5], grid, 0.1)
    assert np.all(table >= 0) and table[1] == 0.0
    assert np.array_equal(payoff_table([1.5], grid, 0.7), payoff_ml_cost([1.5], grid, 0.7))


def test_payoff_grid():
    g = payoff_grid(1.0, 1.35, 0.1)
    assert np.allclose(g, [1.0, 1.1, 1.2, 1.3, 1.35])
    assert np.allclose(payoff_grid(1.0, 1.3, 0.1), [1.0, 1.1, 1.2, 1.3])
    assert payoff_grid(2.0, 2.0, 0.1).tolist() == [2.0]


@pytest.mark.parametrize("kwargs", [dict(lam=-1), dict(lam=1, alpha=-1), dict(lam=1, strategy_step=0.3),
                                    dict(lam=1, strategy_step=0), dict(lam=1, payoff_step=0),
                                    dict(lam=1, unobserved_payoffs="zero")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        LearnerConfig(**kwargs)


def test_strategy_grid_endpoints():
    grid = LearnerConfig(1.0).strategy_grid()
    assert grid.size == 21 and grid[0] == 0.0 and grid[-1] == 1.0


def test_rationality_cost_examples():
    flat = np.full((2, 2), 1.4)
    assert rationality_cost(0.5, [[0.5, 0.5]], flat, 0, 3.0, 100.0) == 0.0
    payoffs = np.array([[1.2, 1.9], [1.5, 1.1]])
    one = rationality_cost(0.3, [[0.6, 0.4]], payoffs, 1, 2.0, 1.0)
    assert rationality_cost(0.3, [[0.6, 0.4]], payoffs, 1, 2.0, 2.0) == pytest.approx(2 * one, rel=1e-12)
    ep = payoffs @ np.array([0.6, 0.4])
    e = np.exp(2.0 * ep)
    assert one == pytest.approx(abs(e[1] - 0.3 * e.sum()), rel=1e-12)
    # unobserved entries (NaN) drop out of the expected payoff
    partial = payoffs.copy()
    partial[0, 1] = np.nan
    e0 = math.exp(2.0 * 0.6 * 1.2)
    assert rationality_cost(0.5, [[0.6, 0.4]], partial, 0, 2.0, 1.0) == pytest.approx(
        abs(e0 - 0.5 * (e0 + e[1])), rel=1e-12)


def test_rationality_at_rounded_equilibrium_is_small():
    from gamelearn.equilibrium import LqreConfig, solve_lqre
    from gamelearn.data import random_game

    for seed in range(5):
        game = random_game(2, 2, 1, 2, seed)
        grid = np.round(game.flat_payoffs() * 10) / 10
        snapped = Game((2, 2), grid.reshape(2, 2, 2))
        exact = solve_lqre(snapped, LqreConfig(3.0))
        rounded = MixedProfile([round_to_grid(s, 0.05) for s in exact.strategies])
        for i in range(2):
            opp = rounded[1 - i]
            table = snapped.payoffs[i] if i == 0 else snapped.payoffs[1].T
            for k in range(2):
                cost = rationality_cost(rounded[i][k], [opp], table, k, 3.0, 100.0)
                assert cost <= 100.0 * lqre_residual(snapped, rounded, 3.0) + 1e-9
        assert lqre_residual(snapped, exact, 3.0) < 1e-6


def _dataset(pairs, shape=(2, 2)):
    return Dataset(shape, [PlaySample(a, v) for a, v in pairs], 0.7)


def test_variable_counts_all_profiles_observed():
    ds = _dataset([((0, 0), (1, 2)), ((0, 1), (1.5, 1.2)), ((1, 0), (1.1, 1.9)), ((1, 1), (2, 1))])
    w, layout = build_wcsp(ds, LearnerConfig(3.0, decomposed=False))
    assert len(layout.strategy) == 4 and len(layout.payoff) == 8
    assert len(w.variables) == 12 and not layout.auxiliary
    wd, ld = build_wcsp(ds, LearnerConfig(3.0))
    assert len(ld.payoff) == 8 and len(ld.auxiliary) > 0
    assert len(wd.variables) == 12 + len(ld.auxiliary)
    assert wd.decision_ids == w.decision_ids


def test_only_observed_profiles_get_payoff_variables():
    ds = _dataset([((0, 0), (1, 2)), ((0, 1), (1.5, 1.2)), ((0, 0), (1.1, 1.9))])
    _, layout = build_wcsp(ds, LearnerConfig(3.0))
    assert sorted(layout.payoff) == [(0, (0, 0)), (0, (0, 1)), (1, (0, 0)), (1, (0, 1))]


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        build_wcsp(None, LearnerConfig(1.0))


def test_soft_costs_finite_and_non_negative():
    _, ds = make_dataset(3)
    w, _ = build_wcsp(ds, LearnerConfig(3.0))
    for c in w.constraints:
        if isinstance(c, SoftConstraint) and hasattr(c, "table"):
            assert np.all(np.isfinite(c.table)) and np.all(c.table >= 0)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_simplex_chain_accepts_exactly_the_simplex(k):
    samples = [PlaySample((a % k, 0), (1.0, 1.0)) for a in range(5)]
    ds = Dataset((k, 1), samples, 0.7)
    cfg = LearnerConfig(1.0, strategy_step=0.25)
    w, layout = build_wcsp(ds, cfg)
    grid = cfg.strategy_grid()
    ids = [layout.strategy[0, a] for a in range(k)]
    rest = {layout.strategy[1, 0]: 1.0}
    rest.update({vid: layout.payoff_grid[0] for vid in layout.payoff.values()})
    for combo in itertools.product(grid, repeat=k):
        values = dict(rest, **dict(zip(ids, combo)))
        full = complete_assignment(w, {v: values[v] for v in w.decision_ids})
        feasible = evaluate_cost(w, full) is not INFEASIBLE
        assert feasible == (abs(sum(combo) - 1.0) < 1e-9), combo


def _constraint_count(shape):
    samples = [PlaySample(p, tuple(1.0 + 0.1 * i for i in range(len(shape))))
               for p in itertools.product(*(range(k) for k in shape))]
    w, _ = build_wcsp(Dataset(shape, samples, 0.7), LearnerConfig(1.0))
    return len(w.constraints)


@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 2, 2)])
def test_decomposed_size_is_order_n_k_to_n(shape):
    n, k = len(shape), shape[0]
    count = _constraint_count(shape)
    assert n * k**n <= count <= 8 * n * k**n


@pytest.mark.parametrize("seed,mode", [(0, "omit"), (1, "omit"), (2, "omit"), (0, "midpoint"), (1, "free")])
def test_decomposition_equivalence_brute_force(seed, mode):
    _, ds = make_dataset(seed)
    costs, projected = [], []
    for decomposed in (False, True):
        w, layout = build_wcsp(ds, LearnerConfig(3.0, decomposed=decomposed, unobserved_payoffs=mode, **COARSE))
        s = brute_force_solve(w)
        costs.append(s.total_cost)
        projected.append({v: s.assignment[v] for v in w.decision_ids})
    assert costs[0] == pytest.approx(costs[1], abs=1e-9)
    # each optimum scores the same in the other compilation
    for decomposed, point in zip((True, False), projected):
        w, _ = build_wcsp(ds, LearnerConfig(3.0, decomposed=decomposed, unobserved_payoffs=mode, **COARSE))
        assert evaluate_cost(w, complete_assignment(w, point)) == pytest.approx(costs[0], abs=1e-9)


def test_solve_matches_brute_force_on_compiled_instance():
    _, ds = make_dataset(7)
    for decomposed in (False, True):
        w, _ = build_wcsp(ds, LearnerConfig(3.0, decomposed=decomposed, **COARSE))
        assert solve(w).total_cost == brute_force_solve(w).total_cost


def test_envelope_bound_is_exact_minimum():
    rng = np.random.default_rng(0)
    grid = np.linspace(0.4, 2.6, 12)
    for trial in range(20):
        k = int(rng.integers(0, 2))
        blocks = [[((0,), 3, None), ((1,), 4, None)], [((0,), 5, None), ((1,), 6, None)]]
        c = RationalityCost(["s", "o0", "o1", "u0", "u1", "u2", "u3"], k, 3.0, 100.0, 2, blocks)
        fixed = {"s": 0.25, "o0": 0.6, "o1": 0.4}
        free_ids = ["u0", "u1", "u2", "u3"][: int(rng.integers(1, 5))]
        for v in ["u0", "u1", "u2", "u3"]:
            if v not in free_ids:
                fixed[v] = float(rng.choice(grid))
        unary = {v: rng.exponential(2.0, grid.size) for v in free_ids if rng.random() < 0.7}
        bound = c.lower_bound(fixed, {v: grid for v in free_ids}, unary)
        best = np.inf
        for combo in itertools.product(grid, repeat=len(free_ids)):
            vals = dict(fixed, **dict(zip(free_ids, combo)))
            cost = float(c.evaluate(*(vals[v] for v in c.scope)))
            cost += sum(unary[v][list(grid).index(vals[v])] for v in unary)
            best = min(best, cost)
        assert bound <= best
        assert bound == pytest.approx(best, rel=1e-9, abs=1e-6)


def test_forced_round_trip():
    _, ds = make_dataset(11)
    cfg = LearnerConfig(3.0)
    w, layout = build_wcsp(ds, cfg)
    target = {layout.strategy[0, 0]: 0.35, layout.strategy[0, 1]: 0.65,
              layout.strategy[1, 0]: 0.9, layout.strategy[1, 1]: 0.1}
    for vid in layout.payoff.values():
        target[vid] = layout.payoff_grid[len(target) % layout.payoff_grid.size]
    forced = [HardTable([v], np.isclose(w.domain(v), x)) for v, x in target.items()]
    s = solve(Wcsp(w.variables, list(w.constraints) + forced))
    est = extract_estimate(layout, s, ds)
    assert est.profile.flat().tolist() == [0.35, 0.65, 0.9, 0.1]
    for (i, prof), vid in layout.payoff.items():
        assert est.payoffs[i][prof] == target[vid] and est.observed[i][prof]
    for s_ in est.profile.strategies:
        assert s_.sum() == pytest.approx(1.0, abs=1e-12)


def test_unobserved_entries_flagged_and_filled():
    ds = _dataset([((0, 0), (1.0, 2.0)), ((0, 1), (1.5, 1.2)), ((0, 0), (1.1, 1.9))])
    w, layout = build_wcsp(ds, LearnerConfig(3.0))
    est = extract_estimate(layout, solve(w), ds)
    for i in range(2):
        assert est.observed[i].tolist() == [[True, True], [False, False]]
        assert est.payoffs[i][1, 0] == est.payoffs[i][1, 1] == pytest.approx(1.5)
    free_w, free_layout = build_wcsp(ds, LearnerConfig(3.0, unobserved_payoffs="free"))
    est = extract_estimate(free_layout, solve(free_w), ds)
    assert est.observed[0].tolist() == [[True, True], [False, False]]
    assert len(free_layout.payoff) == 8


def test_single_player_game():
    ds = Dataset((3,), [PlaySample((a,), (1.0 + a / 2,)) for a in (0, 1, 2, 2)], 0.7)
    costs = []
    for decomposed in (False, True):
        w, _ = build_wcsp(ds, LearnerConfig(1.0, decomposed=decomposed, strategy_step=0.25, payoff_step=0.5))
        costs.append(brute_force_solve(w).total_cost)
    assert costs[0] == pytest.approx(costs[1], abs=1e-9)


def test_wcsp_dump_round_trip(tmp_path):
    import json

    from gamelearn.wcsp import dump_wcsp, wcsp_from_json

    _, ds = make_dataset(2)
    for decomposed in (False, True):
        w, _ = build_wcsp(ds, LearnerConfig(3.0, decomposed=decomposed, **COARSE))
        dump_wcsp(w, tmp_path / "w.json")
        back = wcsp_from_json(json.loads((tmp_path / "w.json").read_text()))
        assert solve(back).total_cost == solve(w).total_cost
