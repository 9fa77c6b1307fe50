"""Acceptance criteria 1-9, each reported as one PASS/FAIL line in the summary."""
import time

import numpy as np
import pytest

from conftest import make_dataset, report_criterion
from gamelearn.compiler import LearnerConfig, build_wcsp, payoff_ml_cost, strategy_ml_cost
from gamelearn.data import GroundTruth, random_game, sample_plays
from gamelearn.equilibrium import LqreConfig, solve_lqre, solve_nash_2x2
from gamelearn.estimate import Estimate, Method, error
from gamelearn.experiment import run_experiment, table1, table3
from gamelearn.game import Game, MixedProfile, logit_response, lqre_residual
from gamelearn.learners import learn_lqre, learn_naive
from gamelearn.wcsp import Unsatisfiable, brute_force_solve, complete_assignment, evaluate_cost, solve
from test_wcsp import random_instance

GAMES = 10


def test_criterion_1_lqre_correctness():
    games = [random_game(2, 2, 1.0, 2.0, seed) for seed in range(100)]
    start = time.perf_counter()
    worst = 0.0
    for game in games:
        for lam in (0.5, 1.0, 3.0, 10.0):
            worst = max(worst, lqre_residual(game, solve_lqre(game, LqreConfig(lam)), lam))
    uniform = all(solve_lqre(g, LqreConfig(0.0)) == MixedProfile.uniform((2, 2)) for g in games)
    elapsed = time.perf_counter() - start
    passed = worst < 1e-6 and uniform and elapsed < 5.0
    report_criterion(1, passed, f"max residual {worst:.2e}, uniform at 0: {uniform}, {elapsed:.2f}s")
    assert passed


def _dominance_solvable(count):
    rng = np.random.default_rng(2024)
    games = []
    while len(games) < count:
        # payoffs on the 0.1 grid, so every strict preference has a gap of at least 0.1
        u = np.round(rng.uniform(1, 2, (2, 2, 2)), 1)
        # row strictly dominant, column best-responds strictly to it
        if (np.all(u[0][0] > u[0][1]) or np.all(u[0][1] > u[0][0])) and u[1][0, 0] != u[1][0, 1] \
                and u[1][1, 0] != u[1][1, 1]:
            game = Game((2, 2), u)
            nash = solve_nash_2x2(game)
            if len(nash) == 1:
                games.append((game, nash[0]))
    return games


def test_criterion_2_lqre_approaches_nash():
    worst = 0.0
    for game, nash in _dominance_solvable(20):
        p = solve_lqre(game, LqreConfig(100.0))
        worst = max(worst, max(float(np.max(np.abs(a - b))) for a, b in zip(p.strategies, nash.strategies)))
    passed = worst <= 0.01
    report_criterion(2, passed, f"max L-inf distance to Nash at lambda 100: {worst:.2e}")
    assert passed


def test_criterion_3_solver_exactness():
    start = time.perf_counter()
    mismatches = 0
    for seed in range(50):
        w = random_instance(np.random.default_rng(50_000 + seed))
        try:
            expected = brute_force_solve(w).total_cost
        except Unsatisfiable:
            try:
                solve(w)
                mismatches += 1
            except Unsatisfiable:
                pass
            continue
        mismatches += solve(w).total_cost != expected
    elapsed = time.perf_counter() - start
    passed = mismatches == 0 and elapsed < 30.0
    report_criterion(3, passed, f"{mismatches} mismatches over 50 instances, {elapsed:.1f}s")
    assert passed


def _count_constraints(shape):
    import itertools

    from gamelearn.data import Dataset, PlaySample

    samples = [PlaySample(p, tuple(1.0 + 0.1 * i for i in range(len(shape))))
               for p in itertools.product(*(range(k) for k in shape))]
    w, _ = build_wcsp(Dataset(shape, samples, 0.7), LearnerConfig(1.0))
    return len(w.constraints)


def test_criterion_4_decomposition_equivalence():
    worst = 0.0
    for seed in range(20):
        _, ds = make_dataset(seed)
        mono, _ = build_wcsp(ds, LearnerConfig(3.0, decomposed=False))
        deco, _ = build_wcsp(ds, LearnerConfig(3.0))
        a, b = solve(mono), solve(deco)
        projected = {v: b.assignment[v] for v in mono.decision_ids}
        cross = evaluate_cost(mono, complete_assignment(mono, projected))
        worst = max(worst, abs(a.total_cost - b.total_cost), abs(cross - a.total_cost))
    ratios = {}
    for shape in ((2, 2), (2, 3), (3, 2)):
        n = len(shape)
        k = max(shape)
        ratios[shape] = _count_constraints(shape) / (n * k**n)
    sized = all(1.0 <= r <= 8.0 for r in ratios.values())
    passed = worst <= 1e-9 and sized
    shown = ", ".join(f"{s}: {r:.2f}" for s, r in ratios.items())
    report_criterion(4, passed, f"max optimum gap {worst:.1e}; constraints / (N K^N) {shown}")
    assert passed


def test_criterion_5_alpha_zero_decouples():
    same = 0
    for seed in range(20):
        _, ds = make_dataset(100 + seed)
        same += learn_lqre(ds, LearnerConfig(3.0, alpha=0.0)) == learn_naive(ds, LearnerConfig(3.0))
    report_criterion(5, same == 20, f"{same}/20 identical to naive")
    assert same == 20


@pytest.fixture(scope="module")
def table_one():
    start = time.perf_counter()
    result = run_experiment(table1(game_count=GAMES, seed=0, values=(10, 100)))
    return result, time.perf_counter() - start


def test_criterion_6_training_size_direction(table_one):
    result, elapsed = table_one
    lq10, nv10 = result.mean(Method.LQRE, 10), result.mean(Method.NAIVE, 10)
    lq100, nv100 = result.mean(Method.LQRE, 100), result.mean(Method.NAIVE, 100)
    passed = lq10 < nv10 and nv100 <= lq100 and not result.failures and elapsed < 1800
    report_criterion(6, passed, f"M=10 LQRE {lq10:.3f} vs Naive {nv10:.3f}; "
                                f"M=100 Naive {nv100:.3f} vs LQRE {lq100:.3f}; {elapsed:.0f}s")
    assert passed


def test_criterion_7_wrong_lambda_direction():
    result = run_experiment(table3(game_count=GAMES, seed=0))
    columns = {v: (result.mean(Method.LQRE, v), result.mean(Method.NAIVE, v)) for v in result.spec.values}
    passed = all(lq < nv for lq, nv in columns.values()) and not result.failures
    shown = "; ".join(f"{v}: {lq:.3f} vs {nv:.3f}" for v, (lq, nv) in columns.items())
    report_criterion(7, passed, f"LQRE vs Naive per true lambda {shown}")
    assert passed


def test_criterion_8_nash_baseline_is_worse(table_one):
    result, _ = table_one
    nash, lq = result.mean(Method.NAIVE_NASH, 10), result.mean(Method.LQRE, 10)
    passed = nash > lq
    report_criterion(8, passed, f"M=10 NaiveNash {nash:.3f} vs LQRE {lq:.3f}")
    assert passed


def test_criterion_9_properties():
    checks = {}
    rng = np.random.default_rng(9)
    game = random_game(2, 3, 1, 2, 4)
    profile = MixedProfile([rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))])
    shifted = Game(game.shape, [u + 7.5 for u in game.payoffs])
    checks["shift invariance"] = all(
        np.allclose(logit_response(game, profile, i, 2.0), logit_response(shifted, profile, i, 2.0), atol=1e-12)
        for i in range(2))
    p = solve_lqre(game, LqreConfig(3.0))
    checks["simplex"] = all(abs(s.sum() - 1) < 1e-12 and np.all(s > 0) for s in p.strategies)
    checks["strategy cost 2.4967"] = abs(strategy_ml_cost(7, 0.7) - 2.4967) < 1e-4
    checks["payoff cost 0.56226"] = abs(payoff_ml_cost([1.5], 1.5, 0.7) - 0.56226) < 1e-5
    checks["payoff cost 1.06226"] = abs(payoff_ml_cost([1.5], 2.2, 0.7) - 1.06226) < 1e-5
    estimates = [Estimate(tuple(rng.uniform(1, 2, (2, 2, 2))), (np.ones((2, 2), bool),) * 2,
                          MixedProfile([rng.dirichlet([1, 1]), rng.dirichlet([1, 1])]), Method.LQRE)
                 for _ in range(30)]
    as_truth = [GroundTruth(e.game, e.profile, 1.0) for e in estimates]
    checks["error metric"] = all(
        error(as_truth[x], estimates[x]) == 0.0
        and error(as_truth[x], estimates[y]) == pytest.approx(error(as_truth[y], estimates[x]), abs=1e-12)
        and error(as_truth[x], estimates[z])
        <= error(as_truth[x], estimates[y]) + error(as_truth[y], estimates[z]) + 1e-12
        for x, y, z in zip(range(0, 30, 3), range(1, 30, 3), range(2, 30, 3)))
    truth, ds = make_dataset(3)
    again = sample_plays(truth, 10, 0.7, 10_003)
    checks["seeded data"] = ds.samples == again.samples
    checks["seeded learner"] = learn_lqre(ds, LearnerConfig(3.0)) == learn_lqre(again, LearnerConfig(3.0))
    failed = [name for name, ok in checks.items() if not ok]
    report_criterion(9, not failed, "all spot checks hold" if not failed else f"failed: {failed}")
    assert not failed
