"""The WCSP learner and the three baselines it is compared against."""
from __future__ import annotations

import numpy as np

from .compiler import (
    LearnerConfig,
    build_strategy_wcsp,
    build_wcsp,
    extract_estimate,
    payoff_grid,
    payoff_table,
)
from .data import Dataset, GroundTruth, empirical_counts
from .equilibrium import ConvergenceError, LqreConfig, solve_lqre, solve_nash_2x2
from .estimate import Estimate, Method, error
from .game import Game, MixedProfile
from .wcsp import INFEASIBLE, SolverConfig, complete_assignment, evaluate_cost, solve


def learn_lqre(dataset: Dataset, config: LearnerConfig,
               solver: SolverConfig | None = None) -> Estimate:
    """Jointly fit strategies and payoffs under the rationality penalty.

    The search starts from the cheaper of the Naive and NaiveLQRE estimates.
    Without a finite starting bound, the first dive takes every strategy
    variable to its own likelihood maximum, 1.0. The simplex then forces the
    rest to 0, and pruning against that cost is almost useless.
    """
    wcsp, layout = build_wcsp(dataset, config)
    solution = solve(wcsp, solver, incumbent=_starting_point(wcsp, layout, dataset, config))
    if not solution.optimal:
        raise RuntimeError("search stopped before proving optimality")
    return extract_estimate(layout, solution, dataset, Method.LQRE)


def _starting_point(wcsp, layout, dataset, config):
    naive = learn_naive(dataset, config)
    candidates = [naive.profile]
    try:
        lqre = solve_lqre(naive.game, LqreConfig(config.lam))
        candidates.append(_round_profile(lqre, config.strategy_step))
    except ConvergenceError:
        pass
    grid = layout.payoff_grid
    # unobserved entries hold the midpoint fill, which need not be a grid value
    payoffs = {vid: grid[int(np.argmin(np.abs(grid - naive.payoffs[i][prof])))]
               for (i, prof), vid in layout.payoff.items()}
    best, best_cost = None, np.inf
    for profile in candidates:
        point = {vid: profile[i][a] for (i, a), vid in layout.strategy.items()}
        point.update(payoffs)
        for vid in wcsp.decision_ids:
            if vid not in point:
                domain = wcsp.domain(vid)
                if domain.size != 1:
                    return None
                point[vid] = domain[0]
        cost = evaluate_cost(wcsp, complete_assignment(wcsp, point))
        if cost is not INFEASIBLE and cost < best_cost:
            best, best_cost = point, cost
    return best


def _naive_payoffs(dataset: Dataset, config: LearnerConfig):
    counts = empirical_counts(dataset)
    values = dataset.observed_payoffs()
    u_min, u_max = float(values.min()), float(values.max())
    grid = payoff_grid(u_min, u_max, config.payoff_step)
    shape = dataset.actions_per_player
    fill = 0.5 * (u_min + u_max)
    payoffs, observed = [], []
    for i in range(len(shape)):
        table = np.full(shape, fill)
        seen = np.zeros(shape, dtype=bool)
        for prof in counts.observed_profiles():
            cost = payoff_table(counts.payoff_observations(i, prof), grid, config.noise_stddev)
            table[prof] = grid[int(np.argmin(cost))]
            seen[prof] = True
        payoffs.append(table)
        observed.append(seen)
    return tuple(payoffs), tuple(observed)


def naive_strategies(dataset: Dataset, config: LearnerConfig) -> MixedProfile:
    """Grid distribution maximising the likelihood of the observed actions."""
    wcsp, layout = build_strategy_wcsp(dataset, config)
    solution = solve(wcsp)
    shape = dataset.actions_per_player
    return MixedProfile([
        np.array([solution.assignment[layout.strategy[i, a]] for a in range(k)])
        for i, k in enumerate(shape)
    ])


def learn_naive(dataset: Dataset, config: LearnerConfig) -> Estimate:
    """Fit strategies and payoffs separately, by maximum likelihood alone."""
    payoffs, observed = _naive_payoffs(dataset, config)
    return Estimate(payoffs, observed, naive_strategies(dataset, config), Method.NAIVE)


def round_to_grid(probabilities, step: float) -> np.ndarray:
    """Nearest point of the ``step`` grid on the simplex (largest remainder).

    Every coordinate is floored to the grid and the missing units go to the
    largest remainders, lower index first on ties.
    """
    p = np.asarray(probabilities, dtype=float)
    n = round(1 / step)
    scaled = p * n
    units = np.floor(scaled + 1e-9).astype(int)
    remainder = scaled - units
    missing = n - int(units.sum())
    order = sorted(range(p.size), key=lambda a: (-remainder[a], a))
    for a in order[:max(missing, 0)]:
        units[a] += 1
    for a in sorted(range(p.size), key=lambda a: (remainder[a], a)):
        if missing >= 0:
            break
        if units[a] > 0:
            units[a] -= 1
            missing += 1
    return units / n


def _round_profile(profile: MixedProfile, step: float) -> MixedProfile:
    return MixedProfile([round_to_grid(s, step) for s in profile.strategies])


def learn_naive_lqre(dataset: Dataset, config: LearnerConfig,
                     lqre: LqreConfig | None = None) -> Estimate:
    """Naive payoffs, then the logit equilibrium they imply at ``config.lam``."""
    payoffs, observed = _naive_payoffs(dataset, config)
    lqre = lqre or LqreConfig(config.lam)
    if lqre.lambda_target != config.lam:
        raise ValueError("LqreConfig.lambda_target must equal config.lam")
    profile = solve_lqre(Game(dataset.actions_per_player, payoffs), lqre)
    return Estimate(payoffs, observed, _round_profile(profile, config.strategy_step),
                    Method.NAIVE_LQRE)


def learn_naive_nash(dataset: Dataset, config: LearnerConfig, truth: GroundTruth) -> Estimate:
    """Naive payoffs with the Nash equilibrium that lands closest to ``truth``.

    Selection looks at the true game, so this baseline is an optimistic
    reference rather than a learner.
    """
    payoffs, observed = _naive_payoffs(dataset, config)
    candidates = solve_nash_2x2(Game(dataset.actions_per_player, payoffs))
    best, best_error = None, np.inf
    for profile in candidates:
        est = Estimate(payoffs, observed, _round_profile(profile, config.strategy_step),
                       Method.NAIVE_NASH)
        e = error(truth, est)
        if e < best_error:
            best, best_error = est, e
    return best


LEARNERS = {
    Method.LQRE: learn_lqre,
    Method.NAIVE: learn_naive,
    Method.NAIVE_LQRE: learn_naive_lqre,
    Method.NAIVE_NASH: learn_naive_nash,
}
