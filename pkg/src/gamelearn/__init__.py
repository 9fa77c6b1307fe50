"""Learn normal-form games from noisy play by exact weighted constraint optimisation."""
from .compiler import LearnerConfig, build_strategy_wcsp, build_wcsp, extract_estimate
from .data import Dataset, GroundTruth, PlaySample, empirical_counts, random_game, sample_plays
from .equilibrium import ConvergenceError, LqreConfig, solve_lqre, solve_nash_2x2
from .estimate import Estimate, Method, error
from .experiment import ExperimentSpec, run_experiment
from .game import Game, MixedProfile, expected_payoff, logit_response, lqre_residual
from .learners import learn_lqre, learn_naive, learn_naive_lqre, learn_naive_nash
from .wcsp import INFEASIBLE, Solution, SolverConfig, Wcsp, brute_force_solve, evaluate_cost, solve

__all__ = [
    "ConvergenceError", "Dataset", "Estimate", "ExperimentSpec", "Game", "GroundTruth",
    "INFEASIBLE", "LearnerConfig", "LqreConfig", "Method", "MixedProfile", "PlaySample",
    "Solution", "SolverConfig", "Wcsp", "brute_force_solve", "build_strategy_wcsp", "build_wcsp",
    "empirical_counts", "error", "evaluate_cost", "expected_payoff", "extract_estimate",
    "learn_lqre", "learn_naive", "learn_naive_lqre", "learn_naive_nash", "logit_response",
    "lqre_residual", "random_game", "run_experiment", "sample_plays", "solve", "solve_lqre",
    "solve_nash_2x2",
]
