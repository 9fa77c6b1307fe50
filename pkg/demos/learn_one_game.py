"""Learn one random 2x2 game from ten observed plays and compare the learners.

    python demos/learn_one_game.py [seed]
"""
import sys

from gamelearn import (
    GroundTruth,
    LearnerConfig,
    LqreConfig,
    error,
    learn_lqre,
    learn_naive,
    learn_naive_lqre,
    learn_naive_nash,
    random_game,
    sample_plays,
    solve_lqre,
)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
game = random_game(2, 2, 1.0, 2.0, seed)
truth = GroundTruth(game, solve_lqre(game, LqreConfig(3.0)), 3.0)
data = sample_plays(truth, 10, 0.7, seed + 1)

print("true payoffs (row, column):")
print(game.payoffs[0].round(3), game.payoffs[1].round(3), sep="\n")
print("true strategies:", [s.round(3).tolist() for s in truth.profile.strategies])
print("plays:", [s.joint_action for s in data.samples])

config = LearnerConfig(lam=3.0)
estimates = {
    "lqre": learn_lqre(data, config),
    "naive": learn_naive(data, config),
    "naive-lqre": learn_naive_lqre(data, config),
    "naive-nash": learn_naive_nash(data, config, truth),
}
for name, est in estimates.items():
    print(f"{name:>10}: error {error(truth, est):.3f}  strategies {[s.tolist() for s in est.profile.strategies]}")
