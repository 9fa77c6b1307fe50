"""Compile a dataset both ways and show the size and optimum of each network."""
from collections import Counter

from gamelearn import GroundTruth, LearnerConfig, LqreConfig, random_game, sample_plays, solve_lqre
from gamelearn.compiler import build_wcsp
from gamelearn.wcsp import solve

game = random_game(2, 2, 1.0, 2.0, 11)
data = sample_plays(GroundTruth(game, solve_lqre(game, LqreConfig(3.0)), 3.0), 10, 0.7, 12)

for decomposed in (False, True):
    wcsp, layout = build_wcsp(data, LearnerConfig(3.0, decomposed=decomposed))
    kinds = Counter(type(c).__name__ for c in wcsp.constraints)
    best = solve(wcsp)
    label = "decomposed" if decomposed else "monolithic"
    print(f"{label}: {len(wcsp.variables)} variables ({len(layout.auxiliary)} auxiliary), "
          f"constraints {dict(kinds)}")
    print(f"  optimum {best.total_cost:.6f} after {best.nodes} nodes")
