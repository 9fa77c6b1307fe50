"""A quick version of the training-size comparison on a handful of games."""
from gamelearn.experiment import run_experiment, table1

result = run_experiment(table1(game_count=4, seed=7, values=(10, 50)),
                        progress=lambda n: print(f"{n} cells done", end="\r"))
print()
print(result.to_csv())
