import numpy as np
import pytest

from gamelearn.data import GroundTruth, random_game, sample_plays
from gamelearn.equilibrium import LqreConfig, solve_lqre


def make_truth(seed: int, lam: float = 3.0, players: int = 2, actions: int = 2) -> GroundTruth:
    game = random_game(players, actions, 1.0, 2.0, seed)
    return GroundTruth(game, solve_lqre(game, LqreConfig(lam)), lam)


def make_dataset(seed: int, m: int = 10, lam: float = 3.0, noise: float = 0.7, **kw):
    truth = make_truth(seed, lam, **kw)
    return truth, sample_plays(truth, m, noise, seed + 10_000)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def report_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
