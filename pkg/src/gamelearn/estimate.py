"""Learned game estimates and the distance used to score them."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .game import Game, MixedProfile


class Method(str, enum.Enum):
    LQRE = "lqre"
    NAIVE = "naive"
    NAIVE_LQRE = "naive-lqre"
    NAIVE_NASH = "naive-nash"


@dataclass(frozen=True, eq=False)
class Estimate:
    """Payoffs and strategies recovered by a learner.

    ``observed[i]`` flags the payoff entries that were constrained by data;
    the others hold a fill value (the midpoint of the payoff range).
    """

    payoffs: tuple[np.ndarray, ...]
    observed: tuple[np.ndarray, ...]
    profile: MixedProfile
    method: Method

    @property
    def game(self) -> Game:
        return Game(self.profile.actions_per_player, self.payoffs)

    def __eq__(self, other):
        if not isinstance(other, Estimate):
            return NotImplemented
        return (
            self.profile == other.profile
            and all(np.array_equal(a, b) for a, b in zip(self.payoffs, other.payoffs))
            and all(np.array_equal(a, b) for a, b in zip(self.observed, other.observed))
        )


def error(truth, estimate: Estimate, observed_only: bool = False) -> float:
    """Euclidean distance between true and learned (strategies, payoffs).

    Coordinates are all strategy entries (player-major, then action) followed
    by all payoff entries (player-major, then row-major joint profile).  With
    ``observed_only`` the unconstrained payoff entries are left out.
    """
    game, profile = truth.game, truth.profile
    if estimate.profile.actions_per_player != game.actions_per_player:
        raise ValueError("estimate and truth have different shapes")
    diffs = [profile.flat() - estimate.profile.flat()]
    for i in range(game.num_players):
        if np.shape(estimate.payoffs[i]) != game.payoffs[i].shape:
            raise ValueError(f"payoff shape mismatch for player {i}")
        d = (game.payoffs[i] - estimate.payoffs[i]).ravel()
        if observed_only:
            d = d[np.asarray(estimate.observed[i]).ravel()]
        diffs.append(d)
    return float(np.linalg.norm(np.concatenate(diffs)))
