"""Normal-form games, mixed strategy profiles and the logit response map.

Joint pure profiles are flattened row-major over player order, so player 0
varies slowest.  ``Game.payoffs[i]`` is an ndarray of shape
``actions_per_player`` holding player ``i``'s payoff for every joint profile.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SIMPLEX_TOL = 1e-9


def _as_readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Game:
    """An N-player normal-form game with a payoff tensor per player."""

    num_players: int
    actions_per_player: tuple[int, ...]
    payoffs: tuple[np.ndarray, ...]

    def __init__(self, actions_per_player, payoffs):
        actions = tuple(int(k) for k in actions_per_player)
        if not actions or any(k < 1 for k in actions):
            raise ValueError(f"action counts must be positive, got {actions}")
        if len(payoffs) != len(actions):
            raise ValueError("need one payoff tensor per player")
        tensors = []
        for i, table in enumerate(payoffs):
            table = np.asarray(table, dtype=float)
            if table.size != int(np.prod(actions)):
                raise ValueError(
                    f"player {i} payoff table has {table.size} entries, "
                    f"expected {int(np.prod(actions))}"
                )
            table = table.reshape(actions)
            if not np.all(np.isfinite(table)):
                raise ValueError(f"player {i} payoffs must be finite")
            tensors.append(_as_readonly(table))
        object.__setattr__(self, "num_players", len(actions))
        object.__setattr__(self, "actions_per_player", actions)
        object.__setattr__(self, "payoffs", tuple(tensors))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.actions_per_player

    @property
    def num_profiles(self) -> int:
        return int(np.prod(self.actions_per_player))

    def profiles(self):
        """Iterate over joint pure profiles in canonical (row-major) order."""
        return itertools.product(*(range(k) for k in self.actions_per_player))

    def payoff(self, player: int, profile) -> float:
        return float(self.payoffs[player][tuple(profile)])

    def flat_payoffs(self) -> np.ndarray:
        """All payoffs, player-major then row-major joint profile."""
        return np.concatenate([u.ravel() for u in self.payoffs])

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return self.actions_per_player == other.actions_per_player and all(
            np.array_equal(a, b) for a, b in zip(self.payoffs, other.payoffs)
        )

    def __repr__(self):
        return f"Game(actions_per_player={self.actions_per_player})"


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One probability vector per player."""

    strategies: tuple[np.ndarray, ...]

    def __init__(self, strategies):
        vectors = []
        for i, sigma in enumerate(strategies):
            sigma = np.asarray(sigma, dtype=float).ravel()
            if sigma.size == 0:
                raise ValueError(f"player {i} has an empty strategy")
            if np.any(sigma < 0) or np.any(sigma > 1) or not np.all(np.isfinite(sigma)):
                raise ValueError(f"player {i} strategy has entries outside [0, 1]")
            if abs(sigma.sum() - 1.0) > SIMPLEX_TOL:
                raise ValueError(f"player {i} strategy sums to {sigma.sum()!r}, not 1")
            vectors.append(_as_readonly(sigma))
        object.__setattr__(self, "strategies", tuple(vectors))

    @classmethod
    def uniform(cls, actions_per_player) -> MixedProfile:
        return cls([np.full(k, 1.0 / k) for k in actions_per_player])

    @classmethod
    def pure(cls, actions_per_player, profile) -> MixedProfile:
        vectors = []
        for k, a in zip(actions_per_player, profile):
            sigma = np.zeros(k)
            sigma[a] = 1.0
            vectors.append(sigma)
        return cls(vectors)

    @property
    def num_players(self) -> int:
        return len(self.strategies)

    @property
    def actions_per_player(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.strategies)

    def __getitem__(self, player: int) -> np.ndarray:
        return self.strategies[player]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.strategies)

    def to_lists(self) -> list[list[float]]:
        return [s.tolist() for s in self.strategies]

    def __eq__(self, other):
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return len(self.strategies) == len(other.strategies) and all(
            np.array_equal(a, b) for a, b in zip(self.strategies, other.strategies)
        )

    def __repr__(self):
        return f"MixedProfile({self.to_lists()})"


def _check_compatible(game: Game, profile: MixedProfile) -> None:
    if profile.actions_per_player != game.actions_per_player:
        raise ValueError(
            f"profile shape {profile.actions_per_player} does not match "
            f"game shape {game.actions_per_player}"
        )


def _check_player(game: Game, player: int) -> None:
    if not 0 <= player < game.num_players:
        raise IndexError(f"player {player} out of range for {game.num_players} players")


def action_values(game: Game, strategies, player: int) -> np.ndarray:
    """Expected payoff of every pure action of ``player`` against the others.

    ``strategies`` is any sequence of per-player probability vectors; the
    entry for ``player`` itself is ignored.
    """
    values = game.payoffs[player]
    # contract from the last axis so remaining axis numbers stay valid
    for j in reversed(range(game.num_players)):
        if j != player:
            values = np.tensordot(values, strategies[j], axes=([j], [0]))
    return np.asarray(values, dtype=float)


def expected_payoff(game: Game, profile: MixedProfile, player: int, action: int) -> float:
    """Expected payoff to ``player`` for pure ``action`` against ``profile``."""
    _check_player(game, player)
    _check_compatible(game, profile)
    if not 0 <= action < game.actions_per_player[player]:
        raise IndexError(f"action {action} out of range for player {player}")
    return float(action_values(game, profile.strategies, player)[action])


def softmax(values: np.ndarray, lam: float) -> np.ndarray:
    z = lam * np.asarray(values, dtype=float)
    z = np.exp(z - z.max())
    return z / z.sum()


def logit_response(game: Game, profile: MixedProfile, player: int, lam: float) -> np.ndarray:
    """Logit (softmax) response of ``player`` with precision ``lam``."""
    _check_player(game, player)
    _check_compatible(game, profile)
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    return softmax(action_values(game, profile.strategies, player), lam)


def lqre_residual(game: Game, profile: MixedProfile, lam: float) -> float:
    """Largest violation of the unnormalised logit equilibrium condition.

    For each player and action this is
    ``|exp(lam * EP(a_k)) - sigma(a_k) * sum_j exp(lam * EP(a_j))|``.  The
    quantity is not scale free: it grows like ``exp(lam * payoff)``.
    """
    _check_compatible(game, profile)
    worst = 0.0
    for i in range(game.num_players):
        weights = np.exp(lam * action_values(game, profile.strategies, i))
        gap = np.abs(weights - profile[i] * weights.sum())
        worst = max(worst, float(gap.max()))
    return worst
