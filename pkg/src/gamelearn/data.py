"""Random games and simulated observations of repeated play.

Every random draw goes through :class:`UniformStream`, which turns the raw
64-bit output of numpy's PCG64 bit generator into doubles by hand and builds
normal deviates with the Box-Muller transform.  Only the bit generator's raw
stream is relied on, so datasets regenerate identically across numpy
releases.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .game import Game, MixedProfile


class UniformStream:
    """Seeded stream of uniforms on [0, 1) and standard normals."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n)
        # top 53 bits -> double in [0, 1)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """Box-Muller, cosine branch only; two uniforms per deviate."""
        u = self.uniform(2 * n).reshape(n, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        return radius * np.cos(2.0 * np.pi * u[:, 1])


@dataclass(frozen=True)
class PlaySample:
    joint_action: tuple[int, ...]
    observed_payoffs: tuple[float, ...]


@dataclass(frozen=True)
class GroundTruth:
    game: Game
    profile: MixedProfile
    lam: float

    def __post_init__(self):
        if self.profile.actions_per_player != self.game.actions_per_player:
            raise ValueError("profile does not match the game")


@dataclass(frozen=True, eq=False)
class Dataset:
    """M observed plays: joint actions plus one noisy payoff per player."""

    actions_per_player: tuple[int, ...]
    samples: tuple[PlaySample, ...]
    noise_stddev: float
    generator_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "actions_per_player", tuple(int(k) for k in self.actions_per_player))
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValueError("a dataset needs at least one sample")
        if not self.noise_stddev > 0:
            raise ValueError("noise_stddev must be positive")
        n = len(self.actions_per_player)
        for s in self.samples:
            if len(s.joint_action) != n or len(s.observed_payoffs) != n:
                raise ValueError(f"sample {s} does not have {n} players")
            if any(not 0 <= a < k for a, k in zip(s.joint_action, self.actions_per_player)):
                raise ValueError(f"sample {s} has an invalid action")

    @property
    def num_players(self) -> int:
        return len(self.actions_per_player)

    @property
    def m(self) -> int:
        return len(self.samples)

    def joint_actions(self) -> np.ndarray:
        return np.array([s.joint_action for s in self.samples], dtype=int)

    def observed_payoffs(self) -> np.ndarray:
        return np.array([s.observed_payoffs for s in self.samples], dtype=float)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.actions_per_player == other.actions_per_player
            and self.samples == other.samples
            and self.noise_stddev == other.noise_stddev
            and self.generator_seed == other.generator_seed
        )


def random_game(num_players: int, actions: int, lo: float, hi: float, seed: int) -> Game:
    """Game with i.i.d. uniform payoffs on [lo, hi]."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if num_players < 1 or actions < 1:
        raise ValueError("num_players and actions must be positive")
    shape = (actions,) * num_players
    draws = UniformStream(seed).uniform(num_players * actions**num_players)
    # clip guards the rounding of lo + (hi - lo) * u at the top of the band
    payoffs = np.clip(lo + (hi - lo) * draws, lo, hi).reshape((num_players,) + shape)
    return Game(shape, list(payoffs))


def sample_plays(truth: GroundTruth, m: int, noise_stddev: float, seed: int) -> Dataset:
    """Simulate ``m`` independent plays of ``truth.game`` under ``truth.profile``.

    Per sample, each player's action is drawn by inverse CDF from one
    uniform, then every player's payoff is observed with Gaussian noise.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not noise_stddev > 0:
        raise ValueError("noise_stddev must be positive")
    game = truth.game
    n = game.num_players
    stream = UniformStream(seed)
    cdfs = [np.cumsum(s) for s in truth.profile.strategies]
    samples = []
    for _ in range(m):
        u = stream.uniform(n)
        joint = tuple(
            min(int(np.searchsorted(cdf, ui, side="right")), cdf.size - 1)
            for cdf, ui in zip(cdfs, u)
        )
        noise = stream.normal(n)
        values = tuple(float(game.payoffs[i][joint] + noise_stddev * noise[i]) for i in range(n))
        samples.append(PlaySample(joint, values))
    return Dataset(game.actions_per_player, samples, float(noise_stddev), int(seed))


@dataclass(frozen=True)
class EmpiricalCounts:
    """Sufficient statistics of a dataset.

    ``action_counts[i][a]`` counts plays of action ``a`` by player ``i``;
    ``observations[profile]`` is an ``(n_obs, N)`` array of the payoffs seen
    at that joint profile, one column per player.
    """

    action_counts: tuple[np.ndarray, ...]
    observations: dict

    def payoff_observations(self, player: int, profile) -> np.ndarray:
        obs = self.observations.get(tuple(profile))
        return np.empty(0) if obs is None else obs[:, player]

    def observed_profiles(self) -> list[tuple[int, ...]]:
        return sorted(self.observations)


class CountAccumulator:
    """Incremental version of :func:`empirical_counts`."""

    def __init__(self, actions_per_player):
        self._counts = [np.zeros(k, dtype=int) for k in actions_per_player]
        self._obs = defaultdict(list)

    def add(self, sample: PlaySample) -> CountAccumulator:
        for i, a in enumerate(sample.joint_action):
            self._counts[i][a] += 1
        self._obs[tuple(sample.joint_action)].append(sample.observed_payoffs)
        return self

    def result(self) -> EmpiricalCounts:
        return EmpiricalCounts(
            tuple(c.copy() for c in self._counts),
            {p: np.array(v, dtype=float) for p, v in sorted(self._obs.items())},
        )


def empirical_counts(dataset: Dataset) -> EmpiricalCounts:
    acc = CountAccumulator(dataset.actions_per_player)
    for sample in dataset.samples:
        acc.add(sample)
    return acc.result()
