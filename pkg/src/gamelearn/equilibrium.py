"""Logit quantal response equilibria and Nash equilibria of 2x2 games."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .game import Game, MixedProfile, action_values, softmax


class ConvergenceError(RuntimeError):
    """The fixed-point iteration failed to converge at some lambda on the path."""

    def __init__(self, lam: float, residual: float, iterations: int):
        super().__init__(
            f"no convergence at lambda={lam:g} after {iterations} iterations "
            f"(fixed-point residual {residual:.3e})"
        )
        self.lam = lam
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LqreConfig:
    lambda_target: float
    path_steps: int = 50
    damping: float = 0.5
    max_iters_per_step: int = 10000
    tolerance: float = 1e-10

    def __post_init__(self):
        if not self.lambda_target >= 0:
            raise ValueError("lambda_target must be non-negative")
        if self.path_steps < 1 or self.max_iters_per_step < 1:
            raise ValueError("path_steps and max_iters_per_step must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


class _LogitMap:
    """Logit response on a flat strategy vector, with its Jacobian."""

    def __init__(self, game: Game):
        self.game = game
        self.sizes = game.actions_per_player
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        # two-player games skip tensordot: values_i = table_i @ sigma_other
        self.tables = None
        if game.num_players == 2:
            self.tables = (game.payoffs[0], game.payoffs[1].T)

    def split(self, x):
        return [x[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.sizes))]

    def _values(self, parts, i):
        if self.tables is not None:
            return self.tables[i] @ parts[1 - i]
        return action_values(self.game, parts, i)

    def __call__(self, x, lam):
        parts = self.split(x)
        return np.concatenate([softmax(self._values(parts, i), lam) for i in range(len(parts))])

    def _sensitivity(self, parts, i, j):
        """d(action values of i)/d(strategy of j)."""
        if self.tables is not None:
            return self.tables[i]
        n = len(self.sizes)
        block = self.game.payoffs[i]
        for axis in reversed(range(n)):
            if axis not in (i, j):
                block = np.tensordot(block, parts[axis], axes=([axis], [0]))
        return block.T if i > j else block

    def jacobian(self, x, lam, response):
        """d(response)/d(strategy) at ``x``; a player's own block is zero."""
        parts = self.split(x)
        probs = self.split(response)
        n = len(self.sizes)
        jac = np.zeros((x.size, x.size))
        for i in range(n):
            p = probs[i]
            sens = lam * (np.diag(p) - np.outer(p, p))
            rows = slice(self.offsets[i], self.offsets[i + 1])
            for j in range(n):
                if j != i:
                    cols = slice(self.offsets[j], self.offsets[j + 1])
                    jac[rows, cols] = sens @ self._sensitivity(parts, i, j)
        return jac


def _correct(logit: _LogitMap, x, lam, config: LqreConfig, polish: bool):
    """Drive ``x`` to the fixed point ``x = response(x)`` at ``lam``.

    Newton steps are taken when they stay inside the simplex interior and
    reduce the residual; otherwise a damped iteration step is used, halving
    the damping whenever the residual grows.
    """
    damping = config.damping
    response = logit(x, lam)
    residual = np.max(np.abs(x - response))
    for iteration in range(config.max_iters_per_step):
        if residual <= config.tolerance:
            break
        candidate = None
        try:
            step = np.linalg.solve(np.eye(x.size) - logit.jacobian(x, lam, response), response - x)
            trial = x + step
            if np.all(trial > 0) and np.all(trial <= 1):
                candidate = trial
        except np.linalg.LinAlgError:
            pass
        if candidate is not None:
            cand_response = logit(candidate, lam)
            cand_residual = np.max(np.abs(candidate - cand_response))
            if cand_residual < residual:
                x, response, residual = candidate, cand_response, cand_residual
                continue
        trial = (1 - damping) * x + damping * response
        trial_response = logit(trial, lam)
        trial_residual = np.max(np.abs(trial - trial_response))
        if trial_residual > residual:
            damping = max(damping / 2, 1e-4)
        x, response, residual = trial, trial_response, trial_residual
    else:
        if residual > config.tolerance:
            raise ConvergenceError(lam, float(residual), config.max_iters_per_step)
    if polish:
        # squeeze the last digits out so the unnormalised residual stays small
        for _ in range(4):
            try:
                step = np.linalg.solve(np.eye(x.size) - logit.jacobian(x, lam, response), response - x)
            except np.linalg.LinAlgError:
                break
            trial = x + step
            if not (np.all(trial >= 0) and np.all(trial <= 1)):
                break
            trial_response = logit(trial, lam)
            trial_residual = np.max(np.abs(trial - trial_response))
            if not trial_residual < residual:
                break
            x, response, residual = trial, trial_response, trial_residual
    return x


def solve_lqre(game: Game, config: LqreConfig) -> MixedProfile:
    """Logit QRE on the principal branch, traced from the centroid at lambda=0.

    Lambda is raised in ``config.path_steps`` equal increments; at each step
    the previous profile is corrected to the new fixed point.
    """
    logit = _LogitMap(game)
    x = np.concatenate([np.full(k, 1.0 / k) for k in game.actions_per_player])
    if config.lambda_target > 0:
        steps = config.path_steps
        for s in range(1, steps + 1):
            lam = config.lambda_target * s / steps
            x = _correct(logit, x, lam, config, polish=s == steps)
    parts = [np.clip(p, 0.0, 1.0) for p in logit.split(x)]
    return MixedProfile([p / p.sum() for p in parts])


def _is_nash(game: Game, strategies, tol: float) -> bool:
    for i in range(game.num_players):
        values = action_values(game, strategies, i)
        if values.max() - float(values @ strategies[i]) > tol:
            return False
    return True


def solve_nash_2x2(game: Game, tol: float = 1e-9) -> list[MixedProfile]:
    """All Nash equilibria of a 2x2 game by support enumeration.

    Pure profiles come first in row-major order, followed by the fully
    mixed equilibrium when the indifference conditions give interior
    probabilities.  Degenerate games with a continuum of equilibria only
    report the isolated points found this way.
    """
    if game.actions_per_player != (2, 2):
        raise ValueError(f"expected a 2x2 game, got {game.actions_per_player}")
    rows, cols = game.payoffs
    found = []
    for r, c in itertools.product(range(2), range(2)):
        strategies = [np.eye(2)[r], np.eye(2)[c]]
        if _is_nash(game, strategies, tol):
            found.append(MixedProfile(strategies))

    # column mix q makes the row player indifferent, row mix p the column player
    row_den = rows[0, 0] - rows[0, 1] - rows[1, 0] + rows[1, 1]
    col_den = cols[0, 0] - cols[1, 0] - cols[0, 1] + cols[1, 1]
    if row_den != 0 and col_den != 0:
        q = (rows[1, 1] - rows[0, 1]) / row_den
        p = (cols[1, 1] - cols[1, 0]) / col_den
        if 0 < p < 1 and 0 < q < 1:
            strategies = [np.array([p, 1 - p]), np.array([q, 1 - q])]
            if _is_nash(game, strategies, tol):
                found.append(MixedProfile(strategies))
    return found
