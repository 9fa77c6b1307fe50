"""JSON file formats for games, profiles, datasets and estimates."""
from __future__ import annotations

import json

import numpy as np

from .data import Dataset, PlaySample
from .estimate import Estimate, Method
from .game import Game, MixedProfile


def game_to_json(game: Game) -> dict:
    return {
        "players": game.num_players,
        "actions": list(game.actions_per_player),
        "payoffs": [u.ravel().tolist() for u in game.payoffs],
    }


def game_from_json(data: dict) -> Game:
    game = Game(data["actions"], [np.asarray(u, dtype=float) for u in data["payoffs"]])
    if game.num_players != data.get("players", game.num_players):
        raise ValueError("'players' disagrees with 'actions'")
    return game


def profile_to_json(profile: MixedProfile) -> list:
    return profile.to_lists()


def profile_from_json(data: list) -> MixedProfile:
    return MixedProfile([np.asarray(s, dtype=float) for s in data])


def estimate_to_json(estimate: Estimate) -> dict:
    out = game_to_json(estimate.game)
    out["observed"] = [np.asarray(m).ravel().astype(int).tolist() for m in estimate.observed]
    out["profile"] = profile_to_json(estimate.profile)
    out["method"] = estimate.method.value
    return out


def estimate_from_json(data: dict) -> Estimate:
    game = game_from_json(data)
    observed = tuple(np.asarray(m, dtype=bool).reshape(game.shape) for m in data["observed"])
    return Estimate(tuple(np.array(u) for u in game.payoffs), observed,
                    profile_from_json(data["profile"]), Method(data["method"]))


def write_dataset(dataset: Dataset, path) -> None:
    """JSON lines: a header, then one ``{"a": ..., "v": ...}`` line per sample."""
    header = {"players": dataset.num_players, "actions": list(dataset.actions_per_player),
              "R": dataset.noise_stddev, "seed": dataset.generator_seed, "M": dataset.m}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in dataset.samples:
            fh.write(json.dumps({"a": list(s.joint_action), "v": list(s.observed_payoffs)}) + "\n")


def read_dataset(path) -> Dataset:
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = json.loads(lines[0])
    samples = []
    for line in lines[1:]:
        row = json.loads(line)
        samples.append(PlaySample(tuple(int(a) for a in row["a"]), tuple(float(v) for v in row["v"])))
    if header.get("M", len(samples)) != len(samples):
        raise ValueError(f"header announces {header['M']} samples, found {len(samples)}")
    return Dataset(header["actions"], samples, float(header["R"]), header.get("seed"))


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
