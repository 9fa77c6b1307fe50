"""Command line: generate games and data, run a learner, reproduce a table."""
from __future__ import annotations

import argparse
import sys

from .compiler import LearnerConfig
from .data import GroundTruth, random_game, sample_plays
from .equilibrium import LqreConfig, solve_lqre
from .estimate import Method, error
from .experiment import PRESETS, run_experiment
from .io import (
    estimate_to_json,
    game_from_json,
    game_to_json,
    profile_from_json,
    profile_to_json,
    read_dataset,
    read_json,
    write_dataset,
    write_json,
)
from .learners import learn_lqre, learn_naive, learn_naive_lqre, learn_naive_nash


def _learner_flags(p: argparse.ArgumentParser, lam_default=None):
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=lam_default,
                   help="rationality parameter used for learning")
    p.add_argument("--alpha", type=float, default=100.0)
    p.add_argument("--eps", type=float, default=0.05, help="strategy grid step")
    p.add_argument("--delta", type=float, default=0.1, help="payoff grid step")
    p.add_argument("--R", dest="noise", type=float, default=0.7, help="payoff noise stddev")
    p.add_argument("--monolithic", action="store_true", help="compile without decomposition")


def _config(args, lam) -> LearnerConfig:
    return LearnerConfig(lam=lam, alpha=args.alpha, strategy_step=args.eps,
                         payoff_step=args.delta, noise_stddev=args.noise,
                         decomposed=not args.monolithic)


def _emit(obj, path):
    if path in (None, "-"):
        import json

        json.dump(obj, sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        write_json(obj, path)


def cmd_gen_game(args):
    game = random_game(args.players, args.actions, args.lo, args.hi, args.seed)
    out = game_to_json(game)
    if args.lam is not None:
        out["profile"] = profile_to_json(solve_lqre(game, LqreConfig(args.lam)))
        out["lambda"] = args.lam
    _emit(out, args.out)


def _truth(path) -> GroundTruth:
    data = read_json(path)
    game = game_from_json(data)
    if "profile" not in data:
        raise SystemExit(f"{path} has no profile; generate it with gen-game --lam")
    return GroundTruth(game, profile_from_json(data["profile"]), float(data.get("lambda", 0.0)))


def cmd_gen_data(args):
    truth = _truth(args.game)
    dataset = sample_plays(truth, args.M, args.R, args.seed)
    if args.out in (None, "-"):
        import json

        print(json.dumps({"players": dataset.num_players, "actions": list(dataset.actions_per_player),
                          "R": dataset.noise_stddev, "seed": dataset.generator_seed, "M": dataset.m}))
        for s in dataset.samples:
            print(json.dumps({"a": list(s.joint_action), "v": list(s.observed_payoffs)}))
    else:
        write_dataset(dataset, args.out)


def cmd_learn(args):
    dataset = read_dataset(args.data)
    if args.lam is None:
        raise SystemExit("learn needs --lam")
    config = _config(args, args.lam)
    method = Method(args.method)
    truth = _truth(args.truth) if args.truth else None
    if method is Method.NAIVE_NASH:
        if truth is None:
            raise SystemExit("naive-nash selects among equilibria with the true game; pass --truth")
        est = learn_naive_nash(dataset, config, truth)
    else:
        est = {Method.LQRE: learn_lqre, Method.NAIVE: learn_naive,
               Method.NAIVE_LQRE: learn_naive_lqre}[method](dataset, config)
    out = estimate_to_json(est)
    if truth is not None:
        out["error"] = error(truth, est, args.error_observed_only)
    _emit(out, args.out)


def cmd_experiment(args):
    preset = PRESETS[args.table]
    spec = preset(game_count=args.games, seed=args.seed)
    lam = spec.config.lam if args.lam is None else args.lam
    from dataclasses import replace

    spec = replace(spec, config=_config(args, lam), error_observed_only=args.error_observed_only)
    if args.M is not None:
        spec = replace(spec, m=args.M)
    if args.values:
        spec = replace(spec, values=tuple(float(v) if spec.axis.value != "training_size" else int(v)
                                          for v in args.values.split(",")))
    if args.table == 3:
        spec = replace(spec, learn_lambda=lam)
    total = spec.game_count * len(spec.values)

    def progress(done):
        print(f"\r{done // len(spec.methods)}/{total} cells", end="", file=sys.stderr, flush=True)

    result = run_experiment(spec, workers=args.workers, progress=None if args.quiet else progress)
    if not args.quiet:
        print(file=sys.stderr)
    text = result.to_csv()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.json:
        write_json(result.to_json(), args.json)
    for c in result.failures:
        print(f"failed: {c.method.value} value={c.axis_value} game={c.game}: {c.failure}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamelearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-game", help="random game, optionally with its logit equilibrium")
    p.add_argument("--players", type=int, default=2)
    p.add_argument("--actions", type=int, default=2)
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, help="attach the logit QRE at this lambda")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_gen_game)

    p = sub.add_parser("gen-data", help="simulate plays of a game with a profile")
    p.add_argument("game", help="game JSON with a profile (from gen-game --lam)")
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--R", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("learn", help="estimate a game from a dataset")
    p.add_argument("data", help="JSON-lines dataset")
    p.add_argument("--method", choices=[m.value for m in Method], default="lqre")
    p.add_argument("--truth", help="game JSON with profile, to score the estimate")
    p.add_argument("--error-observed-only", action="store_true")
    p.add_argument("--out", "-o")
    _learner_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("experiment", help="rerun one of the three comparison tables")
    p.add_argument("--table", type=int, choices=sorted(PRESETS), required=True)
    p.add_argument("--games", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--M", type=int, help="samples per dataset (tables 2 and 3)")
    p.add_argument("--values", help="comma-separated column values")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="write the table here instead of stdout")
    p.add_argument("--json", help="also write a JSON report")
    p.add_argument("--error-observed-only", action="store_true")
    p.add_argument("--quiet", action="store_true")
    _learner_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
