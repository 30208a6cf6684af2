"""Command line entry point: train, eval, induce, coverage."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .envs import read_trajectory_observations, write_trajectories_csv
from .ndmath import ContractError
from .pseudometric import FiniteDistance, check_axioms, check_lower_bound, induce
from .trainer import RunConfig, TrainingDiverged, coverage_summary, eval_skills, load_agent, train


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")
    if not 1 <= len(dims) <= 2:
        raise argparse.ArgumentTypeError("coverage takes one or two dims")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csdlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress every 100 epochs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run skill discovery and write metrics, trajectories and figures")
    p.add_argument("--config", required=True, type=Path, help="flat JSON config")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("eval", help="roll out a saved policy with freshly sampled skills")
    p.add_argument("--snapshot", required=True, type=Path, help="snapshot directory written by train")
    p.add_argument("--n-skills", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output dir (default: the snapshot dir)")

    p = sub.add_parser("induce", help="induced pseudometric of a finite distance matrix")
    p.add_argument("--input", required=True, type=Path, help='JSON file {"n": int, "d": [[...]]}')

    p = sub.add_parser("coverage", help="count occupied bins in a trajectory CSV")
    p.add_argument("--log", required=True, type=Path)
    p.add_argument("--dims", required=True, type=_dims, help="observation indices, e.g. 2,3")
    p.add_argument("--bin", type=float, default=0.1)
    return parser


def cmd_train(args) -> int:
    cfg = RunConfig.load(args.config, seed=args.seed)
    try:
        art = train(cfg, out_dir=args.out)
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    last = art.metrics[-1] if art.metrics else None
    print(f"wrote {args.out}")
    if last is not None:
        print(f"epochs={cfg.epochs} coverage_agent={last['coverage_agent']} "
              f"coverage_block={last['coverage_block']}")
    return 0


def cmd_eval(args) -> int:
    from . import plotting

    cfg, agent = load_agent(args.snapshot)
    env = cfg.make_env()
    spec = cfg.skill_spec()
    episodes = eval_skills(agent, env, spec, args.n_skills, env.episode_length, seed=args.seed,
                           enumerate_discrete=spec.discrete)
    out = args.out or args.snapshot
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories_csv(out / "eval_trajectories.csv", episodes, env.obs_dim, env.action_dim,
                           spec.vector_dim)
    cov = coverage_summary(env, episodes, cfg.coverage_bin)
    with open(out / "eval_coverage.csv", "w") as fh:
        fh.write("name,bins\n")
        for name, bins in cov.items():
            fh.write(f"{name},{bins}\n")
    if episodes and cfg.env == "point_push":
        plotting.plot_skill_trajectories(episodes, out / "skills.png")
    print(" ".join(f"coverage_{k}={v}" for k, v in cov.items()))
    return 0


def cmd_induce(args) -> int:
    with open(args.input) as fh:
        fd = FiniteDistance.from_json(json.load(fh))
    im = induce(fd)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        print(im.dtilde)
    # exact comparisons only make sense when every entry is an integer multiple of a power of two
    tol = 0.0 if np.all(fd.d * 1024 == np.round(fd.d * 1024)) else 1e-9
    print(check_axioms(im, tol))
    print(check_lower_bound(fd, im, tol))
    return 0


def cmd_coverage(args) -> int:
    from .trainer import state_coverage

    episodes = read_trajectory_observations(args.log)
    print(state_coverage(episodes, args.dims, args.bin))
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "induce": cmd_induce, "coverage": cmd_coverage}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ContractError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
