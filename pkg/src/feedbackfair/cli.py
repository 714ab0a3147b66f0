"""Command-line entry point.

    feedbackfair enumerate --config exp.json --out results/
    feedbackfair sample    --config exp.json --out results/
    feedbackfair simulate  --config exp.json --out results/ --jobs 4
    feedbackfair analyze   --config exp.json --out results/
    feedbackfair pareto    --config exp.json --out results/
    feedbackfair run       --config exp.json --out results/ --jobs 4 --seed 7
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .experiment import ConfigError, load_experiment_config
from .pipeline import CONFIGS_CSV, Pipeline, load_campaign, run_pipeline
from .report import OutputError, read_csv

log = logging.getLogger("feedbackfair")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="global seed, overrides the config file")
    common.add_argument("--out", type=Path, help="output directory, overrides the config file")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("-q", "--quiet", action="store_true", help="only report errors")

    p = argparse.ArgumentParser(prog="feedbackfair", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("enumerate", parents=[common], help="write every configuration of the space")
    sp = sub.add_parser("sample", parents=[common], help="write a covering array of the space")
    sp.add_argument("--strength", type=int, help="interaction strength, overrides the config file")
    sub.add_parser("simulate", parents=[common],
                   help="Monte-Carlo the configurations in configs.csv (or the configured sampling)")
    sub.add_parser("analyze", parents=[common], help="sensitivity reports from campaign.csv")
    sub.add_parser("pareto", parents=[common], help="Pareto front from campaign.csv")
    sub.add_parser("run", parents=[common], help="select, simulate, analyze and extract the front")
    return p


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        log.info("simulated %d/%d configurations", done, total)


def _configs_from_file(pipe: Pipeline) -> list | None:
    path = pipe.out / CONFIGS_CSV
    if not path.exists():
        return None
    space = pipe.cfg.space
    return [space.config_by_id(int(r["config_id"])) for r in read_csv(path)]


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.jobs < 1:
        log.error("--jobs must be >= 1")
        return 2
    try:
        cfg = load_experiment_config(args.config).with_overrides(
            args.seed, None, getattr(args, "strength", None))
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 2

    out = args.out if args.out is not None else Path(cfg.output_dir)
    progress = None if args.quiet else _progress
    try:
        if args.command == "run":
            status = run_pipeline(cfg, out, args.jobs, progress)
        else:
            pipe = Pipeline(cfg, out, args.jobs, progress)
            if args.command == "enumerate":
                configs = pipe.select("full")
                log.info("%d configurations", len(configs))
            elif args.command == "sample":
                configs = pipe.select("covering")
                log.info("%d configurations (strength %d)", len(configs), cfg.sampling.strength)
            elif args.command == "simulate":
                configs = _configs_from_file(pipe) or pipe.select()
                pipe.simulate(configs)
            elif args.command == "analyze":
                pipe.analyze(*load_campaign(cfg, out))
            elif args.command == "pareto":
                pipe.pareto(*load_campaign(cfg, out))
            status = pipe.finish()
    except (OutputError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    if status == 0:
        log.info("outputs in %s", out)
    return status


if __name__ == "__main__":
    sys.exit(main())
