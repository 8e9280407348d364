"""Command-line interface: gen, train-depth, train-clf, eval, report.

Exit codes: 0 success, 2 configuration error, 3 missing artifact,
4 numeric divergence.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .errors import CheckpointMissing, ConfigInvalid, DatasetMissing, DivergedNaN

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_DIVERGED = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to a key=value config file")
    p.add_argument("--out", help="override the configured output directory")
    p.add_argument("--seed", type=int, help="override the master seed (u64)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfpad",
        description="Finger-dorsal presentation-attack detection on synthetic light fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("gen", "render the dataset: LF5D + DPTH files and a manifest"),
        ("train-depth", "pretrain and fine-tune the depth-extraction network"),
        ("train-clf", "pretrain the backbone and fine-tune the spoof classifier"),
        ("eval", "evaluate on the test split and emit metrics/CMC/predictions"),
        ("report", "re-print the text summary from an existing metrics file"),
    ):
        _add_common(sub.add_parser(name, help=helptext))
    return parser


def _load_config(args) -> pipeline.PipelineConfig:
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed_master"] = args.seed
    return pipeline.load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "gen":
            manifest = pipeline.stage_gen(cfg)
            print(f"wrote {manifest}")
        elif args.command == "train-depth":
            ckpt = pipeline.stage_train_depth(cfg)
            print(f"wrote {ckpt}")
        elif args.command == "train-clf":
            ckpt = pipeline.stage_train_clf(cfg)
            print(f"wrote {ckpt}")
        elif args.command == "eval":
            report = pipeline.stage_eval(cfg)
            print(pipeline.render_summary(report), end="")
        elif args.command == "report":
            report = pipeline.load_report(cfg)
            print(pipeline.render_summary(report), end="")
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        # covers DatasetMissing / CheckpointMissing and absent config files
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except DivergedNaN as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
