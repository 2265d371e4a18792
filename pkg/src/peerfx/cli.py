"""Batch entry points: simulate synthetic panels, estimate peer effects.

Exit codes: 0 success, 1 data or IO error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from collections.abc import Sequence

import numpy as np

from . import estimators, instruments, simgen, transform
from . import panel as panel_mod
from .errors import ConfigError, DataError
from .panel import MODES


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peerfx",
        description="Peer-effect estimation on match panels, plus a synthetic data generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic match panel")
    sim.add_argument("--output", required=True, help="records path (.jsonl, else CSV)")
    sim.add_argument("--config", help="generator config JSON file (defaults if omitted)")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--ground-truth", help="also write the generator's ground truth JSON")
    sim.add_argument("--workers", type=int, default=1, help="worker threads")

    est = sub.add_parser("estimate", help="estimate the peer effect from a match panel")
    est.add_argument("--input", required=True, help="records path (.jsonl, else CSV)")
    est.add_argument("--output", help="report JSON path")
    est.add_argument("--text-output", help="text report path")
    est.add_argument("--mode", choices=("all",) + MODES, default="all", help="team-size filter")
    est.add_argument(
        "--algorithmic-pairs",
        action="store_true",
        help="keep only duos with no premade party (requires --mode duos)",
    )
    est.add_argument("--estimator", choices=("both", "ols", "2sls"), default="both")
    est.add_argument("--workers", type=int, default=1, help="worker threads")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            config = simgen.SimConfig.from_json(fh.read())
    else:
        config = simgen.SimConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    records, truth = simgen.generate_panel(config, workers=args.workers)
    panel_mod.write_records(args.output, records, binary=config.outcome == "binary")
    if args.ground_truth:
        with open(args.ground_truth, "w", encoding="utf-8") as fh:
            fh.write(truth.to_json())
            fh.write("\n")
    if not records:
        print("warning: config yields zero matches; wrote an empty data file", file=sys.stderr)
    n_matches = len({r.match_id for r in records})
    print(f"wrote {len(records)} rows over {n_matches} matches to {args.output}")
    return 0


def _attrition_text(att: instruments.AttritionReport) -> str:
    rows = [
        ("input rows", att.n_input_rows),
        ("dropped: incomplete team", -att.dropped_incomplete_team),
        ("dropped: instrument undefined", -att.dropped_instrument_undefined),
        ("dropped: fewer than two matches", -att.dropped_too_few_matches),
        ("estimation rows", att.n_rows),
    ]
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label.ljust(width)}  {value:>12}" for label, value in rows) + "\n"


def _cmd_estimate(args: argparse.Namespace) -> int:
    if args.algorithmic_pairs and args.mode != "duos":
        raise ConfigError("--algorithmic-pairs requires --mode duos")
    records, binary = panel_mod.read_records(args.input, workers=args.workers)
    pan = panel_mod.build_panel(records, binary=binary)
    if args.mode != "all":
        pan = panel_mod.filter_mode(pan, args.mode)
    if args.algorithmic_pairs:
        pan = panel_mod.filter_algorithmic_pairs(pan)
    summary = panel_mod.panel_summary(pan)

    eligible = instruments.build_eligible_panel(pan)
    demeaned = transform.demean(eligible)
    ols, stage, tsls = estimators.fit_panel(demeaned, estimator=args.estimator)

    sizes = np.unique(pan.match_team_size[eligible.match])
    rep = estimators.report(
        mean_y=demeaned.mean_y,
        n_rows=demeaned.n_rows,
        n_players=demeaned.n_players,
        ols=ols,
        stage=stage,
        tsls=tsls,
        team_size=int(sizes[0]) if sizes.size == 1 else None,
        panel=summary,
        attrition=eligible.attrition,
    )

    text = _attrition_text(eligible.attrition) + "\n" + rep.to_text()
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
            fh.write("\n")
    if args.text_output:
        with open(args.text_output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_estimate(args)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
