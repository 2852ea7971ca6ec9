"""Batch command-line interface.

Subcommands:
  run    -- execute one selection and write a JSON report (plus a CSV row)
  gen    -- write a synthetic trajectories.csv / billboards.csv pair
  sweep  -- influence-versus-k table across algorithms, as CSV
  oracle -- exhaustive optimum for small instances, as JSON

The SLOTMAX_LOG environment variable (DEBUG/INFO/WARNING/ERROR) controls
diagnostic verbosity on stderr; results go to stdout or files only.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .catalog import build_catalog, build_exposure, load_billboards, load_trajectories, PanelRatio
from .generator import SyntheticSpec, generate
from .harness import (
    ALGORITHMS,
    SWEEP_ALGORITHMS,
    RunConfig,
    brute_force_opt,
    canonical_json,
    run,
    sweep,
    write_report,
    write_sweep_csv,
)

logger = logging.getLogger(__name__)


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trajectories", type=Path, required=True, metavar="T.csv")
    parser.add_argument("--billboards", type=Path, required=True, metavar="B.csv")
    parser.add_argument("--t-start", type=int, required=True, help="horizon start (seconds)")
    parser.add_argument("--t-end", type=int, required=True, help="horizon end (seconds, exclusive)")
    parser.add_argument("--slot-seconds", type=int, required=True, help="slot window length")
    parser.add_argument(
        "--prob-model",
        choices=("panel-ratio", "explicit"),
        default="panel-ratio",
    )
    parser.add_argument("--probs", type=Path, default=None, metavar="P.csv",
                        help="slot_id,user_id,prob table for the explicit model")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_instance_args(parser)
    parser.add_argument("--r", type=float, default=8.0, help="pruning sample-size factor")
    parser.add_argument("--c", type=float, default=8.0, help="pruning shrink-rate factor")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", type=Path, default=None, metavar="report.json")
    parser.add_argument("--no-timing", action="store_true",
                        help="zero the timing fields for byte-stable reports")


def _config_from_args(args: argparse.Namespace, algo: str, k: int) -> RunConfig:
    return RunConfig(
        horizon=(args.t_start, args.t_end),
        delta=args.slot_seconds,
        k=k,
        algo=algo,
        trajectories=args.trajectories,
        billboards=args.billboards,
        r=args.r,
        c=args.c,
        seed=args.seed,
        prob_model=args.prob_model,
        probs_path=args.probs,
        out=args.out,
        no_timing=args.no_timing,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args, args.algo, args.k)
    report = run(config)
    if args.out is not None:
        json_path, csv_path = write_report(report, args.out)
        logger.info("wrote %s and %s", json_path, csv_path)
    else:
        sys.stdout.write(canonical_json(report.to_dict()))
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = SyntheticSpec.from_json(args.spec)
    traj_path, bb_path = generate(spec, args.out_dir)
    sys.stdout.write(f"{traj_path}\n{bb_path}\n")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    k_values = [int(part) for part in args.k.split(",") if part.strip()]
    algos = (
        [part.strip() for part in args.algos.split(",") if part.strip()]
        if args.algos
        else SWEEP_ALGORITHMS
    )
    config = _config_from_args(args, "greedy", max(k_values, default=0))
    rows = sweep(config, k_values, algos)
    if args.out is not None:
        write_sweep_csv(rows, args.out)
        logger.info("wrote %s", args.out)
    else:
        sys.stdout.write("algorithm,k,influence,time_s\n")
        for row in rows:
            sys.stdout.write(
                f"{row['algorithm']},{row['k']},"
                f"{format(row['influence'], '.17g')},{format(row['time_s'], '.17g')}\n"
            )
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    trajectories = load_trajectories(args.trajectories)
    billboards = load_billboards(args.billboards)
    catalog = build_catalog(billboards, (args.t_start, args.t_end), args.slot_seconds)
    if args.prob_model == "explicit":
        from .catalog import Explicit, load_probabilities

        model = Explicit(load_probabilities(args.probs))
    else:
        model = PanelRatio(billboards)
    exposure = build_exposure(catalog, trajectories, model)
    chosen, influence = brute_force_opt(exposure, range(len(catalog)), args.k)
    payload = {"chosen": list(chosen), "influence": influence, "k": args.k}
    text = canonical_json(payload)
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slotmax",
        description="Select the k most influential billboard slots from trajectory data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one selection algorithm end to end")
    _add_run_args(p_run)
    p_run.add_argument("--algo", choices=ALGORITHMS, required=True)
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen", help="generate a synthetic instance")
    p_gen.add_argument("--spec", type=Path, required=True, metavar="spec.json")
    p_gen.add_argument("--out-dir", type=Path, required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_sweep = sub.add_parser("sweep", help="influence-vs-k table across algorithms")
    _add_run_args(p_sweep)
    p_sweep.add_argument("--algos", default=None,
                         help=f"comma list, default {','.join(SWEEP_ALGORITHMS)}")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="exhaustive optimum (small instances)")
    _add_instance_args(p_oracle)
    p_oracle.add_argument("--k", type=int, required=True)
    p_oracle.add_argument("--out", type=Path, default=None)
    p_oracle.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("SLOTMAX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    # The sweep parser reuses run arguments; --k there is a comma list.
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"slotmax: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
