"""Command-line entry points.

Subcommands: gen-corpus, run, sweep-rate, sweep-target, transfer.
Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from . import kernels
from .errors import ConfigError, DataError, NumericError
from .harness import (
    gen_corpus,
    load_config,
    run_experiment,
    sweep_poisoning_rate,
    sweep_target_label,
    transfer_matrix,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="JSON config path (defaults when omitted)")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mospoison",
        description="Backdoor-poisoning experiments on a synthetic MOS-regression pipeline.",
    )
    parser.add_argument(
        "--backend-info", action="store_true", help="print the active kernel backend and exit"
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-corpus", help="synthesize the labeled corpus to WAV + manifest")
    _add_common(p)

    p = sub.add_parser("run", help="single clean-vs-poisoned experiment")
    _add_common(p)
    p.add_argument("--save-audio", action="store_true", help="materialize poisoned WAVs")

    p = sub.add_parser("sweep-rate", help="poisoning-rate sweep sharing one corpus/clean model")
    _add_common(p)
    p.add_argument("--rates", type=_float_list, default=None, help="e.g. 0.01,0.03,0.05,0.10")

    p = sub.add_parser("sweep-target", help="target-label sweep with a fixed trigger")
    _add_common(p)
    p.add_argument("--targets", type=_float_list, default=None, help="e.g. 1,5")

    p = sub.add_parser("transfer", help="signature-seed transfer matrix (spectral trigger)")
    _add_common(p)
    p.add_argument("--signature-seeds", type=_int_list, default=None, help="e.g. 0,1,2")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.backend_info:
        print(f"kernel backend: {kernels.BACKEND}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        if args.command == "gen-corpus":
            manifest = gen_corpus(cfg)
            print(f"wrote corpus manifest: {manifest}")
        elif args.command == "run":
            result = run_experiment(cfg, save_audio=args.save_audio)
            print(f"wrote {result.out_dir / 'results.csv'}")
            for row in result.rows:
                print(f"  {row.model_variant} model / {row.test_set} test: "
                      f"plcc={'NA' if row.plcc is None else f'{row.plcc:.4f}'} "
                      f"asr={row.asr_percent:.2f}%")
        elif args.command == "sweep-rate":
            sweep = sweep_poisoning_rate(cfg, args.rates)
            print(f"wrote {sweep.out_dir / 'sweep_curve.csv'}")
        elif args.command == "sweep-target":
            sweep = sweep_target_label(cfg, args.targets)
            print(f"wrote {sweep.out_dir / 'sweep_curve.csv'}")
        elif args.command == "transfer":
            result = transfer_matrix(cfg, args.signature_seeds)
            print(f"wrote {result.out_dir / 'transfer_matrix.csv'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
