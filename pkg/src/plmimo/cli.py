"""Command-line front end: simulate, tune, flops, oracle-check."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .harness import (
    SimConfig,
    flops_estimate,
    make_tuning_objective,
    run_ber_sweep,
    run_oracle_check,
    write_csv,
)
from .tuner import default_space, save_lookup_table, tune_demapper


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plmimo",
        description="Link-level MIMO simulation with a perturbed linear soft demapper",
    )
    parser.add_argument("--version", action="version", version=f"plmimo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a coded BER/BLER sweep over SNR")
    sim.add_argument("--config", required=True, help="JSON simulation config")
    sim.add_argument("--out", required=True, help="output CSV path")

    tune = sub.add_parser("tune", help="per-SNR Bayesian optimization of (r, kappa, l_max)")
    tune.add_argument("--config", required=True, help="JSON simulation config")
    tune.add_argument("--out", required=True, help="output JSON lookup table")
    tune.add_argument("--n-calls", type=int, default=40, help="objective evaluations per SNR")
    tune.add_argument("--n-init", type=int, default=8, help="quasi-random initial points")
    tune.add_argument("--blocks", type=int, default=200,
                      help="channel blocks per objective evaluation")

    flops = sub.add_parser("flops", help="per-stage FLOP estimate for one demap")
    flops.add_argument("--m", type=int, required=True)
    flops.add_argument("--n", type=int, required=True)
    flops.add_argument("--b", type=int, required=True, help="candidate set size |B|")
    flops.add_argument("--omega", type=int, required=True, help="constellation size")
    flops.add_argument("--c", type=float, default=1.0, help="FLOPs per random sample")

    oracle = sub.add_parser("oracle-check", help="compare fast demappers to exhaustive references")
    oracle.add_argument("--config", required=True, help="JSON simulation config")
    oracle.add_argument("--out", default=None, help="optional JSON report path")

    return parser


def _cmd_simulate(args) -> int:
    config = SimConfig.from_json(args.config)

    def progress(rec):
        print(f"snr {rec.snr_db:6.2f} dB | blocks {rec.blocks:6d} | "
              f"ber {rec.ber:.3e} | bler {rec.bler:.3e} | "
              f"iters {rec.mean_iters:.2f} | {rec.wall_ms:.0f} ms")

    records = run_ber_sweep(config, progress=progress)
    write_csv(records, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_tune(args) -> int:
    config = SimConfig.from_json(args.config)
    if config.demapper != "plm":
        raise ValueError("tuning targets the plm demapper")

    class _TuneConfig:
        space = default_space()
        n_calls = args.n_calls
        n_init = args.n_init
        default_theta = (config.params.r, config.params.kappa, config.params.l_max)

    def factory(snr_db):
        return make_tuning_objective(config, snr_db, args.blocks)

    table = tune_demapper(_TuneConfig(), config.snr_db, factory, rng_seed=config.seed)
    save_lookup_table(table, args.out)
    for snr_db, entry in table.items():
        print(f"snr {snr_db:6.2f} dB -> r={entry['r']:.4g} kappa={entry['kappa']:.4g} "
              f"l_max={entry['l_max']:.4g} (ber {entry['ber']:.3e})")
    print(f"wrote {args.out}")
    return 0


def _cmd_flops(args) -> int:
    report = flops_estimate(args.m, args.n, args.b, args.omega, args.c)
    width = max(len(name) for name in report.stages)
    print(f"{'stage':<{width}}  {'flops':>14}  {'reference':>10}  note")
    for name, value in report.stages.items():
        ref = report.reference_example[name]
        note = "formula/example mismatch" if name in report.reference_mismatches else ""
        print(f"{name:<{width}}  {value:>14.1f}  {ref:>10.0f}  {note}")
    print(f"{'total':<{width}}  {report.total:>14.1f}")
    return 0


def _cmd_oracle_check(args) -> int:
    config = SimConfig.from_json(args.config)
    report = run_oracle_check(config)
    print(f"plm full-coverage vs exact max-log : {report.max_dev_plm_vs_maxlog:.3e}")
    print(f"soft-linear (M=1) vs exact LSE     : {report.max_dev_softlin_vs_lse:.3e}")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "tune": _cmd_tune,
    "flops": _cmd_flops,
    "oracle-check": _cmd_oracle_check,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # surface a diagnostic, exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
