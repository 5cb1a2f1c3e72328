"""Command-line entry point: ``spreadcpm <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .analytics import (bound_set, db_to_linear, distance_scan, esn0_to_sigma,
                        joint_separate_crossover, symbol_distance)
from .cpm import modulate_baseband
from .errors import SpreadCpmError
from .harness import NBI_INTERPRETATION, ExperimentSpec, conversion_log, run_ber_experiment
from .psd import estimate_psd
from .reports import emit_reports, export_iq, write_csv, write_json
from .spreading import build_codebook, encode

log = logging.getLogger("spreadcpm")


def _load_config(path) -> dict:
    if path is None:
        return {}
    doc = yaml.safe_load(Path(path).read_text())
    return doc or {}


def _spec(args) -> ExperimentSpec:
    doc = _load_config(args.config)
    if args.seed is not None:
        doc["master_seed"] = args.seed
    if args.trials is not None:
        doc["trials"] = args.trials
    return ExperimentSpec.from_dict(doc)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_modulate(args) -> int:
    spec = _spec(args)
    if args.bits:
        bits = np.array([int(c) for c in args.bits.strip()], dtype=np.uint8)
    else:
        rng = np.random.default_rng(spec.master_seed)
        bits = rng.integers(0, 2, args.random_bits, dtype=np.uint8)
    rate_n = args.rate_n or 1
    chips = encode(bits, build_codebook(rate_n, bits.size, spec.codebook)) if rate_n > 1 else bits
    sig = modulate_baseband(chips, spec.modulation, theta=args.theta)
    data, side = export_iq(sig, _out(args) / args.name, spec.modulation,
                           {"bits": "".join(map(str, bits)), "rate_n": rate_n,
                            "codebook": spec.codebook if rate_n > 1 else None,
                            "theta": args.theta})
    print(data)
    return 0


def cmd_distance_scan(args) -> int:
    spec = _spec(args)
    reports = distance_scan(spec.modulation, range(args.n_min, args.n_max + 1), args.mode)
    rows = [{
        "rate_n": r.rate_n, "mode": r.mode, "mean_distance": r.mean_distance,
        "min_distance": r.min_distance, "max_distance": r.max_distance,
        "limit": r.limit, "e0": r.e0, "mean_correlation": r.mean_correlation,
    } for r in reports]
    print(write_csv(rows, _out(args) / f"distance_{args.mode}.csv"))
    return 0


def cmd_bounds(args) -> int:
    spec = _spec(args)
    c = symbol_distance(spec.modulation)
    rows = []
    for db in spec.es_n0_db:
        sigma2 = esn0_to_sigma(db_to_linear(db), c) ** 2
        crossover = joint_separate_crossover(sigma2, args.n_max)
        for n in range(1, args.n_max + 1, 2):
            b = bound_set(n, sigma2)
            rows.append({
                "es_n0_db": db, "sigma2": sigma2, "rate_n": n,
                "p_joint_nc": b.p_joint_nc, "p_joint_c": b.p_joint_c,
                "p_sep_nc_lower": b.p_sep_nc_lower, "p_sep_c_lower": b.p_sep_c_lower,
                "crossover": crossover,
            })
    print(write_csv(rows, _out(args) / "bounds.csv"))
    return 0


def cmd_ber_sweep(args) -> int:
    spec = _spec(args)
    spec.validate()
    results = run_ber_experiment(
        spec, threads=args.threads,
        progress=lambda r: log.info("%s N=%d %.2f dB ber=%.4g", r.strategy, r.rate_n,
                                    r.es_n0_db, r.estimate.ber))
    extra = {"es_n0_conversions": conversion_log(spec)}
    if spec.nbi is not None:
        extra["nbi_interpretation"] = NBI_INTERPRETATION
    csv_path, _ = emit_reports(results, spec, _out(args), timing=args.timing, extra=extra)
    print(csv_path)
    return 0


def cmd_psd(args) -> int:
    spec = _spec(args)
    rng = np.random.default_rng(spec.master_seed)
    bits = rng.integers(0, 2, args.symbols // max(1, args.rate_n), dtype=np.uint8)
    if args.scheme == "uncoded":
        chips = rng.integers(0, 2, args.symbols, dtype=np.uint8)
    else:
        prov = "repetition" if args.scheme == "repetition" else spec.codebook
        chips = encode(bits, build_codebook(args.rate_n, bits.size, prov))
    est = estimate_psd(modulate_baseband(chips, spec.modulation), args.tapers)
    rows = [{"freq": f, "density": d, "density_db": db}
            for f, d, db in zip(est.freqs, est.density, est.density_db)]
    path = write_csv(rows, _out(args) / f"psd_{args.scheme}.csv")
    write_json({"tapers": est.tapers, "resolution": est.resolution, "scheme": args.scheme,
                "rate_n": args.rate_n, "symbols": int(chips.size),
                "modulation": spec.modulation.describe()}, path.with_suffix(".meta.json"))
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (unsigned)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads (affects speed only)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="spreadcpm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modulate", parents=[common], help="bits to an I/Q file")
    p.add_argument("--bits", help="bit string, e.g. 1011")
    p.add_argument("--random-bits", type=int, default=100)
    p.add_argument("--rate-n", type=int, default=1)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--name", default="signal.iq")
    p.set_defaults(func=cmd_modulate)

    p = sub.add_parser("distance-scan", parents=[common], help="codeword distance table")
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--mode", choices=("all_sequences", "repetition"), default="all_sequences")
    p.set_defaults(func=cmd_distance_scan)

    p = sub.add_parser("bounds", parents=[common], help="joint and separate BER bounds")
    p.add_argument("--n-max", type=int, default=25)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ber-sweep", parents=[common], help="Monte Carlo BER sweep")
    p.add_argument("--timing", action="store_true", help="record wall time in the CSV")
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("psd", parents=[common], help="multitaper spectrum")
    p.add_argument("--scheme", choices=("uncoded", "spread", "repetition"), default="spread")
    p.add_argument("--rate-n", type=int, default=10)
    p.add_argument("--symbols", type=int, default=40_000)
    p.add_argument("--tapers", type=int, default=16)
    p.set_defaults(func=cmd_psd)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (SpreadCpmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
