"""Command-line entry point: ``umpcodes <subcommand> [flags]``.

Experiment settings come from built-in defaults, then an optional JSON file
(``--config``, keys named like ``ExperimentConfig`` fields), then explicit
flags, each layer overriding the previous one. The resolved configuration is
logged and embedded in every output file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import BACKEND, sim, ump
from .gf2 import BitMatrix, as_bits, coset_intersection, parity_check_from_generator, syndrome
from .na import NaClass, NaProblem, biawgn_capacity, biawgn_dispersion, na_message_size, na_min_snr
from .channel import RngStream

log = logging.getLogger("umpcodes")

# flag name -> ExperimentConfig field
CONFIG_FLAGS = ("family", "n", "k0", "k1", "rates", "eps0", "eps1", "mode", "list_size", "nu",
                "generators", "crc", "esn0_db", "bracket", "log_threshold", "min_errors",
                "max_frames", "batch_size", "threads", "seed", "overlap")


class UsageError(Exception):
    pass


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def _class_spec(text: str) -> NaClass:
    try:
        k, eps = text.split(":")
        return NaClass(int(k), float(eps))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"class must look like K:EPS (e.g. 32:1e-5), got {text!r}: {exc}") from None


def _add_code_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("code")
    g.add_argument("--config", metavar="FILE", help="JSON file with experiment settings")
    g.add_argument("--family", choices=["ztcc", "polar"])
    g.add_argument("--n", type=int, help="blocklength")
    g.add_argument("--k0", type=int, help="class-0 message bits")
    g.add_argument("--k1", type=int, help="class-1 message bits")
    g.add_argument("--rates", type=_pair, metavar="R0,R1", help="rates instead of --k0/--k1")
    g.add_argument("--nu", type=int, help="ZTCC memory")
    g.add_argument("--generators", metavar="G0/G1",
                   help="octal generators per class, e.g. 117,127,155,171/133,171")
    g.add_argument("--crc", help="CRC polynomial in hex (polar), e.g. 0x61")
    g.add_argument("--list-size", dest="list_size", type=int, help="SCL list size")
    g.add_argument("--seed", type=int, help="master seed (offsets and noise)")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--eps0", type=float, help="class-0 target error probability")
    g.add_argument("--eps1", type=float, help="class-1 target error probability")
    g.add_argument("--mode", choices=list(ump.TEST_MODES), help="class test")
    g.add_argument("--esn0-db", dest="esn0_db", type=float, help="Es/N0 in dB")
    g.add_argument("--bracket", type=_pair, metavar="LO,HI", help="Es/N0 search bracket in dB")
    g.add_argument("--min-errors", dest="min_errors", type=int, help="errors per class before stopping")
    g.add_argument("--max-frames", dest="max_frames", type=int, help="frame cap per class")
    g.add_argument("--batch-size", dest="batch_size", type=int, help="frames per work unit")
    g.add_argument("--threads", type=int, help="worker processes")
    g.add_argument("--out", metavar="PREFIX", default="umpcodes_out",
                   help="write PREFIX.csv and PREFIX.json (default: %(default)s)")


def resolve_config(args: argparse.Namespace) -> sim.ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            values.update(json.load(f))
    for name in CONFIG_FLAGS:
        v = getattr(args, name, None)
        if v is not None and v is not False:
            values[name] = v
    if getattr(args, "rates", None) is not None:
        values.pop("k0", None)
        values.pop("k1", None)
    if getattr(args, "threshold", None) is not None:
        values["log_threshold"] = math.log(args.threshold)
    cfg = sim.ExperimentConfig.from_dict(values)
    print("config:", json.dumps(cfg.to_dict(), sort_keys=True), file=sys.stderr)
    return cfg


# ---------------------------------------------------------------- subcommands


def cmd_na(args) -> int:
    if args.n is None or not args.classes:
        raise UsageError("na needs --n and at least one --class K:EPS")
    res = na_min_snr(NaProblem(args.n, tuple(args.classes)))
    esn0 = 10 ** (res.esn0_db / 10)
    print(f"n = {args.n}")
    print(f"Es/N0* = {res.esn0_db:.4f} dB")
    print(f"C = {biawgn_capacity(esn0):.6f} bit/use, V = {biawgn_dispersion(esn0):.6f} bit^2/use")
    for i, (c, lam) in enumerate(zip(args.classes, res.lambdas)):
        size = na_message_size(args.n, esn0, c.eps, lam)
        print(f"class {i}: k = {c.k}, eps = {c.eps:g}, lambda = {lam:.6g}, NA message size = {size:.3f} bits")
    if args.out:
        with open(args.out + ".json", "w") as f:
            json.dump({"n": args.n, "classes": [{"k": c.k, "eps": c.eps} for c in args.classes],
                       "esn0_db": res.esn0_db, "lambdas": list(res.lambdas)}, f, indent=2)
            f.write("\n")
    return 0


def _load_matrix_file(path: str):
    """JSON with generator rows ``g0``, ``g1`` and optional offsets ``v0``, ``v1`` as bit strings."""
    with open(path) as f:
        d = json.load(f)
    g0 = BitMatrix.from_strings(d["g0"])
    g1 = BitMatrix.from_strings(d["g1"])
    if g0.ncols != g1.ncols:
        raise UsageError(f"blocklength mismatch: {g0.ncols} vs {g1.ncols}")
    v0 = as_bits(d.get("v0", "0" * g0.ncols))
    v1 = as_bits(d.get("v1", "0" * g1.ncols))
    return g0, g1, v0, v1


def cmd_intersect(args) -> int:
    if args.matrices:
        g0, g1, v0, v1 = _load_matrix_file(args.matrices)
        h0, h1 = parity_check_from_generator(g0), parity_check_from_generator(g1)
    else:
        cfg = resolve_config(args)
        b0, b1 = cfg.base_codes()
        c0, c1 = ump.CosetCode.linear(b0), ump.CosetCode.linear(b1)
        h0, h1 = c0.parity_check, c1.parity_check
        v0 = v1 = np.zeros(cfg.n, dtype=np.uint8)
        if args.search_offsets:
            v0, v1, _ = ump.search_disjoint_offsets(b0, b1, RngStream(cfg.seed, (sim.OFFSET_STREAM, cfg.k0, cfg.k1)))
    if args.offsets:
        with open(args.offsets) as f:
            d = json.load(f)
        v0, v1 = as_bits(d["v0"]), as_bits(d["v1"])
    if len(v0) != h0.ncols or len(v1) != h1.ncols or h0.ncols != h1.ncols:
        raise UsageError(f"blocklength mismatch: codes have n={h0.ncols}/{h1.ncols}, offsets {len(v0)}/{len(v1)}")
    cert = coset_intersection(h0, syndrome(h0, v0), h1, syndrome(h1, v1))
    print(cert)
    if args.show_offsets:
        print("v0 =", "".join(map(str, v0)))
        print("v1 =", "".join(map(str, v1)))
    return 0


def _summary_row(cfg, esn0_db, log_t, estimates) -> dict:
    rec = sim.PointRecord(esn0_db, cfg.k0, cfg.k1,
                          sim.ThresholdResult(log_t, estimates,
                                              estimates[0].upper <= cfg.eps0 and estimates[1].upper <= cfg.eps1,
                                              max(estimates[0].rate / cfg.eps0, estimates[1].rate / cfg.eps1)))
    return rec.row(cfg)


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if cfg.esn0_db is None:
        raise UsageError("simulate needs --esn0-db")
    code = sim.build_code(cfg)
    summary = {"certificate": str(code.certificate)}
    if cfg.overlap:
        floor = ump.predicted_error_floor(code)
        summary["predicted_floor"] = floor
        print(f"overlapping cosets: intersection {code.certificate}, predicted class-0 floor |A|/M0 = {floor:.6g}")
    if args.optimize:
        res = sim.optimize_threshold(cfg, cfg.esn0_db, code)
        log_t, ests = res.log_threshold, res.estimates
        summary["threshold_grid"] = res.grid
    else:
        log_t = cfg.log_threshold
        ests = sim.estimate_rates(cfg, cfg.esn0_db, log_t, code)
    row = _summary_row(cfg, cfg.esn0_db, log_t, ests)
    for cls, e in enumerate(ests):
        lo, hi = e.interval
        print(f"class {cls}: {e.errors}/{e.frames} errors (wrong class {e.wrong_class}, wrong codeword "
              f"{e.wrong_codeword}, erasure {e.erasure}), rate {e.rate:.4g}, 95% CI [{lo:.4g}, {hi:.4g}]")
    print(f"log T = {log_t:.4f}")
    summary.update(log_threshold=log_t, estimates=[e.to_dict() for e in ests])
    paths = sim.write_outputs(args.out, [row], cfg, summary)
    print("wrote", *paths)
    return 0


def cmd_min_snr(args) -> int:
    cfg = resolve_config(args)
    try:
        res = sim.find_min_snr(cfg)
    except sim.BracketError as exc:
        print(f"error: {exc}; widen --bracket", file=sys.stderr)
        return 1
    rows = [p.row(cfg) for p in res.points]
    print(f"min Es/N0 = {res.esn0_db:.2f} dB, log T = {res.log_threshold:.4f}")
    summary = {"esn0_db": res.esn0_db, "log_threshold": res.log_threshold,
               "estimates": [e.to_dict() for e in res.estimates],
               "resolution_db": sim.SNR_RESOLUTION_DB}
    print("wrote", *sim.write_outputs(args.out, rows, cfg, summary))
    return 0


def cmd_max_rate(args) -> int:
    cfg = resolve_config(args)
    if cfg.esn0_db is None:
        raise UsageError("max-rate needs --esn0-db")
    try:
        res = sim.find_max_rates(cfg, cfg.esn0_db)
    except sim.InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = [p.row(cfg) for p in res.points]
    r0, r1 = res.rates
    print(f"k0 = {res.k0}, k1 = {res.k1}: R0* = {r0:.4f}, R1* = {r1:.4f} (log T = {res.log_threshold:.4f})")
    summary = {"k0": res.k0, "k1": res.k1, "rates": [r0, r1], "log_threshold": res.log_threshold,
               "estimates": [e.to_dict() for e in res.estimates]}
    print("wrote", *sim.write_outputs(args.out, rows, cfg, summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umpcodes", description="Two-class unequal message protection codes")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("na", help="normal-approximation benchmark SNR for a set of classes")
    p.add_argument("--n", type=int, help="blocklength")
    p.add_argument("--class", dest="classes", type=_class_spec, action="append", metavar="K:EPS",
                   help="message bits and target error probability; repeat per class")
    p.add_argument("--out", metavar="PREFIX", help="also write PREFIX.json")
    p.set_defaults(func=cmd_na)

    p = sub.add_parser("intersect", help="coset intersection certificate for two codes")
    _add_code_flags(p)
    p.add_argument("--matrices", metavar="FILE", help="JSON with generator rows g0, g1 (and offsets v0, v1)")
    p.add_argument("--offsets", metavar="FILE", help="JSON with offset bit strings v0, v1")
    p.add_argument("--search-offsets", action="store_true", help="draw random disjoint offsets from --seed")
    p.add_argument("--show-offsets", action="store_true", help="print the offsets used")
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("simulate", help="per-class error rates at one SNR")
    _add_code_flags(p)
    _add_experiment_flags(p)
    t = p.add_mutually_exclusive_group()
    t.add_argument("--threshold", type=float, help="operational threshold T (linear)")
    t.add_argument("--log-threshold", dest="log_threshold", type=float, help="operational log T")
    t.add_argument("--optimize", action="store_true", help="optimise the threshold")
    p.add_argument("--overlap", action="store_true", default=None,
                   help="zero offsets (overlapping classes) to show the error floor")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("min-snr", help="minimum Es/N0 meeting both targets")
    _add_code_flags(p)
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_min_snr)

    p = sub.add_parser("max-rate", help="largest (R0, R1) meeting both targets at a fixed Es/N0")
    _add_code_flags(p)
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_max_rate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", BACKEND)
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError, ump.DisjointnessError) as exc:
        parser.exit(2, f"umpcodes {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
