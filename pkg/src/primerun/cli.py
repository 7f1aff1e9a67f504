"""Command-line interface: ``primerun {run,race,walk,bias,simulate}``.

Exit codes: 0 success, 2 argument error, 3 resource error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
from contextlib import contextmanager
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import bias as bias_mod
from . import cramer
from .errors import ArgumentError, ResourceError
from .primes import DEFAULT_SEGMENT_SIZE, ResidueClass, reduced_residues
from .running import (
    DEFAULT_DIRECTIONS,
    RunningScan,
    geometric_grid,
    iter_gaps,
    parse_direction_map,
    run_path,
    walk_path,
)

log = logging.getLogger("primerun")

CHECKPOINT_SCHEMA = 1
DEFAULT_SEED = 0
BIAS_PLACES = 8


def parse_int(text: str) -> int:
    """Parse an exact integer, accepting scientific notation such as ``1e8``."""
    try:
        value = Decimal(str(text).strip())
    except InvalidOperation:
        raise ArgumentError(f"not a number: {text!r}") from None
    if value != value.to_integral_value():
        raise ArgumentError(f"not an integer: {text!r}")
    return int(value)


def parse_int_list(text: str) -> list[int]:
    return [parse_int(t) for t in text.split(",") if t.strip()]


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _fmt(v: float, places: int = BIAS_PLACES) -> str:
    return "nan" if math.isnan(v) else f"{v:.{places}f}"


def _checkpoints(args) -> list[int]:
    x = parse_int(args.x)
    cps = set()
    if args.checkpoints:
        cps.update(parse_int_list(args.checkpoints))
    if args.grid:
        cps.update(geometric_grid(x, args.grid))
    return sorted(cps) or [x]


# ---------------------------------------------------------------------------
# run


def _scan_with_checkpoints(args, x: int, d: int, cps: list[int], reversed: bool):
    scan = RunningScan(x, d, cps, reversed)
    config = {
        "command": "run",
        "x": x,
        "d": d,
        "checkpoints": list(scan.checkpoints),
        "reversed": reversed,
        "segment_size": args.segment_size,
    }
    digest = config_hash(config)
    ck_path = Path(args.checkpoint_file) if args.checkpoint_file else None
    if ck_path and ck_path.exists():
        blob = json.loads(ck_path.read_text())
        if blob.get("schema") != CHECKPOINT_SCHEMA or blob.get("config_hash") != digest:
            raise ArgumentError(f"checkpoint {ck_path} was written for a different configuration; refusing to resume")
        scan.restore(blob["state"])
        log.info("resuming from n = %d", blob["last_n"])

    def save():
        blob = {
            "schema": CHECKPOINT_SCHEMA,
            "command": "run",
            "config": config,
            "config_hash": digest,
            "last_n": scan.next_lo - 1,
            "state": scan.state(),
        }
        atomic_write(ck_path, json.dumps(blob))

    stream = iter_gaps(x, start=scan.next_lo, prev=scan.prev, segment_size=args.segment_size, threads=args.threads)
    for item in stream:
        scan.feed(*item)
        if scan.done:
            break
        if ck_path:
            save()
        if args.stop_after is not None and scan.next_lo > parse_int(args.stop_after):
            log.warning("stopped after n = %d; resume with the same --checkpoint-file", scan.next_lo - 1)
            return None
    if ck_path and ck_path.exists():
        ck_path.unlink()
    return scan.table()


def _bias_csv(table, log10: bool) -> str:
    residues, r = table.rescaled_bias()
    head = ["x"] + (["log10_x"] if log10 else []) + [f"R_a{a}" for a in residues]
    lines = [",".join(head)]
    for x, row in zip(table.checkpoints, r.tolist()):
        cells = [str(x)] + ([_fmt(math.log10(x), 6)] if log10 else []) + [_fmt(v) for v in row]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    x = parse_int(args.x)
    if args.d < 2:
        raise ArgumentError(f"invalid modulus d={args.d}")
    table = _scan_with_checkpoints(args, x, args.d, _checkpoints(args), args.reversed)
    if table is None:
        return 0
    if args.format == "json":
        residues, r = table.rescaled_bias()
        doc = {
            "d": table.d,
            "reversed": table.reversed,
            "checkpoints": list(table.checkpoints),
            "phi": table.phi.tolist(),
            "rescaled_bias": {str(a): [None if math.isnan(v) else round(v, BIAS_PLACES) for v in r[:, i]] for i, a in enumerate(residues)},
        }
        if args.log10:
            doc["log10_x"] = [round(math.log10(x), 6) for x in table.checkpoints]
        with _output(args.out) as fh:
            fh.write(json.dumps(doc, indent=2) + "\n")
        return 0
    with _output(args.out) as fh:
        table.to_csv(fh)
    # the rescaled-bias CSV goes next to the main output; JSON carries both
    if args.out not in (None, "-"):
        out = Path(args.out)
        bias_path = out.with_name(out.stem + "_bias.csv")
        bias_path.write_text(_bias_csv(table, args.log10), encoding="utf-8")
    return 0


def cmd_race(args) -> int:
    x = parse_int(args.x)
    ca, cb = ResidueClass.of(args.a, args.d), ResidueClass.of(args.b, args.d)
    if not (ca.reduced and cb.reduced):
        raise ArgumentError(f"race residues must be reduced mod {args.d}")
    args.reversed = False
    table = _scan_with_checkpoints(args, x, args.d, _checkpoints(args), False)
    if table is None:
        return 0
    diff = (table.column(ca.a) - table.column(cb.a)).tolist()
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps({"d": args.d, "a": ca.a, "b": cb.a, "x": list(table.checkpoints), "race": diff}, indent=2) + "\n")
        else:
            fh.write("x,race\n")
            for xv, v in zip(table.checkpoints, diff):
                fh.write(f"{xv},{v}\n")
    return 0


# ---------------------------------------------------------------------------
# walk


def cmd_walk(args) -> int:
    n = parse_int(args.n)
    dmap = parse_direction_map(args.map) if args.map else DEFAULT_DIRECTIONS
    build = walk_path if args.mode == "walk" else run_path
    path = build(n, args.d, dmap, stride=args.stride)
    with _output(args.out) as fh:
        if args.format == "json":
            doc = {
                "mode": path.mode,
                "d": path.d,
                "n_max": n,
                "stride": args.stride,
                "final": list(path.final),
                "max_distance": path.max_distance,
                "rows": [[int(k), int(x), int(y)] for k, (x, y) in zip(path.n, path.xy)],
            }
            fh.write(json.dumps(doc) + "\n")
        else:
            path.to_csv(fh)
    log.info("final position %s, max distance %.1f", path.final, path.max_distance)
    return 0


# ---------------------------------------------------------------------------
# bias


def cmd_bias(args) -> int:
    specs = [s for s in args.Q.split(",") if s.strip()]
    vectors = [bias_mod.bias_vector(bias_mod.parse_modulus(s), args.d, args.method) for s in specs]
    with _output(args.out) as fh:
        if args.format == "json":
            docs = [v.to_dict(args.places) for v in vectors]
            fh.write(json.dumps(docs[0] if len(docs) == 1 else docs, indent=2) + "\n")
            return 0
        fh.write(",".join(["a"] + [f"Q={v.Q.label}" for v in vectors]) + "\n")
        for a in reduced_residues(args.d):
            if args.rational:
                cells = [bias_mod.rational_str(v[a]) for v in vectors]
            else:
                cells = [str(v.decimal(a, args.places)) for v in vectors]
            fh.write(",".join([str(a)] + cells) + "\n")
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    x = parse_int(args.x)
    model = cramer.CramerModel.from_modulus(bias_mod.parse_modulus(args.Q))
    stats = cramer.run_trials(x, model, args.d, args.a, args.trials, args.seed, args.threads)
    series = cramer.expected_phi_tilde(x, model, args.d, args.a, "series", args.eps)
    extra = {"series_expectation": series, "standard_error": stats.standard_error}
    if x >= 3:
        extra["asymptotic_expectation"] = cramer.expected_phi_tilde(x, model, args.d, args.a, "asymptotic")
    with _output(args.out) as fh:
        fh.write(cramer.stats_json(stats, x, model, args.d, args.a % args.d, args.seed, **extra))
    if args.trials_csv:
        Path(args.trials_csv).write_text(cramer.trials_csv(stats), encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="primerun", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scan_options(p):
        p.add_argument("--x", required=True, help="largest x, e.g. 1e8")
        p.add_argument("--checkpoints", help="comma-separated x values")
        p.add_argument("--grid", type=int, help="add this many log-spaced checkpoints")
        p.add_argument("--segment-size", type=int, default=DEFAULT_SEGMENT_SIZE)
        p.add_argument("--checkpoint-file", help="persist progress here and resume from it")
        p.add_argument("--stop-after", help="stop once the scan passes this n (leaves a checkpoint)")

    p = sub.add_parser("run", parents=[common], help="prime running functions at checkpoints")
    scan_options(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--reversed", action="store_true", help="count by the upper end of each gap")
    p.add_argument("--log10", action="store_true", help="add a log10_x column to the bias CSV (written next to --out)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("race", parents=[common], help="Phi(x;d,a) - Phi(x;d,b)")
    scan_options(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("walk", parents=[common], help="prime walk or prime run lattice path")
    p.add_argument("--mode", choices=["walk", "run"], default="walk")
    p.add_argument("--n", required=True)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--map", help='e.g. "1:down,2:left,3:up,4:right" (the default)')
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("bias", parents=[common], help="exact model bias constants R_Q(d;a)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--Q", required=True, help='sieve modulus: "30", "1000#", "9*10#"; comma-separate for several')
    p.add_argument("--method", choices=["auto", "brute", "recursion"], default="auto")
    p.add_argument("--places", type=int, default=4)
    p.add_argument("--rational", action="store_true", help="CSV cells as exact n/m")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo of the sieved Cramer model")
    p.add_argument("--Q", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--eps", type=float, default=cramer.DEFAULT_EPS)
    p.add_argument("--trials-csv", help="also write per-trial values here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ArgumentError as exc:
        print(f"primerun: error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"primerun: resource error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"primerun: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
