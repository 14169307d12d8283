"""Command-line front end: ``kent <subcommand> [options]``.

Exit status is 0 on success, 1 when a computation fails on its inputs (the
error class name is printed), and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .database import augment_db, build_db, load_db, now_utc, reproducible_utc, save_db
from .errors import InvalidParameter, KentError
from .linalg import projector
from .measures import BenchmarkRow, measure_tuple, negativity_benchmark, e_w_k, e_w_subpartition, as_density
from .partitions import as_partition
from .scan import MeasureSpec, ScanSpec, curve, curve_csv, parse_grid, threshold_bisect
from .sepeig import GConfig, g_partition, g_pure_bipartite_oracle
from .states import NoisyFamily, family_state, named_pure, parse_family, random_density
from .textio import format_matrix, read_matrix

DB_DIR_ENV = "KENT_DB_DIR"


def db_path(path: str) -> Path:
    """Relative database paths resolve against ``$KENT_DB_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get(DB_DIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def _workers(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


def _load_state(spec: str) -> np.ndarray:
    if spec.startswith("family:"):
        return family_state(parse_family(spec))
    M = read_matrix(spec)
    return projector(M / np.linalg.norm(M)) if M.ndim == 1 else M


def _fmt_result(r) -> str:
    label = f"E(k={r.k}, {r.partition_context})"
    who = "none" if r.best_witness_id is None else f"record {r.best_witness_id} via {r.best_partition}"
    return f"{label} = {r.value:.12g}  margin {r.margin:+.6e}  witness {who}"


def cmd_gen_db(args) -> int:
    cfg = GConfig(
        tol=args.tol, max_sweeps=args.max_sweeps, restarts=args.restarts, restarts_hard=args.restarts_hard,
        seed=args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % 2**63),
    )
    stamp = reproducible_utc() if args.seed is not None else now_utc()
    db = build_db(args.qubits, args.count, cfg, workers=_workers(args), created_utc=stamp)
    if args.seed_state:
        db = augment_db(db, [projector(named_pure(s, args.qubits)) for s in args.seed_state], workers=_workers(args))
    out = db_path(args.out)
    save_db(db, out)
    h = db.header
    print(f"wrote {out}: {len(db)} records, {h.n_qubits} qubits, {len(db.keys)} partitions, master seed {h.master_seed}")
    return 0


def cmd_g_eval(args) -> int:
    L = read_matrix(args.input)
    if L.ndim == 1:
        L = projector(L / np.linalg.norm(L))
    n = int(round(np.log2(L.shape[0])))
    P = as_partition(args.partition, n)
    cfg = GConfig(restarts=args.restarts, restarts_hard=args.restarts, seed=args.seed)
    res = g_partition(L, n, P, cfg)
    print(f"g({P.key}) = {res.value:.12g}")
    if args.oracle:
        vals, vecs = np.linalg.eigh((L + L.conj().T) / 2)
        pure = vals[-1] > 0 and np.allclose(vals[:-1], 0, atol=1e-9) and abs(vals[-1] - 1) < 1e-9
        if pure and P.k == 2:
            print(f"oracle = {g_pure_bipartite_oracle(vecs[:, -1], P):.12g}")
        else:
            print("oracle = n/a (needs a rank-one projector and a bipartition)")
    return 0


def cmd_measure(args) -> int:
    db = load_db(db_path(args.db))
    rho = as_density(_load_state(args.state), db.dim)
    if args.k is not None:
        if args.partition:
            results = [e_w_subpartition(rho, db, args.partition, args.k)]
        else:
            results = [e_w_k(rho, db, args.k)]
    else:
        results = measure_tuple(rho, db, args.partition)
    for r in results:
        print(_fmt_result(r))
    if args.json:
        print(json.dumps([r.to_dict() for r in results]))
    return 0


def _family(args, db) -> NoisyFamily:
    if "n=" in args.family:
        return parse_family(args.family)
    return parse_family(f"{args.family},n={args.qubits or db.n}")


def cmd_scan(args) -> int:
    db = load_db(db_path(args.db))
    try:
        lo, hi = (float(x) for x in args.bracket.split(":"))
    except ValueError:
        raise InvalidParameter(f"bad bracket {args.bracket!r}") from None
    spec = ScanSpec(_family(args, db), db, args.k, args.partition, (lo, hi), args.ptol)
    (low, high), iters = threshold_bisect(spec)
    print(f"{spec.family.label} {spec.measure.label}: onset in [{low:.10f}, {high:.10f}] after {iters} bisections")
    return 0


def cmd_curve(args) -> int:
    db = load_db(db_path(args.db))
    fam = _family(args, db)
    base = db.n if args.partition is None else as_partition(args.partition, db.n).k
    ks = [int(k) for k in args.k.split(",")] if args.k else list(range(base, 1, -1))
    measures = [MeasureSpec.of(k, args.partition) for k in ks]
    text = curve_csv(curve(fam, measures, db, parse_grid(args.grid)), measures)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def format_bench(rows: list[BenchmarkRow]) -> str:
    head = f"{'Quantity':>8} | {'Neg ent':>7} | {'Neg sep':>7} | {'Ew ent':>7} | {'Ew sep':>7} | {'Detection error':>15} | {'Disagreement':>12}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.samples:>8} | {r.negativity_entangled:>7} | {r.negativity_separable:>7} | {r.measure_entangled:>7} | "
            f"{r.measure_separable:>7} | {100 * r.detection_error:>14.2f}% | {100 * r.disagreement:>11.2f}%"
        )
    return "\n".join(lines)


def cmd_neg_bench(args) -> int:
    db = load_db(db_path(args.db))
    rows = []
    for m in (int(x) for x in args.samples.split(",")):
        rng = np.random.default_rng([args.seed, m])
        rows.append(negativity_benchmark([random_density(2, seed=rng) for _ in range(m)], db))
    print(format_bench(rows))
    return 0


def cmd_state(args) -> int:
    if args.family:
        M = family_state(parse_family(args.family))
        sys.stdout.write(format_matrix(M))
        return 0
    psi = named_pure(args.name, args.qubits)
    if args.matrix:
        sys.stdout.write(format_matrix(projector(psi)))
    else:
        lines = [str(psi.shape[0])] + ["%.17g %.17g" % (z.real, z.imag) for z in psi]
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kent", description="Witness-database k-entanglement measures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker cap (default: all cores)")

    p = sub.add_parser("gen-db", parents=[common], help="sample contractions and store their g-profiles")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float, default=GConfig.tol)
    p.add_argument("--max-sweeps", type=int, default=GConfig.max_sweeps)
    p.add_argument("--restarts", type=int, default=GConfig.restarts)
    p.add_argument("--restarts-hard", type=int, default=GConfig.restarts_hard)
    p.add_argument("--seed-state", action="append", default=[], metavar="NAME",
                   help="also store the projector onto a named state (repeatable)")
    p.set_defaults(func=cmd_gen_db)

    p = sub.add_parser("g-eval", parents=[common], help="separability eigenvalue of one operator")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--restarts", type=int, default=GConfig.restarts_hard)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_g_eval)

    p = sub.add_parser("measure", parents=[common], help="evaluate measures of a state")
    p.add_argument("--db", required=True)
    p.add_argument("--state", required=True, help="matrix file or family:<name>,n=<int>,p=<float>")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--partition", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("scan", parents=[common], help="bisect the detection onset of a noisy family")
    p.add_argument("--db", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--partition", default=None)
    p.add_argument("--ptol", type=float, default=1e-7)
    p.add_argument("--bracket", default="0:1")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("curve", parents=[common], help="write measure-vs-p curves as CSV")
    p.add_argument("--db", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--grid", default="0:1:0.01")
    p.add_argument("--k", default=None, help="comma list of block counts (default: all)")
    p.add_argument("--partition", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("neg-bench", parents=[common], help="compare detection with negativity on random 2-qubit states")
    p.add_argument("--db", required=True)
    p.add_argument("--samples", default="1000", help="comma list of sample sizes")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_neg_bench)

    p = sub.add_parser("state", parents=[common], help="print a named state or family member")
    p.add_argument("--name", default="ghz")
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--matrix", action="store_true", help="print the projector instead of amplitudes")
    p.add_argument("--family", default=None, help="family:<name>,n=<int>,p=<float>")
    p.set_defaults(func=cmd_state)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        parser.print_usage(sys.stderr)
        print("kent: error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except KentError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
