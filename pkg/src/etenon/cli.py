"""Command-line front end.

Subcommands cover the deployment lifecycle: ``setup`` mints parameters,
``keygen`` issues a key bundle, ``ingest`` pushes a signed batch through
the verification gate, ``retrieve`` runs the full fetch-verify-decrypt
path, ``shuffle`` permutes the open table, ``run-scenario`` drives a
whole configured multi-party run, and ``bench`` times the primitives on
a (levels, leaves, signers) grid while checking the operation counts
against the scheme's cost model.

Everything speaks JSON on disk and on stdout; failures print a
machine-readable error object to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
import time

from . import mlabe, musig, policy, tdb, workflow
from .algebra import G0Element, get_suite
from .errors import EtenonError


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: str, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _rng(args):
    return random.Random(args.seed) if args.seed is not None else None


# ----------------------------------------------------------------------
# subcommands


def cmd_setup(args) -> int:
    suite = get_suite(args.suite)
    pp, msk = mlabe.setup(suite, _rng(args))
    _write_json(args.pp, mlabe.pp_to_json(pp))
    _write_json(args.msk, mlabe.msk_to_json(suite, msk))
    _emit({"suite": suite.name, "pp": args.pp, "msk": args.msk})
    return 0


def cmd_keygen(args) -> int:
    pp = mlabe.pp_from_json(_load_json(args.pp))
    _, msk = mlabe.msk_from_json(_load_json(args.msk), pp.suite)
    bundle = mlabe.keygen(pp, msk, args.attr, _rng(args))
    _write_json(args.out, mlabe.key_to_json(pp.suite, bundle))
    _emit({"attrs": sorted(args.attr), "out": args.out})
    return 0


def cmd_ingest(args) -> int:
    pp = mlabe.pp_from_json(_load_json(args.pp))
    db = tdb.TenonDb(pp, root=args.db)
    batch = _load_json(args.batch)
    rows = [tdb.row_from_json(pp.suite, r) for r in batch.get("rows", [])]
    secret = (
        tdb.secret_from_json(pp.suite, batch["secret"])
        if batch.get("secret")
        else None
    )
    rosters = tdb.rosters_from_json(pp.suite, batch.get("rosters") or {})
    result = db.ingest(rows, secret, rosters=rosters, rng=_rng(args))
    if result.accepted:
        db.save_snapshot()
    _emit(
        {
            "accepted": result.accepted,
            "reason": result.reason,
            "rows": len(db.read_open()),
            "secrets": len(db.secret_ids()),
        }
    )
    return 0 if result.accepted else 1


def cmd_retrieve(args) -> int:
    pp = mlabe.pp_from_json(_load_json(args.pp))
    _, bundle = mlabe.key_from_json(_load_json(args.key), pp.suite)
    db = tdb.TenonDb(pp, root=args.db)
    report = workflow.retrieve_entry(pp, db, bundle, args.entry, args.label)
    _emit(workflow.report_to_json(report))
    return 0 if report.entry_sig_ok else 1


def cmd_shuffle(args) -> int:
    pp = mlabe.pp_from_json(_load_json(args.pp))
    db = tdb.TenonDb(pp, root=args.db)
    before = db.order_digest().hex()
    db.shuffle(_rng(args))
    db.save_snapshot()
    _emit({"rows": len(db.read_open()), "before": before, "after": db.order_digest().hex()})
    return 0


def cmd_run_scenario(args) -> int:
    doc = _load_json(args.scenario)
    result = workflow.run_scenario(doc, db_root=args.db, emit_dir=args.db)
    if args.out:
        _write_json(args.out, result)
    _emit(result)
    return 0


# ----------------------------------------------------------------------
# benchmark


class BenchError(EtenonError):
    """An operation count disagreed with the cost model."""


def _bench_policy(k: int, l: int) -> str:
    lines = ["level %d requires [%d]" % (i, i) for i in range(1, k + 1)]
    lines.append("tree: " + ", ".join("attr:a%d" % i for i in range(1, l + 1)))
    return "\n".join(lines)


def _expect(label: str, got: int, want: int) -> None:
    if got != want:
        raise BenchError("%s: counted %d, cost model says %d" % (label, got, want))


def bench_abe(suite, k: int, l: int, trials: int, rng) -> dict:
    """Encrypt/decrypt timings and counts for k levels over l leaves."""
    tree = policy.parse_policy(_bench_policy(k, l))
    pp, msk = mlabe.setup(suite, rng)
    payloads = {
        level: bytes([1]) + bytes(16 * [level % 256]) for level in range(1, k + 1)
    }
    bundle = mlabe.keygen(pp, msk, ["a%d" % i for i in range(1, l + 1)], rng)

    enc_times, dec_times = [], []
    enc_span = dec_span = None
    ct = None
    for _ in range(trials):
        with suite.measure() as enc_span:
            t0 = time.perf_counter()
            ct = mlabe.encrypt(pp, payloads, tree, rng)
            enc_times.append(time.perf_counter() - t0)
        with suite.measure() as dec_span:
            t0 = time.perf_counter()
            out = mlabe.decrypt(pp, ct, bundle.decryption)
            dec_times.append(time.perf_counter() - t0)
        if out != payloads:
            raise BenchError("round trip failed at k=%d l=%d" % (k, l))

    elems = mlabe.element_count(ct)
    _expect("ciphertext elements", elems, 2 * (k + l))
    _expect("encryption exponentiations", enc_span.exponentiations, 2 * (k + l))
    _expect("encryption multiplications", enc_span.multiplications, k)
    return {
        "k": k,
        "l": l,
        "elements": elems,
        "enc_exp": enc_span.exponentiations,
        "enc_mul": enc_span.multiplications,
        "enc_ms": 1000 * sum(enc_times) / len(enc_times),
        "dec_pair": dec_span.pairings,
        "dec_ms": 1000 * sum(dec_times) / len(dec_times),
    }


def bench_musig(suite, n: int, trials: int, rng) -> dict:
    """Co-signing and verification for an n-party roster."""
    msg = b"benchmark message"
    sign_times, verify_times = [], []
    span = None
    for _ in range(trials):
        # distinct keys; the tiny mock order can repeat draws
        keys: list[int] = []
        while len(keys) < n:
            k = suite.rand_scalar_nonzero(rng)
            if k not in keys:
                keys.append(k)
        t0 = time.perf_counter()
        sig, roster = musig.cosign(suite, keys, msg, rng)
        sign_times.append(time.perf_counter() - t0)
        if not (isinstance(sig.rc, G0Element) and isinstance(sig.s, int)):
            raise BenchError("signature is not one group element plus one scalar")
        with suite.measure() as span:
            t0 = time.perf_counter()
            ok = musig.verify(suite, sig, roster, msg)
            verify_times.append(time.perf_counter() - t0)
        if not ok:
            raise BenchError("verification failed at n=%d" % n)
    _expect("verification exponentiations", span.exponentiations, n + 1)
    return {
        "n": n,
        "verify_exp": span.exponentiations,
        "verify_hashes": span.hash_calls,
        "sign_ms": 1000 * sum(sign_times) / len(sign_times),
        "verify_ms": 1000 * sum(verify_times) / len(verify_times),
    }


def _print_table(rows, columns) -> None:
    rendered = [
        [fmt % r[name] if name in r else "" for name, fmt in columns] for r in rows
    ]
    widths = [
        max(len(name), *(len(row[i]) for row in rendered))
        for i, (name, _fmt) in enumerate(columns)
    ]
    header = "  ".join(name.rjust(w) for (name, _), w in zip(columns, widths))
    print(header)
    print("-" * len(header))
    for row in rendered:
        print("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))


def cmd_bench(args) -> int:
    suite = get_suite(args.suite)
    rng = _rng(args)
    levels = [int(x) for x in args.levels.split(",")]
    leaves = [int(x) for x in args.leaves.split(",")]
    signers = [int(x) for x in args.signers.split(",")]

    abe_rows = []
    for k in levels:
        for l in leaves:
            if l < k:
                continue
            abe_rows.append(bench_abe(suite, k, l, args.trials, rng))
    sig_rows = [bench_musig(suite, n, args.trials, rng) for n in signers]

    print("suite: %s, trials per cell: %d" % (suite.name, args.trials))
    print()
    _print_table(
        abe_rows,
        [
            ("k", "%d"),
            ("l", "%d"),
            ("elements", "%d"),
            ("enc_exp", "%d"),
            ("enc_mul", "%d"),
            ("enc_ms", "%.2f"),
            ("dec_pair", "%d"),
            ("dec_ms", "%.2f"),
        ],
    )
    print()
    _print_table(
        sig_rows,
        [
            ("n", "%d"),
            ("verify_exp", "%d"),
            ("verify_hashes", "%d"),
            ("sign_ms", "%.2f"),
            ("verify_ms", "%.2f"),
        ],
    )
    print()
    print(
        "counts hold: elements = 2(k+l), encrypt = 2(k+l) exp + k mask mul,"
        " verify = n+1 exp"
    )

    if args.csv:
        fields = [
            "kind", "k", "l", "n", "elements", "enc_exp", "enc_mul", "enc_ms",
            "dec_pair", "dec_ms", "verify_exp", "verify_hashes", "sign_ms",
            "verify_ms",
        ]
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for r in abe_rows:
                writer.writerow({"kind": "abe", **r})
            for r in sig_rows:
                writer.writerow({"kind": "musig", **r})
        print("wrote %s" % args.csv)
    return 0


# ----------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etenon",
        description="Levelled EHR sharing: sealed chain heads, open shuffled blocks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", help="mint public parameters and the master key")
    p.add_argument("--suite", default="bn256", help="bn256, mock, or mock-<prime>")
    p.add_argument("--pp", required=True, help="where to write the public parameters")
    p.add_argument("--msk", required=True, help="where to write the master key")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("keygen", help="issue a decryption and signing bundle")
    p.add_argument("--pp", required=True)
    p.add_argument("--msk", required=True)
    p.add_argument(
        "--attr", action="append", required=True, help="attribute (repeatable)"
    )
    p.add_argument("--out", required=True, help="where to write the key bundle")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("ingest", help="push a signed batch through the gate")
    p.add_argument("--pp", required=True)
    p.add_argument("--db", required=True, help="store directory")
    p.add_argument("--batch", required=True, help="JSON with rows, secret, rosters")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("retrieve", help="fetch, verify and decrypt one entry")
    p.add_argument("--pp", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--key", required=True, help="key bundle JSON")
    p.add_argument("--entry", required=True, help="secret entry id")
    p.add_argument("--label", default="clinical", help="access label to present")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("shuffle", help="re-permute the open table")
    p.add_argument("--pp", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_shuffle)

    p = sub.add_parser("run-scenario", help="drive a configured multi-party run")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--db", default=None, help="persist the store here")
    p.add_argument("--out", default=None, help="also write the summary here")
    p.set_defaults(func=cmd_run_scenario)

    p = sub.add_parser("bench", help="time the primitives and check op counts")
    p.add_argument("--suite", default="mock")
    p.add_argument("--levels", default="1,2,3,4,5", help="comma-separated k values")
    p.add_argument("--leaves", default="2,4,6,8,10", help="comma-separated l values")
    p.add_argument("--signers", default="1,2,3,5", help="comma-separated n values")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--csv", default=None, help="also write the grid as CSV")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EtenonError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
