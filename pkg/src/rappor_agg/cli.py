"""Command-line pipeline: generate corpora, build the store, analyze, eval.

Exit codes: 0 success, 1 analysis/ingest failure, 2 usage error. Every
subcommand is deterministic given its flags; all randomness funnels through
--seed.
"""

import argparse
import csv
import sys
from pathlib import Path

from . import kernels
from .analysis import analyze_batch, run_experiment, write_results_csv
from .client import EncodingParams
from .constants import REFERENCE_WEIGHTS_K32, build_constant_table, verify_constant_rule
from .fleet import (
    CorpusParseError,
    FleetConfig,
    exponential_distribution,
    generate_corpus,
    read_csv,
    strip_labels,
    write_csv,
)
from .store import CentralStore, StoreParseError

_TRAIN_SEED_TAG = 101
_TEST_SEED_TAG = 202

DEFAULT_SAMPLE_SIZES = "100,1000,10000,20000,25000"


class _UsageError(Exception):
    """Semantically invalid flags; reported with exit code 2."""


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("encoding parameters")
    group.add_argument("--k", type=int, default=32, help="bitset width (default 32)")
    group.add_argument("--h", type=int, default=2, help="bloom hash count (default 2)")
    group.add_argument("--m", type=int, default=64, help="cohort count (default 64)")
    group.add_argument("--f", type=float, default=0.5, help="permanent noise fraction (default 0.5)")
    group.add_argument("--p", type=float, default=0.5, help="IRR probability for 0-bits (default 0.5)")
    group.add_argument("--q", type=float, default=0.75, help="IRR probability for 1-bits (default 0.75)")


def _add_value_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-values", type=int, default=10, help="distinct true values v1..vN (default 10)")
    parser.add_argument("--rate", type=float, default=0.5, help="exponential decay of the value distribution (default 0.5)")


def _params_from(args: argparse.Namespace) -> EncodingParams:
    return EncodingParams(k=args.k, h=args.h, m=args.m, f=args.f, p=args.p, q=args.q)


def _fleet_config(n: int, args: argparse.Namespace, seed: int, params: EncodingParams) -> FleetConfig:
    if args.n_values < 1:
        raise _UsageError(f"--n-values must be >= 1, got {args.n_values}")
    if args.rate <= 0:
        raise _UsageError(f"--rate must be positive, got {args.rate}")
    values = tuple(f"v{i}" for i in range(1, args.n_values + 1))
    distribution = tuple(exponential_distribution(args.n_values, args.rate))
    return FleetConfig(n_clients=n, values=values, distribution=distribution, seed=seed, params=params)


def cmd_generate(args: argparse.Namespace, params: EncodingParams) -> int:
    if args.n < 1:
        raise _UsageError(f"--n must be >= 1, got {args.n}")
    config = _fleet_config(args.n, args, args.seed, params)
    reports = generate_corpus(config)
    if args.unlabeled:
        reports = strip_labels(reports)
    write_csv(reports, args.out, params)
    print(f"wrote {len(reports)} reports to {args.out}")
    return 0


def cmd_build_db(args: argparse.Namespace, params: EncodingParams) -> int:
    reports = read_csv(args.input, params)
    if reports and reports[0].true_value is None:
        raise ValueError("line 1: corpus has no true_value column; training needs labeled reports")
    table = build_constant_table(params.k)
    store = CentralStore.new(params)
    store.ingest_many(reports, table)
    store.save(args.out)
    print(f"ingested {len(reports)} reports into {args.out} ({len(store.entries)} distinct keys)")
    return 0


def cmd_analyze(args: argparse.Namespace, params: EncodingParams) -> int:
    store = CentralStore.load(args.db, params)
    reports = read_csv(args.input, params)
    if not reports:
        raise _UsageError("cannot analyze an empty batch")
    if args.strip_labels:
        reports = strip_labels(reports)
    table = build_constant_table(params.k)
    result = analyze_batch(reports, store, table)
    print(f"sample_size   {result.sample_size}")
    print(f"matched       {result.matched}")
    print(f"major_value   {result.major_value or '(none)'}")
    print(f"achievement   {result.achievement_pct:.2f}%")
    for label in sorted(result.credits):
        print(f"  credit {label}: {result.credits[label]}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["label", "credits"])
            for label in sorted(result.credits):
                writer.writerow([label, str(result.credits[label])])
        print(f"wrote credits to {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace, params: EncodingParams) -> int:
    if args.tests < 1:
        raise _UsageError(f"--tests must be >= 1, got {args.tests}")
    if args.batch < 1:
        raise _UsageError(f"--batch must be >= 1, got {args.batch}")
    if args.train_n < 1 or args.test_n < 1:
        raise _UsageError("--train-n and --test-n must be >= 1")
    if args.batch > args.test_n:
        raise _UsageError(f"--batch {args.batch} exceeds --test-n {args.test_n}")
    train = _fleet_config(args.train_n, args, kernels.derive_seed(args.seed, _TRAIN_SEED_TAG), params)
    test = _fleet_config(args.test_n, args, kernels.derive_seed(args.seed, _TEST_SEED_TAG), params)
    rows = run_experiment(train, test, args.tests, args.batch)
    write_results_csv(rows, args.out)
    correct = sum(r.detected_correctly for r in rows)
    mean_achievement = sum(r.achievement_pct for r in rows) / len(rows)
    for row in rows:
        flag = "ok" if row.detected_correctly else "MISS"
        print(
            f"test {row.test_no:3d}  major={row.major_true_value or '(none)':6s} "
            f"truth={row.ground_truth_major:6s} achievement={row.achievement_pct:6.2f}%  {flag}"
        )
    print(f"detected {correct}/{len(rows)} majors, mean achievement {mean_achievement:.2f}%")
    print(f"wrote results to {args.out}")
    return 0 if correct == len(rows) else 1


def cmd_verify_constants(args: argparse.Namespace, params: EncodingParams) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise _UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 1:
        raise _UsageError(f"--sizes must be positive integers, got {args.sizes!r}")
    if max(sizes) > args.n:
        raise _UsageError(f"corpus of {args.n} reports is smaller than requested size {max(sizes)}")
    table = build_constant_table(params.k)
    failed = False
    if params.k == 32:
        print("count  computed      reference     |delta|")
        max_delta = 0.0
        for c, reference in sorted(REFERENCE_WEIGHTS_K32.items()):
            delta = abs(table.constant_for_count(c) - reference)
            max_delta = max(max_delta, delta)
            print(f"{c:5d}  {table.constant_for_count(c):.8f}    {reference:<10g}    {delta:.2e}")
        print(f"reference table max |delta| = {max_delta:.2e}")
        failed = failed or max_delta >= 1e-4
    corpus = generate_corpus(FleetConfig(n_clients=args.n, seed=args.seed, params=params))
    checks = verify_constant_rule(corpus, sizes, table, seed=args.seed)
    worst = max(check.max_relative_deviation for check in checks)
    print(f"sampling rule over sizes {sizes}:")
    for check in checks:
        print(f"  count {check.count:2d}: max relative deviation {check.max_relative_deviation:.3e}")
    print(f"worst deviation {worst:.3e} (tolerance {args.tol:g})")
    failed = failed or worst >= args.tol
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rappor-agg",
        description="Privacy-preserving report aggregation: RAPPOR encoding, "
        "weighted-sum store, majority analysis.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="generate a seeded report corpus CSV")
    gen.add_argument("--n", type=int, required=True, help="number of clients")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="corpus CSV destination")
    gen.add_argument("--unlabeled", action="store_true", help="omit the true_value column")
    _add_value_flags(gen)
    _add_param_flags(gen)
    gen.set_defaults(func=cmd_generate)

    build = sub.add_parser("build-db", help="ingest a labeled corpus into a store file")
    build.add_argument("--in", dest="input", required=True, help="labeled corpus CSV")
    build.add_argument("--out", required=True, help="store file destination")
    _add_param_flags(build)
    build.set_defaults(func=cmd_build_db)

    analyze = sub.add_parser("analyze", help="match a test batch against a store")
    analyze.add_argument("--in", dest="input", required=True, help="test corpus CSV")
    analyze.add_argument("--db", required=True, help="store file")
    analyze.add_argument("--out", default=None, help="optional per-label credits CSV")
    analyze.add_argument("--strip-labels", action="store_true", help="drop labels before matching")
    _add_param_flags(analyze)
    analyze.set_defaults(func=cmd_analyze)

    ev = sub.add_parser("eval", help="train once, score seeded test batches")
    ev.add_argument("--train-n", type=int, default=25000, help="training corpus size (default 25000)")
    ev.add_argument("--test-n", type=int, default=25000, help="test corpus size (default 25000)")
    ev.add_argument("--tests", type=int, default=40, help="number of test batches (default 40)")
    ev.add_argument("--batch", type=int, default=1000, help="reports per batch (default 1000)")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True, help="results CSV destination")
    _add_value_flags(ev)
    _add_param_flags(ev)
    ev.set_defaults(func=cmd_eval)

    verify = sub.add_parser("verify-constants", help="audit the constant table and sampling rule")
    verify.add_argument("--n", type=int, default=25000, help="audit corpus size (default 25000)")
    verify.add_argument("--sizes", default=DEFAULT_SAMPLE_SIZES, help=f"comma-separated subsample sizes (default {DEFAULT_SAMPLE_SIZES})")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--tol", type=float, default=1e-9, help="deviation tolerance (default 1e-9)")
    _add_param_flags(verify)
    verify.set_defaults(func=cmd_verify_constants)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        params = _params_from(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args, params)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusParseError, StoreParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
