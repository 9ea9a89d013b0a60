"""Command-line entry point ``bnidentity``.

Exit codes: 0 when a result was produced, 1 for usage errors, 2 for data
errors (bad files, invalid models, failed preconditions).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

from . import fileio
from .bn_core import DenseDistribution, SampleSet, empirical_counts, joint_distribution, sample
from .decomposition import decompose, neighborhood_factorization
from .divergences import DivergenceKind, all_divergences
from .errors import BNIdentityError
from .gof_product import GofConfig, ThresholdMode, gof_product
from .harness import ExperimentSpec, run_experiment
from .subtest import SubtestConfig, hellinger_subtest
from .testers import TesterConfig, Verdict, test_known_structure, test_two_trees, test_unknown_structure
from .tree_order import order_two_trees

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, header, rows) -> None:
    out = fileio.open_output(args.out)
    try:
        fileio.write_csv(header, rows, out)
    finally:
        if out is not sys.stdout:
            out.close()


def _distribution(path: str) -> DenseDistribution:
    if path.endswith(".json"):
        return joint_distribution(fileio.load_model(path))
    vec = fileio.read_vector(path)
    return DenseDistribution((0,), (vec.size,), vec)


def cmd_sample(args) -> None:
    net = fileio.load_model(args.model)
    samples = sample(net, args.count, args.seed)
    out = fileio.open_output(args.out)
    try:
        fileio.write_samples(samples, net.dag.names(), out)
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_divergence(args) -> None:
    values = all_divergences(_distribution(args.p), _distribution(args.q))
    _emit(args, ("divergence", "value"), [(k.value, values[k].value) for k in DivergenceKind])


def cmd_verify(args) -> None:
    net_p, net_q = fileio.load_model(args.model_p), fileio.load_model(args.model_q)
    fact = fileio.read_factorization(args.partition) if args.partition else neighborhood_factorization(net_p.dag)
    report = decompose(joint_distribution(net_p), joint_distribution(net_q), fact)
    rows = [
        ("term", i, blk.members, blk.conditioning, report.terms[i])
        for i, blk in enumerate(fact.blocks)
    ]
    rows += [
        ("total_h_sq", "", "", "", report.total_h_sq),
        ("term_sum", "", "", "", report.term_sum),
        ("slack", "", "", "", report.slack),
        ("argmax_block", report.argmax_block, "", "", report.terms[report.argmax_block]),
        ("total_tv", "", "", "", report.total_tv),
        ("tv_bound", "", "", "", report.tv_bound),
    ]
    _emit(args, ("row", "block", "members", "conditioning", "value"), rows)


def cmd_order(args) -> None:
    tp, tq = fileio.read_tree(args.tree_p), fileio.read_tree(args.tree_q)
    result = order_two_trees(tp, tq, check_invariant=args.check)
    rows = [
        (i, v, result.dep_sets_p[i], result.dep_sets_q[i], result.pi_sets[i], len(result.pi_sets[i]))
        for i, v in enumerate(result.order)
    ]
    _emit(args, ("position", "node", "dep_p", "dep_q", "pi", "pi_size"), rows)


def _paired_samples(path_p: str, path_q: str, arity: int | None) -> tuple[SampleSet, SampleSet]:
    _, a = fileio.read_sample_table(path_p)
    _, b = fileio.read_sample_table(path_q)
    arities = fileio.infer_arities(a, b) if arity is None else (arity,) * a.shape[1]
    return SampleSet(a, arities), SampleSet(b, arities)


def cmd_subtest(args) -> None:
    a, b = _paired_samples(args.a, args.b, args.arity)
    subset = tuple(range(a.cols))
    config = SubtestConfig(
        eps_sq=args.eps**2, eta=args.eta, permutations=args.permutations,
        sample_budget=args.budget, calibration_seed=args.seed,
    )
    v = hellinger_subtest(empirical_counts(a, subset), empirical_counts(b, subset), config)
    _emit(
        args,
        ("decision", "statistic", "threshold", "pvalue", "samples_a", "samples_b", "recommended"),
        [(v.decision, v.statistic, v.threshold, v.pvalue, v.samples_a, v.samples_b, v.recommended)],
    )


def _tester_config(args) -> TesterConfig:
    return TesterConfig(
        permutations=args.permutations, constant=args.constant, seed=args.seed,
        sample_budget=args.budget, max_subtests=args.max_subtests, truncate=args.truncate,
    )


def _emit_verdict(args, verdict: Verdict) -> None:
    header = (
        "kind", "subset", "domain_size", "statistic", "threshold", "pvalue",
        "decision", "undersampled", "samples_used", "complete",
    )
    rows = [
        ("subtest", r.subset, r.domain_size, r.statistic, r.threshold, r.pvalue, r.decision, r.undersampled, "", "")
        for r in verdict.subtest_log
    ]
    rows.append(
        ("summary", verdict.witness, "", "", "", "", verdict.decision, "", verdict.samples_used, verdict.complete)
    )
    _emit(args, header, rows)


def cmd_test_known(args) -> None:
    dag = fileio.load_dag(args.dag)
    p, q = _paired_samples(args.p_samples, args.q_samples, args.arity)
    _emit_verdict(args, test_known_structure(p, q, dag, args.eps, _tester_config(args)))


def cmd_test_unknown(args) -> None:
    p, q = _paired_samples(args.p_samples, args.q_samples, args.arity)
    _emit_verdict(args, test_unknown_structure(p, q, args.max_indegree, args.eps, _tester_config(args)))


def cmd_test_trees(args) -> None:
    p, q = _paired_samples(args.p_samples, args.q_samples, args.arity)
    _emit_verdict(args, test_two_trees(p, q, args.eps, _tester_config(args)))


def cmd_gof(args) -> None:
    q = fileio.read_means(args.q)
    _, data = fileio.read_sample_table(args.p_samples)
    mode = ThresholdMode.CHEBYSHEV if args.mode == "chebyshev" else ThresholdMode.MONTE_CARLO_NULL
    config = GofConfig(
        eps=args.eps, c=args.c, c_prime=args.c_prime, seed=args.seed,
        threshold_mode=mode, null_replicas=args.null_replicas,
    )
    v = gof_product(SampleSet(data, (2,) * data.shape[1]), q, config)
    _emit(
        args,
        ("decision", "statistic", "threshold", "m", "eps_prime", "truncated", "flipped", "samples_used", "mode"),
        [(v.decision, v.statistic, v.threshold, v.m, v.eps_prime, v.truncated, v.flipped, v.samples_used, v.mode)],
    )


def cmd_experiment(args) -> None:
    with open(args.config, encoding="utf-8") as fh:
        doc = json.load(fh)
    doc["seed"] = args.seed if args.seed is not None else doc.get("seed", 0)
    if args.trials is not None:
        doc["trials"] = args.trials
    doc["output"] = None
    spec = ExperimentSpec(**doc)
    result = run_experiment(spec, workers=args.workers)
    text = result.csv()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnidentity", description="Hellinger localization and identity testing for Bayes nets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text, seed_default: int | None = 0):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=["csv"], default="csv")
        p.set_defaults(func=func)
        return p

    def tester_flags(p):
        p.add_argument("--p-samples", required=True)
        p.add_argument("--q-samples", required=True)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--arity", type=int, default=None, help="alphabet size (default: inferred)")
        p.add_argument("--permutations", type=int, default=200)
        p.add_argument("--constant", type=float, default=20.0)
        p.add_argument("--budget", type=int, default=None, help="override the recommended per-subtest sample size")
        p.add_argument("--max-subtests", type=int, default=1_000_000)
        p.add_argument("--truncate", action="store_true", help="run a prefix of the subsets instead of failing")

    p = command("sample", cmd_sample, "draw samples from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)

    p = command("divergence", cmd_divergence, "H^2, TV, KL and chi^2 between two models or vectors")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)

    p = command("verify-subadditivity", cmd_verify, "per-block H^2 terms against the exact joint value")
    p.add_argument("--model-p", required=True)
    p.add_argument("--model-q", required=True)
    p.add_argument("--partition", default=None)

    p = command("order-trees", cmd_order, "ordering with small dependent sets for two trees")
    p.add_argument("--tree-p", required=True)
    p.add_argument("--tree-q", required=True)
    p.add_argument("--check", action="store_true", help="re-verify the boundary invariant after each pick")

    p = command("subtest", cmd_subtest, "two-sample Hellinger closeness test")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--eps", type=float, required=True, help="detect H^2 >= eps^2")
    p.add_argument("--eta", type=float, default=1 / 3)
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--budget", type=int, default=None)

    p = command("test-known", cmd_test_known, "identity test on a known DAG")
    p.add_argument("--dag", required=True)
    tester_flags(p)

    p = command("test-unknown", cmd_test_unknown, "identity test on an unknown DAG of bounded in-degree")
    p.add_argument("--max-indegree", type=int, required=True)
    tester_flags(p)

    p = command("test-trees", cmd_test_trees, "identity test for two unknown trees")
    tester_flags(p)

    p = command("gof-product", cmd_gof, "goodness-of-fit for a product distribution on {0,1}^n")
    p.add_argument("--q", required=True, help="file with one model mean per line")
    p.add_argument("--p-samples", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mode", choices=["chebyshev", "mc"], default="mc")
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--c-prime", type=float, default=15.0)
    p.add_argument("--null-replicas", type=int, default=500)

    p = command("experiment", cmd_experiment, "size/power experiment from a JSON spec", seed_default=None)
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            args.func(args)
        except (BNIdentityError, OSError, ValueError, KeyError, TypeError) as exc:
            print(f"bnidentity {args.command}: {exc}", file=sys.stderr)
            return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
