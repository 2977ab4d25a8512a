"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 bound/oracle disagreement.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .attack import AttackSpec, attack_episode
from .certify import certify_many
from .core import DataError, FewShotConfig, InputError, Metric, default_kprime, sorted_class_distances
from .dataio import dump_dataset, load_dataset, report_csv, report_json, synth_gaussian
from .evaluation import METHODS, EvalConfig, predict, run_benchmark, sample_episodes
from .oracle import agreement_check
from .prng import derive_seed

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ORACLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, dataset: bool = True) -> None:
    if dataset:
        p.add_argument("--dataset", required=True, help="JSON Lines feature file")
        p.add_argument("--ways", type=int, default=5, help="classes per episode (C)")
        p.add_argument("--shots", type=int, default=5, help="support samples per class (K)")
        p.add_argument("--kprime", type=int, default=None, help="trim count K' (default floor((K-1)/2))")
        p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.SQ_L2.value)
        p.add_argument("--batches", type=int, default=20, help="number of sampled episodes")
        p.add_argument("--queries-per-class", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="output file (default: standard output)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcert", description="Certified few-shot classification under data poisoning.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("predict", help="clean predictions of every method on sampled episodes")
    _common(p)
    p.add_argument("--methods", default=",".join(METHODS))

    p = sub.add_parser("certify", help="per-query certified poisoning sizes")
    _common(p)

    p = sub.add_parser("eval", help="certified and empirical accuracy curves")
    _common(p)
    p.add_argument("--attack", choices=["individual", "group", "both"], default="both")
    p.add_argument("--strategy", choices=["collision", "cross-class", "far-point"], default="far-point")
    p.add_argument("--methods", default=",".join(METHODS))

    p = sub.add_parser("attack", help="predictions before and after a feature-space attack")
    _common(p)
    p.add_argument("--attack", choices=["individual", "group"], default="individual")
    p.add_argument("--strategy", choices=["collision", "cross-class", "far-point"], default="far-point")
    p.add_argument("--budget", type=int, default=None, help="poisoning size T (default K')")
    p.add_argument("--methods", default=",".join(METHODS))

    p = sub.add_parser("oracle-check", help="compare closed-form bounds against brute force")
    _common(p, dataset=False)
    p.add_argument("--max-k", type=int, default=7)
    p.add_argument("--instances", type=int, default=500)

    p = sub.add_parser("synth", help="write a synthetic Gaussian-cluster dataset")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    return parser


def _methods(text: str) -> tuple:
    out = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise InputError(f"--methods: unknown {', '.join(bad) or '(empty)'}; choose from {', '.join(METHODS)}")
    return out


def _eval_config(args, **extra) -> EvalConfig:
    if args.kprime is not None and not 0 <= args.kprime <= default_kprime(args.shots):
        raise InputError(
            f"--kprime {args.kprime} violates 0 <= K' <= floor((K-1)/2) = {default_kprime(args.shots)} "
            f"for --shots {args.shots}"
        )
    return EvalConfig(batches=args.batches, ways=args.ways, shots=args.shots,
                      queries_per_class=args.queries_per_class, kprime=args.kprime,
                      metric=args.metric, seed=args.seed, **extra)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, output) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"--output {output}: cannot write ({exc.strerror})") from None


def _cmd_predict(args) -> int:
    cfg = _eval_config(args, methods=_methods(args.methods))
    fcfg = cfg.fewshot()
    rows = []
    for e, ep in enumerate(sample_episodes(load_dataset(args.dataset), cfg)):
        for q, (query, label) in enumerate(zip(ep.queries, ep.query_labels)):
            row = {"episode": e, "query": q, "label": int(label)}
            row.update({m: predict(m, ep, query, fcfg) for m in cfg.methods})
            rows.append(row)
    _emit(_table(rows, args.format), args.output)
    return EXIT_OK


def _cmd_certify(args) -> int:
    cfg = _eval_config(args)
    fcfg = cfg.fewshot()
    rows, stack = [], []
    for e, ep in enumerate(sample_episodes(load_dataset(args.dataset), cfg)):
        for q, (query, label) in enumerate(zip(ep.queries, ep.query_labels)):
            pred = predict("fcert", ep, query, fcfg)
            stack.append(sorted_class_distances(ep, query, fcfg)[0])
            rows.append({"episode": e, "query": q, "label": int(label), "predicted": pred,
                         "correct": int(pred == label)})
    preds = [r["predicted"] for r in rows]
    for model in ("individual", "group"):
        for row, size in zip(rows, certify_many(stack, preds, fcfg, model)):
            row[f"certified_{model}"] = int(size)
    _emit(_table(rows, args.format), args.output)
    return EXIT_OK


def _cmd_eval(args) -> int:
    models = ("individual", "group") if args.attack == "both" else (args.attack,)
    cfg = _eval_config(args, methods=_methods(args.methods), models=models, strategy=args.strategy)
    report = run_benchmark(load_dataset(args.dataset), cfg)
    _emit(report_csv(report) if args.format == "csv" else report_json(report), args.output)
    return EXIT_OK


def _cmd_attack(args) -> int:
    cfg = _eval_config(args, methods=_methods(args.methods))
    fcfg = cfg.fewshot()
    budget = cfg.kprime if args.budget is None else args.budget
    if not 0 <= budget <= cfg.shots:
        raise InputError(f"--budget {budget} must lie in [0, K={cfg.shots}]")
    rows = []
    for e, ep in enumerate(sample_episodes(load_dataset(args.dataset), cfg)):
        for q, (query, label) in enumerate(zip(ep.queries, ep.query_labels)):
            label = int(label)
            spec = AttackSpec(args.attack, budget, args.strategy,
                              derive_seed(args.seed, "attack", args.attack, e, q, budget))
            poisoned = attack_episode(ep, query, label, spec, fcfg.metric)
            for m in cfg.methods:
                rows.append({"episode": e, "query": q, "label": label, "attack_model": args.attack,
                             "T": budget, "method": m, "clean": predict(m, ep, query, fcfg),
                             "poisoned": predict(m, poisoned, query, fcfg)})
    _emit(_table(rows, args.format), args.output)
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    if not 3 <= args.max_k <= 8:
        raise InputError(f"--max-k must lie in [3, 8], got {args.max_k}")
    if args.instances < 1:
        raise InputError("--instances must be positive")
    stats = agreement_check(args.instances, args.max_k, args.seed)
    if args.format == "json":
        text = json.dumps({"instances": stats.instances, "bound_checks": stats.bound_checks,
                           "certificate_checks": stats.certificate_checks,
                           "tightness_checks": stats.tightness_checks,
                           "disagreements": [list(map(str, d)) for d in stats.disagreements]},
                          indent=2) + "\n"
    else:
        text = stats.summary() + "\n"
    _emit(text, args.output)
    if stats.disagreements:
        for d in stats.disagreements[:20]:
            print(f"disagreement: {d}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def _cmd_synth(args) -> int:
    ds = synth_gaussian(args.classes, args.per_class, args.dim, args.separation, args.sigma, args.seed)
    _emit(dump_dataset(ds), args.output)
    return EXIT_OK


COMMANDS = {
    "predict": _cmd_predict,
    "certify": _cmd_certify,
    "eval": _cmd_eval,
    "attack": _cmd_attack,
    "oracle-check": _cmd_oracle_check,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"fcert: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InputError as exc:
        print(f"fcert: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
