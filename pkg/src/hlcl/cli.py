"""Command-line entry point: ``hlcl <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys


from . import __version__
from .encoder import final_embeddings, save_params
from .filters import FilterKind, filter_iteration_study
from .graph import (
    GraphFormatError,
    homophily_ratio,
    load_features,
    load_graph,
    load_labels,
    save_features,
    save_graph,
    save_labels,
)
from .gradcheck import gradcheck
from .probe import evaluate, export_embeddings, summarize
from .synthgen import SynthSpec, generate, toy_graph
from .trainer import TrainConfig, load_config, train

GRADCHECK_TOL = 1e-5


def _seed_list(text: str) -> list[int]:
    """``10`` means seeds 0..9; ``3,5,8`` is an explicit list."""
    if "," in text:
        return [int(t) for t in text.split(",") if t.strip()]
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("need at least one seed")
    return list(range(n))


def _cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    g = load_graph(args.graph)
    x = load_features(args.features, n=g.n_nodes)
    y = load_labels(args.labels) if args.labels else None
    params, report = train(g, x, y, cfg)
    if args.out_params:
        save_params(params, args.out_params)
    if args.out_embeddings:
        export_embeddings(final_embeddings(g, x, params, cfg.output_mode), args.out_embeddings)
    print(f"epochs\t{len(report.loss_curve)}")
    print(f"best_epoch\t{report.best_epoch}")
    print(f"final_loss\t{report.loss_curve[-1]:.6f}")
    if report.probe is not None:
        p = report.probe
        print(f"train_acc\t{p.train_acc:.4f}\nval_acc\t{p.val_acc:.4f}\ntest_acc\t{p.test_acc:.4f}")
    return 0


def _cmd_eval(args) -> int:
    emb = load_features(args.embeddings)
    y = load_labels(args.labels)
    results = evaluate(emb, y, args.seeds, args.l2)
    print("seed\ttrain_acc\tval_acc\ttest_acc")
    for s, r in zip(args.seeds, results):
        print(f"{s}\t{r.train_acc:.4f}\t{r.val_acc:.4f}\t{r.test_acc:.4f}")
    summ = summarize(results)
    cells = "\t".join(f"{m:.4f}±{sd:.4f}" for m, sd in (summ[k] for k in ("train_acc", "val_acc", "test_acc")))
    print(f"mean±std\t{cells}")
    return 0


def _cmd_generate(args) -> int:
    spec = SynthSpec(args.n_nodes, args.n_classes, args.avg_degree, args.beta, args.feature_dim,
                     args.separation, args.std, args.seed)
    g, x, y = generate(spec)
    prefix = args.out_prefix
    save_graph(g, f"{prefix}.edges")
    save_features(x, f"{prefix}.features")
    save_labels(y, f"{prefix}.labels")
    print(f"nodes\t{g.n_nodes}\nedges\t{g.n_edges}\nbeta\t{homophily_ratio(g, y):.6f}")
    return 0


def _cmd_filter_demo(args) -> int:
    g, x, y = toy_graph(args.case, args.seed)
    trace = filter_iteration_study(g, x, y, FilterKind.parse(args.filter), args.iters)
    print("iter\tseparation")
    for t, s in enumerate(trace):
        print(f"{t}\t{s:.6f}")
    return 0


def _cmd_homophily(args) -> int:
    g = load_graph(args.graph)
    y = load_labels(args.labels)
    print(f"beta {homophily_ratio(g, y):.6f}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = gradcheck(args.instances, args.seed, args.objective)
    for name, err in report.per_param.items():
        print(f"{name}\t{err:.3e}")
    print(f"max_rel_error\t{report.max_rel_error:.3e}")
    return 0 if report.max_rel_error <= GRADCHECK_TOL else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hlcl", description="Contrastive node embeddings from low-pass and high-pass graph filters.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an encoder and optionally export embeddings")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", help="enables probe-based early stopping and a final probe")
    p.add_argument("--config", help="key=value training config")
    p.add_argument("--out-params")
    p.add_argument("--out-embeddings")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="linear-probe frozen embeddings over several split seeds")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seeds", type=_seed_list, default=list(range(10)), help="count (0..N-1) or comma list")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("generate", help="write a synthetic graph, features and labels")
    p.add_argument("--n-nodes", type=int, default=500)
    p.add_argument("--n-classes", type=int, default=2)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--beta", type=float, default=0.5, help="target homophily ratio")
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=2.0, help="distance between class means")
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("filter-demo", help="separation trace on the seven-node toy graph")
    p.add_argument("--case", choices=["high", "mixed", "low"], default="low")
    p.add_argument("--filter", choices=["low", "high"], default="high")
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_filter_demo)

    p = sub.add_parser("homophily", help="print the homophily ratio of a labelled graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_cmd_homophily)

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objective", choices=["hlcl", "infonce"], default="hlcl")
    p.set_defaults(func=_cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, GraphFormatError, ValueError) as exc:
        print(f"hlcl: error: {exc}", file=sys.stderr)
        return 1


def run_cli(argv) -> int:
    """Like ``main`` but returns argparse's exit code instead of raising."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
