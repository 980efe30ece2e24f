"""Command-line front end.

Every command prints one JSON report on stdout. Errors print a JSON object
on stderr and exit with 2 (input), 3 (parameter) or 4 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import label_smoothness, smoothness
from .bench import BlobsConfig, fewlabel_benchmark
from .denoise import PartialLabels, propagate_labels, transfer_sgc
from .errors import InvalidInput, InvalidParameter, NumericalFailure
from .graph import SparseGraph, knn_graph
from .io import (
    MatrixFormatError,
    RunReport,
    dumps,
    format_edges,
    format_pseudo_labels,
    read_edges,
    read_labels,
    read_matrix,
    read_pairs,
    read_partial_labels,
    write_matrix,
)
from .losses import (
    PeerBank,
    affinity_loss,
    gkd_loss,
    graph_smoothness_loss,
    peer_regularize,
    same_class_pairs,
    smoothness_gap_regularizer,
)
from .spectral import Diffusion, Simoncelli, SpectralResponse, SpectralTable, apply_filter

EXIT_INPUT = 2
EXIT_PARAMETER = 3
EXIT_NUMERICAL = 4


def _report(command: str, parameters: dict, metrics: dict, warnings=()) -> RunReport:
    return RunReport(command, parameters, metrics, list(warnings), __version__)


def _graph_from_features(features, args) -> SparseGraph:
    return knn_graph(features, args.k, kind=args.similarity, alpha=args.alpha,
                     metric=args.metric, symmetrize=args.symmetrize)


def _graph_params(args) -> dict:
    return {"k": args.k, "similarity": args.similarity, "alpha": args.alpha,
            "metric": args.metric, "symmetrize": args.symmetrize}


def _signal_smoothness(graph: SparseGraph, signal: np.ndarray) -> float:
    return float(sum(smoothness(graph, signal[:, c]) for c in range(signal.shape[1])))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_graph(args) -> RunReport:
    x = read_matrix(args.features)
    graph = _graph_from_features(x, args)
    text = format_edges(graph.edges())
    if args.out:
        Path(args.out).write_text(text)
    params = {"features": args.features, "out": args.out, **_graph_params(args)}
    metrics = {"n": graph.n, "num_edges": graph.num_edges,
               "total_weight": float(np.sum(graph.weights))}
    return _report("graph", params, metrics)


def cmd_smoothness(args) -> RunReport:
    x = read_matrix(args.features)
    y = read_labels(args.labels)
    if y.shape[0] != x.shape[0]:
        raise InvalidInput(f"{args.labels}: {y.shape[0]} labels for {x.shape[0]} samples")
    graph = _graph_from_features(x, args)
    rep = label_smoothness(graph, y, args.num_classes)
    params = {"features": args.features, "labels": args.labels, **_graph_params(args)}
    metrics = {"per_class": rep.per_class, "total_raw": rep.total_raw,
               "normalized": rep.normalized, "M": rep.M, "C": rep.C,
               "num_edges": graph.num_edges}
    return _report("smoothness", params, metrics, rep.warnings)


def _load_graph(args, n: int) -> SparseGraph:
    if args.input_kind == "edges":
        m, edges = read_edges(args.graph)
        if m > n:
            raise InvalidInput(f"{args.graph}: vertex {m - 1} out of range for a signal of length {n}")
        return SparseGraph.from_edges(n, edges)
    x = read_matrix(args.graph)
    if x.shape[0] != n:
        raise InvalidInput(f"{args.graph}: {x.shape[0]} feature rows for a signal of length {n}")
    return _graph_from_features(x, args)


def cmd_filter(args) -> RunReport:
    signal = read_matrix(args.signal)
    graph = _load_graph(args, signal.shape[0])
    params = {"signal": args.signal, "graph": args.graph, "input_kind": args.input_kind,
              "filter": args.filter, "out": args.out}
    if args.input_kind == "features":
        params.update(_graph_params(args))
    if args.filter == "simoncelli":
        spec = SpectralResponse(Simoncelli(args.tau))
        params.update(tau=args.tau, method=args.method, order=args.order, laplacian=args.laplacian)
        out = apply_filter(graph, spec, signal, method=args.method, order=args.order,
                           laplacian=args.laplacian)
    elif args.filter == "diffusion":
        spec = Diffusion(args.a, args.m, args.operator)
        params.update(a=args.a, m=args.m, operator=args.operator)
        out = apply_filter(graph, spec, signal)
    else:
        if not args.table:
            raise InvalidParameter("--table is required for the table filter")
        gains = read_matrix(args.table).ravel()
        params.update(table=args.table, laplacian=args.laplacian)
        out = apply_filter(graph, SpectralTable(gains), signal, laplacian=args.laplacian)
    if args.out:
        write_matrix(args.out, out)
    metrics = {"smoothness_before": _signal_smoothness(graph, signal),
               "smoothness_after": _signal_smoothness(graph, out),
               "num_edges": graph.num_edges}
    return _report("filter", params, metrics)


def cmd_denoise(args) -> RunReport:
    x = read_matrix(args.features)
    n = x.shape[0]
    idx, cls = read_partial_labels(args.labels)
    c = args.num_classes or int(cls.max()) + 1
    partial = PartialLabels(n, idx, cls, c)
    params = {"features": args.features, "labels": args.labels, "k": args.k,
              "alpha": args.alpha, "m": args.m, "propagate": args.propagate,
              "out": args.out, "pseudo_out": args.pseudo_out, "num_classes": c}
    diffused = transfer_sgc(x, partial, args.k, args.alpha, args.m)
    if args.out:
        write_matrix(args.out, diffused)
    metrics = {"n": n, "num_labeled": int(idx.size)}
    warnings = []
    if args.propagate:
        graph = knn_graph(diffused, args.k, kind="cosine", symmetrize="add-transpose")
        result = propagate_labels(graph, partial, args.prop_alpha)
        params["prop_alpha"] = args.prop_alpha
        if args.pseudo_out:
            Path(args.pseudo_out).write_text(format_pseudo_labels(result.pseudo_labels, result.omega))
        metrics["mean_omega_unlabeled"] = (
            float(np.mean(result.omega[partial.unlabeled_indices]))
            if partial.unlabeled_indices.size else 1.0)
        metrics["zeta"] = result.zeta
        warnings.extend(result.warnings)
    return _report("denoise", params, metrics, warnings)


def cmd_losses(args) -> RunReport:
    kind = args.loss
    params = {"loss": kind}
    if kind == "smoothness-loss":
        x = read_matrix(args.outputs)
        y = read_labels(args.labels)
        params.update(outputs=args.outputs, labels=args.labels, alpha=args.alpha,
                      k=args.k, metric=args.metric)
        value = graph_smoothness_loss(x, y, args.alpha, args.k, args.metric)
        metrics = {"loss": value}
    elif kind == "gkd":
        teacher = [read_matrix(p) for p in args.teacher]
        student = [read_matrix(p) for p in args.student]
        labels = read_labels(args.labels) if args.labels else None
        params.update(teacher=args.teacher, student=args.student,
                      task_specific=args.task_specific, labels=args.labels)
        kd = gkd_loss(teacher, student, args.task_specific, labels)
        metrics = {"kd_loss": kd}
        if args.task_loss is not None:
            params.update(task_loss=args.task_loss, lambda_kd=args.lambda_kd)
            metrics["total_loss"] = args.task_loss + args.lambda_kd * kd
    elif kind == "affinity":
        x = read_matrix(args.features)
        if args.pairs:
            pairs = read_pairs(args.pairs)
        elif args.labels:
            pairs = same_class_pairs(read_labels(args.labels))
        else:
            raise InvalidParameter("affinity needs --pairs or --labels")
        params.update(features=args.features, pairs=args.pairs, labels=args.labels,
                      similarity=args.similarity)
        loss, mass = affinity_loss(x, pairs, args.similarity)
        metrics = {"loss": loss, "mass": mass}
    elif kind == "reg-gap":
        layers = [read_matrix(p) for p in args.layers]
        y = read_labels(args.labels)
        params.update(layers=args.layers, labels=args.labels, k=args.k)
        graphs = []
        for layer in layers:
            k = args.k if args.k else layer.shape[0] - 1
            graphs.append(knn_graph(layer, k, kind="cosine"))
        metrics = {"regularizer": smoothness_gap_regularizer(graphs, y)}
    elif kind == "peer":
        x = read_matrix(args.input)
        peers = np.stack([read_matrix(p) for p in args.peers])
        w = read_matrix(args.weights).ravel()
        d = peers.shape[2]
        if w.size not in (2 * d, 2 * d + 1):
            raise InvalidInput(f"{args.weights}: expected {2 * d} weights plus optional bias")
        bank = PeerBank(peers, w[: 2 * d], float(w[2 * d]) if w.size > 2 * d else 0.0,
                        args.leaky_slope)
        params.update(input=args.input, peers=args.peers, weights=args.weights,
                      K=args.K, leaky_slope=args.leaky_slope, out=args.out)
        out = peer_regularize(x, bank, args.K)
        if args.out:
            write_matrix(args.out, out)
        metrics = {"pixels": out.shape[0], "channels": out.shape[1],
                   "mean_abs_change": float(np.mean(np.abs(out - x)))}
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidParameter(f"unknown loss {kind!r}")
    return _report(f"losses {kind}", params, metrics)


def cmd_bench_fewlabel(args) -> RunReport:
    cfg = {}
    if args.blobs_config:
        try:
            cfg = json.loads(Path(args.blobs_config).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidInput(f"cannot read blobs config {args.blobs_config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidInput("blobs config must be a JSON object")
    try:
        config = BlobsConfig(**cfg)
    except TypeError as exc:
        raise InvalidParameter(f"bad blobs config: {exc}") from None
    result = fewlabel_benchmark(args.seed, args.trials, tuple(args.shots), config)
    metrics = {}
    for shot, stats in result["shots"].items():
        for key, value in stats.items():
            metrics[f"{shot}shot_{key}"] = value
    params = {"seed": args.seed, "trials": args.trials, "shots": list(args.shots),
              **result["config"]}
    return _report("bench-fewlabel", params, metrics)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_graph_options(p, k_default=10):
    p.add_argument("--k", type=int, default=k_default, help="neighbors per vertex")
    p.add_argument("--similarity", choices=["cosine", "rbf"], default="cosine")
    p.add_argument("--alpha", type=float, default=1.0, help="RBF decay")
    p.add_argument("--metric", choices=["euclidean", "cosine-distance"], default="euclidean")
    p.add_argument("--symmetrize", choices=["union", "add-transpose"], default="union")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgg", description="Latent geometry graph toolkit")
    parser.add_argument("--version", action="version", version=f"lgg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build a k-NN similarity graph")
    p.add_argument("features")
    _add_graph_options(p)
    p.add_argument("--out", help="edge CSV destination")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("smoothness", help="label smoothness of a k-NN graph")
    p.add_argument("features")
    p.add_argument("labels")
    _add_graph_options(p)
    p.add_argument("--num-classes", type=int)
    p.set_defaults(func=cmd_smoothness)

    p = sub.add_parser("filter", help="filter a graph signal")
    p.add_argument("signal")
    p.add_argument("graph", help="features matrix or edge CSV (see --input-kind)")
    p.add_argument("--input-kind", choices=["features", "edges"], default="features")
    _add_graph_options(p)
    p.add_argument("--filter", choices=["simoncelli", "diffusion", "table"], default="simoncelli")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--operator", choices=["combinatorial", "normalized", "adjacency-normalized"],
                   default="normalized")
    p.add_argument("--table", help="matrix file with one gain per eigenvalue")
    p.add_argument("--method", choices=["exact", "chebyshev"], default="exact")
    p.add_argument("--order", type=int, default=30)
    p.add_argument("--laplacian", choices=["combinatorial", "normalized"], default="combinatorial")
    p.add_argument("--out")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("denoise", help="SGC feature diffusion and label propagation")
    p.add_argument("features")
    p.add_argument("labels", help="partial labels CSV: index,class")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--num-classes", type=int)
    p.add_argument("--propagate", action="store_true")
    p.add_argument("--prop-alpha", type=float, default=0.99)
    p.add_argument("--out", help="diffused features (LGG1)")
    p.add_argument("--pseudo-out", help="pseudo-label CSV: index,class,omega")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("losses", help="graph losses and regularizers")
    losses = p.add_subparsers(dest="loss", required=True)
    q = losses.add_parser("smoothness-loss")
    q.add_argument("outputs")
    q.add_argument("labels")
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--k", type=int, default=10)
    q.add_argument("--metric", choices=["euclidean", "cosine-distance"], default="euclidean")
    q = losses.add_parser("gkd")
    q.add_argument("--teacher", nargs="+", required=True)
    q.add_argument("--student", nargs="+", required=True)
    q.add_argument("--task-specific", action="store_true")
    q.add_argument("--labels")
    q.add_argument("--task-loss", type=float)
    q.add_argument("--lambda-kd", type=float, default=1.0)
    q = losses.add_parser("affinity")
    q.add_argument("features")
    q.add_argument("--pairs", help="CSV of target pairs i,j")
    q.add_argument("--labels", help="labels; targets are all same-class pairs")
    q.add_argument("--similarity", choices=["scaled-dot", "cosine"], default="scaled-dot")
    q = losses.add_parser("reg-gap")
    q.add_argument("labels")
    q.add_argument("layers", nargs="+")
    q.add_argument("--k", type=int, help="k-NN sparsification (default: complete graph)")
    q = losses.add_parser("peer")
    q.add_argument("input")
    q.add_argument("--peers", nargs="+", required=True)
    q.add_argument("--weights", required=True, help="2d attention weights, optionally followed by a bias")
    q.add_argument("--K", type=int, default=5)
    q.add_argument("--leaky-slope", type=float, default=0.01)
    q.add_argument("--out")
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("bench-fewlabel", help="synthetic few-label benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--shots", type=int, nargs="+", default=[1, 5])
    p.add_argument("--blobs-config", help="JSON object overriding BlobsConfig fields")
    p.set_defaults(func=cmd_bench_fewlabel)
    return parser


def _fail(code: int, kind: str, exc: Exception) -> int:
    err = {"error": kind, "message": str(exc)}
    if isinstance(exc, MatrixFormatError):
        err["offset"] = exc.offset
        if exc.path:
            err["path"] = exc.path
    print(dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAMETER if exc.code not in (0, None) else 0
    try:
        report = args.func(args)
    except InvalidInput as exc:
        return _fail(EXIT_INPUT, "invalid-input", exc)
    except InvalidParameter as exc:
        return _fail(EXIT_PARAMETER, "invalid-parameter", exc)
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERICAL, "numerical-failure", exc)
    except OSError as exc:
        return _fail(EXIT_INPUT, "invalid-input", exc)
    print(report.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
