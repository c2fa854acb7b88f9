"""Command-line entry point: ``geocnet <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 file I/O failure, 4 estimation
failure, 5 partial failure (some nodes or trials failed). Every output file
embeds the resolved settings; the thread count is left out because it never
changes results.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corrdim import CorrDimConfig, RadiusGrid, as_cloud, estimate_d2
from .dynamics import (
    BUNDLED_GRAPHS,
    DEFAULT_TRANSIENT,
    NetworkSpec,
    format_edge_list,
    generate_er_graph,
    load_bundled_graph,
    parse_edge_list,
    simulate,
)
from .errors import GeocError, PartialFailure, ValidationError
from .evaluation import (
    ExperimentConfig,
    confusion,
    roc_csv,
    run_roc,
    run_trials,
    summary_csv,
)
from .geoc import build_embedding, geoc, node_set
from .io import load_cloud, load_panel, read_text, save_panel, write_json, write_text
from .ogeoc import DEFAULT_EPS_BACKWARD, ShuffleConfig, infer_network, surrogate_values

OUTDIR_ENV = "GEOCNET_OUTDIR"


def _node_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: all cores); never changes results")
    g.add_argument("--out", default=None,
                   help=f"output directory (default ${OUTDIR_ENV} or the current directory)")
    g.add_argument("--eps-min", type=float, default=0.0562)
    g.add_argument("--eps-max", type=float, default=0.630)
    g.add_argument("--radius-steps", type=int, default=50)
    g.add_argument("--spacing", choices=["linear", "log"], default="linear")
    g.add_argument("--norm", choices=["max", "euclidean"], default="max")
    g.add_argument("--theiler", type=int, default=0, help="temporal exclusion window")
    g.add_argument("--region", choices=["full", "auto"], default="full",
                   help="fit the whole curve or an automatically chosen straight stretch")
    g.add_argument("--np", dest="n_permutations", type=int, default=100,
                   help="surrogates per shuffle test")
    g.add_argument("--theta", type=float, default=0.01, help="shuffle-test level")
    g.add_argument("--eps-backward", type=float, default=DEFAULT_EPS_BACKWARD)
    g.add_argument("--no-self", action="store_true",
                   help="exclude a node's own past from its candidate pool")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="geocnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"geocnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a coupled logistic network")
    s.add_argument("--graph", default="er",
                   help=f"'er', 'file' or a bundled graph: {', '.join(sorted(BUNDLED_GRAPHS))}")
    s.add_argument("--edges", help="edge-list file when --graph file")
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--p", type=float, default=0.1)
    s.add_argument("--sigma", type=float, default=0.1)
    s.add_argument("--a", type=float, default=4.0)
    s.add_argument("--coupling", choices=["f-diff", "x-diff"], default="f-diff")
    s.add_argument("--t", type=int, default=10000, help="kept time steps")
    s.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    s.add_argument("--name", default="panel", help="output file stem")

    c = sub.add_parser("corrdim", parents=[common], help="correlation dimension of a cloud")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--cloud", help="point-cloud CSV")
    src.add_argument("--panel", help="panel CSV")
    c.add_argument("--future", type=_node_list, default=[],
                   help="panel nodes taken one step ahead")
    c.add_argument("--past", type=_node_list, default=[], help="panel nodes taken as is")
    c.add_argument("--name", default="curve")

    g = sub.add_parser("geoc", parents=[common], help="evaluate GeoC_{J->I|K}")
    g.add_argument("--panel", required=True)
    g.add_argument("--j", type=_node_list, required=True)
    g.add_argument("--i", type=_node_list, required=True)
    g.add_argument("--k", type=_node_list, default=[])
    g.add_argument("--shuffle", action="store_true",
                   help="also run the shuffle test (single J and I node)")
    g.add_argument("--name", default="geoc")

    f = sub.add_parser("infer", parents=[common], help="infer the causal network")
    f.add_argument("--panel", required=True)
    f.add_argument("--truth", help="edge list to score against")
    f.add_argument("--name", default="infer")

    e = sub.add_parser("experiment", parents=[common], help="multi-trial or ROC experiment")
    e.add_argument("--config", required=True, help="experiment document (JSON or YAML)")
    e.add_argument("--name", default="experiment")
    return parser


def _outdir(args) -> Path:
    return Path(args.out or os.environ.get(OUTDIR_ENV) or ".")


def _corrdim_config(args) -> CorrDimConfig:
    grid = RadiusGrid(args.eps_min, args.eps_max, args.radius_steps, args.spacing)
    return CorrDimConfig(grid, args.norm, args.theiler, args.region)


def _shuffle_config(args) -> ShuffleConfig:
    return ShuffleConfig(args.n_permutations, args.theta, args.seed)


def _echo(args, **extra) -> dict:
    skip = {"threads", "out"}
    d = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    d["version"] = __version__
    d.update(extra)
    return d


def _graph(args) -> np.ndarray:
    if args.graph == "er":
        return generate_er_graph(args.n, args.p, args.seed)
    if args.graph == "file":
        if not args.edges:
            raise ValidationError("--graph file needs --edges PATH")
        return parse_edge_list(read_text(args.edges))
    return load_bundled_graph(args.graph)


def cmd_simulate(args) -> int:
    adj = _graph(args)
    spec = NetworkSpec(adj, sigma=args.sigma, map_param=args.a, coupling_kind=args.coupling)
    panel = simulate(spec, t_transient=args.transient, t_keep=args.t, seed=args.seed)
    out = _outdir(args)
    csv_path = out / f"{args.name}.csv"
    save_panel(panel, csv_path, {"config": _echo(args)})
    write_text(out / f"{args.name}.edges",
               format_edge_list(adj, f"ground truth for {csv_path.name}"))
    print(f"wrote {csv_path} ({panel.n_nodes} nodes x {panel.n_steps} steps)")
    return 0


def cmd_corrdim(args) -> int:
    config = _corrdim_config(args)
    if args.cloud:
        cloud = as_cloud(load_cloud(args.cloud))
    else:
        panel = load_panel(args.panel)
        future = list(node_set(args.future, panel.n_nodes))
        past = list(node_set(args.past, panel.n_nodes))
        if not future and not past:
            past = list(range(panel.n_nodes))
        cloud = build_embedding(panel, future, past)
    curve = config.curve(cloud)
    est = estimate_d2(curve, config.region, config.min_region_points)
    warning = None
    if np.all(curve.ln_c == 0.0):
        warning = ("degenerate cloud: every pair is closer than the smallest radius "
                   f"{config.grid.eps_min}, so the curve is flat and D2 = 0")
        print(f"warning: {warning}", file=sys.stderr)
    out = _outdir(args)
    write_text(out / f"{args.name}.csv", curve.to_csv())
    result = {"config": _echo(args, estimator=config.to_dict()),
              "n_points": int(cloud.shape[0]), "dim": int(cloud.shape[1]),
              "n_dropped": curve.n_dropped, **est.to_dict(), "warning": warning}
    write_json(out / f"{args.name}.json", result)
    print(f"D2 = {est.d2:.6f} ({est.n_points_used} curve points)")
    return 0


def cmd_geoc(args) -> int:
    config = _corrdim_config(args)
    panel = load_panel(args.panel)
    val = geoc(panel, args.j, args.i, args.k, config)
    rec = val.to_record(config, panel.n_steps)
    if args.shuffle:
        if len(val.source) != 1 or len(val.target) != 1:
            raise ValidationError("--shuffle needs exactly one J node and one I node")
        cfg = _shuffle_config(args)
        sur = surrogate_values(panel, val.target[0], val.source[0], val.cond, config, cfg,
                               args.threads)
        eps = float(np.sort(sur)[cfg.array_index])
        rec["shuffle"] = {**cfg.to_dict(), "threshold": eps,
                          "significant": bool(val.value > eps),
                          "surrogates": sur.tolist()}
    rec["config"] = _echo(args)
    write_json(_outdir(args) / f"{args.name}.json", rec)
    print(json.dumps({k: rec[k] for k in ("J", "I", "K", "value", "d2")}))
    return 0


def cmd_infer(args) -> int:
    config = _corrdim_config(args)
    panel = load_panel(args.panel)
    res = infer_network(panel, config, _shuffle_config(args), args.eps_backward,
                        not args.no_self, args.threads)
    doc = res.to_dict()
    doc["config"] = _echo(args)
    if args.truth:
        truth = parse_edge_list(read_text(args.truth), panel.n_nodes)
        doc["score"] = confusion(res.adjacency_estimate, truth).to_dict()
    out = _outdir(args)
    write_json(out / f"{args.name}.json", doc)
    write_text(out / f"{args.name}.edges", res.edge_list_text())
    print(f"{int(res.adjacency_estimate.sum())} edges inferred")
    if res.failures:
        for k, msg in sorted(res.failures.items()):
            print(f"node {k} failed: {msg}", file=sys.stderr)
        raise PartialFailure(f"{len(res.failures)} node(s) failed")
    return 0


def cmd_experiment(args) -> int:
    exp = ExperimentConfig.load(args.config)
    out = _outdir(args)
    echo = {"experiment": exp.to_dict(), "version": __version__}
    if exp.thetas:
        curves = run_roc(exp, 0, args.threads)
        failed = False
        for t, pts in curves.items():
            write_text(out / f"{args.name}_roc_T{t}.csv", roc_csv(pts))
            failed |= any(p.error for p in pts)
        write_json(out / f"{args.name}_roc.json", {
            "config": echo,
            "curves": {str(t): [p.__dict__ for p in pts] for t, pts in curves.items()},
        })
        print(f"wrote ROC curves for T in {sorted(curves)}")
        if failed:
            raise PartialFailure("some ROC points failed; see the JSON record")
        return 0
    summaries, records = run_trials(exp, args.threads)
    write_text(out / f"{args.name}_summary.csv", summary_csv(summaries))
    write_json(out / f"{args.name}_trials.json", {
        "config": echo, "summaries": [s.to_dict() for s in summaries], "trials": records,
    })
    for s in summaries:
        print(f"T={s.sample_size}: mean TPR {s.mean_tpr}, mean FPR {s.mean_fpr}")
    if any(s.n_failed for s in summaries):
        raise PartialFailure("some trials failed; see the JSON record")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "corrdim": cmd_corrdim,
    "geoc": cmd_geoc,
    "infer": cmd_infer,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except GeocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
