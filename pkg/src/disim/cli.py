"""Command-line front end: ``disim {cluster,movement,simulate,bounds,scree}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .evaluation import theorem_bounds
from .exceptions import ConvergenceError, DisimError
from .graph import BIPARTITE, DIRECTED, load_edge_list
from .laplacian import build_laplacian
from .model import BlockModel, build_four_param, population_objects
from .pipeline import UNASSIGNED, disim, movement_scores
from .simulate import CSV_COLUMNS, SweepSpec, run_sweep
from .spectral import truncated_svd
from .validation import check_tau

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

CLUSTER_COLUMNS = ("label", "row_cluster", "col_cluster", "movement_score",
                   "row_leverage", "col_leverage")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _tau_arg(text):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError("tau must be nonnegative")
    return value


def _add_graph_args(p, required=True):
    p.add_argument("--graph", metavar="PATH", required=required, help="edge-list file")
    p.add_argument("--delimiter", default=None,
                   help="field separator (default: any run of whitespace)")
    p.add_argument("--weighted", action="store_true", help="use the third column as weight")
    p.add_argument("--bipartite", action="store_true",
                   help="sources and targets are distinct node sets")
    p.add_argument("--n-nodes", type=int, default=None,
                   help="declared node count; extra nodes are isolated")


def _add_output_args(p, seed_default=0, seed_help="random seed"):
    p.add_argument("--out", metavar="PATH", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=seed_default, help=seed_help)


def _add_cluster_args(p):
    p.add_argument("--k", type=int, default=None, help="clusters on both sides")
    p.add_argument("--k-rows", type=int, default=None)
    p.add_argument("--k-cols", type=int, default=None)
    p.add_argument("--tau", type=_tau_arg, default="auto")
    p.add_argument("--no-project", action="store_true", help="skip row normalization")
    p.add_argument("--stacked", action="store_true",
                   help="cluster left and right vectors in one k-means run")
    p.add_argument("--leverage-eta", type=float, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--min-in", type=int, default=0,
                   help="report only nodes with at least this in-degree")
    p.add_argument("--min-out", type=int, default=0,
                   help="report only nodes with at least this out-degree")


def build_parser():
    parser = argparse.ArgumentParser(prog="disim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"disim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="co-cluster a graph")
    _add_graph_args(p)
    _add_cluster_args(p)
    _add_output_args(p)

    p = sub.add_parser("movement", help="movement scores of a directed graph")
    _add_graph_args(p)
    _add_cluster_args(p)
    _add_output_args(p)

    p = sub.add_parser("simulate", help="run a Monte-Carlo sweep")
    p.add_argument("--sweep", metavar="PATH", required=True, help="JSON sweep file")
    p.add_argument("--jobs", type=int, default=1)
    _add_output_args(p, None, "override the seed in the sweep file")

    p = sub.add_parser("bounds", help="evaluate error bounds of a block model")
    p.add_argument("--model", metavar="PATH", required=True, help="JSON block model")
    p.add_argument("--tau", type=_tau_arg, default=None,
                   help="override the model's tau ('auto' = average expected degree)")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--leverage-eta", type=float, default=None)
    p.add_argument("--gamma-variant", choices=("main", "shifted"), default="main")
    _add_output_args(p)

    p = sub.add_parser("scree", help="leading singular values of the Laplacian")
    _add_graph_args(p, required=False)
    p.add_argument("--model", metavar="PATH", default=None,
                   help="use the population Laplacian of a JSON block model")
    p.add_argument("--tau", type=_tau_arg, default="auto")
    p.add_argument("--count", type=int, default=25)
    _add_output_args(p)
    return parser


def _open_input(path):
    try:
        with open(path, encoding="utf-8"):
            pass
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_graph(args):
    _open_input(args.graph)
    kind = BIPARTITE if args.bipartite else DIRECTED
    g, labels = load_edge_list(args.graph, args.delimiter, args.weighted, kind, args.n_nodes)
    if kind == DIRECTED:
        labels = (labels, labels)
    return g, labels


def load_model(path):
    """Read a block model, or a four-parameter recipe, from JSON."""
    _open_input(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if "B" in data:
        return BlockModel.from_dict(data)
    if data.get("family") == "four_param":
        return build_four_param(int(data["K"]), int(data["s"]), float(data["p"]),
                                float(data["r"]), seed=int(data.get("seed", 0)),
                                planted=data.get("planted", "random"),
                                degree_corrected=bool(data.get("degree_corrected", False)),
                                tau=float(data.get("tau", 0.0)))
    raise InputError(f"{path}: expected a block model (with 'B') or a four_param recipe")


def _resolve_k(args):
    k_rows = args.k_rows if args.k_rows is not None else args.k
    k_cols = args.k_cols if args.k_cols is not None else args.k
    if k_rows is None and k_cols is None:
        raise InputError("give --k or --k-rows/--k-cols")
    k_rows = k_cols if k_rows is None else k_rows
    k_cols = k_rows if k_cols is None else k_cols
    return k_rows, k_cols


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    return x


def _emit(args, config, columns, rows):
    """Write rows as CSV (config in a leading comment) or JSON."""
    config = _json_safe(config)
    buf = io.StringIO()
    if args.format == "json":
        records = [_json_safe(dict(zip(columns, r))) for r in rows]
        json.dump({"config": config, "rows": records}, buf, sort_keys=True, indent=1)
        buf.write("\n")
    else:
        buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _base_config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format", "func")}
    cfg["version"] = __version__
    return cfg


def _cluster(args):
    g, (row_names, col_names) = _load_graph(args)
    k_rows, k_cols = _resolve_k(args)
    cc = disim(g, k_rows, k_cols, tau=check_tau(args.tau), project=not args.no_project,
               stacked=args.stacked, leverage_eta=args.leverage_eta,
               restarts=args.restarts, seed=args.seed)
    return g, row_names, col_names, cc


def _report_mask(g, args):
    """Reporting filter only; clustering always sees the full graph."""
    out_deg = np.asarray(g.csr.getnnz(axis=1))
    in_deg = np.asarray(g.csc.getnnz(axis=0))
    return out_deg >= args.min_out, in_deg >= args.min_in


def _label(x):
    return None if x == UNASSIGNED else int(x)


def cmd_cluster(args):
    g, row_names, col_names, cc = _cluster(args)
    row_ok, col_ok = _report_mask(g, args)
    row_lev, col_lev = cc.leverage("row"), cc.leverage("col")
    rows = []
    if g.kind == DIRECTED:
        scores = movement_scores(cc.embedding).scores
        for i, name in enumerate(row_names):
            if row_ok[i] and col_ok[i]:
                rows.append((name, _label(cc.row_labels[i]), _label(cc.col_labels[i]),
                             scores[i], row_lev[i], col_lev[i]))
    else:
        for i, name in enumerate(row_names):
            if row_ok[i]:
                rows.append((name, _label(cc.row_labels[i]), None, None, row_lev[i], None))
        for j, name in enumerate(col_names):
            if col_ok[j]:
                rows.append((name, None, _label(cc.col_labels[j]), None, None, col_lev[j]))
    config = _base_config(args)
    config["resolved"] = dict(cc.variant, kind=g.kind, n_rows=g.n_rows, n_cols=g.n_cols,
                              singular_values=cc.embedding.sigma)
    _emit(args, config, CLUSTER_COLUMNS, rows)
    return EXIT_OK


def cmd_movement(args):
    if args.bipartite:
        raise InputError("movement scores need a directed graph")
    g, names, _, cc = _cluster(args)
    row_ok, col_ok = _report_mask(g, args)
    scores = movement_scores(cc.embedding).scores
    rows = [(names[i], scores[i], _label(cc.row_labels[i]), _label(cc.col_labels[i]))
            for i in range(g.n_rows) if row_ok[i] and col_ok[i]]
    config = _base_config(args)
    config["resolved"] = dict(cc.variant, kind=g.kind, n_rows=g.n_rows)
    _emit(args, config, ("label", "movement_score", "row_cluster", "col_cluster"), rows)
    return EXIT_OK


def cmd_simulate(args):
    _open_input(args.sweep)
    try:
        spec = SweepSpec.from_json(args.sweep)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{args.sweep}: bad sweep file ({exc})") from None
    if args.jobs < 1:
        raise InputError("--jobs must be positive")
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        rows, skipped = run_sweep(spec, jobs=args.jobs)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    config = _base_config(args)
    config["resolved"] = {"sweep": spec.to_dict(), "skipped": skipped}
    _emit(args, config, CSV_COLUMNS, [tuple(r[c] for c in CSV_COLUMNS) for r in rows])
    return EXIT_OK


def cmd_bounds(args):
    m = load_model(args.model)
    if args.tau == "auto":
        m = m.with_tau(float(m.expected_out_degrees().sum() / m.n_rows))
    elif args.tau is not None:
        m = m.with_tau(args.tau)
    if not 0 < args.epsilon < 1:
        raise InputError("--epsilon must lie in (0, 1)")
    po = population_objects(m)
    report = theorem_bounds(po, args.epsilon, args.c0, args.c1, args.c2, args.alpha,
                            args.leverage_eta, args.gamma_variant).to_dict()
    config = _base_config(args)
    config["resolved"] = {"tau": m.tau, "lineage": m.lineage}
    _emit(args, config, ("quantity", "value"), sorted(report.items()))
    return EXIT_OK


def cmd_scree(args):
    if (args.graph is None) == (args.model is None):
        raise InputError("give exactly one of --graph or --model")
    if args.count < 0:
        raise InputError("--count must be nonnegative")
    if args.graph is not None:
        g, _ = _load_graph(args)
        lap = build_laplacian(g, check_tau(args.tau))
        matrix, tau = lap.matrix, lap.tau
    else:
        m = load_model(args.model)
        if args.tau == "auto":
            m = m.with_tau(float(m.expected_out_degrees().sum() / m.n_rows))
        else:
            m = m.with_tau(args.tau)
        matrix, tau = population_objects(m).script_L(), m.tau
    count = args.count
    limit = min(matrix.shape)
    if count > limit:
        print(f"warning: --count {count} exceeds min dimension {limit}; truncated",
              file=sys.stderr)
        count = limit
    values = truncated_svd(matrix, count, seed=args.seed).sigma if count else []
    config = _base_config(args)
    config["resolved"] = {"tau": tau, "count": count, "shape": list(matrix.shape)}
    _emit(args, config, ("rank", "value"), [(i + 1, v) for i, v in enumerate(values)])
    return EXIT_OK


COMMANDS = {"cluster": cmd_cluster, "movement": cmd_movement, "simulate": cmd_simulate,
            "bounds": cmd_bounds, "scree": cmd_scree}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, FileNotFoundError) as exc:
        print(f"disim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"disim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, DisimError) as exc:
        print(f"disim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"disim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
