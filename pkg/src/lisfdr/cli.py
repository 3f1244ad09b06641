"""``lisfdr`` command line.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .errors import (
    DegeneratePosteriorError,
    DegenerateTableError,
    DivergenceError,
    GraphSizeError,
    MissingParameterError,
    ScenarioError,
    StructureError,
)
from .graph import Graph, build_max_r2_graph
from .inference import McmcConfig, posterior
from .learning import EmConfig, em_fit
from .procedures import lis_stepup
from .seeds import child_seed
from .simulation import full_scale, roc_pr_points, run_scenario, scenario_from_dict

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("lisfdr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _hash_inputs(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, Path):
            h.update(p.read_bytes())
        else:
            h.update(str(p).encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def _load_graph(path: Path, mode: str, thresholds) -> Graph:
    recs, m = io.read_edge_file(path)
    if mode == "max-r2":
        return build_max_r2_graph(recs, m, thresholds)
    return Graph.from_edges(m, [(r.i, r.j) for r in recs])


def _load_problem(args):
    """Graph and statistics, padded so isolated trailing hypotheses are kept."""
    x, _ = io.read_stats_file(args.stats)
    g = _load_graph(args.edges, args.graph, tuple(args.thresholds))
    if g.m > len(x):
        raise UsageError(f"edge file references node {g.m - 1} but only {len(x)} statistics were given")
    if g.m < len(x):
        g = Graph(len(x), g.edges, g.classes)
    return g, x


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _mcmc(args) -> McmcConfig:
    return McmcConfig(args.sweeps, args.burn_in, child_seed(args.seed, "mcmc"))


def cmd_simulate(args) -> int:
    if not args.scenario.is_file():
        raise UsageError(f"scenario file not found: {args.scenario}")
    values = io.read_key_values(args.scenario)
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    if args.seed is not None:
        values["seed"] = str(args.seed)
    sc = scenario_from_dict(values)
    if args.full_scale:
        sc = full_scale(sc)
    if args.replications is not None:
        sc = replace(sc, replications=args.replications)
    out = _out_dir(args.out)
    header = io.header_lines("simulate", sc.seed, sc.config_hash())
    report = run_scenario(sc, threads=args.threads)

    rows = [vars(r) for r in report.rows]
    io.write_csv(out / "metrics.csv", ["procedure", "alpha", "fdr", "fnr", "atp", "tp"], rows, header)
    io.write_csv(
        out / "metrics_detail.csv",
        ["procedure", "alpha", "fdr", "fdr_se", "fnr", "fnr_se", "atp", "atp_se", "tp", "n"],
        rows,
        header,
    )
    rep_dir = _out_dir(out / "replications")
    for rep in report.replications:
        io.write_replication_file(rep_dir / f"rep_{rep.index:04d}.tsv", rep.truth, rep.scores, header)
    curves = _curves_from_reps([(rep.truth, rep.scores) for rep in report.replications])
    io.write_csv(out / "curves.csv", ["procedure", "curve", "x", "y"], curves, header)
    with open(out / "manifest.txt", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write(sc.to_text())
        for proc, n in sorted(report.failures.items()):
            fh.write(f"# failed replications for {proc}: {n}\n")
    if args.svg:
        _plot_curves(curves, out / "curves.svg")
    for r in report.rows:
        print(f"{r.procedure}\talpha={r.alpha:g}\tfdr={r.fdr:.4f}\tfnr={r.fnr:.4f}\tatp={r.atp:.2f}\ttp={r.tp}")
    return EXIT_OK


def _curve_procedures(scores: dict):
    # LIS-type scores and p-values each give one ranking; AP ranks exactly like BH
    return [p for p in scores if p != "AP"]


def _curves_from_reps(reps) -> list[dict]:
    if not reps:
        return []
    rows = []
    for proc in _curve_procedures(reps[0][1]):
        runs = [(scores[proc], truth) for truth, scores in reps if proc in scores]
        if not runs:
            continue
        pts = roc_pr_points(runs)
        rows += [{"procedure": proc, "curve": "roc", "x": f, "y": t} for f, t in zip(pts.fpr, pts.tpr)]
        if pts.pr_empty:
            rows.append({"procedure": proc, "curve": "pr", "x": "nan", "y": "nan"})
        else:
            rows += [{"procedure": proc, "curve": "pr", "x": r, "y": p} for r, p in zip(pts.recall, pts.precision)]
    return rows


def _plot_curves(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, curve, (xl, yl) in zip(axes, ("roc", "pr"), (("FPR", "TPR"), ("recall", "precision"))):
        for proc in dict.fromkeys(r["procedure"] for r in rows):
            pts = [(float(r["x"]), float(r["y"])) for r in rows if r["procedure"] == proc and r["curve"] == curve]
            pts = [p for p in pts if np.isfinite(p[0])]
            if pts:
                ax.plot(*zip(*pts), label=proc)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_report(args) -> int:
    src = Path(args.input)
    files = sorted((src / "replications").glob("rep_*.tsv")) if (src / "replications").is_dir() else []
    if not files:
        raise UsageError(f"no stored replications under {src}")
    reps = [io.read_replication_file(f) for f in files]
    out = _out_dir(args.out)
    seed = 0
    for line in files[0].read_text().splitlines():
        if line.startswith("# seed:"):
            seed = int(line.split(":", 1)[1])
    header = io.header_lines("report", seed, _hash_inputs(*files))
    curves = _curves_from_reps(reps)
    io.write_csv(out / "curves.csv", ["procedure", "curve", "x", "y"], curves, header)
    if args.svg:
        _plot_curves(curves, out / "curves.svg")
    print(f"curves from {len(reps)} replications written to {out / 'curves.csv'}")
    return EXIT_OK


def cmd_learn(args) -> int:
    g, x = _load_problem(args)
    cfg = EmConfig(
        max_iters=args.max_iters,
        param_tolerance=args.tolerance,
        mcmc=_mcmc(args),
        learn_bias=args.learn_bias,
        learn_sigma=not args.fix_sigma,
        seed=args.seed,
    )
    res = em_fit(g, x, cfg)
    out = _out_dir(args.out)
    header = io.header_lines("learn", args.seed, _hash_inputs(args.edges, args.stats, args.graph, cfg))
    io.write_params_file(out / "params.txt", res.params, header)
    fields = list(res.trace[0]) if res.trace else ["iteration"]
    io.write_csv(out / "em_trace.csv", fields, res.trace, header)
    state = "converged" if res.converged else "stopped"
    print(f"em {state} after {res.iterations} iterations; params written to {out / 'params.txt'}")
    return EXIT_OK


def _lis(args):
    g, x = _load_problem(args)
    params = io.read_params_file(args.params)
    return g, x, posterior(g, params, x, _mcmc(args)).lis


def cmd_score(args) -> int:
    _, _, lis = _lis(args)
    out = _out_dir(args.out)
    header = io.header_lines("score", args.seed, _hash_inputs(args.edges, args.stats, args.params, args.graph))
    io.write_scores_file(out / "lis.tsv", lis, header)
    print(f"lis for {len(lis)} hypotheses written to {out / 'lis.tsv'}")
    return EXIT_OK


def cmd_decide(args) -> int:
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    _, _, lis = _lis(args)
    d = lis_stepup(lis, args.alpha)
    out = _out_dir(args.out)
    header = io.header_lines(
        "decide", args.seed, _hash_inputs(args.edges, args.stats, args.params, args.graph, args.alpha)
    )
    io.write_decision_file(out / "decisions.tsv", lis, d, header)
    summary = f"k={d.k}\talpha={args.alpha:g}\tprocedure=LIS\tm={len(lis)}"
    (out / "summary.txt").write_text("\n".join(header) + "\n" + summary + "\n")
    print(summary)
    return EXIT_OK


def _add_problem_args(p, params: bool):
    p.add_argument("--edges", type=Path, required=True, help="edge list i<TAB>j[<TAB>r2]")
    p.add_argument("--stats", type=Path, required=True, help="statistics id<TAB>x[<TAB>truth]")
    if params:
        p.add_argument("--params", type=Path, required=True, help="key = value parameter file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--graph",
        choices=("edges", "max-r2"),
        default="edges",
        help="use the listed edges as-is (one shared class) or keep each node's max-r2 partner with r2 classes",
    )
    p.add_argument("--thresholds", type=float, nargs=3, default=(0.25, 0.5, 0.8), metavar=("LOW", "MID", "HIGH"))
    p.add_argument("--sweeps", type=int, default=20_000, help="Gibbs sweeps for loopy graphs")
    p.add_argument("--burn-in", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lisfdr", description="Dependence-aware FDR control with MRF-coupled mixtures.")
    parser.add_argument("--version", action="version", version=f"lisfdr {io.__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario key")
    p.add_argument("--replications", type=int)
    p.add_argument("--full-scale", action="store_true", help="full-size structures and 500 replications")
    p.add_argument("--svg", action="store_true", help="also plot ROC/PR curves")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="fit parameters by EM")
    _add_problem_args(p, params=False)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tolerance", type=float, default=5e-3)
    p.add_argument("--learn-bias", action="store_true")
    p.add_argument("--fix-sigma", action="store_true", help="keep sigma1 at 1")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("score", help="write LIS values")
    _add_problem_args(p, params=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("decide", help="apply the LIS step-up rule")
    _add_problem_args(p, params=True)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("report", help="curves from stored replications")
    p.add_argument("--in", dest="input", required=True, help="a simulate output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"lisfdr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DivergenceError, DegeneratePosteriorError) as exc:
        it = getattr(exc, "iteration", None)
        where = f" at EM iteration {it}" if it is not None else ""
        print(f"lisfdr: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        UsageError,
        FileNotFoundError,
        io.FormatError,
        ScenarioError,
        StructureError,
        GraphSizeError,
        MissingParameterError,
        DegenerateTableError,
        ValueError,
    ) as exc:
        print(f"lisfdr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
