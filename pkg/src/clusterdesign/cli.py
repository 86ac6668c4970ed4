"""Command-line surface binding all modules into reproducible runs.

Exit codes: 0 success, 1 usage error, 2 computation error (the error class
name is printed verbatim on stderr). Randomized commands require --seed,
with the CC_SEED environment variable as fallback. All file output is
UTF-8 with LF line endings; identical flags and seed give byte-identical
primary output files.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, graph as graphmod, metrics, optimizer, simulate as simmod, tuning
from .errors import ClusterDesignError, MissingNode, UnknownNode
from .partition import load_clustering, save_clustering, trivial_partitions


class UsageExit(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; contract wants 1
        raise UsageExit(f"{self.prog}: error: {message}")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_graph(path: str) -> graphmod.Graph:
    with open(path, encoding="utf-8") as fh:
        return graphmod.load_edge_list(fh)


def _load_clusters(path: str, g: graphmod.Graph):
    with open(path, encoding="utf-8") as fh:
        return load_clustering(fh, g)


def _graph_text(g: graphmod.Graph) -> str:
    buf = io.StringIO()
    graphmod.save_edge_list(g, buf)
    return buf.getvalue()


def _clusters_text(c, g) -> str:
    buf = io.StringIO()
    save_clustering(c, g, buf)
    return buf.getvalue()


def _json_line(payload: dict) -> str:
    return json.dumps({"schema": 1, **payload}) + "\n"


def _require_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageExit("CC_SEED must be an integer") from None
    raise UsageExit("--seed is required (or set CC_SEED)")


def _het_from_args(args) -> metrics.Heterogeneity:
    return metrics.Heterogeneity(
        psi_bar=getattr(args, "psi_bar", None) or 1.0,
        phi_bar=getattr(args, "phi_bar", None) or 1.0,
        lam=getattr(args, "lam", None) or 1.0,
    )


def _resolve_xi(args) -> float:
    if getattr(args, "xi", None) is not None:
        return args.xi
    if getattr(args, "phi_bar", None):
        return tuning.xi_from_psi_phi(
            getattr(args, "psi_bar", None) or 1.0, args.phi_bar, getattr(args, "lam", None) or 1.0
        )
    raise UsageExit("provide --xi, or --phi-bar (with optional --psi-bar/--lambda) to derive it")


# -- subcommand implementations -------------------------------------------


def cmd_generate(args) -> int:
    seed = _require_seed(args)
    if args.model == "geometric":
        g = graphmod.generate_geometric(args.n, seed)
    elif args.model == "barabasi":
        g = graphmod.generate_barabasi(args.n, seed, seed_block=args.seed_block)
    else:
        p = args.p if args.p is not None else 2.0 / args.n
        g = graphmod.generate_erdos_renyi(args.n, p, seed)
    _write_text(args.out, _graph_text(g))
    return 0


def cmd_threshold(args) -> int:
    g = _load_graph(args.graph)
    _write_text(args.out, _graph_text(graphmod.threshold(g, args.percentile)))
    return 0


def cmd_cluster(args) -> int:
    g = _load_graph(args.graph)
    seed = _require_seed(args)
    report = None
    if args.method == "causal":
        if args.kmin is None or args.kmax is None:
            raise UsageExit("--kmin and --kmax are required for --method causal")
        cfg = optimizer.SolverConfig(
            tol_primal=args.tol, tol_dual=args.tol, max_iter=args.max_iter, seed=seed
        )
        sdp_log: list | None = [] if args.trace_log else None
        c, report = optimizer.causal_cluster(
            g,
            _resolve_xi(args),
            args.kmin,
            min(args.kmax, g.n),
            het=None,
            cfg=cfg,
            jobs=args.jobs,
            sdp_log=sdp_log,
        )
        if args.trace_log:
            rows = ["iteration,primal_residual,dual_residual,objective"]
            rows += [f"{i},{p!r},{d!r},{o!r}" for i, p, d, o in (sdp_log or [])]
            _write_text(args.trace_log, "\n".join(rows) + "\n")
    elif args.method == "enet":
        c = baselines.epsilon_net(g, args.eps, seed)
    elif args.method == "spectral":
        c = baselines.spectral_fixed(g, args.k, seed)
    elif args.method == "louvain":
        c = baselines.louvain(g, seed)
    else:
        k = args.k if args.k is not None else max(1, g.n // 3)
        c = baselines.random_balanced(g, k, seed)
    _write_text(args.out, _clusters_text(c, g))
    if report is not None and args.out not in (None, "-"):
        sys.stdout.write(_json_line(report.to_dict()))
    return 0


def cmd_evaluate(args) -> int:
    g = _load_graph(args.graph)
    c = _load_clusters(args.clusters, g)
    report = metrics.build_report(g, c, _resolve_xi(args), _het_from_args(args))
    _write_text(args.out, _json_line(report.to_dict()))
    return 0


def cmd_frontier(args) -> int:
    g = _load_graph(args.graph)
    named = [(Path(p).stem, _load_clusters(p, g)) for p in args.clusters]
    xi_grid = [float(tok) for tok in args.xi_grid.split(",") if tok.strip()]
    rows = metrics.frontier(g, named, xi_grid, _het_from_args(args))
    _write_text(args.out, metrics.frontier_csv(rows))
    return 0


def cmd_decide(args) -> int:
    g = _load_graph(args.graph)
    c = _load_clusters(args.clusters, g)
    het = metrics.Heterogeneity(psi_bar=args.psi_bar, phi_bar=args.phi_bar, lam=args.lam)
    rot = metrics.rule_of_thumb(g, c, het)
    _write_text(
        args.out,
        _json_line(
            {
                "decision": rot.decision,
                "phi_min": rot.phi_min,
                "phi_min_sqrt_k": rot.phi_min_sqrt_k,
                "bias_frac": rot.bias_frac,
                "gamma_lower": rot.gamma_lower,
                "K": rot.k,
                "lambda": args.lam,
                "degenerate": rot.degenerate,
            }
        ),
    )
    return 0


def cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    if args.clusters is not None:
        c = _load_clusters(args.clusters, g)
    else:
        c = trivial_partitions(g.n)[0]
    seed = _require_seed(args)
    model = simmod.OutcomeModel(
        kind=args.model,
        intercept=args.intercept,
        beta_d=args.beta_d,
        kappa0=args.kappa0,
        kappa1=args.kappa1,
        gamma=args.gamma,
        noise_sd=args.noise_sd,
    )
    res = simmod.monte_carlo_mse(
        g, c, model, true_tau=args.tau, replications=args.replications, seed=seed, jobs=args.jobs
    )
    csv_lines = ["replication,tau_hat,tau,sq_error"]
    csv_lines += [f"{r},{th!r},{t!r},{sq!r}" for r, th, t, sq in res.rows()]
    _write_text(args.out, "\n".join(csv_lines) + "\n")
    sys.stdout.write(_json_line({"mse": res.mse, "se": res.se, "R": res.replications, "seed": seed}))
    return 0


def cmd_tune(args) -> int:
    labels: list[str] = []
    outcomes: list[float] = []
    covs: list[list[float]] = []
    with open(args.baseline, encoding="utf-8") as fh:
        import csv as csvmod

        reader = csvmod.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "node" or header[1].strip() != "outcome":
            raise UsageExit("baseline CSV must start with header 'node,outcome[,cov1,...]'")
        for row in reader:
            if not row:
                continue
            labels.append(row[0].strip())
            outcomes.append(float(row[1]))
            covs.append([float(v) for v in row[2:]])
    y = np.asarray(outcomes)
    x = np.column_stack([np.ones(len(y))] + ([np.asarray(covs)] if covs and covs[0] else []))
    sigma2 = tuning.residual_variance(x, y)

    gamma_hat = None
    phi_range = None
    phi_candidates = list(args.phi_bar_set or [])
    if args.graph is not None:
        g = _load_graph(args.graph)
        y_g = np.empty(g.n)
        x_g = np.ones((g.n, x.shape[1]))
        seen = np.zeros(g.n, dtype=bool)
        for pos, lab in enumerate(labels):
            if lab not in g._index:
                raise UnknownNode(f"baseline node {lab!r} is not in the graph")
            idx = g.index_of(lab)
            y_g[idx] = y[pos]
            x_g[idx] = x[pos]
            seen[idx] = True
        if not seen.all():
            miss = g.labels[int(np.nonzero(~seen)[0][0])]
            raise MissingNode(f"baseline data missing graph node {miss!r}")
        pr = tuning.phi_range_from_endogenous(g, y_g, x_g, beta_bar=args.beta_bar)
        gamma_hat = pr.gamma_hat
        phi_range = [pr.low, pr.high]
        if not phi_candidates:
            phi_candidates = [v for v in (pr.low, pr.high) if v > 0]
    intervals = tuning.xi_range(sigma2, phi_candidates) if phi_candidates else []
    _write_text(
        args.out,
        _json_line(
            {
                "sigma2": sigma2,
                "gamma_hat": gamma_hat,
                "phi_range": phi_range,
                "xi_intervals": [list(iv) for iv in intervals],
            }
        ),
    )
    return 0


# -- parser ----------------------------------------------------------------


def _add_common(sp, seed=False, out=True, jobs=False):
    if seed:
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (or env CC_SEED)")
    if out:
        sp.add_argument("--out", default=None, help="output file (default stdout)")
    if jobs:
        sp.add_argument("--jobs", type=int, default=1, help="worker parallelism bound")
    sp.add_argument("--config", default=None, help="key=value file overriding flags")


def build_parser() -> Parser:
    parser = Parser(prog="clusterdesign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    sp = sub.add_parser("generate", help="generate a synthetic network")
    sp.add_argument("--model", choices=["geometric", "barabasi", "erdos"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, default=None, help="edge probability (erdos; default 2/n)")
    sp.add_argument("--seed-block", type=int, default=None, help="barabasi seed-block size (default n/5)")
    _add_common(sp, seed=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("threshold", help="binarize a weighted graph at a weight percentile")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--percentile", type=float, required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("cluster", help="compute a clustering")
    sp.add_argument("--method", choices=["causal", "enet", "spectral", "louvain", "random"], required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--xi", type=float, default=None)
    sp.add_argument("--kmin", type=int, default=None)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--k", type=int, default=None, help="cluster count (spectral/random)")
    sp.add_argument("--eps", type=int, default=3, help="hop radius for --method enet")
    sp.add_argument("--tol", type=float, default=1e-6, help="solver primal/dual tolerance")
    sp.add_argument("--max-iter", type=int, default=5000)
    sp.add_argument("--trace-log", default=None, help="write solver iteration CSV here")
    sp.add_argument("--psi-bar", type=float, default=None)
    sp.add_argument("--phi-bar", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    _add_common(sp, seed=True, jobs=True)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("evaluate", help="design report for one clustering")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--clusters", required=True)
    sp.add_argument("--xi", type=float, default=None)
    sp.add_argument("--psi-bar", type=float, default=None)
    sp.add_argument("--phi-bar", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("frontier", help="bias/variance frontier over clusterings and xi values")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--clusters", nargs="+", required=True)
    sp.add_argument("--xi-grid", required=True, help="comma-separated xi values")
    sp.add_argument("--psi-bar", type=float, default=None)
    sp.add_argument("--phi-bar", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_frontier)

    sp = sub.add_parser("decide", help="cluster vs Bernoulli rule of thumb")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--clusters", required=True)
    sp.add_argument("--psi-bar", type=float, required=True)
    sp.add_argument("--phi-bar", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_decide)

    sp = sub.add_parser("simulate", help="Monte Carlo MSE of the design estimator")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--clusters", default=None, help="clustering CSV (default: singletons)")
    sp.add_argument("--model", choices=["linear_exogenous", "endogenous"], default="linear_exogenous")
    sp.add_argument("--intercept", type=float, default=0.0)
    sp.add_argument("--beta-d", type=float, default=0.0)
    sp.add_argument("--kappa0", type=float, default=0.0)
    sp.add_argument("--kappa1", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--noise-sd", type=float, default=0.0)
    sp.add_argument("--tau", type=float, default=None, help="estimand override (default: analytic)")
    sp.add_argument("--replications", type=int, default=10_000)
    _add_common(sp, seed=True, jobs=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("tune", help="xi range and phi range from baseline data")
    sp.add_argument("--baseline", required=True, help="CSV node,outcome,cov1,...")
    sp.add_argument("--graph", default=None)
    sp.add_argument("--phi-bar-set", type=lambda s: [float(t) for t in s.split(",") if t.strip()], default=None)
    sp.add_argument("--beta-bar", type=float, default=1.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_tune)

    return parser


def _apply_config(parser_actions, args) -> None:
    """Load key=value lines from --config; config entries override flags."""
    if getattr(args, "config", None) is None:
        return
    typed = {}
    for action in parser_actions:
        for opt in action.option_strings:
            typed[opt.lstrip("-")] = action
    with open(args.config, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageExit(f"config line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            action = typed.get(key)
            if action is None:
                raise UsageExit(f"config line {lineno}: unknown key {key!r}")
            conv = action.type or str
            setattr(args, action.dest, conv(value.strip()))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sub_actions = []
        for action in parser._subparsers._group_actions:  # reach subparser actions for --config typing
            if isinstance(action, argparse._SubParsersAction) and args.command in action.choices:
                sub_actions = action.choices[args.command]._actions
        _apply_config(sub_actions, args)
        return args.func(args)
    except UsageExit as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ClusterDesignError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
