"""Command-line entry point: ``msyds <command> [flags]``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 guard exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import time
from dataclasses import fields

import numpy as np

from . import experiments as ex
from .dynamics import (
    MasterKind,
    ThresholdSystem,
    as_config,
    format_bits,
    thresholds_text,
    trajectory,
)
from .graph import EdgeListError, MultilayerNetwork, generate_multi_gnp, read_edge_list, serialize_edge_list
from .learner import (
    BernoulliDistribution,
    LearningProblem,
    empirical_risk,
    estimate_true_error,
    load_training_set,
    make_training_set,
    pac_learn,
    sample_size_generic,
    sample_size_pac,
    sample_size_pmac,
)
from .ndim import (
    GuardExceeded,
    dfs_canonical_set,
    is_canonical,
    natarajan_dimension,
    pnn_set,
    q_set_check,
)

EXIT_USAGE, EXIT_DATA, EXIT_GUARD = 2, 3, 4


class UsageError(Exception):
    pass


# --- parsers ---------------------------------------------------------------

def _experiment_flags() -> argparse.ArgumentParser:
    """Flags shared by every command that builds an ExperimentConfig.

    Defaults are None so that values from --config survive unless a flag is
    given explicitly.
    """
    pp = argparse.ArgumentParser(add_help=False)
    g = pp.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    g.add_argument("--graph", help="edge-list file")
    g.add_argument("--n", type=int, help="vertices of a generated Multi-Gnp graph")
    g.add_argument("--k", type=int, help="layers of a generated graph")
    g.add_argument("--avg-deg", type=float, help="expected per-layer degree of a generated graph")
    g.add_argument("--edge-prob", type=float, help="edge probability of a generated graph")
    g.add_argument("--graph-seed", type=int, help="seed for graph generation (default: --seed)")
    g.add_argument("--thresholds", help="target threshold file (default: random per trial)")
    g.add_argument("--master", choices=["or", "and"])
    g.add_argument("--unknown", action="append", help="all | FILE | random:SIGMA (repeatable in sweeps)")
    g.add_argument("--p", type=float, action="append", help="probability a vertex is 0 (repeatable)")
    g.add_argument("--train-size", type=int, action="append", help="training set size (repeatable)")
    g.add_argument("--eval-samples", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--jobs", type=int)
    g.add_argument("--csv", help="output CSV path (default: stdout)")
    return pp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msyds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _experiment_flags()

    g = sub.add_parser("gen", help="write a random Multi-Gnp edge list")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    how = g.add_mutually_exclusive_group(required=True)
    how.add_argument("--avg-deg", type=float, help="expected degree per layer, p = d/(n-1)")
    how.add_argument("--p", "--edge-prob", dest="edge_prob", type=float, help="edge probability")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default: stdout)")

    s = sub.add_parser("simulate", help="print a trajectory, one configuration per line")
    s.add_argument("--graph", required=True)
    s.add_argument("--thresholds", required=True)
    s.add_argument("--master", choices=["or", "and"], default="or")
    init = s.add_mutually_exclusive_group(required=True)
    init.add_argument("--init", help="initial configuration as a bit string")
    init.add_argument("--init-p", type=float, help="draw the initial configuration with 0-probability p")
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)

    le = sub.add_parser("learn", parents=[common], help="learn thresholds once and write them out")
    le.add_argument("--training", help="training-set file ('C Csucc' lines) instead of sampling")
    le.add_argument("--out", help="learned threshold file (default: stdout)")

    sub.add_parser("sweep", parents=[common], help="loss over p, unknown sets and training sizes")
    sw = sub.choices["sweep"]
    sw.add_argument("--summary", help="write per-cell mean/std CSV here (default: stderr)")

    for name, extra in (("validate-pac", False), ("validate-pmac", True)):
        v = sub.add_parser(name, parents=[common], help=f"{name[9:].upper()} guarantee check at the bound's q")
        v.add_argument("--eps", type=float, required=True)
        v.add_argument("--delta", type=float, required=True)
        if extra:
            v.add_argument("--beta", type=float, required=True)
        v.add_argument("--slack", type=float, help="allowed excess over delta (default: 3 binomial std errors)")

    nd = sub.add_parser("ndim", parents=[common], help="Natarajan dimension bound or exact value")
    nd.add_argument("--method", choices=["dfs", "pnn", "oracle"], required=True)
    nd.add_argument("--layer", type=int, default=0, help="layer used by --method dfs")
    nd.add_argument("--max-vertices", type=int, default=5, help="size guard for --method oracle")

    b = sub.add_parser("bounds", help="training-set size bounds")
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--sigma", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--beta", type=float)
    b.add_argument("--davg", type=float)
    return parser


# --- helpers ---------------------------------------------------------------

_CONFIG_FIELDS = {f.name for f in fields(ex.ExperimentConfig)}


def _config(args) -> ex.ExperimentConfig:
    base = ex.ExperimentConfig.from_json(args.config) if args.config else ex.ExperimentConfig()
    overrides = {name: getattr(args, name, None) for name in _CONFIG_FIELDS}
    try:
        return base.merged(overrides).validate()
    except ex.ConfigError as exc:
        raise UsageError(str(exc)) from None


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _known_problem(cfg, net) -> tuple[LearningProblem, ThresholdSystem | None]:
    """Problem for single-run commands; the target is only available with a threshold file or seed."""
    if len(cfg.unknown) != 1:
        raise UsageError("this command takes a single --unknown")
    target = ex.target_for_trial(
        net, cfg.master, cfg.seed,
        ex.load_thresholds_file(cfg.thresholds, net) if cfg.thresholds else None)
    u = ex.resolve_unknown(cfg.unknown[0], net, cfg.seed)
    return LearningProblem.from_target(target, u), target


# --- commands --------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.n < 0 or args.k < 1:
        raise UsageError("need --n >= 0 and --k >= 1")
    if args.avg_deg is not None:
        prob = args.avg_deg / (args.n - 1) if args.n > 1 else 0.0
    else:
        prob = args.edge_prob
    if not 0.0 <= prob <= 1.0:
        raise UsageError(f"edge probability {prob} outside [0, 1]")
    net = generate_multi_gnp(args.n, args.k, prob, np.random.default_rng(args.seed))
    with _output(args.out) as fh:
        fh.write(serialize_edge_list(net))
    return 0


def cmd_simulate(args) -> int:
    net = read_edge_list(args.graph)
    tau = ex.load_thresholds_file(args.thresholds, net)
    system = ThresholdSystem(net, MasterKind.parse(args.master), tau)
    if args.init is not None:
        c0 = as_config(args.init, net.n)
    else:
        c0 = BernoulliDistribution(args.init_p).sample(net.n, 1, np.random.default_rng(args.seed))[0]
    for c in trajectory(system, c0, args.steps):
        print(format_bits(c))
    return 0


def cmd_learn(args) -> int:
    cfg = _config(args)
    net = ex.build_network(cfg)
    problem, target = _known_problem(cfg, net)
    if args.training:
        with open(args.training, "rb") as fh:
            train = load_training_set(fh, net.n)
    else:
        if len(cfg.p) != 1 or len(cfg.train_size) != 1:
            raise UsageError("learn takes a single --p and --train-size")
        dist = BernoulliDistribution(cfg.p[0])
        train = make_training_set(target, dist, cfg.train_size[0],
                                  np.random.default_rng([cfg.seed, 2, ex._p_key(cfg.p[0])]))
    h = pac_learn(problem, train)
    with _output(args.out) as fh:
        fh.write(thresholds_text(h.tau))
    report = [f"examples: {len(train)}", f"empirical_risk: {empirical_risk(h, train)}"]
    if not args.training:
        dist = BernoulliDistribution(cfg.p[0])
        loss = estimate_true_error(h, target, dist, cfg.eval_samples,
                                   np.random.default_rng([cfg.seed, 3, ex._p_key(cfg.p[0]), len(train)]))
        report.append(f"loss: {loss!r}")
    print("\n".join(report), file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    rows = ex.sweep(cfg)
    with _output(cfg.csv) as fh:
        ex.write_csv(rows, fh)
    summary = ex.summarize(rows)
    if args.summary:
        with _output(args.summary) as fh:
            ex.write_csv(summary, fh)
    else:
        ex.write_csv(summary, sys.stderr)
    return 0


def _cmd_validate(args, kind: str) -> int:
    cfg = _config(args)
    try:
        if kind == "pac":
            rep = ex.validate_pac(cfg, args.eps, args.delta, args.slack)
        else:
            rep = ex.validate_pmac(cfg, args.eps, args.delta, args.beta, args.slack)
    except ex.ConfigError as exc:
        raise UsageError(str(exc)) from None
    print("\n".join(rep.lines()))
    if cfg.csv:
        with _output(cfg.csv) as fh:
            ex.write_csv(rep.rows, fh)
    return 0


def cmd_validate_pac(args) -> int:
    return _cmd_validate(args, "pac")


def cmd_validate_pmac(args) -> int:
    return _cmd_validate(args, "pmac")


def cmd_ndim(args) -> int:
    cfg = _config(args)
    net = ex.build_network(cfg)
    if len(cfg.unknown) != 1:
        raise UsageError("ndim takes a single --unknown")
    unknown = ex.resolve_unknown(cfg.unknown[0], net, cfg.seed)
    sigma = len(unknown)
    t0 = time.perf_counter()
    certified = ""
    if args.method == "dfs":
        if not 0 <= args.layer < net.k:
            raise UsageError(f"--layer must lie in 0..{net.k - 1}")
        if sigma == 0:
            raise UsageError("dfs needs at least one unknown vertex")
        layer = MultilayerNetwork(net.n, [net.layers[args.layer]])
        r = dfs_canonical_set(layer, unknown)
        value = len(r)
        certified = is_canonical(layer, r, unknown) is not None
    elif args.method == "pnn":
        q = pnn_set(net, unknown)
        value = len(q)
        # pairwise re-check is quadratic; only done where it stays cheap
        if value <= 200:
            certified = q_set_check(net, unknown, q.pairs)
    else:
        if cfg.thresholds is None and sigma != net.n:
            raise UsageError("oracle with known vertices needs --thresholds")
        problem, _ = _known_problem(cfg, net)
        value, _ = natarajan_dimension(problem, max_vertices=args.max_vertices)
        certified = True
    seconds = time.perf_counter() - t0
    with _output(cfg.csv) as fh:
        fh.write(ex.CSV_TAG + "\n")
        fh.write("method,n,k,sigma,value,certified,seconds\n")
        cert = "" if certified == "" else ("1" if certified else "0")
        fh.write(f"{args.method},{net.n},{net.k},{sigma},{value},{cert},{seconds:.6f}\n")
    return 0


def cmd_bounds(args) -> int:
    try:
        lines = [f"pac={sample_size_pac(args.eps, args.delta, args.sigma, args.k)}"]
        if args.beta is not None:
            lines.append(f"pmac={sample_size_pmac(args.eps, args.delta, args.beta, args.sigma, args.k)}")
        if args.davg is not None:
            lines.append(f"generic={sample_size_generic(args.eps, args.delta, args.sigma, args.k, args.davg)!r}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("\n".join(lines))
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "learn": cmd_learn,
    "sweep": cmd_sweep,
    "validate-pac": cmd_validate_pac,
    "validate-pmac": cmd_validate_pmac,
    "ndim": cmd_ndim,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ex.ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"msyds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuardExceeded as exc:
        print(f"msyds: guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (EdgeListError, ValueError, OSError) as exc:
        print(f"msyds: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
