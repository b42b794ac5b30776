"""Command line: ``ipersea {run,sweep,analyze,stats}``.

Every experiment setting can come from a ``key = value`` config file
(``--config``) and be overridden by a flag of the same name.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys

from . import experiment as ex
from .analytic import (AnalyticInputs, DegenerateInputs, analytic_fp_random, analytic_fp_trusted,
                       analytic_path_length)
from .graph import graph_stats

DEFAULT_RATIOS = "0.10,0.50,0.80,1.0,1.25,1.50"

# flags with a spelling of their own; everything else is --field-name
ALIASES = {"friend_mode": ("--friends", "--friend-mode"), "gn_ratio": ("--gn-ratio",)}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file supplying defaults")
    for f in dataclasses.fields(ex.ExperimentConfig):
        flags = ALIASES.get(f.name, ("--" + f.name.replace("_", "-"),))
        if str(f.type) == "bool":
            p.add_argument(*flags, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(*flags, dest=f.name, default=None, metavar=f.name.upper())


def _config(args) -> ex.ExperimentConfig:
    values = ex.read_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(ex.ExperimentConfig):
        v = getattr(args, f.name)
        if v is not None:
            values[f.name] = v if isinstance(v, bool) else str(v)
    return ex.config_from_mapping(values).validate()


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    config = _config(args)
    traces = [] if args.trace_out else None
    report = ex.run_experiment(config, traces=traces)
    _write(ex.write_csv([report]), args.out)
    if args.verbose:
        for r in report.runs:
            print(f"# seed {r.seed}: success={r.success_rate:.4f} fp={r.fp_rate} "
                  f"fn={r.fn_rate} deferred={r.deferred}", file=sys.stderr)
    if traces is not None:
        ex.write_traces(traces, args.trace_out)
    return 0


def cmd_sweep(args) -> int:
    base = _config(args)
    ratios = [float(x) for x in args.ratios.split(",") if x.strip()]
    configs = ex.gn_sweep_configs(base, ratios)
    reports = ex.sweep(configs, workers=args.workers)
    _write(ex.write_csv(reports), args.out)
    failed = sum(r is None for r in reports)
    if failed:
        print(f"{failed} of {len(reports)} runs failed; see log", file=sys.stderr)
    return 1 if failed else 0


def _simulated(path) -> dict:
    """(dataset, friend_mode, gn_ratio) -> row from an earlier sweep CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        return {(r["dataset"], r["friend_mode"], f"{float(r['gn_ratio']):.2f}"): r
                for r in csv.DictReader(fh)}


def cmd_analyze(args) -> int:
    config = _config(args)
    graph = ex.load_dataset(config.dataset, config.directed)
    stats = graph_stats(graph)
    sim = _simulated(args.compare) if args.compare else {}
    ratios = [float(x) for x in args.ratios.split(",") if x.strip()]
    fields = ["dataset", "gn_ratio", "e_p", "a_h", "analytic_path_len", "analytic_fp_trusted",
              "analytic_fp_random", "sim_hops_regular", "sim_fp_trusted", "sim_fp_random"]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(fields)
        for ratio in ratios:
            inputs = AnalyticInputs(stats.mean_degree, ratio, config.alpha, config.beta,
                                    config.l_c, c_nl=config.per_level)
            try:
                model = [analytic_path_length(inputs).hops, f"{analytic_fp_trusted(inputs):.4f}",
                         f"{analytic_fp_random(inputs):.4f}"]
            except DegenerateInputs:
                model = ["", "", ""]
            name = ex.dataset_label(config.dataset)
            trusted = sim.get((name, "trusted", f"{ratio:.2f}"), {})
            random_ = sim.get((name, "random", f"{ratio:.2f}"), {})
            w.writerow([name, f"{ratio:.2f}", f"{inputs.e_p:.4f}", f"{inputs.a_h:.4f}", *model,
                        trusted.get("hops_regular", ""), trusted.get("fp_rate", ""),
                        random_.get("fp_rate", "")])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_stats(args) -> int:
    graph = ex.load_dataset(args.dataset, args.directed)
    s = graph_stats(graph)
    print(f"nodes {s.node_count}")
    print(f"edges {s.edge_count}")
    print(f"mean_degree {s.mean_degree:.4f}")
    print(f"clustering {s.clustering:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipersea", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one configuration, mean over repeats")
    _add_config_flags(run)
    run.add_argument("--out", help="CSV path (default stdout)")
    run.add_argument("--trace-out", help="also write per-lookup traces here")
    run.add_argument("-v", "--verbose", action="store_true", help="per-seed lines on stderr")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="one run per g/n ratio")
    _add_config_flags(sw)
    sw.add_argument("--ratios", default=DEFAULT_RATIOS)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    an = sub.add_parser("analyze", help="analytic model for a dataset")
    _add_config_flags(an)
    an.add_argument("--ratios", default=DEFAULT_RATIOS)
    an.add_argument("--compare", help="sweep CSV to set the model against")
    an.add_argument("--out")
    an.set_defaults(func=cmd_analyze)

    st = sub.add_parser("stats", help="node/edge counts and clustering")
    st.add_argument("--dataset", required=True)
    st.add_argument("--directed", action="store_true")
    st.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ex.ConfigError, FileNotFoundError) as exc:
        parser.exit(2, f"ipersea: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
