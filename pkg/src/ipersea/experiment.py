"""End-to-end runs: build, attack, inspect, measure, write CSV."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import os
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from .adversary import AdversaryPolicy, spawn_sybils
from .analytic import (AnalyticInputs, DegenerateInputs, analytic_fp_random, analytic_fp_trusted,
                       analytic_path_length)
from .defense import FRIEND_MODES, ROLE_SETS, StatusCache, run_inspection_campaign, status_filter
from .dht import NoResult, majority_vote, replica_responses, replicated_put
from .graph import SocialGraph, mean_degree, parse_edge_list
from .idspace import build_network
from .world import World

log = logging.getLogger(__name__)

MODES = ("ipersea", "persea_majority")
EP_MODES = ("social", "bootstrap_tree")

CSV_FIELDS = (
    "dataset", "mode", "friend_mode", "gn_ratio", "seed", "success_rate", "fp_rate",
    "fn_rate", "hops_regular", "hops_inspection", "analytic_path_len", "analytic_fp",
    "nodes", "edges", "sybils", "dropped_nodes",
)

# file names tried, in order, for the named desk-scale datasets
KNOWN_DATASETS = {
    "hamsterster": ("hamsterster.txt", "hamsterster.edges", "out.petster-friendships-hamster",
                    "out.petster-hamster", "petster-hamster.txt"),
    "wiki-vote": ("wiki-Vote.txt", "wiki-vote.txt", "Wiki-Vote.txt", "soc-wiki-Vote.txt"),
    "facebook": ("out.facebook-wosn-links", "facebook-wosn-links.txt", "facebook.txt"),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = "hamsterster"
    directed: bool = False
    b: int = 31
    n_boot: int = 7
    c_f: float = 0.65
    R: int = 7
    alpha: int = 5
    beta: int = 7
    k: int = 7
    gn_ratio: float = 1.0
    sybils_per_attack_edge: int = 10
    friend_mode: str = "trusted"
    per_level: int = 1
    mode: str = "ipersea"
    lookups: int = 1000
    colluding: bool = True
    seed: int = 0
    repeats: int = 5
    roles: str = "both"
    friend_population: str = "contacts"
    ep_mode: str = "social"
    l_c: float = 0.001

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.friend_mode not in FRIEND_MODES:
            raise ConfigError(f"friend_mode must be one of {FRIEND_MODES}")
        if self.roles not in ROLE_SETS:
            raise ConfigError(f"roles must be one of {tuple(ROLE_SETS)}")
        if self.friend_population not in ("contacts", "global"):
            raise ConfigError("friend_population must be contacts or global")
        if self.ep_mode not in EP_MODES:
            raise ConfigError(f"ep_mode must be one of {EP_MODES}")
        if self.gn_ratio < 0:
            raise ConfigError("gn_ratio must be >= 0")
        for name in ("b", "n_boot", "R", "alpha", "beta", "k", "per_level", "repeats",
                     "sybils_per_attack_edge"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.lookups < 0:
            raise ConfigError("lookups must be >= 0")
        if not 0 < self.c_f < 1:
            raise ConfigError("c_f must lie in (0, 1)")
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(kind, raw: str):
    kind = str(kind)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"expected {kind}, got {raw!r}") from None
    return raw.strip()


CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def config_from_mapping(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from string (or typed) values, keys as in the dataclass."""
    out = {}
    for key, raw in values.items():
        name = key.replace("-", "_")
        if name not in CONFIG_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = _coerce(CONFIG_TYPES[name], raw) if isinstance(raw, str) else raw
    return dataclasses.replace(base or ExperimentConfig(), **out)


def read_config_file(path) -> dict[str, str]:
    """Parse a ``key = value`` file; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            values[key.strip()] = val.strip()
    return values


def data_dirs() -> list[Path]:
    env = os.environ.get("IPERSEA_DATA")
    dirs = [Path(p) for p in env.split(os.pathsep)] if env else []
    dirs.append(Path.cwd() / "data")
    dirs.append(Path(__file__).resolve().parents[2] / "data")
    return list(dict.fromkeys(dirs))


def resolve_dataset(name: str) -> Path:
    """A path as given, or a known dataset name looked up in the data dirs."""
    p = Path(name)
    if p.is_file():
        return p
    candidates = KNOWN_DATASETS.get(name.lower(), (name,))
    for d in data_dirs():
        for fname in candidates:
            if (d / fname).is_file():
                return d / fname
    raise FileNotFoundError(
        f"dataset {name!r} not found; put one of {list(candidates)} in "
        f"$IPERSEA_DATA or ./data")


def dataset_label(name: str) -> str:
    """Short name used in CSV rows: the file stem for paths."""
    return Path(name).stem if os.sep in name else name


@lru_cache(maxsize=8)
def _load(path: str, directed: bool, mtime: float) -> SocialGraph:
    return parse_edge_list(path, directed=directed)


def load_dataset(name: str, directed: bool = False) -> SocialGraph:
    path = resolve_dataset(name)
    return _load(str(path), directed, path.stat().st_mtime)


@dataclass
class RunMetrics:
    """Measurements from one seeded run."""

    seed: int
    success_rate: float
    fp_rate: float | None
    fn_rate: float | None
    hops_regular: float
    hops_inspection: float | None
    nodes: int
    sybils: int
    dropped: int
    attack_edges: int
    inspections: int = 0
    deferred: int = 0
    ledger_counts: dict = field(default_factory=dict)


@dataclass
class MetricsReport:
    config: ExperimentConfig
    seed: int
    success_rate: float
    fp_rate: float | None
    fn_rate: float | None
    hops_regular: float
    hops_inspection: float | None
    analytic_path_len: int | None
    analytic_fp: float | None
    nodes: int
    edges: int
    sybils: float
    dropped_nodes: int
    runs: list[RunMetrics] = field(default_factory=list)
    error: str | None = None

    def row(self) -> dict[str, str]:
        c = self.config
        return {
            "dataset": dataset_label(c.dataset),
            "mode": c.mode,
            "friend_mode": c.friend_mode,
            "gn_ratio": f"{c.gn_ratio:.2f}",
            "seed": str(self.seed),
            "success_rate": _fmt(self.success_rate),
            "fp_rate": _fmt(self.fp_rate),
            "fn_rate": _fmt(self.fn_rate),
            "hops_regular": _fmt(self.hops_regular),
            "hops_inspection": _fmt(self.hops_inspection),
            "analytic_path_len": "" if self.analytic_path_len is None else str(self.analytic_path_len),
            "analytic_fp": _fmt(self.analytic_fp),
            "nodes": str(self.nodes),
            "edges": str(self.edges),
            "sybils": str(round(self.sybils)),
            "dropped_nodes": str(self.dropped_nodes),
        }


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return statistics.fmean(xs) if xs else None


def _stage_rng(seed: int, stage: str) -> random.Random:
    return random.Random(f"{seed}/{stage}")


def simulate(config: ExperimentConfig, graph: SocialGraph, seed: int,
             traces: list | None = None) -> RunMetrics:
    """One seeded pass through the whole pipeline.

    Measurement lookups are appended to ``traces`` as
    ``(seed, key, replica, outcome, hops)`` rows when a list is given.
    """
    tree = build_network(graph, config.n_boot, _stage_rng(seed, "build"), config.b, config.c_f)
    honest_count = len(tree)
    dropped = len(tree.dropped_vertices)
    g = round(config.gn_ratio * honest_count)
    if g and not honest_count:
        raise ConfigError("attack edges requested but no honest node was admitted")
    report = spawn_sybils(tree, AdversaryPolicy(g, config.sybils_per_attack_edge, config.colluding),
                          _stage_rng(seed, "sybils"))
    world = World(tree, R=config.R, k=config.k, alpha=config.alpha, beta=config.beta,
                  colluding=config.colluding, rng=_stage_rng(seed, "tables"))

    node_filter = None
    fp = fn = hops_insp = None
    inspections = deferred = 0
    counts = {}
    if config.mode == "ipersea":
        campaign = run_inspection_campaign(world, _stage_rng(seed, "campaign"),
                                           mode=config.friend_mode, per_level=config.per_level,
                                           graph=graph, roles=config.roles,
                                           population=config.friend_population)
        fp, fn = campaign.fp_rate, campaign.fn_rate
        hops_insp = _mean(campaign.inspection_hops)
        inspections, deferred = len(campaign.inspections), campaign.deferred
        counts = dict(campaign.ledger.counts())
        ledger = campaign.ledger
    honest = tree.honest_nodes

    def filter_for(initiator_cache):
        if config.mode != "ipersea":
            return None
        return status_filter(tree, ledger, initiator_cache)

    caches: dict[int, StatusCache] = {}
    rng = _stage_rng(seed, "lookups")
    pairs = []
    for i in range(config.lookups):
        key = rng.getrandbits(config.b)
        value = f"value-{i}"
        initiator = honest[rng.randrange(len(honest))]
        node_filter = filter_for(caches.setdefault(initiator, StatusCache()))
        replicated_put(world, initiator, key, value, node_filter=node_filter)
        pairs.append((key, value))

    successes = 0
    hops = []
    for key, value in pairs:
        initiator = honest[rng.randrange(len(honest))]
        node_filter = filter_for(caches.setdefault(initiator, StatusCache()))
        responses = replica_responses(world, initiator, key, node_filter=node_filter)
        hops.extend(r.trace.hops for r in responses)
        if traces is not None:
            traces.extend((seed, r.key, r.replica, r.trace.outcome, r.trace.hops)
                          for r in responses)
        values = [r.value for r in responses if r.value is not None]
        if config.mode == "ipersea":
            ok = value in values
        else:
            try:
                ok = majority_vote(values, rng) == value
            except NoResult:
                ok = False
        successes += ok

    return RunMetrics(
        seed=seed,
        success_rate=successes / len(pairs) if pairs else 1.0,
        fp_rate=fp, fn_rate=fn,
        hops_regular=_mean(hops) or 0.0,
        hops_inspection=hops_insp,
        nodes=honest_count, sybils=len(report.attackers), dropped=dropped,
        attack_edges=report.attack_edges, inspections=inspections, deferred=deferred,
        ledger_counts=counts,
    )


def analytic_inputs(config: ExperimentConfig, graph: SocialGraph, honest: int,
                    attack_edges: float, tree_edges: int | None = None) -> AnalyticInputs:
    """Model inputs; ``e_p`` either from the social graph or the admitted tree."""
    if config.ep_mode == "bootstrap_tree" and tree_edges is not None:
        e_p = (2 * tree_edges + attack_edges) / honest
    else:
        e_p = mean_degree(graph)
    return AnalyticInputs(e_p=e_p, a_h=attack_edges / honest if honest else 0.0,
                          alpha=config.alpha, beta=config.beta, l_c=config.l_c,
                          c_nl=config.per_level)


def run_experiment(config: ExperimentConfig, graph: SocialGraph | None = None,
                   traces: list | None = None) -> MetricsReport:
    """Mean metrics over ``config.repeats`` seeds derived from ``config.seed``."""
    config.validate()
    if graph is None:
        graph = load_dataset(config.dataset, config.directed)
    seeds = [config.seed * 1000 + i for i in range(config.repeats)]
    runs = [simulate(config, graph, s, traces) for s in seeds]
    for r in runs:
        log.info("seed %d: success=%.4f fp=%s fn=%s", r.seed, r.success_rate, r.fp_rate, r.fn_rate)

    nodes = round(statistics.fmean(r.nodes for r in runs))
    attack_edges = statistics.fmean(r.attack_edges for r in runs)
    inputs = analytic_inputs(config, graph, nodes, attack_edges, tree_edges=nodes - config.n_boot)
    fp_model = analytic_fp_trusted if config.friend_mode == "trusted" else analytic_fp_random
    try:
        path_len, fp_analytic = analytic_path_length(inputs).hops, fp_model(inputs)
    except DegenerateInputs:
        path_len = fp_analytic = None
    return MetricsReport(
        config=config,
        seed=config.seed,
        success_rate=statistics.fmean(r.success_rate for r in runs),
        fp_rate=_mean(r.fp_rate for r in runs),
        fn_rate=_mean(r.fn_rate for r in runs),
        hops_regular=statistics.fmean(r.hops_regular for r in runs),
        hops_inspection=_mean(r.hops_inspection for r in runs),
        analytic_path_len=path_len,
        analytic_fp=fp_analytic,
        nodes=nodes,
        edges=graph.edge_count,
        sybils=statistics.fmean(r.sybils for r in runs),
        dropped_nodes=round(statistics.fmean(r.dropped for r in runs)),
        runs=runs,
    )


def _sweep_one(args):
    config, graph = args
    try:
        return run_experiment(config, graph), None
    except Exception as exc:  # recorded per row, the sweep carries on
        return None, f"{type(exc).__name__}: {exc}"


def sweep(configs: Sequence[ExperimentConfig], workers: int = 1,
          graph: SocialGraph | None = None) -> list[MetricsReport | None]:
    """Run configs independently; run ``i`` uses seed ``configs[i].seed + i``.

    Failed runs come back as None with the error logged.  Results keep the
    input order whatever the worker count.
    """
    jobs = [(c.replace(seed=c.seed + i), graph) for i, c in enumerate(configs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    else:
        outcomes = [_sweep_one(j) for j in jobs]
    reports = []
    for (config, _), (report, err) in zip(jobs, outcomes):
        if err is not None:
            log.error("run %s (gn_ratio=%s, seed=%s) failed: %s",
                      config.dataset, config.gn_ratio, config.seed, err)
        reports.append(report)
    return reports


def sweep_errors(configs: Sequence[ExperimentConfig], reports) -> list[tuple[int, str]]:
    return [(i, c.dataset) for i, (c, r) in enumerate(zip(configs, reports)) if r is None]


def write_csv(reports: Sequence[MetricsReport | None], out=None) -> str:
    """Serialise reports (skipping failed runs) to CSV text, optionally to ``out``."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        if r is not None:
            writer.writerow(r.row())
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text


TRACE_FIELDS = ("run_id", "key", "replica", "outcome", "hops")


def write_traces(rows, out) -> None:
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        writer.writerows(rows)


def gn_sweep_configs(base: ExperimentConfig, ratios: Sequence[float]) -> list[ExperimentConfig]:
    return [base.replace(gn_ratio=float(r)) for r in ratios]
