"""Acceptance suite: one PASS/FAIL line per criterion.

Criteria that need the hamsterster or wiki-Vote edge lists look for them
through ``$IPERSEA_DATA`` or ``./data``; when a file is absent the
criterion fails with the reason rather than being skipped.  Run directly
(``python3 tests/test_acceptance.py``) or under pytest, which repeats the
verdict lines in its terminal summary.
"""

import os
import random
import statistics
import sys

import pytest

from ipersea import experiment as ex
from ipersea.analytic import (AnalyticInputs, analytic_fp_random, analytic_fp_trusted,
                              analytic_path_length)
from ipersea.defense import Verdict, run_inspection_campaign, sybil_verdicts
from ipersea.dht import iterative_lookup
from ipersea.idspace import build_network, replica_keys
from ipersea.world import World

sys.path.insert(0, os.path.dirname(__file__))
from conftest import attacked_world, small_world, surrogate  # noqa: E402

RATIOS = (0.10, 0.50, 0.80, 1.0, 1.25, 1.50)
REF_FP_TRUSTED = (0.046, 0.047, 0.049, 0.05, 0.09, 0.095)
REF_FP_RANDOM = (0.046, 0.047, 0.08, 0.09, 0.14, 0.19)
FP_TOL_TRUSTED = 0.05
FP_TOL_RANDOM = 0.06
WORKERS = os.cpu_count() or 1

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n, ok, detail):
    RESULTS[n] = (ok, detail)
    print(verdict_line(n), flush=True)
    assert ok, detail


def verdict_line(n):
    ok, detail = RESULTS[n]
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def dataset(name, directed=False):
    try:
        return ex.load_dataset(name, directed)
    except FileNotFoundError:
        return None


def missing(name):
    return f"{name} edge list not found (looked in {[str(d) for d in ex.data_dirs()]})"


def test_c01_success_separation():
    g = dataset("hamsterster")
    if g is None:
        record(1, False, missing("hamsterster"))
    base = ex.ExperimentConfig(dataset="hamsterster", gn_ratio=1.0)
    configs = [base, base.replace(friend_mode="random"), base.replace(mode="persea_majority")]
    trusted, random_, persea = (r.success_rate for r in ex.sweep(configs, WORKERS, g))
    ok = trusted >= 0.95 and random_ >= 0.93 and persea <= 0.75
    record(1, ok, f"trusted={trusted:.4f} (>=0.95) random={random_:.4f} (>=0.93) "
                  f"persea_majority={persea:.4f} (<=0.75)")


def test_c02_fp_reproduction():
    g = dataset("hamsterster")
    if g is None:
        record(2, False, missing("hamsterster"))
    base = ex.ExperimentConfig(dataset="hamsterster")
    configs = (ex.gn_sweep_configs(base, RATIOS)
               + ex.gn_sweep_configs(base.replace(friend_mode="random"), RATIOS))
    reports = ex.sweep(configs, WORKERS, g)
    fps = [r.fp_rate for r in reports]
    trusted, random_ = fps[:6], fps[6:]
    bad = [f"trusted@{x}: {m:.3f} vs {t}" for x, m, t in zip(RATIOS, trusted, REF_FP_TRUSTED)
           if abs(m - t) > FP_TOL_TRUSTED]
    bad += [f"random@{x}: {m:.3f} vs {t}" for x, m, t in zip(RATIOS, random_, REF_FP_RANDOM)
            if abs(m - t) > FP_TOL_RANDOM]
    record(2, not bad, "; ".join(bad) or
           "trusted " + " ".join(f"{m:.3f}" for m in trusted)
           + " | random " + " ".join(f"{m:.3f}" for m in random_))


def campaign_fn(g, ratio, seed):
    world = attacked_world(g, ratio, seed)
    result = run_inspection_campaign(world, random.Random(seed), "trusted", graph=g)
    return result.fn_rate


def test_c03_fn_exactness():
    fns = []
    for seed, g in enumerate([small_world(300, 1), small_world(256, 2), surrogate(seed=3)]):
        fns += [campaign_fn(g, ratio, seed) for ratio in RATIOS]
    synthetic_ok = all(fn == 0.0 for fn in fns)
    detail = f"synthetic: {len(fns)} campaigns, max FN {max(fns):.4f}"
    absent = []
    for name, directed in (("hamsterster", False), ("wiki-vote", True)):
        g = dataset(name, directed)
        if g is None:
            absent.append(name)
            continue
        real = [campaign_fn(g, ratio, 0) for ratio in RATIOS]
        synthetic_ok &= all(fn == 0.0 for fn in real)
        detail += f"; {name}: max FN {max(real):.4f}"
    if absent:
        detail += "; " + ", ".join(missing(n) for n in absent)
    record(3, synthetic_ok and not absent, detail)


def test_c04_target_role_purity():
    rates = []
    for seed, g in enumerate([surrogate(seed=4), small_world(400, 5)]):
        for ratio in (0.5, 1.0, 1.5):
            world = attacked_world(g, ratio, seed)
            res = run_inspection_campaign(world, random.Random(seed), "trusted", graph=g,
                                          roles="target")
            rates.append((res.fp_rate, res.fn_rate))
    ok = all(fp == 0.0 and fn == 0.0 for fp, fn in rates)
    record(4, ok, f"{len(rates)} target-only campaigns, (FP, FN) seen: {sorted(set(rates))}")


def test_c05_filtering_completeness():
    graphs = [("surrogate-2426", surrogate(seed=6)), ("ws-400", small_world(400, 7)),
              ("ws-1000", small_world(1000, 8))]
    g = dataset("hamsterster")
    if g is not None:
        graphs.append(("hamsterster", g))
    checked = missed = 0
    for seed, (name, graph) in enumerate(graphs):
        for ratio in (1.0, 1.5):
            world = attacked_world(graph, ratio, seed)
            tree = world.tree
            res = run_inspection_campaign(world, random.Random(seed), "trusted", graph=graph)
            verdicts = sybil_verdicts(tree, res.ledger, tree.attacker_nodes)
            checked += len(verdicts)
            missed += sum(v is not Verdict.MALICIOUS for v in verdicts.values())
    names = ", ".join(n for n, _ in graphs)
    record(5, missed == 0, f"{checked} Sybils over [{names}], {missed} resolved honest")


def test_c06_hop_ranges():
    g = dataset("hamsterster")
    if g is None:
        record(6, False, missing("hamsterster"))
    base = ex.ExperimentConfig(dataset="hamsterster", gn_ratio=1.5)
    configs = [base, base.replace(friend_mode="random"), base.replace(mode="persea_majority")]
    reports = ex.sweep(configs, WORKERS, g)
    insp = [r.hops_inspection for r in reports[:2]]
    regular = [r.hops_regular for r in reports]
    ok = all(1.0 <= h <= 2.0 for h in insp) and all(2.0 <= h <= 4.0 for h in regular)
    record(6, ok, "inspection " + " ".join(f"{h:.2f}" for h in insp) + " in [1,2]; regular "
           + " ".join(f"{h:.2f}" for h in regular) + " in [2,4]")


def oracle_path_length(e_p, a_h, alpha=5, beta=7, l_c=0.001, cap=50):
    r = a_h / e_p
    m = alpha * beta * r + (1 - alpha * r) * beta * r
    p = 1.0
    for j in range(1, cap + 1):
        p *= min(1.0, max(0.0, m / (alpha * beta)))
        if p <= l_c:
            return j
        m += (alpha - m / beta) * beta * r
    return cap


def test_c07_analytic_spot_values():
    e_p = 2 * 16631 / 2426
    got = analytic_path_length(AnalyticInputs(e_p, 1.0, l_c=0.001)).hops
    want = oracle_path_length(e_p, 1.0)
    grid = [AnalyticInputs(e_p, e_p * frac) for e_p in (2.0, 8.0, 13.711, 30.0, 48.51)
            for frac in [i / 19 for i in range(20)]]
    dominated = sum(analytic_fp_random(x) >= analytic_fp_trusted(x) for x in grid)
    ok = got == want == 4 and dominated == len(grid) == 100
    record(7, ok, f"path length {got} (oracle {want}, hand 4); "
                  f"fp_random >= fp_trusted on {dominated}/{len(grid)} grid points")


def test_c08_lookup_oracle():
    wrong = total = 0
    for t in range(50):
        n = random.Random(t).randint(20, 256)
        rng = random.Random(t)
        tree = build_network(small_world(n, t), n_boot=min(7, n), rng=rng)
        world = World(tree, rng=rng)
        ids = tree.ids
        for _ in range(100):
            key = rng.getrandbits(31)
            trace = iterative_lookup(world, rng.randrange(len(tree)), key)
            lo, hi = world.region(key)
            inside = [i for i in range(len(ids)) if lo <= ids[i] < hi]
            brute = min(inside, key=lambda i: ids[i] ^ key) if inside else None
            total += 1
            wrong += not (trace.found and trace.owner == brute)
    record(8, wrong == 0, f"{total - wrong}/{total} lookups reached the brute-force owner")


def test_c09_replica_spacing():
    rng = random.Random(9)
    worst = 0
    for _ in range(1000):
        ring = sorted(replica_keys(rng.getrandbits(31), 7, 31))
        gaps = [b - a for a, b in zip(ring, ring[1:])] + [ring[0] + (1 << 31) - ring[-1]]
        worst = max(worst, max(gaps) - min(gaps))
    record(9, worst <= 1, f"max gap spread over 1000 keys = {worst} (<= 1)")


def test_c10_determinism():
    g = small_world(200, 10)
    base = ex.ExperimentConfig(dataset="ws-200", lookups=40, repeats=2, seed=42)
    configs = ex.gn_sweep_configs(base, RATIOS)
    first = ex.write_csv(ex.sweep(configs, 1, g))
    second = ex.write_csv(ex.sweep(configs, min(WORKERS, 3), g))
    record(10, first == second, f"{len(first.splitlines()) - 1} rows, "
                                f"{'identical' if first == second else 'different'} bytes")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except (AssertionError, pytest.fail.Exception):
                pass
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
