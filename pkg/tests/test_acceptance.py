"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run only the fast ones with ``pytest -m "not slow"``.
"""
import json
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import naive_pair_count, record
from geocnet.cli import main
from geocnet.corrdim import CorrDimConfig, count_pairs_within
from geocnet.dynamics import NetworkSpec, generate_er_graph, load_bundled_graph, simulate
from geocnet.evaluation import confusion, roc_sweep
from geocnet.geoc import geo_conditional, geoc
from geocnet.ogeoc import (
    ShuffleConfig,
    infer_network,
    shuffle_threshold,
    surrogate_values,
    threshold_index,
)

# Backward threshold for the long-run chain and network checks. It sits between
# the residual GeoC of pruned links (max 0.016) and genuine links (min 0.059)
# measured at T = 10000 on calibration seeds disjoint from the ones used here.
CALIBRATED_EPS_BACKWARD = 0.03


def test_criterion_1_pair_count_oracle():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    mismatches = 0
    checks = 0
    for _ in range(200):
        t = int(rng.integers(2, 501))
        dim = int(rng.integers(1, 7))
        x = rng.random((t, dim))
        if rng.random() < 0.3:
            x = np.round(x * 8) / 8  # exact ties on the radii
        norm = "max" if rng.random() < 0.7 else "euclidean"
        radii = np.sort(rng.uniform(0.01, 1.2, 10))
        if rng.random() < 0.3:
            radii[:3] = [0.125, 0.25, 0.5]
        for r in radii:
            checks += 1
            got = count_pairs_within(x, float(r), norm)
            mismatches += got != naive_pair_count(x, float(r), norm)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(1, ok, f"{checks - mismatches}/{checks} counts exact, {elapsed:.1f}s")
    assert ok


def test_criterion_2_analytic_dimensions():
    cfg = CorrDimConfig(region="auto")
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    got = []
    ok = True
    for dim, tol in ((1, 0.1), (2, 0.15), (3, 0.25)):
        x = rng.random((10000, dim))
        d2 = cfg.estimate(x).d2
        got.append(d2)
        ok &= abs(d2 - dim) <= tol
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(2, ok, "D2 = " + ", ".join(f"{v:.3f}" for v in got) + f" ({elapsed:.1f}s)")
    assert ok


@pytest.mark.slow
def test_criterion_3_single_value_significance():
    # directed7 is 0-based: node 1 drives node 2, node 6 does not
    spec = NetworkSpec(load_bundled_graph("directed7"))
    cfg = ShuffleConfig(100, 0.01, seed=0)
    pos = 0
    rejected = 0
    seeds = range(2000, 2020)
    for seed in seeds:
        panel = simulate(spec, t_keep=10000, seed=seed)
        g = geoc(panel, 1, 2)
        pos += g.value > 0 and g.value > shuffle_threshold(panel, 2, 1, (), cfg=cfg)
        h = geoc(panel, 6, 2, (1,))
        rejected += not h.value > shuffle_threshold(panel, 2, 6, (1,), cfg=cfg)
    n = len(seeds)
    ok = pos >= 0.95 * n and rejected >= 0.95 * n
    record(3, ok, f"true link significant {pos}/{n}, non-link rejected {rejected}/{n}")
    assert ok


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 5), t=st.integers(60, 200),
       data=st.data())
def check_exact_reductions(seed, n, t, data):
    panel = simulate(NetworkSpec(generate_er_graph(n, 0.3, seed)), t_keep=t, seed=seed,
                     t_transient=50)
    nodes = list(range(n))
    i = data.draw(st.sampled_from(nodes))
    j = data.draw(st.sampled_from(nodes))
    k = data.draw(st.lists(st.sampled_from(nodes), unique=True, max_size=n - 1))

    inside = geoc(panel, j, i, sorted(set(k) | {j}))
    assert inside.value == 0.0

    g = geoc(panel, j, i, k)
    expansion = (g.d2_target_given_k - g.d2_k) - (g.d2_target_given_jk - g.d2_jk)
    assert abs(g.value - expansion) <= 1e-12

    own = geoc(panel, j, i, [i])
    two_term = geo_conditional(panel, i, [i]) - geo_conditional(panel, i, sorted({i, j}))
    assert own.value == two_term


def test_criterion_4_exact_reductions():
    try:
        check_exact_reductions()
        ok, detail = True, "J in K gives 0.0, expansion within 1e-12, K=I two-term form exact"
    except AssertionError as exc:
        ok, detail = False, f"counterexample: {exc}"
    record(4, ok, detail + " over 40 random panels")
    assert ok, detail


@pytest.mark.slow
def test_criterion_5_indirect_link_pruning():
    spec = NetworkSpec(load_bundled_graph("chain3"))
    want = [(), (0,), (1,)]
    exact = 0
    seeds = range(1000, 1020)
    misses = []
    for seed in seeds:
        panel = simulate(spec, t_keep=10000, seed=seed)
        res = infer_network(panel, eps_backward=CALIBRATED_EPS_BACKWARD)
        got = [tuple(sorted(set(p) - {i})) for i, p in enumerate(res.parents)]
        if got == want:
            exact += 1
        else:
            misses.append((seed, got))
    ok = exact >= 18
    record(5, ok, f"exact chain recovered in {exact}/20 seeds "
                  f"(eps_backward {CALIBRATED_EPS_BACKWARD}); misses {misses}")
    assert ok


@pytest.mark.slow
def test_criterion_6_full_network_recovery():
    truth = load_bundled_graph("directed7")
    spec = NetworkSpec(truth)
    sizes = (1000, 3000, 10000)
    tprs = {t: [] for t in sizes}
    fprs = {t: [] for t in sizes}
    for seed in range(3000, 3010):
        full = simulate(spec, t_keep=max(sizes), seed=seed)
        for t in sizes:
            res = infer_network(full.head(t), eps_backward=CALIBRATED_EPS_BACKWARD)
            cc = confusion(res.adjacency_estimate, truth)
            tprs[t].append(cc.tpr)
            fprs[t].append(cc.fpr)
    mean_tpr = {t: float(np.mean(tprs[t])) for t in sizes}
    mean_fpr = {t: float(np.mean(fprs[t])) for t in sizes}
    rising = all(mean_tpr[a] <= mean_tpr[b] for a, b in zip(sizes, sizes[1:]))
    ok = mean_tpr[10000] >= 0.95 and mean_fpr[10000] <= 0.05 and rising
    detail = "; ".join(f"T={t} TPR {mean_tpr[t]:.3f} FPR {mean_fpr[t]:.3f}" for t in sizes)
    record(6, ok, detail)
    assert ok


ROC_THETAS = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]


@pytest.mark.slow
def test_criterion_7_roc_behaviour():
    truth = generate_er_graph(20, 0.1, seed=7)
    full = simulate(NetworkSpec(truth), t_keep=1000, seed=7)
    cfg = ShuffleConfig(100, 0.01, seed=0)
    panels = {t: full.head(t) for t in (500, 1000)}
    curves = {t: roc_sweep(p, truth, ROC_THETAS, cfg_base=cfg) for t, p in panels.items()}
    assert not any(p.error for pts in curves.values() for p in pts)
    dominated = sum(b.tpr >= a.tpr for a, b in zip(curves[500], curves[1000]))
    frac = dominated / len(ROC_THETAS)
    top_fpr = {t: pts[-1].fpr for t, pts in curves.items()}
    # "FPR -> 1": the largest-theta point must come close to one on both curves
    fpr_ok = all(v >= 0.9 for v in top_fpr.values())
    ok = frac >= 0.8 and fpr_ok
    # diagnostic only: false positives among forward candidates before pruning
    fwd = {}
    for t, p in panels.items():
        res = infer_network(p, cfg=cfg.with_theta(ROC_THETAS[-1]))
        cand = np.zeros_like(truth)
        for i, c in enumerate(res.candidates):
            cand[i, list(c)] = 1
        fwd[t] = confusion(cand, truth).fpr
    record(7, ok, f"TPR(1000) >= TPR(500) at {dominated}/{len(ROC_THETAS)} thetas; "
                  f"FPR at theta 0.99: T=500 {top_fpr[500]:.3f}, T=1000 {top_fpr[1000]:.3f} "
                  f"(forward candidates before pruning: {fwd[500]:.3f}, {fwd[1000]:.3f})")
    assert ok


@pytest.mark.slow
def test_criterion_8_thread_determinism(tmp_path):
    assert main(["simulate", "--graph", "directed7", "--t", "3000", "--seed", "5",
                 "--out", str(tmp_path), "--name", "net"]) == 0
    docs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        assert main(["infer", "--panel", str(tmp_path / "net.csv"), "--seed", "5",
                     "--threads", threads, "--out", str(out)]) == 0
        docs.append((out / "infer.json").read_bytes())
    ok = docs[0] == docs[1]
    edges = int(np.sum(json.loads(docs[0])["adjacency"]))
    record(8, ok, f"threads 1 vs 4 JSON byte-identical: {ok} ({len(docs[0])} bytes, "
                  f"{edges} edges)")
    assert ok


def test_criterion_9_order_statistic():
    rng = np.random.default_rng(909)
    start = time.perf_counter()
    panel = simulate(NetworkSpec(load_bundled_graph("chain3")), t_keep=50, seed=0,
                     t_transient=10)
    exact = 0
    for _ in range(50):
        n_p = int(rng.integers(1, 500))
        theta = float(rng.uniform(0.0, 1.0))
        idx = threshold_index(n_p, theta)
        while idx >= n_p:
            theta = float(rng.uniform(0.0, 1.0))
            idx = threshold_index(n_p, theta)
        assert idx == math.floor(n_p * (1 - theta) + 1e-9)
        values = rng.normal(size=n_p)
        eps = shuffle_threshold(panel, 1, 0, (), cfg=ShuffleConfig(n_p, theta),
                                surrogates=values)
        exact += eps == np.sort(values)[idx]
    elapsed = time.perf_counter() - start
    ok = exact == 50 and elapsed < 1.0
    record(9, ok, f"{exact}/50 thresholds exact ({elapsed * 1000:.0f} ms)")
    assert ok


def test_criterion_9_uses_real_surrogates_the_same_way():
    panel = simulate(NetworkSpec(load_bundled_graph("chain3")), t_keep=300, seed=1)
    cfg = ShuffleConfig(30, 0.1, seed=4)
    sur = surrogate_values(panel, 1, 0, (), cfg=cfg)
    assert shuffle_threshold(panel, 1, 0, (), cfg=cfg) == np.sort(sur)[cfg.array_index]
