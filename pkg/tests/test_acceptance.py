"""Acceptance criteria, each at its stated tolerance and scale.

Every test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary. Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from _oracles import mc_first_crossing
from _report import report
from gsperm.boundaries import (BoundarySet, CovarianceSchedule, crossing_probabilities,
                               normal_boundaries)
from gsperm.decision import decide
from gsperm.design import SpendingFunction, spend
from gsperm.distributions import draw_stage, parse_dist
from gsperm.permutation import (mixture_variance_target, permutation_boundaries,
                                permutation_replicates, sequential_cutoffs, tie_tolerance)
from gsperm.rng import stream
from gsperm.simulation import ScenarioConfig, run_scenario
from gsperm.stats import LookSummary, TrialData, look_summary, welch_df

WORKERS = os.cpu_count() or 1
NULL_BAND = (0.025 - 3 * math.sqrt(0.025 * 0.975 / 2000),
             0.025 + 3 * math.sqrt(0.025 * 0.975 / 2000))


def test_criterion_01_fixed_sample_reduction():
    t0 = time.perf_counter()
    b = normal_boundaries(CovarianceSchedule([1.0]), SpendingFunction("pocock", 0.025))
    secs = time.perf_counter() - t0
    ok = abs(b.values[0] - 1.95996) <= 1e-5 and secs < 1.0
    assert report(1, "K=1 normal boundary", ok, f"c={b.values[0]:.8f}, {secs:.3f}s")


def test_criterion_02_boundary_oracle_agreement():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        k = int(rng.integers(1, 6))
        inner = np.sort(rng.choice(np.arange(5, 96), size=k - 1, replace=False)) / 100.0
        fr = inner.tolist() + [1.0]
        sf = SpendingFunction(["pocock", "obrien-fleming"][i % 2],
                              float(rng.choice([0.01, 0.025, 0.05, 0.1])))
        sched = CovarianceSchedule(fr)
        values = normal_boundaries(sched, sf).values
        recursion = crossing_probabilities(sched, values)
        mc = mc_first_crossing(fr, values, 1_000_000, seed=1000 + i)
        worst = max(worst, float(np.max(np.abs(np.asarray(recursion) - mc))))
    secs = time.perf_counter() - t0
    ok = worst <= 0.005 and secs < 120
    assert report(2, "recursion vs 1e6-draw MVN Monte Carlo, 20 designs", ok,
                  f"max per-look |diff|={worst:.5f}, {secs:.1f}s")


def _adjacent(distinct, a, b):
    ia = np.searchsorted(distinct, round(a, 9))
    ib = np.searchsorted(distinct, round(b, 9))
    return abs(int(ia) - int(ib)) <= 1


def test_criterion_03_exhaustive_vs_monte_carlo(fixture_3v3_two_stage):
    data = fixture_3v3_two_stage
    t0 = time.perf_counter()
    details = []
    ok = True
    for alpha in (0.025, 0.2):
        sf = SpendingFunction("pocock", alpha)
        exh = permutation_boundaries(data, sf, [0.5, 1.0], exhaustive=True)
        reps = permutation_replicates(data, B=100_000, seed=31)
        mc = permutation_boundaries(data, sf, [0.5, 1.0], replicates=reps)
        _, est, _ = sequential_cutoffs(reps.S, [0.0, 0.0], frozen=exh.boundaries.values)
        spend_gap = max(abs(a - b) for a, b in zip(est, exh.boundaries.attained_spend))
        allS = permutation_replicates(data, exhaustive=True).S
        adjacent = all(
            (math.isinf(e) and math.isinf(m)) or (
                math.isfinite(e) and math.isfinite(m)
                and _adjacent(np.unique(np.round(allS[:, j], 9)), e, m))
            for j, (e, m) in enumerate(zip(exh.boundaries.values, mc.boundaries.values)))
        ok &= spend_gap <= 0.01 and adjacent
        details.append(f"alpha={alpha}: exh c={tuple(round(v, 4) for v in exh.boundaries.values)}"
                       f" mc c={tuple(round(v, 4) for v in mc.boundaries.values)}"
                       f" spend gap={spend_gap:.4f}")
    secs = time.perf_counter() - t0
    ok &= secs < 60
    assert report(3, "exhaustive vs B=1e5 permutation", ok, "; ".join(details) + f"; {secs:.1f}s")


def _null_scenario(dist, n0, methods, seed):
    return ScenarioConfig.from_json(dict(
        n0=n0, k_stages=2, gamma=1, spending="pocock", alpha=0.025, dist1=dist, dist2=dist,
        mu=0.0, methods=methods, r_sims=2000, b_perms=1000, seed=seed))


@pytest.mark.parametrize("dist", ["normal(0,1)", "exp(1)"])
@pytest.mark.parametrize("n0", [5, 10])
def test_criterion_04_type_one_error(dist, n0):
    t0 = time.perf_counter()
    oc = run_scenario(_null_scenario(dist, n0, ["permutation"], seed=2024), workers=WORKERS)
    rate = oc.results["permutation"].reject_rate
    secs = time.perf_counter() - t0
    ok = NULL_BAND[0] <= rate <= NULL_BAND[1] and secs < 600
    assert report(4, f"permutation null rate {dist} n0={n0}", ok,
                  f"rate={rate:.4f} band=[{NULL_BAND[0]:.4f}, {NULL_BAND[1]:.4f}], {secs:.1f}s")


def test_criterion_05_lognormal_ordering():
    oc = run_scenario(_null_scenario("lognormal", 5, ["normal", "permutation"], seed=2024),
                      workers=WORKERS)
    normal = oc.results["normal"].reject_rate
    perm = oc.results["permutation"].reject_rate
    assert report(5, "lognormal n0=5: normal rate exceeds permutation rate", normal > perm,
                  f"normal={normal:.4f} permutation={perm:.4f}")


def _dataset(dist, n0, gamma, seed):
    d = parse_dist(dist)
    m0 = int(gamma * n0)
    xs = [draw_stage(d, m0, stream(seed, 0, 0, j, 0)) for j in range(2)]
    ys = [draw_stage(d, n0, stream(seed, 0, 0, j, 1)) for j in range(2)]
    return TrialData.from_arrays(xs, ys)


@pytest.mark.parametrize("dist", ["normal(0,1)", "t(5)", "exp(1)", "laplace", "lognormal"])
def test_criterion_06_permutation_covariance(dist):
    t0 = time.perf_counter()
    data = _dataset(dist, 200, 1, seed=606)
    S = permutation_replicates(data, B=5000, seed=7).S
    r = float(np.corrcoef(S[:, 0], S[:, 1])[0, 1])
    secs = time.perf_counter() - t0
    ok = abs(r - math.sqrt(0.5)) <= 0.05 and secs < 30
    assert report(6, f"corr(S1, S2) under relabeling, {dist}", ok,
                  f"r={r:.4f} target={math.sqrt(0.5):.4f}, {secs:.2f}s")


@pytest.mark.parametrize("mu", [0.0, 0.3, 0.6])
def test_criterion_07_power_equivalence(mu):
    cfg = ScenarioConfig.from_json(dict(
        n0=300, k_stages=2, gamma=1, spending="pocock", alpha=0.025, dist1="normal(0,1)",
        dist2="normal(0,1)", mu=mu, methods=["normal", "permutation"], r_sims=2000,
        b_perms=1000, seed=77))
    t0 = time.perf_counter()
    res = run_scenario(cfg, workers=WORKERS).results
    p1, p2 = res["normal"].reject_rate, res["permutation"].reject_rate
    pooled = (p1 + p2) / 2
    se = math.sqrt(2 * pooled * (1 - pooled) / cfg.r_sims)
    gap = abs(p1 - p2)
    ok = gap <= 3 * se if se > 0 else gap == 0
    assert report(7, f"power normal vs permutation, mu={mu}", ok,
                  f"normal={p1:.4f} permutation={p2:.4f} |diff|={gap:.4f} "
                  f"3SE={3 * se:.4f}, {time.perf_counter() - t0:.1f}s")


@pytest.mark.parametrize("f1,f2,gamma", [
    ("normal(0,1)", "normal(0,1)", 1),
    ("normal(1,1)", "normal(0,1)", 1),
    ("normal(0,1)", "normal(0,4)", 2),
])
def test_criterion_08_permuted_variance_limit(f1, f2, gamma):
    n0 = 2000
    d1, d2 = parse_dist(f1), parse_dist(f2)
    xs = [draw_stage(d1, gamma * n0, stream(808, 0, 0, j, 0)) for j in range(2)]
    ys = [draw_stage(d2, n0, stream(808, 0, 0, j, 1)) for j in range(2)]
    reps = permutation_replicates(TrialData.from_arrays(xs, ys), B=1000, seed=8)
    target = mixture_variance_target(d1, d2, gamma)
    means = np.concatenate([reps.var1.mean(axis=0), reps.var2.mean(axis=0)])
    worst = float(np.max(np.abs(means / target - 1)))
    assert report(8, f"permuted variance mean vs mixture variance ({f1}, {f2}, gamma={gamma})",
                  worst <= 0.05, f"target={target:.4f} worst rel dev={worst:.4f}")


def test_criterion_09_invariant_suites():
    rng = np.random.default_rng(909)
    cases = 1000
    failures = {}

    bad = 0
    for _ in range(cases):
        m, n = rng.integers(2, 15, size=2)
        x = rng.standard_normal(m) * rng.uniform(0.1, 10)
        y = rng.standard_normal(n) * rng.uniform(0.1, 10) + rng.uniform(-3, 3)
        a, b = rng.uniform(0.01, 100), rng.uniform(-100, 100)
        s0 = look_summary(TrialData.from_arrays([x], [y], strict=False), 1).S
        s1 = look_summary(TrialData.from_arrays([a * x + b], [a * y + b], strict=False), 1).S
        bad += not math.isclose(s0, s1, rel_tol=1e-9, abs_tol=1e-9)
    failures["affine invariance"] = bad

    bad = 0
    for _ in range(cases):
        m, n = (int(v) for v in rng.integers(2, 500, size=2))
        v1, v2 = rng.exponential(size=2) * 10.0 ** rng.uniform(-5, 5, size=2)
        df = welch_df(LookSummary(1, m, n, 0.0, 0.0, v1, v2, 0.0, 1.0))
        bad += not (min(m, n) - 1 - 1e-9 <= df <= m + n - 2 + 1e-9)
    failures["Welch df bounds"] = bad

    bad = 0
    for i in range(cases):
        alpha = float(rng.uniform(0.001, 0.5))
        sf = SpendingFunction(["pocock", "obrien-fleming"][i % 2], alpha)
        side = ["one-sided", "two-sided"][(i // 2) % 2]
        grid = np.sort(rng.uniform(0, 1, size=20))
        vals = [spend(sf, t, side) for t in grid]
        bad += not (all(b2 >= b1 for b1, b2 in zip(vals, vals[1:]))
                    and spend(sf, 0.0, side) == 0.0 and spend(sf, 1.0, side) == alpha
                    and all(0 <= v <= alpha for v in vals))
    failures["spend monotonicity/endpoints"] = bad

    bad = 0
    for _ in range(cases):
        k = int(rng.integers(1, 7))
        path = rng.normal(0, 3, size=k)
        path[rng.uniform(size=k) < 0.1] = np.nan
        crit = rng.uniform(0, 5, size=k)
        crit[rng.uniform(size=k) < 0.2] = np.inf
        trace = decide(path, BoundarySet(crit, [0.0] * k, "normal"))
        reach = [bool(p >= c - tie_tolerance(c)) for p, c in zip(path, crit)]
        phis = [int(reach[i] and not any(reach[:i])) for i in range(k)]
        bad += not (sum(phis) in (0, 1) and trace.rejected == (sum(phis) == 1)
                    and (trace.stop_stage == (phis.index(1) + 1 if sum(phis) else k)))
    failures["decision disjointness"] = bad

    ok = all(v == 0 for v in failures.values())
    detail = ", ".join(f"{name}: {cases - v}/{cases}" for name, v in failures.items())
    assert report(9, "invariant suites", ok, detail)


def test_criterion_10_worker_determinism(tmp_path):
    cfg = tmp_path / "scenarios.json"
    cfg.write_text('{"seed": 10, "defaults": {"r_sims": 200, "b_perms": 200, "k_stages": 2},'
                   ' "grid": {"n0": [5, 10], "dist1": ["exp(1)", "lognormal"],'
                   ' "dist2": ["exp(1)"], "mu": [0.0, 0.5]}}')
    outputs = []
    for w in ("1", "8"):
        out = tmp_path / f"results_{w}.csv"
        proc = subprocess.run([sys.executable, "-m", "gsperm.cli", "simulate", "--config",
                               str(cfg), "--out", str(out), "--workers", w],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    rows = len(outputs[0].splitlines()) - 1
    assert report(10, "simulate CSV identical for workers 1 and 8", ok,
                  f"{len(outputs[0])} bytes, {rows} rows")
