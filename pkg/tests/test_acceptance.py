"""Acceptance criteria, one PASS/FAIL line each.

Lines are printed as they are decided and repeated in the pytest terminal
summary.  Criteria 3-5 anneal at desk scale (10^6 iterations per run) and
take several minutes in total.
"""
import math
import time
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest

from maximin_lhd import kernels
from maximin_lhd.annealer import RunConfig, Schedule, metropolis_accept, run_batch, summarize
from maximin_lhd.core import (
    Configuration,
    InstanceSpec,
    apply_swap,
    build_distance_state,
    random_config,
    validate_latin,
)
from maximin_lhd.evaluation import EvalParams, energy_phi, energy_psi, sigma_auto
from maximin_lhd.oracle import exhaustive_maximin
from maximin_lhd.stats import var_y_exact, variance_model

REPORT = []
DESK_ITERS = 10**6
SMALL_CELLS = {(3, 3): 6, (4, 3): 7, (5, 3): 8, (3, 4): 6}


def report(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


def batch(k, n, mutation, ev, runs, seed=2024, iters=DESK_ITERS):
    cfg = RunConfig(InstanceSpec(k, n), mutation, ev, Schedule("auto", iters), seed)
    return run_batch(cfg, runs)


def interval(s):
    return s.mean_dmin_sq - s.ci95_halfwidth, s.mean_dmin_sq + s.ci95_halfwidth


@pytest.fixture(scope="module")
def phi_1dmove_8_20():
    return batch(8, 20, "1dmove", EvalParams("phi", 10.0), 30)


# -- 1, 2: small cells ---------------------------------------------------------

def test_c1_oracle_small_cells():
    t = time.perf_counter()
    got = {kn: exhaustive_maximin(*kn).optimal_dmin_sq for kn in SMALL_CELLS}
    dt = time.perf_counter() - t
    report("[1] oracle reproduces small highscores", got == SMALL_CELLS and dt < 60,
           f"{got} expected {SMALL_CELLS}, {dt:.2f}s (limit 60s)")


def test_c2_annealing_reaches_oracle():
    t = time.perf_counter()
    best = {}
    for (k, n) in SMALL_CELLS:
        s = batch(k, n, "1dmove", EvalParams("psi", 5.0, "auto"), 10, seed=1, iters=10**5)
        best[(k, n)] = s.best_overall.best_dmin_sq
    dt = time.perf_counter() - t
    report("[2] SA best of 10 equals oracle optimum", best == SMALL_CELLS and dt < 60,
           f"{best} expected {SMALL_CELLS}, {dt:.1f}s (limit 60s)")


# -- 3, 4: orderings on 8/20 ---------------------------------------------------

@pytest.mark.slow
def test_c3_mutation_ordering(phi_1dmove_8_20):
    m2 = batch(8, 20, "m2", EvalParams("phi", 10.0), 30)
    one = phi_1dmove_8_20
    lo1, _ = interval(one)
    _, hi2 = interval(m2)
    report("[3] 1D-move beats m2 on 8/20 (phi_10, 30 x 1e6)",
           one.mean_dmin_sq > m2.mean_dmin_sq and lo1 > hi2,
           f"1D-move {one.mean_dmin_sq:.2f} +/- {one.ci95_halfwidth:.2f} vs "
           f"m2 {m2.mean_dmin_sq:.2f} +/- {m2.ci95_halfwidth:.2f}")


@pytest.mark.slow
def test_c4_evaluation_ordering(phi_1dmove_8_20):
    runs = 20
    psi = batch(8, 20, "1dmove", EvalParams("psi", 10.0, 65.0), runs)
    phi = summarize(phi_1dmove_8_20.results[:runs])  # same seeds and budget
    lo_psi, _ = interval(psi)
    _, hi_phi = interval(phi)
    report(f"[4] psi_10,65 beats phi_10 on 8/20 (1D-move, {runs} x 1e6)",
           psi.mean_dmin_sq > phi.mean_dmin_sq and lo_psi > hi_phi,
           f"psi {psi.mean_dmin_sq:.2f} +/- {psi.ci95_halfwidth:.2f} vs "
           f"phi {phi.mean_dmin_sq:.2f} +/- {phi.ci95_halfwidth:.2f}")


# -- 5: proximity to published highscores ------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("k,n,target", [(8, 20, 448), (4, 25, 183)])
def test_c5_highscore_proximity(k, n, target):
    s = batch(k, n, "1dmove", EvalParams("psi", 5.0, "auto"), 20)
    best = s.best_overall.best_dmin_sq
    for r in s.results:
        assert validate_latin(r.best_config).ok and r.best_dmin_sq >= r.initial_dmin_sq
    report(f"[5] {k}/{n} best of 20 >= 0.97 x {target}", best >= 0.97 * target,
           f"best {best} (threshold {0.97 * target:.2f}), mean {s.mean_dmin_sq:.2f}")


# -- 6: sigma tuning -----------------------------------------------------------

def test_c6_sigma_tuning():
    s820, s425 = sigma_auto(8, 20), sigma_auto(4, 25)
    exact = (abs(s820 - math.sqrt(8 * 20**4 / 300)) < 1e-9 and abs(s425 - math.sqrt(4 * 25**4 / 300)) < 1e-9)
    report("[6] sigma_auto matches tuned values", 65 <= s820 <= 66 and 70 <= s425 <= 75 and exact,
           f"8/20 -> {s820:.4f} in [65, 66]; 4/25 -> {s425:.4f} in [70, 75]")


# -- 7: property suites --------------------------------------------------------

def test_c7a_latin_and_incremental_state():
    rng = np.random.default_rng(71)
    swaps, bad = 0, 0
    while swaps < 100_000:
        k, n = int(rng.integers(1, 6)), int(rng.integers(3, 12))
        cfg = random_config(InstanceSpec(k, n), rng)
        st = build_distance_state(cfg)
        for _ in range(1000):
            i, j = rng.choice(n, 2, replace=False)
            apply_swap(cfg, st, int(i), int(j), int(rng.integers(k)))
            swaps += 1
            if not validate_latin(cfg).ok or st != build_distance_state(cfg):
                bad += 1
    report("[7a] Latin preserved, incremental state exact", bad == 0, f"{swaps} swaps, {bad} mismatches")


def test_c7b_mean_identity():
    rng = np.random.default_rng(72)
    bad = 0
    for _ in range(100):
        k, n = int(rng.integers(1, 20)), int(rng.integers(2, 60))
        st = build_distance_state(random_config(InstanceSpec(k, n), rng))
        bad += Fraction(st.sum_sq, comb(n, 2)) != Fraction(k * n * (n + 1), 6)
    report("[7b] mean squared distance = kn(n+1)/6", bad == 0, f"100 random instances, {bad} violations")


def test_c7c_1dmove_step_bound():
    inst = InstanceSpec(6, 15)
    params = EvalParams("phi", 10.0)
    kern = kernels.make_kernel(random_config(inst, 73).coords, "1dmove", params)
    rng = np.random.default_rng(73)
    accepted, worst = 0, 0.0
    while accepted < 10_000:
        before = np.sqrt(kern.get_dsq())
        prev = kern.accepted
        kern.run(rng.random((1, 6)), np.array([0.05]))
        if kern.accepted > prev:
            accepted += 1
            worst = max(worst, float(np.abs(np.sqrt(kern.get_dsq()) - before).max()))
    report("[7c] 1D-move changes every distance by <= 1", worst <= 1.0 + 1e-12,
           f"{accepted} accepted moves, max |delta d| = {worst:.6f}")


def test_c7d_large_jump_construction():
    errs = []
    for k, n in [(2, 10), (5, 20)]:
        col0 = [0, n - 1] + list(range(1, n - 1))
        cfg = Configuration.from_columns(col0, *[list(range(n))] * (k - 1))
        st = build_distance_state(cfg)
        before = math.sqrt(st.dsq[0, 1])
        apply_swap(cfg, st, 1, 2, 0)
        delta = abs(math.sqrt(st.dsq[0, 1]) - before)
        errs.append(abs(delta - abs(math.sqrt(k - 1 + (n - 1) ** 2) - math.sqrt(k))))
    report("[7d] m2 jump matches closed form", max(errs) < 1e-9, f"errors {errs}")


def test_c7e_psi_limits():
    p = 5.0
    for s in range(10_000):
        cfg = random_config(InstanceSpec(6, 7), s)
        st = build_distance_state(cfg)
        if len(set(st.values().tolist())) == comb(7, 2):
            break
    phi = energy_phi(st, p)
    small = abs(energy_psi(st, p, 1e-6) / phi - 1)
    big = abs(energy_psi(st, p, 1e9) / (comb(7, 2) ** (-1 / (2 * p)) * phi) - 1)
    report("[7e] psi limit identities", small <= 1e-9 and big <= 1e-6,
           f"sigma->0 rel err {small:.2e} (<=1e-9), sigma->inf rel err {big:.2e} (<=1e-6)")


def _var_y_brute(n):
    ys = [(a - b) ** 2 for a, b in combinations(range(n), 2)]
    N = len(ys)
    return Fraction(N * sum(y * y for y in ys) - sum(ys) ** 2, N * N)


def test_c7f_variance_theorem():
    inst = InstanceSpec(10, 100)
    rng = np.random.default_rng(76)
    pooled = np.concatenate([build_distance_state(random_config(inst, rng)).values() for _ in range(50)])
    ratio = float(pooled.astype(float).var()) / variance_model(10, 100).asymptotic
    mismatches = [n for n in range(2, 201) if var_y_exact(n) != _var_y_brute(n)]
    report("[7f] variance model", abs(ratio - 1) <= 0.10 and not mismatches,
           f"pooled/asymptotic = {ratio:.4f} (within 10%), exact formula mismatches for n<=200: {mismatches}")


def test_c7g_metropolis_law():
    rng = np.random.default_rng(77)
    rate = float(np.mean([metropolis_accept(1.3, 1.3, rng) for _ in range(100_000)]))
    report("[7g] acceptance at delta E = T", abs(rate - math.exp(-1)) <= 0.01,
           f"{rate:.4f} vs e^-1 = {math.exp(-1):.4f} (+/- 0.01)")


# -- 8: determinism ------------------------------------------------------------

def test_c8_determinism():
    cfg = RunConfig(InstanceSpec(6, 14), "1dmove", EvalParams("psi", 5.0, "auto"), Schedule("auto", 20_000), 8)
    a = run_batch(cfg, 6, parallelism=1)
    b = run_batch(cfg, 6, parallelism=4)
    c = run_batch(cfg, 6, parallelism=2)
    same = a.results == b.results == c.results and a.mean_dmin_sq == b.mean_dmin_sq == c.mean_dmin_sq
    report("[8] identical results across parallelism", same,
           f"parallelism 1/2/4 -> d_min^2 {[r.best_dmin_sq for r in a.results]}")
