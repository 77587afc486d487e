"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with `pytest tests/test_acceptance.py -s` to see the pass/fail lines;
the SNR-sweep criteria take a few minutes at the desk-scale trial counts.

Criterion 2 (mixture-weight occupancy at 4 binomial standard errors over
1e5 samples) is implemented exactly as stated and is expected to FAIL for
K in {2, 3}: the per-sample zero probability varies across the window
(deterministic preamble, delay edges), so cross-transmitter products
deviate from the i.i.d.-Bernoulli weights by ~0.014-0.027 absolute, which
is 10-24 binomial standard errors at that sample count. The deviation is a
property of the signal model, not of this implementation; see the test
output for the measured values.
"""

import time

import numpy as np
import pytest

from adsbrange.channel import DroneTruth, NoiseParams, path_loss, snr_to_sigma2, synthesize
from adsbrange.em import EmConfig, run_em
from adsbrange.extract import combine_magnitudes, estimate_range
from adsbrange.mixture import bernoulli_p, mixture_weights, mode_vector
from adsbrange.montecarlo import run_sweep, run_tracking, run_trial
from adsbrange.reorder import (remove_zero_mode, reorder_ls_constrained,
                               reorder_ls_unconstrained, reorder_subset_k4,
                               reorder_weighted_k4)
from adsbrange.scenarios import standard_scenario

THREADS = 2


def report(number: int, label: str, ok: bool, detail: str = "") -> bool:
    state = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{state}] criterion {number}: {label}{suffix}")
    return ok


def test_criterion_1_bernoulli_grid_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for M in (0, 10, 20, 50, 100):
        p = np.linspace(1e-6, 1 - 1e-6, 100_001)  # step 1e-5 on (0, 1)
        objective = (M + 124) * np.log(p) + 116 * np.log(1 - p)
        worst = max(worst, abs(p[np.argmax(objective)] - bernoulli_p(M)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 1.0
    assert report(1, "Bernoulli parameter matches grid maximizer",
                  ok, f"max dev {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_gm_occupancy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mid_ranges = {1: [1750.0], 2: [1000.0, 2500.0], 3: [750.0, 1750.0, 2750.0]}
    M = 20
    failures = []
    for K in (1, 2, 3):
        n_windows = int(np.ceil(1e5 / (240 + M)))
        counts = np.zeros(2 ** K)
        total = 0
        for w in range(n_windows):
            drones = [DroneTruth(P=1.0, r=r, theta=rng.uniform(0, 2 * np.pi, 1),
                                 m=int(rng.integers(0, M + 1)))
                      for r in mid_ranges[K]]
            win, H = synthesize(drones, NoiseParams(0.0), M=M, seed=rng)
            modes = mode_vector(H[0])
            idx = np.abs(win.Y[0][:, None] - modes[None, :]).argmin(axis=1)
            counts += np.bincount(idx, minlength=2 ** K)
            total += win.n_samples
        freq = counts / total
        xi = mixture_weights(bernoulli_p(M), K)
        for a in range(2 ** K):
            se = np.sqrt(xi[a] * (1 - xi[a]) / total)
            dev = abs(freq[a] - xi[a])
            if dev > 4 * se:
                failures.append(f"K={K} a={a}: |{freq[a]:.4f}-{xi[a]:.4f}|={dev:.4f}"
                                f" > 4SE={4 * se:.4f}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10.0
    detail = f"{elapsed:.1f}s" if ok else f"{elapsed:.1f}s; " + "; ".join(failures)
    assert report(2, "mixture-weight occupancy within 4 SE", ok, detail)


def test_criterion_3_em_monotonicity():
    t0 = time.perf_counter()
    scen = standard_scenario(2)
    sigma2 = snr_to_sigma2(10.0, scen.avg_ranges, scen.powers)
    xi = mixture_weights(bernoulli_p(20), 2)
    violations = 0
    for t in range(100):
        rng = np.random.default_rng((31, t))
        drones = [DroneTruth(P=1.0, r=rng.uniform(lo, hi),
                             theta=rng.uniform(0, 2 * np.pi, 1),
                             m=int(rng.integers(0, 21)))
                  for lo, hi in scen.range_bounds]
        win, _ = synthesize(drones, NoiseParams(sigma2), M=20, seed=rng)
        result = run_em(win.Y, xi, sigma2, EmConfig(restarts=2, seed=t))
        hist = result.loglik_history
        if not np.all(np.diff(hist) >= -1e-9 * np.abs(hist[:-1])):
            violations += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 30.0
    assert report(3, "EM log-likelihood non-decreasing on 100 windows",
                  ok, f"{violations} violations, {elapsed:.1f}s")


def test_criterion_4_reordering_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    fails = {"ls_constrained_K2": 0, "ls_constrained_K3": 0,
             "ls_unconstrained_K2": 0, "ls_unconstrained_K3": 0,
             "subset_k4": 0, "weighted_k4": 0}
    for _ in range(1000):
        for K in (2, 3):
            beta = np.sort(rng.uniform(0.5, 2.0, K))[::-1]
            h = beta * np.exp(1j * rng.uniform(0, 2 * np.pi, K))
            eta_i = remove_zero_mode(mode_vector(h)[rng.permutation(2 ** K)])
            if not np.allclose(reorder_ls_constrained(eta_i, K).h_hat, h, atol=1e-9):
                fails[f"ls_constrained_K{K}"] += 1
            if not np.allclose(reorder_ls_unconstrained(eta_i, K).h_hat, h, atol=1e-9):
                fails[f"ls_unconstrained_K{K}"] += 1
        beta = np.sort(rng.uniform(0.5, 2.0, 4))[::-1]
        h = beta * np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        eta_i = remove_zero_mode(mode_vector(h)[rng.permutation(16)])
        if not np.allclose(reorder_subset_k4(eta_i).h_hat, h, atol=1e-9):
            fails["subset_k4"] += 1
        if not np.allclose(reorder_weighted_k4(eta_i).h_hat, h, atol=1e-9):
            fails["weighted_k4"] += 1
    elapsed = time.perf_counter() - t0
    total = sum(fails.values())
    ok = total == 0 and elapsed < 60.0
    assert report(4, "reordering exact in 1000/1000 random draws",
                  ok, f"failures {fails}, {elapsed:.1f}s" if total else f"{elapsed:.1f}s")


def test_criterion_5_noiseless_identity():
    t0 = time.perf_counter()
    worst_r = worst_t = 0.0
    ok = True
    for num, K in ((3, 1), (2, 2)):
        scen = standard_scenario(num, em=EmConfig(restarts=3))
        for seed in range(50):
            rec = run_trial(scen, float("inf"), 0.0, (seed, num, 0))
            if rec.failed:
                ok = False
                continue
            for k in range(K):
                worst_r = max(worst_r, abs(rec.r_hat[k] - rec.r_true[k]) / rec.r_true[k])
                for l in range(scen.n_antennas):
                    d = abs(rec.theta_hat[l][k] - rec.theta_true[l][k])
                    worst_t = max(worst_t, min(d, 2 * np.pi - d) / rec.theta_true[l][k])
    elapsed = time.perf_counter() - t0
    ok = ok and worst_r <= 1e-6 and worst_t <= 1e-6
    assert report(5, "noiseless end-to-end identity, 50/50 seeds, K in {1,2}",
                  ok, f"max rel err r {worst_r:.1e}, theta {worst_t:.1e}, {elapsed:.0f}s")


def test_criterion_6_snr_trend():
    t0 = time.perf_counter()
    scen = standard_scenario(2, gamma_db=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
                             alphas_r=[0.1], alphas_theta=[0.1], trials=500)
    rows, _ = run_sweep(scen, master_seed=6, threads=THREADS)
    curve = sorted((r["gamma_db"], r["success"], r["stderr"])
                   for r in rows if r["metric"] == "range")
    monotone = all(
        s1 >= s0 - 2 * np.hypot(e0, e1)
        for (_, s0, e0), (_, s1, e1) in zip(curve, curve[1:])
    )
    final = curve[-1][1]
    elapsed = time.perf_counter() - t0
    ok = monotone and final >= 0.9
    detail = " ".join(f"{g:.0f}dB:{s:.3f}" for g, s, _ in curve) + f", {elapsed:.0f}s"
    assert report(6, "range success non-decreasing in SNR, >=0.9 at 25 dB", ok, detail)


def test_criterion_7_antenna_diversity():
    t0 = time.perf_counter()
    succ = {}
    for n_r in (1, 5):
        scen = standard_scenario(2, gamma_db=[20.0], alphas_r=[0.05],
                                 alphas_theta=[0.05], trials=500, n_antennas=n_r)
        rows, _ = run_sweep(scen, master_seed=7, threads=THREADS)
        row = next(r for r in rows if r["metric"] == "range")
        succ[n_r] = (row["success"], row["stderr"])
    (s1, e1), (s5, e5) = succ[1], succ[5]
    gap = 2 * np.hypot(e1, e5)
    ok = (s5 >= s1 + gap) or (abs(s5 - s1) <= gap and min(s1, s5) >= 0.95)
    elapsed = time.perf_counter() - t0
    assert report(7, "five antennas beat one (or both saturate >=0.95)",
                  ok, f"N_r=1: {s1:.3f}, N_r=5: {s5:.3f}, {elapsed:.0f}s")


def test_criterion_8_m_robustness():
    t0 = time.perf_counter()
    succ = []
    for M in (10, 20, 40):
        scen = standard_scenario(2, gamma_db=[20.0], alphas_r=[0.1],
                                 alphas_theta=[0.1], trials=500, M=M)
        rows, _ = run_sweep(scen, master_seed=8, threads=THREADS)
        succ.append(next(r["success"] for r in rows if r["metric"] == "range"))
    spread = max(succ) - min(succ)
    elapsed = time.perf_counter() - t0
    ok = spread <= 0.1
    assert report(8, "success varies by <=0.1 across M in {10,20,40}",
                  ok, f"values {[f'{s:.3f}' for s in succ]}, spread {spread:.3f}, {elapsed:.0f}s")


def test_criterion_9_mad_benefit():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    wins = 0
    trials = 1000
    for _ in range(trials):
        r = rng.uniform(500, 3000)
        true_mag = np.sqrt(path_loss(r))
        mags = true_mag * (1 + 0.02 * rng.standard_normal(5))
        mags[rng.integers(5)] *= 10.0
        err_mad = abs(estimate_range(combine_magnitudes(mags, "mad", 3.0)) - r)
        err_raw = abs(estimate_range(combine_magnitudes(mags, "none")) - r)
        wins += err_mad <= err_raw
    elapsed = time.perf_counter() - t0
    ok = wins >= 0.95 * trials
    assert report(9, "MAD filter beats plain averaging under 10x corruption",
                  ok, f"{wins}/{trials} wins, {elapsed:.0f}s")


def test_criterion_10_tracking_trend():
    t0 = time.perf_counter()
    rows = run_tracking(gamma_db=20.0, n_antennas=5, n_packets=100, master_seed=10)
    sq_err = {k: [] for k in (1, 2, 3)}
    rel_err = {k: [] for k in (1, 2, 3)}
    missing = 0
    for row in rows:
        if row["r_hat"] is None:
            missing += 1
            continue
        err = row["r_hat"] - row["r_true"]
        sq_err[row["drone"]].append(err ** 2)
        rel_err[row["drone"]].append(abs(err) / row["r_true"])
    mse = [float(np.mean(sq_err[k])) for k in (1, 2, 3)]
    med = [float(np.median(rel_err[k])) for k in (1, 2, 3)]
    elapsed = time.perf_counter() - t0
    ok = missing == 0 and mse[0] < mse[1] < mse[2] and max(med) < 0.1
    assert report(10, "tracking MSE ordered by distance, median rel err < 0.1",
                  ok, f"MSE {[f'{m:.0f}' for m in mse]}, med {[f'{m:.3f}' for m in med]}, "
                      f"{elapsed:.0f}s")
