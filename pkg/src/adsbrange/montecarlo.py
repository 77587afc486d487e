"""Monte Carlo driver: trial execution, outage metrics, report output.

Every trial is reproducible from (scenario, gamma index, trial index,
master seed): the per-trial SeedSequence is keyed on those integers, so
results are independent of worker scheduling and trial count.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .channel import DroneTruth, NoiseParams, snr_to_sigma2, synthesize
from .em import EstimationFailure, run_em
from .extract import combine_magnitudes, estimate_phase, estimate_range
from .mixture import bernoulli_p, mixture_weights
from .reorder import reorder_modes
from .scenarios import Scenario

REPORT_COLUMNS = ("gamma_db", "M", "metric", "alpha", "success", "stderr", "n_events")
TRACK_COLUMNS = ("packet", "drone", "r_true", "r_hat")


@dataclass
class TrialRecord:
    gamma_db: float
    trial: int
    seed_key: list               # (master_seed, gamma_index, trial_index)
    r_true: list                 # K ranges, meters
    theta_true: list             # n_r x K phases, radians in [0, 2pi)
    m_true: list                 # K integer delays
    r_hat: list                  # K ranges or None per failed drone
    theta_hat: list              # n_r x K phases or None entries
    failed: bool                 # EM produced no usable mode vector
    em_iters: int
    em_restarts_used: int
    em_loglik: float
    em_converged: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def run_trial(scenario: Scenario, gamma_db: float, sigma2: float,
              seed_key: tuple) -> TrialRecord:
    """One independent window: draw truth, synthesize, estimate, record."""
    seq = np.random.SeedSequence(seed_key)
    synth_seq, em_seq = seq.spawn(2)
    rng = np.random.default_rng(synth_seq)

    K, n_r = scenario.K, scenario.n_antennas
    r = np.array([rng.uniform(lo, hi) for lo, hi in scenario.range_bounds])
    P = np.asarray(scenario.powers, dtype=float)
    # enforce the descending received-power ordering within the trial;
    # a no-op for disjoint range bands with equal powers
    order = np.argsort(-P * (1.0 / r) ** 2) if K > 1 else np.arange(K)
    r, P = r[order], P[order]
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(n_r, K))
    delays = rng.integers(0, scenario.M + 1, size=K)

    drones = [DroneTruth(P=P[k], r=r[k], theta=theta[:, k], m=int(delays[k]))
              for k in range(K)]
    window, _ = synthesize(drones, NoiseParams(sigma2), scenario.lambda_c,
                           scenario.M, n_r, seed=rng)

    xi = mixture_weights(bernoulli_p(scenario.M), K)
    em_config = replace(scenario.em, seed=em_seq)

    record = TrialRecord(
        gamma_db=gamma_db, trial=int(seed_key[-1]), seed_key=list(seed_key),
        r_true=r.tolist(), theta_true=theta.tolist(), m_true=delays.tolist(),
        r_hat=[None] * K, theta_hat=[[None] * K for _ in range(n_r)],
        failed=False, em_iters=0, em_restarts_used=0,
        em_loglik=float("nan"), em_converged=False,
    )
    try:
        result = run_em(window.Y, xi, sigma2, em_config)
    except EstimationFailure:
        record.failed = True
        return record
    record.em_iters = result.n_iter
    record.em_restarts_used = result.restarts_used
    record.em_loglik = result.loglik
    record.em_converged = result.converged

    mu_hat = np.empty((n_r, K), dtype=complex)
    for l in range(n_r):
        mu_hat[l] = reorder_modes(result.eta[l], K, scenario.reorder_method).h_hat
    for k in range(K):
        try:
            mag = combine_magnitudes(mu_hat[:, k], scenario.outlier_filter, scenario.mad_c)
            record.r_hat[k] = float(estimate_range(mag, P[k], scenario.lambda_c))
        except (EstimationFailure, ValueError):
            record.r_hat[k] = None
        for l in range(n_r):
            try:
                record.theta_hat[l][k] = float(estimate_phase(mu_hat[l, k]))
            except EstimationFailure:
                record.theta_hat[l][k] = None
    return record


def _trial_worker(args):
    scenario_dict, gamma_db, sigma2, seed_key = args
    return run_trial(Scenario.from_dict(scenario_dict), gamma_db, sigma2, seed_key)


def _run_batch(scenario: Scenario, jobs: list, threads: int) -> list:
    if threads <= 1:
        return [_trial_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_trial_worker, jobs, chunksize=8))


def run_sweep(scenario: Scenario, master_seed: int = 0, threads: int = 1,
              trials: int | None = None):
    """Monte Carlo SNR sweep. Returns (report_rows, trial_records)."""
    trials = scenario.trials if trials is None else trials
    sdict = scenario.to_dict()
    jobs = []
    for gi, gamma in enumerate(scenario.gamma_db):
        sigma2 = snr_to_sigma2(gamma, scenario.avg_ranges, scenario.powers,
                               scenario.lambda_c)
        jobs += [(sdict, gamma, sigma2, (master_seed, gi, ti)) for ti in range(trials)]
    records = _run_batch(scenario, jobs, threads)
    return outage_report(records, scenario), records


def outage_report(records: list, scenario: Scenario) -> list:
    """Success-rate rows (1 - P_out) with binomial standard errors.

    Range events are per (trial, drone); phase events per (trial, antenna,
    drone), reported both as raw relative error and with the circular
    phase distance. A missing estimate counts as an outage event; phase
    events with truth below scenario.theta_exclude_below are dropped from
    the denominator.
    """
    rows = []
    gammas = sorted({rec.gamma_db for rec in records})
    for gamma in gammas:
        recs = [rec for rec in records if rec.gamma_db == gamma]
        rel_r, rel_t_raw, rel_t_circ = [], [], []
        for rec in recs:
            for k in range(scenario.K):
                if rec.failed or rec.r_hat[k] is None:
                    rel_r.append(np.inf)
                else:
                    rel_r.append(abs(rec.r_hat[k] - rec.r_true[k]) / rec.r_true[k])
                for l in range(scenario.n_antennas):
                    t_true = rec.theta_true[l][k]
                    if abs(t_true) < scenario.theta_exclude_below:
                        continue
                    t_hat = None if rec.failed else rec.theta_hat[l][k]
                    if t_hat is None:
                        rel_t_raw.append(np.inf)
                        rel_t_circ.append(np.inf)
                        continue
                    diff = abs(t_hat - t_true)
                    rel_t_raw.append(diff / t_true)
                    rel_t_circ.append(min(diff, 2.0 * np.pi - diff) / t_true)
        for metric, errors, alphas in (
            ("range", rel_r, scenario.alphas_r),
            ("phase_raw", rel_t_raw, scenario.alphas_theta),
            ("phase_circ", rel_t_circ, scenario.alphas_theta),
        ):
            err = np.asarray(errors)
            for alpha in alphas:
                n = len(err)
                success = float(np.mean(err <= alpha)) if n else 0.0
                stderr = float(np.sqrt(success * (1.0 - success) / n)) if n else 0.0
                rows.append({
                    "gamma_db": gamma, "M": scenario.M, "metric": metric,
                    "alpha": alpha, "success": success, "stderr": stderr,
                    "n_events": n,
                })
    return rows


def failure_rate(records: list) -> float:
    if not records:
        return 0.0
    return sum(rec.failed for rec in records) / len(records)


def run_m_sensitivity(scenario: Scenario, m_list, master_seed: int = 0,
                      threads: int = 1, trials: int | None = None):
    """Sweep the maximum delay M at fixed SNR; p is recomputed per M."""
    all_rows, all_records = [], []
    for M in m_list:
        scen_m = replace(scenario, M=int(M), name=f"{scenario.name}_M{M}")
        rows, records = run_sweep(scen_m, master_seed, threads, trials)
        all_rows += rows
        all_records += records
    return all_rows, all_records


def tracking_trajectories(n) -> np.ndarray:
    """True ranges of the three tracked transmitters at packet index n."""
    n = np.asarray(n, dtype=float)
    return np.stack([
        750.0 + 250.0 * np.cos(0.1 * np.pi * n),
        1750.0 + 250.0 * np.cos(0.05 * np.pi * n + np.pi / 2.0),
        2750.0 + 250.0 * np.cos(0.2 * np.pi * n - np.pi / 3.0),
    ])


def run_tracking(gamma_db: float = 20.0, n_antennas: int = 5, n_packets: int = 100,
                 M: int = 20, master_seed: int = 0, em_config=None,
                 reorder_method: str = "ls_constrained",
                 outlier_filter: str = "none", mad_c: float = 3.0) -> list:
    """Range tracking of three moving transmitters, one packet per index.

    Returns rows (packet, drone, r_true, r_hat); r_hat is None when the
    estimate failed for that packet.
    """
    from .em import EmConfig  # local import keeps module load light

    em_config = em_config or EmConfig()
    centers = np.array([750.0, 1750.0, 2750.0])
    powers = np.ones(3)
    sigma2 = snr_to_sigma2(gamma_db, centers, powers)
    xi = mixture_weights(bernoulli_p(M), 3)
    rows = []
    for n in range(1, n_packets + 1):
        seq = np.random.SeedSequence((master_seed, n))
        synth_seq, em_seq = seq.spawn(2)
        rng = np.random.default_rng(synth_seq)
        r = tracking_trajectories(n)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(n_antennas, 3))
        delays = rng.integers(0, M + 1, size=3)
        drones = [DroneTruth(P=1.0, r=r[k], theta=theta[:, k], m=int(delays[k]))
                  for k in range(3)]
        window, _ = synthesize(drones, NoiseParams(sigma2), M=M,
                               n_antennas=n_antennas, seed=rng)
        r_hat = [None] * 3
        try:
            result = run_em(window.Y, xi, sigma2, replace(em_config, seed=em_seq))
            mu = np.empty((n_antennas, 3), dtype=complex)
            for l in range(n_antennas):
                mu[l] = reorder_modes(result.eta[l], 3, reorder_method).h_hat
            for k in range(3):
                mag = combine_magnitudes(mu[:, k], outlier_filter, mad_c)
                r_hat[k] = float(estimate_range(mag))
        except EstimationFailure:
            pass
        for k in range(3):
            rows.append({"packet": n, "drone": k + 1,
                         "r_true": float(r[k]), "r_hat": r_hat[k]})
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_report_csv(rows: list, path, columns=REPORT_COLUMNS) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def write_tracking_csv(rows: list, path) -> None:
    write_report_csv(rows, path, columns=TRACK_COLUMNS)


def write_trials_jsonl(records: list, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for rec in records:
            f.write(rec.to_json())
            f.write("\n")


def read_trials_jsonl(path) -> list:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(TrialRecord(**json.loads(line)))
    return out
