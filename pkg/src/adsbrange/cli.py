"""Command line interface: sweep, track, msens and selftest subcommands."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import montecarlo
from .scenarios import Scenario, apply_env_overrides, load_config, standard_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILURE_CEILING = 2


def _parse_float_list(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--trials", type=int, default=None, help="override trial count")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adsbrange",
        description="Monte Carlo evaluation of joint range/phase estimation "
                    "from collided ADS-B packets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="outage metrics over an SNR sweep")
    p.add_argument("--scenario", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--config", default=None, help="JSON scenario file (overrides --scenario)")
    p.add_argument("--gamma", type=_parse_float_list, default=None,
                   help="override SNR list, e.g. '0,5,10'")
    _add_common(p)

    p = sub.add_parser("track", help="range tracking of three moving transmitters")
    p.add_argument("--gamma", type=float, default=20.0)
    p.add_argument("--antennas", type=int, default=5)
    p.add_argument("--packets", type=int, default=100)
    _add_common(p)

    p = sub.add_parser("msens", help="sensitivity to the maximum delay M")
    p.add_argument("--scenario", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--config", default=None)
    p.add_argument("--m-list", type=lambda s: [int(float(v)) for v in s.replace(",", " ").split()],
                   default=[10, 20, 40])
    p.add_argument("--gamma", type=float, default=20.0)
    _add_common(p)

    p = sub.add_parser("selftest", help="fast internal verification")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_scenario(args) -> Scenario:
    if getattr(args, "config", None):
        return load_config(args.config)
    scen = standard_scenario(args.scenario)
    d = apply_env_overrides(scen.to_dict())
    return Scenario.from_dict(d)


def _finish(records, scenario, out: Path) -> int:
    rate = montecarlo.failure_rate(records)
    if rate > scenario.failure_ceiling:
        print(f"estimation failure rate {rate:.3f} exceeds ceiling "
              f"{scenario.failure_ceiling:.3f}", file=sys.stderr)
        return EXIT_FAILURE_CEILING
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    if args.gamma is not None:
        scenario = replace(scenario, gamma_db=list(args.gamma))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, records = montecarlo.run_sweep(scenario, args.seed, args.threads, args.trials)
    montecarlo.write_report_csv(rows, out / "sweep_report.csv")
    montecarlo.write_trials_jsonl(records, out / "trials.jsonl")
    outputs = [out / "sweep_report.csv", out / "trials.jsonl"]
    if not args.no_figures:
        from . import plots
        outputs += plots.save_sweep_figures(rows, str(out))
    for path in outputs:
        print(f"wrote {path}")
    return _finish(records, scenario, out)


def _cmd_track(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = montecarlo.run_tracking(
        gamma_db=args.gamma, n_antennas=args.antennas,
        n_packets=args.packets if args.trials is None else args.trials,
        master_seed=args.seed,
    )
    montecarlo.write_tracking_csv(rows, out / "tracking.csv")
    outputs = [out / "tracking.csv"]
    if not args.no_figures:
        from . import plots
        outputs += plots.save_tracking_figure(rows, str(out))
    for path in outputs:
        print(f"wrote {path}")
    missing = sum(row["r_hat"] is None for row in rows) / max(len(rows), 1)
    return EXIT_FAILURE_CEILING if missing > 0.5 else EXIT_OK


def _cmd_msens(args) -> int:
    scenario = _load_scenario(args)
    scenario = replace(scenario, gamma_db=[args.gamma])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, records = montecarlo.run_m_sensitivity(
        scenario, args.m_list, args.seed, args.threads, args.trials)
    montecarlo.write_report_csv(rows, out / "msens_report.csv")
    montecarlo.write_trials_jsonl(records, out / "trials.jsonl")
    outputs = [out / "msens_report.csv", out / "trials.jsonl"]
    if not args.no_figures:
        from . import plots
        outputs += plots.save_msens_figure(rows, str(out))
    for path in outputs:
        print(f"wrote {path}")
    return _finish(records, scenario, out)


def _cmd_selftest(args) -> int:
    """Quick checks of the estimation chain; seconds, not minutes."""
    from .extract import combine_magnitudes, estimate_range
    from .mixture import bernoulli_p, mode_vector
    from .reorder import (reorder_ls_constrained, reorder_ls_unconstrained,
                          reorder_subset_k4, reorder_weighted_k4, remove_zero_mode)
    from .waveform import ONES_PER_PACKET, build_packet, random_payload

    rng = np.random.default_rng(args.seed)
    checks = []

    # chip-count oracle behind the Bernoulli parameter
    for M in (0, 20, 100):
        grid = np.linspace(1e-6, 1 - 1e-6, 100_001)
        obj = (M + 124) * np.log(grid) + 116 * np.log(1 - grid)
        checks.append((f"bernoulli_p(M={M}) matches grid maximizer",
                       abs(grid[np.argmax(obj)] - bernoulli_p(M)) < 1e-4))
    ones = int(build_packet(random_payload(rng)).sum())
    checks.append(("packet has 116 ones", ones == ONES_PER_PACKET))

    # reordering exactness on permuted true mode vectors
    for K, methods in ((2, [reorder_ls_constrained, reorder_ls_unconstrained]),
                       (3, [reorder_ls_constrained, reorder_ls_unconstrained])):
        ok = True
        for _ in range(25):
            beta = np.sort(rng.uniform(0.5, 2.0, K))[::-1]
            h = beta * np.exp(1j * rng.uniform(0, 2 * np.pi, K))
            eta = mode_vector(h)[rng.permutation(2 ** K)]
            for fn in methods:
                ok &= np.allclose(fn(remove_zero_mode(eta), K).h_hat, h, atol=1e-9)
        checks.append((f"reordering exact for K={K}", ok))
    ok = True
    for _ in range(25):
        beta = np.sort(rng.uniform(0.5, 2.0, 4))[::-1]
        h = beta * np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        eta_i = remove_zero_mode(mode_vector(h)[rng.permutation(16)])
        ok &= np.allclose(reorder_subset_k4(eta_i).h_hat, h, atol=1e-9)
        ok &= np.allclose(reorder_weighted_k4(eta_i).h_hat, h, atol=1e-9)
    checks.append(("K=4 subset reordering exact", ok))

    # noiseless end-to-end identity
    from .em import EmConfig
    from .montecarlo import run_trial
    from .scenarios import standard_scenario
    for num, K in ((3, 1), (2, 2)):
        scen = standard_scenario(num, n_antennas=2,
                                 em=EmConfig(restarts=3), outlier_filter="none")
        rec = run_trial(scen, float("inf"), 0.0, (args.seed, 0, 0))
        err = max(abs(rh - rt) / rt for rh, rt in zip(rec.r_hat, rec.r_true))
        checks.append((f"noiseless identity K={K}", err < 1e-6))

    checks.append(("MAD rejects a single outlier",
                   abs(combine_magnitudes([1, 1, 1, 1, 100], "mad", 3.0) - 1.0) < 1e-12))
    checks.append(("range inversion round-trip",
                   abs(estimate_range(estimate_range(1000.0)) - 1000.0) < 1e-9))

    failed = 0
    for label, ok in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {label}")
        failed += not ok
    print(f"selftest: {len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"sweep": _cmd_sweep, "track": _cmd_track,
                "msens": _cmd_msens, "selftest": _cmd_selftest}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
