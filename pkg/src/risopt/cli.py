"""Command-line front end: run, sweep, gradcheck, selftest.

Exit codes are a stable contract: 0 success, 2 config error, 3 I/O error,
4 numerical failure.  Diagnostic chatter (timings) goes to stderr so stdout
stays byte-stable for a fixed seed.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from .channel import draw_realization
from .errors import ConfigError, RisoptError
from .harness import (
    OPTIMIZERS,
    _dispatch,
    run_sweep,
    write_csv,
)
from .maxr import maxr_wmmse


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="risopt",
        description="RIS phase optimization for multi-user MIMO downlinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="single realization, one optimizer")
    run_p.add_argument("--config", help="scenario config file (key=value or JSON)")
    run_p.add_argument("--optimizer", choices=OPTIMIZERS, default="maxr_wmmse")
    run_p.add_argument("--seed", type=int, help="root RNG seed override")
    run_p.add_argument("--threads", type=int, help="accepted for symmetry; unused")
    run_p.add_argument("--out", help="optional JSON report path")
    run_p.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="config override, repeatable",
    )

    sweep_p = sub.add_parser("sweep", help="Monte-Carlo sweep to CSV")
    sweep_p.add_argument("--config", required=True, help="sweep spec file")
    sweep_p.add_argument("--out", default="sweep.csv", help="output CSV path")
    sweep_p.add_argument("--seed", type=int, help="root RNG seed override")
    sweep_p.add_argument("--threads", type=int, help="worker threads")
    sweep_p.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
    )

    grad_p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    grad_p.add_argument("--seed", type=int, default=0)
    grad_p.add_argument("--bs-antennas", type=int, default=6)
    grad_p.add_argument("--ue-antennas", type=int, default=3)
    grad_p.add_argument("--num-ues", type=int, default=3)
    grad_p.add_argument("--ris-elements", type=int, default=16)
    grad_p.add_argument("--instances", type=int, default=20)

    sub.add_parser("selftest", help="quick built-in consistency battery")
    return parser


def _threads(args):
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("RISOPT_THREADS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"RISOPT_THREADS must be an integer, got {env!r}") from exc
    return 1


def _load(args, schema):
    raw = cfgmod.load_config(args.config) if args.config else {}
    raw = cfgmod.apply_overrides(raw, args.override)
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    return cfgmod.coerce(raw, schema)


def cmd_run(args):
    cfg = _load(args, cfgmod.RUN_KEYS)
    optimizer = cfg.get("optimizer", args.optimizer)
    if optimizer not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    scen = cfgmod.scenario_from_dict(cfg)
    opt_cfg = cfgmod.optimizer_cfg_from_dict(cfg)
    realization = draw_realization(scen)

    start = time.perf_counter()
    result = _run_with_trace(optimizer, realization, opt_cfg)
    wall_ms = (time.perf_counter() - start) * 1e3
    rate, iters, trace, phi = result

    print(f"optimizer: {optimizer}")
    print(f"seed: {scen.rng_seed}")
    print(
        f"scenario: M={scen.bs_geometry.total} K={scen.num_ues} "
        f"N={scen.ue_geometry.total} L={scen.ris_geometry.total}"
    )
    if trace is not None:
        for i, value in enumerate(trace):
            print(f"iter {i:3d}  sum rate {value:.6f} bpcu")
    print(f"final sum rate: {rate:.6f} bpcu ({iters} outer iterations)")
    if phi is not None:
        angles = np.angle(phi)
        print(
            "phi angles (rad): "
            f"mean {np.mean(angles):+.4f}  std {np.std(angles):.4f}  "
            f"min {np.min(angles):+.4f}  max {np.max(angles):+.4f}"
        )
    print(f"wall time: {wall_ms:.1f} ms", file=sys.stderr)

    if args.out:
        report = {
            "optimizer": optimizer,
            "seed": scen.rng_seed,
            "final_rate_bpcu": rate,
            "outer_iters": iters,
            "rate_trace_bpcu": list(trace) if trace is not None else None,
            "phi_angles": list(np.angle(phi)) if phi is not None else None,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0


def _run_with_trace(optimizer, realization, opt_cfg):
    """(rate_bpcu, iters, trace_or_None, phi_or_None) for one optimizer."""
    from .channel import zero_ris
    from .harness import _wmmse_rate, random_phases
    from .mine import mine_wmmse
    from .su_mimo import gd_svd, gd_wmmse

    runners = {
        "maxr_wmmse": maxr_wmmse,
        "mine_wmmse": mine_wmmse,
        "gd_svd": gd_svd,
        "gd_wmmse": gd_wmmse,
    }
    if optimizer in runners:
        res = runners[optimizer](realization, opt_cfg)
        return res.final_rate, res.outer_iters, res.rate_trace, res.phi
    if optimizer == "random_phase":
        phi = random_phases(realization)
        rate, iters = _wmmse_rate(realization, phi, opt_cfg)
        return rate, iters, None, phi
    ones = np.ones(realization.num_ris_elements, dtype=complex)
    if optimizer == "no_ris":
        rate, iters = _wmmse_rate(zero_ris(realization), ones, opt_cfg)
        return rate, iters, None, None
    rate, iters = _wmmse_rate(realization, ones, opt_cfg)  # wmmse_only
    return rate, iters, None, ones


def cmd_sweep(args):
    cfg = _load(args, cfgmod.SWEEP_KEYS)
    spec = cfgmod.sweep_from_dict(cfg)
    records, aggregates = run_sweep(spec, num_threads=_threads(args))
    write_csv(records, spec.axis, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    print(f"{'axis_value':>12} {'optimizer':>14} {'mean_bpcu':>12} {'stderr':>10} {'trials':>7}")
    for row in aggregates:
        print(
            f"{row.axis_value:>12g} {row.optimizer_name:>14} "
            f"{row.mean_bpcu:>12.4f} {row.stderr_bpcu:>10.4f} {row.num_trials:>7d}"
        )
    return 0


def _fd_gradient(psi, concats, bfs, noise_var, h=1e-6):
    """Central finite differences of the sum rate over Re/Im of psi."""
    from .maxr import sum_rate_and_gradient

    def rate_at(p):
        return sum_rate_and_gradient(p, concats, bfs, noise_var)[0]

    grad = np.zeros(len(psi), dtype=complex)
    for m in range(len(psi)):
        step = np.zeros(len(psi), dtype=complex)
        step[m] = h
        d_re = (rate_at(psi + step) - rate_at(psi - step)) / (2 * h)
        d_im = (rate_at(psi + 1j * step) - rate_at(psi - 1j * step)) / (2 * h)
        # real derivatives fold back into the holomorphic-slot gradient
        grad[m] = 0.5 * (d_re - 1j * d_im)
    return grad


def cmd_gradcheck(args):
    from .maxr import sum_rate_and_gradient
    from .wmmse import BeamformerSet

    if args.ue_antennas > 6 or args.ris_elements > 64:
        raise ConfigError("gradcheck dims are capped at N <= 6, L <= 64")
    worst = 0.0
    skipped = 0
    for inst in range(args.instances):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([args.seed, inst])))
        m, n, k, l = args.bs_antennas, args.ue_antennas, args.num_ues, args.ris_elements
        shape = (m, l + 1, n)
        concats = [
            (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
            for _ in range(k)
        ]
        raw = [
            (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
            for _ in range(k)
        ]
        total = sum(float(np.sum(np.abs(b) ** 2)) for b in raw)
        bfs = BeamformerSet(
            per_ue=tuple(b / np.sqrt(total) for b in raw), tx_power=1.0
        )
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, l + 1))
        _, grad = sum_rate_and_gradient(psi, concats, bfs, 1.0)
        norm = float(np.linalg.norm(grad))
        if norm < 1e-10:
            skipped += 1
            print(f"instance {inst}: skipped (gradient norm {norm:.2e} < 1e-10)")
            continue
        fd = _fd_gradient(psi, concats, bfs, 1.0)
        err = float(np.linalg.norm(fd - grad) / norm)
        worst = max(worst, err)
    print(f"instances: {args.instances}  skipped: {skipped}")
    print(f"max relative gradient error: {worst:.3e}")
    if worst <= 1e-4:
        print("gradcheck: PASS")
        return 0
    print("gradcheck: FAIL")
    return 4


def cmd_selftest(args):
    from . import selftest

    return selftest.run()


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "run": cmd_run,
            "sweep": cmd_sweep,
            "gradcheck": cmd_gradcheck,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (RisoptError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
