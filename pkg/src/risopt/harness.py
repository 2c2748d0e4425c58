"""Monte-Carlo sweep runner with paired trials and reproducible CSV output.

Each trial draws one channel realization and runs every requested optimizer
on it, so per-trial differences between optimizers are paired comparisons
rather than the difference of two noisy means.  All randomness derives from
(root seed, axis index, trial index), which makes results independent of the
thread count and of record arrival order; records are sorted on a stable key
before aggregation or writing.

Wall-clock timing is off by default because timed columns would break the
byte-identical-output guarantee; opt in via SweepSpec.record_timing.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    LINK_BASELINE_PHI,
    ScenarioConfig,
    draw_realization,
    effective_channel,
    near_square_geometry,
    substream,
    zero_direct,
    zero_ris,
)
from .errors import ConfigError
from .maxr import OptimizerCfg, maxr_wmmse
from .mine import mine_wmmse
from .su_mimo import gd_svd, gd_wmmse
from .wmmse import init_beamformers, wmmse_converge

AXES = (
    "ris_elements",
    "num_ues",
    "bs_antennas",
    "ue_antennas",
    "tx_power_dbm",
    "num_paths",
)

OPTIMIZERS = (
    "maxr_wmmse",
    "mine_wmmse",
    "gd_svd",
    "gd_wmmse",
    "random_phase",
    "no_ris",
    "wmmse_only",
)

CSV_HEADER = "axis,axis_value,trial,optimizer,sum_rate_bpcu,outer_iters,wall_ms,seed"

_COUNT_AXES = {"ris_elements", "num_ues", "bs_antennas", "ue_antennas", "num_paths"}


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: an axis, its values, and the optimizers to pair per trial."""

    axis: str
    values: tuple
    trials_per_point: int
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    optimizers: tuple = ("maxr_wmmse",)
    direct_channel: str = "present"
    record_timing: bool = False
    optimizer_cfg: OptimizerCfg = field(default_factory=OptimizerCfg)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r} (choose from {AXES})")
        values = tuple(self.values)
        if not values:
            raise ConfigError("sweep needs at least one axis value")
        for v in values:
            if self.axis in _COUNT_AXES:
                if float(v) != int(v) or int(v) < 1:
                    raise ConfigError(
                        f"axis {self.axis} values must be positive integers, got {v!r}"
                    )
            elif not np.isfinite(float(v)):
                raise ConfigError(f"axis value {v!r} is not finite")
        object.__setattr__(self, "values", values)
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be at least 1")
        optimizers = tuple(self.optimizers)
        if not optimizers:
            raise ConfigError("sweep needs at least one optimizer")
        for name in optimizers:
            if name not in OPTIMIZERS:
                raise ConfigError(
                    f"unknown optimizer {name!r} (choose from {OPTIMIZERS})"
                )
        if len(set(optimizers)) != len(optimizers):
            raise ConfigError("duplicate optimizer names in sweep")
        object.__setattr__(self, "optimizers", optimizers)
        if self.direct_channel not in ("present", "blocked"):
            raise ConfigError("direct_channel must be 'present' or 'blocked'")
        if any(name.startswith("gd_") for name in optimizers):
            ues = values if self.axis == "num_ues" else (self.base.num_ues,)
            if any(int(u) != 1 for u in ues):
                raise ConfigError(
                    "gd_svd / gd_wmmse are single-user optimizers; "
                    "every point of the sweep must have num_ues = 1"
                )


@dataclass(frozen=True)
class TrialRecord:
    axis_value: float
    trial_index: int
    optimizer_name: str
    sum_rate_bpcu: float
    outer_iterations: int
    wall_time_ms: float
    seed: int


@dataclass(frozen=True)
class AggregateRow:
    axis_value: float
    optimizer_name: str
    mean_bpcu: float
    stderr_bpcu: float
    num_trials: int


def apply_axis(base, axis, value):
    """Return a copy of ``base`` with the swept quantity set to ``value``."""
    if axis == "ris_elements":
        geom = near_square_geometry(int(value), base.ris_geometry.spacing_over_wavelength)
        return replace(base, ris_geometry=geom)
    if axis == "num_ues":
        return replace(base, num_ues=int(value))
    if axis == "bs_antennas":
        geom = near_square_geometry(int(value), base.bs_geometry.spacing_over_wavelength)
        return replace(base, bs_geometry=geom)
    if axis == "ue_antennas":
        geom = near_square_geometry(int(value), base.ue_geometry.spacing_over_wavelength)
        return replace(base, ue_geometry=geom)
    if axis == "tx_power_dbm":
        return replace(base, tx_power_dbm=float(value))
    if axis == "num_paths":
        count = int(value)
        return replace(base, paths_direct=count, paths_bs_ris=count, paths_ris_ue=count)
    raise ConfigError(f"unknown sweep axis {axis!r}")


def _wmmse_rate(realization, phi, cfg):
    """Converged WMMSE sum rate (bpcu) at fixed phases; (rate, iters)."""
    scen = realization.cfg
    channels = [effective_channel(realization, k, phi) for k in range(scen.num_ues)]
    if max(float(np.max(np.abs(h), initial=0.0)) for h in channels) == 0.0:
        return 0.0, 0  # nothing to receive: noise-only link
    bfs = init_beamformers(channels, scen.tx_power_w)
    _, _, trace = wmmse_converge(
        channels, bfs, scen.noise_w, cfg.tol_bpcu, cfg.max_outer
    )
    return trace[-1], len(trace) - 1


def random_phases(realization, trial=0, axis_index=0):
    """The seeded uniform phase draw used by the random-phase baseline."""
    rng = substream(realization.cfg.rng_seed, axis_index, trial, 0, LINK_BASELINE_PHI)
    angles = rng.uniform(0.0, 2.0 * np.pi, realization.num_ris_elements)
    return np.exp(1j * angles)


def baseline_random_phase(realization, trial=0, axis_index=0, cfg=None):
    """Sum rate (bpcu) with seeded uniform-random phases and full WMMSE."""
    phi = random_phases(realization, trial, axis_index)
    rate, _ = _wmmse_rate(realization, phi, cfg or OptimizerCfg())
    return rate


def baseline_no_ris(realization, cfg=None):
    """Sum rate (bpcu) with the RIS term removed and full WMMSE."""
    stripped = zero_ris(realization)
    phi = np.ones(realization.num_ris_elements, dtype=complex)
    rate, _ = _wmmse_rate(stripped, phi, cfg or OptimizerCfg())
    return rate


def _dispatch(name, realization, axis_index, trial, spec):
    """Run one optimizer on one realization; (rate_bpcu, outer_iters)."""
    cfg = spec.optimizer_cfg
    if name == "maxr_wmmse":
        res = maxr_wmmse(realization, cfg)
        return res.final_rate, res.outer_iters
    if name == "mine_wmmse":
        res = mine_wmmse(realization, cfg)
        return res.final_rate, res.outer_iters
    if name == "gd_svd":
        res = gd_svd(realization, cfg)
        return res.final_rate, res.outer_iters
    if name == "gd_wmmse":
        res = gd_wmmse(realization, cfg)
        return res.final_rate, res.outer_iters
    if name == "random_phase":
        phi = random_phases(realization, trial, axis_index)
        return _wmmse_rate(realization, phi, cfg)
    if name == "no_ris":
        phi = np.ones(realization.num_ris_elements, dtype=complex)
        return _wmmse_rate(zero_ris(realization), phi, cfg)
    if name == "wmmse_only":
        phi = np.ones(realization.num_ris_elements, dtype=complex)
        return _wmmse_rate(realization, phi, cfg)
    raise ConfigError(f"unknown optimizer {name!r}")


def _run_trial(spec, axis_index, value, trial):
    cfg = apply_axis(spec.base, spec.axis, value)
    realization = draw_realization(cfg, trial=trial, axis_index=axis_index)
    if spec.direct_channel == "blocked":
        realization = zero_direct(realization)
    records = []
    for name in spec.optimizers:
        start = time.perf_counter() if spec.record_timing else 0.0
        rate, iters = _dispatch(name, realization, axis_index, trial, spec)
        wall_ms = (time.perf_counter() - start) * 1e3 if spec.record_timing else 0.0
        records.append(
            TrialRecord(
                axis_value=float(value),
                trial_index=trial,
                optimizer_name=name,
                sum_rate_bpcu=float(rate),
                outer_iterations=int(iters),
                wall_time_ms=wall_ms,
                seed=cfg.rng_seed,
            )
        )
    return records


def run_sweep(spec, num_threads=1):
    """Execute the sweep; returns (records, aggregates) in stable order."""
    if num_threads < 1:
        raise ConfigError("num_threads must be at least 1")
    jobs = [
        (axis_index, value, trial)
        for axis_index, value in enumerate(spec.values)
        for trial in range(spec.trials_per_point)
    ]
    if num_threads == 1:
        chunks = [_run_trial(spec, a, v, t) for a, v, t in jobs]
    else:
        with ThreadPoolExecutor(max_workers=num_threads) as pool:
            futures = [pool.submit(_run_trial, spec, a, v, t) for a, v, t in jobs]
            chunks = [f.result() for f in futures]
    records = [rec for chunk in chunks for rec in chunk]
    opt_rank = {name: i for i, name in enumerate(spec.optimizers)}
    value_rank = {float(v): i for i, v in enumerate(spec.values)}
    records.sort(
        key=lambda r: (
            value_rank[r.axis_value],
            r.trial_index,
            opt_rank[r.optimizer_name],
        )
    )
    return records, aggregate(records, spec)


def aggregate(records, spec):
    """Mean and standard error per (axis value, optimizer) point."""
    rows = []
    for value in spec.values:
        for name in spec.optimizers:
            rates = np.array(
                [
                    r.sum_rate_bpcu
                    for r in records
                    if r.axis_value == float(value) and r.optimizer_name == name
                ]
            )
            if rates.size == 0:
                continue
            mean = float(np.mean(rates))
            stderr = (
                float(np.std(rates, ddof=1) / np.sqrt(rates.size))
                if rates.size > 1
                else 0.0
            )
            rows.append(AggregateRow(float(value), name, mean, stderr, rates.size))
    return rows


def write_csv(records, axis_name, path):
    """Write trial records as CSV: UTF-8, LF endings, '.' decimals."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    axis_name,
                    format(r.axis_value, ".12g"),
                    str(r.trial_index),
                    r.optimizer_name,
                    format(r.sum_rate_bpcu, ".12g"),
                    str(r.outer_iterations),
                    format(r.wall_time_ms, ".3f"),
                    str(r.seed),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
