"""Acceptance gate: ten numbered end-to-end checks, one verdict line each.

Every test prints "ACCEPTANCE n: PASS/FAIL (detail)" before asserting, so
the suite log always carries all ten verdicts.  Instance counts, tolerances,
and seeds are fixed; the Monte-Carlo checks (6, 7, 8) run full optimizations
over seeded trial sets and dominate the runtime (roughly 50 minutes on one
core).  Statistical orderings are decided on paired per-trial differences:
a mean beyond two standard errors is a win, anything inside that band is
reported as a tie, and only a significant reversal fails.
"""

import time

import numpy as np

from risopt import ScenarioConfig, draw_realization, near_square_geometry
from risopt.channel import (
    ChannelRealization,
    assemble_ris_tensor,
    effective_channel,
    upa_response,
)
from risopt.harness import (
    SweepSpec,
    baseline_no_ris,
    baseline_random_phase,
    run_sweep,
    write_csv,
)
from risopt.maxr import OptimizerCfg, maxr_wmmse, sum_rate_and_gradient
from risopt.mine import (
    build_mse_quadratic,
    mine_phi_star,
    mine_wmmse,
    wmse_direct,
    wmse_value,
)
from risopt.rate_engine import concat_phase, det_product_identity, ue_rate_semiquadratic
from risopt.tensor_ops import mode_product
from risopt.wmmse import (
    BeamformerSet,
    effective_noise_cov_direct,
    init_beamformers,
    sum_rate,
    weight_matrix,
    wmmse_step,
)

from conftest import crandn, unit_phases

NOISE_DBM_HALF_WATT = 10.0 * np.log10(0.5e3)  # noise_w == 0.5


def _verdict(num, ok, detail):
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def _rng(tag):
    return np.random.default_rng(np.random.SeedSequence([20260816, tag]))


def random_beamformers(rng, m, n, k_total, tx_power=1.0):
    raw = [crandn(rng, m, n) for _ in range(k_total)]
    total = sum(float(np.sum(np.abs(b) ** 2)) for b in raw)
    scaled = tuple(np.sqrt(tx_power / total) * b for b in raw)
    return BeamformerSet(per_ue=scaled, tx_power=tx_power)


def synth_realization(rng, num_ues, m, n, num_l):
    """Unit-scale realization built directly from random matrices."""
    cfg = ScenarioConfig(
        num_ues=num_ues,
        bs_geometry=near_square_geometry(m),
        ue_geometry=near_square_geometry(n),
        ris_geometry=near_square_geometry(num_l),
        noise_dbm=NOISE_DBM_HALF_WATT,
        tx_power_dbm=10.0 * np.log10(num_ues * 1e3),  # tx_power_w == num_ues
    )
    direct = tuple(crandn(rng, m, n) for _ in range(num_ues))
    ris = tuple(crandn(rng, m, num_l, n) for _ in range(num_ues))
    return ChannelRealization(cfg, direct, ris)


def stepped_state(real, phi):
    """(bfs, state) after one WMMSE step at the given phases."""
    channels = [effective_channel(real, k, phi) for k in range(real.cfg.num_ues)]
    bfs = init_beamformers(channels, real.cfg.tx_power_w)
    return wmmse_step(channels, bfs, real.cfg.noise_w)


def paired_outcome(diffs, floor=1e-5):
    """(mean, stderr, label) for a paired per-trial difference sample.

    The floor keeps stopping noise from turning an exact tie into a fake
    significant result when the standard error collapses to ~0.
    """
    diffs = np.asarray(diffs, dtype=float)
    mean = float(diffs.mean())
    se = float(diffs.std(ddof=1) / np.sqrt(diffs.size))
    band = max(2.0 * se, floor)
    if mean >= band:
        label = "win"
    elif mean > -band:
        label = "tie"
    else:
        label = "reversed"
    return mean, se, label


def test_acceptance_1_determinant_product_identity():
    rng = _rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        a = crandn(rng, n, m)
        g = crandn(rng, n, n)
        eps = float(10.0 ** rng.uniform(-6, 0))
        b = g @ g.conj().T + eps * np.eye(n)
        direct = np.linalg.det(np.eye(m) + a.T @ b @ a)
        prod = det_product_identity(a, b)
        worst = max(worst, abs(direct - prod) / max(1e-30, abs(direct)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 5.0
    assert _verdict(
        1, ok, f"det vs scalar-product route: max rel err {worst:.2e}, 1000 instances in {elapsed:.2f}s"
    )


def test_acceptance_2_rate_route_equivalence():
    rng = _rng(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(1, 5))
        k_total = int(rng.integers(1, 5))
        num_l = int(rng.integers(1, 33))
        noise = float(10.0 ** rng.uniform(-1.0, 0.5))
        concats = [crandn(rng, m, num_l + 1, n) for _ in range(k_total)]
        bfs = random_beamformers(rng, m, n, k_total)
        psi = concat_phase(unit_phases(rng, num_l))
        channels = [np.einsum("mln,l->mn", c, psi) for c in concats]

        logdet = sum_rate(channels, bfs, noise, bits=False)
        semi = sum(
            ue_rate_semiquadratic(psi, c, bfs, k, noise, bits=False)
            for k, c in enumerate(concats)
        )
        via_weights = 0.0
        for k, h in enumerate(channels):
            r_eff = effective_noise_cov_direct(h, bfs, k, noise)
            w = weight_matrix(h, bfs.per_ue[k], r_eff)
            via_weights += float(np.linalg.slogdet(w)[1])

        scale = max(1.0, abs(logdet))
        worst = max(
            worst, abs(semi - logdet) / scale, abs(via_weights - logdet) / scale
        )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 30.0
    assert _verdict(
        2,
        ok,
        "log-det vs semi-quadratic vs weight-determinant: "
        f"max rel err {worst:.2e}, 1000 instances in {elapsed:.1f}s",
    )


def test_acceptance_3_phase_gradient_matches_finite_differences():
    rng = _rng(3)
    start = time.perf_counter()
    h = 1e-6
    worst = 0.0
    for inst in range(200):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        k_total = 1 + inst % 4  # cycles K=1..4, so interference is exercised
        num_l = int(rng.integers(2, 13))
        concats = [crandn(rng, m, num_l + 1, n) for _ in range(k_total)]
        bfs = random_beamformers(rng, m, n, k_total)
        psi = concat_phase(unit_phases(rng, num_l))

        def rate_at(p):
            return sum_rate_and_gradient(p, concats, bfs, 1.0)[0]

        _, grad = sum_rate_and_gradient(psi, concats, bfs, 1.0)
        fd = np.zeros_like(grad)
        for i in range(len(psi)):
            step = np.zeros(len(psi), dtype=complex)
            step[i] = h
            d_re = (rate_at(psi + step) - rate_at(psi - step)) / (2 * h)
            d_im = (rate_at(psi + 1j * step) - rate_at(psi - 1j * step)) / (2 * h)
            fd[i] = 0.5 * (d_re - 1j * d_im)
        worst = max(worst, float(np.linalg.norm(fd - grad) / np.linalg.norm(grad)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 120.0
    assert _verdict(
        3, ok, f"analytic vs central differences: max rel L2 err {worst:.2e}, 200 instances in {elapsed:.1f}s"
    )


def test_acceptance_4_wmse_quadratic_matches_direct():
    rng = _rng(4)
    worst = 0.0
    for _ in range(1000):
        k_total = int(rng.integers(1, 4))
        m = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        num_l = int(rng.integers(2, 17))
        real = synth_realization(rng, k_total, m, n, num_l)
        bfs, state = stepped_state(real, unit_phases(rng, num_l))
        mq = build_mse_quadratic(real, bfs, state)
        for phi in (unit_phases(rng, num_l), 0.5 * crandn(rng, num_l)):
            via_quad = wmse_value(mq, phi)
            via_direct = wmse_direct(real, bfs, state, phi)
            worst = max(worst, abs(via_quad - via_direct) / abs(via_direct))
    ok = worst <= 1e-9
    assert _verdict(
        4, ok, f"compact quadratic vs assembled WMSE: max rel err {worst:.2e}, 1000 instances"
    )


def test_acceptance_5_wmse_stationary_point_residual():
    rng = _rng(5)
    worst = 0.0
    for _ in range(200):
        k_total = int(rng.integers(1, 4))
        m = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        num_l = int(rng.integers(2, 17))
        real = synth_realization(rng, k_total, m, n, num_l)
        bfs, state = stepped_state(real, unit_phases(rng, num_l))
        mq = build_mse_quadratic(real, bfs, state)
        phi_star, lam = mine_phi_star(mq)
        # first-order condition of the damped WMSE at its stationary point
        residual = float(
            np.linalg.norm(mq.quad @ phi_star + lam * phi_star - mq.linear)
        )
        worst = max(worst, residual / max(1e-300, float(np.linalg.norm(mq.linear))))
    ok = worst <= 1e-8
    assert _verdict(
        5, ok, f"stationarity residual at unprojected minimizer: max {worst:.2e}, 200 instances"
    )


def test_acceptance_6_alternation_convergence():
    start = time.perf_counter()
    base = ScenarioConfig(rng_seed=600)

    min_delta = np.inf
    for trial in range(100):
        real = draw_realization(base, trial=trial)
        res = maxr_wmmse(real)
        deltas = np.diff(np.asarray(res.rate_trace))
        if deltas.size:
            min_delta = min(min_delta, float(deltas.min()))
    maxr_ok = min_delta >= -1e-9

    # the closed-form phase scheme has no monotone-rate guarantee; run it
    # past its knee with no early stop and require a flat tail
    mine_cfg = OptimizerCfg(tol_bpcu=0.0, max_outer=2500)
    worst_tail = 0.0
    for trial in range(10):
        real = draw_realization(base, trial=trial)
        res = mine_wmmse(real, mine_cfg)
        tail = np.abs(np.diff(np.asarray(res.rate_trace)))[-10:]
        worst_tail = max(worst_tail, float(tail.max()))
    mine_ok = worst_tail < 1e-6
    elapsed = time.perf_counter() - start

    ok = maxr_ok and mine_ok
    assert _verdict(
        6,
        ok,
        f"ascent trace min delta {min_delta:+.2e} over 100 runs; "
        f"closed-form tail max delta {worst_tail:.2e} over 10 runs; {elapsed:.0f}s",
    )


def test_acceptance_7_optimized_vs_unoptimized_gain_ratio():
    start = time.perf_counter()
    ratios = {}
    for k_total in (2, 4):
        cfg = ScenarioConfig(num_ues=k_total, rng_seed=700 + k_total)
        opt_gain = np.zeros(200)
        rand_gain = np.zeros(200)
        for trial in range(200):
            real = draw_realization(cfg, trial=trial)
            floor = baseline_no_ris(real)
            opt_gain[trial] = maxr_wmmse(real).final_rate - floor
            rand_gain[trial] = baseline_random_phase(real, trial=trial) - floor
        ratios[k_total] = float(opt_gain.mean() / rand_gain.mean())
    elapsed = time.perf_counter() - start
    ok = all(3.5 <= r <= 14.0 for r in ratios.values()) and elapsed < 1200.0
    assert _verdict(
        7,
        ok,
        f"optimized/unoptimized gain ratio K=2: {ratios[2]:.2f}, K=4: {ratios[4]:.2f} "
        f"(window [3.5, 14]), 200 paired trials each, {elapsed:.0f}s",
    )


def test_acceptance_8_qualitative_orderings():
    start = time.perf_counter()
    base = ScenarioConfig(rng_seed=800)

    spec_main = SweepSpec(
        axis="ris_elements",
        values=(64,),
        trials_per_point=200,
        base=base,
        optimizers=("maxr_wmmse", "mine_wmmse", "random_phase"),
        direct_channel="blocked",
    )
    records, rows = run_sweep(spec_main)
    per = {
        name: np.array(
            [r.sum_rate_bpcu for r in records if r.optimizer_name == name]
        )
        for name in spec_main.optimizers
    }
    maxr_mine = paired_outcome(per["maxr_wmmse"] - per["mine_wmmse"])
    mine_rand = paired_outcome(per["mine_wmmse"] - per["random_phase"])

    spec_growth = SweepSpec(
        axis="ris_elements",
        values=(16, 32),
        trials_per_point=200,
        base=base,
        optimizers=("maxr_wmmse",),
        direct_channel="blocked",
    )
    _, rows_growth = run_sweep(spec_growth)
    mean_64 = next(r.mean_bpcu for r in rows if r.optimizer_name == "maxr_wmmse")
    growth = {r.axis_value: r.mean_bpcu for r in rows_growth}
    l_means = (growth[16.0], growth[32.0], mean_64)
    growth_ok = l_means[0] < l_means[1] < l_means[2]

    # single-user leg: run where the final beamformer step matters (high
    # power sharpens the rate surface; at desk power the two are a tie)
    su_base = ScenarioConfig(
        num_ues=1,
        ris_geometry=near_square_geometry(64),
        tx_power_dbm=56.0,
        rng_seed=801,
    )
    spec_su = SweepSpec(
        axis="tx_power_dbm",
        values=(56.0,),
        trials_per_point=100,
        base=su_base,
        optimizers=("gd_svd", "gd_wmmse"),
    )
    rec_su, _ = run_sweep(spec_su)
    per_su = {
        name: np.array([r.sum_rate_bpcu for r in rec_su if r.optimizer_name == name])
        for name in spec_su.optimizers
    }
    svd_wmmse = paired_outcome(per_su["gd_svd"] - per_su["gd_wmmse"])

    elapsed = time.perf_counter() - start
    ok = (
        maxr_mine[2] != "reversed"
        and mine_rand[2] != "reversed"
        and svd_wmmse[2] != "reversed"
        and growth_ok
    )
    assert _verdict(
        8,
        ok,
        f"blocked-direct L=64, 200 trials: ascent-vs-closed-form {maxr_mine[0]:+.3f}"
        f"±{maxr_mine[1]:.3f} ({maxr_mine[2]}), closed-form-vs-random {mine_rand[0]:+.3f}"
        f"±{mine_rand[1]:.3f} ({mine_rand[2]}); single-user SVD-vs-WMMSE "
        f"{svd_wmmse[0]:+.3f}±{svd_wmmse[1]:.3f} ({svd_wmmse[2]}); "
        f"mean rate over L=16/32/64: {l_means[0]:.2f} < {l_means[1]:.2f} < {l_means[2]:.2f} "
        f"is {growth_ok}; {elapsed:.0f}s",
    )


def test_acceptance_9_single_antenna_reduction():
    rng = _rng(9)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 9))
        num_l = int(rng.integers(2, 33))
        pb = int(rng.integers(1, 5))
        pc = int(rng.integers(1, 5))
        bs_geom = near_square_geometry(m)
        ris_geom = near_square_geometry(num_l)
        gb = crandn(rng, pb)
        gc = crandn(rng, pc)
        bs = np.stack(
            [upa_response(bs_geom, *rng.uniform(-np.pi, np.pi, 2)) for _ in range(pb)],
            axis=1,
        )
        rin = np.stack(
            [upa_response(ris_geom, *rng.uniform(-np.pi, np.pi, 2)) for _ in range(pb)],
            axis=1,
        )
        rout = np.stack(
            [upa_response(ris_geom, *rng.uniform(-np.pi, np.pi, 2)) for _ in range(pc)],
            axis=1,
        )
        ue = np.ones((1, pc), dtype=complex)
        tensor = assemble_ris_tensor(bs, rin, rout, ue, np.outer(gb, gc))
        phi = unit_phases(rng, num_l)
        got = mode_product(tensor, phi, 2)[:, 0]
        f_mat = (bs * gb) @ rin.conj().T
        g_vec = rout @ gc
        want = f_mat @ (np.diag(g_vec) @ phi)
        worst = max(
            worst, float(np.linalg.norm(got - want) / np.linalg.norm(want))
        )
    ok = worst <= 1e-12
    assert _verdict(
        9, ok, f"single-antenna tensor vs diag closed form: max rel err {worst:.2e}, 100 instances"
    )


def test_acceptance_10_byte_identical_csv(tmp_path):
    base = ScenarioConfig(
        num_ues=2,
        bs_geometry=near_square_geometry(4),
        ue_geometry=near_square_geometry(2),
        paths_direct=4,
        paths_bs_ris=4,
        paths_ris_ue=4,
        rng_seed=1000,
    )
    spec = SweepSpec(
        axis="ris_elements",
        values=(8, 16),
        trials_per_point=3,
        base=base,
        optimizers=("maxr_wmmse", "random_phase", "no_ris"),
    )
    blobs = []
    count = 0
    for name, threads in (("a", 1), ("b", 1), ("c", 4)):
        records, _ = run_sweep(spec, num_threads=threads)
        count = len(records)
        path = tmp_path / f"{name}.csv"
        write_csv(records, spec.axis, path)
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    assert _verdict(
        10,
        ok,
        f"{count} records; repeat run and thread counts 1/4 all byte-identical"
        if ok
        else "CSV bytes differ between runs or thread counts",
    )
