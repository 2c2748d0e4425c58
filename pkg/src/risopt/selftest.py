"""Built-in consistency battery behind ``risopt selftest``.

Fast spot checks of the identities the package is built on; the full test
suite covers the same ground far more thoroughly.  Each check prints one
PASS/FAIL line; the runner returns 0 only if everything passed.
"""

import numpy as np

from .channel import ScenarioConfig, draw_realization, near_square_geometry
from .harness import SweepSpec, run_sweep
from .maxr import OptimizerCfg, fast_sum_rate, sum_rate_and_gradient
from .mine import build_mse_quadratic, wmse_direct, wmse_value
from .rate_engine import det_product_identity, ue_rate_semiquadratic
from .su_mimo import waterfill
from .wmmse import BeamformerSet, sum_rate, wmmse_step


def _rng(tag):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([97, tag])))


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _random_system(rng, m=6, n=3, k=3, l=12):
    concats = [_crandn(rng, m, l + 1, n) for _ in range(k)]
    raw = [_crandn(rng, m, n) for _ in range(k)]
    total = sum(float(np.sum(np.abs(b) ** 2)) for b in raw)
    bfs = BeamformerSet(per_ue=tuple(b / np.sqrt(total) for b in raw), tx_power=1.0)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, l + 1))
    return concats, bfs, psi


def _check_det_identity():
    rng = _rng(1)
    worst = 0.0
    for _ in range(50):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        a = _crandn(rng, n, m)
        g = _crandn(rng, n, n)
        b = g @ g.conj().T + 1e-3 * np.eye(n)
        direct = np.linalg.det(np.eye(m) + a.T @ b @ a)
        prod = det_product_identity(a, b)
        worst = max(worst, abs(direct - prod) / max(1e-30, abs(direct)))
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def _check_rate_routes():
    rng = _rng(2)
    worst = 0.0
    for _ in range(25):
        concats, bfs, psi = _random_system(rng)
        noise = 0.5
        semi = sum(
            ue_rate_semiquadratic(psi, c, bfs, k, noise, bits=False)
            for k, c in enumerate(concats)
        )
        channels = [np.einsum("mln,l->mn", c, psi) for c in concats]
        logdet_w = sum_rate(channels, bfs, noise, bits=False)
        two_logdet = fast_sum_rate(
            psi,
            np.stack(concats),
            np.stack(bfs.per_ue),
            sum(b @ b.conj().T for b in bfs.per_ue),
            noise,
        )
        scale = max(1.0, abs(logdet_w))
        worst = max(
            worst,
            abs(semi - logdet_w) / scale,
            abs(two_logdet - logdet_w) / scale,
        )
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def _check_gradient():
    rng = _rng(3)
    worst = 0.0
    h = 1e-6
    for _ in range(3):
        concats, bfs, psi = _random_system(rng, m=5, n=2, k=2, l=8)
        rate0, grad = sum_rate_and_gradient(psi, concats, bfs, 1.0)
        fd = np.zeros_like(grad)
        for i in range(len(psi)):
            step = np.zeros(len(psi), dtype=complex)
            step[i] = h
            d_re = (
                sum_rate_and_gradient(psi + step, concats, bfs, 1.0)[0]
                - sum_rate_and_gradient(psi - step, concats, bfs, 1.0)[0]
            ) / (2 * h)
            d_im = (
                sum_rate_and_gradient(psi + 1j * step, concats, bfs, 1.0)[0]
                - sum_rate_and_gradient(psi - 1j * step, concats, bfs, 1.0)[0]
            ) / (2 * h)
            fd[i] = 0.5 * (d_re - 1j * d_im)
        worst = max(worst, float(np.linalg.norm(fd - grad) / np.linalg.norm(grad)))
    return worst <= 1e-5, f"max rel err {worst:.2e}"


def _small_scenario(seed=11):
    return ScenarioConfig(
        num_ues=2,
        bs_geometry=near_square_geometry(4),
        ue_geometry=near_square_geometry(2),
        ris_geometry=near_square_geometry(8),
        paths_direct=4,
        paths_bs_ris=4,
        paths_ris_ue=4,
        rng_seed=seed,
    )


def _check_mse_quadratic():
    rng = _rng(4)
    realization = draw_realization(_small_scenario())
    scen = realization.cfg
    phi0 = np.ones(realization.num_ris_elements, dtype=complex)
    from .channel import effective_channel
    from .wmmse import init_beamformers

    channels = [effective_channel(realization, k, phi0) for k in range(scen.num_ues)]
    bfs = init_beamformers(channels, scen.tx_power_w)
    bfs, state = wmmse_step(channels, bfs, scen.noise_w)
    mq = build_mse_quadratic(realization, bfs, state)
    worst = 0.0
    for _ in range(10):
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, realization.num_ris_elements))
        via_quad = wmse_value(mq, phi)
        via_direct = wmse_direct(realization, bfs, state, phi)
        worst = max(worst, abs(via_quad - via_direct) / (1.0 + abs(via_direct)))
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def _check_waterfill():
    rng = _rng(5)
    ok = True
    detail = ""
    for _ in range(20):
        gains = rng.uniform(0.1, 4.0, 5)
        alloc = waterfill(gains, e_tx=2.0, noise_var=0.7)
        if abs(alloc.total - 2.0) > 1e-9:
            ok, detail = False, f"power sum {alloc.total}"
            break
        active = alloc.powers > 0
        kkt = alloc.powers[active] - (alloc.water_level - 0.7 / gains[active])
        if np.max(np.abs(kkt), initial=0.0) > 1e-8:
            ok, detail = False, "KKT residual"
            break
    return ok, detail or "KKT + power ok"


def _check_determinism():
    spec = SweepSpec(
        axis="ris_elements",
        values=(4,),
        trials_per_point=2,
        base=_small_scenario(seed=23),
        optimizers=("wmmse_only", "random_phase"),
        optimizer_cfg=OptimizerCfg(max_outer=20),
    )
    rec_a, _ = run_sweep(spec, num_threads=1)
    rec_b, _ = run_sweep(spec, num_threads=2)
    return rec_a == rec_b, f"{len(rec_a)} records"


CHECKS = (
    ("determinant-product identity", _check_det_identity),
    ("rate route equivalence", _check_rate_routes),
    ("phase gradient vs finite differences", _check_gradient),
    ("mse quadratic vs direct", _check_mse_quadratic),
    ("water-filling KKT", _check_waterfill),
    ("sweep determinism across threads", _check_determinism),
)


def run():
    failures = 0
    for name, fn in CHECKS:
        ok, detail = fn()
        status = "PASS" if ok else "FAIL"
        print(f"selftest {name}: {status} ({detail})")
        if not ok:
            failures += 1
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 4
    print("selftest: all checks passed")
    return 0
