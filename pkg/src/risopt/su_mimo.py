"""Single-user MIMO specialization: SVD/water-filling beamformer and the
GD-SVD / GD-WMMSE RIS optimizers.

With one UE the interference covariance collapses to noise_var * I, so the
level-1 rate tables and gradients lose the covariance-correction term; the
higher levels reuse the same recursion as the multi-user path.  GD-SVD pairs
the phase step with the capacity-optimal SVD + water-filling beamformer (its
rate trace is monotone); GD-WMMSE pairs it with a WMMSE beam step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError
from .maxr import (
    OptimizerCfg,
    OptimizerResult,
    fast_sum_rate,
    rate_grad_from_tables,
)
from .rate_engine import concat_phase, effective_tensor
from .tensor_ops import mode_product
from .wmmse import LN2, BeamformerSet, init_beamformers, sum_rate, wmmse_step


@dataclass(frozen=True, eq=False)
class WaterfillAllocation:
    """Per-stream powers and the common water level."""

    powers: np.ndarray
    water_level: float

    @property
    def total(self):
        return float(np.sum(self.powers))


def waterfill(gains, e_tx, noise_var):
    """Exact water-filling over parallel channels with power gains ``gains``.

    Solves p_i = max(0, mu - noise_var / gains_i), sum p_i = e_tx by sorting
    and testing each candidate active-set size; no iteration involved.
    Streams with zero gain always get zero power.
    """
    gains = np.asarray(gains, dtype=float)
    if e_tx <= 0:
        raise ConfigError("transmit power must be positive")
    order = np.argsort(-gains)
    sorted_gains = gains[order]
    positive = sorted_gains > 0
    if not np.any(positive):
        raise DegenerateError("water-filling needs at least one nonzero gain")
    inv = np.zeros_like(sorted_gains)
    inv[positive] = noise_var / sorted_gains[positive]
    num_usable = int(np.sum(positive))
    mu = 0.0
    active = 0
    for m in range(num_usable, 0, -1):
        mu = (e_tx + float(np.sum(inv[:m]))) / m
        if mu - inv[m - 1] > 0:
            active = m
            break
    powers_sorted = np.zeros_like(sorted_gains)
    powers_sorted[:active] = mu - inv[:active]
    powers = np.zeros_like(gains)
    powers[order] = powers_sorted
    return WaterfillAllocation(powers=powers, water_level=mu)


def svd_waterfill_beamformer(h, e_tx, noise_var):
    """Capacity-optimal beamformer for the point-to-point channel h (M x N).

    Transmission sees the channel as h^H, so the beam directions are the
    left singular vectors of h; powers come from water-filling on the
    squared singular values.  Columns past the channel rank stay zero.
    Returns (B, WaterfillAllocation) with B of shape M x N.
    """
    h = np.asarray(h, dtype=complex)
    if float(np.max(np.abs(h), initial=0.0)) == 0.0:
        raise DegenerateError("all-zero channel cannot be beamformed")
    num_tx, num_rx = h.shape
    u, sv, _ = np.linalg.svd(h, full_matrices=False)
    gains = np.zeros(num_rx)
    k0 = min(num_tx, num_rx)
    gains[:k0] = sv[:k0] ** 2
    alloc = waterfill(gains, e_tx, noise_var)
    b = np.zeros((num_tx, num_rx), dtype=complex)
    b[:, :k0] = u * np.sqrt(alloc.powers[:k0])
    return b, alloc


def su_rate_gradient(psi, eff, noise_var):
    """Rate (nats) and psi-gradient for the single-user effective tensor.

    The interference projector is identity over noise_var, so the level-1
    table is a scaled Gram matrix and the first gradient has no covariance
    correction; levels 2.. reuse the shared recursion.
    """
    rows = np.einsum("l,nlb->nb", psi, eff.self_tensor)
    w = rows.conj().T / noise_var
    q1 = rows @ w
    grad1 = np.einsum("ilb,bj->ijl", eff.self_tensor, w)
    return rate_grad_from_tables(q1, grad1)


def _phase_step(psi, concat, bfs, noise_var, ls):
    """Projected-gradient phase step for K=1; accepts only improvements."""
    eff = effective_tensor(concat, bfs, 0)
    rate0, grad = su_rate_gradient(psi, eff, noise_var)
    if float(np.linalg.norm(grad)) < 1e-14:
        return psi, rate0, True
    direction = grad.conj()
    concat_stack = concat[None, :, :, :]
    b = bfs.per_ue[0]
    b_stack = b[None, :, :]
    c_gram = b @ b.conj().T
    lo, hi = ls.beta_min, ls.beta_max
    best_psi = None
    best_rate = rate0
    for _ in range(ls.iterations):
        beta = 0.5 * (lo + hi)
        cand = np.exp(1j * np.angle(psi + beta * direction))
        rate_c = fast_sum_rate(cand, concat_stack, b_stack, c_gram, noise_var)
        if rate_c > rate0:
            lo = beta
            best_psi, best_rate = cand, rate_c
        else:
            hi = beta
    if best_psi is None:
        return psi, rate0, True
    return best_psi, best_rate, False


def _gd_loop(realization, cfg, beam_step, phi_init):
    scen = realization.cfg
    if scen.num_ues != 1:
        raise ConfigError("single-user optimizers require exactly one UE")
    noise = scen.noise_w
    e_tx = scen.tx_power_w
    num_l = realization.num_ris_elements
    phi = np.ones(num_l, dtype=complex) if phi_init is None else np.asarray(phi_init, dtype=complex)
    psi = concat_phase(phi)
    concat = realization.concatenated(0)
    channel = mode_product(concat, psi, 2)
    bfs = init_beamformers([channel], e_tx)
    trace = [sum_rate([channel], bfs, noise, bits=True)]
    stagnations = 0
    for _ in range(cfg.max_outer):
        bfs = beam_step(channel, bfs, noise, e_tx)
        psi, rate_nats, stagnated = _phase_step(
            psi, concat, bfs, noise, cfg.line_search
        )
        if stagnated:
            stagnations += 1
        channel = mode_product(concat, psi, 2)
        trace.append(rate_nats / LN2)
        if abs(trace[-1] - trace[-2]) < cfg.tol_bpcu:
            break
    phi_out = psi[1:] / psi[0]
    return OptimizerResult(bfs, phi_out, tuple(trace), len(trace) - 1, stagnations)


def _svd_beam_step(channel, bfs, noise_var, e_tx):
    b, _ = svd_waterfill_beamformer(channel, e_tx, noise_var)
    return BeamformerSet(per_ue=(b,), tx_power=e_tx)


def _wmmse_beam_step(channel, bfs, noise_var, e_tx):
    new_bfs, _ = wmmse_step([channel], bfs, noise_var)
    return new_bfs


def gd_svd(realization, cfg=None, phi_init=None):
    """Alternate the SVD/water-filling beamformer with gradient phase steps.

    Both sub-steps are individually non-decreasing in rate, so the trace is
    monotone up to roundoff.
    """
    return _gd_loop(realization, cfg or OptimizerCfg(), _svd_beam_step, phi_init)


def gd_wmmse(realization, cfg=None, phi_init=None):
    """Alternate one WMMSE beam step with gradient phase steps (K=1)."""
    return _gd_loop(realization, cfg or OptimizerCfg(), _wmmse_beam_step, phi_init)
