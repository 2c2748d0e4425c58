"""Weighted-MMSE transmit beamforming for the MU-MIMO downlink sum rate.

Given per-UE effective channels H_k (M x N, BS antennas x UE antennas) and a
total transmit power E_tx, one `wmmse_step` computes the per-UE MMSE receive
filters A_k, the weight matrices W_k = I + SINR-like term, the regularized
closed-form beamformers, and renormalizes them to the exact power budget.
Iterating the step is the classical alternating scheme whose fixed points are
stationary points of the sum rate; each step does not decrease the rate.

Rates are natural-log internally; pass ``bits=True`` (default) for bpcu.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, DimensionError
from .tensor_ops import logdet_hermitian_psd

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class BeamformerSet:
    """Per-UE transmit beamformers B_k (M x N) plus the power budget."""

    per_ue: tuple
    tx_power: float

    def power(self):
        return float(sum(np.linalg.norm(b) ** 2 for b in self.per_ue))

    def __len__(self):
        return len(self.per_ue)

    def __getitem__(self, k):
        return self.per_ue[k]


@dataclass(frozen=True)
class WmmseState:
    """Receive filters A_k and weights W_k produced alongside a step."""

    filters: tuple
    weights: tuple


def init_beamformers(channels, tx_power):
    """Matched eigen-beamforming start: B_k = H_k V_k = U_k diag(s_k),
    jointly scaled to the exact power budget."""
    per_ue = []
    for h in channels:
        u, s, _ = np.linalg.svd(h, full_matrices=False)
        b = u * s  # == h @ v, columns scaled by singular values
        n = h.shape[1]
        if b.shape[1] < n:  # wide channel: keep N columns, zero-padded
            b = np.pad(b, ((0, 0), (0, n - b.shape[1])))
        per_ue.append(b)
    total = sum(np.linalg.norm(b) ** 2 for b in per_ue)
    if total <= 0.0:
        raise DegenerateError("all channels are zero; cannot initialize beamformers")
    scale = np.sqrt(tx_power / total)
    return BeamformerSet(tuple(scale * b for b in per_ue), float(tx_power))


def _check_dims(h, bfs):
    if h.shape[0] != bfs.per_ue[0].shape[0]:
        raise DimensionError(
            f"channel has {h.shape[0]} BS antennas, beamformers have "
            f"{bfs.per_ue[0].shape[0]}"
        )


def mmse_filter(h_k, bfs, noise_var, k=0, received_gains=None):
    """MMSE receive filter A_k = B_k^H H_k (sum_i H_k^H B_i B_i^H H_k + s2 I)^-1.

    ``k`` selects which beamformer is UE k's own; ``received_gains`` may carry
    the precomputed X_i = H_k^H B_i list to avoid recomputation.
    """
    if noise_var <= 0:
        raise DomainError(f"noise variance must be positive, got {noise_var}")
    _check_dims(h_k, bfs)
    n = h_k.shape[1]
    xs = received_gains
    if xs is None:
        xs = [h_k.conj().T @ b for b in bfs.per_ue]
    s = noise_var * np.eye(n, dtype=complex)
    for x in xs:
        s = s + x @ x.conj().T
    # A = X_k^H S^{-1}; S is Hermitian so solve(S, X_k)^H = X_k^H S^{-1}.
    return np.linalg.solve(s, xs[k]).conj().T


def effective_noise_cov_direct(h_k, bfs, k, noise_var):
    """Interference-plus-noise covariance sum_{i != k} H^H B_i B_i^H H + s2 I."""
    n = h_k.shape[1]
    r = noise_var * np.eye(n, dtype=complex)
    for i, b in enumerate(bfs.per_ue):
        if i == k:
            continue
        x = h_k.conj().T @ b
        r = r + x @ x.conj().T
    return r


def weight_matrix(h_k, b_k, r_eff):
    """Weight W_k = I + B_k^H H_k R^{-1} H_k^H B_k; log det W_k is UE k's rate."""
    try:
        np.linalg.cholesky(0.5 * (r_eff + r_eff.conj().T))
    except np.linalg.LinAlgError:
        raise DomainError("effective noise covariance is not positive definite")
    y = b_k.conj().T @ h_k  # N x N
    n = y.shape[0]
    w = np.eye(n, dtype=complex) + y @ np.linalg.solve(r_eff, y.conj().T)
    return 0.5 * (w + w.conj().T)


def wmmse_step(channels, bfs, noise_var):
    """One full WMMSE update; returns the new BeamformerSet and the
    (filters, weights) state that produced it."""
    if noise_var <= 0:
        raise DomainError(f"noise variance must be positive, got {noise_var}")
    k_total = len(channels)
    m = channels[0].shape[0]
    e_tx = bfs.tx_power

    filters = []
    weights = []
    for k, h in enumerate(channels):
        xs = [h.conj().T @ b for b in bfs.per_ue]
        filters.append(mmse_filter(h, bfs, noise_var, k=k, received_gains=xs))
        r_eff = effective_noise_cov_direct(h, bfs, k, noise_var)
        weights.append(weight_matrix(h, bfs.per_ue[k], r_eff))

    gram = np.zeros((m, m), dtype=complex)
    trace_term = 0.0
    for h, a, w in zip(channels, filters, weights):
        ha = h @ a.conj().T  # M x N
        gram += ha @ w @ ha.conj().T
        trace_term += float(np.trace(a.conj().T @ w @ a).real)
    reg = trace_term / (e_tx / noise_var)
    gram += reg * np.eye(m, dtype=complex)
    gram = 0.5 * (gram + gram.conj().T)

    raw = [np.linalg.solve(gram, h @ a.conj().T @ w)
           for h, a, w in zip(channels, filters, weights)]
    total = sum(np.linalg.norm(b) ** 2 for b in raw)
    if total <= 0.0:
        raise DegenerateError("WMMSE produced all-zero beamformers")
    scale = np.sqrt(e_tx / total)
    new = BeamformerSet(tuple(scale * b for b in raw), e_tx)
    return new, WmmseState(tuple(filters), tuple(weights))


def sum_rate(channels, bfs, noise_var, bits=True):
    """Sum over UEs of log det(I + B^H H R^{-1} H^H B)."""
    total = 0.0
    for k, h in enumerate(channels):
        r_eff = effective_noise_cov_direct(h, bfs, k, noise_var)
        y = bfs.per_ue[k].conj().T @ h
        n = y.shape[0]
        t = np.eye(n, dtype=complex) + y @ np.linalg.solve(r_eff, y.conj().T)
        total += logdet_hermitian_psd(0.5 * (t + t.conj().T))
    return total / LN2 if bits else total


def wmmse_converge(channels, bfs, noise_var, tol_bpcu=1e-6, max_iters=300):
    """Iterate wmmse_step at fixed channels until the bpcu rate stalls.

    Returns (final beamformers, final state, bpcu rate trace including the
    initial point)."""
    trace = [sum_rate(channels, bfs, noise_var, bits=True)]
    state = None
    for _ in range(max_iters):
        bfs, state = wmmse_step(channels, bfs, noise_var)
        trace.append(sum_rate(channels, bfs, noise_var, bits=True))
        if abs(trace[-1] - trace[-2]) < tol_bpcu:
            break
    return bfs, state, trace
