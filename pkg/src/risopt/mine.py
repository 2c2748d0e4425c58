"""Closed-form WMSE-minimizing RIS update (MinE) and its alternating loop.

With receive filters A_k, weights W_k and beamformers B_i held fixed, the
weighted sum-MSE is an exact quadratic in the RIS phase vector phi:

    WMSE(phi) = phi^H quad phi - 2 Re(linear^H phi) + const.

The unconstrained stationary point of the Lagrangian with the scalar
multiplier lambda = 1 / rho_max (rho_max the top eigenvalue of quad) is
phi* = (quad + lambda I)^{-1} linear, which is then projected entrywise onto
the unit-modulus torus.  Unlike MaxR this update is not guaranteed to
increase the sum rate, so the loop reports both rate and WMSE traces.
"""

from dataclasses import dataclass

import numpy as np

from .channel import effective_channel
from .errors import DegenerateError, NumericalError
from .maxr import OptimizerCfg, OptimizerResult
from .tensor_ops import mode_multiply
from .wmmse import init_beamformers, sum_rate, wmmse_step


@dataclass(frozen=True, eq=False)
class MseQuadratic:
    """Coefficients of the WMSE as a quadratic in phi (see module docstring).

    quad is L x L Hermitian PSD, linear length L, constant the real
    phi-independent remainder (so the quadratic evaluation reproduces the
    full weighted sum-MSE, not just its phi-dependent part).
    """

    quad: np.ndarray
    linear: np.ndarray
    constant: float

    @property
    def num_elements(self):
        return self.linear.shape[0]


def _effective_pair(realization, bfs, a_k, k, i):
    """(H-tilde_{k,i}, curly-H-tilde_{k,i}): the direct and tensor pieces of
    B_i^H H_k(phi) A_k^H, shapes (N_i, Ns) and (N_i, L, Ns)."""
    b_i = bfs.per_ue[i]
    ht_direct = b_i.conj().T @ realization.direct[k] @ a_k.conj().T
    x1 = mode_multiply(realization.ris[k], b_i.conj(), 1)
    ht_tensor = np.einsum("aln,bn->alb", x1, a_k.conj())
    return ht_direct, ht_tensor


def mse_matrix(k, realization, bfs, state, phi, route="direct"):
    """Expected symbol-error covariance E[E_k] for UE k at RIS phases phi.

    route="direct" assembles it from the effective channel; route="tensor"
    uses the phi-quadratic expansion.  Both agree to rounding and the unit
    tests pin that equivalence.
    """
    a_k = state.filters[k]
    w_dim = a_k.shape[0]
    noise_var = realization.cfg.noise_w
    eye = np.eye(w_dim, dtype=complex)
    if route == "direct":
        heff = effective_channel(realization, k, phi)
        ah = a_k @ heff.conj().T  # Ns x M
        err = eye + noise_var * (a_k @ a_k.conj().T)
        for i, b_i in enumerate(bfs.per_ue):
            g = ah @ b_i
            err = err + g @ g.conj().T
            if i == k:
                err = err - g - g.conj().T
        return err
    if route == "tensor":
        err = eye + noise_var * (a_k @ a_k.conj().T)
        for i in range(len(bfs.per_ue)):
            ht_d, ht_t = _effective_pair(realization, bfs, a_k, k, i)
            c = ht_d + np.einsum("alb,l->ab", ht_t, phi)
            err = err + c.conj().T @ c
            if i == k:
                err = err - c - c.conj().T
        return err
    raise ValueError(f"unknown mse_matrix route {route!r}")


def build_mse_quadratic(realization, bfs, state):
    """Assemble the WMSE quadratic coefficients for fixed (A, W, B).

    The reduction order over (k, i) is fixed, so results are reproducible
    regardless of how callers parallelize around this.
    """
    num_ues = len(bfs.per_ue)
    num_l = realization.num_ris_elements
    noise_var = realization.cfg.noise_w
    quad = np.zeros((num_l, num_l), dtype=complex)
    linear = np.zeros(num_l, dtype=complex)
    const = 0.0
    for k in range(num_ues):
        a_k = state.filters[k]
        w_k = state.weights[k]
        o_k = np.eye(a_k.shape[0], dtype=complex) + noise_var * (a_k @ a_k.conj().T)
        for i in range(num_ues):
            ht_d, ht_t = _effective_pair(realization, bfs, a_k, k, i)
            quad += np.einsum("nlb,cb,nmc->lm", ht_t.conj(), w_k, ht_t)
            linear -= np.einsum("aln,an->l", ht_t.conj(), ht_d @ w_k)
            o_k = o_k + ht_d.conj().T @ ht_d
            if i == k:
                linear += np.einsum("aln,an->l", ht_t.conj(), w_k)
                o_k = o_k - ht_d - ht_d.conj().T
        const += float(np.trace(w_k @ o_k).real)
    quad = 0.5 * (quad + quad.conj().T)  # re-hermitize accumulated roundoff
    return MseQuadratic(quad=quad, linear=linear, constant=const)


def wmse_value(mq, phi):
    """Weighted sum-MSE at phi from the quadratic coefficients."""
    phi = np.asarray(phi, dtype=complex)
    val = np.vdot(phi, mq.quad @ phi).real - 2.0 * np.vdot(mq.linear, phi).real
    return float(val + mq.constant)


def wmse_direct(realization, bfs, state, phi):
    """Weighted sum-MSE via the per-UE error covariances (oracle route)."""
    total = 0.0
    for k in range(len(bfs.per_ue)):
        err = mse_matrix(k, realization, bfs, state, phi, route="direct")
        total += float(np.trace(state.weights[k] @ err).real)
    return total


def top_eigenvalue(a, tol=1e-10, max_iters=10000):
    """Largest eigenvalue of a Hermitian PSD matrix by power iteration."""
    n = a.shape[0]
    if n == 0:
        raise DegenerateError("empty matrix has no eigenvalues")
    v = np.ones(n, dtype=complex) + 1e-3 * np.arange(n)  # deterministic start
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(max_iters):
        w = a @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        rho_new = float(np.vdot(v, a @ v).real)
        if abs(rho_new - rho) <= tol * max(1.0, abs(rho_new)):
            return rho_new
        rho = rho_new
    raise NumericalError(
        f"power iteration did not settle within {max_iters} iterations"
    )


def mine_phi_star(mq):
    """Unprojected stationary point and its multiplier: (phi_star, lam)."""
    rho = top_eigenvalue(mq.quad)
    scale = float(np.max(np.abs(mq.quad))) if mq.quad.size else 0.0
    if rho <= 1e-300 or scale <= 1e-300:
        # quad is numerically zero: the quadratic term vanishes and the
        # stationary direction is the linear term alone.
        if float(np.linalg.norm(mq.linear)) == 0.0:
            return np.ones(mq.num_elements, dtype=complex), 0.0
        return mq.linear.copy(), 0.0
    lam = 1.0 / rho
    n = mq.num_elements
    phi_star = np.linalg.solve(mq.quad + lam * np.eye(n, dtype=complex), mq.linear)
    return phi_star, lam


def mine_phi(mq):
    """WMSE-minimizing phases: stationary point projected to unit modulus."""
    phi_star, _ = mine_phi_star(mq)
    return np.exp(1j * np.angle(phi_star))


def mine_wmmse(realization, cfg=None, phi_init=None):
    """Alternate WMMSE beamforming with the closed-form phase update.

    Stops when the bpcu sum rate stalls or at the outer cap.  The rate trace
    is not guaranteed monotone (the update descends the WMSE surrogate, and
    the projection can cost rate), hence the companion wmse_trace.
    """
    if cfg is None:
        cfg = OptimizerCfg()
    scen = realization.cfg
    noise = scen.noise_w
    num_l = realization.num_ris_elements
    phi = np.ones(num_l, dtype=complex) if phi_init is None else np.asarray(phi_init, dtype=complex)
    channels = [effective_channel(realization, k, phi) for k in range(scen.num_ues)]
    bfs = init_beamformers(channels, scen.tx_power_w)
    trace = [sum_rate(channels, bfs, noise, bits=True)]
    wmse_trace = []
    for _ in range(cfg.max_outer):
        bfs, state = wmmse_step(channels, bfs, noise)
        mq = build_mse_quadratic(realization, bfs, state)
        phi = mine_phi(mq)
        wmse_trace.append(wmse_value(mq, phi))
        channels = [effective_channel(realization, k, phi) for k in range(scen.num_ues)]
        trace.append(sum_rate(channels, bfs, noise, bits=True))
        if abs(trace[-1] - trace[-2]) < cfg.tol_bpcu:
            break
    return OptimizerResult(
        bfs, phi, tuple(trace), len(trace) - 1, 0, tuple(wmse_trace)
    )
