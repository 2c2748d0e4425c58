"""Projected-gradient sum-rate maximization over the RIS phases (MaxR).

The sum rate as a function of the concatenated phase vector psi = [1; phi]
decomposes per UE into sum_n log(1 + q_n^{n,n}) (see rate_engine).  This
module differentiates that decomposition in closed form:

* level-1 gradients combine the linear term Hbar_i R^{-1} Hbar_j^H psi^* with
  a correction for the psi-dependence of the interference covariance R;
* higher levels follow the quotient-rule recursion on the q tables;
* the ascent step projects psi + beta * conj(grad) back onto the unit-modulus
  torus, with beta chosen by a bisection line search that only ever accepts
  rate-improving candidates (so the outer trace is non-decreasing).

Gradients are Wirtinger-style: d/d psi with psi^* held constant.  For a real
objective the full real gradient is [2 Re(g); -2 Im(g)].
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .rate_engine import concat_phase, effective_tensor
from .tensor_ops import mode_product
from .wmmse import (
    LN2,
    effective_noise_cov_direct,
    init_beamformers,
    sum_rate,
    wmmse_step,
)


@dataclass(frozen=True)
class LineSearchCfg:
    """Bisection window and iteration count for the learning rate."""

    beta_max: float = 100.0
    beta_min: float = 0.0
    iterations: int = 30

    def __post_init__(self):
        if not (self.beta_max > self.beta_min >= 0.0):
            raise ConfigError("line search requires beta_max > beta_min >= 0")
        if self.iterations < 1:
            raise ConfigError("line search needs at least one iteration")


@dataclass(frozen=True)
class OptimizerCfg:
    """Outer-loop settings shared by the alternating optimizers."""

    tol_bpcu: float = 1e-6
    max_outer: int = 300
    inner_wmmse: int = 1
    line_search: LineSearchCfg = field(default_factory=LineSearchCfg)


@dataclass(frozen=True, eq=False)
class OptimizerResult:
    """Output of an alternating run: final beamformers, phases, traces."""

    beamformers: object
    phi: np.ndarray
    rate_trace: tuple  # bpcu, entry 0 is the rate at initialization
    outer_iters: int
    stagnations: int = 0
    wmse_trace: tuple = None

    @property
    def final_rate(self):
        return self.rate_trace[-1]


def grad_noise_cov(eff, psi, ell):
    """d R_cov / d psi_ell (psi^* fixed): sum_{i != k} G_i^H D_{i,ell},
    with G_i = B_i^H H_k(psi) and D_{i,ell} the ell-th slab of cross[i]."""
    n = eff.self_tensor.shape[2]
    out = np.zeros((n, n), dtype=complex)
    for i, t in enumerate(eff.cross):
        if i == eff.ue_index:
            continue
        g = np.einsum("aln,l->an", t, psi)
        out += g.conj().T @ t[:, ell, :]
    return out


def q_grad_first_tables(psi, eff, r_cov):
    """Level-1 q table and its psi-gradients.

    Returns (q1, grad1) with q1[i, j] = v_i^H R^{-1} v_j (v_n = Hbar_n^H psi^*)
    and grad1[i, j, :] the length-(L+1) gradient: the direct term
    Hbar_i (R^{-1} v_j) minus the covariance correction
    sum_{i' != k} (G_i' w_i)^H D_{i',l} w_j with w = R^{-1} v.
    """
    k = eff.ue_index
    self_t = eff.self_tensor
    rows = np.einsum("l,nlb->nb", psi, self_t)  # row n = psi^T Hbar_n
    v = rows.conj().T
    w = np.linalg.solve(np.asarray(r_cov, dtype=complex), v)
    q1 = v.conj().T @ w
    grad1 = np.einsum("ilb,bj->ijl", self_t, w)
    for i, t in enumerate(eff.cross):
        if i == k:
            continue
        g = np.einsum("aln,l->an", t, psi)
        gw = g @ w  # column j = G_i' w_j
        s = np.einsum("aln,nj->ajl", t, w)  # s[a, j, l] = (D_l w_j)(a)
        grad1 -= np.einsum("ai,ajl->ijl", gw.conj(), s)
    return q1, grad1


def grad_q_first(i, j, psi, eff, r_cov):
    """Gradient of q_1^{i,j} w.r.t. psi (1-based stream indices)."""
    _, grad1 = q_grad_first_tables(psi, eff, r_cov)
    return grad1[i - 1, j - 1, :]


def grad_q_recursive(q, grad, pivot):
    """One level of the joint q/gradient recursion, eliminating ``pivot``
    (0-based).  Entries with i, j > pivot of the returned tables are the
    level-(pivot+2) values; lower-indexed entries are stale and unused.
    """
    d = 1.0 + float(q[pivot, pivot].real)
    if d < 0.5:
        raise NumericalError(
            f"gradient recursion denominator collapsed to {d:.3e} at pivot {pivot}"
        )
    col = q[:, pivot]
    row = q[pivot, :]
    gp = grad[pivot, :, :]
    gc = grad[:, pivot, :]
    gd = grad[pivot, pivot, :]
    q_next = q - np.outer(col, row) / d
    grad_next = (
        grad
        - (col / d)[:, None, None] * gp[None, :, :]
        - (row / d)[None, :, None] * gc[:, None, :]
        + (np.outer(col, row) / (d * d))[:, :, None] * gd[None, None, :]
    )
    return q_next, grad_next


def rate_grad_from_tables(q, grad):
    """Fold level tables into (rate in nats, Wirtinger gradient over psi)."""
    n = q.shape[0]
    rate = 0.0
    g_out = np.zeros(grad.shape[2], dtype=complex)
    for t in range(n):
        d = 1.0 + float(q[t, t].real)
        if d < 0.5:
            raise NumericalError(
                f"rate recursion denominator collapsed to {d:.3e} at level {t + 1}"
            )
        rate += float(np.log(d))
        g_out += grad[t, t, :] / d
        if t < n - 1:
            q, grad = grad_q_recursive(q, grad, t)
    return rate, g_out


def ue_rate_and_gradient(psi, concat_k, bfs, k, noise_var):
    """Rate (nats) of UE k at psi plus its gradient, from scratch."""
    eff = effective_tensor(concat_k, bfs, k)
    heff = mode_product(concat_k, psi, 2)
    r_cov = effective_noise_cov_direct(heff, bfs, k, noise_var)
    q1, grad1 = q_grad_first_tables(psi, eff, r_cov)
    return rate_grad_from_tables(q1, grad1)


def sum_rate_and_gradient(psi, concats, bfs, noise_var):
    """Total sum rate (nats) and its psi-gradient across all UEs."""
    rate = 0.0
    grad = np.zeros(len(psi), dtype=complex)
    for k, concat_k in enumerate(concats):
        r_k, g_k = ue_rate_and_gradient(psi, concat_k, bfs, k, noise_var)
        rate += r_k
        grad += g_k
    return rate, grad


def fast_sum_rate(psi, concat_stack, b_stack, c_gram, noise_var):
    """Sum rate (nats) at psi for fixed beamformers via the two-log-det form
    log det(s2 I + H^H C H) - log det(s2 I + H^H C H - X^H X), X = B_k^H H.

    ``concat_stack`` is (K, M, L+1, N), ``b_stack`` (K, M, N) and ``c_gram``
    the beamformer Gram sum_i B_i B_i^H (M x M).  Used by the line search; the
    acceptance equivalences are checked against the independent routes.
    """
    heff = np.einsum("kmln,l->kmn", concat_stack, psi)
    s_full = np.einsum("kmq,mn,knp->kqp", heff.conj(), c_gram, heff)
    n = heff.shape[2]
    s_full = s_full + noise_var * np.eye(n, dtype=complex)[None, :, :]
    x = np.einsum("kma,kmq->kaq", b_stack.conj(), heff)
    s_int = s_full - np.einsum("kaq,kap->kqp", x.conj(), x)
    _, ld_full = np.linalg.slogdet(s_full)
    _, ld_int = np.linalg.slogdet(s_int)
    return float(np.sum(ld_full - ld_int))


def maxr_step(psi, concats, bfs, noise_var, ls=None):
    """One projected-gradient step on the unit-modulus torus.

    Projects psi + beta * conj(grad) entrywise to unit modulus; beta comes
    from a bisection that raises the lower edge whenever the candidate
    improves the current rate and lowers the upper edge otherwise.  The last
    improving candidate is accepted; if none improved the step is rejected
    and the input returned with the stagnation flag set.

    Returns (psi_new, rate_nats_at_psi_new, stagnated, beta_used).
    """
    if ls is None:
        ls = LineSearchCfg()
    rate0, grad = sum_rate_and_gradient(psi, concats, bfs, noise_var)
    if float(np.linalg.norm(grad)) < 1e-14:
        return psi, rate0, True, 0.0
    direction = grad.conj()
    concat_stack = np.stack(concats)
    b_stack = np.stack(bfs.per_ue)
    c_gram = sum(b @ b.conj().T for b in bfs.per_ue)
    lo, hi = ls.beta_min, ls.beta_max
    best_psi = None
    best_rate = rate0
    best_beta = 0.0
    for _ in range(ls.iterations):
        beta = 0.5 * (lo + hi)
        cand = np.exp(1j * np.angle(psi + beta * direction))
        rate_c = fast_sum_rate(cand, concat_stack, b_stack, c_gram, noise_var)
        if rate_c > rate0:
            lo = beta
            best_psi, best_rate, best_beta = cand, rate_c, beta
        else:
            hi = beta
    if best_psi is None:
        return psi, rate0, True, 0.0
    return best_psi, best_rate, False, best_beta


def maxr_wmmse(realization, cfg=None, phi_init=None):
    """Alternate WMMSE beamforming and MaxR phase steps until the bpcu rate
    stalls or the outer-iteration cap is reached."""
    if cfg is None:
        cfg = OptimizerCfg()
    scen = realization.cfg
    noise = scen.noise_w
    e_tx = scen.tx_power_w
    num_l = realization.num_ris_elements
    phi = np.ones(num_l, dtype=complex) if phi_init is None else np.asarray(phi_init, dtype=complex)
    psi = concat_phase(phi)
    concats = [realization.concatenated(k) for k in range(scen.num_ues)]
    channels = [mode_product(c, psi, 2) for c in concats]
    bfs = init_beamformers(channels, e_tx)
    trace = [sum_rate(channels, bfs, noise, bits=True)]
    stagnations = 0
    for _ in range(cfg.max_outer):
        for _ in range(cfg.inner_wmmse):
            bfs, _ = wmmse_step(channels, bfs, noise)
        psi, rate_nats, stagnated, _ = maxr_step(
            psi, concats, bfs, noise, cfg.line_search
        )
        if stagnated:
            stagnations += 1
        channels = [mode_product(c, psi, 2) for c in concats]
        trace.append(rate_nats / LN2)
        if abs(trace[-1] - trace[-2]) < cfg.tol_bpcu:
            break
    phi_out = psi[1:] / psi[0]
    return OptimizerResult(bfs, phi_out, tuple(trace), len(trace) - 1, stagnations)
