"""Semi-quadratic sum-rate engine over the concatenated phase vector.

Folding the direct channel into slab 0 of the per-UE channel tensor makes the
overall channel linear in psi = [1; phi].  Applying the matrix determinant
lemma recursively, the per-UE rate log det(I + B^H H R^{-1} H^H B) factors
into a product of scalars 1 + q_n, where q_n^{i,j} is the quadratic form
psi^T Hbar_i P_n Hbar_j^H psi^* and the P_n are rank-one downdates starting
from R^{-1}.  These q values are what the phase optimizers differentiate.

Contents:

* ``concat_phase`` and the per-UE :class:`EffectiveTensor` (channel tensors
  pre-multiplied by each beamformer);
* the interference-plus-noise covariance, in its direct form and in the
  stacked-block structured form (identity used by the gradient derivation);
* the explicit projection chain, direct q values, and the level-by-level
  q-table recursion;
* the semi-quadratic per-UE rate, and the standalone determinant-product
  identity (pure transposes) the whole construction rests on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalError, NumericalError
from .tensor_ops import mode_multiply, mode_product
from .wmmse import LN2, effective_noise_cov_direct


def concat_phase(phi):
    """psi = [1; phi]; checks every phi entry is unit-modulus within 1e-12."""
    phi = np.asarray(phi, dtype=complex)
    if phi.ndim != 1:
        raise DomainError("phi must be a vector of phase factors")
    if phi.size and np.abs(np.abs(phi) - 1.0).max() > 1e-12:
        raise DomainError("phi entries must have unit modulus")
    return np.concatenate([np.ones(1, dtype=complex), phi])


@dataclass(frozen=True, eq=False)
class EffectiveTensor:
    """Per-UE channel tensors pre-multiplied by every beamformer.

    ``cross[i]`` holds the (N_i, L+1, N) tensor obtained by contracting UE
    k's concatenated channel tensor along the BS axis with conj(B_i), so that
    contracting ``cross[i]`` over axis 2 with psi yields B_i^H H_k(psi).
    ``cross[ue_index]`` is the UE's own tensor; its n-th row slab Hbar_n
    (L+1 x N) generates the q quadratic forms.
    """

    ue_index: int
    cross: tuple

    @property
    def self_tensor(self):
        return self.cross[self.ue_index]

    @property
    def num_streams(self):
        return self.self_tensor.shape[0]

    def row_slab(self, n):
        """Hbar_{k,n} = self_tensor[n] (L+1 x N), 0-based n."""
        return self.self_tensor[n]

    def col_slab(self, i, n):
        """Htilde_{k,i,n} = cross[i][:, :, n] (N_i x L+1), 0-based."""
        return self.cross[i][:, :, n]


def effective_tensor(concat_k, bfs, k):
    """Build the :class:`EffectiveTensor` for UE k from its concatenated
    channel tensor (M x L+1 x N) and the full beamformer set."""
    cross = tuple(mode_multiply(concat_k, b.conj(), 1) for b in bfs.per_ue)
    return EffectiveTensor(k, cross)


def effective_noise_cov(h_k, bfs, k, noise_var):
    """Direct-form covariance sum_{i != k} H_k^H B_i B_i^H H_k + s2 I."""
    return effective_noise_cov_direct(h_k, bfs, k, noise_var)


def effective_noise_cov_structured(eff, psi, noise_var):
    """The same covariance via the stacked-block structured form:
    s2 I + (I kron psi^H) [sum_{i != k} T_i^H T_i] (I kron psi),
    with T_i the row-concatenation of the column slabs of cross[i]."""
    n = eff.self_tensor.shape[2]
    lp1 = eff.self_tensor.shape[1]
    g = np.zeros((n * lp1, n * lp1), dtype=complex)
    for i, t in enumerate(eff.cross):
        if i == eff.ue_index:
            continue
        ti = np.concatenate([t[:, :, b] for b in range(n)], axis=1)
        g += ti.conj().T @ ti
    sel = np.kron(np.eye(n, dtype=complex), psi.reshape(-1, 1))
    r = noise_var * np.eye(n, dtype=complex) + sel.conj().T @ g @ sel
    return 0.5 * (r + r.conj().T)


def proj_chain(psi, eff, r_inv):
    """Projection chain P_1 = R^{-1}, P_{n+1} = P_n - rank-one downdate.

    The downdate vector at level n is v_n = Hbar_n^H psi^*; the denominator
    1 + v_n^H P_n v_n equals 1 + q_n^{n,n} and must stay near or above 1.
    """
    chain = [np.asarray(r_inv, dtype=complex)]
    p = chain[0]
    for n in range(eff.num_streams - 1):
        v = eff.row_slab(n).conj().T @ psi.conj()
        pv = p @ v
        denom = 1.0 + float((v.conj() @ pv).real)
        if denom < 0.5:
            raise NumericalError(
                f"projection-chain denominator collapsed to {denom:.3e} at level {n + 1}"
            )
        p = p - np.outer(pv, pv.conj()) / denom
        p = 0.5 * (p + p.conj().T)
        chain.append(p)
    return chain


def q_value(n, i, j, psi, eff, chain):
    """Direct evaluation q_n^{i,j} = psi^T Hbar_i P_n Hbar_j^H psi^*.

    All of n, i, j are 1-based to mirror the recursion's bookkeeping.
    """
    ns = eff.num_streams
    if not (1 <= n <= len(chain)) or not (1 <= i <= ns) or not (1 <= j <= ns):
        raise InternalError(f"q index out of range: n={n}, i={i}, j={j}")
    row_i = psi @ eff.row_slab(i - 1)
    row_j = psi @ eff.row_slab(j - 1)
    return complex(row_i @ chain[n - 1] @ row_j.conj())


def q_table_first(psi, eff, r_inv):
    """Level-1 table: Q1[i, j] = psi^T Hbar_i R^{-1} Hbar_j^H psi^*."""
    rows = np.einsum("l,nlb->nb", psi, eff.self_tensor)  # row n = psi^T Hbar_n
    return rows @ np.asarray(r_inv) @ rows.conj().T


def q_table_downdate(q, pivot):
    """One level of the q recursion: eliminate stream ``pivot`` (0-based).

    q_next[i, j] = q[i, j] - q[i, p] q[p, j] / (1 + q[p, p]).  Only entries
    with i, j > pivot remain meaningful afterwards.
    """
    d = 1.0 + float(q[pivot, pivot].real)
    if d < 0.5:
        raise NumericalError(
            f"q recursion denominator collapsed to {d:.3e} at pivot {pivot}"
        )
    return q - np.outer(q[:, pivot], q[pivot, :]) / d


def rate_semiquadratic(psi, eff, r_inv, bits=True):
    """Per-UE rate as sum_n log(1 + q_n^{n,n}) via the q-table recursion."""
    q = q_table_first(psi, eff, r_inv)
    total = 0.0
    ns = eff.num_streams
    for t in range(ns):
        d = 1.0 + float(q[t, t].real)
        if d < 0.5:
            raise NumericalError(
                f"rate recursion denominator collapsed to {d:.3e} at level {t + 1}"
            )
        total += np.log(d)
        if t < ns - 1:
            q = q_table_downdate(q, t)
    return total / LN2 if bits else total


def ue_rate_semiquadratic(psi, concat_k, bfs, k, noise_var, bits=True):
    """Convenience wrapper: build the effective tensor and covariance for UE k
    at this psi and evaluate the semi-quadratic rate."""
    eff = effective_tensor(concat_k, bfs, k)
    heff = mode_product(concat_k, psi, 2)
    r = effective_noise_cov_direct(heff, bfs, k, noise_var)
    return rate_semiquadratic(psi, eff, np.linalg.inv(r), bits=bits)


def det_product_identity(a, b):
    """det(I + a^T b a) as a product of recursive rank-one quadratic forms.

    Pure transposes throughout (no conjugation): with a_m the m-th column of
    ``a`` and P_1 = b, each step multiplies by s_m = 1 + a_m^T P_m a_m and
    downdates P_{m+1} = P_m - (P_m a_m)(a_m^T P_m) / s_m.  Returns the
    (complex) product, equal to det(I_M + a^T b a).
    """
    a = np.asarray(a)
    p = np.asarray(b, dtype=complex)
    out = complex(1.0)
    for col in range(a.shape[1]):
        am = a[:, col]
        pa = p @ am
        s = 1.0 + am @ pa
        out *= s
        p = p - np.outer(pa, am @ p) / s
    return out
