"""Dense complex matrix / 3-D tensor arithmetic.

All data lives in plain numpy ``complex128`` arrays: matrices are 2-D arrays,
tensors are 3-D arrays indexed ``(i, j, k)``.  "Mode m" always refers to the
m-th axis, 1-based, matching the usual tensor-algebra convention:

* ``mode_product(t, v, m)`` contracts axis m of ``t`` with the vector ``v``
  and the contracted axis collapses (dimension shrinkage).
* ``mode_multiply(t, b, m)`` contracts axis m of ``t`` with the FIRST axis of
  the matrix ``b``; ``b``'s second axis takes the contracted slot.
* ``hadamard2(a, b)`` builds the M x N x L tensor whose n-th slab is the outer
  product of ``a``'s n-th column with ``b``'s n-th row.

Everything here is a pure function of its inputs; arrays are never mutated.
"""

import numpy as np

from .errors import DimensionError, DomainError, ShapeError


def mode_product(t, v, mode):
    """Contract the ``mode``-th axis (1-based) of a 3-D tensor with a vector.

    For ``mode=2`` the result is ``out[i, k] = sum_j t[i, j, k] * v[j]``;
    modes 1 and 3 are analogous.  The contracted axis disappears, so the
    result of contracting a 3-D tensor is a matrix.

    Parameters
    ----------
    t : ndarray, shape (d1, d2, d3)
    v : ndarray, shape (t.shape[mode-1],)
    mode : int, one of 1, 2, 3

    Returns
    -------
    ndarray, 2-D
    """
    t = np.asarray(t)
    v = np.asarray(v)
    if t.ndim != 3:
        raise ShapeError(f"mode_product expects a 3-D tensor, got ndim={t.ndim}")
    if mode not in (1, 2, 3):
        raise DimensionError(f"mode must be 1, 2 or 3, got {mode!r}")
    if v.ndim != 1:
        raise DimensionError(f"mode_product expects a vector, got ndim={v.ndim}")
    if v.shape[0] != t.shape[mode - 1]:
        raise DimensionError(
            f"vector length {v.shape[0]} does not match tensor axis "
            f"{mode} of extent {t.shape[mode - 1]}"
        )
    return np.tensordot(t, v, axes=([mode - 1], [0]))


def mode_multiply(t, b, mode):
    """Contract the ``mode``-th axis of a 3-D tensor with the first axis of a
    matrix; the matrix's second axis replaces the contracted slot.

    For ``mode=1`` with ``b`` of shape (d1, r):
    ``out[a, j, k] = sum_i t[i, j, k] * b[i, a]``.
    """
    t = np.asarray(t)
    b = np.asarray(b)
    if t.ndim != 3:
        raise ShapeError(f"mode_multiply expects a 3-D tensor, got ndim={t.ndim}")
    if mode not in (1, 2, 3):
        raise DimensionError(f"mode must be 1, 2 or 3, got {mode!r}")
    if b.ndim != 2:
        raise DimensionError(f"mode_multiply expects a matrix, got ndim={b.ndim}")
    if b.shape[0] != t.shape[mode - 1]:
        raise DimensionError(
            f"matrix rows {b.shape[0]} do not match tensor axis "
            f"{mode} of extent {t.shape[mode - 1]}"
        )
    moved = np.moveaxis(t, mode - 1, -1)
    return np.moveaxis(moved @ b, -1, mode - 1)


def hadamard2(a, b):
    """Two-matrix Hadamard tensor product.

    Given ``a`` (M x N) and ``b`` (N x L), returns the M x N x L tensor whose
    n-th slab ``out[:, n, :]`` equals ``outer(a[:, n], b[n, :])``.  Contracting
    the result over axis 2 with a vector v recovers ``a @ diag(v) @ b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("hadamard2 expects two matrices")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"inner sizes differ: a has {a.shape[1]} columns, b has "
            f"{b.shape[0]} rows"
        )
    return a[:, :, None] * b[None, :, :]


def shrink(t, axis=None):
    """Remove a unit axis from a 3-D tensor, returning a matrix.

    With ``axis=None`` the tensor must have exactly one axis of extent 1;
    otherwise the requested 1-based ``axis`` is removed (and must be unit).
    Multiple unit axes without an explicit ``axis`` are ambiguous.
    """
    t = np.asarray(t)
    if t.ndim != 3:
        raise ShapeError(f"shrink expects a 3-D tensor, got ndim={t.ndim}")
    unit_axes = [ax for ax in range(3) if t.shape[ax] == 1]
    if axis is None:
        if not unit_axes:
            raise ShapeError(f"no unit axis to shrink in shape {t.shape}")
        if len(unit_axes) > 1:
            raise ShapeError(
                f"shape {t.shape} has several unit axes "
                f"{[ax + 1 for ax in unit_axes]}; pass axis= explicitly"
            )
        ax = unit_axes[0]
    else:
        if axis not in (1, 2, 3):
            raise DimensionError(f"axis must be 1, 2 or 3, got {axis!r}")
        if t.shape[axis - 1] != 1:
            raise ShapeError(
                f"axis {axis} of shape {t.shape} has extent "
                f"{t.shape[axis - 1]}, cannot shrink"
            )
        ax = axis - 1
    return np.squeeze(t, axis=ax)


def expand(m, axis):
    """Inverse of :func:`shrink`: insert a unit axis at 1-based position."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"expand expects a matrix, got ndim={m.ndim}")
    if axis not in (1, 2, 3):
        raise DimensionError(f"axis must be 1, 2 or 3, got {axis!r}")
    return np.expand_dims(m, axis=axis - 1)


def logdet_hermitian_psd(a):
    """Log-determinant of a Hermitian positive (semi)definite matrix.

    Intended for matrices of the form ``I + PSD`` where true singularity is
    impossible.  Uses a Cholesky factorization and falls back to an eigenvalue
    decomposition when Cholesky fails near the PSD boundary; eigenvalues are
    clamped at 1e-300 before the log so round-off cannot produce NaN.

    Raises
    ------
    DomainError
        If the input is non-Hermitian beyond 1e-10 (relative to its largest
        entry magnitude).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"logdet expects a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    asym = float(np.abs(a - a.conj().T).max(initial=0.0))
    if asym > 1e-10 * scale:
        raise DomainError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
    ah = 0.5 * (a + a.conj().T)
    try:
        chol = np.linalg.cholesky(ah)
        return float(2.0 * np.sum(np.log(np.real(np.diag(chol)))))
    except np.linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(ah)
        return float(np.sum(np.log(np.clip(eigs, 1e-300, None))))
