"""
Complex dense linear algebra used by the precoder, the rate bounds and the
user schedulers.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. A channel
matrix ``H`` has one row per user and one column per transmit antenna.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasis, RankDeficient

__all__ = ['DvqFactors', 'as_matrix', 'pseudoinverse', 'gram_det',
           'log_gram_det', 'dvq_decompose', 'ortho_component',
           'orthogonalize_rows', 'real_embedding']

# Singular values below RANK_RTOL * s_max count as zero.
RANK_RTOL = 1e-10
ZERO_NORM = 1e-12


def as_matrix(m) -> np.ndarray:
    """Return `m` as a finite 2-D complex128 array (row vectors promoted)."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f'expected a 2-D matrix, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('matrix entries must be finite')
    return arr


def _check_full_row_rank(m: np.ndarray) -> np.ndarray:
    k, n = m.shape
    if k > n:
        raise RankDeficient(f'{k}x{n} matrix cannot have full row rank')
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        raise RankDeficient(f'numerical rank below {k} (s_min/s_max = '
                            f'{s[-1] / s[0] if s[0] else 0.0:.3e})')
    return s


def pseudoinverse(m) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse of a full row rank matrix.

    Parameters
    ----------
    m : array_like, shape (K, N)
        Matrix with K <= N and full row rank.

    Returns
    -------
    np.ndarray, shape (N, K)
        ``M^+`` with ``M @ M^+ == I_K``.

    Raises
    ------
    RankDeficient
        If the numerical rank of `m` is below K.
    """
    m = as_matrix(m)
    _check_full_row_rank(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return (vh.conj().T / s) @ u.conj().T


def log_gram_det(h) -> float:
    """Natural log of ``det(H H^dagger)``; ``-inf`` if H is rank deficient."""
    h = as_matrix(h)
    k, n = h.shape
    if k > n:
        return -np.inf
    r = np.linalg.qr(h.conj().T, mode='r')
    diag = np.abs(np.diag(r))
    if diag.max() == 0.0 or diag.min() < RANK_RTOL * diag.max():
        return -np.inf
    return float(2.0 * np.sum(np.log(diag)))


def gram_det(h) -> float:
    """
    Gram determinant ``det(H H^dagger)`` of the rows of `h`.

    Computed from the triangular factor of ``H^dagger`` as the product of
    squared diagonal magnitudes. For more than four rows the product is
    accumulated in the log domain.
    """
    h = as_matrix(h)
    k, n = h.shape
    if k > n:
        return 0.0
    if k > 4:
        return float(np.exp(log_gram_det(h)))
    r = np.linalg.qr(h.conj().T, mode='r')
    diag = np.abs(np.diag(r))
    if diag.max() == 0.0 or diag.min() < RANK_RTOL * diag.max():
        return 0.0
    return float(np.prod(diag ** 2))


@dataclass(frozen=True)
class DvqFactors:
    """
    Factors of ``H = diag(d) @ v @ q``.

    Attributes
    ----------
    d : np.ndarray, shape (K,)
        Positive real per-user gains.
    v : np.ndarray, shape (K, K)
        Lower triangular with unit diagonal.
    q : np.ndarray, shape (K, N)
        Orthonormal rows.
    """
    d: np.ndarray
    v: np.ndarray
    q: np.ndarray

    @property
    def k(self) -> int:
        return self.d.size

    def reconstruct(self) -> np.ndarray:
        return (self.d[:, np.newaxis] * self.v) @ self.q

    def v_inv(self) -> np.ndarray:
        """Inverse of the unit lower triangular factor."""
        from scipy.linalg import solve_triangular
        return solve_triangular(self.v, np.eye(self.k, dtype=complex),
                                lower=True, unit_diagonal=True)


def dvq_decompose(h) -> DvqFactors:
    """
    Factor a full row rank channel as ``H = D V Q``.

    The factorization comes from a single QR decomposition of ``H^dagger``,
    which gives ``H = L Q`` with ``L`` lower triangular. Row phases are moved
    into ``Q`` so that ``d`` is real and positive, then ``V = D^{-1} L``.

    Raises
    ------
    RankDeficient
        If `h` does not have full row rank.
    """
    h = as_matrix(h)
    _check_full_row_rank(h)
    q1, r1 = np.linalg.qr(h.conj().T)
    lower = r1.conj().T
    q = q1.conj().T
    diag = np.diag(lower)
    phase = diag / np.abs(diag)
    # H = (L diag(phase)^*) (diag(phase) Q)
    lower = lower * phase.conj()[np.newaxis, :]
    q = phase[:, np.newaxis] * q
    d = np.abs(diag)
    v = lower / d[:, np.newaxis]
    v[np.diag_indices_from(v)] = 1.0
    v = np.tril(v)
    return DvqFactors(d=d, v=v, q=q)


def ortho_component(h_u, basis) -> np.ndarray:
    """
    Component of the row vector `h_u` orthogonal to the span of `basis`.

    Computes ``h_u (I - sum_s g_s^dagger g_s / ||g_s||^2)`` for mutually
    orthogonal row vectors ``g_s``. The squared norm of the result equals
    ``det(W(S + u)) / det(W(S))``.

    Raises
    ------
    DegenerateBasis
        If a basis vector has norm below 1e-12.
    ValueError
        If the basis vectors are not mutually orthogonal.
    """
    g = np.array(h_u, dtype=np.complex128).reshape(-1)
    basis = [np.asarray(b, dtype=np.complex128).reshape(-1) for b in basis]
    norms = [np.linalg.norm(b) for b in basis]
    for nb in norms:
        if nb < ZERO_NORM:
            raise DegenerateBasis(f'basis vector norm {nb:.3e} is too small')
    for i in range(len(basis)):
        for j in range(i):
            c = abs(np.vdot(basis[j], basis[i])) / (norms[i] * norms[j])
            if c > 1e-8:
                raise ValueError(f'basis vectors {j} and {i} are not '
                                 f'orthogonal (|cos| = {c:.3e})')
    for b, nb in zip(basis, norms):
        g = g - (np.vdot(b, g) / nb ** 2) * b
    return g


def orthogonalize_rows(h) -> list:
    """Sequential Gram-Schmidt on the rows of `h` (in row order)."""
    h = as_matrix(h)
    out = []
    for row in h:
        out.append(ortho_component(row, out))
    return out


def real_embedding(g) -> np.ndarray:
    """
    Real 2K x 2K representation of a complex K x K matrix.

    Coordinates are interleaved as ``(Re z_1, Im z_1, Re z_2, ...)``, so the
    real lattice point ordering matches the lexicographic (real, imag)
    ordering of the complex perturbation vector.
    """
    g = as_matrix(g)
    k, n = g.shape
    out = np.empty((2 * k, 2 * n))
    out[0::2, 0::2] = g.real
    out[0::2, 1::2] = -g.imag
    out[1::2, 0::2] = g.imag
    out[1::2, 1::2] = g.real
    return out
