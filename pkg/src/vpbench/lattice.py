"""
Closest point search in the Gaussian-integer lattice generated by a complex
K x K matrix (the sphere encoder of vector perturbation precoding).

The complex problem ``min_q ||G (a + q)||^2, q in Z[j]^K`` is solved as a
2K-dimensional real lattice problem with interleaved (Re, Im) coordinates by
Schnorr-Euchner depth-first enumeration with radius shrinking, after a
sorted QR factorization of the real generator. The search is exact.
"""

import itertools
from dataclasses import dataclass

import numba
import numpy as np

from .errors import BoxTooSmall, SingularGenerator
from .linalg import as_matrix, real_embedding

__all__ = ['PerturbationResult', 'LatticeSearcher', 'closest_point',
           'brute_force_closest', 'modulo_cube', 'in_cube',
           'complex_to_real', 'real_to_complex']

# Relative slack for pruning and for detecting equal-cost lattice points.
_TIE_RTOL = 1e-12
_SINGULAR_DIAG = 1e-12


@dataclass(frozen=True)
class PerturbationResult:
    """Optimal perturbation ``p`` with its cost ``||G (a + p)||^2``."""
    p: np.ndarray
    cost: float
    nodes_visited: int


def round_half_up(x):
    """Nearest integer, ties (x.5) rounded towards +inf."""
    return np.floor(np.asarray(x) + 0.5)


def modulo_cube(x) -> np.ndarray:
    """
    Reduce complex values into CUBE = [-0.5, 0.5) + j[-0.5, 0.5).

    The nearest Gaussian integer is subtracted, independently on the real
    and imaginary parts, with ties at x.5 rounded up (so 0.5 maps to -0.5).
    """
    x = np.asarray(x, dtype=np.complex128)
    re = x.real - round_half_up(x.real)
    im = x.imag - round_half_up(x.imag)
    return re + 1j * im


def in_cube(a) -> bool:
    a = np.asarray(a, dtype=np.complex128)
    return bool(np.all((a.real >= -0.5) & (a.real < 0.5)
                       & (a.imag >= -0.5) & (a.imag < 0.5)))


def complex_to_real(v) -> np.ndarray:
    """Interleave ``(Re v_1, Im v_1, Re v_2, ...)`` along the last axis."""
    v = np.asarray(v, dtype=np.complex128)
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1],))
    out[..., 0::2] = v.real
    out[..., 1::2] = v.imag
    return out


def real_to_complex(z) -> np.ndarray:
    z = np.asarray(z)
    return z[..., 0::2] + 1j * z[..., 1::2]


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxx Schnorr-Euchner kernel xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@numba.njit(cache=True)
def _lex_less(u, v, inv):
    # compare in original coordinate order: original i lives at inv[i]
    for i in range(inv.size):
        a, b = u[inv[i]], v[inv[i]]
        if a < b:
            return True
        if a > b:
            return False
    return False


@numba.njit(cache=True)
def _se_search(r, c, inv, z_out):
    """
    Minimize ``||R (z - c)||^2`` over integer z, R upper triangular.

    Writes the minimizer into `z_out` and returns ``(cost, nodes)``. `inv`
    maps original coordinates to search coordinates for tie-breaking.
    """
    n = r.shape[0]
    # Initial radius: cost of the rounding point.
    radius = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(i, n):
            acc += r[i, j] * (np.floor(c[j] + 0.5) - c[j])
        radius += acc * acc
    radius = radius * (1.0 + 4.0 * _TIE_RTOL) + 1e-300

    u = np.zeros(n)
    e = np.zeros(n)
    step = np.zeros(n)
    dist = np.zeros(n + 1)
    best_cost = np.inf
    found = False
    nodes = 0

    k = n - 1
    e[k] = c[k]
    u[k] = np.floor(e[k] + 0.5)
    step[k] = 1.0 if e[k] - u[k] >= 0.0 else -1.0
    while True:
        y = r[k, k] * (u[k] - e[k])
        newdist = dist[k + 1] + y * y
        nodes += 1
        bound = radius if not found else best_cost
        if newdist <= bound * (1.0 + _TIE_RTOL):
            if k > 0:
                dist[k] = newdist
                k -= 1
                acc = 0.0
                for j in range(k + 1, n):
                    acc += r[k, j] * (u[j] - c[j])
                e[k] = c[k] - acc / r[k, k]
                u[k] = np.floor(e[k] + 0.5)
                step[k] = 1.0 if e[k] - u[k] >= 0.0 else -1.0
                continue
            # Leaf: accept strictly better points, or equal-cost points that
            # are lexicographically smaller.
            if (not found) or newdist < best_cost * (1.0 - _TIE_RTOL):
                accept = True
            else:
                accept = _lex_less(u, z_out, inv)
            if accept:
                for i in range(n):
                    z_out[i] = u[i]
                if (not found) or newdist < best_cost:
                    best_cost = newdist
                found = True
            u[0] += step[0]
            step[0] = -step[0] - (1.0 if step[0] > 0 else -1.0)
        else:
            if k == n - 1:
                break
            k += 1
            u[k] += step[k]
            step[k] = -step[k] - (1.0 if step[k] > 0 else -1.0)
    return best_cost, nodes


@numba.njit(cache=True)
def _se_batch(r, targets, inv, z_out, costs, nodes):
    for i in range(targets.shape[0]):
        costs[i], nodes[i] = _se_search(r, targets[i], inv, z_out[i])


def sorted_qr(b: np.ndarray):
    """
    QR factorization with minimum-norm column pivoting.

    Returns ``(r, perm)`` with ``b[:, perm] = q @ r``. Picking the weakest
    remaining column first leaves the large diagonal entries of ``r`` at the
    end, where the depth-first search starts, which keeps branching low.
    """
    q = np.array(b, dtype=float)
    n = q.shape[1]
    r = np.zeros((n, n))
    perm = np.arange(n)
    for i in range(n):
        norms = np.sum(q[:, i:] ** 2, axis=0)
        j = i + int(np.argmin(norms))
        q[:, [i, j]] = q[:, [j, i]]
        r[:, [i, j]] = r[:, [j, i]]
        perm[[i, j]] = perm[[j, i]]
        r[i, i] = np.sqrt(norms[j - i])
        if r[i, i] == 0.0:
            break
        q[:, i] /= r[i, i]
        r[i, i + 1:] = q[:, i] @ q[:, i + 1:]
        q[:, i + 1:] -= np.outer(q[:, i], r[i, i + 1:])
    return r, perm


class LatticeSearcher:
    """
    Closest point searcher for a fixed complex K x K generator.

    Triangularizes the real embedding once so that many data vectors can be
    searched against the same lattice.

    Parameters
    ----------
    g : array_like, shape (K, K)
        Complex generator matrix.

    Raises
    ------
    SingularGenerator
        If the triangular factor has a diagonal entry below 1e-12.
    """

    def __init__(self, g):
        g = as_matrix(g)
        if g.shape[0] != g.shape[1]:
            raise ValueError(f'generator must be square, got {g.shape}')
        self.g = g
        self.k = g.shape[0]
        r, perm = sorted_qr(real_embedding(g))
        diag = np.abs(np.diag(r))
        if diag.min() < _SINGULAR_DIAG:
            raise SingularGenerator(
                f'triangular factor diagonal {diag.min():.3e} < 1e-12')
        self.r = np.ascontiguousarray(r)
        self.perm = perm
        self.inv = np.argsort(perm)

    def search_many(self, a):
        """
        Solve the search for every row of `a`.

        Returns
        -------
        p : np.ndarray, shape (M, K), complex
        cost : np.ndarray, shape (M,)
        nodes : np.ndarray, shape (M,)
        """
        a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
        targets = np.ascontiguousarray(-complex_to_real(a)[:, self.perm])
        m = targets.shape[0]
        zp = np.zeros((m, 2 * self.k))
        costs = np.empty(m)
        nodes = np.empty(m, dtype=np.int64)
        _se_batch(self.r, targets, self.inv, zp, costs, nodes)
        z = np.empty_like(zp)
        z[:, self.perm] = zp
        return real_to_complex(np.rint(z)), costs, nodes

    def search(self, a) -> PerturbationResult:
        p, _, nodes = self.search_many(np.reshape(a, (1, -1)))
        p = p[0]
        a = np.asarray(a, dtype=np.complex128).reshape(-1)
        cost = float(np.linalg.norm(self.g @ (a + p)) ** 2)
        return PerturbationResult(p=p, cost=cost, nodes_visited=int(nodes[0]))


def closest_point(f, a) -> PerturbationResult:
    """
    Optimal Gaussian-integer perturbation ``argmin_q ||F (a + q)||^2``.

    Ties between equal-cost points are broken towards the lexicographically
    smallest ``p`` (real part, then imaginary part, in component order).

    Examples
    --------
    >>> closest_point(np.eye(2), [0.2 + 0.1j, -0.3]).p
    array([0.+0.j, 0.+0.j])
    """
    return LatticeSearcher(f).search(a)


def brute_force_closest(f, a, box_radius: int) -> PerturbationResult:
    """
    Exhaustive minimum of ``||F (a + q)||^2`` over an integer box.

    Every real and imaginary component of ``q`` ranges over
    ``-box_radius..box_radius``. Test oracle only.

    Raises
    ------
    BoxTooSmall
        If a component of the minimizer lies on the box boundary.
    """
    f = as_matrix(f)
    k = f.shape[0]
    if k > 4:
        raise ValueError('brute force search is limited to K <= 4')
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    b = real_embedding(f)
    y = complex_to_real(a)
    span = np.arange(-box_radius, box_radius + 1, dtype=float)
    best_cost = np.inf
    best = None
    count = 0
    # Chunk over the first two real coordinates to bound memory.
    n_outer = min(2, 2 * k)
    inner = np.array(list(itertools.product(span, repeat=2 * k - n_outer)))
    if inner.size == 0:
        inner = np.zeros((1, 0))
    for head in itertools.product(span, repeat=n_outer):
        z = np.hstack([np.broadcast_to(head, (inner.shape[0], n_outer)), inner])
        costs = np.sum(((z + y) @ b.T) ** 2, axis=1)
        count += costs.size
        # product order is lexicographic: the first near-minimal row wins
        i = int(np.argmax(costs <= costs.min() * (1 + _TIE_RTOL)))
        if costs[i] < best_cost * (1 - _TIE_RTOL):
            best_cost, best = costs[i], z[i].copy()
    if box_radius > 0 and np.any(np.abs(best) == box_radius):
        raise BoxTooSmall(f'minimizer {best} touches the box boundary')
    p = real_to_complex(best)
    cost = float(np.linalg.norm(f @ (a + p)) ** 2)
    return PerturbationResult(p=p, cost=cost, nodes_visited=count)
