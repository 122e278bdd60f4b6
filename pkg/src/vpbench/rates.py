"""
Sum-rate expressions for vector perturbation with uniform inputs.

All rates are in bits (per channel use, i.e. bps/Hz). ``ese`` is the
expected sphere-encoded power and ``p_snr`` the linear transmit SNR P.

The modulo penalty ``omega(gamma)`` with ``gamma = ese / (2 P)`` is the gap
between the entropy of a Gaussian with variance gamma and the entropy of
the same Gaussian folded into [-1/2, 1/2).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import erfc, gammaln

from .errors import DomainError, RankDeficient
from .linalg import as_matrix, log_gram_det

__all__ = ['RateReport', 'omega', 'modulo_gaussian_pdf',
           'modulo_gaussian_entropy', 'sum_rate_exact', 'sum_rate_lower',
           'sum_rate_upper', 'sum_rate_ra', 'mi_exact', 'mi_piecewise',
           'mi_awgn', 'r_vp_pw', 'rate_report', 'upper_bound_penalty']

LOG2E = 1.0 / np.log(2.0)
# Above this gamma the folded density is flat to double precision.
GAMMA_FLAT = 30.0


def _n_replicas(gamma: float) -> int:
    return int(np.ceil(6.0 * np.sqrt(gamma))) + 2


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError(f'{name} must be positive and finite, '
                              f'got {value!r}')


def modulo_gaussian_pdf(xi, gamma: float) -> np.ndarray:
    """
    Density of a zero-mean Gaussian with variance `gamma` folded into
    [-1/2, 1/2]; zero outside that interval.
    """
    _check_positive(gamma=gamma)
    xi = np.asarray(xi, dtype=float)
    s = np.arange(-_n_replicas(gamma), _n_replicas(gamma) + 1)
    dens = np.exp(-(xi[..., np.newaxis] - s) ** 2 / (2.0 * gamma)).sum(-1)
    dens = dens / np.sqrt(2.0 * np.pi * gamma)
    return np.where(np.abs(xi) <= 0.5, dens, 0.0)


def _replica_ratio(xi, gamma, s):
    """``sum_{t != 0} exp(-t (t - 2 xi) / (2 gamma))`` for |xi| <= 1/2."""
    return np.exp(-s * (s - 2.0 * xi) / (2.0 * gamma)).sum()


def _second_moment_deficit(gamma: float) -> float:
    """``1 - E[xi^2] / gamma`` for the folded Gaussian, without cancellation."""
    sigma = np.sqrt(gamma)
    b0 = 0.5 / sigma
    phi = lambda t: np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
    deficit = erfc(b0 / np.sqrt(2.0)) + 2.0 * b0 * phi(b0)
    for s in range(1, _n_replicas(gamma) + 1):
        lo, hi = (-0.5 - s) / sigma, (0.5 - s) / sigma
        # Gaussian mass on [lo, hi] (both negative): difference of upper tails
        mass = 0.5 * (erfc(-hi / np.sqrt(2.0)) - erfc(-lo / np.sqrt(2.0)))
        first = phi(lo) - phi(hi)
        second = mass - (hi * phi(hi) - lo * phi(lo))
        r = s / sigma
        # replicas s and -s contribute equally
        deficit -= 2.0 * (second + 2.0 * r * first + r * r * mass)
    return deficit


@lru_cache(maxsize=65536)
def _omega_nats(gamma: float) -> float:
    if gamma > GAMMA_FLAT:
        return 0.5 * np.log(2.0 * np.pi * np.e * gamma)
    s = np.arange(1, _n_replicas(gamma) + 1, dtype=float)
    s = np.concatenate([-s[::-1], s])
    norm = 1.0 / np.sqrt(2.0 * np.pi * gamma)

    def integrand(xi):
        ratio = _replica_ratio(xi, gamma, s)
        return (norm * np.exp(-xi * xi / (2.0 * gamma)) * (1.0 + ratio)
                * np.log1p(ratio))

    # The log term lives in a boundary layer of width ~gamma at xi = 1/2.
    points = sorted({0.5 - c * gamma for c in (1, 4, 16, 64)
                     if 0.0 < 0.5 - c * gamma < 0.5}
                    | {c * np.sqrt(gamma) for c in (1, 3, 6)
                       if c * np.sqrt(gamma) < 0.5})
    log_term, _ = integrate.quad(integrand, 0.0, 0.5, points=points or None,
                                 epsabs=0.0, epsrel=1e-12, limit=400)
    return 0.5 * _second_moment_deficit(gamma) + 2.0 * log_term


def omega(gamma: float) -> float:
    """
    Modulo penalty in bits: ``0.5 log2(2 pi e gamma) - H(xi)``.

    Nonnegative and increasing in gamma; tends to 0 as gamma -> 0 and to
    ``0.5 log2(2 pi e gamma)`` as gamma grows.

    Raises
    ------
    DomainError
        If gamma <= 0.
    """
    _check_positive(gamma=gamma)
    return max(0.0, _omega_nats(float(gamma)) * LOG2E)


def modulo_gaussian_entropy(gamma: float) -> float:
    """Differential entropy (bits) of the folded Gaussian; at most 0."""
    _check_positive(gamma=gamma)
    return 0.5 * np.log2(2.0 * np.pi * np.e * gamma) - omega(gamma)


def sum_rate_lower(ese: float, p_snr: float, k: int) -> float:
    """``K log2(P/K) - K log2(pi e ese / K)``. May be negative."""
    _check_positive(ese=ese, p_snr=p_snr, k=k)
    return k * np.log2(p_snr / k) - k * np.log2(np.pi * np.e * ese / k)


def sum_rate_exact(ese: float, p_snr: float, k: int) -> float:
    """Sum rate of K users with channel inversion and uniform inputs."""
    _check_positive(ese=ese, p_snr=p_snr, k=k)
    return (sum_rate_lower(ese, p_snr, k)
            + 2.0 * k * omega(ese / (2.0 * p_snr)))


def upper_bound_penalty(k: int) -> float:
    """``K log2(Gamma(K+1)^(1/K) e / (K+1))``."""
    return (gammaln(k + 1) + k - k * np.log(k + 1)) * LOG2E


def sum_rate_upper(h, p_snr: float, k: int = None) -> float:
    """
    High-SNR upper bound for channel inversion:
    ``K log2(P/K) + log2 det(H H^dagger) - K log2(Gamma(K+1)^(1/K) e/(K+1))``.

    Raises
    ------
    RankDeficient
        If `h` does not have full row rank.
    """
    h = as_matrix(h)
    if k is None:
        k = h.shape[0]
    elif k != h.shape[0]:
        raise ValueError(f'k={k} does not match {h.shape[0]} channel rows')
    _check_positive(p_snr=p_snr)
    logdet = log_gram_det(h)
    if not np.isfinite(logdet):
        raise RankDeficient('channel does not have full row rank')
    return (k * np.log2(p_snr / k) + logdet * LOG2E
            - upper_bound_penalty(k))


def mi_exact(lam: float, d: float, ese: float, p_snr: float) -> float:
    """
    Exact per-user mutual information for effective gain ``lam * d``.

    ``log2(P lam^2 d^2 / (pi e ese)) + 2 omega(ese / (2 P lam^2 d^2))``.
    """
    _check_positive(lam=lam, d=d, ese=ese, p_snr=p_snr)
    snr = p_snr * lam ** 2 * d ** 2
    mi = (np.log2(snr / (np.pi * np.e * ese))
          + 2.0 * omega(ese / (2.0 * snr)))
    # the two terms cancel at low gain; drop quadrature roundoff below 0
    return float(max(0.0, mi))


def sum_rate_ra(ese: float, p_snr: float, lam, d) -> float:
    """
    Sum rate with rate allocation gains `lam` over the active users.

    The K/K terms cancel, so each user contributes `mi_exact`.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if lam.shape != d.shape:
        raise ValueError('lam and d must have the same length')
    _check_positive(ese=ese, p_snr=p_snr, lam=lam, d=d)
    return float(sum(mi_exact(l, dk, ese, p_snr) for l, dk in zip(lam, d)))


def mi_piecewise(lam, d, ese, p_snr):
    """On-off approximation ``max(0, log2(P lam^2 d^2 / (pi e ese)))``."""
    _check_positive(lam=lam, d=d, ese=ese, p_snr=p_snr)
    val = np.log2(p_snr * np.square(lam) * np.square(d) / (np.pi * np.e * ese))
    return np.maximum(0.0, val)


def mi_awgn(lam, d, ese, p_snr):
    """Gaussian-channel proxy ``log2(1 + P lam^2 d^2 / (pi e ese))``."""
    _check_positive(lam=lam, d=d, ese=ese, p_snr=p_snr)
    return np.log2(1.0 + p_snr * np.square(lam) * np.square(d)
                   / (np.pi * np.e * ese))


def r_vp_pw(lam, d, ese: float, p_snr: float) -> float:
    """Sum of `mi_piecewise` over users; users with ``lam == 0`` add 0."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(lam < 0):
        raise DomainError('lam must be nonnegative')
    on = lam > 0
    if not np.any(on):
        return 0.0
    return float(np.sum(mi_piecewise(lam[on], d[on], ese, p_snr)))


@dataclass(frozen=True)
class RateReport:
    r_exact: float
    r_lower: float
    r_upper: float
    omega_term: float
    gamma: float
    k_users: int


def rate_report(h, ese: float, p_snr: float) -> RateReport:
    """Exact rate and both bounds for a channel-inversion precoder."""
    h = as_matrix(h)
    k = h.shape[0]
    gamma = ese / (2.0 * p_snr)
    om = omega(gamma)
    lower = sum_rate_lower(ese, p_snr, k)
    return RateReport(r_exact=lower + 2 * k * om, r_lower=lower,
                      r_upper=sum_rate_upper(h, p_snr, k), omega_term=om,
                      gamma=gamma, k_users=k)
