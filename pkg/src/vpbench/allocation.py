"""
Sub-optimal iterative waterfilling of the rate allocation gains.

The loop alternates standard waterfilling of ``lambda_k^2`` against the
per-user gains ``delta_k^2 = P d_k^2 / E_se`` with a refresh of E_se for the
new precoder. Inside the loop E_se is the closed-form lower bound of the
active generator; a Monte Carlo value is reported at the end.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import dvq_decompose
from .precoding import (DEFAULT_ESE_SAMPLES, PrecoderConfig, estimate_ese,
                        ese_lower_bound)
from .rates import sum_rate_ra

__all__ = ['AllocationResult', 'waterfill_once', 'allocate',
           'allocated_sum_rate']


def waterfill_once(delta_sq):
    """
    Waterfilling with unit total: ``lambda_k^2 = max(0, zeta - 1/delta_k^2)``
    and ``sum_k lambda_k^2 = 1``.

    Parameters
    ----------
    delta_sq : array_like, shape (K,)
        Positive channel gains.

    Returns
    -------
    lam : np.ndarray, shape (K,)
        Allocation gains (square roots of the water heights).
    zeta : float
        Water level.
    """
    delta_sq = np.asarray(delta_sq, dtype=float).reshape(-1)
    if delta_sq.size == 0 or np.any(~(delta_sq > 0)) \
            or not np.all(np.isfinite(delta_sq)):
        raise DomainError('delta_sq must be positive and finite')
    floors = 1.0 / delta_sq
    order = np.argsort(floors, kind='stable')
    sorted_floors = floors[order]
    csum = np.cumsum(sorted_floors)
    k = floors.size
    zeta = None
    for m in range(1, k + 1):
        level = (1.0 + csum[m - 1]) / m
        if m == k or level <= sorted_floors[m]:
            zeta = level
            break
    lam_sq = np.maximum(0.0, zeta - floors)
    return np.sqrt(lam_sq), float(zeta)


@dataclass(frozen=True)
class AllocationResult:
    """
    Attributes
    ----------
    lam : np.ndarray
        Allocation gains, ``sum(lam**2) == 1``; zero for switched-off users.
    zeta : float
        Water level of the last waterfilling step.
    iterations : int
    converged : bool
    ese_bound : float
        E_se lower bound used in the last waterfilling step.
    ese_final : float
        Monte Carlo E_se of the final precoder.
    ese_std_error : float
    d : np.ndarray
        Per-user gains of the channel factorization.
    """
    lam: np.ndarray
    zeta: float
    iterations: int
    converged: bool
    ese_bound: float
    ese_final: float
    ese_std_error: float
    d: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.lam > 0)


def _bound_for(v_inv: np.ndarray, lam: np.ndarray) -> float:
    act = np.flatnonzero(lam > 0)
    return ese_lower_bound(v_inv[:, act] * lam[act])


def allocate(h, p_snr: float, max_iters: int = 50, tol: float = 1e-6,
             ese_samples: int = DEFAULT_ESE_SAMPLES,
             seed=0) -> AllocationResult:
    """
    Iterative waterfilling rate allocation for channel `h`.

    Starts from equal gains ``Lambda = I / sqrt(K)`` with E_se set to its
    lower bound, then repeats waterfilling and the E_se refresh until the
    largest change in any ``lambda_k`` is below `tol`. Users that drop to
    zero are removed from later waterfilling rounds.

    Raises
    ------
    RankDeficient
        If `h` does not have full row rank.
    """
    if not p_snr > 0:
        raise ValueError('p_snr must be positive')
    fac = dvq_decompose(h)
    k = fac.k
    v_inv = fac.v_inv()
    lam = np.full(k, 1.0 / np.sqrt(k))
    ese = _bound_for(v_inv, lam)
    converged = False
    zeta = np.nan
    it = 0
    for it in range(1, max_iters + 1):
        act = np.flatnonzero(lam > 0)
        delta_sq = p_snr * fac.d[act] ** 2 / ese
        lam_act, zeta = waterfill_once(delta_sq)
        new = np.zeros(k)
        new[act] = lam_act
        assert np.any(new > 0), 'waterfilling left no active user'
        change = float(np.max(np.abs(new - lam)))
        ese_used = ese
        lam = new
        ese = _bound_for(v_inv, lam)
        if change < tol:
            converged = True
            break
    cfg = PrecoderConfig.rate_allocated(h, lam, p_snr)
    est = estimate_ese(cfg, ese_samples, seed)
    return AllocationResult(lam=lam, zeta=zeta, iterations=it,
                            converged=converged, ese_bound=ese_used,
                            ese_final=est.mean,
                            ese_std_error=est.std_error, d=fac.d)


def allocated_sum_rate(res: AllocationResult, p_snr: float) -> float:
    """Sum rate of the allocated precoder over its active users."""
    act = res.active
    return sum_rate_ra(res.ese_final, p_snr, res.lam[act], res.d[act])
