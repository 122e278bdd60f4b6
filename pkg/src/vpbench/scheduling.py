"""
Greedy user selection for vector perturbation.

All greedy schemes pick, at every iteration, the candidate with the largest
component orthogonal to the already selected channels. Because
``||g_u||^2 = det(W(S + u)) / det(W(S))`` this is greedy maximization of the
Gram determinant. The schemes differ only in how candidates are shed:

* GRM sheds users whose addition would lower the high-SNR sum-rate upper
  bound.
* SUS sheds users that are not semi-orthogonal (threshold ``alpha``) to the
  most recently selected user.
* Greedy-ZF never sheds.

``vec_mults`` counts length-N_T vector multiplications: 2 per candidate
projection update (inner product and scaled subtraction) and, for SUS, 1
per semi-orthogonality check.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import TooManyUsers
from .linalg import as_matrix, log_gram_det
from .precoding import DEFAULT_ESE_SAMPLES, PrecoderConfig, estimate_ese
from .rates import sum_rate_exact

__all__ = ['ChannelSet', 'SelectionTrace', 'grm_threshold', 'grm_select',
           'sus_select', 'greedy_zf_select', 'exhaustive_select',
           'subset_key', 'MAX_EXHAUSTIVE_USERS']

MAX_EXHAUSTIVE_USERS = 12
_UNDERFLOW = 1e-12


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Channel row vectors of U candidate users (shape U x N_T)."""
    users: np.ndarray

    def __post_init__(self):
        users = as_matrix(self.users)
        if users.shape[0] < 1:
            raise ValueError('a channel set needs at least one user')
        object.__setattr__(self, 'users', users)

    @property
    def u(self) -> int:
        return self.users.shape[0]

    @property
    def n_t(self) -> int:
        return self.users.shape[1]

    def rows(self, selected) -> np.ndarray:
        return self.users[list(selected)]


@dataclass
class SelectionTrace:
    """
    Outcome of a user selection run.

    Attributes
    ----------
    selected : list of int
        Selected user indices in selection order.
    shed_log : list of list of int
        Users shed at each iteration.
    log_det_w : float
        Natural log of ``det(W(S))`` for the selected set.
    vec_mults : int
        Number of vector multiplications performed.
    per_iter_g_norms : list of float
        ``||g_u||^2`` of each selected user when it was picked.
    objective : float, optional
        Objective value, set by `exhaustive_select`.
    """
    selected: list = field(default_factory=list)
    shed_log: list = field(default_factory=list)
    log_det_w: float = 0.0
    vec_mults: int = 0
    per_iter_g_norms: list = field(default_factory=list)
    objective: float = None

    @property
    def det_w(self) -> float:
        return float(np.exp(self.log_det_w))

    @property
    def k(self) -> int:
        return len(self.selected)


def grm_threshold(k: int, p_snr: float) -> float:
    """
    Smallest ``||g_u||^2`` at which adding a user to ``k`` selected users
    does not lower the high-SNR upper bound:
    ``e (k+1)^(2k+2) / (P k^k (k+2)^(k+1))``.
    """
    log_thr = (1.0 + (2 * k + 2) * np.log(k + 1)
               - (k * np.log(k) if k > 0 else 0.0)
               - (k + 1) * np.log(k + 2) - np.log(p_snr))
    return float(np.exp(log_thr))


class _Greedy:
    """Shared bookkeeping of the projection-based greedy schemes."""

    def __init__(self, ch: ChannelSet):
        self.h = ch.users
        self.n_t = ch.n_t
        self.g = ch.users.copy()
        self.g2 = np.sum(np.abs(self.g) ** 2, axis=1)
        self.cand = list(range(ch.u))
        self.trace = SelectionTrace()

    def best(self) -> int:
        vals = self.g2[self.cand]
        # argmax returns the first maximum, i.e. the lowest user index
        return self.cand[int(np.argmax(vals))]

    def shed(self, users) -> None:
        users = list(users)
        self.trace.shed_log.append(users)
        drop = set(users)
        self.cand = [u for u in self.cand if u not in drop]

    def add(self, u: int) -> np.ndarray:
        self.trace.selected.append(u)
        self.trace.per_iter_g_norms.append(float(self.g2[u]))
        self.trace.log_det_w += float(np.log(self.g2[u]))
        self.cand.remove(u)
        return self.g[u].copy()

    def project(self, u: int, g_s: np.ndarray, g_s2: float) -> None:
        self.g[u] = self.g[u] - (np.vdot(g_s, self.g[u]) / g_s2) * g_s
        self.g2[u] = float(np.real(np.vdot(self.g[u], self.g[u])))
        self.trace.vec_mults += 2

    def full(self) -> bool:
        return len(self.trace.selected) >= self.n_t


def grm_select(ch: ChannelSet, p_snr: float) -> SelectionTrace:
    """
    Greedy rate maximization (GRM).

    Each iteration finds the candidate with the largest ``||g_u||^2``. Once
    ``K = |S| >= 1`` every candidate below `grm_threshold` is shed; if that
    empties the candidate set (which happens exactly when the best candidate
    is shed) the algorithm stops without adding it. Otherwise the best
    candidate is selected and the others are projected onto its orthogonal
    complement. Stops at ``|S| == N_T``.
    """
    if not p_snr > 0:
        raise ValueError('p_snr must be positive')
    st = _Greedy(ch)
    while st.cand and not st.full():
        u_max = st.best()
        k = len(st.trace.selected)
        # the first pick is never shed: there is no rate to compare with
        if k >= 1:
            thr = grm_threshold(k, p_snr)
            st.shed([u for u in st.cand if st.g2[u] < thr])
            if not st.cand:
                break
        else:
            st.trace.shed_log.append([])
        if st.g2[u_max] < _UNDERFLOW:
            break
        g_s = st.add(u_max)
        g_s2 = st.g2[u_max]
        if st.full():
            break
        for u in st.cand:
            st.project(u, g_s, g_s2)
    return st.trace


def sus_select(ch: ChannelSet, p_snr: float, alpha: float) -> SelectionTrace:
    """
    Semi-orthogonal user selection (SUS).

    After each pick ``s``, candidates with
    ``|h_u g_s^*|^2 / (||h_u||^2 ||g_s||^2) > alpha^2`` are shed; the rest
    are projected. `p_snr` does not enter the rule and is accepted for a
    uniform signature.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError('alpha must lie in [0, 1]')
    st = _Greedy(ch)
    h2 = np.sum(np.abs(ch.users) ** 2, axis=1)
    while st.cand and not st.full():
        u_max = st.best()
        if st.g2[u_max] < _UNDERFLOW:
            break
        g_s = st.add(u_max)
        g_s2 = st.g2[u_max]
        if st.full():
            break
        shed = []
        for u in list(st.cand):
            cos2 = abs(np.vdot(g_s, ch.users[u])) ** 2 / (h2[u] * g_s2)
            st.trace.vec_mults += 1
            if cos2 > alpha ** 2:
                shed.append(u)
        st.shed(shed)
        for u in st.cand:
            st.project(u, g_s, g_s2)
    return st.trace


def greedy_zf_select(ch: ChannelSet, p_snr: float = None) -> SelectionTrace:
    """Greedy determinant maximization without shedding."""
    st = _Greedy(ch)
    while st.cand and not st.full():
        u_max = st.best()
        if st.g2[u_max] < _UNDERFLOW:
            break
        g_s = st.add(u_max)
        g_s2 = st.g2[u_max]
        if st.full():
            break
        for u in st.cand:
            st.project(u, g_s, g_s2)
    return st.trace


def subset_key(selected) -> int:
    """Bitmask of a user subset; stable across selection orders."""
    return int(sum(1 << int(u) for u in selected))


def exhaustive_select(ch: ChannelSet, p_snr: float,
                      ese_samples: int = DEFAULT_ESE_SAMPLES, seed=0,
                      ese_fn=None) -> SelectionTrace:
    """
    Best subset (size 1..N_T) by the exact sum rate with Monte Carlo E_se.

    Parameters
    ----------
    ese_fn : callable, optional
        ``ese_fn(subset_tuple) -> float``. Defaults to a Monte Carlo
        estimate seeded by ``(seed, subset bitmask)`` so that results are
        reproducible and can be shared with other schemes.

    Raises
    ------
    TooManyUsers
        If U > 12.
    """
    if ch.u > MAX_EXHAUSTIVE_USERS:
        raise TooManyUsers(f'exhaustive search supports at most '
                           f'{MAX_EXHAUSTIVE_USERS} users, got {ch.u}')
    if ese_fn is None:
        base = seed if isinstance(seed, tuple) else (int(seed),)

        def ese_fn(sub):
            cfg = PrecoderConfig.channel_inverse(ch.rows(sub), p_snr)
            return estimate_ese(cfg, ese_samples,
                                base + (subset_key(sub),)).mean

    best, best_rate = None, -np.inf
    for size in range(1, min(ch.u, ch.n_t) + 1):
        for sub in itertools.combinations(range(ch.u), size):
            rate = sum_rate_exact(ese_fn(sub), p_snr, size)
            if rate > best_rate:
                best, best_rate = sub, rate
    return SelectionTrace(selected=list(best), shed_log=[],
                          log_det_w=log_gram_det(ch.rows(best)),
                          vec_mults=0, per_iter_g_norms=[],
                          objective=float(best_rate))
