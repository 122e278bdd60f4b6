"""
Vector perturbation precoding chain: perturb, precode, scale, transmit and
demodulate, plus Monte Carlo estimation of the sphere-encoded power E_se and
its closed-form lower bound.

Two precoder modes are supported. ``ChannelInverse`` uses ``F = H^+``.
``RateAllocated`` factors ``H = D V Q`` and uses ``F = Q^dagger V^{-1} Lambda``
so that user k sees the gain ``lambda_k d_k``.
"""

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import SingularGenerator
from .lattice import LatticeSearcher, modulo_cube
from .linalg import as_matrix, dvq_decompose, DvqFactors

__all__ = ['Mode', 'PrecoderConfig', 'EseEstimate', 'make_rng', 'encode',
           'estimate_ese', 'estimate_ese_generator', 'ese_lower_bound',
           'log_ese_lower_bound', 'demodulate', 'uniform_cube',
           'complex_normal', 'DEFAULT_ESE_SAMPLES']

DEFAULT_ESE_SAMPLES = 2000


class Mode(enum.Enum):
    CHANNEL_INVERSE = 'ChannelInverse'
    RATE_ALLOCATED = 'RateAllocated'


def make_rng(seed) -> np.random.Generator:
    """
    Generator for a counter-style seed.

    `seed` is an int or a tuple of non-negative ints such as
    ``(experiment_seed, trial, stream)``; each distinct tuple gives an
    independent stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if np.isscalar(seed):
        seed = (int(seed),)
    return np.random.default_rng(np.random.SeedSequence(
        [int(s) for s in seed]))


def uniform_cube(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. uniform samples on CUBE = [-0.5, 0.5) + j[-0.5, 0.5)."""
    return (rng.random(shape) - 0.5) + 1j * (rng.random(shape) - 0.5)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape)
            + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class EseEstimate:
    """Monte Carlo estimate of the expected sphere-encoded power."""
    mean: float
    std_error: float
    samples: int


@dataclass(frozen=True, eq=False)
class PrecoderConfig:
    """
    Precoder definition for one channel realization.

    Parameters
    ----------
    mode : Mode
    h : array_like, shape (K, N_T)
        Channel matrix of the served users.
    snr_p : float
        Transmit SNR ``P`` in linear scale.
    lam : array_like, shape (K,), optional
        Rate allocation gains; required in RateAllocated mode. Users with
        ``lam == 0`` are switched off.
    """
    mode: Mode
    h: np.ndarray
    snr_p: float
    lam: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, 'h', as_matrix(self.h))
        if not self.snr_p > 0:
            raise ValueError('snr_p must be positive')
        if self.mode is Mode.RATE_ALLOCATED:
            if self.lam is None:
                raise ValueError('RateAllocated mode requires lam')
            lam = np.asarray(self.lam, dtype=float).reshape(-1)
            if lam.size != self.h.shape[0]:
                raise ValueError('lam must have one entry per user')
            if np.any(lam < 0) or not np.any(lam > 0):
                raise ValueError('lam must be nonnegative with at least one '
                                 'positive entry')
            object.__setattr__(self, 'lam', lam)

    @classmethod
    def channel_inverse(cls, h, snr_p=1.0):
        return cls(Mode.CHANNEL_INVERSE, h, snr_p)

    @classmethod
    def rate_allocated(cls, h, lam, snr_p=1.0):
        return cls(Mode.RATE_ALLOCATED, h, snr_p, lam)

    @property
    def k(self) -> int:
        return self.h.shape[0]

    @cached_property
    def factors(self) -> DvqFactors:
        return dvq_decompose(self.h)

    @cached_property
    def active(self) -> np.ndarray:
        """Indices of users that receive data."""
        if self.mode is Mode.CHANNEL_INVERSE:
            return np.arange(self.k)
        return np.flatnonzero(self.lam > 0)

    @cached_property
    def precoder(self) -> np.ndarray:
        """The N_T x K precoding matrix F."""
        fac = self.factors
        if self.mode is Mode.CHANNEL_INVERSE:
            scale = 1.0 / fac.d
        else:
            scale = self.lam
        return fac.q.conj().T @ (fac.v_inv() * scale[np.newaxis, :])

    @cached_property
    def generator(self) -> np.ndarray:
        """
        Square generator G of the perturbation lattice.

        ``||F (a + q)|| == ||G (a_A + q_A)||`` where ``A`` are the active
        users. For ChannelInverse this is ``V^{-1} D^{-1}``; for
        RateAllocated it is the triangular factor of the active columns of
        ``V^{-1} Lambda``.
        """
        fac = self.factors
        if self.mode is Mode.CHANNEL_INVERSE:
            return fac.v_inv() / fac.d[np.newaxis, :]
        cols = fac.v_inv()[:, self.active] * self.lam[self.active]
        if self.active.size == self.k:
            return cols
        return np.linalg.qr(cols, mode='r')

    @cached_property
    def searcher(self) -> LatticeSearcher:
        return LatticeSearcher(self.generator)

    @cached_property
    def gains(self) -> np.ndarray:
        """Per-user amplitude gain seen after the channel, ``H F = diag(g)``."""
        if self.mode is Mode.CHANNEL_INVERSE:
            return np.ones(self.k)
        return self.lam * self.factors.d


def encode(cfg: PrecoderConfig, a, ese: float) -> np.ndarray:
    """
    Transmit vector ``x = sqrt(P / ese) F (a + p)``.

    Parameters
    ----------
    cfg : PrecoderConfig
    a : array_like, shape (K,)
        Data vector in CUBE^K. Entries of switched-off users are ignored.
    ese : float
        Expected sphere-encoded power used for the power scaling.

    Returns
    -------
    np.ndarray, shape (N_T,)
    """
    if not ese > 0:
        raise ValueError('ese must be positive')
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    act = cfg.active
    p = np.zeros(cfg.k, dtype=np.complex128)
    p[act] = cfg.searcher.search(a[act]).p
    v = np.zeros(cfg.k, dtype=np.complex128)
    v[act] = a[act] + p[act]
    return np.sqrt(cfg.snr_p / ese) * (cfg.precoder @ v)


def perturb_many(cfg: PrecoderConfig, a) -> np.ndarray:
    """Transmit-side perturbation vectors for each row of `a`."""
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    p = np.zeros_like(a)
    p[:, cfg.active] = cfg.searcher.search_many(a[:, cfg.active])[0]
    return p


def estimate_ese_generator(g, samples: int = DEFAULT_ESE_SAMPLES,
                           seed=0) -> EseEstimate:
    """
    Monte Carlo estimate of ``E_a[min_q ||G (a + q)||^2]`` for uniform a.

    Parameters
    ----------
    g : array_like or LatticeSearcher
        Square generator matrix (or a prepared searcher).
    samples : int
        Number of data vectors, at least 100.
    seed : int or tuple of int
        Counter-style seed, see `make_rng`.
    """
    if samples < 100:
        raise ValueError('at least 100 samples are required')
    searcher = g if isinstance(g, LatticeSearcher) else LatticeSearcher(g)
    rng = make_rng(seed)
    a = uniform_cube(rng, (samples, searcher.k))
    _, costs, _ = searcher.search_many(a)
    mean = float(np.mean(costs))
    std_error = float(np.std(costs, ddof=1) / np.sqrt(samples))
    return EseEstimate(mean=mean, std_error=std_error, samples=samples)


def estimate_ese(cfg: PrecoderConfig, samples: int = DEFAULT_ESE_SAMPLES,
                 seed=0) -> EseEstimate:
    """Monte Carlo E_se of the precoder described by `cfg`."""
    return estimate_ese_generator(cfg.searcher, samples, seed)


def log_ese_lower_bound(g) -> float:
    """Natural log of `ese_lower_bound`."""
    g = as_matrix(g)
    k = g.shape[1]
    r = np.linalg.qr(g, mode='r')
    diag = np.abs(np.diag(r))
    if diag.min() < 1e-12 * max(diag.max(), 1.0) or diag.min() == 0.0:
        raise SingularGenerator('generator is singular')
    logdet = 2.0 * np.sum(np.log(diag))
    return (np.log(k) + gammaln(k + 1) / k - np.log((k + 1) * np.pi)
            + logdet / k)


def ese_lower_bound(g) -> float:
    """
    Lower bound on E_se for a lattice generator G with K columns.

    Evaluates ``K Gamma(K+1)^(1/K) / ((K+1) pi) * det(G^dagger G)^(1/K)``
    in the log domain.

    Raises
    ------
    SingularGenerator
        If ``G^dagger G`` is singular.
    """
    return float(np.exp(log_ese_lower_bound(g)))


def demodulate(y, gain, ese: float, p_snr: float):
    """
    Modulo receiver: ``[sqrt(ese / (P gain^2)) y] mod CUBE``.

    `y` and `gain` may be scalars or arrays of matching shape.
    """
    gain = np.asarray(gain, dtype=float)
    if np.any(gain <= 0):
        raise ValueError('gain must be positive')
    return modulo_cube(np.sqrt(ese / (p_snr * gain ** 2)) * np.asarray(y))
