"""
Monte Carlo experiment harness.

Every experiment maps an `ExperimentConfig` to a `ResultTable` of averages
over i.i.d. Rayleigh channel realizations. Per-trial random streams are
derived from ``(seed, trial, stream[, ...])`` so results do not depend on
the number of worker processes or their schedule.
"""

import datetime
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .allocation import allocate, allocated_sum_rate
from .errors import ConfigError
from .precoding import (PrecoderConfig, complex_normal, estimate_ese,
                        make_rng)
from .rates import (mi_awgn, mi_exact, mi_piecewise, sum_rate_exact,
                    sum_rate_lower, sum_rate_upper)
from .scheduling import (MAX_EXHAUSTIVE_USERS, ChannelSet, exhaustive_select,
                         grm_select, subset_key, sus_select)

__all__ = ['EXPERIMENTS', 'ExperimentConfig', 'ResultTable', 'gen_channel',
           'run', 'db_to_linear']

EXPERIMENTS = ('fig1', 'sumrate_sweep', 'sched_loss', 'sched_vs_users',
               'ra_compare', 'table_users', 'table_mults')
CHANNEL_MODEL = 'iid CN(0,1) Rayleigh'

# stream identifiers of the per-trial random generators
_CHANNEL, _ESE, _ALLOC = 0, 1, 2


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def gen_channel(k: int, n_t: int, rng) -> np.ndarray:
    """K x N_T matrix with i.i.d. CN(0, 1) entries."""
    return complex_normal(make_rng(rng), (k, n_t))


def _version() -> str:
    try:
        from importlib.metadata import version
        return version('artifact')
    except Exception:  # not installed
        return 'unknown'


@dataclass
class ExperimentConfig:
    """
    Parameters of one experiment run.

    Only the fields an experiment needs are used; `u_grid` applies to
    ``sched_vs_users`` and the ``fig1_*`` / `lam_*` fields to ``fig1``.
    """
    experiment: str = 'sumrate_sweep'
    n_t: int = 4
    u: int = 4
    snr_db_grid: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 100
    ese_samples: int = 2000
    alpha_grid: tuple = tuple(np.round(np.linspace(0.0, 1.0, 21), 10))
    seed: int = 2009
    out_path: str = None
    u_grid: tuple = (4, 6, 8, 10, 12)
    lam_min: float = 0.01
    lam_max: float = 3.0
    lam_points: int = 400
    fig1_ese: float = 0.1
    fig1_d: float = 1.0
    workers: int = 1
    plot: bool = True

    def __post_init__(self):
        for name in ('snr_db_grid', 'alpha_grid', 'u_grid'):
            val = getattr(self, name)
            if np.isscalar(val):
                val = (val,)
            setattr(self, name, tuple(val))
        self.validate()

    def validate(self) -> None:
        """Raise `ConfigError` for invalid or unsupported settings."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f'unknown experiment {self.experiment!r}; '
                              f'choose from {", ".join(EXPERIMENTS)}')
        for name in ('n_t', 'u', 'trials', 'workers', 'lam_points'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f'{name} must be at least 1')
        if self.ese_samples < 100:
            raise ConfigError('ese_samples must be at least 100')
        if not self.snr_db_grid:
            raise ConfigError('snr_db_grid must not be empty')
        if not all(np.isfinite(self.snr_db_grid)):
            raise ConfigError('snr_db_grid entries must be finite')
        if not self.alpha_grid or any(not 0 <= a <= 1
                                      for a in self.alpha_grid):
            raise ConfigError('alpha_grid must be nonempty within [0, 1]')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed must be a 64-bit unsigned integer')
        if self.experiment == 'sumrate_sweep' and self.u > self.n_t:
            raise ConfigError('sumrate_sweep serves all users and needs '
                              'u <= n_t')
        if self.experiment == 'ra_compare' and self.u > self.n_t:
            raise ConfigError('ra_compare needs u <= n_t')
        if self.experiment == 'sched_loss' and self.u > MAX_EXHAUSTIVE_USERS:
            raise ConfigError(f'sched_loss uses exhaustive search, which '
                              f'supports u <= {MAX_EXHAUSTIVE_USERS}')
        if self.experiment == 'sched_vs_users' and (
                not self.u_grid or min(self.u_grid) < 1):
            raise ConfigError('u_grid must contain positive user counts')
        if self.experiment == 'fig1' and not (
                0 < self.lam_min < self.lam_max and self.fig1_ese > 0
                and self.fig1_d > 0):
            raise ConfigError('fig1 needs 0 < lam_min < lam_max and '
                              'positive fig1_ese, fig1_d')

    def echo(self) -> dict:
        """Config fields that define the result (for the CSV header)."""
        skip = {'out_path', 'workers', 'plot'}
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in skip}


@dataclass
class ResultTable:
    """Rectangular table of finite values with metadata."""
    columns: list
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.rows.shape[1] != len(self.columns):
            raise ValueError('row width does not match the column count')
        if not np.all(np.isfinite(self.rows)):
            raise ValueError('result table contains non-finite values')

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, path, timestamp=True) -> None:
        lines = [f'# {k}={_fmt_meta(v)}' for k, v in self.metadata.items()]
        if timestamp:
            now = datetime.datetime.now(datetime.timezone.utc)
            lines.append(f'# generated={now.isoformat(timespec="seconds")}')
        lines.append(','.join(self.columns))
        lines += [','.join(repr(float(x)) for x in row) for row in self.rows]
        with open(path, 'w', newline='\n') as fh:
            fh.write('\n'.join(lines) + '\n')


def _fmt_meta(v) -> str:
    if isinstance(v, (tuple, list)):
        return ' '.join(_fmt_meta(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class _Trial:
    """Channel realization of one trial with an E_se cache keyed by subset."""

    def __init__(self, cfg: ExperimentConfig, trial: int, u: int = None):
        self.cfg = cfg
        self.trial = trial
        u = cfg.u if u is None else u
        self.h = gen_channel(u, cfg.n_t, (cfg.seed, trial, _CHANNEL, u))
        self.ch = ChannelSet(self.h)
        self._ese = {}

    def ese(self, subset) -> float:
        key = subset_key(subset)
        if key not in self._ese:
            pc = PrecoderConfig.channel_inverse(self.h[sorted(subset)])
            seed = (self.cfg.seed, self.trial, _ESE, self.ch.u, key)
            self._ese[key] = estimate_ese(pc, self.cfg.ese_samples, seed).mean
        return self._ese[key]

    def rate(self, subset, p_snr) -> float:
        return sum_rate_exact(self.ese(subset), p_snr, len(subset))


def _sus_sweep(tr: _Trial, p_grid, alphas):
    """SUS selections are SNR independent; rates[a, s], users, mults per a."""
    rates = np.empty((len(alphas), len(p_grid)))
    users = np.empty(len(alphas))
    mults = np.empty(len(alphas))
    for a, alpha in enumerate(alphas):
        trace = sus_select(tr.ch, 1.0, alpha)
        users[a], mults[a] = trace.k, trace.vec_mults
        for s, p in enumerate(p_grid):
            rates[a, s] = tr.rate(trace.selected, p)
    return rates, users, mults


def _trial_sumrate(cfg, trial):
    tr = _Trial(cfg, trial)
    everyone = range(cfg.u)
    out = np.empty((len(cfg.snr_db_grid), 3))
    for s, p in enumerate(db_to_linear(cfg.snr_db_grid)):
        ese = tr.ese(everyone)
        out[s] = (sum_rate_exact(ese, p, cfg.u),
                  sum_rate_upper(tr.h, p), sum_rate_lower(ese, p, cfg.u))
    return out


def _trial_sched(cfg, trial, exhaustive, u=None):
    tr = _Trial(cfg, trial, u)
    p_grid = db_to_linear(cfg.snr_db_grid)
    grm = np.empty((len(p_grid), 3))
    for s, p in enumerate(p_grid):
        trace = grm_select(tr.ch, p)
        grm[s] = tr.rate(trace.selected, p), trace.k, trace.vec_mults
    sus = _sus_sweep(tr, p_grid, cfg.alpha_grid)
    es = None
    if exhaustive:
        es = np.array([exhaustive_select(tr.ch, p, ese_fn=tr.ese).objective
                       for p in p_grid])
    return grm, sus, es


def _trial_ra(cfg, trial):
    tr = _Trial(cfg, trial)
    out = np.empty((len(cfg.snr_db_grid), 4))
    everyone = list(range(cfg.u))
    for s, p in enumerate(db_to_linear(cfg.snr_db_grid)):
        seed = (cfg.seed, trial, _ALLOC, s)
        ra = allocate(tr.h, p, ese_samples=cfg.ese_samples, seed=seed)
        sel = grm_select(tr.ch, p).selected
        if len(sel) == 1:
            # a single user gets all the power; allocation changes nothing
            grm_ra = tr.rate(sel, p)
        else:
            res = allocate(tr.h[sorted(sel)], p, ese_samples=cfg.ese_samples,
                           seed=seed + (1,))
            grm_ra = allocated_sum_rate(res, p)
        out[s] = (tr.rate(everyone, p), allocated_sum_rate(ra, p),
                  tr.rate(sel, p), grm_ra)
    return out


def _map_trials(cfg: ExperimentConfig, fn, *args):
    trials = range(cfg.trials)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            return list(ex.map(fn, [cfg] * cfg.trials, trials,
                               *[[a] * cfg.trials for a in args],
                               chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    return [fn(cfg, t, *args) for t in trials]


def _best_alpha(sus_rates):
    """Index of the alpha with the largest mean rate, per SNR (first wins)."""
    return np.argmax(sus_rates.mean(axis=0), axis=0)


def _run_fig1(cfg):
    p = float(db_to_linear(cfg.snr_db_grid[0]))
    ese, d = cfg.fig1_ese, cfg.fig1_d
    lam = np.linspace(cfg.lam_min, cfg.lam_max, cfg.lam_points)
    exact = np.array([mi_exact(l, d, ese, p) for l in lam])
    pw = mi_piecewise(lam, d, ese, p)
    rows = np.column_stack([lam, exact, pw, mi_awgn(lam, d, ese, p),
                            exact - pw])
    return (['lambda', 'mi_exact', 'mi_piecewise', 'mi_awgn', 'gap'], rows,
            {'max_gap': float(np.max(exact - pw))})


def _run_sumrate(cfg):
    res = np.array(_map_trials(cfg, _trial_sumrate))  # trials x snr x 3
    exact, ub, lb = res[..., 0], res[..., 1], res[..., 2]
    rows = np.column_stack([cfg.snr_db_grid, exact.mean(0),
                            np.maximum(ub, 0.0).mean(0), ub.mean(0),
                            lb.mean(0), (ub - exact).mean(0)])
    return (['snr_db', 'vp_exact', 'vp_ub', 'vp_ub_raw', 'vp_lb',
             'ub_minus_exact'], rows, {})


def _collect_sched(cfg, exhaustive, u=None):
    res = _map_trials(cfg, _trial_sched, exhaustive, u)
    grm = np.array([r[0] for r in res])            # trials x snr x 3
    sus_rates = np.array([r[1][0] for r in res])   # trials x alpha x snr
    sus_users = np.array([r[1][1] for r in res])   # trials x alpha
    sus_mults = np.array([r[1][2] for r in res])
    best = _best_alpha(sus_rates)
    cols = np.arange(len(cfg.snr_db_grid))
    out = {
        'grm_rate': grm[..., 0].mean(0), 'grm_users': grm[..., 1].mean(0),
        'grm_mults': grm[..., 2].mean(0),
        'sus_rate': sus_rates.mean(0)[best, cols],
        'sus_users': sus_users.mean(0)[best],
        'sus_mults': sus_mults.mean(0)[best],
        'sus_alpha': np.asarray(cfg.alpha_grid)[best],
    }
    if exhaustive:
        out['es_rate'] = np.array([r[2] for r in res]).mean(0)
    return out


def _run_sched_loss(cfg):
    r = _collect_sched(cfg, exhaustive=True)
    rows = np.column_stack([cfg.snr_db_grid, r['es_rate'], r['grm_rate'],
                            r['sus_rate'], r['es_rate'] - r['grm_rate'],
                            r['es_rate'] - r['sus_rate'], r['sus_alpha']])
    return (['snr_db', 'es_rate', 'grm_rate', 'sus_rate', 'grm_loss',
             'sus_loss', 'sus_alpha'], rows, {})


def _run_sched_vs_users(cfg):
    rows = []
    for u in cfg.u_grid:
        r = _collect_sched(cfg, exhaustive=False, u=u)
        rows.append(np.concatenate([[u], r['grm_rate'], r['sus_rate'],
                                    r['sus_alpha']]))
    tags = [f'{x:g}db' for x in cfg.snr_db_grid]
    cols = (['u'] + [f'grm_rate_{t}' for t in tags]
            + [f'sus_rate_{t}' for t in tags]
            + [f'sus_alpha_{t}' for t in tags])
    return cols, np.array(rows), {}


def _run_ra(cfg):
    res = np.array(_map_trials(cfg, _trial_ra)).mean(0)
    rows = np.column_stack([cfg.snr_db_grid, res])
    return (['snr_db', 'vp', 'vp_ra', 'vp_grm', 'vp_grm_ra'], rows, {})


def _run_table(cfg, what):
    r = _collect_sched(cfg, exhaustive=False)
    rows = np.column_stack([cfg.snr_db_grid, r[f'grm_{what}'],
                            r[f'sus_{what}'], r['sus_alpha']])
    return (['snr_db', f'grm_{what}', f'sus_{what}', 'sus_alpha'], rows, {})


_RUNNERS = {
    'fig1': _run_fig1,
    'sumrate_sweep': _run_sumrate,
    'sched_loss': _run_sched_loss,
    'sched_vs_users': _run_sched_vs_users,
    'ra_compare': _run_ra,
    'table_users': lambda cfg: _run_table(cfg, 'users'),
    'table_mults': lambda cfg: _run_table(cfg, 'mults'),
}


def run(cfg: ExperimentConfig) -> ResultTable:
    """
    Run an experiment; write the CSV (and a figure) when `out_path` is set.

    Raises
    ------
    ConfigError
        For invalid configurations.
    """
    cfg.validate()
    columns, rows, extra = _RUNNERS[cfg.experiment](cfg)
    meta = {'vpbench_version': _version(), 'channel_model': CHANNEL_MODEL}
    meta.update(cfg.echo())
    meta.update(extra)
    table = ResultTable(list(columns), rows, meta)
    if cfg.out_path:
        parent = os.path.dirname(os.path.abspath(cfg.out_path))
        os.makedirs(parent, exist_ok=True)
        table.to_csv(cfg.out_path)
        if cfg.plot:
            from .plotting import plot_table
            plot_table(table, cfg.experiment,
                       os.path.splitext(cfg.out_path)[0] + '.png')
    return table
