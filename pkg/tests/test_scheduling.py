import itertools

import numpy as np
import pytest

from conftest import crandn
from vpbench.errors import TooManyUsers
from vpbench.linalg import gram_det
from vpbench.rates import sum_rate_exact, sum_rate_upper
from vpbench.scheduling import (ChannelSet, exhaustive_select,
                                greedy_zf_select, grm_select, grm_threshold,
                                subset_key, sus_select)


def _orthogonal_rows(norms, n_t):
    q, _ = np.linalg.qr(crandn(np.random.default_rng(0), n_t, n_t))
    return np.array([nrm * q[:, i] for i, nrm in enumerate(norms)])


def test_single_user():
    ch = ChannelSet([[3.0, 4.0j]])
    tr = grm_select(ch, 1.0)
    assert tr.selected == [0]
    assert tr.det_w == pytest.approx(25.0)


def test_orthogonal_rows_order_by_norm():
    norms = [1.0, 3.0, 2.0, 5.0]
    ch = ChannelSet(_orthogonal_rows(norms, 4))
    order = list(np.argsort(norms)[::-1])
    assert grm_select(ch, 1e6).selected == order
    assert greedy_zf_select(ch).selected == order
    assert sus_select(ch, 1e6, 1.0).selected == order


def test_threshold_is_upper_bound_break_even():
    # adding a user whose ||g||^2 equals the threshold leaves the high-SNR
    # bound unchanged: compare K and K+1 orthogonal users directly
    rng = np.random.default_rng(5)
    for k in (1, 2, 4, 6):
        p = 10 ** rng.uniform(-1, 3)
        norms = list(rng.uniform(0.5, 3.0, k))
        base = _orthogonal_rows(np.sqrt(norms), 8)
        thr = grm_threshold(k, p)
        more = _orthogonal_rows(np.sqrt(norms + [thr]), 8)
        assert sum_rate_upper(more, p) == pytest.approx(
            sum_rate_upper(base, p), abs=1e-9)


def test_greedy_pick_maximizes_determinant(rng):
    h = crandn(rng, 6, 4)
    tr = greedy_zf_select(ChannelSet(h))
    chosen = []
    for u in tr.selected:
        rest = [v for v in range(6) if v not in chosen]
        best = max(rest, key=lambda v: gram_det(h[chosen + [v]]))
        assert u == best
        chosen.append(u)
    assert tr.det_w == pytest.approx(gram_det(h[tr.selected]), rel=1e-6)


def test_trace_invariants(rng):
    for _ in range(50):
        u, n_t = rng.integers(1, 9), rng.integers(1, 7)
        ch = ChannelSet(crandn(rng, u, n_t))
        p = 10 ** rng.uniform(-1, 3)
        for tr in (grm_select(ch, p), sus_select(ch, p, rng.random()),
                   greedy_zf_select(ch)):
            assert len(set(tr.selected)) == tr.k
            assert 1 <= tr.k <= min(u, n_t)
            assert tr.det_w == pytest.approx(gram_det(h := ch.rows(
                tr.selected)), rel=1e-6)
            assert len(tr.per_iter_g_norms) == tr.k
            assert h.shape[0] == tr.k


def test_greedy_zf_fills_all_antennas(rng):
    ch = ChannelSet(crandn(rng, 10, 4))
    assert greedy_zf_select(ch).k == 4


def test_sus_alpha_boundaries(rng):
    ch = ChannelSet(crandn(rng, 8, 4))
    assert sus_select(ch, 1.0, 1.0).k == 4
    tr = sus_select(ch, 1.0, 0.0)
    assert tr.k == 1
    assert sorted(tr.shed_log[0]) == sorted(set(range(8)) - set(tr.selected))
    with pytest.raises(ValueError):
        sus_select(ch, 1.0, 1.5)


def test_vec_mult_counts():
    rng = np.random.default_rng(9)
    h = crandn(rng, 5, 5)
    ch = ChannelSet(h)
    # Greedy-ZF: remaining candidates after picks 1..4 are 4, 3, 2, 1
    assert greedy_zf_select(ch).vec_mults == 2 * (4 + 3 + 2 + 1)
    # SUS with no shedding: 1 check + 2 projection mults per candidate
    assert sus_select(ch, 1.0, 1.0).vec_mults == 3 * (4 + 3 + 2 + 1)
    # SUS with alpha = 0: 4 checks, all shed, no projections
    assert sus_select(ch, 1.0, 0.0).vec_mults == 4


def test_grm_sheds_at_low_snr_not_at_high(rng):
    ch = ChannelSet(crandn(rng, 8, 8))
    assert grm_select(ch, 1e-2).k < grm_select(ch, 1e4).k


def test_grm_shedding_rule_respected(rng):
    for _ in range(30):
        ch = ChannelSet(crandn(rng, 8, 6))
        p = 10 ** rng.uniform(-0.5, 2)
        tr = grm_select(ch, p)
        for it in range(1, tr.k):
            # every pick after the first clears the threshold of its stage
            assert tr.per_iter_g_norms[it] >= grm_threshold(it, p)


def test_subset_key_order_free():
    assert subset_key([3, 0, 2]) == subset_key([0, 2, 3]) == 0b1101


def test_exhaustive_matches_enumeration(rng):
    h = crandn(rng, 4, 3)
    ch = ChannelSet(h)
    table = {}

    def ese_fn(sub):
        table[sub] = 0.1 * (1 + len(sub)) / (1 + gram_det(h[list(sub)]))
        return table[sub]

    tr = exhaustive_select(ch, 5.0, ese_fn=ese_fn)
    best = max(((s, sum_rate_exact(e, 5.0, len(s))) for s, e in
                table.items()), key=lambda t: t[1])
    assert tuple(tr.selected) == best[0]
    assert tr.objective == pytest.approx(best[1])
    n_sets = sum(len(list(itertools.combinations(range(4), k)))
                 for k in (1, 2, 3))
    assert len(table) == n_sets


def test_exhaustive_default_estimator_and_limit(rng):
    tr = exhaustive_select(ChannelSet(crandn(rng, 3, 2)), 10.0,
                           ese_samples=200, seed=(1, 2))
    assert 1 <= tr.k <= 2 and np.isfinite(tr.objective)
    with pytest.raises(TooManyUsers):
        exhaustive_select(ChannelSet(crandn(rng, 13, 4)), 1.0)


def test_channel_set_validation():
    with pytest.raises(ValueError):
        ChannelSet(np.zeros((0, 3)))
