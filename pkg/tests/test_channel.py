import numpy as np
import pytest

from bitlink import channel, constellation, metrics
from bitlink.errors import ConfigurationError

import oracles


@pytest.mark.parametrize(
    "order,snr", [(16, 10.0), (32, 14.0), (64, 16.0), (128, 19.0)]
)
def test_rows_sum_to_one(order, snr):
    spec = constellation.build_uniform_qam(order)
    model = channel.build_dmc(spec, snr)
    assert model.trans.shape == (len(model.levels), 128)
    assert model.edges.shape == (127,)
    assert np.all(model.trans >= 0)
    assert np.max(np.abs(model.trans.sum(axis=1) - 1.0)) < 1e-12
    # log rows agree with the linear rows where mass is non-negligible
    mask = model.trans > 1e-300
    assert np.allclose(
        np.exp(model.log_trans[mask]), model.trans[mask], rtol=1e-9
    )


def test_shaped_rows_sum_to_one(ps64):
    model = channel.build_dmc(ps64, 12.0)
    assert np.max(np.abs(model.trans.sum(axis=1) - 1.0)) < 1e-12
    assert abs(model.level_prior.sum() - 1.0) < 1e-12


def test_high_snr_levels_map_to_own_bin(qam16):
    model = channel.build_dmc(qam16, 60.0)
    for i, level in enumerate(model.levels):
        own = int(np.searchsorted(model.edges, level))
        assert model.trans[i, own] > 0.999


def test_mi_quantizer_monotone(qam16):
    m7 = channel.build_dmc(qam16, 10.0, bits=7)
    m10 = channel.build_dmc(qam16, 10.0, bits=10)
    assert metrics.mi_symbolwise(qam16, m7) <= metrics.mi_symbolwise(
        qam16, m10
    )


def test_mi_snr_monotone(qam16):
    values = [
        metrics.mi_symbolwise(qam16, channel.build_dmc(qam16, snr))
        for snr in (4.0, 8.0, 12.0, 16.0)
    ]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_mi_extremes(qam16):
    hi = metrics.mi_symbolwise(qam16, channel.build_dmc(qam16, 60.0))
    assert abs(hi - 4.0) < 1e-3
    lo = metrics.mi_symbolwise(qam16, channel.build_dmc(qam16, -40.0))
    assert lo < 1e-3


@pytest.mark.parametrize("snr", [10.9, 12.0])
def test_mi_against_gauss_hermite(qam16, snr):
    dmc = metrics.mi_symbolwise(qam16, channel.build_dmc(qam16, snr))
    unquantized = oracles.gauss_hermite_mi_symbol(qam16, snr)
    assert dmc <= unquantized + 1e-9
    assert unquantized - dmc < 0.05


def test_mismatched_edges_reused(qam16):
    true_model = channel.build_dmc(qam16, 12.0)
    aux_model = channel.build_dmc(qam16, 9.0, edges=true_model.edges)
    assert np.array_equal(aux_model.edges, true_model.edges)
    with pytest.raises(ConfigurationError):
        channel.build_dmc(qam16, 9.0, edges=true_model.edges[:-1])


def test_sample_determinism(qam16, qam16_model):
    idx = np.arange(16).repeat(10)
    a = channel.sample(qam16_model, qam16, idx, np.random.default_rng(5))
    b = channel.sample(qam16_model, qam16, idx, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_sample_high_snr_own_bin(qam16):
    model = channel.build_dmc(qam16, 60.0)
    rng = np.random.default_rng(1)
    idx = np.full(100_000, 5)
    bins = channel.sample(model, qam16, idx, rng)
    li, lq = qam16.point_dim_index[5]
    own_i = int(np.searchsorted(model.edges, model.levels[li]))
    own_q = int(np.searchsorted(model.edges, model.levels[lq]))
    assert np.mean(bins[:, 0] == own_i) > 0.999
    assert np.mean(bins[:, 1] == own_q) > 0.999


def test_sample_histogram_matches_row(qam16, qam16_model):
    rng = np.random.default_rng(11)
    n = 1_000_000
    point = 3
    bins = channel.sample(qam16_model, qam16, np.full(n, point), rng)
    row = qam16_model.trans[qam16.point_dim_index[point, 0]]
    counts = np.bincount(bins[:, 0], minlength=qam16_model.n_bins)
    sigma = np.sqrt(n * row * (1.0 - row))
    assert np.all(np.abs(counts - n * row) <= 3.0 * sigma + 1.0)


def test_representatives_inside_bins(qam16_model):
    edges = qam16_model.edges
    rep = qam16_model.representatives
    assert np.all(rep[1:-1] > edges[:-1]) and np.all(rep[1:-1] < edges[1:])
    assert rep[0] < edges[0] and rep[-1] > edges[-1]
