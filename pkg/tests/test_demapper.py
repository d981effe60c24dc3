import numpy as np
import pytest

from bitlink import channel, demapper, metrics
from bitlink.errors import ConfigurationError


def make_demapper(spec, snr_tr, snr_aux, mode="exact_map"):
    true_model = channel.build_dmc(spec, snr_tr)
    aux = demapper.build_aux_channel(spec, snr_aux, true_model)
    return demapper.Demapper(spec, aux, mode=mode), true_model


def test_sign_bit_antisymmetry(qam16):
    dm, _ = make_demapper(qam16, 12.0, 12.0)
    n_bins = dm.dim_table.shape[0]
    mirror = n_bins - 1 - np.arange(n_bins)
    # mirrored output bins flip the sign-bit L-value and keep the
    # amplitude-bit L-value
    assert np.allclose(
        dm.dim_table[mirror, 0], -dm.dim_table[:, 0], atol=1e-9
    )
    assert np.allclose(
        dm.dim_table[mirror, 1], dm.dim_table[:, 1], atol=1e-9
    )


def test_high_snr_aux_signs_match_labels(qam16, ps64):
    for spec in (qam16, ps64):
        true_model = channel.build_dmc(spec, 60.0)
        aux = demapper.build_aux_channel(spec, 60.0, true_model)
        dm = demapper.Demapper(spec, aux)
        for x in range(spec.order):
            li, lq = spec.point_dim_index[x]
            own = (
                int(np.searchsorted(true_model.edges, true_model.levels[li])),
                int(np.searchsorted(true_model.edges, true_model.levels[lq])),
            )
            llrs = dm.raw_llrs(np.array([own]))[0]
            decided = (llrs < 0).astype(np.uint8)
            assert np.array_equal(decided, spec.labels[x])


def test_max_log_exact_snr_scaling(qam16):
    dm_a, _ = make_demapper(qam16, 12.0, 9.0, mode="max_log")
    dm_b, _ = make_demapper(qam16, 12.0, 12.0, mode="max_log")
    factor = 10.0 ** 0.3
    assert np.allclose(
        dm_b.dim_table, factor * dm_a.dim_table, rtol=1e-9, atol=1e-12
    )


def test_max_log_uniform_decisions_aux_invariant(qam16):
    tables = []
    for aux_snr in (9.0, 12.0, 15.0):
        dm, _ = make_demapper(qam16, 12.0, aux_snr, mode="max_log")
        tables.append(np.sign(dm.dim_table))
    assert np.array_equal(tables[0], tables[1])
    assert np.array_equal(tables[1], tables[2])


def test_shaped_decisions_can_depend_on_aux(ps64):
    dm_a, _ = make_demapper(ps64, 12.0, 9.0)
    dm_b, _ = make_demapper(ps64, 12.0, 15.0)
    assert np.any(np.sign(dm_a.dim_table) != np.sign(dm_b.dim_table))


def test_joint_table_modes(qam32):
    for mode in ("exact_map", "max_log"):
        dm, model = make_demapper(qam32, 14.0, 14.0, mode=mode)
        assert dm.table.shape == (model.n_bins, model.n_bins, 5)
        bins = np.array([[3, 100], [64, 64]])
        llrs = dm.raw_llrs(bins)
        assert llrs.shape == (2, 5)
        assert np.all(np.isfinite(llrs))


def test_llr_quantizer_rules():
    quant = demapper.LlrQuantConfig(clip=20.0, levels=128)
    step = 2.0 * 20.0 / 128
    out = demapper.quantize_llrs(np.array([0.0, 1e6, -1e6, 0.3]), quant)
    assert out[0] == pytest.approx(step / 2.0)  # L = 0 rounds up
    assert out[1] == pytest.approx(20.0 - step / 2.0)
    assert out[2] == pytest.approx(-(20.0 - step / 2.0))
    assert abs(out[3] - 0.3) <= step / 2.0
    grid = np.round((out - step / 2.0) / step)
    assert np.allclose(out, grid * step + step / 2.0, atol=1e-12)


def test_quantized_asi_close_to_unquantized(qam16, rng):
    dm, model = make_demapper(qam16, 12.0, 12.0)
    bits = rng.integers(0, 2, size=(50_000, 4)).astype(np.uint8)
    points = qam16.map_labels(bits)
    bins = channel.sample(model, qam16, points, rng)
    raw = dm.raw_llrs(bins)
    quantized = demapper.quantize_llrs(raw, dm.quant)
    flat_bits = bits.reshape(-1)
    asi_raw = metrics.asi(raw.reshape(-1), flat_bits)
    asi_q = metrics.asi(quantized.reshape(-1), flat_bits)
    assert asi_q <= asi_raw + 1e-3
    assert asi_raw - asi_q < 5e-3


def test_matched_asi_maximized_over_aux_grid(qam16):
    true_model = channel.build_dmc(qam16, 12.0)
    values = {}
    for offset in np.arange(-3.0, 3.5, 0.5):
        aux = demapper.build_aux_channel(qam16, 12.0 + offset, true_model)
        dm = demapper.Demapper(qam16, aux)
        joint = np.concatenate(
            [
                np.broadcast_to(
                    dm.dim_table[:, None, :2],
                    (true_model.n_bins, true_model.n_bins, 2),
                ),
                np.broadcast_to(
                    dm.dim_table[None, :, :2],
                    (true_model.n_bins, true_model.n_bins, 2),
                ),
            ],
            axis=2,
        )
        values[float(offset)] = metrics.asi_over_dmc(
            joint, qam16, true_model
        )
    best = max(values, key=values.get)
    assert best == 0.0
    assert all(v <= values[0.0] + 1e-12 for v in values.values())


def test_aux_rejects_missing_true_model(qam16):
    with pytest.raises(TypeError):
        demapper.build_aux_channel(qam16, 12.0)


def test_lvalue_frame_shape_check():
    with pytest.raises(ConfigurationError):
        demapper.LValueFrame(
            llrs=np.zeros((3, 2)), bits=np.zeros((2, 2), dtype=np.uint8)
        )


def test_symbol_decisions_high_snr(qam16, rng):
    dm, model = make_demapper(qam16, 60.0, 60.0)
    points = rng.integers(0, 16, size=2000)
    bins = channel.sample(model, qam16, points, rng)
    assert np.array_equal(dm.symbol_decisions(bins), points)
