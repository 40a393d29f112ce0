import json

import numpy as np
import pytest
from scipy import integrate, stats

from mmfnet.medium import (
    TransmissionMatrix,
    gen_random_gaussian,
    gen_random_unitary,
    gen_synthetic_fibre,
    load_tm,
    marchenko_pastur_density,
    polarisation_block,
    save_tm,
    select_block,
    time_reversal_deviation,
    tm_from_dict,
    tm_to_dict,
    transmission_spectrum,
)


def mp_cdf_oracle(x):
    """Unit-mean square Marchenko-Pastur CDF by direct quadrature of sqrt((4-t)t)/(2 pi t)."""
    x = min(max(x, 0.0), 4.0)
    value, _ = integrate.quad(lambda t: np.sqrt((4 - t) * t) / (2 * np.pi * t), 0.0, x, limit=200)
    return value


class TestGenerators:
    def test_gaussian_deterministic(self):
        a = gen_random_gaussian(4, 4, seed=1)
        b = gen_random_gaussian(4, 4, seed=1)
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, gen_random_gaussian(4, 4, seed=2).entries)

    def test_gaussian_column_norm(self):
        t = gen_random_gaussian(400, 400, seed=3).entries
        assert 0.9 <= np.mean(np.sum(np.abs(t) ** 2, axis=0)) <= 1.1

    @pytest.mark.parametrize("bad", [(0, 3), (3, 0), (-1, 2)])
    def test_gaussian_rejects_bad_dims(self, bad):
        with pytest.raises(ValueError):
            gen_random_gaussian(*bad, seed=0)

    def test_gaussian_fig_s2_size(self):
        tm = gen_random_gaussian(398, 398, seed=5, ports=2)
        assert tm.entries.shape == (398, 398) and tm.port_size == 199

    def test_unitary_single_mode(self):
        assert abs(abs(gen_random_unitary(1, seed=4).entries[0, 0]) - 1) < 1e-12

    @pytest.mark.parametrize("n", [16, 128, 1024])
    def test_unitary(self, n):
        u = gen_random_unitary(n, seed=n).entries
        assert np.max(np.abs(u.conj().T @ u - np.eye(n))) < 1e-10

    def test_unitary_spectrum_flat(self):
        spectrum = transmission_spectrum(gen_random_unitary(64, seed=0))
        assert np.allclose(spectrum.values, 1, atol=1e-9) and abs(spectrum.mean - 1) < 1e-9

    def test_unitary_deterministic(self):
        assert np.array_equal(gen_random_unitary(8, 3).entries, gen_random_unitary(8, 3).entries)

    def test_unitary_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gen_random_unitary(0, seed=0)

    def test_haar_phase_statistics(self):
        # Haar measure: diagonal entries have uniformly distributed phase
        phases = np.concatenate([np.angle(np.diag(gen_random_unitary(8, s).entries)) for s in range(400)])
        assert stats.kstest(phases, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 1e-3


class TestSyntheticFibre:
    def test_no_coupling_no_loss_is_identity(self):
        assert np.allclose(gen_synthetic_fibre(10, 0.0, 0.0, seed=1).entries, np.eye(10), atol=1e-12)

    def test_full_coupling_no_loss_is_unitary(self):
        u = gen_synthetic_fibre(40, 1.0, 0.0, seed=2).entries
        assert np.max(np.abs(u.conj().T @ u - np.eye(40))) < 1e-10

    def test_max_singular_value_bounded(self):
        assert np.linalg.norm(gen_synthetic_fibre(50, 0.7, 0.5, seed=0).entries, 2) <= 1 + 1e-12

    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            gen_synthetic_fibre(7)

    def test_partial_coupling_interpolates(self):
        n = 30
        offdiag = []
        for c in (0.0, 0.3, 1.0):
            t = gen_synthetic_fibre(n, c, 0.0, seed=9).entries
            offdiag.append(np.sum(np.abs(t - np.diag(np.diag(t))) ** 2))
        assert offdiag[0] < 1e-20 < offdiag[1] < offdiag[2]

    def test_polarisation_blocks_similar(self):
        distances = []
        for seed in range(20):
            tm = gen_synthetic_fibre(398, 1.0, 0.3, seed=seed)
            hh = transmission_spectrum(polarisation_block(tm, "H", "H")).normalized
            hv = transmission_spectrum(polarisation_block(tm, "H", "V")).normalized
            vv = transmission_spectrum(polarisation_block(tm, "V", "V")).normalized
            distances += [stats.ks_2samp(hh, hv).statistic, stats.ks_2samp(hh, vv).statistic]
        assert np.mean(distances) < 0.1


class TestBlocks:
    def test_full_selection_identity(self):
        tm = gen_random_gaussian(5, 6, seed=0, ports=2)
        sub = select_block(tm, range(5), range(6))
        assert np.array_equal(sub.entries, tm.entries) and sub.ports == 2

    def test_top_right(self):
        tm = TransmissionMatrix(np.arange(16).reshape(4, 4))
        assert np.array_equal(select_block(tm, [0, 1], [2, 3]).entries, [[2, 3], [6, 7]])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            select_block(TransmissionMatrix(np.eye(3)), [0, 3], [0])

    def test_polarisation_block_labels(self):
        tm = gen_synthetic_fibre(8, seed=0)
        block = polarisation_block(tm, "H", "V")
        assert np.array_equal(block.entries, tm.entries[:4, 4:])
        assert {pol for _, pol in block.output_labels} == {"H"}
        assert {pol for _, pol in block.input_labels} == {"V"}

    def test_port_partition_rule(self):
        with pytest.raises(ValueError):
            TransmissionMatrix(np.ones((398, 398)), ports=4)
        assert TransmissionMatrix(np.ones((398, 398)), ports=2).port_size == 199

    def test_entries_read_only(self):
        tm = TransmissionMatrix(np.eye(2))
        with pytest.raises(ValueError):
            tm.entries[0, 0] = 3


class TestSpectrum:
    def test_trace_identity(self):
        t = gen_random_gaussian(30, 20, seed=1)
        spectrum = transmission_spectrum(t)
        assert abs(spectrum.values.sum() - np.sum(np.abs(t.entries) ** 2)) < 1e-9
        assert np.all(spectrum.values >= 0) and np.all(np.diff(spectrum.values) <= 0)

    def test_histogram_integrates_to_one(self):
        spectrum = transmission_spectrum(gen_random_gaussian(100, 100, seed=2), bins=17)
        assert abs(np.sum(spectrum.density * np.diff(spectrum.bin_edges)) - 1) < 1e-9
        assert spectrum.bin_edges[0] == 0

    def test_zero_matrix_degenerate(self):
        spectrum = transmission_spectrum(np.zeros((3, 3)))
        assert spectrum.degenerate and np.all(spectrum.values == 0)

    def test_bins_validated(self):
        with pytest.raises(ValueError):
            transmission_spectrum(np.eye(2), bins=0)

    def test_marchenko_pastur_ks(self):
        tau = transmission_spectrum(gen_random_gaussian(400, 400, seed=11)).normalized
        ks = stats.kstest(tau, np.vectorize(mp_cdf_oracle)).statistic
        assert ks < 0.05

    def test_mp_density_normalized(self):
        for ratio in (1.0, 0.5, 0.25):
            total, _ = integrate.quad(lambda x: marchenko_pastur_density(np.array([x]), ratio)[0], 0, 4, limit=200)
            assert abs(total - 1) < 1e-3


class TestTimeReversal:
    def test_unitary(self):
        d = time_reversal_deviation(gen_random_unitary(50, seed=0))
        assert d["offdiag_rms"] < 1e-10 and abs(d["diag_mean"] - 1) < 1e-10

    def test_gaussian_offdiag_scale(self):
        vals = [time_reversal_deviation(gen_random_gaussian(100, 100, s))["offdiag_rms"] for s in range(50)]
        assert 0.07 <= np.mean(vals) <= 0.13

    def test_sqrt_n_ratio(self):
        small = np.mean([time_reversal_deviation(gen_random_gaussian(100, 100, s))["offdiag_rms"] for s in range(10)])
        large = np.mean([time_reversal_deviation(gen_random_gaussian(400, 400, s))["offdiag_rms"] for s in range(10)])
        assert 0.4 <= large / small <= 0.6

    def test_rms_times_sqrt_n_constant(self):
        products = [time_reversal_deviation(gen_random_gaussian(n, n, 7))["offdiag_rms"] * np.sqrt(n)
                    for n in (64, 256, 1024)]
        assert max(products) / min(products) < 1.3

    def test_rectangular_accepted(self):
        d = time_reversal_deviation(gen_random_gaussian(10, 30, 0))
        assert d["offdiag_rms"] > 0


class TestTmxJson:
    def test_roundtrip_exact(self, tmp_path):
        tm = gen_synthetic_fibre(6, seed=3)
        path = tmp_path / "tm.json"
        save_tm(tm, path)
        back = load_tm(path)
        assert np.array_equal(back.entries, tm.entries)
        assert back.ports == tm.ports and back.output_labels == tm.output_labels

    def test_layout(self):
        tm = TransmissionMatrix(np.array([[1 + 2j, 3], [4j, 5]]))
        d = tm_to_dict(tm)
        assert d["re"] == [1, 3, 0, 5] and d["im"] == [2, 0, 4, 0]
        assert (d["n_out"], d["n_in"], d["ports"]) == (2, 2, 1)

    def test_length_mismatch_rejected(self):
        d = tm_to_dict(TransmissionMatrix(np.eye(2)))
        d["re"] = d["re"][:-1]
        with pytest.raises(ValueError, match="length"):
            tm_from_dict(d)

    def test_missing_field_rejected(self):
        with pytest.raises(ValueError):
            tm_from_dict(json.loads('{"n_out": 1, "n_in": 1, "re": [1]}'))
