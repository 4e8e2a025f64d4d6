import numpy as np
import pytest

from nfce.channel import (
    Path,
    PathSet,
    center_subcarrier,
    channel_matrix,
    sample_paths,
    subcarrier_frequencies,
    subcarrier_frequency,
    synthesize_channel,
)
from nfce.config import desk_config, paper_config
from nfce.geometry import SPEED_OF_LIGHT, steering_exact


class TestSubcarrierFrequency:
    def test_center_is_carrier(self):
        for P in (2, 32, 128):
            assert subcarrier_frequency(P // 2, P, 10e9, 100e9) == 100e9

    def test_band_edges(self):
        assert subcarrier_frequency(128, 128, 10e9, 100e9) == pytest.approx(105e9, rel=1e-15)
        assert subcarrier_frequency(1, 128, 10e9, 100e9) == pytest.approx(100e9 + (2 - 128) / 256 * 10e9)
        assert subcarrier_frequency(1, 128, 10e9, 100e9) == pytest.approx(95.078e9, abs=1e6)

    def test_monotone_and_range_checked(self):
        f = subcarrier_frequencies(paper_config())
        assert np.all(np.diff(f) > 0)
        with pytest.raises(ValueError):
            subcarrier_frequency(0, 8, 1e9, 1e10)
        with pytest.raises(ValueError):
            subcarrier_frequency(9, 8, 1e9, 1e10)

    def test_center_column(self):
        cfg = desk_config()
        assert subcarrier_frequencies(cfg)[center_subcarrier(cfg.P)] == cfg.f_c


class TestSamplePaths:
    def test_deterministic(self):
        cfg = desk_config()
        a = sample_paths(cfg, np.random.default_rng(11))
        b = sample_paths(cfg, np.random.default_rng(11))
        assert a == b

    def test_single_path_is_los(self):
        ps = sample_paths(desk_config(L=1), np.random.default_rng(0))
        assert len(ps) == 1 and ps.paths[0].is_los

    def test_ranges_and_delay_order(self):
        cfg = desk_config()
        rng = np.random.default_rng(5)
        for _ in range(200):
            ps = sample_paths(cfg, rng)
            assert np.all((ps.distances >= 10) & (ps.distances <= 20))
            assert np.all(np.abs(ps.angles) < np.pi / 2 - 0.01)
            assert np.all(ps.delays >= ps.los.distance / SPEED_OF_LIGHT - 1e-18)
            assert abs(abs(ps.los.gain) - 1) < 1e-12

    def test_distance_mean(self):
        cfg = desk_config(L=1)
        rng = np.random.default_rng(1)
        d = [sample_paths(cfg, rng).paths[0].distance for _ in range(10_000)]
        assert 14.8 <= np.mean(d) <= 15.2

    def test_pathset_needs_one_los(self):
        p = Path(1.0, 0.1, 12.0, 0.0, False)
        with pytest.raises(ValueError):
            PathSet([p])


class TestSynthesis:
    def test_single_path_column_norm(self):
        cfg = desk_config(L=1)
        ps = PathSet([Path(1.0, 0.4, 12.0, 0.0, True)])
        for tag in ("exact", "taylor"):
            H = synthesize_channel(ps, cfg, tag).H
            assert np.allclose(np.linalg.norm(H, axis=0), np.sqrt(cfg.N), rtol=0, atol=1e-12)

    def test_far_field_broadside_is_flat(self):
        cfg = desk_config(L=1)
        ps = PathSet([Path(1.0, 0.0, 1e15, 0.0, True)])
        h = synthesize_channel(ps, cfg).H[:, center_subcarrier(cfg.P)]
        assert np.allclose(np.abs(h), 1.0, atol=1e-12)

    def test_cancellation(self):
        cfg = desk_config(L=2)
        g = 0.3 - 0.7j
        ps = PathSet([Path(g, 0.2, 13.0, 1e-8, True), Path(-g, 0.2, 13.0, 1e-8, False)])
        assert np.max(np.abs(synthesize_channel(ps, cfg).H)) < 1e-14

    def test_pure_and_reconstructible(self):
        cfg = desk_config()
        ps = sample_paths(cfg, np.random.default_rng(2))
        H1 = synthesize_channel(ps, cfg).H
        H2 = synthesize_channel(ps, cfg).H
        assert np.array_equal(H1, H2)
        freqs = subcarrier_frequencies(cfg)
        geom = cfg.geometry
        for p in (0, 7, cfg.P - 1):
            col = sum(l.gain * np.exp(-2j * np.pi * freqs[p] * l.delay) * steering_exact(geom, l.point, freqs[p])
                      for l in ps)
            assert np.allclose(H1[:, p], np.sqrt(cfg.N / cfg.L) * col, rtol=0, atol=1e-12)

    def test_center_column_matches_single_carrier(self):
        cfg = desk_config()
        ps = sample_paths(cfg, np.random.default_rng(3))
        H = synthesize_channel(ps, cfg).H
        h_c = channel_matrix(cfg.geometry, ps, [cfg.f_c])[:, 0]
        assert np.allclose(H[:, center_subcarrier(cfg.P)], h_c, rtol=0, atol=1e-12)

    def test_energy_linear_in_n(self):
        Ns = np.array([16, 32, 64, 128])
        energies = []
        for N in Ns:
            cfg = desk_config(N=N, P=4)
            rng = np.random.default_rng(N)
            energies.append(np.mean([np.sum(np.abs(synthesize_channel(sample_paths(cfg, rng), cfg).H) ** 2)
                                     for _ in range(400)]))
        slope, intercept = np.polyfit(Ns, energies, 1)
        # E||H||^2 = N P (1 + (L - 1) 10^-1) / L for unit LoS and -10 dB NLoS
        expected = 4 * (1 + 2 * 0.1) / 3
        assert slope == pytest.approx(expected, rel=0.1)
        assert abs(intercept) < 0.1 * slope * Ns.max()

    def test_unknown_model_tag(self):
        cfg = desk_config()
        ps = sample_paths(cfg, np.random.default_rng(0))
        with pytest.raises(ValueError):
            synthesize_channel(ps, cfg, "ray")
