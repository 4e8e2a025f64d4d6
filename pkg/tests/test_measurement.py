import warnings

import numpy as np
import pytest

from nfce.dictionaries import build_modified_dft, build_polar_dictionary
from nfce.geometry import ArrayGeometry
from nfce.measurement import (
    MeasurementSet,
    calibrate_noise,
    complex_normal,
    generate_precoder,
    observe,
    sensing_matrix,
)

G64 = ArrayGeometry(64, 100e9)


class TestPrecoder:
    def test_entry_variance(self):
        F = generate_precoder(1000, 1000, np.random.default_rng(0))
        assert np.mean(np.abs(F) ** 2) == pytest.approx(1 / np.sqrt(1000), rel=0.02)
        # circular: real and imaginary parts carry half the power each, uncorrelated
        assert np.var(F.real) == pytest.approx(np.var(F.imag), rel=0.02)
        assert abs(np.mean(F.real * F.imag)) < 1e-3

    def test_frobenius_energy(self):
        rng = np.random.default_rng(1)
        T, N = 48, 64
        e = np.mean([np.sum(np.abs(generate_precoder(T, N, rng)) ** 2) for _ in range(200)])
        assert e == pytest.approx(T * np.sqrt(N), rel=0.02)

    def test_deterministic_and_override(self):
        a = generate_precoder(4, 8, np.random.default_rng(3))
        b = generate_precoder(4, 8, np.random.default_rng(3))
        assert np.array_equal(a, b)
        c = generate_precoder(400, 400, np.random.default_rng(3), variance=1 / 400)
        assert np.mean(np.abs(c) ** 2) == pytest.approx(1 / 400, rel=0.02)
        with pytest.raises(ValueError):
            generate_precoder(0, 8, np.random.default_rng(0))


class TestCalibrateNoise:
    def test_examples(self):
        H = np.ones((20, 8))  # ||H||^2 = 160 = T P
        assert calibrate_noise(H, 20, 8, 0.0) == pytest.approx(1.0)
        assert calibrate_noise(H, 20, 8, np.inf) == 0.0
        H = np.full((256, 128), np.sqrt(2560 / (256 * 128)))
        assert calibrate_noise(H, 160, 128, 10.0) == pytest.approx(0.0125, rel=1e-12)

    def test_zero_channel(self):
        with pytest.raises(ValueError):
            calibrate_noise(np.zeros((4, 4)), 4, 4, 10.0)


class TestObserve:
    def test_noiseless(self):
        rng = np.random.default_rng(0)
        F = complex_normal(rng, (6, 5))
        H = complex_normal(rng, (5, 3))
        m = observe(F, H, 0.0, rng)
        assert np.array_equal(m.Y, F @ H)
        assert m.snr_db == np.inf

    def test_noise_only_energy(self):
        rng = np.random.default_rng(1)
        T, P, s2 = 16, 8, 0.3
        F = complex_normal(rng, (T, 4))
        e = np.mean([np.sum(np.abs(observe(F, np.zeros((4, P)), s2, rng).Y) ** 2) for _ in range(500)])
        assert e == pytest.approx(T * P * s2, rel=0.05)

    def test_noise_variance_and_reproducibility(self):
        F = complex_normal(np.random.default_rng(2), (250, 8))
        H = complex_normal(np.random.default_rng(3), (8, 400))
        m1 = observe(F, H, 0.7, np.random.default_rng(4))
        m2 = observe(F, H, 0.7, np.random.default_rng(4))
        assert np.array_equal(m1.Y, m2.Y)
        assert np.var(m1.Y - F @ H) == pytest.approx(0.7, rel=0.05)

    def test_realized_snr(self):
        rng = np.random.default_rng(5)
        T, N, P = 160, 16, 128
        for _ in range(100):
            H = complex_normal(rng, (N, P))
            F = generate_precoder(T, N, rng)
            s2 = calibrate_noise(H, T, P, 10.0)
            noise = observe(F, H, s2, rng).Y - F @ H
            realized = 10 * np.log10(np.sum(np.abs(H) ** 2) / np.sum(np.abs(noise) ** 2))
            assert abs(realized - 10.0) <= 0.5

    def test_measurement_set_validation(self):
        with pytest.raises(ValueError):
            MeasurementSet(np.zeros((3, 2)), np.zeros((4, 5)), 1.0, 10.0)
        with pytest.raises(ValueError):
            MeasurementSet(np.zeros((3, 2)), np.zeros((3, 5)), 0.0, 10.0)
        with pytest.raises(ValueError):
            observe(np.zeros((3, 5)), np.zeros((4, 2)), 0.0, np.random.default_rng(0))


class TestSensingMatrix:
    def test_unitary_invariance(self):
        rng = np.random.default_rng(6)
        F = generate_precoder(48, 64, rng)
        for mu in (np.inf, 14.14):
            Phi = sensing_matrix(F, build_modified_dft(G64, mu))
            assert np.allclose(np.linalg.norm(Phi, axis=1), np.linalg.norm(F, axis=1), rtol=1e-10)
            assert np.linalg.norm(Phi) == pytest.approx(np.linalg.norm(F), rel=1e-12)

    def test_one_hot_row(self):
        D = build_modified_dft(G64, 14.14)
        F = D.matrix[:, 21].conj()[None, :]
        row = sensing_matrix(F, D)[0]
        assert np.allclose(row, np.eye(64)[21], atol=1e-12)

    def test_polar_shape(self):
        g = ArrayGeometry(256, 100e9)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            D = build_polar_dictionary(g, S=6)
        F = generate_precoder(160, 256, np.random.default_rng(0))
        assert sensing_matrix(F, D).shape == (160, 1536)

    def test_sparse_and_antenna_models_agree(self):
        rng = np.random.default_rng(7)
        D = build_modified_dft(G64, 14.14)
        F = generate_precoder(32, 64, rng)
        H = complex_normal(rng, (64, 5))
        lhs = sensing_matrix(F, D) @ (D.matrix.conj().T @ H)
        assert np.linalg.norm(lhs - F @ H) / np.linalg.norm(F @ H) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sensing_matrix(np.zeros((3, 5)), np.zeros((4, 4)))
