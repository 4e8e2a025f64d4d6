"""Pilot precoders, noise calibration and the compressed observation model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeasurementSet:
    Y: np.ndarray
    F: np.ndarray
    noise_var: float
    snr_db: float
    seed: int | None = None

    def __post_init__(self):
        if self.Y.shape[0] != self.F.shape[0]:
            raise ValueError(f"Y has {self.Y.shape[0]} rows but F has {self.F.shape[0]}")
        if self.noise_var < 0 or (self.noise_var == 0 and not np.isposinf(self.snr_db)):
            raise ValueError("zero noise is only allowed for the noiseless (snr_db = inf) sentinel")


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_precoder(T: int, N: int, rng: np.random.Generator, variance: float | None = None) -> np.ndarray:
    """i.i.d. CN(0, v) pilot beamformers, ``v = 1/sqrt(N)`` unless overridden."""
    if T < 1 or N < 1:
        raise ValueError("T and N must be >= 1")
    v = 1 / np.sqrt(N) if variance is None else variance
    return complex_normal(rng, (T, N), v)


def calibrate_noise(H: np.ndarray, T: int, P: int, snr_db: float) -> float:
    """Per-entry noise power giving ``||H||_F^2 / E||N||_F^2 = 10^(snr_db/10)``."""
    energy = float(np.sum(np.abs(H) ** 2))
    if energy == 0:
        raise ValueError("cannot calibrate noise against an all-zero channel")
    if np.isposinf(snr_db):
        return 0.0
    return energy * 10 ** (-snr_db / 10) / (T * P)


def observe(F, H, noise_var: float, rng: np.random.Generator, snr_db: float = np.nan, seed=None) -> MeasurementSet:
    """``Y = F H + N`` with i.i.d. CN(0, noise_var) noise."""
    F = np.asarray(F)
    H = np.asarray(H)
    if F.shape[1] != H.shape[0]:
        raise ValueError(f"F is {F.shape} but H is {H.shape}")
    Y = F @ H
    if noise_var > 0:
        Y = Y + complex_normal(rng, Y.shape, noise_var)
    elif np.isnan(snr_db):
        snr_db = np.inf
    return MeasurementSet(Y, F, float(noise_var), float(snr_db), seed)


def sensing_matrix(F, dictionary) -> np.ndarray:
    """``Phi = F D`` for a dictionary object or a bare matrix."""
    D = getattr(dictionary, "matrix", dictionary)
    F = np.asarray(F)
    if F.shape[1] != D.shape[0]:
        raise ValueError(f"F has {F.shape[1]} columns but the dictionary has {D.shape[0]} rows")
    return F @ D
