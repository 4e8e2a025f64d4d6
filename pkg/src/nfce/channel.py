"""Multipath parameter sampling and wideband near-field channel synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    PolarPoint,
    steering_exact,
    steering_taylor,
)


@dataclass(frozen=True)
class Path:
    gain: complex
    angle: float
    distance: float
    delay: float
    is_los: bool = False

    @property
    def point(self) -> PolarPoint:
        return PolarPoint(self.distance, self.angle)


@dataclass(frozen=True)
class PathSet:
    paths: tuple

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.paths) < 1:
            raise ValueError("a PathSet needs at least one path")
        if sum(p.is_los for p in self.paths) != 1:
            raise ValueError("exactly one path must be flagged line-of-sight")

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    @property
    def los(self) -> Path:
        return next(p for p in self.paths if p.is_los)

    @property
    def angles(self) -> np.ndarray:
        return np.array([p.angle for p in self.paths])

    @property
    def distances(self) -> np.ndarray:
        return np.array([p.distance for p in self.paths])

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths])

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths])


@dataclass(frozen=True)
class WidebandChannel:
    H: np.ndarray
    config: SystemConfig
    model_tag: str
    paths: PathSet


def subcarrier_frequency(p, P: int, B: float, f_c: float):
    """Frequency of subcarrier ``p`` in ``1..P`` (vectorised over ``p``)."""
    p_arr = np.asarray(p)
    if np.any(p_arr < 1) or np.any(p_arr > P) or np.any(p_arr != np.round(p_arr)):
        raise ValueError(f"subcarrier index must be an integer in [1, {P}]")
    return f_c + (2 * p_arr - P) * B / (2 * P)


def subcarrier_frequencies(config: SystemConfig) -> np.ndarray:
    return subcarrier_frequency(np.arange(1, config.P + 1), config.P, config.B, config.f_c)


def center_subcarrier(P: int) -> int:
    """0-based column whose frequency is closest to the carrier (exact for even P)."""
    return max(P // 2 - 1, 0) if P % 2 == 0 else (P - 1) // 2


def sample_paths(config: SystemConfig, rng: np.random.Generator) -> PathSet:
    """Draw one LoS path followed by ``L - 1`` NLoS paths.

    LoS gain is unit-modulus with a uniform phase; NLoS gains are circular
    complex Gaussian with power ``nlos_power_db`` relative to LoS. Delays are
    ``r / c`` for LoS; NLoS paths start no earlier than LoS and add a uniform
    excess on ``[0, max_excess_delay]``.
    """
    lo, hi = -np.pi / 2 + config.angle_clip, np.pi / 2 - config.angle_clip
    if not (lo < hi and config.r_min <= config.r_max):
        raise ValueError("empty angle or distance range")
    L = config.L
    angles = rng.uniform(lo, hi, size=L)
    distances = rng.uniform(config.r_min, config.r_max, size=L)
    los_phase = rng.uniform(0, 2 * np.pi)
    nlos_power = 10 ** (config.nlos_power_db / 10)
    nlos = np.sqrt(nlos_power / 2) * (rng.standard_normal(L - 1) + 1j * rng.standard_normal(L - 1))
    excess = rng.uniform(0, config.max_excess_delay, size=L - 1)
    paths = [Path(complex(np.exp(1j * los_phase)), angles[0], distances[0], distances[0] / SPEED_OF_LIGHT, True)]
    for l in range(1, L):
        paths.append(
            Path(complex(nlos[l - 1]), angles[l], distances[l],
                 max(distances[l], distances[0]) / SPEED_OF_LIGHT + excess[l - 1])
        )
    return PathSet(paths)


def channel_matrix(geom: ArrayGeometry, paths: PathSet, freqs, model_tag: str = "exact") -> np.ndarray:
    """``H[:, p] = sqrt(N/L) * sum_l g_l exp(-j 2 pi f_p tau_l) a(r_l, theta_l, f_p)``."""
    if model_tag == "exact":
        steer = steering_exact
    elif model_tag == "taylor":
        steer = steering_taylor
    else:
        raise ValueError(f"unknown model tag {model_tag!r}")
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    N, L = geom.n_antennas, len(paths)
    H = np.zeros((N, freqs.size), dtype=complex)
    for path in paths:
        point = path.point
        rot = path.gain * np.exp(-2j * np.pi * freqs * path.delay)
        for p, f in enumerate(freqs):
            H[:, p] += rot[p] * steer(geom, point, f)
    return np.sqrt(N / L) * H


def synthesize_channel(paths: PathSet, config: SystemConfig, model_tag: str | None = None) -> WidebandChannel:
    tag = config.model_tag if model_tag is None else model_tag
    H = channel_matrix(config.geometry, paths, subcarrier_frequencies(config), tag)
    return WidebandChannel(H, config, tag, paths)
