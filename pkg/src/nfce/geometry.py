"""Uniform linear array geometry and near-field steering vectors.

Antenna indices are 1-based throughout so that the ``(n - 1)`` phase terms
read the same as the usual ULA formulas; arrays returned by the steering
functions are of course 0-based numpy vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


def wavelength(freq: float) -> float:
    return SPEED_OF_LIGHT / freq


@dataclass(frozen=True)
class ArrayGeometry:
    """Half-wavelength (by default) ULA with ``n_antennas`` elements.

    Parameters
    ----------
    n_antennas : int
        Number of elements N.
    carrier_freq : float
        Carrier frequency f_c in Hz.
    spacing : float, optional
        Element spacing d in meters. Defaults to half the carrier wavelength.
    """

    n_antennas: int
    carrier_freq: float
    spacing: float | None = None

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValueError(f"n_antennas must be a positive integer, got {self.n_antennas!r}")
        if not self.carrier_freq > 0:
            raise ValueError(f"carrier_freq must be positive, got {self.carrier_freq!r}")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.carrier_wavelength / 2)
        elif not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")

    @property
    def carrier_wavelength(self) -> float:
        return wavelength(self.carrier_freq)

    @property
    def aperture(self) -> float:
        return (self.n_antennas - 1) * self.spacing

    def offsets(self) -> np.ndarray:
        """Element offsets ``(n - 1) * d`` from the reference antenna."""
        return np.arange(self.n_antennas) * self.spacing


@dataclass(frozen=True)
class PolarPoint:
    """A scatterer/user position relative to the reference antenna."""

    distance: float
    angle: float

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"distance must be positive, got {self.distance!r}")
        if not abs(self.angle) < np.pi / 2:
            raise ValueError(f"angle must lie strictly inside (-pi/2, pi/2), got {self.angle!r}")

    @property
    def sin_angle(self) -> float:
        return float(np.sin(self.angle))

    @property
    def effective_distance(self) -> float:
        return effective_distance(self)


@dataclass(frozen=True)
class VirtualPoint:
    """Virtual location seen at the carrier for a path observed at a subcarrier.

    ``ratio`` is the subcarrier-to-carrier frequency ratio ``f_p / f_c``; with
    it the virtual angle satisfies ``sin(angle) = ratio * sin(theta)`` and the
    effective distances obey ``mu(r, theta) = ratio * mu(virtual)``.
    """

    distance: float
    sin_angle: float
    ratio: float

    def __post_init__(self):
        if abs(self.sin_angle) > 1:
            raise ValueError(f"virtual sine {self.sin_angle!r} is outside [-1, 1]")

    @property
    def angle(self) -> float:
        return float(np.arcsin(self.sin_angle))

    @property
    def effective_distance(self) -> float:
        return self.distance / (1.0 - self.sin_angle**2)


def _check_index(geom: ArrayGeometry, antenna_index):
    n = np.asarray(antenna_index)
    if np.any(n < 1) or np.any(n > geom.n_antennas) or np.any(n != np.round(n)):
        raise ValueError(f"antenna index must be an integer in [1, {geom.n_antennas}]")
    return n


def exact_distance(geom: ArrayGeometry, point: PolarPoint, antenna_index):
    """Distance from antenna ``n`` (1-based) to ``point``; accepts arrays of n."""
    n = _check_index(geom, antenna_index)
    x = (n - 1) * geom.spacing
    r = point.distance
    return np.sqrt(r**2 + x**2 - 2 * r * x * np.sin(point.angle))


def taylor_distance(geom: ArrayGeometry, point: PolarPoint, antenna_index):
    """Second-order (Fresnel) expansion of :func:`exact_distance`."""
    n = _check_index(geom, antenna_index)
    x = (n - 1) * geom.spacing
    r = point.distance
    return r - x * np.sin(point.angle) + x**2 * np.cos(point.angle) ** 2 / (2 * r)


def effective_distance(point: PolarPoint) -> float:
    """``r / cos^2(theta)``; infinite only at endfire, which is rejected."""
    c2 = np.cos(point.angle) ** 2
    if abs(point.angle) >= np.pi / 2 or c2 == 0.0:
        raise ValueError("effective distance is undefined at endfire (|theta| = pi/2)")
    return point.distance / c2


def far_field_steering(geom: ArrayGeometry, sin_theta, freq: float) -> np.ndarray:
    """Far-field steering vector(s) ``a(theta, f)``.

    ``sin_theta`` may be a scalar (returns shape ``(N,)``) or a 1-D array of
    K directions (returns ``(N, K)``, one atom per column).
    """
    k = 2 * np.pi * freq / SPEED_OF_LIGHT
    s = np.asarray(sin_theta, dtype=float)
    phase = np.multiply.outer(geom.offsets(), s)
    # +j: the path-length difference r^(n) - r starts at -(n - 1) d sin(theta)
    return np.exp(1j * k * phase) / np.sqrt(geom.n_antennas)


def near_field_profile(geom: ArrayGeometry, mu, freq: float) -> np.ndarray:
    """Unit-modulus quadratic phase profile ``b(mu, f)``.

    ``mu = inf`` gives the all-ones vector. Arrays of ``mu`` give one column
    per entry.
    """
    k = 2 * np.pi * freq / SPEED_OF_LIGHT
    inv_mu = 1.0 / np.asarray(mu, dtype=float)
    x2 = geom.offsets() ** 2 / 2
    return np.exp(-1j * k * np.multiply.outer(x2, inv_mu))


def steering_taylor_matrix(geom: ArrayGeometry, sin_theta, mu, freq: float) -> np.ndarray:
    """Column-stacked ``a(theta_k, f) * b(mu_k, f)`` for paired arrays."""
    s = np.atleast_1d(np.asarray(sin_theta, dtype=float))
    m = np.broadcast_to(np.asarray(mu, dtype=float), s.shape)
    return far_field_steering(geom, s, freq) * near_field_profile(geom, m, freq)


def steering_exact(geom: ArrayGeometry, point: PolarPoint, freq: float) -> np.ndarray:
    """Spherical-wavefront steering vector using exact element distances."""
    if not freq > 0:
        raise ValueError("frequency must be positive")
    x = geom.offsets()
    r = point.distance
    # r^(n) - r without cancellation at large r
    dr = x * (x - 2 * r * point.sin_angle) / (np.sqrt(r**2 + x**2 - 2 * r * x * point.sin_angle) + r)
    return np.exp(-2j * np.pi * freq / SPEED_OF_LIGHT * dr) / np.sqrt(geom.n_antennas)


def steering_taylor(geom: ArrayGeometry, point: PolarPoint, freq: float) -> np.ndarray:
    """Near-field steering vector under the Fresnel approximation."""
    if not freq > 0:
        raise ValueError("frequency must be positive")
    return far_field_steering(geom, point.sin_angle, freq) * near_field_profile(
        geom, effective_distance(point), freq
    )


def virtual_location(point: PolarPoint, f_p: float, f_c: float) -> VirtualPoint:
    """Map a physical location at subcarrier ``f_p`` to its carrier-frequency twin.

    The Taylor steering vector of ``point`` at ``f_p`` equals the Taylor
    steering vector of the returned virtual point at ``f_c``.
    """
    eta = f_p / f_c
    s = np.sin(point.angle)
    s_virtual = eta * s
    if abs(s_virtual) > 1:
        raise ValueError(
            f"no virtual location: |(f_p/f_c) * sin(theta)| = {abs(s_virtual):.6f} > 1 "
            f"(f_p={f_p:g} Hz, theta={point.angle:.6f} rad); the beam aliases at this subcarrier"
        )
    if eta == 1.0:
        return VirtualPoint(point.distance, float(s), 1.0)
    r_virtual = point.distance * (1 - s_virtual**2) / (eta * (1 - s**2))
    return VirtualPoint(float(r_virtual), float(s_virtual), float(eta))


def fresnel_distance(geom: ArrayGeometry) -> float:
    return 0.5 * np.sqrt(geom.aperture**3 / geom.carrier_wavelength)


def rayleigh_distance(geom: ArrayGeometry) -> float:
    return 2 * geom.aperture**2 / geom.carrier_wavelength
