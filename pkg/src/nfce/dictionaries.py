"""Beamspace dictionaries and sparse transforms.

Three kinds are provided:

* ``modified_dft`` - ``diag(b(mu_bar, f)) @ DFT``, unitary, used as the
  common dictionary for every subcarrier;
* ``freq_dft`` - the same construction evaluated at a subcarrier frequency;
* ``polar`` - the overcomplete angle/distance grid used by the SOMP baseline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ArrayGeometry,
    far_field_steering,
    fresnel_distance,
    near_field_profile,
    steering_taylor_matrix,
)


@dataclass(frozen=True)
class Dictionary:
    matrix: np.ndarray
    kind: str
    sin_theta: np.ndarray
    distance: np.ndarray
    freq: float
    mu_bar: float | None = None

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_unitary(self) -> bool:
        return self.kind in ("modified_dft", "freq_dft")


@dataclass(frozen=True)
class SparseCoefficients:
    matrix: np.ndarray
    dictionary: Dictionary


def dft_angle_grid(N: int) -> np.ndarray:
    """Sines of the critically sampled DFT directions, ``(2n - 1 - N) / N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1)
    return (2 * n - 1 - N) / N


def build_modified_dft(geom: ArrayGeometry, mu_bar: float, freq: float | None = None, *, kind="modified_dft"):
    """Unitary modified-DFT dictionary at ``freq`` (carrier by default).

    The angular grid is uniform in spatial frequency at ``freq``: atom ``n``
    steers to ``sin(theta) = (2n - 1 - N) / N * f_c / freq``, so the far-field
    part is the plain N-point DFT at every frequency and the dictionary stays
    unitary.
    """
    if not (mu_bar > 0):
        raise ValueError(f"mu_bar must be positive or inf, got {mu_bar!r}")
    freq = geom.carrier_freq if freq is None else float(freq)
    sin_grid = dft_angle_grid(geom.n_antennas) * (geom.carrier_freq / freq)
    D = far_field_steering(geom, sin_grid, freq)
    b = near_field_profile(geom, mu_bar, freq)
    return Dictionary(
        matrix=b[:, None] * D,
        kind=kind,
        sin_theta=sin_grid,
        distance=np.full(geom.n_antennas, np.inf),
        freq=freq,
        mu_bar=float(mu_bar),
    )


def build_freq_dfts(geom: ArrayGeometry, mu_bar: float, subcarrier_freqs) -> list:
    return [build_modified_dft(geom, mu_bar, f, kind="freq_dft") for f in np.atleast_1d(subcarrier_freqs)]


def polar_ring_scale(geom: ArrayGeometry) -> float:
    """``Z = N^2 d^2 / (2 lambda_c)``, the distance unit of the polar rings."""
    return geom.n_antennas**2 * geom.spacing**2 / (2 * geom.carrier_wavelength)


def build_polar_dictionary(geom: ArrayGeometry, r_min: float | None = None, S: int | None = None) -> Dictionary:
    """Angle/distance grid: ring 0 is far field, ring ``s`` sits at ``Z cos^2(theta) / s``.

    Atoms are ring-major: column ``s * N + n`` is grid angle ``n`` on ring ``s``.
    ``S`` defaults to ``min(ceil(Z / r_min) + 1, 8)``.
    """
    Z = polar_ring_scale(geom)
    if S is None:
        if r_min is None:
            raise ValueError("give either S or r_min")
        S = min(math.ceil(Z / r_min) + 1, 8)
    if S < 1:
        raise ValueError("S must be >= 1")
    N = geom.n_antennas
    sin_grid = dft_angle_grid(N)
    cos2 = 1 - sin_grid**2
    rings = np.arange(S)
    # ring s has effective distance mu = r / cos^2 = Z / s, independent of angle
    mu = np.where(rings == 0, np.inf, Z / np.maximum(rings, 1))
    sin_all = np.tile(sin_grid, S)
    mu_all = np.repeat(mu, N)
    dist_all = np.where(np.isinf(mu_all), np.inf, mu_all * np.tile(cos2, S))
    if S > 1 and Z / (S - 1) < fresnel_distance(geom):
        warnings.warn(
            f"innermost polar ring ({Z / (S - 1):.3f} m at broadside) is inside the Fresnel distance",
            stacklevel=2,
        )
    A = steering_taylor_matrix(geom, sin_all, mu_all, geom.carrier_freq)
    return Dictionary(A, "polar", sin_all, dist_all, geom.carrier_freq)


def transform(H: np.ndarray, dictionary: Dictionary) -> SparseCoefficients:
    if not dictionary.is_unitary:
        raise ValueError(f"transform needs a square unitary dictionary, got kind {dictionary.kind!r}")
    return SparseCoefficients(dictionary.matrix.conj().T @ H, dictionary)


def inverse_transform(coeffs, dictionary: Dictionary | None = None) -> np.ndarray:
    if isinstance(coeffs, SparseCoefficients):
        dictionary = coeffs.dictionary if dictionary is None else dictionary
        coeffs = coeffs.matrix
    if dictionary is None:
        raise ValueError("no dictionary given")
    return dictionary.matrix @ coeffs


def sparsity_concentration(B: np.ndarray, energy_fraction: float = 0.95) -> np.ndarray:
    """Per column, the fewest largest-magnitude entries holding ``energy_fraction`` of its energy."""
    if not 0 < energy_fraction < 1:
        raise ValueError("energy_fraction must lie in (0, 1)")
    B = np.asarray(B)
    squeeze = B.ndim == 1
    E = np.abs(B.reshape(B.shape[0], -1)) ** 2
    E = -np.sort(-E, axis=0)
    cum = np.cumsum(E, axis=0)
    total = cum[-1]
    k = np.zeros(E.shape[1], dtype=int)
    nz = total > 0
    # small relative slack so that exact fractions (e.g. 0.5 of a flat column) are not missed to rounding
    k[nz] = np.argmax(cum[:, nz] >= energy_fraction * total[nz] * (1 - 1e-12), axis=0) + 1
    return k[0] if squeeze else k


def energy_support(B: np.ndarray, energy_fraction: float = 0.95) -> np.ndarray:
    """Boolean mask of each column's ``energy_fraction`` support (ties broken by index)."""
    B = np.asarray(B)
    k = np.atleast_1d(sparsity_concentration(B.reshape(B.shape[0], -1), energy_fraction))
    E = np.abs(B.reshape(B.shape[0], -1)) ** 2
    order = np.argsort(-E, axis=0, kind="stable")
    mask = np.zeros(E.shape, dtype=bool)
    for p in range(E.shape[1]):
        mask[order[: k[p], p], p] = True
    return mask.reshape(B.shape)


def mutual_coherence(A: np.ndarray) -> float:
    """Largest off-diagonal normalised inner product between columns."""
    A = A / np.linalg.norm(A, axis=0)
    G = np.abs(A.conj().T @ A)
    np.fill_diagonal(G, 0)
    return float(G.max())
