"""Monte Carlo trials, parameter sweeps and sparsity-map extraction."""

from __future__ import annotations

import functools
import logging
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import PathSet, sample_paths, subcarrier_frequencies, synthesize_channel
from .config import SystemConfig
from .dictionaries import (
    build_freq_dfts,
    build_modified_dft,
    build_polar_dictionary,
    dft_angle_grid,
    energy_support,
    transform,
)
from .geometry import ArrayGeometry
from .measurement import calibrate_noise, generate_precoder, observe, sensing_matrix
from .recovery import NumericalFailure, ls_estimate, pcsbl_2d, sc_pcsbl, somp

log = logging.getLogger(__name__)

NMSE_FLOOR_DB = -300.0


def nmse_linear(H_hat, H) -> float:
    ref = float(np.sum(np.abs(H) ** 2))
    if ref == 0:
        raise ValueError("NMSE is undefined for an all-zero reference channel")
    return float(np.sum(np.abs(np.asarray(H_hat) - H) ** 2)) / ref


def to_db(x: float) -> float:
    if np.isnan(x):
        return float("nan")
    return max(10 * np.log10(x), NMSE_FLOOR_DB) if x > 0 else NMSE_FLOOR_DB


def nmse_db(H_hat, H) -> float:
    """``10 log10(||H_hat - H||^2 / ||H||^2)``, floored at -300 dB."""
    return to_db(nmse_linear(H_hat, H))


@dataclass(frozen=True)
class TrialResult:
    axis_value: float | None
    method: str
    trial: int
    trial_seed: int
    nmse_linear: float
    wallclock_s: float
    iters: int
    status: str = "ok"

    @property
    def nmse_db(self) -> float:
        return to_db(self.nmse_linear)


def derive_seed(base_seed: int, axis_value, trial_index: int) -> int:
    """64-bit child seed from ``(base_seed, axis_value, trial_index)``."""
    bits = struct.unpack("<Q", struct.pack("<d", float(0.0 if axis_value is None else axis_value)))[0]
    words = [base_seed & 0xFFFFFFFF, base_seed >> 32 & 0xFFFFFFFF, bits & 0xFFFFFFFF, bits >> 32, trial_index]
    lo, hi = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return int(lo) | int(hi) << 32


@functools.lru_cache(maxsize=32)
def _common_dictionary(N, f_c, mu_bar):
    return build_modified_dft(ArrayGeometry(N, f_c), mu_bar)


@functools.lru_cache(maxsize=32)
def _freq_dictionaries(N, f_c, mu_bar, freqs):
    return tuple(build_freq_dfts(ArrayGeometry(N, f_c), mu_bar, np.array(freqs)))


@functools.lru_cache(maxsize=32)
def _polar_dictionary(N, f_c, S):
    return build_polar_dictionary(ArrayGeometry(N, f_c), S=S)


def common_dictionary(config: SystemConfig):
    return _common_dictionary(config.N, config.f_c, config.resolved_mu_bar)


def frequency_dictionaries(config: SystemConfig):
    freqs = tuple(float(f) for f in subcarrier_frequencies(config))
    return _freq_dictionaries(config.N, config.f_c, config.resolved_mu_bar, freqs)


def polar_dictionary(config: SystemConfig):
    return _polar_dictionary(config.N, config.f_c, config.resolved_polar_S)


@dataclass(frozen=True)
class TrialData:
    paths: PathSet
    H: np.ndarray
    F: np.ndarray
    Y: np.ndarray
    noise_var: float


def draw_trial(config: SystemConfig, seed: int) -> TrialData:
    """Channel, precoder and noise for one trial, each from its own child stream."""
    s_paths, s_prec, s_noise = np.random.SeedSequence(seed).spawn(3)
    paths = sample_paths(config, np.random.default_rng(s_paths))
    H = synthesize_channel(paths, config).H
    F = generate_precoder(config.T, config.N, np.random.default_rng(s_prec), config.resolved_precoder_variance)
    noise_var = calibrate_noise(H, config.T, config.P, config.snr_db)
    meas = observe(F, H, noise_var, np.random.default_rng(s_noise), snr_db=config.snr_db, seed=seed)
    return TrialData(paths, H, F, meas.Y, noise_var)


def estimate(method: str, config: SystemConfig, data: TrialData):
    if method == "ls":
        return ls_estimate(data.Y, data.F)
    if method == "nf_somp":
        D = polar_dictionary(config)
        Phi = sensing_matrix(data.F, D)
        return somp(
            data.Y, Phi, config.resolved_somp_K(config.T), config.somp_residual_tol,
            noise_var=data.noise_var, dictionary=D,
        )
    if method == "sc_pcsbl":
        return sc_pcsbl(data.Y, data.F, frequency_dictionaries(config), config.pcsbl, noise_var=data.noise_var)
    if method == "pcsbl_2d":
        D = common_dictionary(config)
        return pcsbl_2d(data.Y, sensing_matrix(data.F, D), config.pcsbl, noise_var=data.noise_var, dictionary=D)
    raise ValueError(f"unknown method {method!r}")


def run_trial(config: SystemConfig, seed: int, *, axis_value=None, trial: int = 0) -> list:
    """Run every configured method on one shared measurement.

    Estimator failures (precondition violations, numerical breakdown) become
    NaN rows whose ``status`` carries the error text.
    """
    data = draw_trial(config, seed)
    rows = []
    for method in config.methods:
        t0 = time.perf_counter()
        try:
            res = estimate(method, config, data)
        except (ValueError, NumericalFailure, np.linalg.LinAlgError) as exc:
            rows.append(TrialResult(axis_value, method, trial, seed, float("nan"),
                                    time.perf_counter() - t0, 0, f"error: {exc}"))
            continue
        rows.append(TrialResult(axis_value, method, trial, seed, nmse_linear(res.H_hat, data.H),
                                time.perf_counter() - t0, res.iters_used))
    return rows


@dataclass(frozen=True)
class SummaryRow:
    axis_value: float
    method: str
    nmse_db: float
    mean_db: float
    n_ok: int
    nmse_linear: float = float("nan")


@dataclass
class ResultTable:
    axis: str
    axis_values: tuple
    methods: tuple
    rows: list

    def summary(self) -> list:
        """Per (axis value, method): linear-domain mean NMSE in dB, plus the dB-domain mean."""
        out = []
        for v in self.axis_values:
            for m in self.methods:
                sel = [r.nmse_linear for r in self.rows if r.axis_value == v and r.method == m]
                ok = [x for x in sel if not np.isnan(x)]
                if ok:
                    lin = float(np.mean(ok))
                    mean_db = float(np.mean([to_db(x) for x in ok]))
                else:
                    lin = mean_db = float("nan")
                out.append(SummaryRow(v, m, to_db(lin), mean_db, len(ok), lin))
        return out

    def mean_db(self, method: str) -> np.ndarray:
        lookup = {(s.axis_value, s.method): s.nmse_db for s in self.summary()}
        return np.array([lookup[(v, method)] for v in self.axis_values])


def _sweep(config: SystemConfig, axis: str, values, threads: int = 1) -> ResultTable:
    values = tuple(values)
    if not values:
        raise ValueError("sweep needs at least one axis value")
    tasks = []
    for v in values:
        cfg = config.replace(**{axis: v})
        for t in range(config.trials):
            tasks.append((cfg, derive_seed(config.base_seed, v, t), v, t))

    def work(task):
        cfg, seed, v, t = task
        return run_trial(cfg, seed, axis_value=v, trial=t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = []
        for i, task in enumerate(tasks):
            results.append(work(task))
            if (i + 1) % config.trials == 0:
                log.debug("%s=%s done (%d trials)", axis, task[2], config.trials)
    order = {m: i for i, m in enumerate(config.methods)}
    rows = sorted((r for res in results for r in res),
                  key=lambda r: (values.index(r.axis_value), order[r.method], r.trial))
    return ResultTable(axis, values, config.methods, rows)


def sweep_pilot(config: SystemConfig, T_values=None, threads: int = 1) -> ResultTable:
    return _sweep(config, "T", config.T_values if T_values is None else T_values, threads)


def sweep_snr(config: SystemConfig, snr_values=None, threads: int = 1) -> ResultTable:
    return _sweep(config, "snr_db", config.snr_values if snr_values is None else snr_values, threads)


# --------------------------------------------------------------- sparsity map


@dataclass(frozen=True)
class SparsityMap:
    magnitude: np.ndarray
    B: np.ndarray
    paths: PathSet
    freqs: np.ndarray
    drift_sin: np.ndarray
    drift_index: np.ndarray


def grid_index(N: int, sin_value):
    """Fractional 0-based DFT-grid index of a spatial sine."""
    return (N * np.asarray(sin_value) + N - 1) / 2


def sparsity_map(config: SystemConfig, seed: int | None = None, *, min_separation: float = 0.15,
                 edge_margin: int = 8, max_tries: int = 10_000) -> SparsityMap:
    """``|D_mu^H H|`` for one realization with resolvable, non-aliasing paths.

    Paths are redrawn until every pair of sines differs by ``min_separation``
    and every drift line stays ``edge_margin`` grid bins inside the band edge
    at all subcarriers.
    """
    seed = config.base_seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    freqs = subcarrier_frequencies(config)
    ratio = freqs / config.f_c
    limit = (1 - 2 * edge_margin / config.N) / ratio.max()
    for _ in range(max_tries):
        paths = sample_paths(config, rng)
        s = np.sin(paths.angles)
        gaps = np.abs(s[:, None] - s[None, :])[np.triu_indices(len(s), 1)]
        if np.all(np.abs(s) <= limit) and np.all(gaps >= min_separation):
            break
    else:
        raise ValueError("could not draw well-separated paths; relax min_separation")
    H = synthesize_channel(paths, config).H
    B = transform(H, common_dictionary(config)).matrix
    drift_sin = np.sin(paths.angles)[:, None] * ratio[None, :]
    return SparsityMap(np.abs(B), B, paths, freqs, drift_sin, grid_index(config.N, drift_sin))


def contiguous_runs(mask) -> list:
    """``(start, stop)`` half-open runs of True in a 1-D mask."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    edges = np.flatnonzero(np.diff(m.astype(int)))
    return list(zip(edges[::2], edges[1::2]))


def band_structure(B: np.ndarray, energy_fraction: float = 0.95):
    """Per column, the contiguous runs of the energy support and their energy-weighted centers.

    The beamspace index is periodic, so a run touching both ends is one band;
    its ``start`` is then negative and its center may be too.
    """
    support = energy_support(B, energy_fraction)
    E = np.abs(B) ** 2
    N = B.shape[0]
    out = []
    for p in range(B.shape[1]):
        bands = contiguous_runs(support[:, p])
        if len(bands) > 1 and bands[0][0] == 0 and bands[-1][1] == N:
            bands = [(bands[-1][0] - N, bands[0][1])] + bands[1:-1]
        centers = []
        for a, b in bands:
            idx = np.arange(a, b)
            w = E[idx % N, p]
            centers.append(float(np.sum(idx * w) / np.sum(w)))
        out.append((bands, centers))
    return out
