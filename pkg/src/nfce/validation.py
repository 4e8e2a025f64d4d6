"""Built-in invariant suite run by ``nfce validate``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import sample_paths, subcarrier_frequencies, synthesize_channel
from .config import PcsblParams, SystemConfig
from .dictionaries import build_freq_dfts, build_modified_dft, inverse_transform, transform
from .geometry import (
    PolarPoint,
    exact_distance,
    far_field_steering,
    fresnel_distance,
    near_field_profile,
    steering_taylor,
    taylor_distance,
    virtual_location,
)
from .measurement import complex_normal, generate_precoder, sensing_matrix
from .recovery import pcsbl_2d, pcsbl_core, somp


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass", "fail" or "warn"
    detail: str


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def check_unitarity(cfg: SystemConfig, rng) -> Check:
    geom = cfg.geometry
    dicts = [build_modified_dft(geom, cfg.resolved_mu_bar)]
    dicts += build_freq_dfts(geom, cfg.resolved_mu_bar, subcarrier_frequencies(cfg))
    err = max(np.max(np.abs(d.matrix.conj().T @ d.matrix - np.eye(cfg.N))) for d in dicts)
    return Check("dictionary unitarity", _status(err < 1e-10), f"max |D^H D - I| = {err:.2e}")


def check_virtual_mapping(cfg: SystemConfig, rng, n: int = 300) -> Check:
    geom = cfg.geometry
    freqs = subcarrier_frequencies(cfg)
    worst, used = 0.0, 0
    while used < n:
        p = PolarPoint(rng.uniform(cfg.r_min, cfg.r_max), rng.uniform(-np.pi / 2 + cfg.angle_clip,
                                                                      np.pi / 2 - cfg.angle_clip))
        f = freqs[rng.integers(cfg.P)]
        if abs(f / cfg.f_c * p.sin_angle) > 1:
            continue
        v = virtual_location(p, f, cfg.f_c)
        lhs = steering_taylor(geom, p, f)
        rhs = far_field_steering(geom, v.sin_angle, cfg.f_c) * near_field_profile(geom, v.effective_distance, cfg.f_c)
        worst = max(worst, float(np.max(np.abs(np.angle(lhs * rhs.conj())))))
        used += 1
    return Check("virtual-location phase identity", _status(worst < 1e-9), f"max phase error {worst:.2e} rad")


def check_taylor_bound(cfg: SystemConfig, rng, n: int = 300) -> Check:
    geom = cfg.geometry
    idx = np.arange(1, cfg.N + 1)
    k = 2 * np.pi / geom.carrier_wavelength
    worst = 0.0
    for _ in range(n):
        p = PolarPoint(rng.uniform(cfg.r_min, cfg.r_max), rng.uniform(-np.pi / 2 + cfg.angle_clip,
                                                                      np.pi / 2 - cfg.angle_clip))
        worst = max(worst, k * float(np.max(np.abs(taylor_distance(geom, p, idx) - exact_distance(geom, p, idx)))))
    detail = f"max phase error {worst:.3f} rad over r in [{cfg.r_min:g}, {cfg.r_max:g}] m (bound pi/8)"
    if cfg.r_min < fresnel_distance(geom):
        return Check("Taylor phase bound", "warn", detail + "; r_min is below the Fresnel distance")
    return Check("Taylor phase bound", _status(worst <= np.pi / 8), detail)


def check_parseval(cfg: SystemConfig, rng) -> Check:
    H = synthesize_channel(sample_paths(cfg, rng), cfg).H
    D = build_modified_dft(cfg.geometry, cfg.resolved_mu_bar)
    B = transform(H, D)
    rt = np.linalg.norm(inverse_transform(B) - H) / np.linalg.norm(H)
    pv = abs(np.linalg.norm(B.matrix) - np.linalg.norm(H)) / np.linalg.norm(H)
    return Check("Parseval and round trip", _status(rt < 1e-10 and pv < 1e-12),
                 f"round trip {rt:.1e}, energy {pv:.1e}")


def _small_problem(cfg: SystemConfig, rng):
    T = max(4, min(cfg.T, cfg.N - 1))
    P = min(cfg.P, 4)
    Phi = sensing_matrix(generate_precoder(T, cfg.N, rng, cfg.resolved_precoder_variance),
                         build_modified_dft(cfg.geometry, cfg.resolved_mu_bar))
    Y = complex_normal(rng, (T, P))
    return Phi, Y


def check_pcsbl_degenerate(cfg: SystemConfig, rng) -> Check:
    Phi, Y = _small_problem(cfg, rng)
    s2 = 0.1 * float(np.mean(np.abs(Y) ** 2))
    params = PcsblParams(kappa=0.0, max_iters=60)
    B = pcsbl_2d(Y, Phi, params, noise_var=s2).B_hat
    err = max(float(np.max(np.abs(B[:, p] - pcsbl_core(Y[:, p], Phi, params, noise_var=s2)[0])))
              for p in range(Y.shape[1]))
    return Check("2D-PCSBL at kappa=0 equals per-column PCSBL", _status(err < 1e-10), f"max difference {err:.1e}")


def check_somp_planted(cfg: SystemConfig, rng) -> Check:
    T, M = 48, 160
    Phi = complex_normal(rng, (T, M), 1 / T)
    support = sorted(rng.choice(M, 3, replace=False).tolist())
    Y = Phi[:, support] @ complex_normal(rng, (3, 6))
    res = somp(Y, Phi, 10)
    ok = sorted(res.support.tolist()) == support and res.residuals[-1] < 1e-8 * res.residuals[0]
    return Check("SOMP planted support", _status(ok), f"found {sorted(res.support.tolist())}, planted {support}")


def check_sbl_planted(cfg: SystemConfig, rng, trials: int = 5) -> Check:
    T, M, k = 64, 128, 5
    hits = 0
    for _ in range(trials):
        Phi = complex_normal(rng, (T, M), 1 / T)
        x = np.zeros(M, dtype=complex)
        support = rng.choice(M, k, replace=False)
        x[support] = np.exp(2j * np.pi * rng.uniform(size=k))
        clean = Phi @ x
        s2 = float(np.sum(np.abs(clean) ** 2)) * 1e-3 / T
        m, _, _ = pcsbl_core(clean + complex_normal(rng, T, s2), Phi, PcsblParams(kappa=0.0), noise_var=s2)
        hits += set(np.argsort(-np.abs(m))[:k]) == set(support)
    return Check("SBL planted 5-sparse support at 30 dB", _status(hits == trials), f"{hits}/{trials} exact")


CHECKS = (
    check_unitarity,
    check_virtual_mapping,
    check_taylor_bound,
    check_parseval,
    check_pcsbl_degenerate,
    check_somp_planted,
    check_sbl_planted,
)


def run_validation(cfg: SystemConfig) -> list:
    """Run every check with its own child stream of ``cfg.base_seed``."""
    streams = np.random.SeedSequence(cfg.base_seed).spawn(len(CHECKS))
    return [check(cfg, np.random.default_rng(s)) for check, s in zip(CHECKS, streams)]
