"""
Pilot observations and the least-squares baseline
=================================================

Every subcarrier is observed through the same T x N random precoder. Least
squares needs at least N pilots; its error then follows the closed form
sigma^2 trace((F^H F)^-1) P / ||H||^2.
"""

import numpy as np

from nfce.channel import sample_paths, synthesize_channel
from nfce.config import desk_config
from nfce.experiments import nmse_db
from nfce.measurement import calibrate_noise, generate_precoder, observe
from nfce.recovery import ls_estimate

cfg = desk_config()
rng = np.random.default_rng(0)
H = synthesize_channel(sample_paths(cfg, rng), cfg).H

#%%
# LS error for increasing pilot lengths at 10 dB, next to the closed form.

for T in (64, 96, 128, 192):
    F = generate_precoder(T, cfg.N, rng)
    s2 = calibrate_noise(H, T, cfg.P, 10.0)
    Y = observe(F, H, s2, rng).Y
    analytic = s2 * np.trace(np.linalg.inv(F.conj().T @ F)).real * cfg.P / np.sum(np.abs(H) ** 2)
    print(f"T={T:3d}: LS {nmse_db(ls_estimate(Y, F).H_hat, H):7.2f} dB, closed form {10 * np.log10(analytic):7.2f} dB")
