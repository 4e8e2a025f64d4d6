"""
NMSE versus pilot length
========================

A reduced version of the pilot-length sweep (fewer trials than the shipped
desk config). The ``nfce sweep-pilot`` command runs the same code and
writes CSV, SVG and a manifest.
"""

from nfce.config import desk_config
from nfce.plotting import plot_sweep
from nfce.experiments import sweep_pilot

cfg = desk_config(trials=4, methods=("nf_somp", "sc_pcsbl", "pcsbl_2d"))
table = sweep_pilot(cfg)

#%%
# Linear-domain mean NMSE per pilot length.

for s in table.summary():
    print(f"T={s.axis_value:3.0f} {s.method:9s} {s.nmse_db:7.2f} dB over {s.n_ok} trials")

plot_sweep(table, "demo_nmse_vs_pilot.svg", "pilot length T")
print("wrote demo_nmse_vs_pilot.svg")
