"""Static SVG figures derived from result tables (CSV stays the source of truth)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns give identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "nfce"
_SVG_META = {"Date": None}

_LABELS = {"ls": "LS", "nf_somp": "NF-SOMP", "sc_pcsbl": "SC-PCSBL", "pcsbl_2d": "2D-PCSBL"}
_MARKERS = {"ls": "s", "nf_somp": "^", "sc_pcsbl": "o", "pcsbl_2d": "*"}


def plot_sweep(table, path, xlabel: str) -> None:
    """One line per method: x = axis value, y = linear-domain mean NMSE in dB."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = np.asarray(table.axis_values, dtype=float)
    for m in table.methods:
        ax.plot(x, table.mean_db(m), marker=_MARKERS.get(m, "o"), label=_LABELS.get(m, m))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_sparsity_map(smap, path) -> None:
    """Heatmap of ``|B|`` with the predicted drift line of each path overlaid."""
    N, P = smap.magnitude.shape
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(smap.magnitude, aspect="auto", origin="lower", cmap="viridis",
                   extent=(0.5, P + 0.5, -0.5, N - 0.5), interpolation="nearest")
    cols = np.arange(1, P + 1)
    for l, line in enumerate(smap.drift_index):
        ax.plot(cols, line, "w--", lw=0.8, label="predicted drift" if l == 0 else None)
    ax.set_xlabel("subcarrier index p")
    ax.set_ylabel("beamspace index")
    ax.legend(loc="upper right", fontsize="small")
    fig.colorbar(im, ax=ax, label="|B|")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
