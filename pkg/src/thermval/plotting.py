"""Optional PNG figures rendered next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_temperatures(result, path, t_out=None) -> Path:
    fig, ax = plt.subplots(figsize=(9, 4), constrained_layout=True)
    for name, series in result.zone_temperature.items():
        ax.plot(result.time, series, lw=1.2, label=name)
    if t_out is not None:
        ax.plot(result.time, t_out, "k--", lw=0.8, label="outdoor")
    ax.set_ylabel("air temperature (°C)")
    ax.legend(ncol=3, fontsize=8)
    fig.autofmt_xdate()
    return _save(fig, path)


def plot_shares(result, path) -> Path:
    ranked = result.ranking()
    names = [n for n, _ in ranked][::-1]
    vals = [v for _, v in ranked][::-1]
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(names) + 1.2), constrained_layout=True)
    ax.barh(names, vals, color="tab:blue")
    ax.set_xlabel("share of output variance")
    return _save(fig, path)


def plot_residual(time, res, band: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 3.5), constrained_layout=True)
    ax.axhspan(-band, band, color="tab:green", alpha=0.15, label=f"±{band:g} K")
    ax.plot(time, res, lw=1.0, color="tab:red", label="measured − predicted")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_ylabel("residual (K)")
    ax.legend(fontsize=8)
    fig.autofmt_xdate()
    return _save(fig, path)


def plot_spectrograms(diag, path, top: int = 3) -> Path:
    names = [n for n, _ in diag.ranking[:top]]
    specs = [("residual", diag.residual_spectrogram)] + [(n, diag.input_spectrograms[n]) for n in names]
    fig, axes = plt.subplots(len(specs), 1, figsize=(8, 2.2 * len(specs)), sharex=True,
                             constrained_layout=True)
    for ax, (name, s) in zip(np.atleast_1d(axes), specs):
        ax.pcolormesh(s.times, s.frequencies, s.magnitude.T, shading="nearest")
        ax.set_ylabel("1/h")
        ax.set_title(name, fontsize=9)
    np.atleast_1d(axes)[-1].set_xlabel("slice centre (h)")
    return _save(fig, path)


def plot_fluxes(twin, path) -> Path:
    w = twin.window
    fig, ax = plt.subplots(figsize=(9, 3.5), constrained_layout=True)
    ax.plot(twin.initial.time, twin.initial.window_transmitted_power[w], lw=1, label="predicted, f = 0")
    ax.plot(twin.reference.time, twin.reference.window_transmitted_power[w], lw=1, label="reference")
    ax.set_ylabel(f"{w} transmitted (W)")
    ax.legend(fontsize=8)
    fig.autofmt_xdate()
    return _save(fig, path)
