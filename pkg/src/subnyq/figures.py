"""Figure rendering for the report path.

Each function draws one self-contained matplotlib figure next to the CSV
it visualizes and returns the written path.  The Agg backend is forced so
rendering works headless; every figure is closed after saving so long
sweeps do not accumulate state.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .estimator import AmbiguitySurface, McReport
from .freqops import get_bundle
from .model import SystemConfig
from .optimizer import DesignResult, SweepResult

__all__ = [
    "design_figure",
    "pareto_figure",
    "simulate_figure",
    "ambiguity_figure",
    "spectra_figure",
]


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def design_figure(result: DesignResult, config: SystemConfig, path):
    """Transmit power spectrum, receive magnitude and objective trace."""
    freq = get_bundle(config).harmonics * config.f_0
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    axes[0].fill_between(freq / 1e6, np.abs(result.transmit) ** 2, step="mid")
    axes[0].set_xlabel("frequency (MHz)")
    axes[0].set_ylabel("transmit power per harmonic")
    axes[1].plot(freq / 1e6, np.abs(result.receive), drawstyle="steps-mid")
    axes[1].set_xlabel("frequency (MHz)")
    axes[1].set_ylabel("receive magnitude")
    axes[2].plot(result.objective_trace, marker=".")
    axes[2].set_xlabel("half-step")
    axes[2].set_ylabel("objective")
    title = "alternating design"
    if result.alpha is not None:
        title += f" (alpha={result.alpha:g})"
    fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def pareto_figure(sweep: SweepResult, path):
    """Delay and Doppler gains over the scalarization sweep."""
    alphas = np.asarray(sweep.alphas)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(alphas, sweep.gains[:, 0], marker="o", label="delay gain (dB)")
    ax.plot(alphas, sweep.gains[:, 1], marker="s", label="Doppler gain (dB)")
    ax.plot(alphas, sweep.gains[:, 2], linestyle="--", alpha=0.6,
            label="delay gain, approx (dB)")
    ax.plot(alphas, sweep.gains[:, 3], linestyle="--", alpha=0.6,
            label="Doppler gain, approx (dB)")
    if sweep.best_index is not None:
        ax.axvline(alphas[sweep.best_index], color="k", linestyle=":",
                   label="best joint gain")
    ax.set_xlabel("delay weight")
    ax.set_ylabel("gain over reference (dB)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def simulate_figure(report: McReport, path):
    """Empirical NMSE curves against the normalized bound."""
    psnr = np.asarray(report.psnr_grid)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(psnr, report.nmse_tau, marker="o", label="NMSE delay")
    ax.semilogy(psnr, report.nmse_nu, marker="s", label="NMSE Doppler")
    ax.semilogy(psnr, report.bcrlb_tau, linestyle="--",
                label="bound, delay")
    ax.semilogy(psnr, report.bcrlb_nu, linestyle="--",
                label="bound, Doppler")
    ax.set_xlabel("per-Hz SNR (dB-Hz)")
    ax.set_ylabel("normalized MSE")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def ambiguity_figure(surface: AmbiguitySurface, path):
    """Heat map of a delay/Doppler ambiguity surface."""
    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    mesh = ax.pcolormesh(surface.tau_grid * 1e9, surface.nu_grid / 1e3,
                         surface.values.T, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=f"{surface.kind} ambiguity")
    ax.set_xlabel("delay (ns)")
    ax.set_ylabel("Doppler (kHz)")
    fig.tight_layout()
    return _save(fig, path)


def spectra_figure(spectra: dict, config: SystemConfig, path):
    """Magnitude of several named spectra on the harmonic grid."""
    freq = get_bundle(config).harmonics * config.f_0
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, values in spectra.items():
        ax.plot(freq / 1e6, np.abs(np.asarray(values, dtype=complex)),
                label=name, drawstyle="steps-mid")
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("magnitude")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
