"""Reference transmit waveforms and receive filters.

Two classic transmit references are provided on the harmonic grid: a
band-limited pseudo-random coded pulse train (rectangular chips, +-1 code)
and a linear frequency-modulated pulse whose spectrum has the closed
Fresnel-integral form.  The receive reference is an ideal lowpass of one
sampling-rate bandwidth.  Transmit spectra are normalized to the configured
power budget; receive filters are left unnormalized because every figure of
merit is invariant to their scale.
"""

from __future__ import annotations

import numpy as np
import scipy.integrate
import scipy.special

from .errors import BandwidthOutOfRange, CodeLengthMismatch
from .freqops import get_bundle
from .model import SystemConfig

# Fixed seed for the default chip code so that the reference system is fully
# reproducible across runs and machines.
DEFAULT_CODE_SEED = 20210607


def fresnel(u):
    """Complex Fresnel integral ``int_0^u exp(j pi a^2 / 2) da``.

    Thin wrapper over the scipy cosine/sine Fresnel pair; works elementwise.
    """
    s, c = scipy.special.fresnel(u)
    return c + 1j * s


def default_code(config: SystemConfig):
    """Deterministic +-1 chip code with one chip per two samples."""
    rng = np.random.default_rng(DEFAULT_CODE_SEED)
    return rng.integers(0, 2, size=config.n_samples // 2) * 2 - 1


def rpc_waveform(config: SystemConfig, code=None):
    """Random-phase-coded reference transmit spectrum.

    ``n_samples / 2`` rectangular chips of width ``2 t_s`` tile one period;
    the chip code defaults to a fixed seeded +-1 sequence.  The spectrum is
    the chip-pulse transform times the code polynomial, truncated to the
    central ``n_samples`` harmonics (ideal pre-filter of one sampling rate),
    and scaled to the configured power budget.
    """
    bundle = get_bundle(config)
    chips = config.n_samples // 2
    if code is None:
        code = default_code(config)
    code = np.asarray(code, dtype=float)
    if code.shape != (chips,):
        raise CodeLengthMismatch(f"expected {chips} chips, got {code.shape}")
    width = 2.0 * config.t_s
    omega = bundle.harmonics * config.omega_0
    with np.errstate(divide="ignore", invalid="ignore"):
        pulse = np.where(omega == 0.0, width, 2.0 * np.sin(omega * width / 2) / omega)
    poly = np.exp(-1j * np.outer(omega, width * np.arange(chips))) @ code
    g = pulse * poly
    in_band = np.abs(bundle.harmonics) < config.n_samples / 2
    # Half-open band: the lower edge harmonic stays, the upper edge is absent
    # from the grid anyway.
    g = np.where(in_band | (bundle.harmonics == -config.n_samples // 2), g, 0.0)
    return g * np.sqrt(config.p_t / np.sum(np.abs(g) ** 2))


def lfm_waveform(config: SystemConfig, duration=None, rate=None):
    """Linear-FM reference transmit spectrum.

    Defaults sweep two thirds of the sampling bandwidth over one full period.
    The spectrum is the closed Fresnel form of a finite chirp; for very small
    time-bandwidth products, where that expression cancels catastrophically,
    the Fourier coefficients are instead integrated numerically.
    """
    bundle = get_bundle(config)
    t_len = config.t_0 if duration is None else float(duration)
    if not 0 < t_len <= config.t_0:
        raise BandwidthOutOfRange("chirp duration must lie in (0, t_0]")
    mu = (4 * np.pi * config.n_samples / (3 * config.t_0 ** 2)
          if rate is None else float(rate))
    if mu <= 0:
        raise BandwidthOutOfRange("chirp rate must be positive")
    omega = bundle.harmonics * config.omega_0
    edge = np.sqrt(mu * t_len ** 2 / (4 * np.pi))
    if edge >= 0.5:
        x = omega / np.sqrt(np.pi * mu)
        g = (np.sqrt(np.pi / mu) * np.exp(-1j * omega ** 2 / (2 * mu))
             * (fresnel(edge - x) + fresnel(edge + x)))
    else:
        g = np.empty(config.k_total, dtype=complex)
        for i, w in enumerate(omega):
            re, _ = scipy.integrate.quad(
                lambda t: np.cos(mu * t ** 2 / 2 - w * t), -t_len / 2, t_len / 2,
                limit=200)
            im, _ = scipy.integrate.quad(
                lambda t: np.sin(mu * t ** 2 / 2 - w * t), -t_len / 2, t_len / 2,
                limit=200)
            g[i] = re + 1j * im
    return g * np.sqrt(config.p_t / np.sum(np.abs(g) ** 2))


def reference_lowpass(config: SystemConfig, cutoff=None):
    """Ideal lowpass receive reference: unit gain inside ``cutoff`` hertz.

    The band is half-open (closed at the negative edge), so the default
    cutoff of one sampling rate passes exactly ``n_samples`` harmonics.
    """
    cutoff = config.f_s if cutoff is None else float(cutoff)
    if not 0 < cutoff <= config.bandwidth:
        raise BandwidthOutOfRange(
            f"cutoff must lie in (0, {config.bandwidth:g}] Hz"
        )
    freq = get_bundle(config).harmonics * config.f_0
    return np.where((freq >= -cutoff / 2) & (freq < cutoff / 2), 1.0, 0.0)


def reference_pair(config: SystemConfig):
    """Default benchmark system: coded pulse train + lowpass receive."""
    return rpc_waveform(config), reference_lowpass(config)
