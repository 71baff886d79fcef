"""Frequency-domain operators of the sampled receive chain.

The chain is: periodic transmit spectrum (``k_total`` harmonics), delay and
Doppler shift, receive filter evaluated at the shifted harmonics, aliasing of
the harmonics onto ``n_samples`` frequency bins, and additive filtered noise.
All operators are small dense matrices or diagonals in the centered index
convention (harmonics ``-k_total/2 .. k_total/2-1``, bins ``-n_samples/2 ..
n_samples/2-1``, sample times ``n * t_s`` for centered ``n``).

Off-grid values of the receive filter are defined by trigonometric
interpolation of its harmonic samples with the boundary tap split evenly
between ``+-k_total/2``.  That convention reproduces constants and the
on-grid samples exactly, keeps the interpolant real for real coefficient
vectors, and for a single unit coefficient reduces to the classical periodic
Dirichlet kernel ``sin(pi x) / (k_total tan(pi x / k_total))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import (
    DopplerOutOfRange,
    FactorizationFailure,
    LengthMismatch,
    NonPositiveInput,
    SingularCovariance,
)
from .model import AliasPartition, SystemConfig

_SINGULAR_RTOL = 1e-15


def dft_matrix(n):
    """Unitary DFT matrix in the centered convention (symmetric index range)."""
    idx = np.arange(-(n // 2), n - n // 2)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


class OperatorBundle:
    """Precomputed operators and caches for one system configuration."""

    def __init__(self, config: SystemConfig):
        self.config = config
        self.partition = AliasPartition.from_config(config)
        k, n = config.k_total, config.n_samples
        self.harmonics = np.arange(-(k // 2), k // 2)
        self.bins = np.arange(-(n // 2), n // 2)
        self.group_index = self.partition.group_of_harmonic()
        # Extended tap index grid (boundary tap split between +-k/2).
        self.tap_index = np.arange(-(k // 2), k // 2 + 1)
        self._fold_fast = (k // n) % 2 == 1
        self._a = None
        self._w = None
        self._tap_synthesis = None
        self._shift_basis = None

    # -- aliasing -----------------------------------------------------------

    @property
    def a(self):
        """Aliasing matrix (n_samples, k_total) of zeros and ones."""
        if self._a is None:
            k, n = self.config.k_total, self.config.n_samples
            a = np.zeros((n, k))
            a[self.group_index, np.arange(k)] = 1.0
            a.flags.writeable = False
            self._a = a
        return self._a

    def fold(self, x):
        """Apply the aliasing matrix along the last axis."""
        k, n = self.config.k_total, self.config.n_samples
        x = np.asarray(x)
        if self._fold_fast:
            return x.reshape(x.shape[:-1] + (k // n, n)).sum(axis=-2)
        return x @ self.a.T

    # -- DFT ----------------------------------------------------------------

    @property
    def w(self):
        if self._w is None:
            w = dft_matrix(self.config.n_samples)
            w.flags.writeable = False
            self._w = w
        return self._w

    # -- receive-filter interpolation ----------------------------------------

    def taps(self, h):
        """Extended interpolation taps (k_total + 1,) of a coefficient vector."""
        h = _as_spectrum(h, self.config.k_total)
        if self._tap_synthesis is None:
            k = self.config.k_total
            m = np.arange(-(k // 2), k // 2)
            synth = np.exp(2j * np.pi * np.outer(m, self.harmonics) / k) / k
            synth.flags.writeable = False
            self._tap_synthesis = synth
        c = self._tap_synthesis @ h
        ext = np.empty(self.config.k_total + 1, dtype=complex)
        ext[1:-1] = c[1:]
        ext[0] = 0.5 * c[0]
        ext[-1] = 0.5 * c[0]
        return ext

    def shifted_spectrum(self, h, nu, with_derivative=False):
        """Receive filter at the Doppler-shifted harmonics, optionally with
        its Doppler derivative.  ``nu`` may be scalar or 1-D."""
        nu_arr = np.atleast_1d(np.asarray(nu, dtype=float))
        if np.any(np.abs(nu_arr) >= 0.5 * self.config.f_0):
            raise DopplerOutOfRange(
                f"|nu| must stay below f_0/2 = {0.5 * self.config.f_0:g} Hz"
            )
        if self._shift_basis is None:
            k = self.config.k_total
            basis = np.exp(-2j * np.pi * np.outer(self.harmonics, self.tap_index) / k)
            basis.flags.writeable = False
            self._shift_basis = basis
        c = self.taps(h)
        t_b = self.config.t_0 / self.config.k_total
        phase = np.exp(-2j * np.pi * np.outer(nu_arr, self.tap_index) * t_b)
        vals = (phase * c) @ self._shift_basis.T
        if np.isscalar(nu) or np.ndim(nu) == 0:
            vals = vals[0]
        if not with_derivative:
            return vals
        dmod = phase * (c * (-2j * np.pi * self.tap_index * t_b))
        dvals = dmod @ self._shift_basis.T
        if np.isscalar(nu) or np.ndim(nu) == 0:
            dvals = dvals[0]
        return vals, dvals


@lru_cache(maxsize=16)
def get_bundle(config: SystemConfig) -> OperatorBundle:
    return OperatorBundle(config)


def _as_spectrum(x, k_total):
    x = np.asarray(x, dtype=complex)
    if x.shape != (k_total,):
        raise LengthMismatch(f"expected spectrum of length {k_total}, got {x.shape}")
    return x


def aliasing_matrix(config: SystemConfig):
    """0/1 matrix folding the harmonic grid onto the bin grid.

    Row ``q`` selects exactly the harmonics of alias group ``q``; each column
    holds a single one, so the rows partition the harmonic set.
    """
    return get_bundle(config).a


def delay_matrix(tau, config: SystemConfig, with_derivative=False):
    """Diagonal of the unitary delay operator, ``exp(-j k omega_0 tau)``.

    Returns the (k_total,) diagonal; with ``with_derivative`` also the
    elementwise derivative with respect to the delay.
    """
    bundle = get_bundle(config)
    phases = np.exp(-1j * bundle.harmonics * config.omega_0 * tau)
    if not with_derivative:
        return phases
    return phases, (-1j * bundle.harmonics * config.omega_0) * phases


def doppler_matrices(nu, config: SystemConfig, with_derivative=False):
    """Doppler modulation in time and in the sampled frequency domain.

    Returns ``(delta, delta_tilde)`` where ``delta`` is the (n_samples,)
    diagonal ``exp(j 2 pi nu n t_s)`` over centered sample index ``n`` and
    ``delta_tilde = W diag(delta) W^H`` its unitary frequency-domain image.
    With ``with_derivative`` two extra entries give the derivatives in nu.
    """
    bundle = get_bundle(config)
    w = bundle.w
    times = bundle.bins * config.t_s
    delta = np.exp(2j * np.pi * nu * times)
    delta_tilde = (w * delta) @ w.conj().T
    if not with_derivative:
        return delta, delta_tilde
    d_delta = (2j * np.pi * times) * delta
    d_delta_tilde = (w * d_delta) @ w.conj().T
    return delta, delta_tilde, d_delta, d_delta_tilde


def shifted_receive_spectrum(h, nu, config: SystemConfig, with_derivative=False):
    """Receive filter evaluated at the Doppler-shifted harmonic frequencies.

    The filter is known by its on-grid coefficients ``h``; off-grid values
    come from the periodic trigonometric interpolant (see module docstring).
    Raises :class:`DopplerOutOfRange` if ``|nu| >= f_0 / 2``.
    """
    return get_bundle(config).shifted_spectrum(h, nu, with_derivative)


def received_signal(theta, gamma, g, h, config: SystemConfig):
    """Noise-free received samples for parameters ``theta = (tau, nu)``.

    Returns ``(v, v_tilde)``: the length-``n_samples`` time-domain samples
    and their unitary DFT image divided by ``sqrt(n_samples)`` (the
    normalized bin spectrum).  Both are bit-reproducible for fixed inputs.
    """
    tau, nu = float(theta[0]), float(theta[1])
    bundle = get_bundle(config)
    g = _as_spectrum(g, config.k_total)
    h_nu = bundle.shifted_spectrum(h, nu)
    phases = delay_matrix(tau, config)
    folded = bundle.fold(phases * (g * h_nu))
    delta = np.exp(2j * np.pi * nu * bundle.bins * config.t_s)
    v = np.sqrt(config.n_samples) * gamma * (delta * (bundle.w.conj().T @ folded))
    v_tilde = (bundle.w @ v) / np.sqrt(config.n_samples)
    return v, v_tilde


@dataclass
class NoiseModel:
    """Covariance of the filtered, sampled noise in both domains.

    ``omega`` is the diagonal of ``r_tilde``; for the circulant model the
    frequency-domain covariance is exactly diagonal and equals
    ``(n_0 / t_s) * fold(|h|^2)``.
    """

    kind: str
    n_0: float
    r_eta: np.ndarray
    r_tilde: np.ndarray
    omega: np.ndarray
    _cho: object = None

    def solve_freq(self, x):
        """Apply the inverse frequency-domain covariance along the last axis."""
        if self._cho is None:
            return x / self.omega
        return scipy.linalg.cho_solve(self._cho, np.asarray(x).T).T

    def solve_time(self, x, w):
        """Apply the inverse time-domain covariance along the last axis.

        Uses the DFT factorization ``r_eta = w^H r_tilde w``, so only the
        frequency-domain solve is ever carried out.
        """
        return self.solve_freq(np.asarray(x) @ w.T) @ w.conj()


def noise_covariance(h, n_0, config: SystemConfig, kind="circulant"):
    """Noise covariance after the receive filter and sampler.

    With ``kind='circulant'`` the underlying noise spectrum is periodized on
    the harmonic grid, making the time-domain covariance circulant and the
    frequency-domain covariance exactly diagonal.  ``kind='toeplitz'``
    instead band-limits the interpolated filter response to the pre-filter
    band, giving a Toeplitz covariance whose frequency image is only
    approximately diagonal.
    """
    if n_0 <= 0:
        raise NonPositiveInput("n_0 must be strictly positive for a noise model")
    bundle = get_bundle(config)
    h = _as_spectrum(h, config.k_total)
    n = config.n_samples
    power = np.abs(h) ** 2
    omega = (n_0 / config.t_s) * bundle.fold(power).real
    if omega.max() <= 0 or omega.min() <= _SINGULAR_RTOL * omega.max():
        raise SingularCovariance(
            "the folded receive-filter power vanishes on at least one bin"
        )
    w = bundle.w
    if kind == "circulant":
        lags = np.arange(n)
        r_col = n_0 * config.f_0 * (
            np.exp(2j * np.pi * np.outer(lags, bundle.harmonics) / n) @ power
        )
        r_eta = scipy.linalg.circulant(r_col)
        r_tilde = np.diag(omega).astype(complex)
        return NoiseModel("circulant", n_0, r_eta, r_tilde, omega)
    if kind == "toeplitz":
        c = bundle.taps(h)
        # Linear tap autocorrelation; entry z + k_total holds
        # sum_m c[m] conj(c[m - z]) for lag z in -k_total .. k_total.
        ac = np.correlate(c, c, mode="full")
        z = np.arange(-config.k_total, config.k_total + 1)
        b_total = config.k_total * config.f_0
        p = np.arange(n)
        r_first = n_0 * b_total * (
            np.sinc(p[:, None] * (config.k_total / n) - z[None, :]) @ ac
        )
        r_eta = scipy.linalg.toeplitz(r_first)
        r_tilde = w @ r_eta @ w.conj().T
        omega_t = np.diag(r_tilde).real.copy()
        try:
            cho = scipy.linalg.cho_factor(r_tilde)
        except scipy.linalg.LinAlgError as exc:
            raise FactorizationFailure(f"covariance not positive definite: {exc}")
        return NoiseModel("toeplitz", n_0, r_eta, r_tilde, omega_t, cho)
    raise ValueError(f"unknown noise model kind {kind!r}")
