"""Small-Doppler approximation of the received model and its information.

Over one coherent period a Doppler offset ``nu`` multiplies the transmit
waveform by a complex exponential, which in the harmonic domain acts as a
spectral convolution.  The exact receive chain treats this effect through
the sampler (see :mod:`subnyq.fim_exact`); here the modulation is instead
applied *before* the receive filter, where it convolves the transmit
coefficients with a sinc kernel offset by ``t_0 * nu``.  The resulting
model is bilinear in the transmit and receive coefficients, which is what
the alternating design steps in :mod:`subnyq.optimizer` exploit: for fixed
receive taps the averaged information objective is a quadratic form in the
transmit spectrum, and for fixed transmit spectrum it splits into
independent Rayleigh quotients, one per alias group.

All information matrices returned here carry ``kind="approx"`` so that
reports can distinguish them from the exact sampler-level results.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import toeplitz

from .errors import ConfigError, LengthMismatch
from .fim_exact import FimResult, _effective_noise
from .freqops import get_bundle
from .model import gauss_hermite_axis

__all__ = [
    "sinc_derivative",
    "doppler_convolution",
    "approx_received_spectrum",
    "fim_approx",
    "efim_approx",
    "transmit_design_form",
    "receive_design_forms",
    "receive_objective",
]


def sinc_derivative(x):
    """Derivative of the normalized sinc, ``d/dx sin(pi x) / (pi x)``.

    Uses the closed form ``(cos(pi x) - sinc(x)) / x`` away from the
    origin and a two-term Taylor series inside ``|x| < 1e-3`` where the
    closed form loses precision to cancellation.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, x)
    direct = (np.cos(np.pi * safe) - np.sinc(safe)) / safe
    series = -(np.pi ** 2 / 3.0) * x * (1.0 - (np.pi * x) ** 2 / 10.0)
    return np.where(small, series, direct)


def doppler_convolution(nu, config, with_derivative=False):
    """Toeplitz operator mixing harmonics under a Doppler offset.

    Entry ``(m, n)`` is ``sinc(t_0 * nu - (m - n))``: a pure tone on
    harmonic ``n`` leaks onto harmonic ``m`` with a sinc weight centred
    ``t_0 * nu`` harmonics up.  At ``nu = 0`` the operator is exactly the
    identity.  With ``with_derivative`` the elementwise derivative with
    respect to ``nu`` is returned as a second matrix.
    """
    k = config.k_total
    lags = np.arange(-(k - 1), k, dtype=float)
    arg = config.t_0 * float(nu) - lags
    vals = np.sinc(arg)
    mat = toeplitz(vals[k - 1:], vals[k - 1::-1])
    if not with_derivative:
        return mat
    dvals = config.t_0 * sinc_derivative(arg)
    return mat, toeplitz(dvals[k - 1:], dvals[k - 1::-1])


def approx_received_spectrum(theta, gamma, g, h, config):
    """Aliased spectrum of the approximate receive model.

    The transmit spectrum is delayed, convolved with the Doppler kernel,
    weighted by the on-grid receive taps, and folded onto the sample bins.
    Coincides exactly with the sampler-level model of
    :func:`subnyq.freqops.received_signal` at ``nu = 0``.
    """
    bundle = get_bundle(config)
    g = np.asarray(g)
    h = np.asarray(h)
    if g.shape != (config.k_total,) or h.shape != (config.k_total,):
        raise LengthMismatch(
            f"expected spectra of length {config.k_total}, "
            f"got {g.shape} and {h.shape}"
        )
    tau, nu = theta
    delayed = np.exp(-1j * config.omega_0 * bundle.harmonics * tau) * g
    return gamma * bundle.fold(h * (doppler_convolution(nu, config) @ delayed))


def _diagonal_noise(h, config, noise):
    """Per-bin noise power, requiring the diagonal (circulant) noise kind."""
    model = _effective_noise(h, config, noise)
    if model.kind != "circulant":
        raise ConfigError(
            "the approximate information requires a circulant noise model "
            f"with a diagonal sample-bin covariance, got kind={model.kind!r}"
        )
    return model.omega


def fim_approx(theta, gamma, g, h, config, noise=None):
    """Information matrix of ``(tau, nu)`` under the approximate model."""
    bundle = get_bundle(config)
    omega = _diagonal_noise(h, config, noise)
    tau, nu = theta
    scaled = config.omega_0 * bundle.harmonics
    t_ramp = np.exp(-1j * scaled * tau)
    d_mat, dd_mat = doppler_convolution(nu, config, with_derivative=True)
    root_omega = np.sqrt(omega)
    b_tau = bundle.fold(h * (d_mat @ (-1j * scaled * t_ramp * g))) / root_omega
    b_nu = bundle.fold(h * (dd_mat @ (t_ramp * g))) / root_omega
    scale = 2.0 * config.n_samples * abs(gamma) ** 2
    j11 = scale * np.vdot(b_tau, b_tau).real
    j12 = scale * np.vdot(b_tau, b_nu).real
    j22 = scale * np.vdot(b_nu, b_nu).real
    return FimResult(np.array([[j11, j12], [j12, j22]]), "approx")


def efim_approx(g, h, prior, config, nodes=None, gamma=1.0, noise=None):
    """Prior average of :func:`fim_approx` on a Gauss-Hermite product grid.

    The delay only enters through diagonal phase ramps, so for each
    Doppler node the whole delay axis is handled with one batched fold.
    """
    bundle = get_bundle(config)
    omega = _diagonal_noise(h, config, noise)
    n = config.quad_nodes if nodes is None else int(nodes)
    taus, w_tau = gauss_hermite_axis(prior.mu_tau, prior.sigma_tau, n)
    nus, w_nu = gauss_hermite_axis(prior.mu_nu, prior.sigma_nu, n)
    scaled = config.omega_0 * bundle.harmonics
    t_ramp = np.exp(-1j * np.outer(taus, scaled))
    dt_ramp = -1j * scaled * t_ramp
    root_omega = np.sqrt(omega)
    acc = np.zeros(3)
    for nu_b, w_b in zip(nus, w_nu):
        d_mat, dd_mat = doppler_convolution(nu_b, config, with_derivative=True)
        b_tau = bundle.fold(h * ((dt_ramp * g) @ d_mat.T)) / root_omega
        b_nu = bundle.fold(h * ((t_ramp * g) @ dd_mat.T)) / root_omega
        acc[0] += w_b * (w_tau @ np.einsum("an,an->a", b_tau.conj(), b_tau).real)
        acc[1] += w_b * (w_tau @ np.einsum("an,an->a", b_tau.conj(), b_nu).real)
        acc[2] += w_b * (w_tau @ np.einsum("an,an->a", b_nu.conj(), b_nu).real)
    scale = 2.0 * config.n_samples * abs(gamma) ** 2
    j11, j12, j22 = scale * acc
    return FimResult(np.array([[j11, j12], [j12, j22]]), "approx", n)


def transmit_design_form(h, prior, config, m_weight, nodes=None, gamma=1.0,
                         noise=None):
    """Matrix whose quadratic form in the transmit spectrum is the averaged
    weighted information trace.

    For fixed receive taps ``h`` and a symmetric weight ``m_weight``, the
    returned Hermitian matrix ``phi`` satisfies
    ``g.conj() @ phi @ g == E[trace(m_weight @ J_approx(theta))]`` with the
    expectation over the Gauss-Hermite product grid of the prior.  The
    separable dependence on the two parameters lets the average factor into
    a Hadamard product of a Doppler-side kernel and a delay-side kernel,
    so the cost is a handful of matrix products per Doppler node rather
    than one per grid point.
    """
    bundle = get_bundle(config)
    omega = _diagonal_noise(h, config, noise)
    m_weight = np.asarray(m_weight, dtype=float)
    n = config.quad_nodes if nodes is None else int(nodes)
    taus, w_tau = gauss_hermite_axis(prior.mu_tau, prior.sigma_tau, n)
    nus, w_nu = gauss_hermite_axis(prior.mu_nu, prior.sigma_nu, n)

    scaled = config.omega_0 * bundle.harmonics
    t_ramp = np.exp(-1j * np.outer(taus, scaled))
    dt_ramp = -1j * scaled * t_ramp
    weighted_t = w_tau[:, None] * t_ramp
    p_tt = t_ramp.conj().T @ weighted_t
    p_dt = dt_ramp.conj().T @ weighted_t
    p_dd = dt_ramp.conj().T @ (w_tau[:, None] * dt_ramp)

    filt = bundle.a * (h / np.sqrt(omega)[:, None])
    k = config.k_total
    q_dd = np.zeros((k, k), dtype=complex)
    q_dx = np.zeros((k, k), dtype=complex)
    q_xx = np.zeros((k, k), dtype=complex)
    for nu_b, w_b in zip(nus, w_nu):
        d_mat, dd_mat = doppler_convolution(nu_b, config, with_derivative=True)
        bd = filt @ d_mat
        bdd = filt @ dd_mat
        q_dd += w_b * (bd.conj().T @ bd)
        q_dx += w_b * (bd.conj().T @ bdd)
        q_xx += w_b * (bdd.conj().T @ bdd)

    averaged = {
        (0, 0): q_dd * p_dd,
        (0, 1): q_dx * p_dt,
        (1, 1): q_xx * p_tt,
    }
    averaged[(1, 0)] = averaged[(0, 1)].conj().T
    phi = np.zeros((k, k), dtype=complex)
    for (i, j), block in averaged.items():
        phi += m_weight[j, i] * (block + block.conj().T)
    phi *= config.n_samples * abs(gamma) ** 2
    return phi


def receive_design_forms(g, prior, config, m_weight, nodes=None, gamma=1.0):
    """Per-alias-group matrices whose Rayleigh quotients in the receive taps
    sum to the averaged weighted information trace.

    For fixed transmit spectrum ``g`` the weighted trace splits as
    ``sum_q h_q.conj() @ forms[q] @ h_q / (h_q.conj() @ h_q)`` where
    ``h_q`` is the slice of the receive taps on alias group ``q``.  The
    denominators are exactly the per-bin noise powers up to a common
    constant, so each group is optimized independently of the tap scale.
    When the configured noise density is zero a unit density is used; the
    quotients are invariant to that choice.
    """
    bundle = get_bundle(config)
    m_weight = np.asarray(m_weight, dtype=float)
    n = config.quad_nodes if nodes is None else int(nodes)
    taus, w_tau = gauss_hermite_axis(prior.mu_tau, prior.sigma_tau, n)
    nus, w_nu = gauss_hermite_axis(prior.mu_nu, prior.sigma_nu, n)

    scaled = config.omega_0 * bundle.harmonics
    t_ramp = np.exp(-1j * np.outer(taus, scaled))
    dt_ramp = -1j * scaled * t_ramp

    xi_tau = np.empty((len(nus), len(taus), config.k_total), dtype=complex)
    xi_nu = np.empty_like(xi_tau)
    for b, nu_b in enumerate(nus):
        d_mat, dd_mat = doppler_convolution(nu_b, config, with_derivative=True)
        xi_tau[b] = (dt_ramp * g) @ d_mat.T
        xi_nu[b] = (t_ramp * g) @ dd_mat.T
    weights = np.outer(w_nu, w_tau).ravel()
    xi = {0: xi_tau.reshape(-1, config.k_total),
          1: xi_nu.reshape(-1, config.k_total)}

    n_0 = config.n_0 if config.n_0 > 0 else 1.0
    scale = config.n_samples * abs(gamma) ** 2 * config.t_s / n_0
    forms = []
    for members in bundle.partition.groups:
        pos = members + config.k_total // 2
        total = np.zeros((pos.size, pos.size), dtype=complex)
        for (i, j), weight in np.ndenumerate(m_weight.T):
            if weight == 0.0:
                continue
            block = np.einsum("t,ta,tb->ab", weights,
                              xi[i][:, pos].conj(), xi[j][:, pos])
            total += weight * (block + block.conj().T)
        forms.append(scale * total)
    return forms


def receive_objective(h, forms, partition):
    """Sum of per-group Rayleigh quotients of ``forms`` at receive taps ``h``."""
    h = np.asarray(h)
    total = 0.0
    for members, form in zip(partition.groups, forms):
        taps = h[members + partition.k_total // 2]
        energy = np.vdot(taps, taps).real
        if energy == 0.0:
            continue
        total += (taps.conj() @ form @ taps).real / energy
    return total
