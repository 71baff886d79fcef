"""Exact Fisher information of the sampled receive chain.

For a known complex gain the per-snapshot information about (delay, Doppler)
is a 2x2 quadratic form in the parameter derivatives of the noise-free
received spectrum, weighted by the inverse noise covariance.  The Bayesian
(expected) information averages that matrix over the Gaussian prior with a
tensor Gauss-Hermite rule; adding the prior information and inverting gives
the Bayesian Cramer-Rao bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInformation
from .freqops import delay_matrix, get_bundle, noise_covariance
from .model import ParameterPrior, SystemConfig, prior_quadrature


def _effective_noise(h, config, noise):
    """Reuse a supplied noise model or build one; a configuration without a
    positive noise density gets unit density (information scales as 1/n_0,
    so every relative quantity is unaffected by that substitution)."""
    if noise is not None:
        return noise
    n_0 = config.n_0 if config.n_0 > 0 else 1.0
    return noise_covariance(h, n_0, config)


@dataclass(frozen=True)
class FimResult:
    """2x2 Fisher information about (delay, Doppler)."""

    matrix: np.ndarray
    kind: str
    nodes: int | None = None

    @property
    def j11(self):
        return float(self.matrix[0, 0])

    @property
    def j12(self):
        return float(self.matrix[0, 1])

    @property
    def j22(self):
        return float(self.matrix[1, 1])

    def inverse(self):
        """Closed-form 2x2 inverse; raises if the matrix is singular."""
        det = self.j11 * self.j22 - self.j12 ** 2
        scale = abs(self.j11 * self.j22)
        if det <= 0 or (scale > 0 and det < 1e-14 * scale):
            raise SingularInformation(
                f"information matrix is singular (det = {det:g})"
            )
        return np.array([[self.j22, -self.j12], [-self.j12, self.j11]]) / det

    def to_dict(self):
        return {
            "j11": self.j11,
            "j12": self.j12,
            "j22": self.j22,
            "kind": self.kind,
            "nodes": self.nodes,
        }


def fim_exact(theta, gamma, g, h, config: SystemConfig, noise=None) -> FimResult:
    """Exact per-parameter-point Fisher information.

    ``theta = (tau, nu)``; the gain enters only through ``|gamma|^2``.  The
    derivative of the received spectrum with respect to Doppler carries both
    the sample-domain modulation term and the receive-filter slope term.
    """
    tau, nu = float(theta[0]), float(theta[1])
    bundle = get_bundle(config)
    noise = _effective_noise(h, config, noise)
    g = np.asarray(g, dtype=complex)
    h_nu, dh_nu = bundle.shifted_spectrum(h, nu, with_derivative=True)
    t, dt = delay_matrix(tau, config, with_derivative=True)
    x = g * h_nu
    f_tau = bundle.fold(dt * x)
    f_mod = bundle.fold(t * x)
    f_slope = bundle.fold(t * (g * dh_nu))

    w = bundle.w
    times = bundle.bins * config.t_s
    delta = np.exp(2j * np.pi * nu * times)
    d_delta = (2j * np.pi * times) * delta

    def sandwich(vec, diag):
        return w @ (diag * (w.conj().T @ vec))

    u_tau = sandwich(f_tau, delta)
    u_nu = sandwich(f_mod, d_delta) + sandwich(f_slope, delta)
    s_tau = noise.solve_freq(u_tau)
    s_nu = noise.solve_freq(u_nu)
    scale = 2.0 * config.n_samples * abs(gamma) ** 2
    j11 = scale * np.vdot(u_tau, s_tau).real
    j12 = scale * np.vdot(u_tau, s_nu).real
    j22 = scale * np.vdot(u_nu, s_nu).real
    return FimResult(np.array([[j11, j12], [j12, j22]]), "exact")


def _fim_exact_batch(taus, nus, gamma, g, h, config: SystemConfig, noise=None):
    """Vectorized exact information over parameter points.

    Returns an array of shape ``(len(taus), 3)`` holding the (1,1), (1,2)
    and (2,2) entries; used by the expectation quadrature and by sampling
    verifications, and covered by a test pinning it to :func:`fim_exact`.
    """
    bundle = get_bundle(config)
    noise = _effective_noise(h, config, noise)
    g = np.asarray(g, dtype=complex)
    taus = np.asarray(taus, dtype=float)
    nus = np.asarray(nus, dtype=float)
    h_nu, dh_nu = bundle.shifted_spectrum(h, nus, with_derivative=True)
    ramp = -1j * bundle.harmonics * config.omega_0
    t = np.exp(np.outer(taus, ramp))
    dt = ramp * t
    x = g * h_nu
    f_tau = bundle.fold(dt * x)
    f_mod = bundle.fold(t * x)
    f_slope = bundle.fold(t * (g * dh_nu))

    w = bundle.w
    times = bundle.bins * config.t_s
    delta = np.exp(2j * np.pi * np.outer(nus, times))
    d_delta = (2j * np.pi * times) * delta

    def sandwich(rows, diag):
        return ((rows @ w.conj()) * diag) @ w.T

    u_tau = sandwich(f_tau, delta)
    u_nu = sandwich(f_mod, d_delta) + sandwich(f_slope, delta)
    s_tau = noise.solve_freq(u_tau)
    s_nu = noise.solve_freq(u_nu)
    scale = 2.0 * config.n_samples * abs(gamma) ** 2
    out = np.empty((len(taus), 3))
    out[:, 0] = scale * np.sum(u_tau.conj() * s_tau, axis=1).real
    out[:, 1] = scale * np.sum(u_tau.conj() * s_nu, axis=1).real
    out[:, 2] = scale * np.sum(u_nu.conj() * s_nu, axis=1).real
    return out


def efim(g, h, prior: ParameterPrior, config: SystemConfig, nodes=None,
         gamma=1.0, noise=None) -> FimResult:
    """Expected (Bayesian) Fisher information over the parameter prior.

    The expectation is a tensor Gauss-Hermite rule with ``nodes`` points per
    axis (default from the configuration); the noise model is built once
    since it does not depend on the parameters.
    """
    nodes = int(nodes) if nodes is not None else config.quad_nodes
    noise = _effective_noise(h, config, noise)
    rule = prior_quadrature(prior, nodes)
    entries = _fim_exact_batch(rule[:, 0], rule[:, 1], gamma, g, h, config, noise)
    j11, j12, j22 = rule[:, 2] @ entries
    return FimResult(np.array([[j11, j12], [j12, j22]]), "exact", nodes)


def bcrlb(j_d, prior: ParameterPrior):
    """Bayesian bound: inverse of expected information plus prior information.

    Accepts a :class:`FimResult` or a raw 2x2 matrix and returns the 2x2
    covariance lower bound.
    """
    mat = j_d.matrix if isinstance(j_d, FimResult) else np.asarray(j_d)
    return FimResult(mat + prior.information_matrix(), "exact").inverse()


def relative_gain(j_sys, j_ref):
    """Per-parameter dB gain of one system over a reference.

    Both arguments are expected informations; the gain compares the diagonal
    of the inverses, so positive values mean the system outperforms the
    reference for that parameter.
    """
    inv_sys = j_sys.inverse() if isinstance(j_sys, FimResult) else FimResult(np.asarray(j_sys), "exact").inverse()
    inv_ref = j_ref.inverse() if isinstance(j_ref, FimResult) else FimResult(np.asarray(j_ref), "exact").inverse()
    chi_tau = 10.0 * np.log10(inv_ref[0, 0] / inv_sys[0, 0])
    chi_nu = 10.0 * np.log10(inv_ref[1, 1] / inv_sys[1, 1])
    return float(chi_tau), float(chi_nu)
