"""Joint path-gain/delay/Doppler estimation and its Monte-Carlo harness.

The estimator concentrates the unknown complex path gain out of the
Gaussian likelihood in closed form, leaving a two-dimensional objective
over delay and Doppler: a whitened matched-filter energy minus the
Gaussian prior penalty.  Because that surface carries sidelobes, the
maximizer runs a coarse grid search over the prior's bulk first and only
then polishes the winner with a few damped Newton steps on numerical
derivatives, falling back to the grid point whenever polishing fails to
improve the objective.

The same machinery yields two diagnostic surfaces: the classic
delay-Doppler ambiguity of the transmit waveform (periodic correlation
evaluated exactly through its harmonic coefficients) and the ambiguity of
the full posterior objective probed with a noise-free matched input.
:func:`monte_carlo` ties everything together into empirical normalized
mean squared error curves against the Bayesian bound, with per-trial
random streams derived from (seed, grid index, trial index) so any
execution order reproduces identical aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DopplerOutOfRange, FactorizationFailure, LengthMismatch, ZeroSignal
from .fim_approx import doppler_convolution
from .fim_exact import bcrlb, efim
from .freqops import get_bundle, noise_covariance, received_signal
from .model import ParameterPrior, SystemConfig

__all__ = [
    "DEFAULT_PSNR_GRID",
    "AmbiguitySurface",
    "McReport",
    "MapSearch",
    "gamma_hat",
    "map_objective",
    "map_estimate",
    "ambiguity_surfaces",
    "sample_noise",
    "monte_carlo",
]

#: Default per-Hz SNR sweep (dB-Hz), bracketing both threshold regions.
DEFAULT_PSNR_GRID = tuple(np.arange(40.0, 111.0, 5.0))

_NEWTON_STEPS = 20
_NEWTON_RTOL = 1e-12
_GRID_POINTS = 61
_GRID_SPAN = 4.0
#: Assumed noise density, relative to the transmit power, for configurations
#: that declare none.  The posterior objective weighs the likelihood against
#: the fixed prior penalty through the assumed noise level, so a config
#: without noise is treated as effectively noiseless rather than unit-noise:
#: the likelihood then dominates and noise-free measurements are recovered
#: exactly, while the ratio stays finite for the covariance solves.
_NOISELESS_DENSITY_RATIO = 1e-14


def _assumed_noise(h, config, noise):
    if noise is not None:
        return noise
    n_0 = config.n_0 if config.n_0 > 0 else _NOISELESS_DENSITY_RATIO * config.p_t
    return noise_covariance(h, n_0, config)


@dataclass(frozen=True)
class AmbiguitySurface:
    """Normalized objective surface over a delay/Doppler grid.

    ``values[i, j]`` belongs to ``(tau_grid[i], nu_grid[j])`` and peaks at
    exactly 1; the original surface is ``values * scale + offset``.
    """

    tau_grid: np.ndarray
    nu_grid: np.ndarray
    values: np.ndarray
    kind: str
    offset: float = 0.0
    scale: float = 1.0


@dataclass(frozen=True)
class McReport:
    """Empirical estimation error against the Bayesian bound.

    All error curves are indexed by ``psnr_grid`` (dB-Hz).  ``nmse_*``
    are mean squared errors normalized by the prior variances, the
    ``bcrlb_*`` columns the correspondingly normalized bound diagonals,
    and ``gamma_mse`` the mean squared error of the concentrated
    path-gain estimate around its true value of one.
    """

    psnr_grid: np.ndarray
    nmse_tau: np.ndarray
    nmse_nu: np.ndarray
    bcrlb_tau: np.ndarray
    bcrlb_nu: np.ndarray
    gamma_mse: np.ndarray
    failures: np.ndarray
    trials: int
    seed: int

    def __post_init__(self):
        for name in ("psnr_grid", "nmse_tau", "nmse_nu", "bcrlb_tau",
                     "bcrlb_nu", "gamma_mse", "failures"):
            value = getattr(self, name)
            value.flags.writeable = False


def _whitened_rows(signals, noise, bundle):
    """Inverse-covariance image and energy of each row signal."""
    solved = noise.solve_time(signals, bundle.w)
    energies = np.sum(signals.conj() * solved, axis=-1).real
    return solved, energies


def gamma_hat(y, theta, g, h, config: SystemConfig, *, noise=None):
    """Closed-form path-gain estimate given the remaining parameters.

    Projects the measurement onto the noise-free signal direction under
    the inverse-noise inner product.
    """
    y = np.asarray(y)
    if y.shape != (config.n_samples,):
        raise LengthMismatch(f"measurement must have {config.n_samples} samples")
    noise = _assumed_noise(h, config, noise)
    bundle = get_bundle(config)
    signal = received_signal(theta, 1.0, g, h, config)[0]
    solved = noise.solve_time(signal, bundle.w)
    energy = float(np.sum(signal.conj() * solved).real)
    if energy < 1e-15 * float(np.sum(np.abs(y) ** 2)):
        raise ZeroSignal("noise-free signal energy vanishes at this parameter")
    return complex(np.sum(solved.conj() * y) / energy)


def map_objective(y, theta, g, h, prior: ParameterPrior, config: SystemConfig,
                  *, noise=None):
    """Posterior objective with the path gain concentrated out.

    Whitened matched-filter energy of the measurement minus the Gaussian
    prior penalty; the data term is zero when the candidate signal has no
    energy.
    """
    noise = _assumed_noise(h, config, noise)
    bundle = get_bundle(config)
    return _objective_value(np.asarray(y), (float(theta[0]), float(theta[1])),
                            g, h, prior, config, noise, bundle)


def _objective_value(y, theta, g, h, prior, config, noise, bundle):
    signal = received_signal(theta, 1.0, g, h, config)[0]
    solved = noise.solve_time(signal, bundle.w)
    energy = float(np.sum(signal.conj() * solved).real)
    if energy <= 0.0:
        data = 0.0
    else:
        data = float(np.abs(np.sum(solved.conj() * y)) ** 2) / energy
    penalty = (((theta[0] - prior.mu_tau) / prior.sigma_tau) ** 2
               + ((theta[1] - prior.mu_nu) / prior.sigma_nu) ** 2)
    return data - penalty


class MapSearch:
    """Reusable grid-plus-refinement maximizer of the posterior objective.

    Precomputes the whitened candidate signals on a rectangular grid
    covering the prior's bulk, so per-measurement work is one matrix
    product, an argmax and a short damped Newton polish.
    """

    def __init__(self, g, h, prior: ParameterPrior, config: SystemConfig, *,
                 noise=None, grid_points=_GRID_POINTS, span=_GRID_SPAN):
        self.config = config
        self.prior = prior
        self.noise = _assumed_noise(h, config, noise)
        self.bundle = get_bundle(config)
        self.g = np.asarray(g)
        self.h = np.asarray(h)
        self.tau_grid = prior.mu_tau + np.linspace(
            -span * prior.sigma_tau, span * prior.sigma_tau, int(grid_points))
        self.nu_grid = prior.mu_nu + np.linspace(
            -span * prior.sigma_nu, span * prior.sigma_nu, int(grid_points))
        signals = candidate_signals(self.g, self.h, self.tau_grid,
                                    self.nu_grid, config)
        flat = signals.reshape(-1, config.n_samples)
        solved, energies = _whitened_rows(flat, self.noise, self.bundle)
        energies = np.where(energies > 0.0, energies, np.inf)
        self._matched = solved.conj() / np.sqrt(energies)[:, None]
        tt, nn = np.meshgrid(self.tau_grid, self.nu_grid, indexing="ij")
        self._penalties = (((tt.ravel() - prior.mu_tau) / prior.sigma_tau) ** 2
                           + ((nn.ravel() - prior.mu_nu) / prior.sigma_nu) ** 2)
        self._shape = (self.tau_grid.size, self.nu_grid.size)

    def scores(self, y):
        """Objective value at every grid node for one measurement."""
        data = np.abs(self._matched @ np.asarray(y)) ** 2
        return (data - self._penalties).reshape(self._shape)

    def estimate(self, y):
        """Maximizing ``(delay, Doppler)`` for one measurement."""
        y = np.asarray(y)
        scores = self.scores(y)
        i, j = np.unravel_index(np.argmax(scores), scores.shape)
        theta = (float(self.tau_grid[i]), float(self.nu_grid[j]))
        return self._refine(y, theta, float(scores[i, j]))

    def _value(self, y, theta):
        try:
            return _objective_value(y, theta, self.g, self.h, self.prior,
                                    self.config, self.noise, self.bundle)
        except DopplerOutOfRange:
            return -np.inf

    def _refine(self, y, theta, value):
        d_tau = 1e-3 * self.prior.sigma_tau
        d_nu = 1e-3 * self.prior.sigma_nu
        best_theta, best_value = theta, value
        for _ in range(_NEWTON_STEPS):
            tau, nu = best_theta
            f_0 = best_value
            f_pt = self._value(y, (tau + d_tau, nu))
            f_mt = self._value(y, (tau - d_tau, nu))
            f_pn = self._value(y, (tau, nu + d_nu))
            f_mn = self._value(y, (tau, nu - d_nu))
            f_pp = self._value(y, (tau + d_tau, nu + d_nu))
            f_pm = self._value(y, (tau + d_tau, nu - d_nu))
            f_mp = self._value(y, (tau - d_tau, nu + d_nu))
            f_mm = self._value(y, (tau - d_tau, nu - d_nu))
            stencil = np.array([f_pt, f_mt, f_pn, f_mn, f_pp, f_pm, f_mp, f_mm])
            if not np.all(np.isfinite(stencil)):
                break
            grad = np.array([(f_pt - f_mt) / (2 * d_tau),
                             (f_pn - f_mn) / (2 * d_nu)])
            hess = np.array([
                [(f_pt - 2 * f_0 + f_mt) / d_tau**2,
                 (f_pp - f_pm - f_mp + f_mm) / (4 * d_tau * d_nu)],
                [(f_pp - f_pm - f_mp + f_mm) / (4 * d_tau * d_nu),
                 (f_pn - 2 * f_0 + f_mn) / d_nu**2]])
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(step)):
                break
            improved = False
            for _ in range(6):
                candidate = (tau + step[0], nu + step[1])
                f_c = self._value(y, candidate)
                if f_c > best_value:
                    best_theta, best_value = candidate, f_c
                    improved = True
                    break
                step = step / 2.0
            if not improved:
                break
            if abs(best_value - f_0) <= _NEWTON_RTOL * max(1.0, abs(best_value)):
                break
        return best_theta


def candidate_signals(g, h, tau_grid, nu_grid, config: SystemConfig):
    """Noise-free received signals over a delay/Doppler product grid.

    Returns an array of shape ``(len(tau_grid), len(nu_grid), n_samples)``
    matching :func:`subnyq.freqops.received_signal` at unit gain, built
    one Doppler column at a time so the filter interpolation and folding
    are batched over delays.
    """
    bundle = get_bundle(config)
    tau_grid = np.asarray(tau_grid, dtype=float)
    nu_grid = np.asarray(nu_grid, dtype=float)
    g = np.asarray(g)
    shifted = bundle.shifted_spectrum(h, nu_grid)
    phases = np.exp(-1j * np.outer(tau_grid, bundle.harmonics)
                    * config.omega_0)
    out = np.empty((tau_grid.size, nu_grid.size, config.n_samples),
                   dtype=complex)
    root_n = np.sqrt(config.n_samples)
    times = bundle.bins * config.t_s
    for column, nu in enumerate(nu_grid):
        folded = bundle.fold(phases * (g * shifted[column])[None, :])
        modulation = np.exp(2j * np.pi * nu * times)
        out[:, column, :] = (root_n * modulation[None, :]
                             * (folded @ bundle.w.conj()))
    return out


def map_estimate(y, g, h, prior: ParameterPrior, config: SystemConfig, *,
                 noise=None, grid_points=_GRID_POINTS, span=_GRID_SPAN):
    """One-shot maximum-a-posteriori ``(delay, Doppler)`` estimate.

    Builds the search grid, takes its argmax and polishes it; reuse a
    :class:`MapSearch` instead when estimating from many measurements.
    """
    search = MapSearch(g, h, prior, config, noise=noise,
                       grid_points=grid_points, span=span)
    return search.estimate(y)


def ambiguity_surfaces(g, h, prior: ParameterPrior, config: SystemConfig,
                       tau_grid, nu_grid, kind="classic", *, noise=None):
    """Delay/Doppler ambiguity surface of a transceiver design.

    ``kind='classic'`` correlates the periodic transmit waveform with its
    shifted copy over one period, evaluated exactly from the harmonic
    coefficients; the squared magnitude is scaled to peak at 1.
    ``kind='map'`` probes the posterior objective with the noise-free
    matched measurement at the prior mean and maps the surface affinely
    onto [0, 1], recording the offset and scale.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    nu_grid = np.asarray(nu_grid, dtype=float)
    if kind == "classic":
        bundle = get_bundle(config)
        g = np.asarray(g)
        phases = np.exp(-1j * np.outer(bundle.harmonics, tau_grid)
                        * config.omega_0)
        values = np.empty((tau_grid.size, nu_grid.size))
        for column, nu in enumerate(nu_grid):
            correlator = g.conj() * (doppler_convolution(nu, config) @ g)
            values[:, column] = np.abs(correlator @ phases) ** 2
        peak = values.max()
        if peak <= 0.0:
            raise ZeroSignal("transmit waveform has no energy")
        return AmbiguitySurface(tau_grid, nu_grid, values / peak, "classic",
                                0.0, float(peak))
    if kind == "map":
        noise = _assumed_noise(h, config, noise)
        bundle = get_bundle(config)
        matched = received_signal((prior.mu_tau, prior.mu_nu), 1.0, g, h,
                                  config)[0]
        signals = candidate_signals(g, h, tau_grid, nu_grid, config)
        flat = signals.reshape(-1, config.n_samples)
        solved, energies = _whitened_rows(flat, noise, bundle)
        energies = np.where(energies > 0.0, energies, np.inf)
        data = np.abs(np.sum(solved.conj() * matched, axis=-1)) ** 2 / energies
        tt, nn = np.meshgrid(tau_grid, nu_grid, indexing="ij")
        penalties = (((tt.ravel() - prior.mu_tau) / prior.sigma_tau) ** 2
                     + ((nn.ravel() - prior.mu_nu) / prior.sigma_nu) ** 2)
        raw = (data - penalties).reshape(tt.shape)
        offset = float(raw.min())
        scale = float(raw.max() - raw.min())
        if scale <= 0.0:
            scale = 1.0
        return AmbiguitySurface(tau_grid, nu_grid, (raw - offset) / scale,
                                "map", offset, scale)
    raise ValueError(f"unknown ambiguity kind {kind!r}")


def _covariance_factor(r_eta):
    """Square factor ``F`` with ``F F^H = r_eta`` via an eigendecomposition."""
    r_eta = np.asarray(r_eta)
    hermitian = 0.5 * (r_eta + r_eta.conj().T)
    values, vectors = np.linalg.eigh(hermitian)
    floor = -1e-9 * max(float(np.trace(hermitian).real), 0.0)
    if values.min() < floor:
        raise FactorizationFailure(
            f"noise covariance has eigenvalue {values.min():g} below {floor:g}")
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def sample_noise(r_eta, rng, size=None):
    """Draw circular complex Gaussian noise with covariance ``r_eta``.

    With ``size=None`` one length-``n`` vector is returned, otherwise an
    array of shape ``(size, n)``; a fixed generator state reproduces the
    draw bit for bit.
    """
    factor = _covariance_factor(r_eta)
    n = factor.shape[0]
    shape = (n,) if size is None else (int(size), n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return (z / np.sqrt(2.0)) @ factor.T


def monte_carlo(g, h, prior: ParameterPrior, config: SystemConfig, *,
                psnr_grid=None, trials=2000, seed=0, nodes=None,
                noise_kind="circulant", grid_points=_GRID_POINTS,
                span=_GRID_SPAN) -> McReport:
    """Empirical NMSE of the joint estimator across a per-Hz SNR sweep.

    For every grid value the noise density is set to the transmit power
    over the linear SNR, parameters are drawn from the prior with unit
    path gain, and the estimator runs on the synthesized measurement.
    Each trial draws from its own random stream seeded by ``(seed, grid
    index, trial index)``, so aggregates do not depend on execution
    order.  Trials whose estimator raises are counted as failures and
    excluded from the averages.
    """
    psnr_grid = tuple(DEFAULT_PSNR_GRID if psnr_grid is None else psnr_grid)
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be positive")
    nmse_tau, nmse_nu = [], []
    bound_tau, bound_nu = [], []
    gamma_mse, failures = [], []
    sigma = np.array([prior.sigma_tau, prior.sigma_nu])
    mu = np.array([prior.mu_tau, prior.mu_nu])
    for index, psnr_dbhz in enumerate(psnr_grid):
        n_0 = config.p_t / 10.0 ** (float(psnr_dbhz) / 10.0)
        noise = noise_covariance(h, n_0, config, kind=noise_kind)
        factor = _covariance_factor(noise.r_eta)
        search = MapSearch(g, h, prior, config, noise=noise,
                           grid_points=grid_points, span=span)
        bound = bcrlb(efim(g, h, prior, config, nodes=nodes, noise=noise),
                      prior)
        bound_tau.append(float(bound[0, 0]) / prior.sigma_tau**2)
        bound_nu.append(float(bound[1, 1]) / prior.sigma_nu**2)
        errors = np.zeros(2)
        gain_error = 0.0
        failed = 0
        for trial in range(trials):
            rng = np.random.default_rng([seed, index, trial])
            theta = mu + sigma * rng.standard_normal(2)
            signal = received_signal(theta, 1.0, g, h, config)[0]
            draw = rng.standard_normal((2, config.n_samples))
            y = signal + ((draw[0] + 1j * draw[1]) / np.sqrt(2.0)) @ factor.T
            try:
                estimate = search.estimate(y)
                gain = gamma_hat(y, estimate, g, h, config, noise=noise)
            except Exception:  # noqa: BLE001 - count and move on
                failed += 1
                continue
            errors += (np.asarray(estimate) - theta) ** 2
            gain_error += abs(gain - 1.0) ** 2
        kept = max(trials - failed, 1)
        nmse_tau.append(float(errors[0] / kept) / prior.sigma_tau**2)
        nmse_nu.append(float(errors[1] / kept) / prior.sigma_nu**2)
        gamma_mse.append(float(gain_error / kept))
        failures.append(failed)
    return McReport(np.asarray(psnr_grid, dtype=float), np.asarray(nmse_tau),
                    np.asarray(nmse_nu), np.asarray(bound_tau),
                    np.asarray(bound_nu), np.asarray(gamma_mse),
                    np.asarray(failures), trials, seed)
