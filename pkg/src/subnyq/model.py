"""System configuration, aliasing bookkeeping and prior description.

Everything downstream is phrased in terms of a periodic transmit signal with
``k_total`` Fourier coefficients spread over a pre-filter bandwidth that is an
odd multiple ``2 * l_factor + 1`` of the sampling rate.  After sampling, the
``k_total`` harmonics fold onto ``n_samples`` frequency bins; this module
owns that bookkeeping plus the Gaussian prior used for Bayesian bounds.

All quantities are SI (seconds, hertz) unless a name says otherwise.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import (
    ConfigError,
    IndexOutOfRange,
    NonIntegerSampleCount,
    NonPositiveInput,
)

DEFAULT_QUAD_NODES = 15

# Engineering suffixes accepted for config values given as strings.
_UNIT_SCALE = {
    "": 1.0,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12,
    "w": 1.0, "mw": 1e-3,
}

_QUANTITY_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(value):
    """Turn a number or a string like ``"25 MHz"`` / ``"1 ns"`` into a float."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"cannot interpret {value!r} as a physical quantity")
    m = _QUANTITY_RE.match(value)
    if m is None:
        raise ConfigError(f"cannot parse quantity {value!r}")
    unit = m.group(2).replace("µ", "u").lower()
    if unit not in _UNIT_SCALE:
        raise ConfigError(f"unknown unit suffix {m.group(2)!r} in {value!r}")
    return float(m.group(1)) * _UNIT_SCALE[unit]


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one sampling system.

    Parameters
    ----------
    f_s : float
        Sampling rate in Hz.
    t_0 : float
        Signal period (= observation window) in seconds.
    l_factor : int
        Bandwidth multiplier; the pre-filter spans ``(2*l_factor+1) * f_s``.
    p_t : float
        Transmit power budget (squared two-norm of the transmit coefficients).
    n_0 : float
        One-sided noise power spectral density.  May be zero for pure design
        work; information computations then treat the PSD as unit scale.
    quad_nodes : int
        Gauss-Hermite nodes per prior axis used when expectations over the
        parameter prior are required and no explicit count is passed.
    """

    f_s: float
    t_0: float
    l_factor: int
    p_t: float = 1.0
    n_0: float = 0.0
    quad_nodes: int = DEFAULT_QUAD_NODES

    # Derived counts/rates, filled in __post_init__.
    n_samples: int = field(init=False)
    k_total: int = field(init=False)
    f_0: float = field(init=False)
    omega_0: float = field(init=False)
    omega_s: float = field(init=False)
    t_s: float = field(init=False)
    bandwidth: float = field(init=False)

    def __post_init__(self):
        if self.f_s <= 0 or self.t_0 <= 0:
            raise NonPositiveInput("f_s and t_0 must be strictly positive")
        if self.p_t <= 0:
            raise NonPositiveInput("p_t must be strictly positive")
        if self.n_0 < 0:
            raise NonPositiveInput("n_0 must be non-negative")
        if int(self.l_factor) != self.l_factor or self.l_factor < 0:
            raise ConfigError("l_factor must be a non-negative integer")
        if int(self.quad_nodes) != self.quad_nodes or self.quad_nodes < 1:
            raise ConfigError("quad_nodes must be a positive integer")
        n_float = self.f_s * self.t_0
        n = round(n_float)
        if abs(n_float - n) > 1e-6 * max(1.0, n_float):
            raise NonIntegerSampleCount(
                f"f_s * t_0 = {n_float!r} is not an integer sample count"
            )
        if n <= 0 or n % 2:
            raise NonIntegerSampleCount(
                f"sample count {n} must be a positive even integer"
            )
        object.__setattr__(self, "l_factor", int(self.l_factor))
        object.__setattr__(self, "quad_nodes", int(self.quad_nodes))
        object.__setattr__(self, "n_samples", int(n))
        object.__setattr__(self, "k_total", int((2 * self.l_factor + 1) * n))
        object.__setattr__(self, "f_0", 1.0 / self.t_0)
        object.__setattr__(self, "omega_0", 2.0 * math.pi / self.t_0)
        object.__setattr__(self, "omega_s", 2.0 * math.pi * self.f_s)
        object.__setattr__(self, "t_s", 1.0 / self.f_s)
        object.__setattr__(self, "bandwidth", (2 * self.l_factor + 1) * self.f_s)


def build_config(f_s, t_0, l_factor, p_t=1.0, n_0=0.0,
                 quad_nodes=DEFAULT_QUAD_NODES) -> SystemConfig:
    """Validate raw parameters and derive all grid constants."""
    return SystemConfig(float(f_s), float(t_0), l_factor, float(p_t),
                        float(n_0), quad_nodes)


def harmonic_limits(k_bin, n_samples, k_total):
    """Fold depths of bin ``k_bin``: how many harmonic replicas alias onto it
    from below and from above.

    Valid for any even pair ``(n_samples, k_total)``, not only odd multiples.
    Returns ``(l_minus, l_plus)`` with
    ``l_minus = floor((k_total/2 + k) / n_samples)`` and
    ``l_plus  = floor((k_total/2 - 1 - k) / n_samples)``.
    """
    k_bin = int(k_bin)
    if not -n_samples // 2 <= k_bin <= n_samples // 2 - 1:
        raise IndexOutOfRange(
            f"bin {k_bin} outside [{-n_samples // 2}, {n_samples // 2 - 1}]"
        )
    l_minus = (k_total // 2 + k_bin) // n_samples
    l_plus = (k_total // 2 - 1 - k_bin) // n_samples
    return l_minus, l_plus


@dataclass(frozen=True)
class AliasPartition:
    """Partition of the harmonic index set into per-bin alias groups.

    ``groups[q]`` lists the harmonics (as indices ``-k_total/2 ..
    k_total/2 - 1``) that fold onto bin ``q - n_samples/2``; the groups are
    disjoint and cover every harmonic exactly once.
    """

    n_samples: int
    k_total: int
    l_minus: np.ndarray
    l_plus: np.ndarray
    groups: tuple

    @classmethod
    def from_counts(cls, k_total, n_samples):
        if k_total % 2 or n_samples % 2 or k_total < n_samples:
            raise ConfigError(
                "k_total and n_samples must be even with k_total >= n_samples"
            )
        half_n = n_samples // 2
        bins = np.arange(-half_n, half_n)
        l_minus = (k_total // 2 + bins) // n_samples
        l_plus = (k_total // 2 - 1 - bins) // n_samples
        groups = []
        for k_bin, lm, lp in zip(bins, l_minus, l_plus):
            members = k_bin + n_samples * np.arange(-lm, lp + 1)
            members.flags.writeable = False
            groups.append(members)
        l_minus.flags.writeable = False
        l_plus.flags.writeable = False
        return cls(int(n_samples), int(k_total), l_minus, l_plus, tuple(groups))

    @classmethod
    def from_config(cls, config: SystemConfig):
        return cls.from_counts(config.k_total, config.n_samples)

    def group_of_harmonic(self):
        """Map each harmonic position ``0..k_total-1`` to its bin position."""
        out = np.empty(self.k_total, dtype=np.intp)
        for q, members in enumerate(self.groups):
            out[members + self.k_total // 2] = q
        return out


@dataclass(frozen=True)
class ParameterPrior:
    """Independent Gaussian prior on (delay, Doppler)."""

    sigma_tau: float
    sigma_nu: float
    mu_tau: float = 0.0
    mu_nu: float = 0.0

    def __post_init__(self):
        if self.sigma_tau <= 0 or self.sigma_nu <= 0:
            raise NonPositiveInput("prior standard deviations must be positive")

    def information_matrix(self):
        """Prior contribution to the Bayesian information matrix."""
        return np.diag([1.0 / self.sigma_tau ** 2, 1.0 / self.sigma_nu ** 2])


def gauss_hermite_axis(mu, sigma, n_nodes):
    """Nodes and weights integrating ``E[f(X)]`` for ``X ~ N(mu, sigma^2)``.

    Built from physicists' Gauss-Hermite rules by the change of variable
    ``x = mu + sqrt(2) * sigma * t``; the returned weights sum to one.
    """
    t, w = hermgauss(int(n_nodes))
    return mu + math.sqrt(2.0) * sigma * t, w / math.sqrt(math.pi)


def prior_quadrature(prior: ParameterPrior, n_nodes=DEFAULT_QUAD_NODES):
    """Tensor-product quadrature over the (delay, Doppler) prior.

    Returns an array of shape ``(n_nodes**2, 3)`` whose columns are delay,
    Doppler and weight; the weights sum to one.  With ``n_nodes == 1`` the
    rule collapses to the prior mean with unit weight.
    """
    taus, w_tau = gauss_hermite_axis(prior.mu_tau, prior.sigma_tau, n_nodes)
    nus, w_nu = gauss_hermite_axis(prior.mu_nu, prior.sigma_nu, n_nodes)
    tt, nn = np.meshgrid(taus, nus, indexing="ij")
    ww = np.outer(w_tau, w_nu)
    return np.column_stack([tt.ravel(), nn.ravel(), ww.ravel()])


_CONFIG_KEYS = {
    "fs_hz": True, "t0_s": True, "L": True,
    "pt": False, "n0": False,
    "sigma_tau_s": True, "sigma_nu_hz": True,
    "mu_tau_s": False, "mu_nu_hz": False,
    "ghq_nodes": False,
}


def load_config(source):
    """Load a JSON config (path, file object or dict) into typed objects.

    Returns ``(SystemConfig, ParameterPrior)``.  Unknown keys are rejected so
    that typos fail loudly; values may carry engineering suffixes.
    """
    if isinstance(source, dict):
        raw = dict(source)
    elif hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source) as fh:
            raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(k for k, req in _CONFIG_KEYS.items() if req and k not in raw)
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    try:
        l_factor = int(raw["L"])
        nodes = int(raw.get("ghq_nodes", DEFAULT_QUAD_NODES))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"L and ghq_nodes must be integers: {exc}") from None
    config = build_config(
        parse_quantity(raw["fs_hz"]),
        parse_quantity(raw["t0_s"]),
        l_factor,
        p_t=parse_quantity(raw.get("pt", 1.0)),
        n_0=parse_quantity(raw.get("n0", 0.0)),
        quad_nodes=nodes,
    )
    prior = ParameterPrior(
        sigma_tau=parse_quantity(raw["sigma_tau_s"]),
        sigma_nu=parse_quantity(raw["sigma_nu_hz"]),
        mu_tau=parse_quantity(raw.get("mu_tau_s", 0.0)),
        mu_nu=parse_quantity(raw.get("mu_nu_hz", 0.0)),
    )
    return config, prior
