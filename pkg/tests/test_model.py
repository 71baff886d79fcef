import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subnyq.errors import (
    ConfigError,
    IndexOutOfRange,
    NonIntegerSampleCount,
    NonPositiveInput,
)
from subnyq.model import (
    AliasPartition,
    ParameterPrior,
    SystemConfig,
    build_config,
    gauss_hermite_axis,
    harmonic_limits,
    load_config,
    parse_quantity,
    prior_quadrature,
)


def test_build_config_defaults():
    cfg = build_config(25e6, 2e-6, 1)
    assert cfg.n_samples == 50
    assert cfg.k_total == 150
    assert cfg.f_0 == pytest.approx(500e3)
    assert cfg.t_s == pytest.approx(40e-9)
    assert cfg.bandwidth == pytest.approx(75e6)
    assert cfg.omega_0 == pytest.approx(2 * np.pi * 500e3)


def test_build_config_rejects_odd_sample_count():
    # 25 MHz * 1.0 us = 25 samples: integer but odd.
    with pytest.raises(NonIntegerSampleCount):
        build_config(25e6, 1.0e-6, 1)
    with pytest.raises(NonIntegerSampleCount):
        build_config(25e6, 2.02e-6, 1)  # 50.5 samples


def test_build_config_rejects_nonpositive():
    with pytest.raises(NonPositiveInput):
        build_config(-1.0, 2e-6, 1)
    with pytest.raises(NonPositiveInput):
        build_config(25e6, 0.0, 1)
    with pytest.raises(NonPositiveInput):
        build_config(25e6, 2e-6, 1, p_t=0.0)
    with pytest.raises(NonPositiveInput):
        build_config(25e6, 2e-6, 1, n_0=-1e-9)
    with pytest.raises(ConfigError):
        build_config(25e6, 2e-6, -1)


def test_config_is_immutable():
    cfg = build_config(25e6, 2e-6, 1)
    with pytest.raises(Exception):
        cfg.f_s = 1.0


def test_harmonic_limits_odd_multiple():
    # With k_total = 3 * n_samples every bin folds one replica per side.
    for k_bin in range(-25, 25):
        assert harmonic_limits(k_bin, 50, 150) == (1, 1)


def test_harmonic_limits_even_multiple():
    assert harmonic_limits(0, 50, 100) == (1, 0)
    assert harmonic_limits(-10, 50, 100) == (0, 1)


def test_harmonic_limits_range_check():
    with pytest.raises(IndexOutOfRange):
        harmonic_limits(25, 50, 150)
    with pytest.raises(IndexOutOfRange):
        harmonic_limits(-26, 50, 150)


@given(
    n_half=st.integers(min_value=1, max_value=60),
    mult=st.integers(min_value=1, max_value=10),
)
@settings(max_examples=200, deadline=None)
def test_alias_partition_is_a_partition(n_half, mult):
    n = 2 * n_half
    k = mult * n
    part = AliasPartition.from_counts(k, n)
    seen = np.concatenate(part.groups)
    assert len(seen) == k
    assert np.array_equal(np.sort(seen), np.arange(-k // 2, k // 2))


def test_alias_partition_matches_limits():
    part = AliasPartition.from_counts(150, 50)
    assert np.all(part.l_minus == 1)
    assert np.all(part.l_plus == 1)
    # Bin 0 gathers harmonics {-50, 0, 50}.
    q = 25  # position of bin 0
    assert np.array_equal(part.groups[q], [-50, 0, 50])
    inv = part.group_of_harmonic()
    assert inv[0] == 0          # harmonic -75 folds onto bin -25
    assert inv[75] == 25        # harmonic 0 onto bin 0


def test_prior_quadrature_weights_and_moments():
    prior = ParameterPrior(sigma_tau=1e-9, sigma_nu=5e3, mu_tau=2e-10, mu_nu=-1e3)
    rule = prior_quadrature(prior, 15)
    assert rule.shape == (225, 3)
    w = rule[:, 2]
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    # First moments integrate exactly (Gaussian rule, odd symmetry).
    mean_tau = np.sum(w * rule[:, 0])
    mean_nu = np.sum(w * rule[:, 1])
    assert mean_tau == pytest.approx(prior.mu_tau, abs=1e-10 * prior.sigma_tau + 1e-22)
    assert mean_nu == pytest.approx(prior.mu_nu, abs=1e-10 * prior.sigma_nu)
    # Second central moments as well.
    var_tau = np.sum(w * (rule[:, 0] - prior.mu_tau) ** 2)
    var_nu = np.sum(w * (rule[:, 1] - prior.mu_nu) ** 2)
    assert var_tau == pytest.approx(prior.sigma_tau ** 2, rel=1e-12)
    assert var_nu == pytest.approx(prior.sigma_nu ** 2, rel=1e-12)


def test_prior_quadrature_single_node_is_mean():
    prior = ParameterPrior(sigma_tau=1e-9, sigma_nu=5e3, mu_tau=3e-9, mu_nu=7e3)
    rule = prior_quadrature(prior, 1)
    assert rule.shape == (1, 3)
    assert rule[0, 0] == pytest.approx(prior.mu_tau)
    assert rule[0, 1] == pytest.approx(prior.mu_nu)
    assert rule[0, 2] == pytest.approx(1.0)


def test_prior_quadrature_against_monte_carlo():
    # Independent oracle: sample the prior directly and compare a smooth
    # expectation with the quadrature value.
    prior = ParameterPrior(sigma_tau=1e-9, sigma_nu=5e3)
    rule = prior_quadrature(prior, 15)

    def f(tau, nu):
        return np.cos(2e8 * tau) * np.exp(-((nu / 2e4) ** 2))

    quad_val = np.sum(rule[:, 2] * f(rule[:, 0], rule[:, 1]))
    rng = np.random.default_rng(1234)
    tau = prior.mu_tau + prior.sigma_tau * rng.standard_normal(1_000_000)
    nu = prior.mu_nu + prior.sigma_nu * rng.standard_normal(1_000_000)
    samples = f(tau, nu)
    mc_val = samples.mean()
    mc_err = 4.0 * samples.std() / np.sqrt(samples.size)
    assert abs(quad_val - mc_val) < mc_err


def test_gauss_hermite_axis_polynomial_exactness():
    # Degree <= 2n-1 polynomials integrate exactly; compare against
    # closed-form Gaussian moments E[(X-mu)^p] = sigma^p (p-1)!!.
    mu, sigma = 0.3, 2.0
    x, w = gauss_hermite_axis(mu, sigma, 8)
    double_fact = {0: 1, 2: 1, 4: 3, 6: 15, 8: 105, 10: 945}
    for p in range(0, 12, 2):
        moment = np.sum(w * (x - mu) ** p)
        assert moment == pytest.approx(sigma ** p * double_fact[p], rel=1e-12)


def test_prior_rejects_nonpositive_sigmas():
    with pytest.raises(NonPositiveInput):
        ParameterPrior(sigma_tau=0.0, sigma_nu=1.0)
    with pytest.raises(NonPositiveInput):
        ParameterPrior(sigma_tau=1.0, sigma_nu=-1.0)


def test_parse_quantity():
    assert parse_quantity(2.5) == 2.5
    assert parse_quantity("25 MHz") == pytest.approx(25e6)
    assert parse_quantity("25mhz") == pytest.approx(25e6)
    assert parse_quantity("2us") == pytest.approx(2e-6)
    assert parse_quantity("2 µs") == pytest.approx(2e-6)
    assert parse_quantity("1 ns") == pytest.approx(1e-9)
    assert parse_quantity("5 kHz") == pytest.approx(5e3)
    assert parse_quantity("-3e-9 s") == pytest.approx(-3e-9)
    with pytest.raises(ConfigError):
        parse_quantity("25 lightyears")
    with pytest.raises(ConfigError):
        parse_quantity([1.0])


def test_load_config_roundtrip(tmp_path):
    payload = {
        "fs_hz": "25 MHz",
        "t0_s": "2 us",
        "L": 1,
        "pt": 1.0,
        "sigma_tau_s": "1 ns",
        "sigma_nu_hz": "5 kHz",
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    config, prior = load_config(path)
    assert isinstance(config, SystemConfig)
    assert config.n_samples == 50
    assert config.k_total == 150
    assert prior.sigma_tau == pytest.approx(1e-9)
    assert prior.sigma_nu == pytest.approx(5e3)
    assert prior.mu_tau == 0.0


def test_load_config_rejects_unknown_and_missing_keys():
    good = {
        "fs_hz": 25e6, "t0_s": 2e-6, "L": 1,
        "sigma_tau_s": 1e-9, "sigma_nu_hz": 5e3,
    }
    bad = dict(good, bandwidth=75e6)
    with pytest.raises(ConfigError, match="unknown"):
        load_config(bad)
    del good["sigma_nu_hz"]
    with pytest.raises(ConfigError, match="missing"):
        load_config(good)
