"""Acceptance gate: one test and one printed pass/fail line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the six summary
lines.  The sweeps and the Monte-Carlo report are shared module fixtures,
so the whole gate costs three alternating sweeps (L = 0, 1, 2) plus one
30000-trial estimation run.
"""

import numpy as np
import pytest

from subnyq.estimator import monte_carlo, sample_noise
from subnyq.fim_approx import (
    efim_approx,
    receive_design_forms,
    receive_objective,
    transmit_design_form,
)
from subnyq.fim_exact import efim, fim_exact
from subnyq.freqops import (
    delay_matrix,
    doppler_matrices,
    get_bundle,
    noise_covariance,
    received_signal,
)
from subnyq.model import AliasPartition, ParameterPrior, build_config
from subnyq.optimizer import (
    alternate_optimize,
    pareto_sweep,
    scalarization_weight,
)
from subnyq.symmetry import (
    expand_even_spectrum,
    mirror,
    reduce_transmit_form,
    transmit_metric,
)
from subnyq.waveforms import reference_pair

FULL = {l_factor: build_config(25e6, 2e-6, l_factor) for l_factor in (0, 1, 2)}
SMALL = build_config(25e6, 0.8e-6, 1, quad_nodes=7)
PRIOR = ParameterPrior(sigma_tau=1e-9, sigma_nu=5e3)


def check(criterion, ok, detail):
    line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def sweeps():
    return {l_factor: pareto_sweep(FULL[l_factor], PRIOR, restarts=3, seed=0)
            for l_factor in (0, 1, 2)}


@pytest.fixture(scope="module")
def mc_report(sweeps):
    best = sweeps[1].best
    return monte_carlo(best.transmit, best.receive, PRIOR, FULL[1],
                       trials=2000, seed=0)


def test_criterion_1_pareto_gains(sweeps):
    sweep = sweeps[1]
    chi_tau = float(np.nanmax(sweep.gains[:, 0]))
    chi_nu = float(np.nanmax(sweep.gains[:, 1]))
    ok = (len(sweep.alphas) == 21 and not sweep.failures
          and chi_tau >= 15.0 and chi_nu >= 2.0)
    check(1, ok, f"21-point sweep at L=1: max delay gain {chi_tau:.2f} dB "
                 f"(need >= 15), max Doppler gain {chi_nu:.2f} dB (need >= 2)")


def test_criterion_2_approximation_gap(sweeps):
    gaps = {}
    for l_factor, sweep in sweeps.items():
        gap_tau = float(np.nanmax(np.abs(sweep.gains[:, 0]
                                         - sweep.gains[:, 2])))
        gap_nu = float(np.nanmax(np.abs(sweep.gains[:, 1]
                                        - sweep.gains[:, 3])))
        gaps[l_factor] = max(gap_tau, gap_nu)
    worst = max(gaps.values())
    detail = ", ".join(f"L={l}: {gap:.2f} dB" for l, gap in gaps.items())
    check(2, worst <= 3.0,
          f"exact-vs-approximate gain gap over every swept weight: {detail} "
          f"(need <= 3)")


def test_criterion_3_monte_carlo_convergence(mc_report):
    grid = np.asarray(mc_report.psnr_grid)
    nmse = {"tau": np.asarray(mc_report.nmse_tau),
            "nu": np.asarray(mc_report.nmse_nu)}
    bound = {"tau": np.asarray(mc_report.bcrlb_tau),
             "nu": np.asarray(mc_report.bcrlb_nu)}
    low = grid <= 45.0
    high = grid >= 100.0
    low_dev = max(float(np.max(np.abs(nmse[key][low] - 1.0)))
                  for key in nmse)
    high_ratio = max(float(np.max(nmse[key][high] / bound[key][high]))
                     for key in nmse)
    knee_tau = float(grid[nmse["tau"] <= 0.5][0])
    knee_nu = float(grid[nmse["nu"] <= 0.5][0])
    ok = (low_dev <= 0.05 and high_ratio <= 1.5
          and 60.0 <= knee_tau <= 70.0 and 80.0 <= knee_nu <= 90.0)
    check(3, ok,
          f"2000 trials/point: low-pSNR |NMSE-1| {low_dev:.3f} (need <= "
          f"0.05), high-pSNR NMSE/bound {high_ratio:.2f} (need <= 1.5), "
          f"knees {knee_tau:.0f}/{knee_nu:.0f} dB-Hz (need 65+-5 / 85+-5)")


def random_instance(rng, config):
    k = config.k_total
    g = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    g *= np.sqrt(config.p_t / np.sum(np.abs(g) ** 2))
    h = rng.standard_normal(k) + 1j * rng.standard_normal(k) + 4.0
    return g, h


def finite_difference_fim(theta, gamma, g, h, config, noise):
    tau, nu = theta
    d_tau, d_nu = 1e-12, 0.1
    w = get_bundle(config).w

    def mean(t, n):
        return received_signal((t, n), gamma, g, h, config)[0]

    dv_tau = (mean(tau + d_tau, nu) - mean(tau - d_tau, nu)) / (2 * d_tau)
    dv_nu = (mean(tau, nu + d_nu) - mean(tau, nu - d_nu)) / (2 * d_nu)
    out = np.empty((2, 2))
    for (i, j), (a, b) in {(0, 0): (dv_tau, dv_tau),
                           (0, 1): (dv_tau, dv_nu),
                           (1, 1): (dv_nu, dv_nu)}.items():
        out[i, j] = out[j, i] = 2 * np.vdot(a, noise.solve_time(b, w)).real
    return out


def test_criterion_4_oracle_equivalences():
    fd_errors = []
    for index in range(20):
        rng = np.random.default_rng(100 + index)
        g, h = random_instance(rng, SMALL)
        theta = (rng.normal(0.0, PRIOR.sigma_tau),
                 rng.normal(0.0, PRIOR.sigma_nu))
        gamma = rng.standard_normal() + 1j * rng.standard_normal()
        noise = noise_covariance(h, 1e-3, SMALL)
        exact = fim_exact(theta, gamma, g, h, SMALL, noise=noise).matrix
        oracle = finite_difference_fim(theta, gamma, g, h, SMALL, noise)
        fd_errors.append(np.linalg.norm(exact - oracle)
                         / np.linalg.norm(oracle))
    fd_worst = float(max(fd_errors))

    weight = scalarization_weight(0.3, PRIOR)
    form_errors = []
    for index in range(5):
        rng = np.random.default_rng(300 + index)
        g, h = random_instance(rng, SMALL)
        target = float(np.sum(weight * efim_approx(g, h, PRIOR, SMALL,
                                                   nodes=5).matrix))
        phi = transmit_design_form(h, PRIOR, SMALL, weight, nodes=5)
        forms = receive_design_forms(g, PRIOR, SMALL, weight, nodes=5)
        quad_g = float((g.conj() @ phi @ g).real)
        quad_h = float(receive_objective(h, forms,
                                         get_bundle(SMALL).partition))
        form_errors.append(abs(quad_g - target) / abs(target))
        form_errors.append(abs(quad_h - target) / abs(target))
    form_worst = float(max(form_errors))

    reduce_errors = []
    for index in range(5):
        rng = np.random.default_rng(500 + index)
        raw = rng.standard_normal((SMALL.k_total, SMALL.k_total)) \
            + 1j * rng.standard_normal((SMALL.k_total, SMALL.k_total))
        phi = raw + raw.conj().T
        reduced = reduce_transmit_form(phi, SMALL)
        for _ in range(4):
            y = rng.standard_normal(SMALL.k_total // 2)
            g = expand_even_spectrum(y, SMALL)
            full_quad = float((g @ phi @ g).real)
            reduce_errors.append(abs(float(y @ reduced @ y) - full_quad)
                                 / max(abs(full_quad), 1e-30))
    reduce_worst = float(max(reduce_errors))

    metric = transmit_metric(SMALL)
    monotone = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal(SMALL.k_total // 2)
        coeffs *= np.sqrt(SMALL.p_t) / np.linalg.norm(metric * coeffs)
        transmit = expand_even_spectrum(coeffs, SMALL)
        wiggle = rng.standard_normal(SMALL.k_total)
        wiggle[1:] = 0.5 * (wiggle[1:] + wiggle[1:][::-1])
        receive = 1.0 + 0.2 * wiggle
        result = alternate_optimize(SMALL, PRIOR, weight,
                                    transmit_init=transmit,
                                    receive_init=receive, restarts=1,
                                    seed=seed)
        trace = np.asarray(result.objective_trace)
        slack = 1e-9 * np.abs(trace[1:])
        monotone = monotone and bool(np.all(np.diff(trace) >= -slack))

    ok = (fd_worst <= 1e-4 and form_worst <= 1e-8
          and reduce_worst <= 1e-10 and monotone)
    check(4, ok,
          f"information vs finite differences {fd_worst:.2e} (20 instances, "
          f"need <= 1e-4); transmit/receive form identities {form_worst:.2e} "
          f"(need <= 1e-8); mirrored-fold quadratic {reduce_worst:.2e} "
          f"(need <= 1e-10); 10 objective traces monotone: {monotone}")


def test_criterion_5_structural_invariants(sweeps):
    partition_ok = True
    partition_count = 0
    families = ([(25e6, 2e-6, l_factor) for l_factor in range(6)]
                + [(25e6, 0.8e-6, l_factor) for l_factor in (0, 3, 7, 14)]
                + [(3.0, 2.0, l_factor) for l_factor in (0, 1, 5, 20, 49)])
    for f_s, t_0, l_factor in families:
        config = build_config(f_s, t_0, l_factor)
        if config.k_total > 600:
            continue
        partition_count += 1
        partition = AliasPartition.from_config(config)
        n, k = config.n_samples, config.k_total
        seen = np.concatenate(partition.groups)
        partition_ok = partition_ok and (
            np.array_equal(np.sort(seen), np.arange(-k // 2, k // 2)))
        for position, members in enumerate(partition.groups):
            folded = ((np.asarray(members) + n // 2) % n) - n // 2
            partition_ok = partition_ok and bool(
                np.all(folded == position - n // 2))

    config = FULL[1]
    tau_1, tau_2 = 3.1e-9, -1.4e-9
    nu_1, nu_2 = 4.2e3, -1.9e3
    d_1, d_2 = delay_matrix(tau_1, config), delay_matrix(tau_2, config)
    group_ok = bool(
        np.allclose(d_1 * d_2, delay_matrix(tau_1 + tau_2, config),
                    atol=1e-12)
        and np.allclose(delay_matrix(0.0, config), 1.0)
        and np.allclose(np.abs(d_1), 1.0))
    m_1 = doppler_matrices(nu_1, config)
    m_2 = doppler_matrices(nu_2, config)
    m_12 = doppler_matrices(nu_1 + nu_2, config)
    identity = np.eye(config.n_samples)
    group_ok = group_ok and bool(
        np.allclose(m_1[0] * m_2[0], m_12[0], atol=1e-12)
        and np.allclose(np.abs(m_1[0]), 1.0)
        and np.allclose(m_1[1] @ m_2[1], m_12[1], atol=1e-10)
        and np.allclose(m_1[1] @ m_1[1].conj().T, identity, atol=1e-10)
        and np.allclose(doppler_matrices(0.0, config)[1], identity,
                        atol=1e-12))

    g_ref, h_ref = reference_pair(config)
    j_sym = efim(g_ref, h_ref, PRIOR, config).matrix
    off_diag = abs(j_sym[0, 1]) / np.sqrt(j_sym[0, 0] * j_sym[1, 1])

    mirror_err = 0.0
    for design in sweeps[1].designs[::10]:
        j_plain = efim(design.transmit, design.receive, PRIOR,
                       config).matrix
        j_mirror = efim(mirror(design.transmit), mirror(design.receive),
                        PRIOR, config).matrix
        mirror_err = max(mirror_err, np.linalg.norm(j_plain - j_mirror)
                         / np.linalg.norm(j_plain))

    noise = noise_covariance(h_ref, 1e-3, config)
    draws = sample_noise(noise.r_eta, np.random.default_rng(0), size=100_000)
    empirical = draws.T @ draws.conj() / draws.shape[0]
    cov_err = (np.linalg.norm(empirical - noise.r_eta)
               / np.linalg.norm(noise.r_eta))

    ok = (partition_ok and partition_count >= 12 and group_ok
          and off_diag <= 1e-6 and mirror_err <= 1e-3 and cov_err <= 0.05)
    check(5, ok,
          f"alias partition on {partition_count} configs: {partition_ok}; "
          f"delay/Doppler factor groups: {group_ok}; symmetric-filter "
          f"information off-diagonal {off_diag:.2e} (need <= 1e-6); mirrored "
          f"designs {mirror_err:.2e} (need <= 1e-3); sampled covariance "
          f"{cov_err:.3f} Frobenius (need <= 0.05)")


def test_criterion_6_waveform_shapes():
    config = FULL[0]
    bundle = get_bundle(config)
    frequency = np.abs(bundle.harmonics) * config.f_0

    delay_design = alternate_optimize(
        config, PRIOR, scalarization_weight(1.0, PRIOR), restarts=3, seed=0)
    power = np.abs(delay_design.transmit) ** 2
    top_third = frequency >= (2.0 / 3.0) * (config.bandwidth / 2.0)
    freq_fraction = float(power[top_third].sum() / power.sum())

    doppler_design = alternate_optimize(
        config, PRIOR, scalarization_weight(0.0, PRIOR), restarts=3, seed=0)
    times = np.linspace(-config.t_0 / 2, config.t_0 / 2, 4096,
                        endpoint=False)
    samples = np.exp(1j * config.omega_0
                     * np.outer(times, bundle.harmonics)) \
        @ doppler_design.transmit
    envelope = np.abs(samples) ** 2
    outer_third = np.abs(times) > config.t_0 / 3
    time_fraction = float(envelope[outer_third].sum() / envelope.sum())

    ok = freq_fraction >= 0.70 and time_fraction >= 0.70
    check(6, ok,
          f"delay-weighted transmit holds {freq_fraction:.2f} of power in "
          f"the top third of |frequency| and Doppler-weighted transmit "
          f"{time_fraction:.2f} in the outer third of the period "
          f"(need >= 0.70 each)")
