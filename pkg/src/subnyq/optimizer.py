"""Alternating spectral design of the transmit and receive filters.

The design objective is a weighted trace of the prior-averaged
approximate information matrix.  Restricted to real-even spectra it is a
quadratic form in the transmit coefficients for fixed receive taps, and a
sum of independent per-bin Rayleigh quotients in the receive taps for a
fixed transmit spectrum; both partial problems are solved globally by a
single symmetric eigendecomposition, so alternating the two steps yields
a nondecreasing objective sequence that converges to a fixed point.
Seeded random restarts guard against poor local optima.

:func:`pareto_sweep` traces the delay/Doppler trade-off by sweeping the
scalarization weight and scoring every design against a reference system
with the *exact* average information, so the figures of merit do not
inherit the design model's approximation error.  The default weight grid
stays strictly inside (0, 1): the correspondence between weighted-error
minimization and weighted-information maximization needs a positive
definite weight, and the boundary weights reward designs that exploit
the small-Doppler model where it is least trustworthy.  The endpoint
weights remain available for deliberate single-parameter designs.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateObjective, LengthMismatch, NotConverged
from .fim_approx import (
    efim_approx,
    receive_design_forms,
    transmit_design_form,
)
from .fim_exact import FimResult, efim, relative_gain
from .freqops import get_bundle
from .model import SystemConfig
from .symmetry import (
    assemble_receive_taps,
    expand_even_spectrum,
    lone_group_basis,
    paired_receive_form,
    project_even_spectrum,
    receive_bin_pairs,
    reduce_transmit_form,
    transmit_metric,
)
from .waveforms import reference_pair, rpc_waveform

__all__ = [
    "DEFAULT_ALPHAS",
    "EIGENGAP_RTOL",
    "DesignResult",
    "SweepResult",
    "scalarization_weight",
    "design_objective",
    "transmit_from_form",
    "receive_from_forms",
    "optimize_transmit_step",
    "optimize_receive_step",
    "alternate_optimize",
    "pareto_sweep",
]

#: Default scalarization grid: 21 weights strictly inside (0, 1).
DEFAULT_ALPHAS = tuple(np.linspace(0.0, 1.0, 23)[1:-1])

#: Relative gap under which the two largest eigenvalues are treated as tied.
EIGENGAP_RTOL = 1e-12


@dataclass(frozen=True)
class DesignResult:
    """Outcome of one alternating design run.

    ``objective_trace`` starts with the objective of the initial design
    and then records the value after every half-step (transmit, receive,
    transmit, ...) of the winning restart; it is nondecreasing up to
    round-off.  ``gain_db`` holds the delay and Doppler gains of the
    design over the reference system under the exact average information.
    """

    transmit: np.ndarray
    receive: np.ndarray
    objective: float
    objective_trace: tuple
    converged: bool
    iterations: int
    restart: int
    alpha: float | None = None
    gain_db: tuple | None = None

    def __post_init__(self):
        self.transmit.flags.writeable = False
        self.receive.flags.writeable = False


@dataclass(frozen=True)
class SweepResult:
    """Designs and figures of merit along the scalarization sweep.

    ``gains`` has one row per weight: delay and Doppler gain of the
    design over the reference system under the exact average information,
    then the same two under the approximate model, all in dB of
    inverse-information ratio.  Weights whose run raised are recorded in
    ``failures`` as ``(alpha, message)``; their design slot is ``None``
    and their gains row is NaN, and the sweep simply continues past them.
    """

    alphas: np.ndarray
    designs: tuple
    gains: np.ndarray
    best_index: int | None
    failures: tuple
    reference_transmit: np.ndarray
    reference_receive: np.ndarray
    reference_exact: FimResult
    reference_approx: FimResult

    @property
    def best(self) -> DesignResult:
        if self.best_index is None:
            raise ConfigError("every sweep point failed; no best design")
        return self.designs[self.best_index]


def scalarization_weight(alpha, prior):
    """Diagonal trace weight ``diag(alpha, 1 - alpha)`` on standardized errors.

    ``alpha = 1`` optimizes delay information only, ``alpha = 0`` Doppler
    only.  The weights apply to estimation errors measured in units of the
    prior standard deviations, which makes the two contributions
    dimensionless and comparable; in natural units the returned matrix is
    ``diag(alpha * sigma_tau**2, (1 - alpha) * sigma_nu**2)``.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"scalarization weight must be in [0, 1], got {alpha}")
    return np.diag([alpha * prior.sigma_tau**2,
                    (1.0 - alpha) * prior.sigma_nu**2])


def design_objective(transmit, receive, weight, prior, config: SystemConfig,
                     *, nodes=None, gamma=1.0):
    """Weighted trace of the approximate average information of a design."""
    result = efim_approx(transmit, receive, prior, config, nodes=nodes,
                         gamma=gamma)
    weight = np.asarray(weight, dtype=float)
    return float(np.sum(weight * result.matrix))


def _top_eigenpair(mat, context):
    """Largest eigenvalue and eigenvector of a symmetric matrix.

    The eigenvector sign is fixed by making its first nonzero component
    positive.  An all-zero matrix and a (near-)tied top eigenvalue both
    leave the maximizer ill-defined, so they raise a
    :class:`DegenerateObjective` warning; the zero case falls back to the
    first basis vector.
    """
    if not np.any(mat):
        warnings.warn(f"{context}: objective form is zero; any direction is "
                      "optimal, returning the first basis vector",
                      DegenerateObjective)
        vector = np.zeros(mat.shape[0])
        vector[0] = 1.0
        return 0.0, vector
    values, vectors = np.linalg.eigh(mat)
    if len(values) > 1 and values[-1] - values[-2] < EIGENGAP_RTOL * abs(values[-1]):
        warnings.warn(f"{context}: top two eigenvalues coincide within "
                      f"{EIGENGAP_RTOL:g} relative; the optimizer direction "
                      "is not unique", DegenerateObjective)
    vector = vectors[:, -1]
    nonzero = np.flatnonzero(np.abs(vector) > 1e-12 * np.abs(vector).max())
    if vector[nonzero[0]] < 0:
        vector = -vector
    return values[-1], vector


def transmit_from_form(phi, config: SystemConfig):
    """Globally optimal even transmit spectrum for a fixed quadratic form.

    Maximizes ``g @ phi @ g`` over real-even spectra at exactly the
    configured power, by reducing to the free half-spectrum, absorbing
    the mirrored-harmonic multiplicities into a diagonal metric, and
    taking the top eigenvector.  Returns the spectrum and the attained
    objective value.
    """
    metric = transmit_metric(config)
    reduced = reduce_transmit_form(phi, config) / np.outer(metric, metric)
    value, vector = _top_eigenpair(reduced, "transmit step")
    coeffs = np.sqrt(config.p_t) * (vector / metric)
    return expand_even_spectrum(coeffs, config), config.p_t * value


def receive_from_forms(forms, config: SystemConfig):
    """Globally optimal even receive taps for fixed per-group forms.

    Each mirrored bin pair and each self-paired bin is an independent
    Rayleigh-quotient problem; every group comes back with unit energy,
    which the objective is invariant to.  Returns the full tap vector and
    the attained objective value.
    """
    n = config.n_samples
    solutions = [None] * (n // 2 + 1)
    total = 0.0
    for q in (0, n // 2):
        basis, metric = lone_group_basis(q, config)
        mat = (basis.T @ forms[q].real @ basis) / np.outer(metric, metric)
        value, vector = _top_eigenpair(mat, f"receive step, bin {q}")
        solutions[q] = basis @ (vector / metric)
        total += value
    for low, high in receive_bin_pairs(config):
        value, vector = _top_eigenpair(
            paired_receive_form(forms[low], forms[high]),
            f"receive step, bins {low}/{high}")
        solutions[low] = vector
        total += value
    return assemble_receive_taps(solutions, config), total


def optimize_transmit_step(receive, weight, prior, config: SystemConfig, *,
                           nodes=None, gamma=1.0, noise=None):
    """One transmit half-step: best even spectrum for fixed receive taps."""
    phi = transmit_design_form(receive, prior, config, weight, nodes=nodes,
                               gamma=gamma, noise=noise)
    return transmit_from_form(phi, config)


def optimize_receive_step(transmit, weight, prior, config: SystemConfig, *,
                          nodes=None, gamma=1.0):
    """One receive half-step: best even taps for a fixed transmit spectrum."""
    forms = receive_design_forms(transmit, prior, config, weight, nodes=nodes,
                                 gamma=gamma)
    return receive_from_forms(forms, config)


def _flat_receive(config):
    size = config.k_total // config.n_samples
    return np.full(config.k_total, 1.0 / np.sqrt(size))


def _random_receive(config, rng):
    n = config.n_samples
    partition = get_bundle(config).partition
    solutions = [None] * (n // 2 + 1)
    for q in (0, n // 2):
        basis, metric = lone_group_basis(q, config)
        coeffs = rng.standard_normal(basis.shape[1]) / metric
        solutions[q] = basis @ (coeffs / np.linalg.norm(metric * coeffs))
    for q in range(1, n // 2):
        taps = rng.standard_normal(partition.groups[q].size)
        solutions[q] = taps / np.linalg.norm(taps)
    return assemble_receive_taps(solutions, config)


def _normalized_power(coeffs, config):
    metric = transmit_metric(config)
    scale = np.linalg.norm(metric * coeffs)
    if scale == 0.0:
        raise ConfigError("seed transmit spectrum has no even component")
    return np.sqrt(config.p_t) * coeffs / scale


def _validate_initial(transmit, receive, config):
    if transmit.shape != (config.k_total,) or receive.shape != (config.k_total,):
        raise LengthMismatch(
            f"initial spectra must have {config.k_total} harmonics")
    power = float(np.sum(np.abs(transmit) ** 2))
    if power > config.p_t * (1.0 + 1e-9):
        raise ConfigError(
            f"initial transmit power {power:g} exceeds the budget {config.p_t:g}")
    even = expand_even_spectrum(project_even_spectrum(transmit, config), config)
    if not np.allclose(transmit, even, rtol=0.0, atol=1e-9 * np.sqrt(config.p_t)):
        raise ConfigError("initial transmit spectrum must be real and even")
    if np.iscomplexobj(receive) and np.abs(receive.imag).max() > 0.0:
        raise ConfigError("initial receive taps must be real")
    if not np.allclose(receive[1:], receive[1:][::-1], rtol=0.0,
                       atol=1e-9 * max(1.0, np.abs(receive).max())):
        raise ConfigError("initial receive taps must be even")


def _prototype_design(config):
    coeffs = project_even_spectrum(rpc_waveform(config), config)
    return (expand_even_spectrum(_normalized_power(coeffs, config), config),
            _flat_receive(config))


def _random_design(config, restart, seed):
    rng = np.random.default_rng(list(np.atleast_1d(seed)) + [restart])
    coeffs = rng.standard_normal(config.k_total // 2)
    return (expand_even_spectrum(_normalized_power(coeffs, config), config),
            _random_receive(config, rng))


def _reference_information(reference, prior, config, nodes, gamma):
    """Exact average information of the comparison system.

    ``reference`` may be a precomputed :class:`FimResult` or a
    ``(transmit, receive)`` pair; by default the coded reference waveform
    with the flat low-pass receiver is scored.
    """
    if isinstance(reference, FimResult):
        return reference
    if reference is None:
        reference = reference_pair(config)
    ref_transmit, ref_receive = reference
    return efim(ref_transmit, ref_receive, prior, config, nodes=nodes,
                gamma=gamma)


def alternate_optimize(config, prior, weight, *, transmit_init=None,
                       receive_init=None, tol=1e-6, max_iter=100, restarts=3,
                       seed=0, nodes=None, gamma=1.0, alpha=None,
                       reference=None) -> DesignResult:
    """Alternate the two eigenvector steps from several starting designs.

    The first restart starts from ``(transmit_init, receive_init)``,
    defaulting to the even part of the coded reference waveform with flat
    receive taps; further restarts draw random even seeds.  Iteration
    stops once the objective's relative change falls below ``tol``
    (``tol=inf`` therefore returns after a single full iteration), with a
    :class:`NotConverged` warning if ``max_iter`` is hit first.  The best
    restart by final objective wins and is scored against the reference
    system with the exact average information.
    """
    weight = np.asarray(weight, dtype=float)
    if weight.shape != (2, 2):
        raise ConfigError(f"trace weight must be 2x2, got {weight.shape}")
    if not tol > 0.0:
        raise ConfigError(f"convergence threshold must be positive, got {tol}")
    prototype = _prototype_design(config)
    if transmit_init is None:
        transmit_init = prototype[0]
    else:
        transmit_init = np.asarray(transmit_init, dtype=float)
    if receive_init is None:
        receive_init = prototype[1]
    else:
        receive_init = np.asarray(receive_init, dtype=float)
    _validate_initial(transmit_init, receive_init, config)

    best = None
    for restart in range(max(1, int(restarts))):
        if restart == 0:
            transmit, receive = transmit_init, receive_init
        else:
            transmit, receive = _random_design(config, restart, seed)
        previous = design_objective(transmit, receive, weight, prior, config,
                                    nodes=nodes, gamma=gamma)
        trace = [previous]
        converged = False
        iterations = 0
        for iterations in range(1, int(max_iter) + 1):
            transmit, value = optimize_transmit_step(
                receive, weight, prior, config, nodes=nodes, gamma=gamma)
            trace.append(value)
            receive, value = optimize_receive_step(
                transmit, weight, prior, config, nodes=nodes, gamma=gamma)
            trace.append(value)
            if abs(value - previous) <= tol * abs(value):
                converged = True
                break
            previous = value
        else:
            warnings.warn(
                f"alternating design stopped at max_iter={max_iter} with "
                f"relative change above tol={tol}", NotConverged)
        candidate = DesignResult(transmit, receive, trace[-1], tuple(trace),
                                 converged, iterations, restart, alpha)
        if best is None or candidate.objective > best.objective:
            best = candidate
    ref_exact = _reference_information(reference, prior, config, nodes, gamma)
    design_exact = efim(best.transmit, best.receive, prior, config,
                        nodes=nodes, gamma=gamma)
    return DesignResult(best.transmit, best.receive, best.objective,
                        best.objective_trace, best.converged, best.iterations,
                        best.restart, alpha, relative_gain(design_exact, ref_exact))


def _thread_count():
    raw = os.environ.get("SUBNYQ_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SUBNYQ_THREADS must be an integer, got {raw!r}")


def pareto_sweep(config, prior, alphas=None, *, reference=None, nodes=None,
                 gamma=1.0, tol=1e-6, max_iter=100, restarts=3,
                 seed=0) -> SweepResult:
    """Design one system per scalarization weight and score all of them.

    The winner maximizes the summed exact delay and Doppler gains over
    the reference system; a weight whose run raises is recorded and
    skipped.  Set ``SUBNYQ_THREADS`` to parallelize across weights;
    results are identical either way.
    """
    alphas = np.asarray(DEFAULT_ALPHAS if alphas is None else alphas,
                        dtype=float)
    if reference is None:
        reference = reference_pair(config)
    ref_transmit, ref_receive = reference
    ref_exact = efim(ref_transmit, ref_receive, prior, config, nodes=nodes,
                     gamma=gamma)
    ref_approx = efim_approx(ref_transmit, ref_receive, prior, config,
                             nodes=nodes, gamma=gamma)

    def run(item):
        index, alpha = item
        weight = scalarization_weight(alpha, prior)
        design = alternate_optimize(config, prior, weight, nodes=nodes,
                                    gamma=gamma, tol=tol, max_iter=max_iter,
                                    restarts=restarts, seed=[seed, index],
                                    alpha=alpha, reference=ref_exact)
        approx = efim_approx(design.transmit, design.receive, prior, config,
                             nodes=nodes, gamma=gamma)
        return design, (*design.gain_db, *relative_gain(approx, ref_approx))

    def guarded(item):
        try:
            return run(item), None
        except Exception as exc:  # noqa: BLE001 - sweep must survive any point
            return None, f"{type(exc).__name__}: {exc}"

    workers = _thread_count()
    items = list(enumerate(alphas))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, items))
    else:
        outcomes = [guarded(item) for item in items]

    designs, failures = [], []
    gains = np.full((len(alphas), 4), np.nan)
    for index, (outcome, message) in enumerate(outcomes):
        if outcome is None:
            designs.append(None)
            failures.append((float(alphas[index]), message))
        else:
            designs.append(outcome[0])
            gains[index] = outcome[1]
    total = gains[:, 0] + gains[:, 1]
    best_index = None
    if np.any(np.isfinite(total)):
        best_index = int(np.nanargmax(total))
    return SweepResult(alphas, tuple(designs), gains, best_index,
                       tuple(failures), ref_transmit, ref_receive, ref_exact,
                       ref_approx)
