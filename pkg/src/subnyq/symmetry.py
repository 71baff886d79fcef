"""Real-even reductions of the transmit and receive design spaces.

Restricting both the transmit spectrum and the receive taps to real, even
sequences keeps the optimized system free of a delay-Doppler coupling
bias: the averaged information matrix stays diagonal, so gains in one
parameter are not paid for with cross terms.  This module holds the
bookkeeping for that restriction.

The harmonic grid ``-k/2 .. k/2 - 1`` lacks the positive partner of its
lowest harmonic.  Evenness therefore pins the transmit coefficient on the
lowest harmonic to zero, while the receive tap there survives as a free
real parameter: the interpolated receive response splits that boundary
tap evenly between the two band edges, so it stays real and even for any
value.

On the transmit side the reduction maps a Hermitian form on the full
complex spectrum to a real symmetric form on the free half-spectrum
(:func:`reduce_transmit_form`), with the power constraint turning into a
diagonal metric (:func:`transmit_metric`).  On the receive side evenness
ties each alias group to its mirror group, leaving the bins covering one
half-band independent (:func:`receive_bin_pairs`); the two self-paired
groups carry internal pairings handled by :func:`lone_group_basis`.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, IndexOutOfRange, LengthMismatch
from .freqops import get_bundle

__all__ = [
    "mirror",
    "expand_even_spectrum",
    "project_even_spectrum",
    "transmit_metric",
    "reduce_transmit_form",
    "receive_bin_pairs",
    "paired_receive_form",
    "lone_group_basis",
    "assemble_receive_taps",
]


def mirror(x):
    """Reverse along the last axis, swapping harmonics ``k`` and ``-1 - k``.

    On an even spectrum with a zero boundary slot this is a cyclic shift
    of the identity: ``np.roll(mirror(x), 1) == x`` exactly.
    """
    return np.asarray(x)[..., ::-1]


def _half_size(config):
    return config.k_total // 2


def expand_even_spectrum(y, config):
    """Lift free coefficients to a full real, even spectrum.

    ``y`` holds the coefficients of harmonics ``-k/2 + 1 .. -1`` followed
    by the zero harmonic; the positive harmonics are their mirror images
    and the boundary harmonic ``-k/2`` is pinned to zero.
    """
    half = _half_size(config)
    y = np.asarray(y, dtype=float)
    if y.shape != (half,):
        raise LengthMismatch(
            f"expected {half} free transmit coefficients, got {y.shape}"
        )
    full = np.empty(config.k_total)
    full[0] = 0.0
    full[1:half] = y[: half - 1]
    full[half] = y[half - 1]
    full[half + 1:] = y[: half - 1][::-1]
    return full


def project_even_spectrum(g, config):
    """Free coefficients of the real-even part of a full spectrum.

    Inverse of :func:`expand_even_spectrum` on its range; on an arbitrary
    spectrum it returns the orthogonal projection onto the even-real
    subspace, which is how asymmetric seeds enter the design iteration.
    """
    half = _half_size(config)
    g = np.asarray(g)
    if g.shape != (config.k_total,):
        raise LengthMismatch(
            f"expected a spectrum of length {config.k_total}, got {g.shape}"
        )
    paired = 0.5 * (g[1:half] + g[half + 1:][::-1]).real
    return np.concatenate([paired, [g[half].real]])


def transmit_metric(config):
    """Diagonal metric turning the half-spectrum norm into signal power.

    Mirrored harmonics count twice, the zero harmonic once, so the power
    of the expanded spectrum is ``norm(transmit_metric * y) ** 2``.
    """
    half = _half_size(config)
    metric = np.full(half, np.sqrt(2.0))
    metric[-1] = 1.0
    return metric


def reduce_transmit_form(phi, config):
    """Real symmetric form on the free half-spectrum equivalent to ``phi``.

    For Hermitian ``phi`` the returned matrix satisfies
    ``y @ reduced @ y == (expand_even_spectrum(y) @ phi
    @ expand_even_spectrum(y)).real`` for every real ``y``: the pinned
    boundary row and column drop out and each mirrored pair of harmonics
    collapses onto its negative-side representative.
    """
    k = config.k_total
    half = k // 2
    phi = np.asarray(phi)
    if phi.shape != (k, k):
        raise LengthMismatch(f"expected a ({k}, {k}) form, got {phi.shape}")
    core = phi[1:, 1:]
    neg = slice(0, half - 1)
    center = half - 1
    pos = slice(half, k - 1)
    folded = (core[neg, neg] + core[neg, pos][:, ::-1]
              + core[pos, neg][::-1, :] + core[pos, pos][::-1, ::-1])
    cross = core[neg, center] + core[pos, center][::-1]
    reduced = np.empty((half, half))
    reduced[: half - 1, : half - 1] = folded.real
    reduced[: half - 1, half - 1] = cross.real
    reduced[half - 1, : half - 1] = cross.real
    reduced[half - 1, half - 1] = core[center, center].real
    return reduced


def receive_bin_pairs(config):
    """Bins tied together by evenness, as ``(negative, positive)`` indices.

    Alias group ``q`` collects the harmonics congruent to bin ``q - n/2``;
    negating every harmonic maps it onto group ``n - q``.  Bins ``0`` and
    ``n/2`` map onto themselves and are handled by
    :func:`lone_group_basis`.
    """
    n = config.n_samples
    return tuple((q, n - q) for q in range(1, n // 2))


def paired_receive_form(form_low, form_high):
    """Joint quadratic form for a mirrored pair of alias groups.

    With real taps ``t`` on the low group, the high group carries
    ``t[::-1]``, so the pair's summed Rayleigh quotient is the quotient
    of this single real symmetric matrix.
    """
    form_low = np.asarray(form_low)
    form_high = np.asarray(form_high)
    if form_low.shape != form_high.shape:
        raise LengthMismatch(
            f"paired forms differ in shape: {form_low.shape} vs "
            f"{form_high.shape}"
        )
    return (form_low + form_high[::-1, ::-1]).real


def lone_group_basis(q, config):
    """Basis and metric of the even taps on a self-paired alias group.

    Returns ``(basis, metric)`` with one basis column per free parameter
    and ``basis.T @ basis == diag(metric ** 2)``.  Bin ``n/2`` holds the
    harmonics ``0, ±n, ±2n, ...``, so its taps must be palindromic; bin
    ``0`` holds ``-k/2, -k/2 + n, ...``, pairing every slot with its
    mirror except the boundary harmonic, which stays free.
    """
    n = config.n_samples
    size = config.k_total // n
    if q == n // 2:
        dim = size // 2 + 1
        basis = np.zeros((size, dim))
        for j in range(size // 2):
            basis[j, j] = basis[size - 1 - j, j] = 1.0
        basis[size // 2, dim - 1] = 1.0
        metric = np.full(dim, np.sqrt(2.0))
        metric[-1] = 1.0
    elif q == 0:
        dim = size // 2 + 1
        basis = np.zeros((size, dim))
        basis[0, 0] = 1.0
        for j in range(1, dim):
            basis[j, j] = basis[size - j, j] = 1.0
        metric = np.full(dim, np.sqrt(2.0))
        metric[0] = 1.0
    else:
        raise IndexOutOfRange(
            f"bin {q} is mirror-paired, not self-paired; expected 0 or "
            f"{n // 2}"
        )
    actual = get_bundle(config).partition.groups[q].size
    if actual != size:
        raise ConfigError(
            f"self-paired group {q} has {actual} harmonics, expected {size}"
        )
    return basis, metric


def assemble_receive_taps(solutions, config):
    """Scatter per-bin tap vectors into a full even receive spectrum.

    ``solutions`` holds one tap vector per independent bin ``0 .. n/2``;
    mirrored bins receive the reversed taps of their partners.  The two
    self-paired bins must already respect their internal pairing (as the
    vectors built from :func:`lone_group_basis` do).
    """
    partition = get_bundle(config).partition
    n = config.n_samples
    half_k = config.k_total // 2
    if len(solutions) != n // 2 + 1:
        raise LengthMismatch(
            f"expected {n // 2 + 1} independent bins, got {len(solutions)}"
        )
    taps = np.empty(config.k_total)
    for q in range(n // 2 + 1):
        members = partition.groups[q]
        values = np.asarray(solutions[q], dtype=float)
        if values.shape != members.shape:
            raise LengthMismatch(
                f"bin {q} expects {members.size} taps, got {values.shape}"
            )
        if q == 0 and not np.array_equal(values[1:], values[1:][::-1]):
            raise ConfigError("bin 0 taps must pair mirrored harmonics")
        if q == n // 2 and not np.array_equal(values, values[::-1]):
            raise ConfigError(f"bin {q} taps must be palindromic")
        taps[members + half_k] = values
        if 0 < q < n // 2:
            partner = partition.groups[n - q]
            taps[partner + half_k] = values[::-1]
    return taps
