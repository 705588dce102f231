"""Per-channel energies, fusion into a Nyquist-grid statistic, and decisions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aliasing import ChannelPlan, fold_index
from .exceptions import DomainError
from .specfun import inv_marcum_q_b, inv_reg_upper_gamma, marcum_q, reg_upper_gamma

__all__ = [
    "EnergyVector",
    "TestStatistic",
    "Decision",
    "energy_vector",
    "energy_from_spectra",
    "fuse",
    "fold_lookup",
    "decide",
    "threshold_for_pfa",
    "single_channel_probabilities",
]


@dataclass(frozen=True)
class EnergyVector:
    channel_index: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(self.values < 0):
            raise DomainError("energies must be nonnegative")

    @property
    def length(self):
        return self.values.shape[-1]


@dataclass(frozen=True)
class TestStatistic:
    values: np.ndarray = field(repr=False)
    plan: ChannelPlan
    segments: int

    @property
    def channels(self):
        return self.plan.channels

    @property
    def dof_half(self):
        """``J v``, half the chi-square degrees of freedom under noise only."""
        return self.segments * self.channels


@dataclass(frozen=True)
class Decision:
    occupied: np.ndarray = field(repr=False)
    threshold: float | np.ndarray


def energy_vector(frames):
    """Sum of squared DFT magnitudes over a channel's segments."""
    frames = list(frames)
    if not frames:
        raise DomainError("need at least one frame")
    idx = {f.channel_index for f in frames}
    if len(idx) != 1:
        raise DomainError("frames come from different channels")
    lengths = {f.bins.shape[-1] for f in frames}
    if len(lengths) != 1:
        raise ValueError(f"frame lengths differ: {sorted(lengths)}")
    total = np.zeros(lengths.pop())
    for f in frames:
        total += f.bins.real**2 + f.bins.imag**2
    return EnergyVector(idx.pop(), total)


def energy_from_spectra(spectra, channel_index=0):
    """Energy vector from a ``(J, M)`` array of segment spectra."""
    spectra = np.asarray(spectra)
    return EnergyVector(channel_index, np.sum(spectra.real**2 + spectra.imag**2, axis=0))


def fold_lookup(plan):
    """``(v, N)`` table of signed-frequency folded positions per channel."""
    k = np.arange(plan.nyquist_N)
    return np.stack([fold_index(k, M, plan.nyquist_N) for M in plan.sample_counts])


def fuse(energies, plan, segments, noise_variance=1.0, lookup=None):
    """Fusion-center statistic ``sum_i (N / M_i) E_i[|k_s| mod M_i]`` in noise units.

    ``energies`` holds one vector per plan channel, in plan order.  Energy
    arrays may carry leading batch axes.
    """
    energies = list(energies)
    if len(energies) != plan.channels:
        raise ValueError(f"plan has {plan.channels} channels, got {len(energies)} energy vectors")
    N = plan.nyquist_N
    if lookup is None:
        lookup = fold_lookup(plan)
    total = None
    for i, (ev, M) in enumerate(zip(energies, plan.sample_counts)):
        values = ev.values if isinstance(ev, EnergyVector) else np.asarray(ev)
        if values.shape[-1] != M:
            raise ValueError(f"channel {i}: energy length {values.shape[-1]} != M_i = {M}")
        term = (N / M) * values[..., lookup[i]]
        total = term if total is None else total + term
    return TestStatistic(total / noise_variance, plan, int(segments))


def decide(stat, threshold):
    """Declare bin ``k`` occupied iff ``stat[k] > threshold`` (ties go to noise)."""
    values = stat.values if isinstance(stat, TestStatistic) else np.asarray(stat)
    lam = np.asarray(threshold, dtype=float)
    if np.any(lam < 0):
        raise DomainError("threshold must be nonnegative")
    return Decision(values > lam, float(lam) if lam.ndim == 0 else lam)


def threshold_for_pfa(alpha, J, v, aliased_amplitude=None):
    """Threshold for a target false-alarm rate ``alpha``.

    By default inverts the noise-only tail ``Q(Jv, lam / 2) = alpha``, which
    is exact on unaffected bins.  Passing ``aliased_amplitude`` ``a_s``
    instead solves ``Q_{Jv}(a_s, sqrt(lam)) = alpha``, the conservative
    choice that also holds on aliased bins.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    dof_half = J * v
    if aliased_amplitude is None:
        return 2.0 * inv_reg_upper_gamma(dof_half, alpha)
    b = inv_marcum_q_b(dof_half, float(aliased_amplitude), alpha)
    return b * b


def single_channel_probabilities(J, lam, snr):
    """Nyquist energy-detector ``(P_f, P_d)`` for ``J`` segments.

    ``snr`` is the total bin SNR over the window, so the energy has
    noncentrality ``2 snr``.
    """
    if np.any(np.asarray(lam) < 0) or np.any(np.asarray(snr) < 0):
        raise DomainError("lam and snr must be nonnegative")
    pf = reg_upper_gamma(J, np.asarray(lam, dtype=float) / 2.0)
    pd = marcum_q(J, np.sqrt(2.0 * np.asarray(snr, dtype=float)), np.sqrt(lam))
    if np.ndim(pf) == 0 and np.ndim(pd) == 0:
        return float(pf), float(pd)
    return pf, pd
