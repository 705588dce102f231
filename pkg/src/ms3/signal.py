"""Wideband multiband signal synthesis, Nyquist and sub-Nyquist sampling, DFT.

Units and normalization
-----------------------
Time is in seconds and frequency in hertz.  Time-domain noise has the same
per-sample variance ``2 * noise_variance / N`` at every rate, so a Nyquist DFT
bin carries complex Gaussian noise with variance ``noise_variance`` per real
dimension and a channel taking ``M`` samples per segment carries ``M / N``
times that.  The ``N / M`` weight applied during fusion undoes the scaling,
so each folded bin's J-segment energy in noise units is exactly chi-square
with ``2J`` degrees of freedom under noise only.

``SubbandSpec.power`` is expressed as the in-band, per-bin, per-segment SNR
that the subband produces at unit channel gain; a channel amplitude gain
``|H|`` scales that SNR by ``|H|**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

__all__ = [
    "SubbandSpec",
    "ScenarioSpec",
    "SampledSegment",
    "SpectrumFrame",
    "place_subbands",
    "draw_time_offset",
    "signal_component",
    "synthesize_time_sample",
    "sampling_rate",
    "sample_channel",
    "sample_nyquist",
    "sample_subnyquist",
    "dft",
    "segment_spectra",
    "band_spectra",
    "noiseless_bin_energy",
]


@dataclass(frozen=True)
class SubbandSpec:
    center_freq: float
    bandwidth: float
    power: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError("subband bandwidth must be positive")
        if not self.power >= 0:
            raise DomainError("subband power must be nonnegative")

    @property
    def low(self):
        return self.center_freq - 0.5 * self.bandwidth

    @property
    def high(self):
        return self.center_freq + 0.5 * self.bandwidth


@dataclass(frozen=True)
class ScenarioSpec:
    """Wideband signal, observation window and segmentation.

    ``time_offset`` fixes the pulse offset for every trial; leave it ``None``
    to draw it uniformly in ``[0, observation_time / 10]`` per trial.
    """

    total_bandwidth: float
    observation_time: float
    nyquist_rate: float
    segments: int
    nyquist_samples: int
    subbands: tuple[SubbandSpec, ...] = ()
    time_offset: float | None = None
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "subbands", tuple(self.subbands))
        W, T, f = self.total_bandwidth, self.observation_time, self.nyquist_rate
        if not (W > 0 and T > 0 and f > 0):
            raise DomainError("bandwidth, observation time and rate must be positive")
        if f < 2 * W * (1 - 1e-12):
            raise DomainError(f"nyquist_rate {f:g} is below 2W = {2 * W:g}")
        if self.segments < 1 or self.nyquist_samples < 1:
            raise DomainError("segments and nyquist_samples must be positive")
        if abs(self.segments * self.nyquist_samples - f * T) > 1e-6 * f * T:
            raise DomainError(
                f"J*N = {self.segments * self.nyquist_samples} does not equal f*T = {f * T:g}"
            )
        if not self.noise_variance > 0:
            raise DomainError("noise_variance must be positive")
        for band in self.subbands:
            if band.low < -1e-9 * W or band.high > W * (1 + 1e-9):
                raise DomainError(f"subband {band} leaves [0, W]")
        ordered = sorted(self.subbands, key=lambda b: b.low)
        for left, right in zip(ordered, ordered[1:]):
            if left.high > right.low:
                raise DomainError("subbands overlap")

    @classmethod
    def at_nyquist(cls, total_bandwidth, observation_time, segments, subbands=(), **kwargs):
        """Scenario sampled at exactly ``f = 2W``; ``N`` follows from ``fT/J``."""
        f = 2.0 * total_bandwidth
        n = f * observation_time / segments
        if abs(n - round(n)) > 1e-6 * n:
            raise DomainError(f"fT/J = {n:g} is not a whole number")
        return cls(total_bandwidth, observation_time, f, segments, int(round(n)), tuple(subbands), **kwargs)

    @property
    def bin_resolution(self):
        """DFT bin spacing in hertz, ``J / T``."""
        return self.segments / self.observation_time

    @property
    def sample_noise_std(self):
        """Per-sample noise standard deviation, independent of the sampling rate."""
        return math.sqrt(2.0 * self.noise_variance / self.nyquist_samples)

    def amplitude(self, band):
        """Time-domain amplitude ``sqrt(E_l)`` that yields ``band.power`` per-segment SNR."""
        return math.sqrt(8.0 * self.segments * self.noise_variance * band.power) / self.nyquist_rate

    def with_subbands(self, subbands):
        return ScenarioSpec(
            self.total_bandwidth,
            self.observation_time,
            self.nyquist_rate,
            self.segments,
            self.nyquist_samples,
            tuple(subbands),
            self.time_offset,
            self.noise_variance,
        )


@dataclass(frozen=True)
class SampledSegment:
    channel_index: int
    segment_index: int
    samples: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SpectrumFrame:
    channel_index: int
    segment_index: int
    bins: np.ndarray = field(repr=False)


def place_subbands(total_bandwidth, count, bandwidth_range, rng, power=1.0, max_tries=10_000):
    """Random non-overlapping subbands with centers in ``[B/2, W - B/2]``."""
    lo_bw, hi_bw = bandwidth_range
    bands = []
    for _ in range(max_tries):
        if len(bands) == count:
            break
        bw = rng.uniform(lo_bw, hi_bw) if hi_bw > lo_bw else lo_bw
        fc = rng.uniform(0.5 * bw, total_bandwidth - 0.5 * bw)
        cand = SubbandSpec(fc, bw, power)
        if all(cand.high <= b.low or cand.low >= b.high for b in bands):
            bands.append(cand)
    if len(bands) != count:
        raise DomainError(f"could not place {count} non-overlapping subbands")
    return tuple(bands)


def draw_time_offset(scenario, rng):
    if scenario.time_offset is not None:
        return float(scenario.time_offset)
    return float(rng.uniform(0.0, scenario.observation_time / 10.0))


def _per_band(scenario, gains, t, delta):
    t = np.asarray(t, dtype=float)
    gains = np.broadcast_to(np.asarray(gains, dtype=float), (len(scenario.subbands),))
    out = np.zeros((len(scenario.subbands),) + t.shape)
    tau = t - delta
    for l, band in enumerate(scenario.subbands):
        if gains[l] == 0.0:
            continue
        amp = gains[l] * scenario.amplitude(band) * band.bandwidth
        out[l] = amp * np.sinc(band.bandwidth * tau) * np.cos(2.0 * np.pi * band.center_freq * tau)
    return out


def signal_component(scenario, gains, t, delta):
    """Noiseless received waveform at times ``t`` for amplitude gains ``|H_l|``."""
    if len(scenario.subbands) == 0:
        return np.zeros(np.shape(t))
    return _per_band(scenario, gains, t, delta).sum(axis=0)


def synthesize_time_sample(scenario, gains, t, rng, delta=None):
    """Received samples (signal plus white Gaussian noise) at times ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > scenario.observation_time):
        raise DomainError("sample times must lie in [0, T]")
    if np.size(gains) not in (1, len(scenario.subbands)) and len(scenario.subbands):
        raise DomainError("need one gain per subband")
    if delta is None:
        delta = draw_time_offset(scenario, rng)
    noise = rng.normal(0.0, scenario.sample_noise_std, t_arr.shape)
    out = signal_component(scenario, gains, t_arr, delta) + noise
    return float(out) if out.ndim == 0 else out


def sampling_rate(scenario, samples_per_segment):
    """``f_i = J * M_i / T``."""
    return scenario.segments * samples_per_segment / scenario.observation_time


def _split(channel_index, stream, samples_per_segment, segments):
    blocks = stream.reshape(segments, samples_per_segment)
    return [SampledSegment(channel_index, j + 1, blocks[j]) for j in range(segments)]


def sample_channel(scenario, samples_per_segment, gains, delta, rng, channel_index=0, noise=True):
    """Sample at ``f_i = J M / T`` over ``[0, T)`` and cut into ``J`` segments.

    Samples come from evaluating the continuous-time model at ``n / f_i``;
    ``rng`` supplies independent noise for this channel.
    """
    if samples_per_segment < 1 or samples_per_segment > scenario.nyquist_samples:
        raise DomainError("samples per segment must lie in [1, N]")
    rate = sampling_rate(scenario, samples_per_segment)
    t = np.arange(scenario.segments * samples_per_segment) / rate
    stream = signal_component(scenario, gains, t, delta)
    if noise:
        stream = stream + rng.normal(0.0, scenario.sample_noise_std, stream.shape)
    return _split(channel_index, stream, samples_per_segment, scenario.segments)


def sample_nyquist(scenario, gains, delta, rng, channel_index=0, noise=True):
    return sample_channel(scenario, scenario.nyquist_samples, gains, delta, rng, channel_index, noise)


def sample_subnyquist(scenario, samples_per_segment, gains, delta, rng, channel_index=0, noise=True):
    return sample_channel(scenario, samples_per_segment, gains, delta, rng, channel_index, noise)


def dft(segment):
    """DFT of one segment; pocketfft handles prime lengths in O(L log L)."""
    return SpectrumFrame(segment.channel_index, segment.segment_index, np.fft.fft(segment.samples))


def segment_spectra(segments):
    """Stack the DFTs of a channel's segments into a ``(J, L)`` array."""
    return np.fft.fft(np.stack([s.samples for s in segments]), axis=-1)


def band_spectra(scenario, delta):
    """Noise-free Nyquist segment spectra of each subband at unit gain.

    Shape ``(bands, J, N)``.  By linearity a channel with amplitude gains
    ``g`` observes ``tensordot(g, band_spectra, 1)`` plus noise.
    """
    n_total = scenario.segments * scenario.nyquist_samples
    t = np.arange(n_total) / scenario.nyquist_rate
    waves = _per_band(scenario, 1.0, t, delta)
    return np.fft.fft(waves.reshape(len(scenario.subbands), scenario.segments, scenario.nyquist_samples), axis=-1)


def noiseless_bin_energy(scenario, gains, delta, per_band=False):
    """Signal-only Nyquist bin energy summed over segments, in noise units.

    Returns ``sum_j |X_j[k]|^2 / noise_variance``, the noncentrality of each
    bin's energy statistic.  With ``per_band`` the result has one row per
    subband.
    """
    spectra = band_spectra(scenario, delta)
    g = np.broadcast_to(np.asarray(gains, dtype=float), (len(scenario.subbands),))
    if per_band:
        spectra = spectra * g[:, None, None]
    else:
        spectra = np.tensordot(g, spectra, axes=1)[None]
    energy = np.sum(spectra.real**2 + spectra.imag**2, axis=1) / scenario.noise_variance
    return energy if per_band else energy[0]
