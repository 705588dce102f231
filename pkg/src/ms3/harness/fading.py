"""Per-channel SNR draws for faded links."""

from __future__ import annotations

import numpy as np

__all__ = ["draw_fading"]


def draw_fading(spec, v, rng, bands=None):
    """SNR multipliers ``gamma_i`` for ``v`` channels.

    With ``bands`` the result has shape ``(v, bands)`` and every
    channel/subband pair fades independently.  Rayleigh gives exponential
    SNRs with mean ``spec.mean_snr``; log-normal gives
    ``10 log10(gamma) ~ Normal(mean_snr_db, sigma_db**2)``.
    """
    shape = (v,) if bands is None else (v, bands)
    if spec.kind == "none":
        return np.full(shape, float(spec.mean_snr))
    if spec.kind == "rayleigh":
        return rng.exponential(spec.mean_snr, shape)
    return 10.0 ** (rng.normal(spec.mean_snr, spec.sigma_db, shape) / 10.0)
