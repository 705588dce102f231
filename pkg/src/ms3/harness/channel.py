"""Reporting link between the cognitive radios and the fusion center."""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import DomainError

__all__ = ["control_channel_impair"]


def control_channel_impair(energies, model="ideal", rng=None, snr_db=15.0):
    """Pass energy reports through the control channel.

    ``ideal`` returns the input unchanged.  ``rayleigh_block`` sends each
    report, normalized to unit average power, over a flat block-fading link
    ``r = sqrt(P) h u + n`` with ``h, n ~ CN(0, 1)`` and ``P`` the report SNR.
    The fusion center knows ``h`` and inverts it, so only the residual noise
    ``n / (sqrt(P) h)`` remains.  Negative results are clipped to zero.
    """
    if model == "ideal":
        return energies
    if model != "rayleigh_block":
        raise DomainError(f"unknown control channel model {model!r}")
    if math.isinf(snr_db) and snr_db > 0:
        return [np.array(e, dtype=float, copy=True) for e in energies]
    gain = math.sqrt(10.0 ** (snr_db / 10.0))
    out = []
    for e in energies:
        e = np.asarray(e, dtype=float)
        scale = math.sqrt(float(np.mean(e * e))) or 1.0
        h = complex(rng.normal(), rng.normal()) / math.sqrt(2.0)
        n = (rng.normal(size=e.shape) + 1j * rng.normal(size=e.shape)) / math.sqrt(2.0)
        r = gain * h * (e / scale) + n
        out.append(np.maximum((r / (gain * h)).real * scale, 0.0))
    return out
