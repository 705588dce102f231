"""Canned experiment sets behind ``ms3 reproduce``.

``paper`` scale follows the published setup: W = 10 GHz, T = 20 us, J = 5,
N = 80000, 22 radios with consecutive primes from 5.7 sqrt(N), six random
subbands of 1 to 10 MHz.  ``desk`` scale keeps T, J and the 0.25 MHz bin
width but shrinks W to 512 MHz (N = 4096) and uses fewer subbands so that
the occupancy ratio ``s / M`` stays comparable.
"""

from __future__ import annotations

from ..exceptions import DomainError
from .config import config_from_mapping

__all__ = ["FIGURES", "SCALES", "canned_configs"]

FIGURES = ("fig2a", "fig2b", "fig2c", "fig4", "fig5", "fig6a", "fig6b", "table1")
SCALES = ("desk", "paper")

_BASE = {
    "desk": {
        "scenario.total_bandwidth": "512e6",
        "scenario.n_subbands": "2",
        "plan.channels": "22",
    },
    "paper": {
        "scenario.total_bandwidth": "10e9",
        "scenario.n_subbands": "6",
        "plan.channels": "22",
    },
}

# single narrow subband at a fixed offset keeps the support at a few bins
_DESK_FIG2 = {
    "scenario.subbands": "200.125e6/0.5e6",
    "scenario.time_offset": "2e-6",
    "plan.channels": "7",
}


def _fig2(kind, scale):
    m = {"fading.kind": kind, "fading.snr_db": "5", "fading.sigma_db": "4", "run.bounds": "true"}
    if scale == "desk":
        m.update(_DESK_FIG2)
    return [(kind, m)]


def _curves(name, scale):
    if name == "fig2a":
        return _fig2("none", scale)
    if name == "fig2b":
        return _fig2("rayleigh", scale)
    if name == "fig2c":
        return _fig2("lognormal", scale)
    if name == "fig4":
        counts = (1, 2, 3) if scale == "desk" else (2, 4, 6)
        return [
            (f"subbands={n},snr={snr}", {"fading.kind": "rayleigh", "fading.snr_db": str(snr), "scenario.n_subbands": str(n)})
            for n in counts
            for snr in (5, 10)
        ]
    if name == "fig5":
        out = []
        for snr in (5, 10):
            out.append((f"none,snr={snr}", {"fading.kind": "none", "fading.snr_db": str(snr)}))
            out.append((f"rayleigh,snr={snr}", {"fading.kind": "rayleigh", "fading.snr_db": str(snr)}))
            out.append(
                (f"lognormal,snr={snr}", {"fading.kind": "lognormal", "fading.snr_db": str(snr), "fading.sigma_db": "4"})
            )
        return out
    if name == "fig6a":
        return [
            (f"sigma={sig},snr={snr}", {"fading.kind": "lognormal", "fading.snr_db": str(snr), "fading.sigma_db": str(sig)})
            for sig in (4, 5, 6)
            for snr in (5, 10)
        ]
    if name == "fig6b":
        base = {"fading.kind": "lognormal", "fading.snr_db": "5", "fading.sigma_db": "5"}
        return [(system, {**base, "run.system": system}) for system in ("ms3", "nyquist_type1", "nyquist_type2")]
    raise DomainError(f"unknown figure {name!r}")


def canned_configs(name, scale="desk", trials=None, seed=0):
    """Labelled :class:`ExperimentConfig` list for one reproducible figure."""
    if scale not in SCALES:
        raise DomainError(f"scale must be one of {SCALES}")
    if name == "table1":
        raise DomainError("table1 is arithmetic; use adc_table")
    out = []
    for label, extra in _curves(name, scale):
        mapping = {**_BASE[scale], **extra, "run.seed": str(seed)}
        mapping["run.trials"] = str(trials if trials is not None else 2000)
        out.append((label, config_from_mapping(mapping)))
    return out
