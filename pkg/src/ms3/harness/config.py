"""Experiment configuration files.

A configuration is a list of ``key = value`` pairs with dotted keys
(``scenario.*``, ``plan.*``, ``fading.*``, ``run.*``).  They may be written
flat or grouped INI-style under ``[scenario]``, ``[plan]`` ... headers, in
which case the header supplies the prefix.

Schema (defaults in parentheses)::

    scenario.total_bandwidth   W in Hz (512e6)
    scenario.observation_time  T in s (20e-6)
    scenario.segments          J (5)
    scenario.nyquist_rate      f in Hz (2W)
    scenario.time_offset       fixed offset in s, or "random" (random)
    scenario.noise_variance    (1.0)
    scenario.subbands          "fc/B[/power];..." in Hz, or empty to place randomly
    scenario.n_subbands        bands to place randomly (6)
    scenario.bandwidth_min     (1e6)
    scenario.bandwidth_max     (10e6)
    plan.channels              v (22)
    plan.prime_factor          a, first prime >= a sqrt(N) (5.7)
    plan.sample_counts         explicit "M1,M2,..." overriding v and a
    plan.strict                require a consecutive-prime plan (true)
    fading.kind                none | rayleigh | lognormal (none)
    fading.snr_db              per-segment in-band SNR in dB (5)
    fading.sigma_db            log-normal spread (4)
    run.trials                 (1000)
    run.seed                   (0)
    run.alphas                 comma list of target false-alarm rates
    run.lambdas                comma list of thresholds (instead of alphas)
    run.system                 ms3 | nyquist_type1 | nyquist_type2 (ms3)
    run.control_channel        ideal | rayleigh_block (ideal)
    run.control_snr_db         (15)
    run.bounds                 attach analytic bound columns (false)
    run.truth                  band | magnitude (band)
    run.truth_fraction         leakage threshold relative to the band peak (0.01)
"""

from __future__ import annotations

import configparser
from pathlib import Path

from ..aliasing import ChannelPlan
from ..bounds import FadingSpec
from ..exceptions import DomainError
from ..signal import ScenarioSpec, SubbandSpec
from .experiment import DEFAULT_ALPHAS, ExperimentConfig

__all__ = ["DEFAULTS", "parse_config_text", "load_config", "config_from_mapping"]

DEFAULTS = {
    "scenario.total_bandwidth": "512e6",
    "scenario.observation_time": "20e-6",
    "scenario.segments": "5",
    "scenario.nyquist_rate": "",
    "scenario.time_offset": "random",
    "scenario.noise_variance": "1.0",
    "scenario.subbands": "",
    "scenario.n_subbands": "6",
    "scenario.bandwidth_min": "1e6",
    "scenario.bandwidth_max": "10e6",
    "plan.channels": "22",
    "plan.prime_factor": "5.7",
    "plan.sample_counts": "",
    "plan.strict": "true",
    "fading.kind": "none",
    "fading.snr_db": "5",
    "fading.sigma_db": "4",
    "run.trials": "1000",
    "run.seed": "0",
    "run.alphas": ",".join(f"{a:g}" for a in DEFAULT_ALPHAS),
    "run.lambdas": "",
    "run.system": "ms3",
    "run.control_channel": "ideal",
    "run.control_snr_db": "15",
    "run.bounds": "false",
    "run.truth": "band",
    "run.truth_fraction": "0.01",
}

_FLAT = "__flat__"


def parse_config_text(text):
    """Dotted-key mapping from flat or sectioned ``key = value`` text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    stripped = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(("#", ";"))]
    if not stripped or not stripped[0].lstrip().startswith("["):
        text = f"[{_FLAT}]\n{text}"
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            full = key if section == _FLAT else f"{section}.{key}"
            if full not in DEFAULTS:
                raise DomainError(f"unknown configuration key {full!r}")
            out[full] = value.strip()
    return out


def load_config(path, overrides=None):
    mapping = parse_config_text(Path(path).read_text())
    mapping.update(overrides or {})
    return config_from_mapping(mapping)


def _floats(text):
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"not a boolean: {text!r}")


def _subbands(text):
    bands = []
    for item in filter(None, (p.strip() for p in text.split(";"))):
        parts = [float(x) for x in item.split("/")]
        if len(parts) not in (2, 3):
            raise DomainError(f"subband spec {item!r} must be fc/B or fc/B/power")
        bands.append(SubbandSpec(*parts))
    return tuple(bands)


def config_from_mapping(mapping):
    """Build an :class:`ExperimentConfig` from dotted keys (missing keys take defaults)."""
    unknown = set(mapping) - set(DEFAULTS)
    if unknown:
        raise DomainError(f"unknown configuration keys {sorted(unknown)}")
    c = {**DEFAULTS, **{k: str(v) for k, v in mapping.items()}}

    W = float(c["scenario.total_bandwidth"])
    T = float(c["scenario.observation_time"])
    J = int(c["scenario.segments"])
    f = float(c["scenario.nyquist_rate"]) if c["scenario.nyquist_rate"] else 2.0 * W
    offset = None if c["scenario.time_offset"] in ("", "random") else float(c["scenario.time_offset"])
    n = f * T / J
    if abs(n - round(n)) > 1e-6 * n:
        raise DomainError(f"fT/J = {n:g} is not a whole number")
    scenario = ScenarioSpec(
        W, T, f, J, int(round(n)), _subbands(c["scenario.subbands"]), offset, float(c["scenario.noise_variance"])
    )

    plan = None
    if c["plan.sample_counts"]:
        counts = tuple(int(x) for x in c["plan.sample_counts"].split(","))
        plan = ChannelPlan(counts, scenario.nyquist_samples, strict=_bool(c["plan.strict"]))

    kind = c["fading.kind"]
    snr_db = float(c["fading.snr_db"])
    if kind == "lognormal":
        fading = FadingSpec.lognormal(snr_db, float(c["fading.sigma_db"]))
    else:
        fading = FadingSpec(kind, 10.0 ** (snr_db / 10.0))

    lambdas = _floats(c["run.lambdas"]) if c["run.lambdas"] else None
    alphas = None if lambdas else _floats(c["run.alphas"])
    return ExperimentConfig(
        scenario=scenario,
        fading=fading,
        trials=int(c["run.trials"]),
        seed=int(c["run.seed"]),
        plan=plan,
        channels=int(c["plan.channels"]),
        prime_factor=float(c["plan.prime_factor"]),
        n_subbands=int(c["scenario.n_subbands"]),
        bandwidth_range=(float(c["scenario.bandwidth_min"]), float(c["scenario.bandwidth_max"])),
        alphas=alphas,
        lambdas=lambdas,
        system=c["run.system"],
        control_channel=c["run.control_channel"],
        control_snr_db=float(c["run.control_snr_db"]),
        bounds=_bool(c["run.bounds"]),
        truth=c["run.truth"],
        truth_fraction=float(c["run.truth_fraction"]),
    )
