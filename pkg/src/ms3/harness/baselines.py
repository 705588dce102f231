"""Nyquist-rate reference systems."""

from __future__ import annotations

from dataclasses import replace

from ..exceptions import DomainError
from .experiment import run_trials

__all__ = ["run_nyquist_baseline"]


def run_nyquist_baseline(config, kind):
    """ROC of a Nyquist-rate cooperative system on the same scenario and draws.

    Type 1 splits ``[0, W]`` into ``v`` equal chunks and lets each channel
    sense one chunk alone (``2J`` degrees of freedom per bin).  Type 2 lets
    every channel sense the whole band and adds the energies with equal
    gain (``2Jv`` degrees of freedom).  Both use the channel count ``v`` of
    the configured plan.
    """
    if kind not in (1, 2):
        raise DomainError("baseline kind must be 1 or 2")
    v = config.resolved_plan().channels if config.system == "ms3" else config.channels
    return run_trials(replace(config, system=f"nyquist_type{kind}", channels=v, plan=None))
