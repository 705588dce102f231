"""ADC-count arithmetic comparing sub-Nyquist and Nyquist-rate networks."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["AdcRow", "REFERENCE_AVERAGE_RATES_HZ", "adc_row", "adc_table"]

# average per-ADC rates reported for 10, 20, 30 and 40 radios over W = 10 GHz
REFERENCE_AVERAGE_RATES_HZ = {10: 957.54e6, 20: 513.08e6, 30: 350.34e6, 40: 276.77e6}


@dataclass(frozen=True)
class AdcRow:
    channels: int
    average_rate: float
    ms3_adcs: int
    type1_adcs: int
    type2_adcs: int

    @property
    def reduction_type1(self):
        """Total samples of the sub-Nyquist network over those of type 1."""
        return self.ms3_adcs / self.type1_adcs

    @property
    def reduction_type2(self):
        return self.ms3_adcs / self.type2_adcs


def adc_row(v, average_rate, total_bandwidth=10e9):
    """One comparison row for ``v`` radios whose ADCs run at ``average_rate``.

    A Nyquist system built from the same ADCs needs ``ceil(2W / f)`` of them
    to cover the band; type 2 needs that many in every radio.
    """
    if v < 1 or not average_rate > 0:
        raise ValueError("need v >= 1 and a positive rate")
    ratio = 2.0 * total_bandwidth / average_rate
    per_node = math.ceil(ratio - 1e-9 * ratio)
    return AdcRow(v, average_rate, v, per_node, v * per_node)


def adc_table(rates=None, total_bandwidth=10e9):
    """Rows for each ``{v: average_rate}`` entry (default: the published rates)."""
    rates = REFERENCE_AVERAGE_RATES_HZ if rates is None else rates
    return [adc_row(v, f, total_bandwidth) for v, f in sorted(rates.items())]
