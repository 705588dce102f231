"""Binomial confidence intervals for pooled per-bin rates."""

from __future__ import annotations

import numpy as np

__all__ = ["wilson_interval", "design_effect", "clustered_wilson"]

Z95 = 1.959963984540054


def wilson_interval(successes, n, z=Z95):
    """Wilson score interval; ``n`` may be fractional (effective sample size)."""
    successes = np.asarray(successes, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, successes / n, 0.0)
        z2n = np.where(n > 0, z * z / n, 0.0)
        denom = 1.0 + z2n
        center = (p + 0.5 * z2n) / denom
        half = z * np.sqrt(np.maximum(p * (1.0 - p) / n + z2n / (4.0 * n), 0.0)) / denom
    lo = np.where(n > 0, np.clip(center - half, 0.0, 1.0), 0.0)
    hi = np.where(n > 0, np.clip(center + half, 0.0, 1.0), 1.0)
    return lo, hi


def design_effect(hits, totals):
    """Variance inflation of a pooled proportion over correlated clusters.

    ``hits`` is ``(trials, grid)`` and ``totals`` is ``(trials,)``.  Compares
    the ratio-estimator variance across trials with the binomial variance;
    never below one.
    """
    hits = np.asarray(hits, dtype=float)
    totals = np.asarray(totals, dtype=float)
    n_tr = hits.shape[0]
    grand = totals.sum()
    if n_tr < 2 or grand == 0:
        return np.ones(hits.shape[1:])
    p = hits.sum(axis=0) / grand
    resid = hits - p * totals[:, None]
    v_ratio = n_tr / (n_tr - 1.0) * np.sum(resid**2, axis=0) / grand**2
    v_binom = p * (1.0 - p) / grand
    with np.errstate(invalid="ignore", divide="ignore"):
        deff = np.where(v_binom > 0, v_ratio / v_binom, 1.0)
    return np.maximum(deff, 1.0)


def clustered_wilson(hits, totals, z=Z95):
    """Pooled rate with a Wilson interval on the design-effect-adjusted sample size."""
    hits = np.asarray(hits, dtype=float)
    totals = np.asarray(totals, dtype=float)
    grand = totals.sum()
    rate = hits.sum(axis=0) / grand if grand > 0 else np.zeros(hits.shape[1:])
    n_eff = grand / design_effect(hits, totals)
    lo, hi = wilson_interval(rate * n_eff, n_eff, z)
    return rate, lo, hi
