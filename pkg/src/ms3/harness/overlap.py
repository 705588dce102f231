"""Monte Carlo check of the folded-bin overlap probability."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["simulate_overlap"]


def simulate_overlap(N, s, M, trials, rng, chunk=20_000, model="bernoulli"):
    """Fraction of trials in which a random folded bin holds two or more occupied bins.

    Each trial picks a residue ``m`` uniformly in ``[0, M)`` and places the
    support: ``bernoulli`` occupies every Nyquist bin independently with
    probability ``s / N``; ``fixed`` occupies exactly ``s`` distinct bins.
    Returns ``(estimate, standard_error)``.
    """
    q, r = divmod(N, M)
    hits = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        m = rng.integers(0, M, n)
        size = np.where(m < r, q + 1, q)
        if model == "bernoulli":
            counts = rng.binomial(size, s / N)
        elif model == "fixed":
            counts = rng.hypergeometric(size, N - size, s)
        else:
            raise ValueError(f"unknown model {model!r}")
        hits += int(np.count_nonzero(counts >= 2))
        done += n
    p = hits / trials
    return p, math.sqrt(max(p * (1.0 - p), 1.0 / trials) / trials)
