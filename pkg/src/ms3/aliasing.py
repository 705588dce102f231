"""Frequency folding under sub-Nyquist sampling and prime channel plans.

Bins of a length-``N`` Nyquist DFT are indexed ``k = 0 .. N-1``.  For a real
signal the natural index is the signed frequency ``k_s`` in ``[-N/2, N/2)``:
a channel with ``M`` samples per segment sees bin ``k`` at folded position
``|k_s| mod M``.  When ``M`` divides ``N`` this coincides with ``k mod M``;
otherwise only the signed form lands negative-frequency images correctly.
Because each channel's spectrum is conjugate symmetric, positions ``m`` and
``M - m`` hold the same energy, so folded supports are mirror-closed too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConditionViolated, DomainError

__all__ = [
    "primes_up_to",
    "primes_from",
    "is_prime",
    "ChannelPlan",
    "select_primes",
    "signed_frequency",
    "fold_index",
    "fold_spectrum",
    "SupportSets",
    "compute_support_sets",
    "CollisionReport",
    "verify_no_collision",
    "overlap_probability",
    "no_overlap_probability",
    "no_overlap_probability_sqrt",
]


def primes_up_to(n):
    """All primes ``<= n`` by the sieve of Eratosthenes."""
    n = int(n)
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def primes_from(start, count):
    """The ``count`` smallest primes ``>= start``."""
    start = max(int(start), 2)
    bound = max(2 * start, start + 64)
    while True:
        p = primes_up_to(bound)
        p = p[p >= start]
        if p.size >= count:
            return p[:count]
        bound *= 2


def is_prime(n):
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class ChannelPlan:
    """Per-channel sample counts ``M_i`` per segment against a Nyquist ``N``.

    ``strict`` plans must be distinct consecutive primes with pairwise
    products above ``N``; non-strict plans only need distinct counts in
    ``[1, N]`` and exist for controlled experiments.
    """

    sample_counts: tuple[int, ...]
    nyquist_N: int
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        counts = tuple(int(m) for m in self.sample_counts)
        object.__setattr__(self, "sample_counts", counts)
        N = int(self.nyquist_N)
        if not counts:
            raise DomainError("a plan needs at least one channel")
        if N < 1 or any(m < 1 or m > N for m in counts):
            raise DomainError("sample counts must lie in [1, N]")
        if len(set(counts)) != len(counts):
            raise ConditionViolated("sample counts must be distinct")
        if self.strict:
            bad = [m for m in counts if not is_prime(m)]
            if bad:
                raise ConditionViolated(f"non-prime sample counts {bad}")
            if not self.pairwise_products_exceed_n():
                raise ConditionViolated("some pair has M_i * M_j <= N")
            lo, hi = min(counts), max(counts)
            between = primes_up_to(hi)
            if int(np.count_nonzero(between >= lo)) != len(counts):
                raise ConditionViolated("sample counts are not consecutive primes")

    @property
    def channels(self):
        return len(self.sample_counts)

    @property
    def counts(self):
        return np.asarray(self.sample_counts, dtype=np.int64)

    @property
    def mean_count(self):
        return float(np.mean(self.sample_counts))

    @property
    def compression(self):
        """Average compression ``mean(M) / N``."""
        return self.mean_count / self.nyquist_N

    @property
    def psi(self):
        """``2 mean(M) / N``, the uniform-weight SNR degradation factor."""
        return 2.0 * self.compression

    def rates(self, observation_time, segments):
        """Channel sampling rates ``f_i = J M_i / T`` in hertz."""
        return segments * self.counts / observation_time

    def pairwise_products_exceed_n(self):
        s = sorted(self.sample_counts)
        return len(s) < 2 or s[0] * s[1] > self.nyquist_N


def select_primes(N, v, a):
    """Consecutive primes starting at the smallest prime ``>= a sqrt(N)``."""
    if v < 1 or N < 2:
        raise DomainError("need v >= 1 and N >= 2")
    if not a > 0:
        raise DomainError("a must be positive")
    start = math.ceil(a * math.sqrt(N) - 1e-9)
    counts = primes_from(start, v)
    if counts[-1] > N:
        raise DomainError(f"fewer than {v} primes between {start} and N={N}")
    if v > 1 and counts[0] * counts[1] <= N:
        raise ConditionViolated(f"M_1 * M_2 = {counts[0] * counts[1]} <= N = {N}")
    return ChannelPlan(tuple(int(m) for m in counts), N, strict=True)


def signed_frequency(k, N):
    """Map ``k`` in ``[0, N)`` to the signed index in ``[-N/2, N/2)``."""
    k = np.asarray(k, dtype=np.int64)
    out = np.where(k >= (N + 1) // 2, k - N, k)
    return int(out) if out.ndim == 0 else out


def fold_index(k, M, nyquist_N=None):
    """Folded position of bin ``k`` on a length-``M`` grid.

    Without ``nyquist_N`` this is plain ``k mod M``; with it the signed
    frequency magnitude is folded instead.
    """
    if M < 1:
        raise DomainError("M must be positive")
    k_arr = np.asarray(k, dtype=np.int64)
    if np.any(k_arr < 0):
        raise DomainError("bin index must be nonnegative")
    if nyquist_N is not None:
        if np.any(k_arr >= nyquist_N):
            raise DomainError("bin index must be below N")
        k_arr = np.abs(signed_frequency(k_arr, nyquist_N))
    out = k_arr % M
    return int(out) if out.ndim == 0 else out


def fold_spectrum(X, M):
    """Fold a length-``N`` spectrum onto ``M`` bins, scaled by ``M / N``.

    Each signed frequency ``k_s`` contributes to bin ``k_s mod M``, which is
    the DFT of the sub-sampled sequence when ``M`` divides ``N``.
    """
    X = np.asarray(X)
    N = X.shape[-1]
    if M < 1 or M > N:
        raise DomainError("M must lie in [1, N]")
    idx = signed_frequency(np.arange(N), N) % M
    out = np.zeros(X.shape[:-1] + (M,), dtype=np.result_type(X, float))
    np.add.at(out, (..., idx), X)
    return out * (M / N)


@dataclass(frozen=True)
class SupportSets:
    """Occupied, folded, aliased and unaffected bins for one plan.

    Bin sets are sorted index arrays; ``multiplicity[k]`` counts the
    channels in which an unoccupied bin ``k`` shares a folded position with
    occupied energy.
    """

    occupied: np.ndarray
    folded: tuple[np.ndarray, ...]
    aliased: np.ndarray
    unaffected: np.ndarray
    multiplicity: np.ndarray
    nyquist_N: int

    @property
    def sparsity(self):
        return int(self.occupied.size)

    @property
    def distinct_frequencies(self):
        """Number of distinct ``|k_s|`` in the support, mirror pairs counted once."""
        return int(np.unique(np.abs(signed_frequency(self.occupied, self.nyquist_N))).size)

    def mask(self, which):
        m = np.zeros(self.nyquist_N, dtype=bool)
        m[getattr(self, which)] = True
        return m


def compute_support_sets(omega, plan, real_signal=True):
    """Folded support per channel and the aliased/unaffected partition.

    With ``real_signal`` the support is closed under ``k -> N - k`` and
    folding uses signed frequencies.
    """
    N = plan.nyquist_N
    omega = np.unique(np.asarray(list(omega) if not isinstance(omega, np.ndarray) else omega, dtype=np.int64))
    if omega.size and (omega[0] < 0 or omega[-1] >= N):
        raise DomainError("support must lie in [0, N-1]")
    occ = np.zeros(N, dtype=bool)
    occ[omega] = True
    if real_signal:
        occ |= occ[(N - np.arange(N)) % N]
    k = np.arange(N)
    mult = np.zeros(N, dtype=np.int64)
    folded = []
    for M in plan.sample_counts:
        key = fold_index(k, M, N if real_signal else None)
        hit = np.zeros(M, dtype=bool)
        hit[key[occ]] = True
        if real_signal:
            # a real channel's DFT is conjugate symmetric: m and M - m carry the same energy
            hit |= hit[(M - np.arange(M)) % M]
        folded.append(np.nonzero(hit)[0])
        mult += hit[key] & ~occ
    aliased = np.nonzero(mult > 0)[0]
    unaffected = np.nonzero(~occ & (mult == 0))[0]
    return SupportSets(np.nonzero(occ)[0], tuple(folded), aliased, unaffected, mult, N)


@dataclass(frozen=True)
class CollisionReport:
    """``witness`` is ``(i, j, k1, g)``: bins ``k1 != g`` both fold together in channels i and j."""

    no_collision: bool
    witness: tuple[int, int, int, int] | None = None

    def __bool__(self):
        return self.no_collision


def verify_no_collision(plan):
    """Exhaustively check that no two bins share a folded position in two channels.

    Uses plain ``k mod M`` folding.  Two bins collide in channels ``i`` and
    ``j`` iff their residue pairs agree, which happens only if ``M_i M_j``
    (the lcm for distinct primes) is at most ``N - 1``.
    """
    N = plan.nyquist_N
    k = np.arange(N, dtype=np.int64)
    counts = plan.sample_counts
    for i in range(len(counts)):
        for j in range(i + 1, len(counts)):
            key = (k % counts[i]) * counts[j] + (k % counts[j])
            _, first, inverse = np.unique(key, return_index=True, return_inverse=True)
            dup = np.nonzero(first[inverse] != k)[0]
            if dup.size:
                g = int(dup[0])
                return CollisionReport(False, (i, j, int(first[inverse[g]]), g))
    return CollisionReport(True)


def _bins_per_residue(N, M):
    """Counts of Nyquist bins mapping to each residue class mod ``M``."""
    q, r = divmod(N, M)
    return np.array([q + 1] * r + [q] * (M - r), dtype=np.int64)


def no_overlap_probability(N, s, M, exact_residues=False):
    """Probability that a folded bin receives at most one occupied bin.

    Each Nyquist bin is occupied independently with probability ``P = s / N``
    and a folded bin gathers ``ceil(N / M)`` Nyquist bins, giving
    ``(1 - P)^d + d P (1 - P)^(d - 1)``.  With ``exact_residues`` the
    folded bin is a uniformly chosen residue class mod ``M`` holding
    ``floor`` or ``ceil`` of ``N / M`` bins, and the result is averaged.
    """
    if not (N >= 1 and 0 <= s <= N and 1 <= M <= N):
        raise DomainError("need N >= 1, 0 <= s <= N and 1 <= M <= N")
    p = s / N
    if exact_residues:
        d = _bins_per_residue(N, M).astype(float)
    else:
        d = np.array([float(-(-N // M))])
    if p == 1.0:
        return float(np.mean(d <= 1))
    if p == 0.0:
        return 1.0
    none = d * math.log1p(-p)
    single = np.log(d) + math.log(p) + (d - 1.0) * math.log1p(-p)
    return float(np.mean(np.exp(none) + np.exp(single)))


def overlap_probability(N, s, M, exact_residues=False):
    """Probability that at least two occupied bins fold onto the same bin."""
    return 1.0 - no_overlap_probability(N, s, M, exact_residues)


def no_overlap_probability_sqrt(N, s):
    """Closed form of :func:`no_overlap_probability` at ``M = sqrt(N)``.

    ``(1 - s/N)^sqrt(N) + s/sqrt(N) (1 - s/N)^(sqrt(N) - 1)``.
    """
    r = math.sqrt(N)
    p = s / N
    return (1.0 - p) ** r + s / r * (1.0 - p) ** (r - 1.0)
