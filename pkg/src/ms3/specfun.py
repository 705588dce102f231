"""Special functions used by the detection probabilities and fading bounds.

Every series here has the same shape: a discrete mixing distribution over
``n = 0, 1, 2, ...`` weighting the regularized upper incomplete gamma ratios
``Q(n + u, x)``.  Because ``0 <= Q <= 1`` the tail mass of the mixing weights
is an a-priori bound on the truncation error, which is what gets reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import DomainError, ToleranceNotReached

__all__ = [
    "SeriesControl",
    "SeriesResult",
    "reg_upper_gamma",
    "inv_reg_upper_gamma",
    "gamma_ratio_sequence",
    "marcum_q",
    "marcum_q_series",
    "inv_marcum_q_b",
    "bessel_k_half",
    "log_bessel_k_half",
    "log_bessel_k_half_sequence",
    "log_binom",
    "chi2_sample",
]


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for a mixture series.

    Attributes
    ----------
    max_terms : int
        Hard cap on the number of summed terms.
    abs_tol : float
        Target for the a-priori truncation bound.
    """

    max_terms: int = 512
    abs_tol: float = 1e-14

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms!r}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be nonnegative, got {self.abs_tol!r}")


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series with its bookkeeping."""

    value: float | np.ndarray
    terms: int
    truncation_bound: float


MARCUM_SERIES = SeriesControl(max_terms=4096, abs_tol=1e-15)


def _scalar_or_array(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def reg_upper_gamma(a, x):
    """Regularized upper incomplete gamma ``Gamma(a, x) / Gamma(a)``.

    Accepts scalars or broadcastable arrays.
    """
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(a_arr > 0)):
        raise DomainError("reg_upper_gamma requires a > 0")
    if np.any(~(x_arr >= 0)):
        raise DomainError("reg_upper_gamma requires x >= 0")
    return _scalar_or_array(special.gammaincc(a_arr, x_arr))


def _log_gamma_pdf(a, x):
    return (a - 1.0) * math.log(x) - x - math.lgamma(a)


def inv_reg_upper_gamma(a, p, tol=1e-12):
    """Solve ``reg_upper_gamma(a, x) = p`` for ``x``.

    Bisection on a geometrically expanded bracket, accelerated by Newton
    steps that are only accepted when they stay inside the bracket.
    """
    if not a > 0:
        raise DomainError("inv_reg_upper_gamma requires a > 0")
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p!r}")
    if p == 1:
        return 0.0

    lo, hi = 0.0, max(float(a), 1.0)
    while special.gammaincc(a, hi) > p:
        lo, hi = hi, 2.0 * hi
        if not math.isfinite(hi):
            raise ToleranceNotReached("could not bracket the incomplete gamma inverse")

    x = 0.5 * (lo + hi)
    for _ in range(400):
        err = special.gammaincc(a, x) - p
        if abs(err) <= tol:
            return x
        if err > 0:
            lo = x
        else:
            hi = x
        slope = -math.exp(_log_gamma_pdf(a, x)) if x > 0 else 0.0
        step = x - err / slope if slope != 0.0 else math.nan
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return x


def gamma_ratio_sequence(u, x, terms):
    """``Q(n + u, x)`` for ``n = 0 .. terms - 1`` along the last axis."""
    n = np.arange(terms, dtype=float)
    x = np.asarray(x, dtype=float)
    return special.gammaincc(u + n, x[..., None])


def _poisson_window(mu_min, mu_max, ctl):
    """Index window ``[lo, hi)`` holding all but ``abs_tol`` of the Poisson mass.

    Half the tolerance goes to each tail; the lower tail is only cut when
    the mean is large enough for it to matter.
    """
    if mu_max == 0.0:
        return 0, 1, 0.0
    half = 0.5 * ctl.abs_tol
    lo, lower = 0, 0.0
    if mu_min > 0.0:
        step = max(int(mu_min - 40.0 * math.sqrt(mu_min) - 40.0), 0)
        cand = np.arange(max(step, 1), int(mu_min) + 1, dtype=float)
        if cand.size:
            below = special.gammaincc(cand, mu_min)
            ok = np.nonzero(below <= half)[0]
            if ok.size:
                lo, lower = int(cand[ok[-1]]), float(below[ok[-1]])
    hi_start = max(lo + 1, int(mu_max))
    cand = np.arange(hi_start, lo + ctl.max_terms + 1, dtype=float)
    upper = special.gammainc(cand, mu_max) if cand.size else np.ones(1)
    ok = np.nonzero(upper <= half)[0]
    if ok.size == 0:
        raise ToleranceNotReached(
            f"Marcum-Q series needs more than {ctl.max_terms} terms for a^2/2 in [{mu_min:.4g}, {mu_max:.4g}]",
            terms=ctl.max_terms,
            truncation_bound=float(upper[-1]) + lower,
        )
    return lo, int(cand[ok[0]]), lower + float(upper[ok[0]])


def marcum_q_series(u, a, b, ctl=MARCUM_SERIES):
    """Generalized Marcum Q-function with its truncation bookkeeping.

    Uses the Poisson mixture
    ``Q_u(a, b) = sum_n Pois(n; a^2/2) * Q(n + u, b^2/2)``, summed over the
    window of ``n`` that carries all but ``abs_tol`` of the Poisson mass.
    ``a`` and ``b`` may be broadcastable arrays; the reported term count and
    bound are the worst case over the array.
    """
    if not u > 0:
        raise DomainError("marcum_q requires u > 0")
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(~(a_arr >= 0)) or np.any(~(b_arr >= 0)):
        raise DomainError("marcum_q requires a, b >= 0")

    mu = 0.5 * a_arr**2
    x = 0.5 * b_arr**2
    lo, hi, bound = _poisson_window(float(np.min(mu, initial=np.inf)), float(np.max(mu, initial=0.0)), ctl)

    n = np.arange(lo, hi, dtype=float)
    mu_b, x_b = np.broadcast_arrays(mu, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = n * np.log(mu_b[..., None]) - mu_b[..., None] - special.gammaln(n + 1.0)
    log_w = np.where(mu_b[..., None] == 0.0, np.where(n == 0, 0.0, -np.inf), log_w)
    weights = np.exp(log_w)
    # the window holds all but `bound` of the Poisson mass; renormalizing removes the
    # common-mode rounding of log_w, which cancels terms of size n log(mu) for large mu
    weights /= np.sum(weights, axis=-1, keepdims=True)
    ratios = special.gammaincc(u + n, x_b[..., None])
    value = np.clip(np.sum(weights * ratios, axis=-1), 0.0, 1.0)
    return SeriesResult(_scalar_or_array(value), hi - lo, bound)


def marcum_q(u, a, b, ctl=MARCUM_SERIES):
    """Generalized Marcum Q-function ``Q_u(a, b)``."""
    return marcum_q_series(u, a, b, ctl).value


def _log_marcum_density(u, a, b):
    """log of ``-dQ_u(a, b)/db``."""
    if a == 0.0:
        return math.log(b) + (u - 1.0) * math.log(0.5 * b * b) - 0.5 * b * b - math.lgamma(u)
    ive = special.ive(u - 1.0, a * b)
    if not ive > 0:
        return -math.inf
    return (
        math.log(b)
        + (u - 1.0) * (math.log(b) - math.log(a))
        - 0.5 * (a - b) ** 2
        + math.log(ive)
    )


def inv_marcum_q_b(u, a, p, tol=1e-10, ctl=MARCUM_SERIES):
    """Solve ``marcum_q(u, a, b) = p`` for ``b`` (decreasing in ``b``)."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if not u > 0 or not a >= 0:
        raise DomainError("inv_marcum_q_b requires u > 0 and a >= 0")

    lo, hi = 0.0, a + math.sqrt(2.0 * u) + 1.0
    while marcum_q(u, a, hi, ctl) > p:
        lo, hi = hi, 2.0 * hi

    b = 0.5 * (lo + hi)
    for _ in range(400):
        err = marcum_q(u, a, b, ctl) - p
        if abs(err) <= tol:
            return b
        if err > 0:
            lo = b
        else:
            hi = b
        log_dens = _log_marcum_density(u, a, b) if b > 0 else -math.inf
        step = b + err / math.exp(log_dens) if math.isfinite(log_dens) else math.nan
        b = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return b


def log_bessel_k_half_sequence(n_max, x):
    """``log K_{n - 1/2}(x)`` for ``n = 0 .. n_max`` (leading axis).

    Runs the upward recurrence on the ratio ``K_{n+1/2} / K_{n-1/2}``, which
    stays finite where the functions themselves overflow.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Bessel K requires x > 0")
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 0.5 * np.log(np.pi / (2.0 * x)) - x
    ratio = np.ones_like(x)
    for n in range(1, n_max + 1):
        if n > 1:
            ratio = 1.0 / ratio + (2.0 * n - 3.0) / x
        out[n] = out[n - 1] + np.log(ratio)
    return out


def log_bessel_k_half(order_index, x):
    """``log K_{n - 1/2}(x)`` for a single order index ``n >= 0``."""
    if int(order_index) != order_index or order_index < 0:
        raise DomainError("order_index must be a nonnegative integer")
    return _scalar_or_array(log_bessel_k_half_sequence(int(order_index), x)[-1])


def bessel_k_half(order_index, x):
    """Modified Bessel function of the second kind ``K_{n - 1/2}(x)``."""
    return _scalar_or_array(np.exp(log_bessel_k_half(order_index, x)))


def log_binom(top, k):
    """``log C(top, k)`` through log-gamma, valid for real ``top``."""
    if top < 0 or k < 0:
        raise DomainError("log_binom requires nonnegative arguments")
    if top - k + 1 <= 0:
        raise DomainError(f"log_binom undefined for top={top!r} < k={k!r}")
    return float(special.gammaln(top + 1.0) - special.gammaln(k + 1.0) - special.gammaln(top - k + 1.0))


def chi2_sample(dof, noncentrality, rng, size=None):
    """Draw from a (non-)central chi-square distribution."""
    if not dof >= 1:
        raise DomainError("dof must be >= 1")
    if not noncentrality >= 0:
        raise DomainError("noncentrality must be >= 0")
    if noncentrality == 0:
        return rng.chisquare(dof, size)
    return rng.noncentral_chisquare(dof, noncentrality, size)
