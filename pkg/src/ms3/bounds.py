"""Analytic false-alarm and detection bounds for the fused detector.

The non-faded bounds are Marcum-Q functions of the fused noncentrality.  The
faded bounds average ``Q_{Jv}(sqrt(psi * g), sqrt(lam))`` over the
distribution of the summed SNR ``g`` of ``x`` channels:

* Rayleigh: ``g ~ Gamma(x, mean_snr)`` gives the series ``Theta`` whose
  mixing weights are negative binomial.
* Log-normal: each SNR is moment-matched to a Wald (inverse Gaussian)
  law and the sum is taken to be ``IG(x theta, x eta)``, giving the series
  ``Lambda`` whose mixing weights involve ``K_{n-1/2}``.

Each series is ``sum_n w_n Q(n + Jv, lam / 2)`` with weights that do not
depend on ``lam``, so whole threshold grids are evaluated as one matrix
product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from .exceptions import DomainError, ToleranceNotReached
from .specfun import MARCUM_SERIES, SeriesControl, SeriesResult, _poisson_window, log_bessel_k_half_sequence

__all__ = [
    "XI",
    "FadingSpec",
    "BoundSpec",
    "Bounds",
    "wald_params",
    "mixture_probability",
    "marcum_grid",
    "theorem1_bounds",
    "theta_weights",
    "theta_series",
    "theta",
    "theta_truncation_bound",
    "theorem2_bounds",
    "lambda_weights",
    "lambda_series",
    "lambda_fn",
    "theorem3_bounds",
]

XI = 10.0 / math.log(10.0)
DEFAULT_SERIES = SeriesControl()


def wald_params(mean_snr_db, sigma_db):
    """Wald ``(theta, eta)`` matching the first two moments of a log-normal SNR.

    ``10 log10(gamma) ~ Normal(mean_snr_db, sigma_db**2)``.
    """
    sigma = np.asarray(sigma_db, dtype=float)
    if np.any(~(sigma > 0)):
        raise DomainError("sigma_db must be positive")
    mu = np.asarray(mean_snr_db, dtype=float)
    s2 = (sigma / XI) ** 2
    th = np.exp(mu / XI + 0.5 * s2)
    eta = th / np.expm1(s2)
    if th.ndim == 0:
        return float(th), float(eta)
    return th, eta


@dataclass(frozen=True)
class FadingSpec:
    """Per-channel SNR law.

    ``mean_snr`` is linear for ``none`` and ``rayleigh``; for ``lognormal``
    it is the dB mean of ``10 log10(gamma)`` and ``sigma_db`` its spread.
    """

    kind: str
    mean_snr: float
    sigma_db: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "rayleigh", "lognormal"):
            raise DomainError(f"unknown fading kind {self.kind!r}")
        if self.kind == "lognormal":
            if self.sigma_db is None or not self.sigma_db > 0:
                raise DomainError("lognormal fading needs sigma_db > 0")
        elif not self.mean_snr >= 0:
            raise DomainError("mean_snr must be nonnegative")

    @classmethod
    def none(cls, snr):
        return cls("none", float(snr))

    @classmethod
    def rayleigh(cls, mean_snr):
        return cls("rayleigh", float(mean_snr))

    @classmethod
    def lognormal(cls, mean_snr_db, sigma_db):
        return cls("lognormal", float(mean_snr_db), float(sigma_db))

    @property
    def wald(self):
        if self.kind != "lognormal":
            raise DomainError("Wald parameters only exist for lognormal fading")
        return wald_params(self.mean_snr, self.sigma_db)

    @property
    def linear_mean(self):
        """Mean of the linear SNR."""
        if self.kind == "lognormal":
            return math.exp(self.mean_snr / XI + 0.5 * (self.sigma_db / XI) ** 2)
        return self.mean_snr

    def scaled(self, factor):
        """The same law for ``factor * gamma``."""
        if self.kind == "lognormal":
            return FadingSpec(self.kind, self.mean_snr + 10.0 * math.log10(factor), self.sigma_db)
        return FadingSpec(self.kind, self.mean_snr * factor)


class Bounds(NamedTuple):
    pf_lower: np.ndarray
    pf_upper: np.ndarray
    pd_lower: np.ndarray


def _shape_out(batch_shape, lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam >= 0)):
        raise DomainError("thresholds must be nonnegative")
    return lam, tuple(batch_shape) + lam.shape


def _finish(values, shape):
    values = np.clip(values.reshape(shape), 0.0, 1.0)
    return float(values) if values.ndim == 0 else values


def mixture_probability(weights, dof_half, lam, offset=0):
    """``sum_n w[..., n] Q(n + offset + dof_half, lam / 2)`` on a threshold grid.

    Returns an array of shape ``weights.shape[:-1] + lam.shape``.
    """
    weights = np.asarray(weights, dtype=float)
    lam, shape = _shape_out(weights.shape[:-1], lam)
    n = np.arange(weights.shape[-1], dtype=float) + offset
    ratios = special.gammaincc(dof_half + n[:, None], 0.5 * lam.reshape(1, -1))
    return _finish(weights.reshape(-1, n.size) @ ratios, shape)


def _poisson_weights(mean, ctl):
    """Poisson pmf rows over a shared index window ``[lo, hi)``.

    Returns ``(weights, lo, truncation_bound)``.
    """
    mean = np.asarray(mean, dtype=float)
    flat = mean.reshape(-1)
    lo, hi, bound = _poisson_window(float(flat.min(initial=np.inf)), float(flat.max(initial=0.0)), ctl)
    n = np.arange(lo, hi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = n * np.log(flat[:, None]) - flat[:, None] - special.gammaln(n + 1.0)
    log_w = np.where(flat[:, None] == 0.0, np.where(n == 0, 0.0, -np.inf), log_w)
    return np.exp(log_w).reshape(mean.shape + (n.size,)), lo, bound


def marcum_grid(dof_half, noncentrality, lam, ctl=MARCUM_SERIES):
    """``Q_{dof_half}(sqrt(nc), sqrt(lam))`` over arrays of ``nc`` and a ``lam`` grid."""
    nc = np.asarray(noncentrality, dtype=float)
    if np.any(~(nc >= 0)):
        raise DomainError("noncentrality must be nonnegative")
    weights, lo, _ = _poisson_weights(0.5 * nc, ctl)
    return mixture_probability(weights, dof_half, lam, offset=lo)


def _fused_noncentrality(plan, snr, top=None):
    """``(2/N) sum_i M_i gamma_i`` over all channels or the ``top`` largest terms."""
    snr = np.asarray(snr, dtype=float)
    if snr.shape[:1] != (plan.channels,):
        raise DomainError(f"need one SNR row per channel ({plan.channels})")
    weighted = plan.counts.reshape((-1,) + (1,) * (snr.ndim - 1)) * snr
    if top is not None and top < plan.channels:
        weighted = -np.sort(-weighted, axis=0)[:top]
    return 2.0 / plan.nyquist_N * weighted.sum(axis=0)


def theorem1_bounds(lam, J, plan, snr, s):
    """Non-faded bounds ``(Pf_lower, Pf_upper, Pd_lower)``.

    ``snr`` has one row per channel (optionally with trailing bin axes) and
    holds total bin SNRs over the window.  The false-alarm upper bound
    assumes the worst case, in which the ``min(s, v)`` largest ``M_i gamma_i``
    terms alias onto the bin.  Outputs have shape ``snr.shape[1:] + lam.shape``.
    """
    if s < 0:
        raise DomainError("s must be nonnegative")
    dof = J * plan.channels
    snr = np.asarray(snr, dtype=float)
    nc_up = _fused_noncentrality(plan, snr, top=int(s)) if s > 0 else np.zeros(snr.shape[1:])
    nc_d = _fused_noncentrality(plan, snr)
    lam_arr, shape = _shape_out(snr.shape[1:], lam)
    pf_lo = np.broadcast_to(special.gammaincc(dof, 0.5 * lam_arr), shape)
    pf_lo = float(pf_lo) if pf_lo.ndim == 0 else np.array(pf_lo)
    return Bounds(pf_lo, marcum_grid(dof, nc_up, lam), marcum_grid(dof, nc_d, lam))


def _check_series_inputs(x, psi):
    if int(x) != x or x < 1:
        raise DomainError("x must be a positive integer")
    if not 0 < psi <= 2:
        raise DomainError("psi must lie in (0, 2]")


def theta_truncation_bound(x, psi, mean_snr, P):
    """Mass of the negative-binomial mixing weights from term ``P`` on.

    Equals ``1 - (1 + psi g/2)^(-x) sum_{n<P} C(n+x-1, n) q^n`` with
    ``q = psi g / (psi g + 2)``, evaluated without cancellation as the
    regularized incomplete beta ``I_q(P, x)``.
    """
    if P < 1:
        raise DomainError("P must be at least 1")
    g = np.asarray(mean_snr, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("mean_snr must be nonnegative")
    q = psi * g / (psi * g + 2.0)
    out = special.betainc(float(P), float(x), q)
    return float(out) if out.ndim == 0 else out


def theta_weights(x, psi, mean_snr, ctl=DEFAULT_SERIES):
    """Negative-binomial mixing weights for ``Theta``, in log space.

    Returns ``(weights, terms, truncation_bound)``; ``weights`` has shape
    ``mean_snr.shape + (terms,)``.
    """
    _check_series_inputs(x, psi)
    g = np.asarray(mean_snr, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("mean_snr must be nonnegative")
    q_max = float(psi * g.max(initial=0.0) / (psi * g.max(initial=0.0) + 2.0))
    counts = np.arange(1, ctl.max_terms + 1, dtype=float)
    tails = special.betainc(counts, float(x), q_max)
    ok = np.nonzero(tails <= ctl.abs_tol)[0]
    if ok.size == 0:
        raise ToleranceNotReached(
            f"Theta needs more than {ctl.max_terms} terms (q={q_max:.4g}, x={x})",
            terms=ctl.max_terms,
            truncation_bound=float(tails[-1]),
        )
    terms = int(counts[ok[0]])
    n = np.arange(terms, dtype=float)
    log_binom = special.gammaln(n + x) - special.gammaln(n + 1.0) - special.gammaln(float(x))
    pg = psi * g[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_q = np.log(pg) - np.log(pg + 2.0)
        log_w = log_binom + np.where(n == 0, 0.0, n * log_q) - x * np.log1p(0.5 * pg)
    return np.exp(log_w), terms, float(tails[ok[0]])


def theta_series(x, dof_half, psi, mean_snr, lam, ctl=DEFAULT_SERIES):
    """``Theta(x, Jv, psi, mean_snr, lam)`` with its truncation bookkeeping.

    Average of ``Q_{Jv}(sqrt(psi g), sqrt(lam))`` over ``g ~ Gamma(x, mean_snr)``.
    """
    weights, terms, bound = theta_weights(x, psi, mean_snr, ctl)
    return SeriesResult(mixture_probability(weights, dof_half, lam), terms, bound)


def theta(x, dof_half, psi, mean_snr, lam, ctl=DEFAULT_SERIES):
    return theta_series(x, dof_half, psi, mean_snr, lam, ctl).value


def theorem2_bounds(lam, J, v, psi, mean_snr, s, ctl=DEFAULT_SERIES):
    """Rayleigh-faded bounds: ``Pf_upper = Theta(s)``, ``Pd_lower = Theta(v)``."""
    dof = J * v
    g = np.asarray(mean_snr, dtype=float)
    lam_arr, shape = _shape_out(g.shape, lam)
    pf_lo = np.array(np.broadcast_to(special.gammaincc(dof, 0.5 * lam_arr), shape))
    pf_hi = theta(s, dof, psi, g, lam, ctl) if s >= 1 else pf_lo
    return Bounds(_finish(pf_lo, shape), pf_hi, theta(v, dof, psi, g, lam, ctl))


def _lambda_log_weights(x, psi, th, eta, terms):
    c = np.sqrt(x * x * eta * th * th / (x * psi * th * th + eta))
    z = np.sqrt(eta * (x * psi * th * th + eta) / (th * th))
    n = np.arange(terms, dtype=float)
    log_k = np.moveaxis(log_bessel_k_half_sequence(terms - 1, z), 0, -1)
    head = 0.5 * np.log(2.0 * x * eta / np.pi) + eta / th
    return (
        head[..., None]
        + n * math.log(0.5 * psi)
        - special.gammaln(n + 1.0)
        + (n - 0.5) * np.log(c)[..., None]
        + log_k
    )


def lambda_weights(x, psi, theta_, eta, ctl=DEFAULT_SERIES):
    """Mixing weights for ``Lambda`` with the Wald-sum law ``IG(x theta, x eta)``.

    The weights sum to one, so the truncation error is bounded by the
    missing mass ``1 - sum_{n<P} w_n``.  ``P`` doubles from 32 until that
    mass and the last term both drop below ``abs_tol``.
    Returns ``(weights, terms, truncation_bound)``.
    """
    _check_series_inputs(x, psi)
    th, eta = np.broadcast_arrays(np.asarray(theta_, dtype=float), np.asarray(eta, dtype=float))
    if np.any(~(th > 0)) or np.any(~(eta > 0)):
        raise DomainError("theta and eta must be positive")
    terms = min(32, ctl.max_terms)
    while True:
        w = np.exp(_lambda_log_weights(x, psi, th, eta, terms))
        missing = np.clip(1.0 - w.sum(axis=-1), 0.0, None)
        bound = float(missing.max(initial=0.0))
        last = float(w[..., -1].max(initial=0.0))
        if max(bound, last) <= ctl.abs_tol:
            return w, terms, bound
        if terms >= ctl.max_terms:
            raise ToleranceNotReached(
                f"Lambda needs more than {ctl.max_terms} terms",
                terms=terms,
                truncation_bound=max(bound, last),
            )
        terms = min(2 * terms, ctl.max_terms)


def lambda_series(x, dof_half, psi, lam, theta_, eta, ctl=DEFAULT_SERIES):
    """``Lambda(x, Jv, psi, lam, theta, eta)`` with its truncation bookkeeping.

    The Wald mixing law has an exponential tail, so the weights alone can
    need tens of thousands of terms.  Since ``Q(n + Jv, lam / 2)`` rises
    with ``n`` toward one, the unsummed mass ``m`` contributes between
    ``m Q(P + Jv, lam / 2)`` and ``m``; the midpoint is added and half the
    gap is the reported bound.  ``P`` doubles from 32 until that bound, at
    the largest threshold, is below ``abs_tol``.
    """
    _check_series_inputs(x, psi)
    th, eta = np.broadcast_arrays(np.asarray(theta_, dtype=float), np.asarray(eta, dtype=float))
    if np.any(~(th > 0)) or np.any(~(eta > 0)):
        raise DomainError("theta and eta must be positive")
    lam_arr, shape = _shape_out(th.shape, lam)
    lam_max = float(lam_arr.max(initial=0.0))
    terms = min(32, ctl.max_terms)
    while True:
        w = np.exp(_lambda_log_weights(x, psi, th, eta, terms))
        missing = np.clip(1.0 - w.sum(axis=-1), 0.0, None)
        gap = 0.5 * float(missing.max(initial=0.0)) * (1.0 - special.gammaincc(dof_half + terms, 0.5 * lam_max))
        if gap <= ctl.abs_tol:
            break
        if terms >= ctl.max_terms:
            raise ToleranceNotReached(f"Lambda needs more than {ctl.max_terms} terms", terms=terms, truncation_bound=gap)
        terms = min(2 * terms, ctl.max_terms)
    head = np.asarray(mixture_probability(w, dof_half, lam_arr)).reshape(shape)
    q_tail = special.gammaincc(dof_half + terms, 0.5 * lam_arr)
    value = head + missing.reshape(th.shape + (1,) * lam_arr.ndim) * 0.5 * (1.0 + q_tail)
    return SeriesResult(_finish(value, shape), terms, gap)


def lambda_fn(x, dof_half, psi, lam, theta_, eta, ctl=DEFAULT_SERIES):
    return lambda_series(x, dof_half, psi, lam, theta_, eta, ctl).value


def theorem3_bounds(lam, J, v, psi, theta_, eta, s, ctl=DEFAULT_SERIES):
    """Log-normal-faded bounds: ``Pf_upper = Lambda(s)``, ``Pd_lower = Lambda(v)``."""
    dof = J * v
    th = np.asarray(theta_, dtype=float)
    lam_arr, shape = _shape_out(np.broadcast_shapes(th.shape, np.shape(eta)), lam)
    pf_lo = np.array(np.broadcast_to(special.gammaincc(dof, 0.5 * lam_arr), shape))
    pf_hi = lambda_fn(s, dof, psi, lam, theta_, eta, ctl) if s >= 1 else pf_lo
    return Bounds(_finish(pf_lo, shape), pf_hi, lambda_fn(v, dof, psi, lam, theta_, eta, ctl))


@dataclass(frozen=True)
class BoundSpec:
    """One faded-bound evaluation: multiplicity ``x`` (``s`` or ``v``) and its inputs.

    ``fading.mean_snr`` is the per-channel total bin SNR (linear, or dB for
    log-normal).  For ``none`` fading the bound is the Marcum-Q of
    ``x psi mean_snr``.
    """

    multiplicity: int
    dof_half: int
    psi: float
    fading: FadingSpec
    ctl: SeriesControl = field(default=DEFAULT_SERIES)

    def __post_init__(self):
        _check_series_inputs(self.multiplicity, self.psi)
        if self.dof_half < 1:
            raise DomainError("dof_half must be positive")

    def evaluate(self, lam):
        x, f = self.multiplicity, self.fading
        if f.kind == "rayleigh":
            return theta_series(x, self.dof_half, self.psi, f.mean_snr, lam, self.ctl)
        if f.kind == "lognormal":
            th, eta = f.wald
            return lambda_series(x, self.dof_half, self.psi, lam, th, eta, self.ctl)
        weights, lo, bound = _poisson_weights(0.5 * x * self.psi * f.mean_snr, MARCUM_SERIES)
        return SeriesResult(mixture_probability(weights, self.dof_half, lam, offset=lo), weights.shape[-1], bound)
