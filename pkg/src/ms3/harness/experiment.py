"""Monte Carlo trial engine: synthesize, sample, fuse, decide and score.

Every trial draws from its own generator seeded by ``(seed, trial)``, so the
results do not depend on execution order.  Subband placement (when not
given explicitly) comes from the master seed alone and is fixed for the
whole experiment.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ..aliasing import ChannelPlan, compute_support_sets, select_primes, signed_frequency
from ..bounds import FadingSpec, lambda_fn, marcum_grid, theta, wald_params
from ..detection import fold_lookup, fuse, threshold_for_pfa
from ..exceptions import DomainError
from ..specfun import SeriesControl
from ..signal import ScenarioSpec, band_spectra, draw_time_offset, place_subbands, sample_channel
from .channel import control_channel_impair
from .fading import draw_fading
from .intervals import clustered_wilson

__all__ = [
    "SYSTEMS",
    "DEFAULT_ALPHAS",
    "ExperimentConfig",
    "RocCurve",
    "run_trials",
    "pd_at_pf",
]

SYSTEMS = ("ms3", "nyquist_type1", "nyquist_type2")
# heavy-tailed mixing weights at strong bins need long series
OVERLAY_SERIES = SeriesControl(max_terms=16384, abs_tol=1e-12)
DEFAULT_ALPHAS = (
    0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.09, 0.1, 0.11, 0.13,
    0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a Monte Carlo run.

    ``fading.mean_snr`` is the per-segment in-band SNR at unit subband
    power (linear, or dB for log-normal).  When ``scenario.subbands`` is
    empty, ``n_subbands`` bands with widths in ``bandwidth_range`` are placed
    from the master seed.  Give either ``alphas`` (mapped to thresholds
    through the noise-only tail of each system) or explicit ``lambdas``.
    """

    scenario: ScenarioSpec
    fading: FadingSpec
    trials: int = 1000
    seed: int = 0
    plan: ChannelPlan | None = None
    channels: int = 22
    prime_factor: float = 5.7
    n_subbands: int = 6
    bandwidth_range: tuple[float, float] = (1e6, 10e6)
    alphas: tuple[float, ...] | None = DEFAULT_ALPHAS
    lambdas: tuple[float, ...] | None = None
    system: str = "ms3"
    control_channel: str = "ideal"
    control_snr_db: float = 15.0
    bounds: bool = False
    truth_fraction: float = 0.01
    truth: str = "band"

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.system not in SYSTEMS:
            raise DomainError(f"system must be one of {SYSTEMS}")
        if self.control_channel not in ("ideal", "rayleigh_block"):
            raise DomainError("control_channel must be 'ideal' or 'rayleigh_block'")
        if (self.alphas is None) == (self.lambdas is None):
            raise DomainError("give exactly one of alphas or lambdas")
        grid = self.alphas if self.alphas is not None else self.lambdas
        grid = tuple(float(g) for g in grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("threshold grid must be nonempty and strictly increasing")
        object.__setattr__(self, "alphas" if self.alphas is not None else "lambdas", grid)
        if self.alphas is not None and not all(0 < a < 1 for a in grid):
            raise DomainError("alphas must lie in (0, 1)")
        if self.lambdas is not None and grid[0] < 0:
            raise DomainError("lambdas must be nonnegative")
        if self.truth not in ("band", "magnitude"):
            raise DomainError("truth must be 'band' or 'magnitude'")
        if not 0 < self.truth_fraction < 1:
            raise DomainError("truth_fraction must lie in (0, 1)")

    def resolved_plan(self):
        if self.plan is not None:
            if self.plan.nyquist_N != self.scenario.nyquist_samples:
                raise DomainError("plan and scenario disagree on N")
            return self.plan
        return select_primes(self.scenario.nyquist_samples, self.channels, self.prime_factor)

    def resolved_scenario(self):
        if self.scenario.subbands:
            return self.scenario
        rng = np.random.default_rng(np.random.SeedSequence([self.seed]))
        bands = place_subbands(self.scenario.total_bandwidth, self.n_subbands, self.bandwidth_range, rng)
        return self.scenario.with_subbands(bands)

    def dof_half(self):
        """Half the noise-only chi-square degrees of freedom of the system statistic."""
        J = self.scenario.segments
        if self.system == "nyquist_type1":
            return J
        v = self.resolved_plan().channels if self.system == "ms3" else self.channels
        return J * v

    def thresholds(self):
        """Ascending threshold grid and the matching target rates (or ``None``)."""
        if self.lambdas is not None:
            return np.asarray(self.lambdas), None
        alphas = np.asarray(self.alphas)[::-1]
        lam = np.array([threshold_for_pfa(a, self.dof_half(), 1) for a in alphas])
        return lam, alphas

    def items(self):
        """Flat ``(key, value)`` pairs describing the run, in a fixed order."""
        sc = self.resolved_scenario()
        plan = self.resolved_plan() if self.system == "ms3" else None
        out = [
            ("scenario.total_bandwidth", sc.total_bandwidth),
            ("scenario.observation_time", sc.observation_time),
            ("scenario.nyquist_rate", sc.nyquist_rate),
            ("scenario.segments", sc.segments),
            ("scenario.nyquist_samples", sc.nyquist_samples),
            ("scenario.time_offset", "random" if sc.time_offset is None else sc.time_offset),
            ("scenario.noise_variance", sc.noise_variance),
            ("scenario.subbands", ";".join(f"{b.center_freq:.6g}/{b.bandwidth:.6g}/{b.power:.6g}" for b in sc.subbands)),
            ("plan.sample_counts", ",".join(map(str, plan.sample_counts)) if plan else ""),
            ("plan.channels", plan.channels if plan else self.channels),
            ("fading.kind", self.fading.kind),
            ("fading.mean_snr", self.fading.mean_snr),
            ("fading.sigma_db", "" if self.fading.sigma_db is None else self.fading.sigma_db),
            ("run.trials", self.trials),
            ("run.seed", self.seed),
            ("run.system", self.system),
            ("run.control_channel", self.control_channel),
            ("run.control_snr_db", self.control_snr_db),
            ("run.bounds", self.bounds),
            ("run.truth", self.truth),
            ("run.truth_fraction", self.truth_fraction),
            ("run.alphas", ",".join(f"{a:g}" for a in self.alphas) if self.alphas else ""),
            ("run.lambdas", ",".join(f"{x:.10g}" for x in self.lambdas) if self.lambdas else ""),
        ]
        return out

    def config_hash(self):
        text = "\n".join(f"{k}={v}" for k, v in self.items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class RocCurve:
    """Empirical operating points on an ascending threshold grid.

    ``pf_all`` scores every true-noise bin, ``pf_unaffected`` only bins that
    receive no folded signal energy.  ``pd`` averages over occupied bins and
    ``pd_subband`` counts a subband as detected when any of its bins fires.
    Bound columns (when requested) are averaged over the same bins and trials.
    """

    lam: np.ndarray
    alpha: np.ndarray | None
    pf_all: np.ndarray
    pf_unaffected: np.ndarray
    pd: np.ndarray
    pd_subband: np.ndarray
    pf_wilson: tuple[np.ndarray, np.ndarray]
    pf_unaffected_wilson: tuple[np.ndarray, np.ndarray]
    pd_wilson: tuple[np.ndarray, np.ndarray]
    bounds: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict, repr=False)

    def columns(self):
        cols = {
            "lambda": self.lam,
            "pf_all": self.pf_all,
            "pf_unaffected": self.pf_unaffected,
            "pd": self.pd,
            "pf_wilson_lo": self.pf_wilson[0],
            "pf_wilson_hi": self.pf_wilson[1],
            "pd_wilson_lo": self.pd_wilson[0],
            "pd_wilson_hi": self.pd_wilson[1],
            "pf_unaffected_wilson_lo": self.pf_unaffected_wilson[0],
            "pf_unaffected_wilson_hi": self.pf_unaffected_wilson[1],
            "pd_subband": self.pd_subband,
        }
        if self.alpha is not None:
            cols["alpha"] = self.alpha
        cols.update(self.bounds)
        return cols


def pd_at_pf(curve, target=0.1, which="pf_all"):
    """Detection rate read off the empirical ROC at false-alarm rate ``target``.

    Linear interpolation between the grid points that bracket ``target``;
    returns ``(pd, pd_lo, pd_hi)`` with the Wilson limits interpolated the
    same way.
    """
    pf = np.asarray(getattr(curve, which))[::-1]
    if not pf[0] <= target <= pf[-1]:
        raise DomainError(f"target {target} outside the simulated range [{pf[0]:.4g}, {pf[-1]:.4g}]")
    out = []
    for y in (curve.pd, curve.pd_wilson[0], curve.pd_wilson[1]):
        out.append(float(np.interp(target, pf, np.asarray(y)[::-1])))
    return tuple(out)


def _degenerate_mask(plan, N):
    """Bins excluded from scoring: DC, the Nyquist bin, and bins folding onto DC."""
    bad = np.zeros(N, dtype=bool)
    bad[0] = True
    if N % 2 == 0:
        bad[N // 2] = True
    if plan is not None:
        mag = np.abs(signed_frequency(np.arange(N), N))
        for M in plan.sample_counts:
            if M < N:
                bad |= mag % M == 0
                if M % 2 == 0:
                    bad |= mag % M == M // 2
    return bad


def _exceed_counts(values, lam):
    """Number of entries strictly above each threshold."""
    ordered = np.sort(values)
    return ordered.size - np.searchsorted(ordered, lam, side="right")


class _Engine:
    def __init__(self, config):
        self.cfg = config
        self.sc = config.resolved_scenario()
        if not self.sc.subbands:
            raise DomainError("scenario has no subbands")
        self.N = self.sc.nyquist_samples
        self.J = self.sc.segments
        self.L = len(self.sc.subbands)
        self.plan = config.resolved_plan() if config.system == "ms3" else None
        self.v = self.plan.channels if self.plan is not None else config.channels
        self.lam, self.alpha = config.thresholds()
        self.lookup = fold_lookup(self.plan) if self.plan is not None else None
        self.valid = ~_degenerate_mask(self.plan, self.N)
        self.powers = np.array([b.power for b in self.sc.subbands])
        self.bound_rows = []
        self.max_distinct = 0
        # nominal support: bins whose signed frequency lies inside a subband
        freq = np.abs(signed_frequency(np.arange(self.N), self.N)) * self.sc.bin_resolution
        self.in_band = np.stack([(freq >= b.low) & (freq <= b.high) for b in self.sc.subbands])
        self.in_band &= (self.powers > 0)[:, None]
        if config.system == "nyquist_type1":
            mag = np.abs(signed_frequency(np.arange(self.N), self.N))
            self.owner = np.minimum(mag * 2 * self.v // self.N, self.v - 1)

    def trial(self, t):
        cfg, sc = self.cfg, self.sc
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t]))
        snr = draw_fading(cfg.fading, self.v, rng, bands=self.L)
        delta = draw_time_offset(sc, rng)
        gains = np.sqrt(snr)
        unit = band_spectra(sc, delta)
        unit_energy = np.sum(unit.real**2 + unit.imag**2, axis=1) / sc.noise_variance

        if cfg.system == "ms3":
            energies = []
            for i, M in enumerate(self.plan.sample_counts):
                segs = sample_channel(sc, M, gains[i], delta, rng, i)
                spec = np.fft.fft(np.stack([s.samples for s in segs]), axis=-1)
                energies.append(np.sum(spec.real**2 + spec.imag**2, axis=0))
            energies = control_channel_impair(energies, cfg.control_channel, rng, cfg.control_snr_db)
            stat = fuse(energies, self.plan, self.J, sc.noise_variance, self.lookup).values
        else:
            clean = np.tensordot(gains, unit, axes=1)
            noise = rng.normal(0.0, sc.sample_noise_std, (self.v, self.J, self.N))
            obs = clean + np.fft.fft(noise, axis=-1)
            per_cr = np.sum(obs.real**2 + obs.imag**2, axis=1) / sc.noise_variance
            if cfg.system == "nyquist_type2":
                per_cr = np.stack(control_channel_impair(list(per_cr), cfg.control_channel, rng, cfg.control_snr_db))
                stat = per_cr.sum(axis=0)
            else:
                stat = per_cr[self.owner, np.arange(self.N)]

        mag = np.sqrt(unit_energy)
        leak = mag > cfg.truth_fraction * mag.max(axis=1, keepdims=True)
        leak &= (self.powers > 0)[:, None]
        occupied = leak.any(axis=0)
        band_occ = self.in_band if cfg.truth == "band" else leak
        h1 = band_occ.any(axis=0) & self.valid
        h0 = ~occupied & self.valid
        if self.plan is not None:
            supports = compute_support_sets(np.nonzero(occupied)[0], self.plan)
            h0u = supports.mask("unaffected") & self.valid
            distinct = supports.distinct_frequencies
        else:
            h0u = h0
            distinct = int(np.unique(np.abs(signed_frequency(np.nonzero(occupied)[0], self.N))).size)
        self.max_distinct = max(self.max_distinct, distinct)

        lam = self.lam
        det_band = np.zeros(lam.size, dtype=np.int64)
        n_band = 0
        for l in range(self.L):
            sel = band_occ[l] & self.valid
            if sel.any():
                n_band += 1
                det_band += stat[sel].max() > lam

        if cfg.bounds and self.plan is not None:
            self._record_bounds(snr, unit_energy[:, h1], distinct)

        return (
            _exceed_counts(stat[h0], lam),
            int(h0.sum()),
            _exceed_counts(stat[h0u], lam),
            int(h0u.sum()),
            _exceed_counts(stat[h1], lam),
            int(h1.sum()),
            det_band,
            n_band,
        )

    def _record_bounds(self, snr, unit_energy_h1, distinct):
        # total bin SNR per channel: gamma_i[k] = sum_l snr_il * e_l[k] / 2
        per_ch = snr @ (0.5 * unit_energy_h1)
        counts = self.plan.counts
        nc_d = 2.0 / self.N * (counts @ per_ch)
        unit_snr = 0.5 * unit_energy_h1.sum(axis=0)
        s_eff = min(distinct, self.v)
        if per_ch.shape[1]:
            worst = np.sort(counts * per_ch.max(axis=1))[::-1][:s_eff]
            nc_up = 2.0 / self.N * worst.sum()
            c_max = unit_snr.max()
        else:
            nc_up, c_max = 0.0, 0.0
        self.bound_rows.append((nc_d, unit_snr, nc_up, c_max, s_eff))

    def bound_columns(self):
        rows = self.bound_rows
        if not rows:
            return {}
        lam, J, v, N = self.lam, self.J, self.v, self.N
        dof = J * v
        psi = self.plan.psi
        fading = self.cfg.fading
        nc_d = np.concatenate([r[0] for r in rows])
        unit_snr = np.concatenate([r[1] for r in rows])
        nc_up = np.array([r[2] for r in rows])
        c_max = np.array([r[3] for r in rows])
        s_eff = np.array([r[4] for r in rows])

        chunk = 8192
        cols = {"pf_lower": special.gammaincc(dof, 0.5 * lam)}
        cols["pf_upper_t1"] = _chunked_mean(lambda x: marcum_grid(dof, x, lam), nc_up)
        cols["pd_lower_t1"] = _chunked_mean(lambda x: marcum_grid(dof, x, lam), nc_d)

        if fading.kind == "none":
            faded = lambda x, c: marcum_grid(dof, x * psi * fading.mean_snr * c, lam)
        elif fading.kind == "rayleigh":
            faded = lambda x, c: theta(x, dof, psi, fading.mean_snr * c, lam, OVERLAY_SERIES)
        else:
            th0, eta0 = wald_params(fading.mean_snr, fading.sigma_db)
            faded = lambda x, c: lambda_fn(x, dof, psi, lam, th0 * c, eta0 * c, OVERLAY_SERIES)
            chunk = 256

        cols["pd_lower_faded"] = _chunked_mean(lambda c: faded(v, c), unit_snr, chunk)
        total = np.zeros(lam.size)
        for s in np.unique(s_eff):
            sel = s_eff == s
            if s == 0:
                total += sel.sum() * cols["pf_lower"]
            else:
                total += _chunked_mean(lambda c: faded(int(s), c), c_max[sel], chunk) * sel.sum()
        cols["pf_upper_faded"] = total / len(rows)
        return cols


def _chunked_mean(fn, rows, chunk=8192):
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return np.full(0, np.nan)
    acc = None
    for start in range(0, rows.size, chunk):
        part = np.asarray(fn(rows[start : start + chunk]))
        part = part.sum(axis=0)
        acc = part if acc is None else acc + part
    return acc / rows.size


def run_trials(config, progress=None):
    """Run ``config.trials`` observation windows and score them on the threshold grid."""
    eng = _Engine(config)
    T, G = config.trials, eng.lam.size
    fa = np.zeros((T, G), dtype=np.int64)
    fau = np.zeros((T, G), dtype=np.int64)
    det = np.zeros((T, G), dtype=np.int64)
    band = np.zeros((T, G), dtype=np.int64)
    n0, n0u, n1, nb = (np.zeros(T, dtype=np.int64) for _ in range(4))
    for t in range(T):
        fa[t], n0[t], fau[t], n0u[t], det[t], n1[t], band[t], nb[t] = eng.trial(t)
        if progress is not None:
            progress(t + 1, T)

    pf, pf_lo, pf_hi = clustered_wilson(fa, n0)
    pfu, pfu_lo, pfu_hi = clustered_wilson(fau, n0u)
    pd, pd_lo, pd_hi = clustered_wilson(det, n1)
    pd_sub = band.sum(axis=0) / max(nb.sum(), 1)
    meta = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "trials": T,
        "system": config.system,
        "mean_occupied_bins": float(n1.mean()),
        "max_distinct_support": eng.max_distinct,
        "compression": eng.plan.compression if eng.plan is not None else 1.0,
    }
    return RocCurve(
        eng.lam,
        eng.alpha,
        pf,
        pfu,
        pd,
        pd_sub,
        (pf_lo, pf_hi),
        (pfu_lo, pfu_hi),
        (pd_lo, pd_hi),
        eng.bound_columns(),
        meta,
        {"fa": fa, "fa_unaffected": fau, "det": det, "n0": n0, "n0u": n0u, "n1": n1},
    )
