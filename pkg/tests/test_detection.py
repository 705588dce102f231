import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ms3.aliasing import ChannelPlan, fold_index, select_primes
from ms3.detection import (
    EnergyVector,
    TestStatistic as FusedStatistic,
    decide,
    energy_from_spectra,
    energy_vector,
    fold_lookup,
    fuse,
    single_channel_probabilities,
    threshold_for_pfa,
)
from ms3.exceptions import DomainError
from ms3.signal import ScenarioSpec, dft, sample_channel, segment_spectra
from ms3.specfun import marcum_q, reg_upper_gamma



class TestEnergy:
    def test_sum_over_segments(self, rng):
        segs = sample_channel(ScenarioSpec.at_nyquist(32e6, 20e-6, 5), 31, 1.0, 0.0, rng)
        frames = [dft(s) for s in segs]
        ev = energy_vector(frames)
        ref = np.sum(np.abs(segment_spectra(segs)) ** 2, axis=0)
        np.testing.assert_allclose(ev.values, ref)
        np.testing.assert_allclose(energy_from_spectra(segment_spectra(segs)).values, ref)
        assert ev.length == 31

    def test_rejects_mixed(self, rng):
        sc = ScenarioSpec.at_nyquist(32e6, 20e-6, 5)
        a = [dft(s) for s in sample_channel(sc, 31, 1.0, 0.0, rng, channel_index=0)]
        b = [dft(s) for s in sample_channel(sc, 37, 1.0, 0.0, rng, channel_index=1)]
        with pytest.raises(DomainError):
            energy_vector(a[:2] + b[:2])
        c = [dft(s) for s in sample_channel(sc, 37, 1.0, 0.0, rng, channel_index=0)]
        with pytest.raises(ValueError):
            energy_vector(a[:2] + c[:2])
        with pytest.raises(DomainError):
            energy_vector([])
        with pytest.raises(DomainError):
            EnergyVector(0, np.array([-1.0]))


class TestFuse:
    def test_matches_loop(self, rng):
        plan = ChannelPlan((11, 13, 17), 140)
        energies = [rng.random(m) for m in plan.sample_counts]
        stat = fuse(energies, plan, 5, noise_variance=2.0)
        ref = np.zeros(140)
        for k in range(140):
            ks = k if k < 70 else k - 140
            for e, m in zip(energies, plan.sample_counts):
                ref[k] += 140 / m * e[abs(ks) % m]
        np.testing.assert_allclose(stat.values, ref / 2.0)
        assert stat.dof_half == 15 and stat.channels == 3

    def test_batch_axes(self, rng):
        plan = ChannelPlan((11, 13), 120)
        energies = [rng.random((4, m)) for m in plan.sample_counts]
        stat = fuse(energies, plan, 2, lookup=fold_lookup(plan))
        assert stat.values.shape == (4, 120)
        np.testing.assert_allclose(stat.values[2], fuse([e[2] for e in energies], plan, 2).values)

    def test_mismatch(self, rng):
        plan = ChannelPlan((11, 13), 120)
        with pytest.raises(ValueError):
            fuse([rng.random(11)], plan, 5)
        with pytest.raises(ValueError):
            fuse([rng.random(11), rng.random(12)], plan, 5)

    def test_lookup(self):
        plan = ChannelPlan((11, 13), 120)
        lk = fold_lookup(plan)
        assert lk.shape == (2, 120)
        assert lk[1, 119] == fold_index(119, 13, 120) == 1

    def test_null_distribution(self, rng):
        # noise only, end to end through the signal module: chi-square with 2Jv dof
        sc = ScenarioSpec.at_nyquist(32e6, 20e-6, 5)
        plan = select_primes(sc.nyquist_samples, 3, 1.9)
        stats_ = []
        for _ in range(300):
            energies = [
                energy_from_spectra(segment_spectra(sample_channel(sc, m, 1.0, 0.0, rng))) for m in plan.sample_counts
            ]
            stats_.append(fuse(energies, plan, sc.segments).values)
        x = np.concatenate(stats_)
        # drop bins folding onto DC or Nyquist in some channel; they are real-valued
        k = np.arange(sc.nyquist_samples)
        ok = np.ones(k.size, dtype=bool)
        for m in plan.sample_counts:
            f = fold_index(k, m, sc.nyquist_samples)
            ok &= (f != 0) & ~((m % 2 == 0) & (f == m // 2))
        ok &= (k != 0) & (k != sc.nyquist_samples // 2)
        x = np.stack(stats_)[:, ok].ravel()
        dof = 2 * sc.segments * plan.channels
        assert x.mean() == pytest.approx(dof, rel=0.01)
        assert x.var() == pytest.approx(2 * dof, rel=0.05)
        alpha = 0.1
        lam = threshold_for_pfa(alpha, sc.segments, plan.channels)
        assert abs(np.mean(x > lam) - alpha) < 0.01


class TestDecide:
    def test_strict(self):
        d = decide(np.array([1.0, 2.0, 3.0]), 2.0)
        assert list(d.occupied) == [False, False, True]
        assert d.threshold == 2.0
        with pytest.raises(DomainError):
            decide(np.ones(2), -1.0)

    def test_accepts_statistic(self):
        plan = ChannelPlan((11, 13), 120)
        stat = FusedStatistic(np.arange(120.0), plan, 5)
        assert decide(stat, 100.0).occupied.sum() == 19


class TestThresholds:
    @given(st.floats(1e-6, 0.999), st.integers(1, 10), st.integers(1, 30))
    def test_pfa_round_trip(self, alpha, J, v):
        lam = threshold_for_pfa(alpha, J, v)
        assert abs(reg_upper_gamma(J * v, lam / 2) - alpha) <= 1e-12

    def test_aliased_threshold_is_higher(self):
        base = threshold_for_pfa(0.1, 5, 22)
        cons = threshold_for_pfa(0.1, 5, 22, aliased_amplitude=3.0)
        assert cons > base
        assert marcum_q(110, 3.0, math.sqrt(cons)) == pytest.approx(0.1, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
    def test_domain(self, alpha):
        with pytest.raises(DomainError):
            threshold_for_pfa(alpha, 5, 2)


class TestSingleChannel:
    def test_zero_snr(self):
        pf, pd = single_channel_probabilities(5, 12.0, 0.0)
        assert pf == pytest.approx(pd, abs=1e-12)

    def test_monte_carlo(self, rng):
        J, lam, snr = 5, 18.0, 3.0
        pf, pd = single_channel_probabilities(J, lam, snr)
        x0 = rng.chisquare(2 * J, 200_000)
        x1 = rng.noncentral_chisquare(2 * J, 2 * snr, 200_000)
        assert abs(np.mean(x0 > lam) - pf) < 4 * math.sqrt(pf * (1 - pf) / 2e5)
        assert abs(np.mean(x1 > lam) - pd) < 4 * math.sqrt(pd * (1 - pd) / 2e5)
        assert pd == pytest.approx(stats.ncx2.sf(lam, 2 * J, 2 * snr), abs=1e-10)

    def test_vector(self):
        pf, pd = single_channel_probabilities(5, np.array([5.0, 10.0]), 1.0)
        assert pf.shape == pd.shape == (2,)
        with pytest.raises(DomainError):
            single_channel_probabilities(5, -1.0, 1.0)
