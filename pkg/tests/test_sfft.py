import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_signal
from sparsechan.bench import trend_ok
from sparsechan.channel import sample_coefficients
from sparsechan.errors import BandCountMismatch, InvalidConfig, NotInvertible
from sparsechan.estimators import sce_config
from sparsechan.sfft import (DerivedSampler, Sampler, SfftConfig, SpectralPermutation,
                             _phase_layout, bit_by_bit, bit_t_bit, filter_bank_apply,
                             filter_bank_direct, gaussian_filter, isolation_window, make_plan,
                             non_isolated, permute_signal, phase_refine, prime_power,
                             random_permutation, sfft, threshold_estimate,
                             thresholding_failure_bound)
from sparsechan.signals import dft


def tone(n, w, alpha=1.0):
    return alpha * np.exp(2j * np.pi * ((w * np.arange(n)) % n) / n)


def tones(n, ws, alphas):
    t = np.arange(n)
    return (np.asarray(alphas)[None, :] * np.exp(2j * np.pi * np.outer(t, ws) / n)).sum(axis=1)


def cnoise(n, var, rng):
    return np.sqrt(var / 2) * (rng.normal(size=n) + 1j * rng.normal(size=n))


# ---- samplers

def test_sampler_counts_distinct_positions():
    s = Sampler(np.arange(10, dtype=complex))
    s([1, 2, 2, 11])
    assert s.samples == 2 and s.reads == 4
    d = DerivedSampler(s, lambda idx: 2.0 * np.ones(len(idx)))
    assert np.allclose(d(np.array([3])), [6.0])
    assert s.samples == 3
    f = Sampler(lambda idx: idx * 1.0, n=5)
    assert np.allclose(f(np.array([7])), [2.0])
    with pytest.raises(ValueError):
        Sampler(lambda idx: idx)


# ---- filters

def test_filter_taps_and_support():
    for k, n in [(1, 64), (3, 101), (8, 4096)]:
        f = gaussian_filter(k, n)
        assert f.taps[f.half_width] == 1.0
        assert f.half_width == math.ceil(k * math.log(n))
    with pytest.raises(InvalidConfig):
        gaussian_filter(0, 16)


def test_filter_tail_bound():
    f = gaussian_filter(4, 4096)
    assert f.tail_sum() <= 2 / 4096 ** math.pi


def test_filter_passband_floor():
    for k, n in [(4, 4096), (5, 8191), (2, 1024)]:
        f = gaussian_filter(k, n)
        band = np.arange(-int(f.guaranteed_halfwidth()), int(f.guaranteed_halfwidth()) + 1)
        assert f.response(band).min() >= f.delta
        # the DFT of the truncated window itself, normalised to its peak
        spec = np.abs(np.fft.fft(np.roll(np.pad(f.taps, (0, n - len(f.taps))), -f.half_width)))
        spec /= spec.max()
        assert spec[band % n].min() >= f.delta
        # the guaranteed band sits inside the exact passband
        assert f.guaranteed_halfwidth() <= f.passband_halfwidth()


def test_filter_bank_trivial_filter():
    n = 16
    rng = np.random.default_rng(0)
    s = random_signal(n, rng)
    f = gaussian_filter(1, n, scale=1e-9)            # half width 1, taps (0, 1, 0)
    assert np.allclose(f.taps, [0, 1, 0])
    out = filter_bank_apply(s, f, n, 5)
    assert np.allclose(out, s[5])
    assert np.allclose(out, filter_bank_direct(s, f, n, 5))


def test_filter_bank_matches_direct(rng):
    n, k, m = 512, 4, 8
    s = random_signal(n, rng)
    f = gaussian_filter(k, n)
    at = rng.integers(0, n, 6)
    assert np.abs(filter_bank_apply(s, f, m, at) - filter_bank_direct(s, f, m, at)).max() <= 1e-6


def test_filter_bank_uses_window_samples_only(rng):
    n, k, m = 512, 4, 8
    f = gaussian_filter(k, n)
    smp = Sampler(random_signal(n, rng))
    filter_bank_apply(smp, f, m, 100)
    assert smp.samples == 2 * f.half_width + 1


def test_filter_bank_truncation_error(rng):
    n, k, m = 256, 2, 4
    s = random_signal(n, rng, unit=False)
    f = gaussian_filter(k, n)
    at = np.arange(0, n, 17)
    trunc = filter_bank_direct(s, f, m, at)
    full = filter_bank_direct(s, f, m, at, truncate=False)
    bound = 10 * f.tail_sum() / f.taps.sum() * np.abs(s).max()
    assert np.abs(trunc - full).max() <= bound


def test_filter_bank_band_count_must_divide(rng):
    f = gaussian_filter(2, 100)
    with pytest.raises(BandCountMismatch):
        filter_bank_apply(np.ones(100), f, 7, 0)
    out = filter_bank_apply(np.ones(100), f, 7, 0, strict=False)
    assert out.shape == (7,)


def test_filter_bank_isolates_tone_in_its_band():
    n, k, m = 1024, 4, 16
    f = gaussian_filter(k, n)
    x = tone(n, 3 * n // m + 5, 0.7)
    out = filter_bank_apply(x, f, m, np.array([10, 20]))
    assert np.argmax(np.abs(out[0])) == 3
    assert abs(abs(out[0, 3]) - 0.7 * f.response(5)) < 1e-9


def test_filtered_noise_variance():
    n, trials = 4096, 300
    rng = np.random.default_rng(8)
    f = gaussian_filter(4, n, scale=2.0)
    outs = np.array([filter_bank_apply(cnoise(n, 1.0, rng), f, 1, 0) for _ in range(trials)])
    # per-sample input variance 1; output variance must be <= 1 / k
    assert np.mean(np.abs(outs) ** 2) <= 1.1 / 4


# ---- permutations

def test_permutation_identity_and_errors(rng):
    s = random_signal(11, rng)
    assert np.allclose(permute_signal(s, SpectralPermutation(1, 0, 11)), s)
    with pytest.raises(NotInvertible):
        SpectralPermutation(4, 0, 12)


def test_permutation_spectral_identity(rng):
    n = 101
    s = random_signal(n, rng)
    for _ in range(10):
        p = random_permutation(n, rng)
        fy, fx = dft(permute_signal(s, p)), dft(s)
        nu = np.arange(n)
        assert np.abs(fy[p.forward(nu)] - fx[nu]).max() < 1e-9
        assert np.abs(fy[nu] - fx[p.backward(nu)]).max() < 1e-9


@given(st.sampled_from([12, 101, 300, 1024]), st.integers(0, 2 ** 32 - 1))
def test_permutation_inverse(n, seed):
    rng = np.random.default_rng(seed)
    s = random_signal(n, rng)
    p = random_permutation(n, rng)
    back = permute_signal(permute_signal(s, p), p.inverse())
    # undoing the permutation leaves a unimodular phase per sample: e(-a sigma^-1 ... ) bookkeeping
    t = np.arange(n)
    ph = p.inverse().modulation(t) * p.modulation(p.inverse().positions(t))
    assert np.abs(back - ph * s).max() < 1e-12
    assert np.array_equal(p.backward(p.forward(t)), t)


def test_permutation_spreads_clustered_frequencies():
    n = 300
    freqs = np.array([-100, -75, 70]) % n
    centres = np.round(freqs * 3 / n).astype(int) % 3
    assert len(set(centres)) < 3                       # two share a third before
    p = SpectralPermutation(163, 0, n)
    moved = p.forward(freqs)
    assert sorted(moved.tolist()) == [10, 75, 200]
    assert len(set((np.round(moved * 3 / n).astype(int) % 3).tolist())) == 3


def test_isolation_rate_small():
    n, k, draws = 1031, 4, 3000
    rng = np.random.default_rng(4)
    cfg = SfftConfig(k)
    c = isolation_window(n, cfg.n_bands(n))
    hits = 0
    for _ in range(draws):
        freqs = rng.choice(n, size=k, replace=False)
        hits += bool(non_isolated(freqs, random_permutation(n, rng), c)[0])
    rate = hits / draws
    bound = 2 * c * k / n
    assert rate <= bound + 3 * math.sqrt(bound * (1 - bound) / draws)


# ---- 1-sparse recovery

def test_prime_power():
    assert prime_power(1024) == (2, 10)
    assert prime_power(729) == (3, 6)
    assert prime_power(8191) == (8191, 1)
    assert prime_power(12) is None and prime_power(1) is None


@pytest.mark.parametrize("n", [64, 27, 125])
@pytest.mark.parametrize("decision", ["energy", "nearest_phase"])
def test_bit_by_bit_exhaustive_noiseless(n, decision):
    cfg = SfftConfig(1, t_bit=1, decision=decision)
    rng = np.random.default_rng(n)
    for w in range(n):
        got = bit_by_bit(tone(n, w), cfg, rng)
        assert got is not None and got[0] == w and abs(got[1] - 1) < 1e-9


def test_bit_by_bit_sample_budget():
    n = 1024
    cfg = SfftConfig(1, t_bit=3)
    smp = Sampler(tone(n, 77))
    bit_by_bit(smp, cfg, np.random.default_rng(0))
    assert smp.samples <= 2 * cfg.t_bit * 10


def test_bit_by_bit_radix_mismatch():
    with pytest.raises(InvalidConfig):
        bit_by_bit(tone(12, 1), SfftConfig(1), np.random.default_rng(0))
    with pytest.raises(InvalidConfig):
        bit_by_bit(tone(27, 1), SfftConfig(1), np.random.default_rng(0), radix=2)


def test_bit_by_bit_rejects_pure_noise():
    n, trials, mu = 64, 1000, 0.5
    # enough anchors that the coefficient test alone has tail 2 exp(-m mu^2 / (8 + 2)) <= 0.05
    m_needed = math.ceil(10 * math.log(2 / 0.05) / mu ** 2)
    t_bit = math.ceil(m_needed / (2 * 6))
    assert thresholding_failure_bound(2 * 6 * t_bit, mu, 1.0) <= 0.05
    cfg = SfftConfig(1, mu=mu, t_bit=t_bit)
    rng = np.random.default_rng(1)
    empty = sum(bit_by_bit(cnoise(n, 1.0, rng), cfg, rng) is None for _ in range(trials))
    assert empty >= 0.95 * trials


def test_bit_by_bit_at_10db():
    n, trials, snr = 1024, 1000, 10.0
    cfg = SfftConfig(1, t_bit=bit_t_bit(n, snr))
    assert cfg.t_bit == math.ceil(8 * math.log(10 / 0.05) / 10)
    rng = np.random.default_rng(2)
    ok = 0
    for _ in range(trials):
        w = int(rng.integers(n))
        x = tone(n, w, np.exp(2j * np.pi * rng.random())) + cnoise(n, 1 / snr, rng)
        got = bit_by_bit(x, cfg, rng)
        ok += got is not None and got[0] == w
    assert ok >= 0.95 * trials


@pytest.mark.parametrize("n", [127, 101, 97 * 89])
def test_phase_refine_noiseless(n):
    cfg = SfftConfig(1)
    rng = np.random.default_rng(0)
    for w in (range(n) if n < 200 else rng.integers(0, n, 200)):
        got = phase_refine(tone(n, int(w), 0.5j), cfg, rng)
        assert got[0] == w and abs(got[1] - 0.5j) < 1e-9


def test_phase_layout_steps():
    lay = _phase_layout(1000, 2, np.random.default_rng(0))
    steps = lay.meta["steps"].tolist()
    assert steps[:3] == [0, 1, 2] and steps[-1] > 1000 / 3 and steps[-2] <= 1000 / 3
    lay = _phase_layout(65537, 1, np.random.default_rng(0), ratio=8, first=30)
    steps = lay.meta["steps"].tolist()
    assert steps == [0, 30, 240, 1920, 15360, 32768]
    with pytest.raises(InvalidConfig):
        SfftConfig(1, phase_ratio=1)


def test_threshold_estimate_examples(rng):
    n = 97
    x = tone(n, 13, 0.3 - 0.4j)
    assert abs(threshold_estimate(x, 13, 5, rng) - (0.3 - 0.4j)) < 1e-12
    assert abs(threshold_estimate(x, 14, n, rng, anchors=np.arange(n))) < 1e-9


def test_threshold_estimate_concentration():
    n, snr, trials = 1024, 10.0, 2000
    rng = np.random.default_rng(3)
    for m in (8, 16, 32):
        fails = 0
        for _ in range(trials):
            a0 = np.exp(2j * np.pi * rng.random())
            x = tone(n, 5, a0) + cnoise(n, 1 / snr, rng)
            fails += abs(threshold_estimate(x, 5, m, rng) - a0) > 0.5
        assert fails / trials <= thresholding_failure_bound(m, 0.5, snr)


def test_t_bit_formula():
    assert bit_t_bit(1024, np.inf) == 1
    assert bit_t_bit(1024, 10.0) == math.ceil(8 * math.log(10 / 0.05) / 10.0)


# ---- k-sparse

def test_config_validation():
    with pytest.raises(InvalidConfig):
        SfftConfig(2, t_bit=0)
    with pytest.raises(InvalidConfig):
        SfftConfig(2, decision="vote")
    with pytest.raises(InvalidConfig):
        SfftConfig(2, recoverer="magic")
    assert SfftConfig(5).n_bands(1024) == 5 * math.ceil(math.log(1024))
    assert abs(SfftConfig.threshold(0.5, 0.5, 1.0, 4) - 0.125) < 1e-15


def test_sfft_noiseless_three_tones():
    n = 1024
    ws, alphas = [17, 400, 811], [1.0, 0.6j, -0.8]
    got = sfft(tones(n, ws, alphas), SfftConfig(3, mu=0.1, n_perm=3), np.random.default_rng(0))
    got = dict(got)
    assert sorted(got) == ws
    # coefficients carry leakage from the other tones through neighbouring bands
    for w, a in zip(ws, alphas):
        assert abs(got[w] - a) < 1e-3


def test_sfft_noiseless_prime_modulus():
    n = 8191
    ws, alphas = [5, 4000, 8000], [0.5, 0.7, -0.5j]
    got = dict(sfft(tones(n, ws, alphas), SfftConfig(3, mu=0.1, n_perm=3), np.random.default_rng(1)))
    assert sorted(got) == ws
    lean = SfftConfig(3, mu=0.1, n_perm=3, band_prior=True, phase_ratio=8)
    got = dict(sfft(tones(n, ws, alphas), lean, np.random.default_rng(1)))
    assert sorted(got) == ws


def test_sfft_empty_cases(rng):
    x = tone(64, 3)
    assert sfft(x, SfftConfig(0), rng) == []
    assert sfft(x, SfftConfig(2, mu=0.1), rng, k=0) == []


def test_sfft_deterministic_and_plan_reuse():
    n = 2048
    x = tones(n, [3, 900], [1.0, 0.5])
    cfg = SfftConfig(2, mu=0.1, n_perm=3)
    a = sfft(x, cfg, np.random.default_rng(9))
    b = sfft(x, cfg, np.random.default_rng(9))
    assert a == b
    plan = make_plan(n, cfg, np.random.default_rng(4))
    s1, s2 = Sampler(x), Sampler(2 * x)
    sfft(s1, cfg, plan=plan)
    sfft(s2, cfg, plan=plan)
    assert np.array_equal(s1.touched, s2.touched)


def _standalone_trial(n, k, snr_db, rng, cfg):
    ws = rng.choice(n, size=k, replace=False)
    alphas = sample_coefficients(k, 1.0, 0.5, rng)
    x = tones(n, ws, alphas) + cnoise(n, 10 ** (-snr_db / 10), rng)
    smp = Sampler(x)
    got = {w for w, _ in sfft(smp, cfg, rng)}
    truth = set(ws.tolist())
    return len(got & truth), len(got - truth), len(got), smp


def test_sfft_pd_trend_over_octaves():
    k, trials = 5, 500
    pds, ses = [], []
    for e in (11, 12, 13):
        n = 2 ** e
        cfg = sce_config(n, k, 10.0, n_lines=1)
        rng = np.random.default_rng(e)
        hits = sum(_standalone_trial(n, k, 10.0, rng, cfg)[0] for _ in range(trials))
        pd = hits / (k * trials)
        pds.append(pd)
        ses.append(math.sqrt(max(pd * (1 - pd), 1e-12) / (k * trials)))
    assert trend_ok(pds, ses, increasing=True)
    assert pds[-1] >= 0.95


def test_sfft_sample_constant_is_stable():
    # reads (with multiplicity) over k (log N)^3 / (eps^2 SNR); distinct samples never exceed reads
    k, snr, eps = 5, 10.0, 0.5
    consts = []
    for e in range(11, 17):
        n = 2 ** e
        cfg = sce_config(n, k, 10.0, n_lines=1)
        rng = np.random.default_rng(e)
        reads = distinct = 0
        for _ in range(5):
            *_, smp = _standalone_trial(n, k, 10.0, rng, cfg)
            reads += smp.reads
            distinct += smp.samples
        shape = k * math.log(n) ** 3 / (eps ** 2 * snr)
        consts.append(reads / 5 / shape)
        assert distinct <= reads
    assert max(consts) / min(consts) < 1.3
