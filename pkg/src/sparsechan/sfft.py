"""Sparse FFT: Gaussian filter banks, spectral permutations and 1-sparse recovery.

Signal model: x[t] = sum_j c_j exp(2 pi i w_j t / N) + noise, i.e. the
coefficient c_j is the amplitude of a unit-modulus tone. Every routine reads
the signal only through a :class:`Sampler`, which counts the distinct
positions touched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft_

from .errors import BandCountMismatch, InvalidConfig, NotInvertible
from .zn import mod_inverse


# --------------------------------------------------------------------- sampling

class Sampler:
    """Indexed access to a length-N signal with exact read accounting.

    ``source`` is either an array or a function mapping an int index array to
    values. ``touched`` marks every distinct position read so far; ``ops`` is a
    shared tally that algorithms add their arithmetic work to.
    """

    def __init__(self, source, n: int | None = None):
        if callable(source):
            if n is None:
                raise ValueError("n is required for a callable source")
            self._fn = source
            self.n = int(n)
        else:
            arr = np.asarray(source, dtype=complex)
            self._fn = arr.__getitem__
            self.n = len(arr)
        self.touched = np.zeros(self.n, dtype=bool)
        self.reads = 0
        self.ops = 0

    def __call__(self, idx) -> np.ndarray:
        idx = np.mod(np.asarray(idx, dtype=np.int64), self.n)
        self.touched[idx.ravel()] = True
        self.reads += idx.size
        return np.asarray(self._fn(idx), dtype=complex)

    @property
    def samples(self) -> int:
        return int(self.touched.sum())


class DerivedSampler:
    """Pointwise product ``weight(idx) * base(idx)``; reads are charged to ``base``."""

    def __init__(self, base, weight: Callable[[np.ndarray], np.ndarray]):
        self.base = base
        self.weight = weight
        self.n = base.n

    def __call__(self, idx) -> np.ndarray:
        idx = np.mod(np.asarray(idx, dtype=np.int64), self.n)
        return self.weight(idx) * self.base(idx)

    @property
    def ops(self):
        return self.base.ops

    @ops.setter
    def ops(self, v):
        self.base.ops = v

    @property
    def samples(self) -> int:
        return self.base.samples


def as_sampler(s):
    """Wrap a plain array; pass anything that already behaves like a sampler through."""
    if callable(s) and hasattr(s, "n"):
        return s
    return Sampler(s)


def _phase(k, n):
    return np.exp(2j * np.pi * (np.mod(k, n) / n))


# ---------------------------------------------------------------------- filters

@dataclass
class FilterSpec:
    """Discrete Gaussian window exp(-pi tau^2 / (scale^2 k^2 log N)) on [-w, w]."""

    k: float
    n: int
    delta: float = 1 / math.sqrt(2)
    scale: float = 1.0
    taps: np.ndarray = field(init=False, repr=False)
    half_width: int = field(init=False)

    def __post_init__(self):
        self.half_width = int(math.ceil(self.scale * self.k * math.log(self.n)))
        tau = np.arange(-self.half_width, self.half_width + 1)
        self.taps = self.shape(tau)

    def shape(self, tau) -> np.ndarray:
        width_sq = (self.scale * self.k) ** 2 * math.log(self.n)
        return np.exp(-np.pi * np.asarray(tau, dtype=float) ** 2 / width_sq)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def normalized_taps(self) -> np.ndarray:
        """Taps scaled to unit gain at zero frequency."""
        return self.taps / self.taps.sum()

    def tail_sum(self, extent: int | None = None) -> float:
        """Sum of the untruncated window over |tau| > half_width."""
        extent = extent or 50 * self.half_width + 50
        tau = np.arange(self.half_width + 1, extent)
        return float(2 * self.shape(tau).sum())

    def response(self, dfreq) -> np.ndarray:
        """Gain of the normalised filter at a frequency offset (in DFT bins)."""
        d = np.atleast_1d(np.asarray(dfreq, dtype=float))
        g = self.normalized_taps
        return (np.cos(2 * np.pi * np.outer(d, self.offsets) / self.n) @ g).reshape(np.shape(dfreq))

    def passband_halfwidth(self) -> float:
        """Largest offset where the ideal Gaussian response is still >= delta."""
        return self.n * math.sqrt(math.log(1 / self.delta) / math.pi) / (
            self.scale * self.k * math.sqrt(math.log(self.n)))

    def guaranteed_halfwidth(self) -> float:
        """The narrower band N sqrt(log(1/delta)) / (pi k sqrt(log N)) used in the filter bound."""
        return self.n * math.sqrt(math.log(1 / self.delta)) / (
            math.pi * self.scale * self.k * math.sqrt(math.log(self.n)))


def gaussian_filter(k, n: int, delta: float = 1 / math.sqrt(2), scale: float = 1.0) -> FilterSpec:
    if not 1 <= k <= n:
        raise InvalidConfig("need 1 <= k <= N")
    return FilterSpec(k, n, delta, scale)


def _fold(prod: np.ndarray, start: int, m: int) -> np.ndarray:
    """Sum columns of ``prod`` (tap offsets start, start+1, ...) into residues mod m."""
    e, w = prod.shape
    lead = start % m
    total = lead + w
    pad = (-total) % m
    buf = np.zeros((e, total + pad), dtype=complex)
    buf[:, lead:lead + w] = prod
    return buf.reshape(e, -1, m).sum(axis=1)


def filter_bank_apply(s, filt: FilterSpec, m: int, at, strict: bool = True,
                      normalized: bool = True) -> np.ndarray:
    """Outputs of m modulated copies of the filter at the given times.

    Band j (j = 0..m-1) is the filter modulated to centre frequency j N / m:
    S_j[t] = sum_tau F[tau] exp(2 pi i j tau / m) s[t - tau]. All m bands come
    from one fold of the windowed samples into m residues and one length-m FFT.
    With ``strict`` the band count must divide N; otherwise band centres are
    allowed to fall between DFT bins.

    ``s`` is an array or a :class:`Sampler`. Returns shape (m,) for a scalar
    ``at`` and (len(at), m) otherwise.
    """
    n = filt.n
    if strict and n % m:
        raise BandCountMismatch(f"{m} bands do not divide N={n}")
    sampler = as_sampler(s)
    at_arr = np.atleast_1d(np.asarray(at, dtype=np.int64))
    taps = filt.normalized_taps if normalized else filt.taps
    offs = filt.offsets
    vals = sampler(at_arr[:, None] - offs[None, :])
    folded = _fold(vals * taps[None, :], int(offs[0]), m)
    out = m * sfft_.ifft(folded, axis=1)
    sampler.ops += vals.size + int(len(at_arr) * m * max(1, math.ceil(math.log2(max(m, 2)))))
    return out[0] if np.ndim(at) == 0 else out


def filter_bank_direct(s: np.ndarray, filt: FilterSpec, m: int, at, truncate: bool = True,
                       normalized: bool = True) -> np.ndarray:
    """Reference implementation by explicit circular convolution over all of Z_N."""
    n = filt.n
    tau = np.arange(n)
    signed = np.where(tau <= n // 2, tau, tau - n)
    if truncate:
        full = np.where(np.abs(signed) <= filt.half_width, filt.shape(signed), 0.0)
    else:
        ext = np.arange(-40 * n, 40 * n + 1)
        full = np.zeros(n)
        np.add.at(full, ext % n, filt.shape(ext))
    if normalized:
        full = full / filt.taps.sum()
    at_arr = np.atleast_1d(at)
    out = np.empty((len(at_arr), m), dtype=complex)
    for j in range(m):
        kern = full * np.exp(2j * np.pi * j * signed / m)
        for row, t in enumerate(at_arr):
            out[row, j] = np.sum(kern * s[(t - tau) % n])
    return out[0] if np.ndim(at) == 0 else out


# ------------------------------------------------------------------ permutation

@dataclass(frozen=True)
class SpectralPermutation:
    """y[t] = exp(2 pi i a t / N) x[sigma t]; a tone at w moves to sigma w + a."""

    sigma: int
    a: int
    n: int

    def __post_init__(self):
        if math.gcd(self.sigma % self.n, self.n) != 1:
            raise NotInvertible(f"sigma={self.sigma} not invertible mod {self.n}")

    def forward(self, w):
        return (self.sigma * np.asarray(w) + self.a) % self.n

    def backward(self, v):
        inv = mod_inverse(self.sigma, self.n).value
        return (inv * (np.asarray(v) - self.a)) % self.n

    def inverse(self) -> "SpectralPermutation":
        inv = mod_inverse(self.sigma, self.n).value
        return SpectralPermutation(inv, (-self.a * inv) % self.n, self.n)

    def positions(self, t) -> np.ndarray:
        return (self.sigma * np.asarray(t, dtype=np.int64)) % self.n

    def modulation(self, t) -> np.ndarray:
        return _phase(self.a * np.asarray(t, dtype=np.int64), self.n)


def permute_signal(s: np.ndarray, p: SpectralPermutation) -> np.ndarray:
    t = np.arange(len(s))
    return p.modulation(t) * np.asarray(s)[p.positions(t)]


def random_permutation(n: int, rng: np.random.Generator) -> SpectralPermutation:
    while True:
        sigma = int(rng.integers(1, n))
        if math.gcd(sigma, n) == 1:
            return SpectralPermutation(sigma, int(rng.integers(0, n)), n)


def isolation_window(n: int, n_bands: int) -> float:
    """Collision half-width C = N / (2 n_bands): half the spacing of band centres."""
    return n / (2 * n_bands)


def non_isolated(freqs, perm: SpectralPermutation, window: float) -> np.ndarray:
    """For each frequency, whether another permuted frequency lies within ``window`` of it."""
    v = perm.forward(np.asarray(freqs, dtype=np.int64))
    d = np.abs(v[:, None] - v[None, :]) % perm.n
    d = np.minimum(d, perm.n - d)
    np.fill_diagonal(d, perm.n)
    return (d <= window).any(axis=1)


class PermutedSampler:
    """Sampler view of the permuted signal y[t] = e(a t) x[sigma t]."""

    def __init__(self, base, perm: SpectralPermutation):
        self.base = base
        self.perm = perm
        self.n = base.n

    def __call__(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return self.perm.modulation(idx) * self.base(self.perm.positions(idx))

    @property
    def ops(self):
        return self.base.ops

    @ops.setter
    def ops(self, v):
        self.base.ops = v


# ------------------------------------------------------------- 1-sparse recovery

def prime_power(n: int) -> tuple[int, int] | None:
    """(p, e) with n = p**e for prime p, or None."""
    if n < 2:
        return None
    p = next((d for d in range(2, math.isqrt(n) + 1) if n % d == 0), n)
    e, m = 0, n
    while m % p == 0:
        m //= p
        e += 1
    return (p, e) if m == 1 else None


@dataclass
class SfftConfig:
    k: int
    mu: float = 0.0
    kappa: float = 0.5
    t_bit: int = 1
    n_perm: int = 1
    delta: float = 1 / math.sqrt(2)
    delta_conf: float = 0.05
    band_factor: float = 1.0
    filter_scale: float = 1.0
    vote_fraction: float = 1 / 3
    max_radix: int = 7
    decision: str = "energy"            # "energy" or "nearest_phase"
    recoverer: str = "auto"             # "auto", "digits" or "phase"
    phase_ratio: int = 2                # lag growth per refinement stage
    band_prior: bool = False            # start refinement from the band centre

    def __post_init__(self):
        if self.t_bit < 1 or self.n_perm < 1:
            raise InvalidConfig("t_bit and n_perm must be >= 1")
        if self.decision not in ("energy", "nearest_phase"):
            raise InvalidConfig(f"unknown decision rule {self.decision!r}")
        if self.recoverer not in ("auto", "digits", "phase"):
            raise InvalidConfig(f"unknown recoverer {self.recoverer!r}")
        if self.phase_ratio < 2:
            raise InvalidConfig("phase_ratio must be >= 2")

    def n_bands(self, n: int) -> int:
        return max(1, int(math.ceil(self.band_factor * self.k * math.ceil(math.log(n)))))

    @staticmethod
    def threshold(kappa: float, eps: float, energy: float, k: int) -> float:
        return kappa * eps * math.sqrt(energy / k)


def bit_t_bit(n: int, snr: float, delta: float = 0.05) -> int:
    """Repetitions per digit, ceil(8 ln(log2 N / delta) / SNR)."""
    if not np.isfinite(snr):
        return 1
    return max(1, int(math.ceil(8 * math.log(math.log2(n) / delta) / snr)))


def thresholding_failure_bound(m: int, mu: float, snr: float) -> float:
    """2 exp(-m mu^2 / (8 + 2 / SNR))."""
    return 2 * math.exp(-m * mu * mu / (8 + 2 / snr))


class _Layout:
    """Sample-time layout for one run of a 1-sparse recoverer.

    ``times`` is a flat array of evaluation times; the decoder gets values at
    those times reshaped as ``shape`` (leading axes) plus any trailing band axis.
    """

    def __init__(self, kind: str, n: int, times: np.ndarray, shape: tuple, meta: dict):
        self.kind, self.n, self.times, self.shape, self.meta = kind, n, times, shape, meta


def _digit_layout(n: int, p: int, e: int, t_bit: int, rng) -> _Layout:
    # times[m, i, j] = r_{m,i} + j N / p^(m+1), m = 0..e-1 (least significant first)
    anchors = rng.integers(0, n, size=(e, t_bit))
    steps = np.array([n // p ** (m + 1) for m in range(e)], dtype=np.int64)
    j = np.arange(p)
    times = (anchors[:, :, None] + steps[:, None, None] * j[None, None, :]) % n
    return _Layout("digits", n, times.ravel(), times.shape, {"p": p, "e": e})


def _phase_layout(n: int, t_bit: int, rng, ratio: int = 2, first: int = 1) -> _Layout:
    # times[i, j] = r_i + d_j with d_0 = 0, d_1 = first and d_(j+1) = ratio d_j,
    # stopping at the first lag above N/3 (clipped to N/2)
    steps = [0]
    d = max(1, first)
    while True:
        if d > n / 3:
            steps.append(min(d, n // 2))
            break
        steps.append(d)
        d *= ratio
    steps = np.array(steps, dtype=np.int64)
    anchors = rng.integers(0, n, size=t_bit)
    times = (anchors[:, None] + steps[None, :]) % n
    return _Layout("phase", n, times.ravel(), times.shape, {"steps": steps})


def _make_layout(n: int, cfg: SfftConfig, rng) -> _Layout:
    pp = prime_power(n)
    use_digits = cfg.recoverer == "digits" or (
        cfg.recoverer == "auto" and pp is not None and pp[0] <= cfg.max_radix)
    if use_digits:
        if pp is None:
            raise InvalidConfig(f"digit recovery needs a prime power, got N={n}")
        return _digit_layout(n, pp[0], pp[1], cfg.t_bit, rng)
    # with a band prior the first lag only has to resolve a tone within
    # a quarter band of the centre
    first = max(1, cfg.n_bands(n) // 4) if cfg.band_prior else 1
    return _phase_layout(n, cfg.t_bit, rng, cfg.phase_ratio, first)


def _coherent(vals: np.ndarray, times: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    """mean over samples of vals * exp(-2 pi i w t / N), per band."""
    ph = _phase(-np.outer(times, w), n)           # (S, B)
    return (vals * ph).mean(axis=0)


def _decode_digits(vals: np.ndarray, lay: _Layout, decision: str) -> np.ndarray:
    n, p, e = lay.n, lay.meta["p"], lay.meta["e"]
    times = lay.times.reshape(lay.shape)
    b = vals.shape[-1]
    v = vals.reshape(lay.shape + (b,))
    w = np.zeros(b, dtype=np.int64)
    rot = _phase(-np.outer(np.arange(p), np.arange(p)), p)       # [d, j]
    for m in range(e):
        z = v[m] * _phase(-times[m][:, :, None] * w[None, None, :], n)   # (T, p, B)
        agg = np.einsum("dj,tjb->tdb", rot, z)                          # (T, d, B)
        if decision == "energy":
            score = (np.abs(agg) ** 2).sum(axis=0)
        else:
            score = np.abs(agg.sum(axis=0))
        digit = np.argmax(score, axis=0)                               # lowest d on ties
        w = w + digit * p ** m
    return w % n


def _decode_phase(vals: np.ndarray, lay: _Layout, prior: np.ndarray | None = None) -> np.ndarray:
    n, steps = lay.n, lay.meta["steps"]
    b = vals.shape[-1]
    v = vals.reshape(lay.shape + (b,))                 # (T, 1 + J, B)
    ref = np.conj(v[:, 0, :])
    theta = np.zeros(b) if prior is None else np.asarray(prior, dtype=float)
    for j in range(1, len(steps)):
        d = steps[j]
        corr = (v[:, j, :] * ref).sum(axis=0)
        phi = np.angle(corr) / (2 * np.pi)
        if j == 1 and prior is None:
            theta = (phi / d) % 1.0
        else:
            theta = (phi + np.round(theta * d - phi)) / d
    return np.round(theta * n).astype(np.int64) % n


def _decode(vals: np.ndarray, lay: _Layout, cfg: SfftConfig,
            prior: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies and coefficient estimates for every band column of ``vals``.

    ``prior`` holds a starting frequency per band as a fraction of N; the phase
    recoverer needs it whenever its first lag exceeds 1.
    """
    if lay.kind == "digits":
        w = _decode_digits(vals, lay, cfg.decision)
    else:
        steps = lay.meta["steps"]
        w = _decode_phase(vals, lay, prior if steps[1] > 1 else None)
        # settle the last bin against its neighbours using every sample coherently
        cands = (w[None, :] + np.array([-1, 0, 1])[:, None]) % lay.n
        mags = np.stack([np.abs(_coherent(vals, lay.times, c, lay.n)) for c in cands])
        w = cands[np.argmax(mags, axis=0), np.arange(len(w))]
    alpha = _coherent(vals, lay.times, w, lay.n)
    return w, alpha


def bit_by_bit(sampler, cfg: SfftConfig, rng: np.random.Generator,
               radix: int | None = None):
    """Digit-by-digit recovery of a single tone; returns (w, alpha) or None.

    N must be a prime power p^e. Digit m (least significant first) is read
    from samples spaced N/p^(m+1) apart after removing the digits found so far;
    the winning digit maximises the energy of the p-point rotated aggregate,
    summed over T_bit random anchors (``decision="nearest_phase"`` sums the aggregates
    coherently before taking the magnitude, which for p = 2 is the plain
    |sum A+B| versus |sum A-B| test). The coefficient estimate is the average
    of all samples demodulated by the final frequency.
    """
    sampler = as_sampler(sampler)
    n = sampler.n
    pp = prime_power(n)
    if pp is None or (radix is not None and radix != pp[0]):
        raise InvalidConfig(f"N={n} is not a power of the radix {radix}")
    lay = _digit_layout(n, pp[0], pp[1], cfg.t_bit, rng)
    vals = sampler(lay.times)[:, None]
    w = _decode_digits(vals, lay, cfg.decision)
    alpha = _coherent(vals, lay.times, w, n)
    sampler.ops += vals.size * (pp[0] + 2)
    if abs(alpha[0]) > cfg.mu:
        return int(w[0]), complex(alpha[0])
    return None


def phase_refine(sampler, cfg: SfftConfig, rng: np.random.Generator):
    """1-sparse recovery for any N by successive phase refinement.

    Pair products at lags 1, 2, 4, ... estimate the tone's frequency with
    doubling precision; each stage resolves the wrap-around of the next using
    the previous estimate. Returns (w, alpha) or None when |alpha| <= mu.
    """
    sampler = as_sampler(sampler)
    lay = _phase_layout(sampler.n, cfg.t_bit, rng)
    vals = sampler(lay.times)[:, None]
    w, alpha = _decode(vals, lay, cfg)
    sampler.ops += vals.size * 8
    if abs(alpha[0]) > cfg.mu:
        return int(w[0]), complex(alpha[0])
    return None


def threshold_estimate(sampler, w: int, m: int, rng: np.random.Generator,
                       anchors=None) -> complex:
    """(1/m) sum_i x[t_i] exp(-2 pi i w t_i / N) over m random anchors (or the given ones)."""
    sampler = as_sampler(sampler)
    n = sampler.n
    t = np.asarray(anchors, dtype=np.int64) if anchors is not None else rng.integers(0, n, size=m)
    vals = sampler(t)
    return complex(np.mean(vals * _phase(-w * t, n)))


# ------------------------------------------------------------------ k-sparse

@dataclass
class SfftPlan:
    """Random choices of one SFFT run; reusing a plan reuses the sample positions."""

    perms: list
    layouts: list


def make_plan(n: int, cfg: SfftConfig, rng: np.random.Generator) -> SfftPlan:
    perms = [random_permutation(n, rng) for _ in range(cfg.n_perm)]
    layouts = [_make_layout(n, cfg, rng) for _ in range(cfg.n_perm)]
    return SfftPlan(perms, layouts)


def sfft(sampler, cfg: SfftConfig, rng: np.random.Generator | None = None,
         plan: SfftPlan | None = None, k: int | None = -1) -> list[tuple[int, complex]]:
    """Recover the significant tones of the sampled signal.

    Each permutation spreads the spectrum, splits it into n_I Gaussian bands,
    and runs the 1-sparse recoverer on every band from one shared set of
    sample times. A band reports a tone only if the tone lies closest to that
    band's centre and its coefficient clears mu. Tones seen in at least a
    third of the permutations are kept; the result holds at most k of them
    (all of them when k is None), strongest vote first.
    """
    sampler = as_sampler(sampler)
    k = cfg.k if k == -1 else k
    if k == 0 or cfg.k == 0:
        return []
    n = sampler.n
    if plan is None:
        plan = make_plan(n, cfg, rng)
    filt = gaussian_filter(cfg.k, n, cfg.delta, cfg.filter_scale)
    m = cfg.n_bands(n)
    centres = np.arange(m) * n / m
    votes: dict[int, list[complex]] = {}
    for perm, lay in zip(plan.perms, plan.layouts):
        view = PermutedSampler(sampler, perm)
        bands = filter_bank_apply(view, filt, m, lay.times, strict=False)   # (S, m)
        w, alpha = _decode(bands, lay, cfg, centres / n)
        sampler.ops += bands.size * 8
        off = (w - centres + n / 2) % n - n / 2
        nearest = np.round(w * m / n).astype(np.int64) % m
        gain = filt.response(off)
        own = nearest == np.arange(m)
        coef = np.where(gain > 0, alpha / np.where(gain > 0, gain, 1), 0)
        for j in np.flatnonzero(own & (np.abs(coef) > cfg.mu)):
            votes.setdefault(int(perm.backward(w[j])), []).append(complex(coef[j]))
    need = max(1, int(math.ceil(cfg.vote_fraction * cfg.n_perm)))
    found = []
    for w, vals in votes.items():
        if len(vals) < need:
            continue
        mags = np.abs(vals)
        med = float(np.median(mags))
        if med <= cfg.mu:
            continue
        pick = vals[int(np.argsort(mags)[len(mags) // 2])]
        found.append((len(vals), med, w, pick))
    found.sort(key=lambda r: (-r[0], -r[1], r[2]))
    if k is not None:
        found = found[:k]
    return [(w, a) for _, _, w, a in found]
