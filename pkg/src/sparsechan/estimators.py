"""Delay-Doppler channel estimators.

* pseudorandom: matched filter over the whole plane, O(N^2 log N).
* incidence: three chirps on transversal lines, ambiguity on one line each,
  shifts found as triple intersections of ridges, O(N log N).
* cross: incidence plus agreement of two ambiguity values at each candidate.
* sce: the incidence idea with every line evaluation replaced by a sparse FFT
  of the chirp-demodulated received signal, so only part of R is read.

A target at p with coefficient alpha puts a ridge p + X into A(S_X, R) for a
chirp on line X. A ridge is recorded by the point where it crosses the line
the ambiguity was evaluated on; two ridge families meet in single points.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft_

from .channel import TargetSet
from .errors import InvalidConfig, SameLine, SparseChanError
from .sfft import DerivedSampler, Sampler, SfftConfig, as_sampler, make_plan, sfft
from .signals import ambiguity_on_line, ambiguity_point, basis_signal, top_k_indices
from .zn import Line, Point2, are_transversal, double_incidence, half, triple_incidence


class WrongProbeKind(SparseChanError, ValueError):
    pass


class NonTransversalProbe(SparseChanError, ValueError):
    pass


# ------------------------------------------------------------------- probes

@dataclass
class ProbeSignal:
    """Transmitted signal: a normalised sum of chirps, or a pseudorandom sequence."""

    n: int
    components: list[tuple[Line, int]] = field(default_factory=list)
    seed: int | None = None
    signal: np.ndarray = field(default=None, repr=False)

    @classmethod
    def chirps(cls, lines, indices=None) -> "ProbeSignal":
        n = lines[0].modulus
        indices = indices or [0] * len(lines)
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                if not are_transversal(lines[i], lines[j]):
                    raise NonTransversalProbe(f"{lines[i]} and {lines[j]} are not transversal")
        comps = [(ln, int(b) % n) for ln, b in zip(lines, indices)]
        sig = sum(basis_signal(ln, b) for ln, b in comps) / math.sqrt(len(comps))
        return cls(n, comps, None, sig)

    @classmethod
    def pseudorandom(cls, n: int, seed: int) -> "ProbeSignal":
        rng = np.random.default_rng(seed)
        sig = np.exp(2j * np.pi * rng.random(n)) / math.sqrt(n)
        return cls(n, [], seed, sig)

    @property
    def is_pseudorandom(self) -> bool:
        return not self.components

    @property
    def weight(self) -> float:
        """Amplitude of each chirp component in the unit-norm probe."""
        return 1 / math.sqrt(len(self.components))

    def chirp(self, i: int) -> np.ndarray:
        ln, b = self.components[i]
        return basis_signal(ln, b)


def chirp_base_values(line: Line, idx) -> np.ndarray:
    """Index-0 chirp on a finite-slope line, evaluated only at ``idx``."""
    n = line.modulus
    t = np.asarray(idx, dtype=np.int64) % n
    k = ((half(n) * line.slope) % n) * ((t * t) % n) % n
    return np.exp(2j * np.pi * k / n) / math.sqrt(n)


# ------------------------------------------------------------------ reports

@dataclass
class EstimationReport:
    method: str
    detected: list[tuple[Point2, complex]]
    samples: int = 0
    ops: int = 0
    wall_time: float = 0.0
    truth: TargetSet | None = None
    extra: dict = field(default_factory=dict)

    @property
    def shifts(self) -> set[Point2]:
        return {p for p, _ in self.detected}

    def score(self, truth: TargetSet | None = None) -> tuple[int, int, int, int]:
        """(true shifts found, true shifts, detections matching nothing, detections)."""
        truth = truth or self.truth
        true = {Point2(*p) for p in truth.shifts}
        det = self.shifts
        return len(det & true), len(true), len(det - true), len(det)


def _fft_ops(n: int) -> int:
    return n * max(1, math.ceil(math.log2(n)))


def _select(values: np.ndarray, k: int | None, thresh: float | None) -> np.ndarray:
    mag = np.abs(values)
    if k is None:
        if thresh is None:
            raise InvalidConfig("unknown-k mode needs a threshold")
        idx = np.flatnonzero(mag > thresh)
        return idx[np.lexsort((idx, -mag[idx]))]
    return top_k_indices(mag, k)


# -------------------------------------------------------------- pseudorandom

def pseudorandom_estimate(r: np.ndarray, probe: ProbeSignal, k: int | None,
                          mu: float | None = None, chunk: int = 256) -> EstimationReport:
    """The k largest |A(S, R)| over the plane, one FFT per delay row."""
    start = time.perf_counter()
    if not probe.is_pseudorandom:
        raise WrongProbeKind("pseudorandom_estimate needs a pseudorandom probe")
    n = probe.n
    if k == 0:
        return EstimationReport("pseudorandom", [], n, 0, time.perf_counter() - start)
    s = probe.signal
    cr = np.conj(r)
    u = np.arange(n)
    table = np.empty((n, n), dtype=complex)
    for lo in range(0, n, chunk):
        taus = np.arange(lo, min(n, lo + chunk))
        rows = s[(u[None, :] - taus[:, None]) % n] * cr[None, :]
        table[taus] = n * sfft_.ifft(rows, axis=1)      # row tau: A[tau, omega] for all omega
    idx = _select(table.ravel(), k, mu)
    det = [(Point2(int(i) // n, int(i) % n), complex(np.conj(table.ravel()[i]))) for i in idx]
    ops = n * (_fft_ops(n) + 2 * n)
    return EstimationReport("pseudorandom", det, n, ops, time.perf_counter() - start)


# ----------------------------------------------------------------- incidence

def _line_peaks(s, r, chirp_line: Line, eval_line: Line, k, mu, weight):
    prof = ambiguity_on_line(s, r, eval_line)
    idx = _select(prof.values / weight, k, mu)
    return [prof.point(int(t)) for t in idx], prof


def incidence_estimate(r: np.ndarray, probe: ProbeSignal, k: int | None,
                       use_cross: bool = False, cross_tol: float | None = None,
                       mu: float | None = None) -> EstimationReport:
    """Triple incidence of ridges from A(S_L,R) on M, A(S_M,R) on L and A(S_K,R) on M.

    Probe components are ordered (K, L, M).
    """
    start = time.perf_counter()
    if len(probe.components) != 3:
        raise NonTransversalProbe("incidence needs a probe of three chirps")
    n = probe.n
    method = "cross" if use_cross else "incidence"
    if k == 0:
        return EstimationReport(method, [], n, 0, time.perf_counter() - start)
    (K, _), (L, _), (M, _) = probe.components
    sK, sL, sM = (probe.chirp(i) for i in range(3))
    w = probe.weight
    ridges_L, _ = _line_peaks(sL, r, L, M, k, mu, w)
    ridges_M, _ = _line_peaks(sM, r, M, L, k, mu, w)
    ridges_K, _ = _line_peaks(sK, r, K, M, k, mu, w)
    i_lm = double_incidence(ridges_L, L, ridges_M, M)
    i_mk = double_incidence(ridges_M, M, ridges_K, K)
    cands = sorted(triple_incidence(i_lm, i_mk))
    ops = 3 * (3 * _fft_ops(3 * n) + 6 * n) + len(ridges_L) * len(ridges_M) + len(ridges_M) * len(ridges_K)
    if use_cross:
        tol = 3 / math.sqrt(n) if cross_tol is None else cross_tol
        kept = []
        for p in cands:
            a_l = ambiguity_point(sL, r, p)
            a_m = ambiguity_point(sM, r, p)
            ops += 4 * n
            if abs(a_l - a_m) <= tol:
                kept.append(p)
        cands = kept
    det = []
    for p in cands:
        det.append((p, complex(np.conj(ambiguity_point(sL, r, p))) / w))
        ops += 2 * n
    det.sort(key=lambda d: (-abs(d[1]), d[0]))
    if k is not None:
        det = det[:k]
    return EstimationReport(method, det, n, ops, time.perf_counter() - start,
                            extra={"double_incidence": len(i_lm)})


# --------------------------------------------------------- sparse-FFT route

def ridge_frequency(p, chirp_line: Line, b: int = 0) -> int:
    """Tone index that the ridge through p shows in N conj(S_X) R: omega - a tau + b."""
    n = chirp_line.modulus
    return int((p[1] - chirp_line.slope * p[0] + b) % n)


def ridge_point(freq: int, chirp_line: Line, b: int, target_line: Line) -> Point2:
    """Where the ridge with tone index ``freq`` crosses ``target_line``."""
    n = chirp_line.modulus
    c = (freq - b) % n
    if target_line.is_infinite:
        return Point2(0, c)
    diff = (target_line.slope - chirp_line.slope) % n
    tau = (c * pow(diff, -1, n)) % n
    return Point2(tau, (target_line.slope * tau) % n)


def _check_lines(chirp_line: Line, target_line: Line):
    if chirp_line == target_line:
        raise SameLine("chirp line and target line coincide")
    if chirp_line.is_infinite:
        raise InvalidConfig("a delta chirp has no sparse-FFT reduction")
    if not are_transversal(chirp_line, target_line):
        raise NonTransversalProbe("chirp and target lines are not transversal")


def ambiguity_peaks_via_sfft(r, chirp: tuple[Line, int], target_line: Line, cfg: SfftConfig,
                             rng: np.random.Generator | None = None, weight: float = 1.0,
                             plan=None, k: int | None = -1,
                             demod_line: Line | None = None) -> list[tuple[Point2, float]]:
    """Peaks of |A(S_X^b, R)| on a line through the origin, from a sparse FFT.

    The ambiguity along the ridge direction of X is constant, and
    |A(S_X^b, R)[tau, omega]| = sqrt(N) |F(conj(S_X^0) R)[omega - a tau + b]|,
    so each strong tone of N conj(S_X^0) R / weight is one ridge; it is mapped
    to the point where the ridge crosses ``target_line``. Magnitudes are the
    tone amplitudes, i.e. |A| / weight at the peak.

    ``demod_line`` overrides the chirp used to demodulate R while keeping the
    index mapping of ``chirp``.
    """
    line, b = chirp
    _check_lines(line, target_line)
    sampler = as_sampler(r)
    n = sampler.n
    dline = demod_line or line
    scale = n / weight
    prod = DerivedSampler(sampler, lambda idx: scale * np.conj(chirp_base_values(dline, idx)))
    found = sfft(prod, cfg, rng, plan=plan, k=k)
    return [(ridge_point(f, line, b, target_line), float(abs(a))) for f, a in found]


def sce_estimate(r_access, probe: ProbeSignal, k: int | None, cfg: SfftConfig,
                 rng: np.random.Generator, step6_samples: str = "M") -> EstimationReport:
    """Sparse channel estimation from a fraction of the received samples.

    Probe components are ordered (K, L, M). Peaks of A(S_K,R) on L, A(S_L,R)
    on K and A(S_M,R) on L give three ridge families; shifts are the points
    where K-ridges meet both an L-ridge and an M-ridge. All three sparse FFTs
    share one plan, so they read R at the same positions.

    ``step6_samples="K"`` demodulates the third search with the K chirp while
    still mapping with the M line.
    """
    start = time.perf_counter()
    if step6_samples not in ("K", "M"):
        raise InvalidConfig("step6_samples must be 'K' or 'M'")
    if len(probe.components) != 3:
        raise NonTransversalProbe("SCE needs a probe of three chirps")
    sampler = as_sampler(r_access)
    n = sampler.n
    if k == 0:
        return EstimationReport("sce", [], 0, 0, time.perf_counter() - start)
    (K, bK), (L, bL), (M, bM) = probe.components
    w = probe.weight
    plan = make_plan(n, cfg, rng)
    peaks_k = ambiguity_peaks_via_sfft(sampler, (K, bK), L, cfg, weight=w, plan=plan, k=k)
    peaks_l = ambiguity_peaks_via_sfft(sampler, (L, bL), K, cfg, weight=w, plan=plan, k=k)
    peaks_m = ambiguity_peaks_via_sfft(sampler, (M, bM), L, cfg, weight=w, plan=plan, k=k,
                                       demod_line=K if step6_samples == "K" else None)
    kappa = [p for p, _ in peaks_k]
    i_kl = double_incidence(kappa, K, [p for p, _ in peaks_l], L)
    i_km = double_incidence(kappa, K, [p for p, _ in peaks_m], M)
    hits = triple_incidence(i_kl, i_km)
    sampler.ops += len(kappa) * (len(peaks_l) + len(peaks_m)) * 8
    # coefficient magnitude: the K-ridge amplitude through each detected point
    mag = {}
    for (q, a) in peaks_k:
        mag[q] = a
    det = []
    for p in hits:
        q = ridge_point(ridge_frequency(p, K, bK), K, bK, L)
        det.append((p, complex(mag.get(q, 0.0))))
    det.sort(key=lambda d: (-abs(d[1]), d[0]))
    if k is not None:
        det = det[:k]
    return EstimationReport("sce", det, sampler.samples, sampler.ops,
                            time.perf_counter() - start,
                            extra={"ridges": (len(peaks_k), len(peaks_l), len(peaks_m))})


def sce_config(n: int, k: int, snr_db: float, eps: float = 0.5, kappa: float = 0.5,
               energy: float = 1.0, n_lines: int = 3, fail: float = 0.05,
               **overrides) -> SfftConfig:
    """Sparse-FFT settings for one SCE line search under the channel assumptions.

    In N conj(S_X) R / w a target is a tone of amplitude |alpha| >= eps sqrt(A/k);
    the other chirps add flat-spectrum interference of power (n_lines - 1) A
    and the noise adds n_lines sigma^2. A band filter keeps the fraction
    sum(g^2) of that power, which fixes the per-band SNR; repetitions per
    digit are ln(log2 N / fail) / SNR_band and permutations ln(k N) / 2.
    """
    from .sfft import gaussian_filter

    sigma_sq = 0.0 if np.isinf(snr_db) else energy / 10 ** (snr_db / 10)
    mu = SfftConfig.threshold(kappa, eps, energy, k)
    filt = gaussian_filter(k, n)
    keep = float(np.sum(filt.normalized_taps ** 2))
    interference = (n_lines - 1) * energy + n_lines * sigma_sq
    if interference == 0:
        t_bit = 1
    else:
        snr_band = (eps * eps * energy / k) / (interference * keep)
        t_bit = max(1, math.ceil(math.log(math.log2(n) / fail) / snr_band))
    n_perm = max(3, math.ceil(math.log(k * n) / 2))
    params = dict(k=k, mu=mu, kappa=kappa, t_bit=t_bit, n_perm=n_perm)
    params.update(overrides)
    return SfftConfig(**params)
