"""Continuous-time view of the digital channel.

A length-N digital signal becomes a bandlimited pulse train of duration T and
bandwidth W (N = T W) by truncated Shannon interpolation on a carrier f_c; the
receiver samples on the 1/W grid and periodises with period T. On-grid
delay-Doppler shifts then act on the samples exactly as H_{tau, omega}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidAnalogParams, ModulusMismatch, OffGrid
from .signals import apply_shift

ParamMismatch = ModulusMismatch

GRID_TOL = 1e-9


@dataclass(frozen=True)
class AnalogParams:
    n: int
    bandwidth: float = 1.0          # W, Hz
    carrier_multiple: int = 10      # f_c = carrier_multiple * W
    trunc: int = 64                 # sinc lobes kept on each side

    def __post_init__(self):
        if self.n < 1 or self.bandwidth <= 0:
            raise InvalidAnalogParams("need N >= 1 and W > 0")
        if self.trunc < 1:
            raise InvalidAnalogParams("truncation must keep at least one lobe")
        if self.carrier_multiple < 0:
            raise InvalidAnalogParams("carrier must be a non-negative multiple of W")

    @property
    def duration(self) -> float:
        return self.n / self.bandwidth

    @property
    def carrier(self) -> float:
        return self.carrier_multiple * self.bandwidth


@dataclass
class ContinuousSignal:
    evaluator: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]

    def __call__(self, t) -> np.ndarray:
        return self.evaluator(np.asarray(t, dtype=float))


def sinc_w(t, w: float) -> np.ndarray:
    """sin(pi W t) / (pi W t)."""
    return np.sinc(w * np.asarray(t, dtype=float))


def d_to_a(s: np.ndarray, p: AnalogParams, carrier: bool = True) -> ContinuousSignal:
    """s(t) = exp(2 pi i f_c t) sum_tau S[tau] sinc_W(t - tau/W), |W t - tau| <= trunc."""
    if len(s) != p.n:
        raise ParamMismatch(f"signal length {len(s)} but N = {p.n}")
    s = np.asarray(s, dtype=complex)
    w, m = p.bandwidth, p.trunc
    fc = p.carrier if carrier else 0.0

    def evaluate(t: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(t)
        x = t * w
        base = np.floor(x).astype(np.int64)
        offs = np.arange(-m, m + 2)
        tau = base[:, None] + offs[None, :]
        dist = x[:, None] - tau
        ok = (tau >= 0) & (tau < p.n) & (np.abs(dist) <= m)
        vals = np.where(ok, s[np.clip(tau, 0, p.n - 1)] * np.sinc(dist), 0)
        return np.exp(2j * np.pi * fc * t) * vals.sum(axis=1)

    return ContinuousSignal(evaluate, (-m / w, p.duration + m / w))


def a_to_d(r: ContinuousSignal, p: AnalogParams) -> np.ndarray:
    """R[tau] = sum_m r(tau/W + m T), over the m that land inside r's support."""
    lo, hi = r.support
    T, w = p.duration, p.bandwidth
    out = np.zeros(p.n, dtype=complex)
    base = np.arange(p.n) / w
    m_lo = int(np.floor((lo - base.max()) / T)) - 1
    m_hi = int(np.ceil((hi - base.min()) / T)) + 1
    for mm in range(m_lo, m_hi + 1):
        t = base + mm * T
        inside = (t >= lo) & (t <= hi)
        if inside.any():
            out[inside] += r(t[inside])
    return out


def time_frequency_shift(r: ContinuousSignal, t0: float, f0: float) -> ContinuousSignal:
    """h_{t0,f0} r (t) = exp(2 pi i f0 t) r(t - t0)."""
    lo, hi = r.support
    return ContinuousSignal(lambda t: np.exp(2j * np.pi * f0 * t) * r(t - t0),
                            (lo + t0, hi + t0))


def grid_image(t0: float, f0: float, p: AnalogParams) -> tuple[int, int]:
    """Map an on-grid continuous shift to its discrete (tau0, omega0); OffGrid otherwise."""
    T, w = p.duration, p.bandwidth
    jt, jf = t0 * w, f0 * T
    if abs(jt - round(jt)) > GRID_TOL or abs(jf - round(jf)) > GRID_TOL:
        raise OffGrid(f"({t0}, {f0}) is not on the (1/W, 1/T) lattice")
    if not (-GRID_TOL <= t0 <= T + GRID_TOL) or abs(f0) > w / 2 + GRID_TOL:
        raise OffGrid(f"({t0}, {f0}) outside [0, T] x [-W/2, W/2]")
    return int(round(jt)) % p.n, int(round(jf)) % p.n


def verify_shift_intertwining(s: np.ndarray, shift: tuple[float, float], p: AnalogParams) -> float:
    """|| A-to-D(h_{t0,f0}(D-to-A(S))) - H_{tau0,omega0} S ||."""
    t0, f0 = shift
    tau0, om0 = grid_image(t0, f0, p)
    r = time_frequency_shift(d_to_a(s, p), t0, f0)
    return float(np.linalg.norm(a_to_d(r, p) - apply_shift(tau0, om0, s)))


@dataclass
class NarrowbandResult:
    residual: float
    pointwise: np.ndarray
    bound_shape: np.ndarray      # |f0| t W / f_c at each grid point


def narrowband_residual(baseband: ContinuousSignal, a0: float, fc: float, w: float,
                        t_grid) -> NarrowbandResult:
    """Compare a Doppler time-scale with its frequency-shift approximation.

    s(t) = exp(2 pi i f_c t) baseband(t); returns max |s(a0 t) - exp(2 pi i f0 t) s(t)|
    with f0 = f_c (a0 - 1). The sign of f0 follows a0 - 1 so that compressions
    and dilations are both covered.
    """
    t = np.asarray(t_grid, dtype=float)
    f0 = fc * (a0 - 1.0)
    scaled = np.exp(2j * np.pi * fc * a0 * t) * baseband(a0 * t)
    approx = np.exp(2j * np.pi * f0 * t) * np.exp(2j * np.pi * fc * t) * baseband(t)
    diff = np.abs(scaled - approx)
    shape = abs(f0) * np.abs(t) * w / fc if fc else np.full_like(t, np.inf)
    return NarrowbandResult(float(diff.max(initial=0.0)), diff, shape)
