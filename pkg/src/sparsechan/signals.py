"""Signals on Z_N: time-frequency shifts, chirps, the unitary DFT and ambiguity functions.

Signals are 1-D complex numpy arrays; the modulus N is their length.
Inner products are linear in the first argument: <x, y> = sum x * conj(y).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ModulusMismatch, SparseChanError
from .zn import Line, Point2, half

ORACLE_CAP = 128


class OracleTooLarge(SparseChanError, ValueError):
    pass


def _check(*signals) -> int:
    n = len(signals[0])
    for s in signals[1:]:
        if len(s) != n:
            raise ModulusMismatch(f"lengths {n} and {len(s)}")
    return n


def inner(x, y) -> complex:
    _check(x, y)
    return complex(np.vdot(y, x))


def delta(tau: int, n: int) -> np.ndarray:
    s = np.zeros(n, dtype=complex)
    s[tau % n] = 1.0
    return s


def exponential(omega: int, n: int) -> np.ndarray:
    """e_omega[t] = exp(2 pi i omega t / N) / sqrt(N)."""
    t = np.arange(n)
    return np.exp(2j * np.pi * ((omega * t) % n) / n) / np.sqrt(n)


def phase(k, n: int) -> np.ndarray:
    """exp(2 pi i k / N) for integer k, reduced mod N first for accuracy."""
    return np.exp(2j * np.pi * (np.mod(k, n) / n))


def _half_phase(k, n: int) -> np.ndarray:
    """exp(pi i k / N) for integer k, reduced mod 2N first."""
    return np.exp(1j * np.pi * (np.mod(k, 2 * n) / n))


def basis_signal(line: Line, index: int) -> np.ndarray:
    """The chirp on ``line`` with index ``index``.

    Finite slope a: (1/sqrt N) exp(2 pi i (a/2 t^2 + index t) / N), where a/2
    uses the inverse of 2 mod N. Infinite slope: the delta at ``index``.
    """
    n = line.modulus
    if line.is_infinite:
        return delta(index, n)
    t = np.arange(n, dtype=np.int64)
    a = line.slope
    if a == 0:
        return exponential(index, n)
    h = half(n)
    k = ((h * a) % n * ((t * t) % n) + index * t) % n
    return phase(k, n) / np.sqrt(n)


def apply_shift(tau: int, omega: int, s: np.ndarray) -> np.ndarray:
    """H_{tau,omega} s [t] = exp(2 pi i omega t / N) s[t - tau]."""
    n = len(s)
    t = np.arange(n, dtype=np.int64)
    return phase(omega * t, n) * np.roll(s, tau % n)


def dft(s: np.ndarray) -> np.ndarray:
    """Unitary DFT, F s[w] = <s, e_w>."""
    return sfft.fft(s, norm="ortho")


def idft(s: np.ndarray) -> np.ndarray:
    return sfft.ifft(s, norm="ortho")


def discrete_gaussian(n: int, sigma: float = 1.0, terms: int = 6) -> np.ndarray:
    """Periodised Gaussian G[t] = sum_m exp(-pi (sigma t / sqrt N + m sqrt N)^2)."""
    t = np.arange(n)
    m = np.arange(-terms, terms + 1)[:, None]
    return np.exp(-np.pi * (sigma * t[None, :] / np.sqrt(n) + m * np.sqrt(n)) ** 2).sum(axis=0)


def ambiguity_point(s: np.ndarray, r: np.ndarray, at) -> complex:
    """A(s, r)[tau, omega] = <H_{tau,omega} s, r>."""
    _check(s, r)
    return inner(apply_shift(at[0], at[1], s), r)


@dataclass
class AmbiguityLineProfile:
    base_line: Line
    offset: Point2
    values: np.ndarray

    def point(self, t: int) -> Point2:
        return self.base_line.point_at(t, self.offset)

    def peaks(self, k: int) -> list[tuple[Point2, complex]]:
        """The k largest magnitudes, ties broken by lowest parameter."""
        return [(self.point(int(t)), complex(self.values[t]))
                for t in top_k_indices(np.abs(self.values), k)]


def top_k_indices(mag: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ordered by magnitude then index."""
    if k <= 0:
        return np.zeros(0, dtype=int)
    order = np.lexsort((np.arange(len(mag)), -mag))
    return order[:k]


def _linear_correlation(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """c[t] = sum_u f[u] g[u - t + N - 1] for t in [0, N), with len(g) = 2N - 1."""
    n = len(f)
    size = sfft.next_fast_len(len(g) + n - 1)
    conv = sfft.ifft(sfft.fft(g, size) * sfft.fft(f[::-1], size))
    out = conv[n - 1:2 * n - 1]          # out[j] = sum_u f[u] g[u + j]
    return out[::-1]


def ambiguity_on_line(s: np.ndarray, r: np.ndarray, line: Line,
                      offset=(0, 0)) -> AmbiguityLineProfile:
    """A(s, r) at every point offset + t * generator(line), t = 0..N-1, in O(N log N).

    The omega axis is a single FFT. For a finite slope a the cross term
    exp(2 pi i a t u / N) is split as exp(pi i a (t^2 + u^2 - (u - t)^2) / N),
    which turns the sum into a linear correlation against a chirp kernel; this
    works for every N, even or odd.
    """
    n = _check(s, r)
    if line.modulus != n:
        raise ModulusMismatch(f"line mod {line.modulus}, signals of length {n}")
    tau0, om0 = int(offset[0]) % n, int(offset[1]) % n
    u = np.arange(n, dtype=np.int64)
    if line.is_infinite:
        prod = phase(om0 * u, n) * np.roll(s, tau0) * np.conj(r)
        values = n * sfft.ifft(prod)
    else:
        a = line.slope
        # A[t] = sum_u e(om0 u + a t u) s[u - tau0 - t] conj(r[u])
        f = phase(om0 * u, n) * _half_phase(a * ((u * u) % (2 * n)), n) * np.conj(r)
        d = np.arange(-(n - 1), n, dtype=np.int64)
        g = s[(d - tau0) % n] * np.conj(_half_phase(a * ((d * d) % (2 * n)), n))
        c = _linear_correlation(f, g)
        values = _half_phase(a * ((u * u) % (2 * n)), n) * c
    return AmbiguityLineProfile(line, Point2(tau0, om0), values)


def ambiguity_full_oracle(s: np.ndarray, r: np.ndarray, cap: int = ORACLE_CAP) -> np.ndarray:
    """Brute-force N x N table of A(s, r)[tau, omega] from explicit inner products."""
    n = _check(s, r)
    if n > cap:
        raise OracleTooLarge(f"N={n} exceeds oracle cap {cap}")
    u = np.arange(n)
    shifted = np.stack([np.roll(s, tau) for tau in range(n)])      # [tau, u] = s[u - tau]
    prods = shifted * np.conj(r)[None, :]
    kernel = np.exp(2j * np.pi * np.outer(u, u) / n)               # [u, omega]
    return prods @ kernel
