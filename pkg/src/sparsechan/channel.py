"""Sparse delay-Doppler channel simulator.

R = sum_j alpha_j H_{tau_j, omega_j} S + noise, with coefficients drawn
uniformly from the set of vectors of energy A whose nonzero entries all have
magnitude at least eps * sqrt(A / k).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, InvalidEnergy, InvalidEpsilon, InvalidSparsity, ModulusMismatch
from .signals import apply_shift
from .zn import Point2


@dataclass
class TargetSet:
    shifts: list[Point2]
    coeffs: np.ndarray
    energy: float
    epsilon: float
    modulus: int

    @property
    def k(self) -> int:
        return len(self.shifts)

    def union(self, other: "TargetSet") -> "TargetSet":
        return TargetSet(list(self.shifts) + list(other.shifts),
                         np.concatenate([self.coeffs, other.coeffs]),
                         self.energy + other.energy, min(self.epsilon, other.epsilon),
                         self.modulus)


@dataclass
class NoiseSpec:
    sigma_sq: float
    kind: str = "gaussian"      # or "uniform" (bounded, still subgaussian)

    def snr(self, energy: float) -> float:
        return np.inf if self.sigma_sq == 0 else energy / self.sigma_sq

    @classmethod
    def from_snr_db(cls, snr_db: float, energy: float = 1.0, kind: str = "gaussian"):
        return cls(energy / 10 ** (snr_db / 10), kind)


def sample_coefficients(k: int, energy: float, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from {x in C^k : |x|^2 = A, min |x_j| >= eps sqrt(A/k)}.

    For a uniform point on the complex sphere the squared moduli are uniform on
    the simplex and the phases are independent and uniform. Conditioning the
    simplex on every coordinate being >= c gives the simplex shrunk by
    (1 - k c) and shifted by c, so the draw is exact without rejection.
    """
    if k < 1:
        raise InvalidSparsity("k must be >= 1")
    if energy <= 0:
        raise InvalidEnergy("energy must be positive")
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {eps}")
    c = eps * eps / k
    w = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    mod_sq = c + (1.0 - k * c) * w
    ph = rng.uniform(0, 2 * np.pi, size=k)
    return np.sqrt(energy * mod_sq) * np.exp(1j * ph)


def sample_coefficients_rejection(k: int, energy: float, eps: float,
                                  rng: np.random.Generator, max_tries: int = 100000) -> np.ndarray:
    """Reference sampler: uniform on the sphere, rejected until the floor holds."""
    floor = eps * np.sqrt(energy / k)
    for _ in range(max_tries):
        z = rng.normal(size=k) + 1j * rng.normal(size=k)
        x = np.sqrt(energy) * z / np.linalg.norm(z)
        if np.min(np.abs(x)) >= floor:
            return x
    raise InvalidEpsilon("rejection sampler did not terminate")


def sample_shifts(k: int, n: int, rng: np.random.Generator) -> list[Point2]:
    """k distinct points of Z_N x Z_N, uniform without replacement."""
    if k > n * n:
        raise InvalidSparsity("more targets than plane points")
    chosen: list[int] = []
    seen = set()
    while len(chosen) < k:
        for v in rng.integers(0, n * n, size=k - len(chosen)):
            v = int(v)
            if v not in seen:
                seen.add(v)
                chosen.append(v)
    return [Point2(v // n, v % n) for v in chosen]


def sample_targets(k: int, energy: float, eps: float, n: int,
                   rng: np.random.Generator) -> TargetSet:
    coeffs = sample_coefficients(k, energy, eps, rng)
    shifts = sample_shifts(k, n, rng)
    return TargetSet(shifts, coeffs, float(energy), float(eps), n)


def apply_channel(targets: TargetSet, s: np.ndarray) -> np.ndarray:
    """Noiseless channel output sum_j alpha_j H_{p_j} s."""
    if len(s) != targets.modulus:
        raise ModulusMismatch(f"signal length {len(s)} vs modulus {targets.modulus}")
    out = np.zeros(len(s), dtype=complex)
    for p, a in zip(targets.shifts, targets.coeffs):
        out += a * apply_shift(p[0], p[1], s)
    return out


def add_noise(s: np.ndarray, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean circular noise with per-sample variance sigma^2 / N."""
    n = len(s)
    if spec.sigma_sq == 0:
        return np.array(s, dtype=complex, copy=True)
    var = spec.sigma_sq / n
    if spec.kind == "gaussian":
        sd = np.sqrt(var / 2)
        noise = rng.normal(0, sd, n) + 1j * rng.normal(0, sd, n)
    elif spec.kind == "uniform":
        # uniform in [-b, b] per component, b chosen so E|noise|^2 = var
        b = np.sqrt(1.5 * var)
        noise = rng.uniform(-b, b, n) + 1j * rng.uniform(-b, b, n)
    else:
        raise InvalidConfig(f"unknown noise kind {spec.kind!r}")
    return s + noise
