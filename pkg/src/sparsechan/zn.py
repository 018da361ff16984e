"""Arithmetic on Z_N and lines through the origin of the Z_N x Z_N plane.

Points of the plane are plain ``(tau, omega)`` tuples of ints reduced mod N.
A line through the origin is described by its slope: a finite slope ``a``
spans ``{(t, a t)}``, the infinite slope spans the omega axis ``{(0, w)}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InsufficientSlopes, ModulusMismatch, NotInvertible


@dataclass(frozen=True)
class ZMod:
    """An element of Z_N."""

    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "value", int(self.value) % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, ZMod):
            if other.modulus != self.modulus:
                raise ModulusMismatch(f"{self.modulus} != {other.modulus}")
            return other.value
        return int(other)

    def __add__(self, other):
        return ZMod(self.value + self._coerce(other), self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return ZMod(self.value - self._coerce(other), self.modulus)

    def __rsub__(self, other):
        return ZMod(self._coerce(other) - self.value, self.modulus)

    def __mul__(self, other):
        return ZMod(self.value * self._coerce(other), self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return ZMod(-self.value, self.modulus)

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def inverse(self) -> "ZMod":
        return mod_inverse(self)


class Point2(NamedTuple):
    tau: int
    omega: int


def point(tau, omega, n: int) -> Point2:
    return Point2(int(tau) % n, int(omega) % n)


def mod_inverse(a, n: int | None = None) -> ZMod:
    """Multiplicative inverse of ``a`` in Z_N.

    ``a`` is either a :class:`ZMod` or an int together with ``n``.
    Raises NotInvertible when gcd(a, N) > 1.
    """
    if not isinstance(a, ZMod):
        if n is None:
            raise TypeError("modulus required for a plain integer")
        a = ZMod(a, n)
    if a.modulus == 1:
        return ZMod(0, 1)
    try:
        return ZMod(pow(a.value, -1, a.modulus), a.modulus)
    except ValueError:
        raise NotInvertible(f"{a.value} has no inverse mod {a.modulus}") from None


def half(n: int) -> int:
    """The inverse of 2 mod an odd N, i.e. (N+1)/2."""
    from .errors import EvenModulus

    if n % 2 == 0:
        raise EvenModulus(f"2 is not invertible mod {n}")
    return (n + 1) // 2


@dataclass(frozen=True)
class Line:
    """A generic line through the origin: ``slope`` is an int or None (omega axis)."""

    modulus: int
    slope: int | None

    def __post_init__(self):
        if self.slope is not None:
            object.__setattr__(self, "slope", int(self.slope) % self.modulus)

    @classmethod
    def finite(cls, a: int, n: int) -> "Line":
        return cls(n, a)

    @classmethod
    def infinite(cls, n: int) -> "Line":
        return cls(n, None)

    @property
    def is_infinite(self) -> bool:
        return self.slope is None

    @property
    def generator(self) -> Point2:
        if self.slope is None:
            return Point2(0, 1)
        return Point2(1, self.slope)

    def point_at(self, t: int, offset: Point2 = Point2(0, 0)) -> Point2:
        """The t-th point of ``offset + line``."""
        g = self.generator
        n = self.modulus
        return Point2((offset[0] + t * g[0]) % n, (offset[1] + t * g[1]) % n)

    def points(self, offset: Point2 = Point2(0, 0)) -> np.ndarray:
        """All N points of ``offset + line`` as an (N, 2) int array ordered by parameter."""
        n = self.modulus
        t = np.arange(n)
        g = self.generator
        return np.stack([(offset[0] + t * g[0]) % n, (offset[1] + t * g[1]) % n], axis=1)

    def span(self) -> set[Point2]:
        return line_span(self.generator, self.modulus)

    def parameter_of(self, p: Point2, offset: Point2 = Point2(0, 0)) -> int | None:
        """Inverse of :meth:`point_at`; None when ``p`` is not on the shifted line."""
        n = self.modulus
        dt, dw = (p[0] - offset[0]) % n, (p[1] - offset[1]) % n
        if self.slope is None:
            return dw if dt == 0 else None
        return dt if (self.slope * dt - dw) % n == 0 else None


def line_span(generator, n: int) -> set[Point2]:
    """The Z_N-span of ``generator``; it has N/gcd(a, b, N) points."""
    a, b = int(generator[0]) % n, int(generator[1]) % n
    return {Point2((t * a) % n, (t * b) % n) for t in range(n)}


def _check_same_modulus(*lines: Line) -> int:
    n = lines[0].modulus
    for ln in lines[1:]:
        if ln.modulus != n:
            raise ModulusMismatch(f"{n} != {ln.modulus}")
    return n


def are_transversal(l1: Line, l2: Line) -> bool:
    """True iff the two lines meet only at the origin."""
    n = _check_same_modulus(l1, l2)
    (a1, b1), (a2, b2) = l1.generator, l2.generator
    det = (a1 * b2 - b1 * a2) % n
    if gcd(det, n) == 1:
        return True
    # Non-invertible determinant: decide by enumerating the (small) common part.
    return l1.span() & l2.span() == {Point2(0, 0)}


def all_slopes(n: int, include_infinite: bool = True) -> list[int | None]:
    slopes: list[int | None] = list(range(n))
    if include_infinite:
        slopes.append(None)
    return slopes


def random_transversal_lines(count: int, n: int, rng: np.random.Generator,
                             include_infinite: bool = True) -> list[Line]:
    """Draw ``count`` pairwise-transversal lines with distinct slopes, uniformly.

    Slopes come from Z_N plus (optionally) the infinite slope. For prime N any
    set of distinct slopes is pairwise transversal; for composite N draws are
    rejected until the set is pairwise transversal.
    """
    slopes = all_slopes(n, include_infinite)
    if count > len(slopes):
        raise InsufficientSlopes(f"{count} lines requested, {len(slopes)} slopes exist")
    for _ in range(1000):
        idx = rng.choice(len(slopes), size=count, replace=False)
        lines = [Line(n, slopes[i]) for i in idx]
        if all(are_transversal(lines[i], lines[j])
               for i in range(count) for j in range(i + 1, count)):
            return lines
    raise InsufficientSlopes(f"could not find {count} pairwise transversal lines mod {n}")


def intersect_shifted(p: Point2, l1: Line, q: Point2, l2: Line) -> Point2 | None:
    """The unique point of (p + l1) ∩ (q + l2) for transversal lines over a prime-like N.

    Returns None when the intersection is not a single point (solving needs an
    invertible determinant).
    """
    n = _check_same_modulus(l1, l2)
    (a1, b1), (a2, b2) = l1.generator, l2.generator
    # p + s*g1 = q + t*g2  ->  s*g1 - t*g2 = q - p
    det = (a1 * (-b2) - (-a2) * b1) % n
    if gcd(det, n) != 1:
        return None
    dx, dy = (q[0] - p[0]) % n, (q[1] - p[1]) % n
    inv = pow(det, -1, n)
    s = ((dx * (-b2) - (-a2) * dy) * inv) % n
    return Point2((p[0] + s * a1) % n, (p[1] + s * b1) % n)


def double_incidence(ridges_a: Iterable[Point2], line_a: Line,
                     ridges_b: Iterable[Point2], line_b: Line) -> list[Point2]:
    """Points where a shifted copy of ``line_a`` meets a shifted copy of ``line_b``.

    Each ridge is given by one of its points; every pair contributes its single
    intersection point.
    """
    out = []
    ridges_b = list(ridges_b)
    for p in ridges_a:
        for q in ridges_b:
            x = intersect_shifted(p, line_a, q, line_b)
            if x is not None:
                out.append(x)
    return out


def triple_incidence(cand_a: Iterable[Point2], cand_b: Iterable[Point2]) -> set[Point2]:
    """Set intersection of two candidate lists, exact equality of residues."""
    return {Point2(*c) for c in cand_a} & {Point2(*c) for c in cand_b}
