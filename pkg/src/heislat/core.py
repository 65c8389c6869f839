"""Heisenberg group arithmetic, anisotropic gauge norms and the defining
function of gauge spheres.

Points carry their representation kind implicitly: integer, exact rational
(``fractions.Fraction``) or 64-bit float coordinates.  All group operations
are pure and preserve exactness; the only promotion happening is integer ->
rational for the half-integer vertical coordinate produced by the group law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Tuple

__all__ = [
    "GaugeParams",
    "HPoint",
    "symplectic_form",
    "group_mul",
    "group_inv",
    "dilate",
    "norm_alpha",
    "phi_alpha",
    "phi_power",
    "phi_power_scaled",
]


@dataclass(frozen=True)
class GaugeParams:
    """Dimension and gauge exponent: n, even alpha >= 2 and the constant
    C_alpha (default 16, the value used by the Koranyi norm)."""

    n: int
    alpha: int
    C_alpha: Fraction = Fraction(16)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.alpha < 2 or self.alpha % 2 != 0:
            raise ValueError("alpha must be an even integer >= 2")
        object.__setattr__(self, "C_alpha", Fraction(self.C_alpha))
        if self.C_alpha <= 0:
            raise ValueError("C_alpha must be positive")

    @property
    def D(self) -> int:
        return 2 * self.n + 1


@dataclass(frozen=True)
class HPoint:
    """A point of the n-th Heisenberg group: 2n horizontal coordinates and
    one vertical coordinate."""

    horiz: Tuple
    vert: object

    def __post_init__(self):
        h = tuple(self.horiz)
        object.__setattr__(self, "horiz", h)
        if len(h) == 0 or len(h) % 2 != 0:
            raise ValueError("horizontal part must have even positive length 2n")

    @property
    def n(self) -> int:
        return len(self.horiz) // 2

    @property
    def is_float(self) -> bool:
        return isinstance(self.vert, float) or any(
            isinstance(c, float) for c in self.horiz
        )

    @classmethod
    def of(cls, *coords) -> "HPoint":
        """Build from D = 2n+1 scalars, the last one vertical."""
        if len(coords) < 3 or len(coords) % 2 == 0:
            raise ValueError("need 2n+1 coordinates")
        return cls(tuple(coords[:-1]), coords[-1])

    @classmethod
    def origin(cls, n: int) -> "HPoint":
        return cls((0,) * (2 * n), 0)

    def coords(self) -> Tuple:
        return self.horiz + (self.vert,)

    def as_float(self) -> "HPoint":
        return HPoint(tuple(float(c) for c in self.horiz), float(self.vert))


def _check_same_n(x: HPoint, y: HPoint):
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: n={x.n} vs n={y.n}")


def symplectic_form(u, v) -> object:
    """u^T J v for the standard 2n x 2n symplectic matrix J."""
    if len(u) != len(v) or len(u) % 2 != 0:
        raise ValueError("vectors must share an even length")
    n = len(u) // 2
    return sum(u[i] * v[n + i] - u[n + i] * v[i] for i in range(n))


def group_mul(x: HPoint, y: HPoint) -> HPoint:
    """Heisenberg product (x, y) -> (x_ + y_, xbar + ybar + x^T J y / 2)."""
    _check_same_n(x, y)
    twist = symplectic_form(x.horiz, y.horiz)
    half = 0.5 if (x.is_float or y.is_float or isinstance(twist, float)) else Fraction(1, 2)
    horiz = tuple(a + b for a, b in zip(x.horiz, y.horiz))
    return HPoint(horiz, x.vert + y.vert + half * twist)


def group_inv(x: HPoint) -> HPoint:
    return HPoint(tuple(-c for c in x.horiz), -x.vert)


def dilate(t, x: HPoint) -> HPoint:
    """Parabolic dilation: horizontal part scaled by t, vertical by t^2."""
    if t <= 0:
        raise ValueError("dilation parameter must be positive")
    return HPoint(tuple(t * c for c in x.horiz), t * t * x.vert)


def norm_alpha(x: HPoint, g: GaugeParams) -> float:
    """The gauge norm (|x_|^alpha + C_alpha |xbar|^(alpha/2))^(1/alpha)."""
    hsq = math.fsum(float(c) * float(c) for c in x.horiz)
    value = hsq ** (g.alpha / 2) + float(g.C_alpha) * abs(float(x.vert)) ** (g.alpha / 2)
    return value ** (1.0 / g.alpha)


def phi_alpha(x: HPoint, y: HPoint, g: GaugeParams) -> float:
    """The defining function ||x * y^-1||_alpha of the gauge sphere."""
    _check_same_n(x, y)
    return norm_alpha(group_mul(x, group_inv(y)), g)


def phi_power(x: HPoint, y: HPoint, g: GaugeParams):
    """Exact value of phi_alpha(x, y)^alpha for rational inputs.

    Both |x_ - y_|^alpha and |zbar|^(alpha/2) are integer powers of rational
    quantities when alpha is even, so the result is an exact Fraction.
    """
    _check_same_n(x, y)
    z = group_mul(x, group_inv(y))
    if z.is_float:
        raise TypeError("phi_power requires exact (integer or rational) inputs")
    hsq = sum(c * c for c in z.horiz)
    return Fraction(hsq) ** (g.alpha // 2) + g.C_alpha * abs(Fraction(z.vert)) ** (g.alpha // 2)


def scaled_gauge_constant(g: GaugeParams) -> int:
    """C_alpha * 2^(alpha/2), which must be integral for the exact counter."""
    c = g.C_alpha * 2 ** (g.alpha // 2)
    if c.denominator != 1:
        raise ValueError(
            f"C_alpha * 2^(alpha/2) = {c} is not integral; exact shell "
            "membership needs an integral scaled constant"
        )
    return c.numerator


def phi_power_scaled(x: HPoint, y: HPoint, g: GaugeParams) -> int:
    """2^alpha * phi_alpha(x, y)^alpha as an exact big integer.

    For integer points x, y the doubled vertical coordinate
    m = 2(xbar - ybar) + y_^T J x_ is an integer, and
    2^alpha * Phi = 2^alpha |x_ - y_|^alpha + C_alpha 2^(alpha/2) |m|^(alpha/2).
    Shell membership |phi - Q| <= delta is then decided exactly against the
    rational endpoints 2^alpha (Q -+ delta)^alpha.
    """
    _check_same_n(x, y)
    coords = x.coords() + y.coords()
    if not all(isinstance(c, int) or (isinstance(c, Rational) and c.denominator == 1) for c in coords):
        raise TypeError("phi_power_scaled requires integer coordinates")
    cscaled = scaled_gauge_constant(g)
    dx = [int(a) - int(b) for a, b in zip(x.horiz, y.horiz)]
    hsq = sum(d * d for d in dx)
    m = 2 * (int(x.vert) - int(y.vert)) + int(symplectic_form(y.horiz, x.horiz))
    return 2**g.alpha * hsq ** (g.alpha // 2) + cscaled * abs(m) ** (g.alpha // 2)
