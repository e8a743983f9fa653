"""Dense univariate polynomials with exact-rational or floating coefficients.

Coefficients are stored ascending by degree in plain Python numbers
(int, Fraction, float or complex).  Arithmetic between two rational
polynomials stays rational; anything involving a float degrades to float,
which is exactly the behavior we want for catalog methods with rational
coefficients.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number

import numpy as np

#: relative threshold below which a leading coefficient is treated as zero
TRIM_REL_TOL = 1e-14


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


class Poly:
    """Dense polynomial sum(c[k] * z**k)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0,)):
        coeffs = list(coeffs)
        if not coeffs:
            coeffs = [0]
        self.coeffs = coeffs
        self._strip_exact_zeros()

    def _strip_exact_zeros(self):
        c = self.coeffs
        while len(c) > 1 and isinstance(c[-1], (int, Fraction)) and c[-1] == 0:
            c.pop()

    # -- basic queries ---------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.coeffs)

    def is_exact(self) -> bool:
        return all(_is_exact(x) for x in self.coeffs)

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self.coeff(k) + other.coeff(k) for k in range(n)])

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self.coeff(k) - other.coeff(k) for k in range(n)])

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __neg__(self):
        return Poly([-x for x in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Number):
            return Poly([other * x for x in self.coeffs])
        other = _as_poly(other)
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = Poly([1])
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "Poly":
        """Multiply by z**k."""
        return Poly([0] * k + self.coeffs)

    def derivative(self) -> "Poly":
        if len(self.coeffs) == 1:
            return Poly([0])
        return Poly([k * self.coeffs[k] for k in range(1, len(self.coeffs))])

    # -- evaluation ------------------------------------------------------

    def __call__(self, z):
        if isinstance(z, np.ndarray):
            c = np.asarray([complex(x) for x in self.coeffs])
            acc = np.full(z.shape, c[-1], dtype=complex)
            for k in range(len(c) - 2, -1, -1):
                acc = acc * z + c[k]
            return acc
        acc = self.coeffs[-1]
        for k in range(len(self.coeffs) - 2, -1, -1):
            acc = acc * z + self.coeffs[k]
        return acc

    def as_float_array(self) -> np.ndarray:
        return np.asarray([complex(x) for x in self.coeffs])

    def to_float(self) -> "Poly":
        return Poly([float(x) if not isinstance(x, complex) else x
                     for x in self.coeffs])

    # -- cleanup and comparison -----------------------------------------

    def trimmed(self, rel_tol: float = TRIM_REL_TOL) -> "Poly":
        """Drop leading coefficients tiny relative to the largest one."""
        if self.is_exact():
            return Poly(self.coeffs)
        mags = [abs(complex(x)) for x in self.coeffs]
        big = max(mags) if mags else 0.0
        if big == 0.0:
            return Poly([0])
        c = list(self.coeffs)
        while len(c) > 1 and abs(complex(c[-1])) <= rel_tol * big:
            c.pop()
        return Poly(c)

    def max_abs_diff(self, other) -> float:
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return max(abs(complex(self.coeff(k)) - complex(other.coeff(k)))
                   for k in range(n))

    def __eq__(self, other):
        if not isinstance(other, (Poly, Number)):
            return NotImplemented
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return all(self.coeff(k) == other.coeff(k) for k in range(n))

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __repr__(self):
        return f"Poly({self.coeffs!r})"


def _as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, Number):
        return Poly([x])
    raise TypeError(f"cannot interpret {x!r} as Poly")


ZERO = Poly([0])
ONE = Poly([1])
Z = Poly([0, 1])


def taylor_exp(p: int) -> Poly:
    """Degree-p Taylor polynomial of exp at 0, with exact coefficients."""
    return Poly([Fraction(1, math.factorial(k)) for k in range(p + 1)])
