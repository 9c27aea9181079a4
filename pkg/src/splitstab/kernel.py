"""Transfer matrices of splitting schemes on the scalar model problem.

One step of a scheme applied to  q'' = -(1+eps) q  acts linearly on the
phase-space vector (q, p).  This module builds that 2x2 step matrix, both
numerically for given (eps, h) and symbolically as a matrix with polynomial
entries in eps, from which the stability polynomial (the semitrace) is read
off exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .schemes import FirstFlow, SplittingScheme

class UnsupportedFamily(ValueError):
    """Operation not defined for this scheme family."""


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 real step matrix, row-major entries a, b, c, d."""

    a: float
    b: float
    c: float
    d: float

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def trace(self) -> float:
        return self.a + self.d

    def semitrace(self) -> float:
        return 0.5 * (self.a + self.d)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def apply(self, q: float, p: float) -> tuple[float, float]:
        return self.a * q + self.b * p, self.c * q + self.d * p

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)


def rotation_flow(t: float) -> TransferMatrix:
    """Exact flow of the unit oscillator q'' = -q over time t."""
    c, s = math.cos(t), math.sin(t)
    return TransferMatrix(c, s, -s, c)


def kick_flow(t: float, eps: float) -> TransferMatrix:
    """Impulse of the perturbation -eps*q accumulated over time t."""
    return TransferMatrix(1.0, 0.0, -t * eps, 1.0)


def drift_flow(t: float) -> TransferMatrix:
    """Free flight q <- q + t p, used by the drift/kick (Verlet) family."""
    return TransferMatrix(1.0, t, 0.0, 1.0)


def full_kick_flow(t: float, eps: float) -> TransferMatrix:
    """Impulse of the full force -(1+eps)*q, for the drift/kick family."""
    return TransferMatrix(1.0, 0.0, -t * (1.0 + eps), 1.0)


def transfer_matrix(scheme: SplittingScheme, eps: float, h: float) -> TransferMatrix:
    """Step matrix of ``scheme`` on the model problem at (eps, h).

    Flows are applied in scheme order, i.e. the result is the matrix
    product with the first stage rightmost.
    """
    drifting = scheme.is_drift_family
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for kind, w in scheme.flow_sequence():
        t = w * h
        if kind == "free":
            if drifting:
                fa, fb, fc, fd = 1.0, t, 0.0, 1.0
            else:
                fc_, fs = math.cos(t), math.sin(t)
                fa, fb, fc, fd = fc_, fs, -fs, fc_
        else:
            strength = -t * (1.0 + eps) if drifting else -t * eps
            fa, fb, fc, fd = 1.0, 0.0, strength, 1.0
        # left-multiply: the new flow acts after everything so far
        a, b, c, d = (
            fa * a + fb * c,
            fa * b + fb * d,
            fc * a + fd * c,
            fc * b + fd * d,
        )
    return TransferMatrix(a, b, c, d)


# ---------------------------------------------------------------------------
# polynomial entries in eps


def _poly_add(p: list[float], q: list[float]) -> list[float]:
    if len(p) < len(q):
        p, q = q, p
    out = list(p)
    for i, v in enumerate(q):
        out[i] += v
    return out


def _poly_scale(p: Sequence[float], s: float) -> list[float]:
    return [s * v for v in p]


def _poly_mul(p: Sequence[float], q: Sequence[float]) -> list[float]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0.0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_trim(p: Sequence[float]) -> tuple[float, ...]:
    """Strip trailing coefficients that are exactly zero.

    Only exact zeros go: a tiny trailing coefficient is real information
    (it matters at large eps), so no magnitude threshold is applied.
    """
    n = len(p)
    while n > 1 and p[n - 1] == 0.0:
        n -= 1
    return tuple(p[:n])


@dataclass(frozen=True)
class MatrixPolynomial:
    """A 2x2 matrix whose entries are polynomials in eps (monomial basis,
    coefficient index = power)."""

    a: tuple[float, ...]
    b: tuple[float, ...]
    c: tuple[float, ...]
    d: tuple[float, ...]

    @classmethod
    def identity(cls) -> "MatrixPolynomial":
        return cls((1.0,), (0.0,), (0.0,), (1.0,))

    @classmethod
    def from_rotation(cls, t: float) -> "MatrixPolynomial":
        c, s = math.cos(t), math.sin(t)
        return cls((c,), (s,), (-s,), (c,))

    @classmethod
    def from_kick(cls, t: float) -> "MatrixPolynomial":
        # lower-left entry is -t*eps, a degree-1 monomial
        return cls((1.0,), (0.0,), (0.0, -t), (1.0,))

    def __matmul__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        pa = _poly_add(_poly_mul(self.a, other.a), _poly_mul(self.b, other.c))
        pb = _poly_add(_poly_mul(self.a, other.b), _poly_mul(self.b, other.d))
        pc = _poly_add(_poly_mul(self.c, other.a), _poly_mul(self.d, other.c))
        pd = _poly_add(_poly_mul(self.c, other.b), _poly_mul(self.d, other.d))
        return MatrixPolynomial(tuple(pa), tuple(pb), tuple(pc), tuple(pd))

    def semitrace_coeffs(self) -> tuple[float, ...]:
        return _poly_trim(_poly_scale(_poly_add(list(self.a), list(self.d)), 0.5))


@dataclass(frozen=True)
class EpsilonPolynomial:
    """The stability polynomial eps -> semitrace of the step matrix, at a
    fixed steplength h.  Coefficients are monomial, constant term first."""

    coeffs: tuple[float, ...]
    h: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, eps):
        """Horner evaluation; works elementwise on numpy arrays too."""
        acc = self.coeffs[-1]
        if not isinstance(eps, float):
            acc = eps * 0 + acc
        for c in reversed(self.coeffs[:-1]):
            acc = acc * eps + c
        return acc

    def derivative_coeffs(self) -> tuple[float, ...]:
        return tuple(i * c for i, c in enumerate(self.coeffs) if i > 0) or (0.0,)


def epsilon_polynomial(scheme: SplittingScheme, h: float) -> EpsilonPolynomial:
    """Exact monomial coefficients of the stability polynomial at fixed h.

    Only defined for the rotation/kick family; the drift/kick (Verlet)
    comparison family has a different eps-dependence and is rejected.
    """
    if scheme.first_flow not in (FirstFlow.ROTATION, FirstFlow.KICK):
        raise UnsupportedFamily(
            f"eps-polynomial requires a rotation/kick scheme, got "
            f"{scheme.first_flow.value}-first"
        )
    mat = MatrixPolynomial.identity()
    for kind, w in scheme.flow_sequence():
        t = w * h
        factor = (
            MatrixPolynomial.from_rotation(t)
            if kind == "free"
            else MatrixPolynomial.from_kick(t)
        )
        mat = factor @ mat
    return EpsilonPolynomial(mat.semitrace_coeffs(), h)
