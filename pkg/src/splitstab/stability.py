"""Stability classification and the optimal-stability toolbox.

The step matrix of any consistent rotation/kick scheme has unit
determinant, so its spectrum is controlled by the semitrace
P = (trace)/2: the step is stable for |P| < 1, exponentially unstable for
|P| > 1, and at |P| = 1 stable only when the matrix is exactly +-identity.

The m-substep Strang composition plays a special role: its semitrace is
the Chebyshev polynomial T_m evaluated along an affine function of eps,
which gives closed-form stability edges and, below a critical steplength,
makes the composition's stability interval optimal among all m-stage
schemes.  The routines here expose those edges, the critical steplength,
and a witness search that exhibits an unstable eps for any competing
scheme whose stability polynomial differs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .kernel import (
    EpsilonPolynomial,
    TransferMatrix,
    epsilon_polynomial,
    transfer_matrix,
)
from .schemes import SplittingScheme

#: |det - 1| beyond this is treated as a corrupted input matrix.
DET_TOL = 1e-9

#: Coefficient-wise distance below which a stability polynomial is treated
#: as identical to the Chebyshev (Strang) form.
COINCIDENCE_TOL = 1e-10


class NonUnitDeterminant(ValueError):
    """Input matrix is not area-preserving within tolerance."""


class OutOfRange(ValueError):
    """Argument outside the domain of a closed-form expression."""


class RootNotBracketed(RuntimeError):
    """A root scan failed to find a sign change."""


class PolynomialCoincides(ValueError):
    """The scheme's stability polynomial equals the Chebyshev form, so no
    instability witness exists."""


class StabilityClass(Enum):
    STABLE = "stable"
    LINEARLY_UNSTABLE = "linear_unstable"
    EXPONENTIALLY_UNSTABLE = "exp_unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of one step matrix.

    ``growth_rate`` is the largest eigenvalue magnitude; it equals 1 except
    in the exponentially unstable case, where it is |P| + sqrt(P^2 - 1).
    """

    kind: StabilityClass
    semitrace: float
    growth_rate: float = 1.0


def classify(mat: TransferMatrix, tol: float = 1e-9) -> StabilityVerdict:
    """Classify a unit-determinant step matrix by its semitrace.

    ``tol`` is only used to resolve the borderline |P| = 1 case, where the
    matrix is compared entrywise against +-identity.
    """
    det = mat.det()
    # relative residual: a*d - b*c cancels catastrophically for large
    # entries, so an absolute test would reject legitimate (symplectic)
    # products deep in the unstable region, while a genuinely wrong
    # matrix is off by O(1) and fails either way
    scale = max(1.0, abs(mat.a * mat.d) + abs(mat.b * mat.c))
    if abs(det - 1.0) > DET_TOL * scale:
        raise NonUnitDeterminant(
            f"determinant {det!r} differs from 1 beyond {DET_TOL} "
            f"(relative to entry scale {scale:.3e})"
        )
    p = mat.semitrace()
    ap = abs(p)
    if ap < 1.0:
        return StabilityVerdict(StabilityClass.STABLE, p)
    if ap > 1.0:
        growth = ap + math.sqrt(p * p - 1.0)
        return StabilityVerdict(StabilityClass.EXPONENTIALLY_UNSTABLE, p, growth)
    sign = 1.0 if p > 0 else -1.0
    is_identity = (
        abs(mat.a - sign) <= tol
        and abs(mat.d - sign) <= tol
        and abs(mat.b) <= tol
        and abs(mat.c) <= tol
    )
    if is_identity:
        return StabilityVerdict(StabilityClass.STABLE, p)
    return StabilityVerdict(StabilityClass.LINEARLY_UNSTABLE, p)


# ---------------------------------------------------------------------------
# closed-form edges of the Strang composition


@dataclass(frozen=True)
class StabilityEdges:
    """Stability edges of the m-substep Strang scheme at steplength h.

    ``lower`` (< -1) and ``upper`` (> 0) bound the eps-interval on which
    |P| <= 1; ``witness_floor`` is the eps above which every competing
    m-stage scheme with a different stability polynomial is guaranteed an
    unstable point below ``upper`` (valid for h below the critical
    steplength).
    """

    lower: float
    upper: float
    witness_floor: float


def strang_boundaries(m: int, h: float) -> StabilityEdges:
    """Closed-form stability edges for the m-substep Strang composition.

    Defined for 0 < h < m*pi.  The edges are the eps-values where the
    Chebyshev argument reaches +-1, and the witness floor is where it
    reaches cos(pi/m).
    """
    if m < 1:
        raise OutOfRange(f"substep count must be >= 1, got {m}")
    if not (0.0 < h < m * math.pi):
        raise OutOfRange(f"need 0 < h < m*pi = {m * math.pi:.6g}, got h={h!r}")
    half = 0.5 * h / m
    lower = -(2.0 * m / h) * math.tan(half)
    upper = (2.0 * m / h) / math.tan(half)
    s = math.sin(h / m)
    witness_floor = (2.0 * m / (h * s)) * (math.cos(h / m) - math.cos(math.pi / m))
    return StabilityEdges(lower, upper, witness_floor)


@dataclass(frozen=True)
class CriticalSteplength:
    stages: int
    value: float


def _critical_equation(m: int, h: float) -> float:
    """Residual of the critical-steplength equation

        (h / 2m) sin(h/m) = cos(pi/m) - cos(h/m),

    equivalently witness_floor(h) = -1."""
    return (h / (2.0 * m)) * math.sin(h / m) - math.cos(math.pi / m) + math.cos(h / m)


@lru_cache(maxsize=None)
def critical_steplength(m: int) -> CriticalSteplength:
    """Smallest positive root of the critical-steplength equation.

    Below this steplength the Strang composition's stability interval is
    optimal among m-stage schemes.  For m = 1 the root is pi exactly; in
    general it lies in (0, m*pi) and grows like (12 pi^2 m^2)^(1/4).
    """
    if m < 1:
        raise OutOfRange(f"substep count must be >= 1, got {m}")
    if m == 1:
        return CriticalSteplength(1, math.pi)
    top = m * math.pi
    panels = 1000
    prev_h, prev_f = 0.0, _critical_equation(m, 0.0)  # = 1 - cos(pi/m) > 0
    bracket = None
    for i in range(1, panels + 1):
        hi = top * i / panels
        fi = _critical_equation(m, hi)
        if fi == 0.0 or (prev_f > 0.0) != (fi > 0.0):
            bracket = (prev_h, hi)
            break
        prev_h, prev_f = hi, fi
    if bracket is None:
        raise RootNotBracketed(f"no sign change located for m={m}")
    lo, hi = bracket
    flo = _critical_equation(m, lo)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        fmid = _critical_equation(m, mid)
        if (flo > 0.0) != (fmid > 0.0):
            hi = mid
        else:
            lo, flo = mid, fmid
    return CriticalSteplength(m, 0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# the Chebyshev semitrace of the Strang composition


def chebyshev_semitrace(m: int, eps, h: float):
    """Semitrace of the m-substep Strang scheme: T_m(x) with
    x = cos(h/m) - (h*eps / 2m) sin(h/m), via the three-term recurrence.

    Accepts scalar or numpy-array eps.
    """
    if m < 1:
        raise OutOfRange(f"substep count must be >= 1, got {m}")
    x = math.cos(h / m) - (h / (2.0 * m)) * math.sin(h / m) * eps
    if m == 1:
        return x
    t_prev, t_cur = 1.0, x
    if not isinstance(x, float):
        t_prev = x * 0 + 1.0
    for _ in range(m - 1):
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
    return t_cur


def chebyshev_polynomial_coeffs(m: int, h: float) -> tuple[float, ...]:
    """Monomial eps-coefficients of the Strang semitrace at fixed h."""
    if m < 1:
        raise OutOfRange(f"substep count must be >= 1, got {m}")
    c0 = math.cos(h / m)
    c1 = -(h / (2.0 * m)) * math.sin(h / m)
    t_prev = [1.0]
    t_cur = [c0, c1]
    for _ in range(m - 1):
        # t_next = 2*(c0 + c1*eps)*t_cur - t_prev
        nxt = [0.0] * (len(t_cur) + 1)
        for i, v in enumerate(t_cur):
            nxt[i] += 2.0 * c0 * v
            nxt[i + 1] += 2.0 * c1 * v
        for i, v in enumerate(t_prev):
            nxt[i] -= v
        t_prev, t_cur = t_cur, nxt
    return tuple(t_cur)


# ---------------------------------------------------------------------------
# consistency and curvature diagnostics


@dataclass(frozen=True)
class ConsistencyExpansionReport:
    """Residuals of the low-order coefficients forced by consistency:
    c0 = cos(h) and c1 = -(h/2) sin(h) for every consistent scheme."""

    h: float
    c0_residual: float
    c1_residual: float
    passed: bool


def check_consistency_expansion(
    scheme: SplittingScheme, h: float, tol: float = 1e-12
) -> ConsistencyExpansionReport:
    poly = epsilon_polynomial(scheme, h)
    c0 = poly.coeffs[0]
    c1 = poly.coeffs[1] if len(poly.coeffs) > 1 else 0.0
    r0 = abs(c0 - math.cos(h))
    r1 = abs(c1 + 0.5 * h * math.sin(h))
    return ConsistencyExpansionReport(h, r0, r1, passed=(r0 <= tol and r1 <= tol))


@dataclass(frozen=True)
class SecondDerivativeReport:
    """Curvature of the stability polynomial in eps at (0, n*pi).

    ``value`` is d^2 P / d eps^2 at eps = 0, h = n*pi (= 2 c2).  Stability
    of the scheme in a neighbourhood of (0, n*pi) forces
    (-1)^(n+1) * value = n^2 pi^2 / 4, and for every consistent scheme
    (-1)^(n+1) * value <= n^2 pi^2 / 4.
    """

    n: int
    value: float
    bound: float
    bound_satisfied: bool
    equality: bool


def second_derivative_check(
    scheme: SplittingScheme,
    n: int,
    *,
    bound_tol: float = 1e-10,
    equality_tol: float = 1e-9,
) -> SecondDerivativeReport:
    if n < 1:
        raise OutOfRange(f"need n >= 1, got {n}")
    poly = epsilon_polynomial(scheme, n * math.pi)
    c2 = poly.coeffs[2] if len(poly.coeffs) > 2 else 0.0
    value = 2.0 * c2
    sign = 1.0 if n % 2 == 1 else -1.0
    bound = (n * math.pi) ** 2 / 4.0
    signed = sign * value
    return SecondDerivativeReport(
        n=n,
        value=value,
        bound=bound,
        bound_satisfied=(signed <= bound + bound_tol),
        equality=(abs(signed - bound) <= equality_tol),
    )


# ---------------------------------------------------------------------------
# instability witness for competing schemes


def _golden_max(f: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    """Golden-section maximization of f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if b - a <= 1e-13 * max(1.0, abs(a), abs(b)):
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def polynomial_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Max coefficient-wise distance, padding the shorter with zeros."""
    n = max(len(p), len(q))
    dist = 0.0
    for i in range(n):
        a = p[i] if i < len(p) else 0.0
        b = q[i] if i < len(q) else 0.0
        dist = max(dist, abs(a - b))
    return dist


def instability_witness(
    scheme: SplittingScheme,
    m: int,
    h: float,
    *,
    samples: int = 10_000,
    coincidence_tol: float = COINCIDENCE_TOL,
) -> float | None:
    """Search for eps* with |P(eps*, h)| > 1 inside the guaranteed interval
    (witness_floor, upper edge) of the m-substep Strang scheme.

    Any m-stage scheme whose stability polynomial at this h differs from
    the Chebyshev form has such a witness whenever h is below the critical
    steplength and not a multiple of pi up to (m-1)*pi.  The search samples
    the open interval densely, refines every local maximum of |P| by
    golden-section, and returns the admissible witness closest to eps = 0
    (None only if nothing exceeds 1, which the theory rules out under the
    stated hypotheses).

    Raises PolynomialCoincides when the polynomial matches the Chebyshev
    form coefficient-wise within ``coincidence_tol``.
    """
    if scheme.stages > m:
        raise OutOfRange(
            f"scheme has {scheme.stages} stages, exceeding the stage budget m={m}"
        )
    h_crit = critical_steplength(m).value
    if not (0.0 < h < h_crit):
        raise OutOfRange(f"need 0 < h < critical steplength {h_crit:.6f}, got {h!r}")
    for j in range(1, m):
        if abs(h - j * math.pi) < 1e-6:
            raise OutOfRange(f"h={h!r} is within 1e-6 of {j}*pi")
    poly = epsilon_polynomial(scheme, h)
    cheb = chebyshev_polynomial_coeffs(m, h)
    if polynomial_distance(poly.coeffs, cheb) <= coincidence_tol:
        raise PolynomialCoincides(
            "stability polynomial equals the Chebyshev form at this h"
        )
    edges = strang_boundaries(m, h)
    lo, hi = edges.witness_floor, edges.upper
    if not hi > lo:
        return None

    grid = np.linspace(lo, hi, samples + 2)[1:-1]
    # Enrich near the images of the Chebyshev extrema, where a polynomial
    # close to (but distinct from) the Chebyshev form first pokes past 1.
    s = math.sin(h / m)
    extra = []
    spacing = (hi - lo) / (samples + 1)
    for j in range(m + 1):
        xj = math.cos(j * math.pi / m)
        ej = (2.0 * m / (h * s)) * (math.cos(h / m) - xj)
        if lo < ej < hi:
            extra.append(np.linspace(max(lo, ej - 2 * spacing), min(hi, ej + 2 * spacing), 41))
    if extra:
        grid = np.unique(np.concatenate([grid] + extra))
    vals = np.abs(poly(grid))

    interior = np.flatnonzero(
        (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
    ) + 1
    candidates: list[tuple[float, float]] = []
    absf = lambda e: abs(poly(e))
    for idx in interior:
        a = grid[idx - 1]
        b = grid[idx + 1]
        xm, fm = _golden_max(absf, a, b)
        if fm > 1.0 and lo < xm < hi:
            candidates.append((xm, fm))
    # the ends of the sampled grid can also hide a maximum
    for a, b in ((lo, grid[1]), (grid[-2], hi)):
        xm, fm = _golden_max(absf, a, b)
        if fm > 1.0 and lo < xm < hi:
            candidates.append((xm, fm))
    if not candidates:
        return None
    return min(candidates, key=lambda t: abs(t[0]))[0]


# ---------------------------------------------------------------------------
# region scans


@dataclass(frozen=True)
class RegionGrid:
    """Stability verdicts on a uniform (eps, h) grid, eps-major (row-major
    with rows indexed by eps and columns by h)."""

    label: str
    eps_nodes: tuple[float, ...]
    h_nodes: tuple[float, ...]
    verdicts: tuple[StabilityVerdict, ...] = field(repr=False)

    def verdict_at(self, i: int, j: int) -> StabilityVerdict:
        return self.verdicts[i * len(self.h_nodes) + j]

    def rows(self):
        """Yield (eps, h, verdict) in storage order."""
        for i, eps in enumerate(self.eps_nodes):
            for j, hval in enumerate(self.h_nodes):
                yield eps, hval, self.verdicts[i * len(self.h_nodes) + j]


def grid_nodes(start: float, end: float, n: int) -> tuple[float, ...]:
    """n nodes on [start, end), node i = start + i*(end-start)/n."""
    if n < 1:
        raise OutOfRange(f"need at least one node, got {n}")
    if not (end >= start):
        raise OutOfRange(f"inverted range [{start!r}, {end!r})")
    step = (end - start) / n
    return tuple(start + i * step for i in range(n))


def _thread_count() -> int:
    raw = os.environ.get("SPLITSTAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def scan_region(
    scheme: SplittingScheme,
    eps_range: tuple[float, float],
    h_range: tuple[float, float],
    grid: tuple[int, int],
    tol: float = 1e-9,
) -> RegionGrid:
    """Classify the scheme's step on a uniform inclusive-exclusive grid.

    ``grid`` = (number of eps nodes, number of h nodes).  Rows (fixed eps)
    may be evaluated concurrently; the worker count is capped by the
    SPLITSTAB_THREADS environment variable (default 1).  Output order is
    deterministic either way.
    """
    eps_nodes = grid_nodes(eps_range[0], eps_range[1], grid[0])
    h_nodes = grid_nodes(h_range[0], h_range[1], grid[1])

    def row(eps: float) -> list[StabilityVerdict]:
        return [classify(transfer_matrix(scheme, eps, hv), tol) for hv in h_nodes]

    workers = _thread_count()
    if workers > 1 and len(eps_nodes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, eps_nodes))
    else:
        rows = [row(e) for e in eps_nodes]
    verdicts = tuple(v for r in rows for v in r)
    return RegionGrid(scheme.label, eps_nodes, h_nodes, verdicts)
