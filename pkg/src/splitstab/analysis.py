"""Scripted experiments over the stability kernel.

Three studies live here: the critical-steplength table, the sweep of the
three-stage kick-first family over its free rotation parameter, and a
randomized spot-check that every competitor scheme admits an instability
witness inside the guaranteed window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernel import EpsilonPolynomial, epsilon_polynomial
from .rng import SplitMix64
from .schemes import (
    FirstFlow,
    SingularParameter,
    SplittingScheme,
    ThreeStageParams,
    random_palindromic_scheme,
    three_stage_necessary_k,
    three_stage_scheme,
)
from .stability import (
    COINCIDENCE_TOL,
    CriticalSteplength,
    PolynomialCoincides,
    chebyshev_polynomial_coeffs,
    critical_steplength,
    instability_witness,
    polynomial_distance,
)

#: Rotation weights at which the three-stage family collapses onto a
#: uniform-substep scheme: at 1/4 the outer kicks vanish (two rotation-
#: first substeps), at 1/3 all weights equalize (three substeps), at 1/2
#: the middle rotation vanishes (two kick-first substeps).
DEGENERATE_ROTATION_WEIGHTS = (0.25, 1.0 / 3.0, 0.5)


class NoCriticalPoint(RuntimeError):
    """The semitrace derivative has no sign change in the search bracket."""


def critical_steplength_table(m_max: int) -> tuple[CriticalSteplength, ...]:
    """Critical steplengths for stage counts 1..m_max (strictly increasing)."""
    if m_max < 1:
        raise ValueError(f"need m_max >= 1, got {m_max}")
    return tuple(critical_steplength(m) for m in range(1, m_max + 1))


# ---------------------------------------------------------------------------
# three-stage family sweep


@dataclass(frozen=True)
class SweepRecord:
    """One row of the three-stage sweep.

    ``eps_star`` is the critical point of the semitrace (in eps) nearest
    the origin and ``semitrace`` its value there; ``exceptional`` marks
    rotation weights where the scheme's polynomial coincides with a
    uniform-substep (Chebyshev) form, so no instability window opens.
    """

    r: float
    k: float
    eps_star: float
    semitrace: float
    exceptional: bool
    status: str = "ok"


def default_r_grid(
    n: int = 401, lo: float = 0.2, hi: float = 0.6
) -> tuple[float, ...]:
    """Uniform inclusive grid on [lo, hi] with degenerate weights snapped.

    Nodes within half a grid spacing of 1/4, 1/3 or 1/2 are replaced by
    the exact value, so the sweep samples the collapses precisely instead
    of straddling them.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    spacing = (hi - lo) / (n - 1)
    nodes = []
    for i in range(n):
        r = ((n - 1 - i) * lo + i * hi) / (n - 1)
        for target in DEGENERATE_ROTATION_WEIGHTS:
            if abs(r - target) <= 0.5 * spacing and lo <= target <= hi:
                r = target
                break
        nodes.append(r)
    return tuple(nodes)


def _bisect_root(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _critical_point_near_zero(
    poly: EpsilonPolynomial, lo: float = -0.5, hi: float = 0.5, nodes: int = 2001
) -> float:
    """Root of d(semitrace)/d(eps) in [lo, hi] with smallest magnitude."""
    dp = EpsilonPolynomial(poly.derivative_coeffs(), poly.h)
    grid = np.linspace(lo, hi, nodes)
    vals = dp(grid)
    roots = [float(grid[i]) for i in np.flatnonzero(vals == 0.0)]
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    for i in flips:
        roots.append(_bisect_root(dp, float(grid[i]), float(grid[i + 1])))
    if not roots:
        raise NoCriticalPoint(
            f"derivative of the semitrace has no root in [{lo}, {hi}]"
        )
    return min(roots, key=abs)


def _coincides_with_chebyshev(
    poly: EpsilonPolynomial, h: float, tol: float = COINCIDENCE_TOL
) -> bool:
    return any(
        polynomial_distance(poly.coeffs, chebyshev_polynomial_coeffs(m, h)) <= tol
        for m in (1, 2, 3)
    )


def three_stage_sweep(
    h_star: float, r_grid: Sequence[float] | None = None
) -> tuple[SweepRecord, ...]:
    """Sweep the three-stage kick-first family over its rotation weight.

    For each r the unique consistency-compatible inner kick weight is
    computed, the stability polynomial is formed at ``h_star``, and the
    critical point of the semitrace nearest eps = 0 is located by sign-
    change bracketing of adjacent nodes (2001 over [-0.5, 0.5]) followed
    by bisection to 1e-12.  Rows where the kick weight is singular or no
    critical point exists are recorded with NaN values and a non-"ok"
    status rather than aborting the sweep.
    """
    if not 0.0 < h_star < math.pi:
        raise ValueError(f"need 0 < h_star < pi, got {h_star!r}")
    if r_grid is None:
        r_grid = default_r_grid()
    records = []
    for r in r_grid:
        if not 0.2 <= r <= 0.6:
            raise ValueError(f"rotation weight {r!r} outside [0.2, 0.6]")
        try:
            k = three_stage_necessary_k(r)
        except SingularParameter:
            records.append(
                SweepRecord(r, math.nan, math.nan, math.nan, False, "singular-parameter")
            )
            continue
        scheme = three_stage_scheme(ThreeStageParams(r, k))
        poly = epsilon_polynomial(scheme, h_star)
        exceptional = _coincides_with_chebyshev(poly, h_star)
        try:
            eps_star = _critical_point_near_zero(poly)
        except NoCriticalPoint:
            records.append(
                SweepRecord(r, k, math.nan, math.nan, exceptional, "no-critical-point")
            )
            continue
        records.append(
            SweepRecord(r, k, eps_star, float(poly(eps_star)), exceptional)
        )
    return tuple(records)


# ---------------------------------------------------------------------------
# randomized optimality spot-check


@dataclass(frozen=True)
class SpotcheckFailure:
    """A (scheme, h) pair at which no instability witness was found."""

    label: str
    rotation_coeffs: tuple[float, ...]
    kick_coeffs: tuple[float, ...]
    h: float


@dataclass(frozen=True)
class SpotcheckReport:
    """Tally of the randomized witness search.

    Counts are per trial: a trial either coincides with the Chebyshev
    form (skipped), produces a witness at every sampled h, or records its
    first witness-less h (one failure record per failed trial), so
    witnesses_found + coincidence_skips + len(failures) == trials.
    """

    m: int
    trials: int
    witnesses_found: int
    coincidence_skips: int
    failures: tuple[SpotcheckFailure, ...] = field(default=())

    @property
    def consistent_tally(self) -> bool:
        return (
            self.witnesses_found + self.coincidence_skips + len(self.failures)
            == self.trials
        )


def spotcheck_scheme(
    scheme: SplittingScheme, m: int, h_values: Sequence[float]
) -> list[tuple[float, float | None]]:
    """Witness search at each h; PolynomialCoincides propagates."""
    return [(h, instability_witness(scheme, m, h)) for h in h_values]


def _draw_steplengths(rng: SplitMix64, count: int, h_cap: float) -> list[float]:
    hs = []
    while len(hs) < count:
        h = rng.uniform(0.1, h_cap)
        if any(abs(h - j * math.pi) <= 1e-3 for j in range(1, int(h_cap / math.pi) + 2)):
            continue
        hs.append(h)
    return hs


def optimality_spotcheck(
    m: int, trials: int, h_samples: int, seed: int = 1
) -> SpotcheckReport:
    """Randomized check that competitor schemes lose stability early.

    Each trial draws a consistent palindromic m-stage scheme (rotation-
    or kick-first on a coin flip, coefficients uniform in [-0.5, 1.5]
    before normalization) and ``h_samples`` steplengths uniform in
    (0.1, critical steplength) avoiding 1e-3 neighborhoods of multiples
    of pi, then requires an instability witness at every steplength.
    Deterministic for a fixed seed.
    """
    if m not in (2, 3, 4):
        raise ValueError(f"stage count must be 2, 3 or 4, got {m}")
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    if h_samples < 1:
        raise ValueError(f"need h_samples >= 1, got {h_samples}")
    rng = SplitMix64(seed)
    h_cap = critical_steplength(m).value
    witnesses_found = 0
    skips = 0
    failures: list[SpotcheckFailure] = []
    for _ in range(trials):
        first = FirstFlow.ROTATION if rng.next_u64() & 1 == 0 else FirstFlow.KICK
        scheme = random_palindromic_scheme(rng, m, first_flow=first)
        hs = _draw_steplengths(rng, h_samples, h_cap)
        try:
            results = spotcheck_scheme(scheme, m, hs)
        except PolynomialCoincides:
            skips += 1
            continue
        missing = [h for h, witness in results if witness is None]
        if missing:
            failures.append(
                SpotcheckFailure(
                    scheme.label or scheme.describe(),
                    scheme.rotation_coeffs,
                    scheme.kick_coeffs,
                    missing[0],
                )
            )
        else:
            witnesses_found += 1
    return SpotcheckReport(m, trials, witnesses_found, skips, tuple(failures))
