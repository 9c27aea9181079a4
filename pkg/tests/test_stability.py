import math
import os

import numpy as np
import pytest

from splitstab.kernel import TransferMatrix, epsilon_polynomial, rotation_flow, transfer_matrix
from splitstab.rng import SplitMix64
from splitstab.schemes import (
    FirstFlow,
    SplittingScheme,
    ThreeStageParams,
    catalog_scheme,
    random_consistent_scheme,
    random_palindromic_scheme,
    three_stage_necessary_k,
    three_stage_scheme,
)
from splitstab.stability import (
    NonUnitDeterminant,
    OutOfRange,
    PolynomialCoincides,
    StabilityClass,
    chebyshev_polynomial_coeffs,
    chebyshev_semitrace,
    check_consistency_expansion,
    classify,
    critical_steplength,
    grid_nodes,
    instability_witness,
    polynomial_distance,
    scan_region,
    second_derivative_check,
    strang_boundaries,
)


def test_classify_trichotomy():
    assert classify(rotation_flow(1.0)).kind is StabilityClass.STABLE

    stretch = classify(TransferMatrix(2.0, 0.0, 0.0, 0.5))
    assert stretch.kind is StabilityClass.EXPONENTIALLY_UNSTABLE
    assert stretch.growth_rate == pytest.approx(2.0, abs=1e-15)
    assert stretch.semitrace == pytest.approx(1.25)

    shear = classify(TransferMatrix(1.0, 1.0, 0.0, 1.0))
    assert shear.kind is StabilityClass.LINEARLY_UNSTABLE
    assert shear.growth_rate == 1.0

    assert classify(TransferMatrix(1.0, 0.0, 0.0, 1.0)).kind is StabilityClass.STABLE
    assert classify(TransferMatrix(-1.0, 0.0, 0.0, -1.0)).kind is StabilityClass.STABLE
    # within tolerance of -identity
    near = TransferMatrix(-1.0 + 1e-12, 5e-13, -5e-13, -1.0 - 2e-13)
    assert classify(near).kind is StabilityClass.STABLE


def test_classify_strang_at_pi_is_shear():
    # the exact step of the Strang scheme at eps=1, h=pi: |P| = 1 but the
    # matrix is a shear, not -identity
    verdict = classify(TransferMatrix(-1.0, -math.pi, 0.0, -1.0))
    assert verdict.kind is StabilityClass.LINEARLY_UNSTABLE
    assert verdict.semitrace == -1.0
    # the floating-point product lands an ulp past -1; classify must not
    # pretend it is exactly on the boundary
    drifted = classify(transfer_matrix(catalog_scheme("rkr"), 1.0, math.pi))
    assert drifted.kind in (
        StabilityClass.LINEARLY_UNSTABLE,
        StabilityClass.EXPONENTIALLY_UNSTABLE,
    )
    assert drifted.growth_rate == pytest.approx(1.0, abs=1e-6)


def test_classify_rejects_non_unit_determinant():
    with pytest.raises(NonUnitDeterminant):
        classify(TransferMatrix(2.0, 0.0, 0.0, 1.0))


def test_growth_rate_matches_eigenvalues():
    frozen = classify(transfer_matrix(catalog_scheme("krk"), 2.0, 2.0))
    assert frozen.kind is StabilityClass.EXPONENTIALLY_UNSTABLE
    assert frozen.growth_rate == pytest.approx(4.233258745895373, abs=1e-13)

    rng = SplitMix64(20)
    checked = 0
    while checked < 50:
        scheme = random_consistent_scheme(rng, 1 + rng.randint(0, 3))
        eps = rng.uniform(1.0, 6.0)
        h = rng.uniform(0.5, 3.1)
        mat = transfer_matrix(scheme, eps, h)
        verdict = classify(mat)
        if verdict.kind is not StabilityClass.EXPONENTIALLY_UNSTABLE:
            continue
        eig = np.max(np.abs(np.linalg.eigvals(np.array([[mat.a, mat.b], [mat.c, mat.d]]))))
        assert verdict.growth_rate == pytest.approx(float(eig), rel=1e-10)
        checked += 1


def test_strang_boundaries_single_substep_closed_form():
    edges = strang_boundaries(1, math.pi / 2)
    assert edges.lower == pytest.approx(-4.0 / math.pi, abs=1e-15)
    assert edges.upper == pytest.approx(4.0 / math.pi, abs=1e-15)


def test_strang_boundaries_reference_values():
    assert strang_boundaries(3, 3.12).upper == pytest.approx(3.358724, abs=1e-5)
    assert strang_boundaries(2, 3.12).upper == pytest.approx(1.295968, abs=1e-5)
    assert strang_boundaries(2, math.pi).witness_floor == 0.0


def test_strang_boundaries_bracket_the_stable_interval():
    # semitrace is exactly -1 at the lower edge, +1 at the upper edge
    rng = SplitMix64(21)
    for _ in range(100):
        m = 1 + rng.randint(0, 5)
        h = rng.uniform(1e-2, m * math.pi - 1e-2)
        edges = strang_boundaries(m, h)
        assert edges.lower < 0.0 < edges.upper
        at_lower = chebyshev_semitrace(m, edges.lower, h)
        at_upper = chebyshev_semitrace(m, edges.upper, h)
        assert abs(abs(at_lower) - 1.0) < 1e-9
        assert abs(abs(at_upper) - 1.0) < 1e-9


def test_strang_boundaries_domain():
    with pytest.raises(OutOfRange):
        strang_boundaries(0, 1.0)
    with pytest.raises(OutOfRange):
        strang_boundaries(2, 0.0)
    with pytest.raises(OutOfRange):
        strang_boundaries(2, 2 * math.pi)


def test_critical_steplength_values():
    assert critical_steplength(1).value == math.pi
    assert critical_steplength(1).stages == 1
    prev = 0.0
    for m in range(1, 9):
        h = critical_steplength(m).value
        assert 0.0 < h <= m * math.pi
        assert h > prev
        residual = (h / (2 * m)) * math.sin(h / m) - math.cos(math.pi / m) + math.cos(h / m)
        assert abs(residual) <= 1e-10
        if m > 1:
            # the witness floor reaches -1 exactly at the critical steplength
            assert strang_boundaries(m, h).witness_floor == pytest.approx(-1.0, abs=1e-9)
        prev = h
    with pytest.raises(OutOfRange):
        critical_steplength(0)


def test_chebyshev_semitrace_against_numpy():
    rng = SplitMix64(22)
    for m in range(1, 9):
        for _ in range(30):
            h = rng.uniform(1e-2, m * math.pi - 1e-2)
            eps = rng.uniform(-1.0, 6.0)
            x = math.cos(h / m) - (h / (2 * m)) * math.sin(h / m) * eps
            ref = np.polynomial.chebyshev.chebval(x, [0.0] * m + [1.0])
            got = chebyshev_semitrace(m, eps, h)
            assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_chebyshev_semitrace_single_substep_and_arrays():
    h, eps = 1.7, 2.3
    assert chebyshev_semitrace(1, eps, h) == pytest.approx(
        math.cos(h) - 0.5 * h * eps * math.sin(h), abs=1e-15
    )
    grid = np.linspace(-1, 6, 15)
    vals = chebyshev_semitrace(3, grid, 2.0)
    assert vals.shape == grid.shape
    for e, v in zip(grid, vals):
        assert v == pytest.approx(chebyshev_semitrace(3, float(e), 2.0), abs=1e-14)
    with pytest.raises(OutOfRange):
        chebyshev_semitrace(0, 1.0, 1.0)


def test_chebyshev_coeffs_match_composed_strang():
    rng = SplitMix64(23)
    for m in range(1, 9):
        for _ in range(10):
            h = rng.uniform(1e-2, m * math.pi - 1e-2)
            cheb = chebyshev_polynomial_coeffs(m, h)
            poly = epsilon_polynomial(catalog_scheme("krkm", m), h)
            assert len(cheb) == m + 1
            assert polynomial_distance(cheb, poly.coeffs) <= 1e-12


def test_consistency_expansion():
    rng = SplitMix64(24)
    for name in ("rkr", "krk", "lt_rk", "lt_kr"):
        rep = check_consistency_expansion(catalog_scheme(name), 1.3)
        assert rep.passed
        assert rep.c0_residual <= 1e-12 and rep.c1_residual <= 1e-12
    for _ in range(50):
        scheme = random_consistent_scheme(rng, 1 + rng.randint(0, 5))
        assert check_consistency_expansion(scheme, rng.uniform(0.1, 3.0)).passed
    # shape-valid but inconsistent weights must fail the expansion check
    bogus = SplittingScheme(FirstFlow.ROTATION, (0.7, 0.1), (1.3,), label="bogus")
    rep = check_consistency_expansion(bogus, 1.0)
    assert not rep.passed


def _double_sum_oracle(scheme: SplittingScheme, n: int) -> float:
    """Independent curvature oracle: (n pi)^2 * sum over kick pairs of
    k_i k_j sin^2(n pi (theta_i - theta_j)), with theta_i the rotation
    time elapsed before kick i."""
    if scheme.first_flow is FirstFlow.ROTATION:
        thetas = []
        acc = 0.0
        for r in scheme.rotation_coeffs[: len(scheme.kick_coeffs)]:
            acc += r
            thetas.append(acc)
    else:
        thetas = [0.0]
        acc = 0.0
        for r in scheme.rotation_coeffs:
            acc += r
            thetas.append(acc)
    kicks = scheme.kick_coeffs
    total = 0.0
    for i in range(1, len(kicks)):
        for j in range(i):
            total += (
                kicks[i]
                * kicks[j]
                * math.sin(n * math.pi * (thetas[i] - thetas[j])) ** 2
            )
    return (n * math.pi) ** 2 * total


def test_second_derivative_matches_double_sum_oracle():
    rng = SplitMix64(25)
    for _ in range(200):
        stages = 1 + rng.randint(0, 5)
        first = FirstFlow.ROTATION if rng.next_u64() & 1 == 0 else FirstFlow.KICK
        scheme = random_consistent_scheme(rng, stages, first_flow=first)
        n = 1 + rng.randint(0, 2)
        rep = second_derivative_check(scheme, n)
        signed = (1.0 if n % 2 == 1 else -1.0) * rep.value
        oracle = _double_sum_oracle(scheme, n)
        assert abs(signed - oracle) <= 1e-12 * max(1.0, abs(oracle))
        assert rep.bound == pytest.approx((n * math.pi) ** 2 / 4.0)
        assert rep.bound_satisfied


def test_second_derivative_equality_cases():
    # single merged kick at a node of sin(n pi .): curvature vanishes
    for name in ("krk", "rkr"):
        rep = second_derivative_check(catalog_scheme(name), 1)
        assert rep.value == pytest.approx(0.0, abs=1e-12)
        assert not rep.equality

    # two Strang substeps saturate the curvature bound at n = 1
    rep = second_derivative_check(catalog_scheme("krkm", 2), 1)
    assert rep.equality
    assert rep.value == pytest.approx(math.pi**2 / 4.0, abs=1e-9)
    # ... but not at n = 2, where every kick gap is a full period
    rep2 = second_derivative_check(catalog_scheme("krkm", 2), 2)
    assert rep2.value == pytest.approx(0.0, abs=1e-12)
    assert not rep2.equality

    with pytest.raises(OutOfRange):
        second_derivative_check(catalog_scheme("krk"), 0)


def test_polynomial_distance():
    assert polynomial_distance((1.0, 2.0), (1.0, 2.0)) == 0.0
    assert polynomial_distance((1.0, 2.0, 0.5), (1.0, 1.0)) == pytest.approx(1.0)
    assert polynomial_distance((), (0.0, 3.0)) == pytest.approx(3.0)


def test_instability_witness_two_stage_competitor():
    competitor = SplittingScheme(
        FirstFlow.KICK, (0.5, 0.5), (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0), label="comp2"
    )
    witness = instability_witness(competitor, 2, 3.0)
    assert witness is not None
    assert witness == pytest.approx(0.09482043535367474, abs=1e-9)
    edges = strang_boundaries(2, 3.0)
    assert edges.witness_floor < witness < edges.upper
    p = epsilon_polynomial(competitor, 3.0)(witness)
    assert abs(p) > 1.0
    assert abs(p) == pytest.approx(1.001118160847828, abs=1e-9)


def test_instability_witness_three_stage_razor_case():
    # nearly-optimal three-stage scheme: the unstable sliver above the
    # witness floor is a few parts in 1e6 wide, a good stress test for
    # the extremum refinement
    params = ThreeStageParams(0.3, three_stage_necessary_k(0.3))
    scheme = three_stage_scheme(params)
    witness = instability_witness(scheme, 3, 3.12)
    assert witness is not None
    floor = strang_boundaries(3, 3.12).witness_floor
    assert floor < witness < floor + 2e-5
    assert abs(epsilon_polynomial(scheme, 3.12)(witness)) > 1.0


def test_instability_witness_coincidence():
    with pytest.raises(PolynomialCoincides):
        instability_witness(catalog_scheme("krkm", 2), 2, 3.0)
    # the reversed-order composition shares the Chebyshev polynomial
    with pytest.raises(PolynomialCoincides):
        instability_witness(catalog_scheme("rkrm", 2), 2, 3.0)
    with pytest.raises(PolynomialCoincides):
        instability_witness(catalog_scheme("krkm", 3), 3, 2.5)


def test_instability_witness_domain_checks():
    competitor = SplittingScheme(
        FirstFlow.KICK, (0.5, 0.5), (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0), label="comp2"
    )
    with pytest.raises(OutOfRange):
        instability_witness(competitor, 2, 5.0)  # above the critical steplength
    with pytest.raises(OutOfRange):
        instability_witness(competitor, 2, math.pi + 1e-8)  # too close to pi
    three = three_stage_scheme(ThreeStageParams(0.3, three_stage_necessary_k(0.3)))
    with pytest.raises(OutOfRange):
        instability_witness(three, 2, 3.0)  # stage budget exceeded


def test_grid_nodes_half_open():
    nodes = grid_nodes(-1.0, 6.0, 7)
    assert len(nodes) == 7
    assert nodes[0] == -1.0
    assert nodes[1] - nodes[0] == pytest.approx(1.0, abs=1e-15)
    assert nodes[-1] == pytest.approx(5.0)
    assert grid_nodes(2.0, 3.0, 1) == (2.0,)
    with pytest.raises(OutOfRange):
        grid_nodes(0.0, 1.0, 0)
    with pytest.raises(OutOfRange):
        grid_nodes(1.0, 0.0, 3)


def test_scan_region_shape_and_order():
    grid = scan_region(catalog_scheme("rkr"), (-0.5, 1.0), (0.5, 3.0), (6, 5))
    assert len(grid.eps_nodes) == 6
    assert len(grid.h_nodes) == 5
    assert len(grid.verdicts) == 30
    rows = list(grid.rows())
    assert rows[0][0] == -0.5 and rows[0][1] == 0.5
    # eps-major: h varies fastest
    assert rows[1][0] == -0.5 and rows[1][1] == grid.h_nodes[1]
    for i in range(6):
        for j in range(5):
            eps, hval = grid.eps_nodes[i], grid.h_nodes[j]
            direct = classify(transfer_matrix(catalog_scheme("rkr"), eps, hval))
            assert grid.verdict_at(i, j) == direct


def test_scan_region_thread_determinism(monkeypatch):
    scheme = catalog_scheme("krkm", 3)
    monkeypatch.delenv("SPLITSTAB_THREADS", raising=False)
    serial = scan_region(scheme, (-1.0, 6.0), (0.1, 9.0), (24, 18))
    monkeypatch.setenv("SPLITSTAB_THREADS", "4")
    threaded = scan_region(scheme, (-1.0, 6.0), (0.1, 9.0), (24, 18))
    assert serial.verdicts == threaded.verdicts
    assert serial.eps_nodes == threaded.eps_nodes
    monkeypatch.setenv("SPLITSTAB_THREADS", "not-a-number")
    fallback = scan_region(scheme, (-1.0, 6.0), (0.1, 9.0), (24, 18))
    assert fallback.verdicts == serial.verdicts
