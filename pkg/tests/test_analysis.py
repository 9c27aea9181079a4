import math

import pytest

import splitstab.analysis as analysis
from splitstab.analysis import (
    DEGENERATE_ROTATION_WEIGHTS,
    NoCriticalPoint,
    SpotcheckReport,
    critical_steplength_table,
    default_r_grid,
    optimality_spotcheck,
    spotcheck_scheme,
    three_stage_sweep,
)
from splitstab.kernel import epsilon_polynomial
from splitstab.schemes import (
    FirstFlow,
    SplittingScheme,
    ThreeStageParams,
    catalog_scheme,
    three_stage_necessary_k,
    three_stage_scheme,
)
from splitstab.stability import instability_witness, strang_boundaries


def test_critical_steplength_table():
    table = critical_steplength_table(8)
    assert len(table) == 8
    assert table[0].value == math.pi
    assert [row.stages for row in table] == list(range(1, 9))
    prev = 0.0
    for row in table:
        m, h = row.stages, row.value
        residual = (h / (2 * m)) * math.sin(h / m) - math.cos(math.pi / m) + math.cos(h / m)
        assert abs(residual) <= 1e-9
        assert h > prev
        prev = h
    with pytest.raises(ValueError):
        critical_steplength_table(0)


def test_default_r_grid():
    grid = default_r_grid()
    assert len(grid) == 401
    assert grid[0] == 0.2
    assert grid[-1] == 0.6
    assert list(grid) == sorted(grid)
    for target in DEGENERATE_ROTATION_WEIGHTS:
        assert target in grid  # snapped exactly, not straddled
    narrow = default_r_grid(5, 0.3, 0.4)
    assert narrow[0] == 0.3 and narrow[-1] == 0.4
    assert 1.0 / 3.0 in narrow
    with pytest.raises(ValueError):
        default_r_grid(1)


def test_sweep_validates_inputs():
    with pytest.raises(ValueError):
        three_stage_sweep(0.0)
    with pytest.raises(ValueError):
        three_stage_sweep(math.pi)
    with pytest.raises(ValueError):
        three_stage_sweep(3.12, r_grid=(0.1,))
    with pytest.raises(ValueError):
        three_stage_sweep(3.12, r_grid=(0.7,))


def test_sweep_exceptional_set_and_instability_margin():
    sweep = three_stage_sweep(3.12)
    assert len(sweep) == 401
    assert all(rec.status == "ok" for rec in sweep)
    exceptional = [rec.r for rec in sweep if rec.exceptional]
    assert exceptional == list(DEGENERATE_ROTATION_WEIGHTS)
    for rec in sweep:
        if rec.exceptional:
            assert abs(rec.semitrace + 1.0) <= 1e-6
        else:
            # strictly below -1: every non-degenerate member is unstable
            # somewhere inside the Strang stability window
            assert rec.semitrace < -1.0


def test_sweep_critical_point_matches_closed_form():
    # at r = 1/3 the family collapses onto the three-substep Strang
    # composition, whose semitrace minimum sits exactly at the witness
    # floor of the stability edges
    sweep = three_stage_sweep(3.12, r_grid=(1.0 / 3.0,))
    rec = sweep[0]
    assert rec.exceptional
    gamma3 = strang_boundaries(3, 3.12).witness_floor
    assert rec.eps_star == pytest.approx(gamma3, abs=1e-9)
    assert rec.k == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_sweep_no_critical_point_status():
    # at small steplength the semitrace is monotone in eps near the
    # origin, so the row degrades gracefully instead of aborting
    recs = three_stage_sweep(0.3, r_grid=(0.2, 0.45, 0.6))
    for rec in recs:
        assert rec.status == "no-critical-point"
        assert math.isnan(rec.eps_star)
        assert math.isnan(rec.semitrace)
    assert isinstance(NoCriticalPoint("x"), RuntimeError)


def test_sweep_agrees_with_witness_search():
    # the sweep's critical point and the witness search bracket the same
    # sliver of instability just above the witness floor
    scheme = three_stage_scheme(ThreeStageParams(0.3, three_stage_necessary_k(0.3)))
    witness = instability_witness(scheme, 3, 3.12)
    rec = three_stage_sweep(3.12, r_grid=(0.3,))[0]
    assert not rec.exceptional
    assert abs(witness - rec.eps_star) <= 5e-6
    floor = strang_boundaries(3, 3.12).witness_floor
    assert floor < witness < floor + 2e-5


def test_spotcheck_scheme_direct():
    competitor = SplittingScheme(
        FirstFlow.KICK, (0.5, 0.5), (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0), label="comp2"
    )
    results = spotcheck_scheme(competitor, 2, (1.7, 3.0))
    assert [h for h, _ in results] == [1.7, 3.0]
    assert all(w is not None for _, w in results)


def test_optimality_spotcheck_all_stage_counts():
    for m, trials in ((2, 25), (3, 15), (4, 10)):
        report = optimality_spotcheck(m, trials, 2, seed=3)
        assert report.m == m
        assert report.trials == trials
        assert report.failures == ()
        assert report.witnesses_found + report.coincidence_skips == trials
        assert report.consistent_tally


def test_optimality_spotcheck_deterministic():
    a = optimality_spotcheck(2, 25, 2, seed=3)
    b = optimality_spotcheck(2, 25, 2, seed=3)
    assert a == b
    c = optimality_spotcheck(2, 25, 2, seed=4)
    assert c.consistent_tally


def test_optimality_spotcheck_counts_coincidences(monkeypatch):
    # force every draw onto the uniform Strang composition: each trial
    # must be skipped as a coincidence, never counted as a failure
    monkeypatch.setattr(
        analysis,
        "random_palindromic_scheme",
        lambda rng, stages, first_flow=FirstFlow.KICK: catalog_scheme("krkm", 2),
    )
    report = optimality_spotcheck(2, 7, 3, seed=1)
    assert report.coincidence_skips == 7
    assert report.witnesses_found == 0
    assert report.failures == ()
    assert report.consistent_tally


def test_optimality_spotcheck_validates_inputs():
    with pytest.raises(ValueError):
        optimality_spotcheck(5, 3, 2)
    with pytest.raises(ValueError):
        optimality_spotcheck(1, 3, 2)
    with pytest.raises(ValueError):
        optimality_spotcheck(2, 0, 2)
    with pytest.raises(ValueError):
        optimality_spotcheck(2, 3, 0)


def test_spotcheck_report_tally_definition():
    report = SpotcheckReport(m=2, trials=5, witnesses_found=3, coincidence_skips=1)
    assert not report.consistent_tally  # 3 + 1 + 0 != 5
    report = SpotcheckReport(m=2, trials=4, witnesses_found=3, coincidence_skips=1)
    assert report.consistent_tally


def test_collapsed_weights_reproduce_uniform_compositions():
    # the three snapped rotation weights collapse the family onto
    # uniform-substep compositions; their polynomials coincide at any h
    from splitstab.stability import chebyshev_polynomial_coeffs, polynomial_distance

    for r, m in ((0.25, 2), (1.0 / 3.0, 3), (0.5, 2)):
        scheme = three_stage_scheme(ThreeStageParams(r, three_stage_necessary_k(r)))
        poly = epsilon_polynomial(scheme, 2.4)
        assert polynomial_distance(
            poly.coeffs, chebyshev_polynomial_coeffs(m, 2.4)
        ) <= 1e-10
