import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualband.analysis import BandReport, TransmissionZero, TzReport
from dualband.netlist import parse_netlist, serialize
from dualband.network import C0, linear_grid, sweep
from dualband.tuning import (
    BandTarget,
    FeatureDiscontinuity,
    FeatureRecord,
    SweepError,
    SweepTable,
    TuneError,
    TuneTarget,
    TzTarget,
    analyze,
    classify_trend,
    feature_series,
    objective,
    parameter_sweep,
    tune,
)

GRID = linear_grid(1e9, 12e9, 1101)

RESONATOR = """
.param L 14e-3 m
.param LC 1e-9 H
port P1 p1 50
port P2 p2 50
jinv J1 p1 a j=0.01
stub_short R a z0=50 len=$L
jinv J2 a p2 j=0.01
tl T p2 q z0=50 len=5e-3
ind LN p1 m l=$LC
cap CN m 0 c=0.1e-12
"""


PLAIN = "\n".join([
    l for l in RESONATOR.strip().splitlines() if not l.startswith(("tl ", "ind ", "cap ", ".param LC"))])


@pytest.fixture(scope="module")
def resonator():
    return parse_netlist(RESONATOR)


def _table(values, feats):
    recs = tuple(FeatureRecord(v, TzReport(), (BandReport(f, f - 1, f + 1, 1.0, 0.0, 10.0, 1),))
                 for v, f in zip(values, feats))
    return SweepTable("x", tuple(values), recs, "0", (0.0, 1.0, 2))


def test_single_value_sweep_equals_direct(resonator):
    from dualband.netlist import bind_params
    table = parameter_sweep(resonator, "L", [13e-3], GRID)
    zeros, bands = analyze(sweep(bind_params(resonator, {"L": 13e-3}), GRID))
    assert table.records[0].zeros == zeros and list(table.records[0].bands) == bands
    assert table.grid == (1e9, 12e9, 1101) and len(table.netlist_hash) == 16


def test_sweep_is_pure_and_deterministic(resonator):
    before = serialize(resonator)
    a = parameter_sweep(resonator, "L", [12e-3, 13e-3, 14e-3], GRID)
    b = parameter_sweep(resonator, "L", [12e-3, 13e-3, 14e-3], GRID, workers=3)
    assert serialize(resonator) == before
    assert a == b


def test_sweep_errors(resonator):
    with pytest.raises(SweepError, match="unknown"):
        parameter_sweep(resonator, "zz", [1.0], GRID)
    with pytest.raises(SweepError, match="monotone"):
        parameter_sweep(resonator, "L", [1e-2, 3e-2, 2e-2], GRID)
    with pytest.raises(SweepError) as info:
        parameter_sweep(resonator, "L", [1e-2, -1e-2], GRID)
    assert info.value.value == -1e-2


def test_trend_examples():
    t = classify_trend(_table([1, 2, 3], [1.0, 2.0, 3.0]), "band1.center")
    assert t.kind == "increasing" and t.steps == (1.0, 1.0) and t.slopes == (1.0, 1.0)
    t = classify_trend(_table([1, 2, 3], [5.0, 5.0, 5.0]), "band1.center")
    assert t.kind == "non-monotone" and t.steps == (0.0, 0.0)
    t = classify_trend(_table([0.5, 1.0, 2.0], [3.0, 2.0, 0.0]), "band1.center")
    assert t.kind == "decreasing" and t.slopes == (-2.0, -2.0)
    with pytest.raises(ValueError):
        classify_trend(_table([1, 2], [1.0, 2.0]), "band1.center")


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e10, 1e10, allow_nan=False), min_size=3, max_size=8))
def test_trend_matches_pairwise_oracle(feats):
    values = list(range(len(feats)))
    kind = classify_trend(_table(values, feats), "band1.center").kind
    pairs = [(feats[j] - feats[i]) for i in range(len(feats)) for j in range(i + 1, len(feats))]
    if all(p > 0 for p in pairs):
        expected = "increasing"
    elif all(p < 0 for p in pairs):
        expected = "decreasing"
    else:
        expected = "non-monotone"
    assert kind == expected


def _tz_table(series):
    recs = tuple(FeatureRecord(float(i), TzReport(tuple(TransmissionZero(f, -60.0) for f in fs)), ())
                 for i, fs in enumerate(series))
    return SweepTable("x", tuple(float(i) for i in range(len(series))), recs, "0", (0.0, 1.0, 2))


def test_tz_tracking_follows_nearest_zero():
    # the zero starts as tz1 but another zero overtakes it; tracking keeps identity
    table = _tz_table([[4.0e9, 4.5e9], [3.9e9, 4.45e9], [3.8e9, 3.85e9, 4.4e9], [3.6e9, 3.7e9, 4.35e9]])
    assert feature_series(table, "tz2") == [4.5e9, 4.45e9, 4.4e9, 4.35e9]
    assert classify_trend(table, "tz2").kind == "decreasing"


def test_tz_vanishing_is_a_discontinuity():
    table = _tz_table([[4.0e9, 6e9], [4.1e9, 6e9], [6e9], [6e9]])
    with pytest.raises(FeatureDiscontinuity) as info:
        classify_trend(table, "tz1")
    assert info.value.index == 2


def test_missing_band_is_a_discontinuity():
    table = _table([1, 2, 3], [1.0, 2.0, 3.0])
    with pytest.raises(FeatureDiscontinuity):
        classify_trend(table, "band2.center")


def test_target_invariants():
    with pytest.raises(ValueError):
        TuneTarget((BandTarget(1e9, 0.0),))
    with pytest.raises(ValueError):
        TuneTarget((BandTarget(1e9, 1e7, center_weight=0.0),))
    with pytest.raises(ValueError):
        TuneTarget((BandTarget(1e9, 1e7, center_weight=-1.0),))


def test_objective_missing_band_penalty():
    target = TuneTarget((BandTarget(1e9, 1e7, fbw=10.0, fbw_tol=1.0, fbw_weight=2.0),), (TzTarget(2e9, 3.0),))
    assert objective([], TzReport(), target) == 10 * 3.0 + 10 * 3.0
    band = BandReport(1.01e9, 0.96e9, 1.06e9, 10.5, 0.0, 20.0, 1)
    zeros = TzReport((TransmissionZero(2.02e9, -80.0),))
    assert objective([band], zeros, target) == pytest.approx(1.0 + 2 * 0.25 + 3.0 * 1.0)


def test_tune_recovers_quarter_wave():
    plain = parse_netlist(PLAIN)
    f_target = 5e9
    target = TuneTarget((BandTarget(f_target, 0.01 * f_target),))
    res = tune(plain, {"L": (10e-3, 20e-3)}, target, 300, GRID)
    exact = C0 / (4 * f_target)
    assert abs(res.best.value("L") - exact) / exact < 1e-3
    assert res.objective <= res.initial_objective
    assert all(a >= b for a, b in zip(res.trace, res.trace[1:]))
    assert res.evaluations <= 300 and len(res.trace) == res.evaluations


def test_tune_fixed_point(resonator):
    from dualband.netlist import bind_params
    _, bands = analyze(sweep(bind_params(resonator), GRID))
    band = min(bands, key=lambda b: abs(b.f_center - 5.35e9))
    target = TuneTarget((BandTarget(band.f_center, 1e7, fbw=band.fbw),))
    res = tune(resonator, {"L": (10e-3, 20e-3)}, target, 50, GRID)
    assert res.best.value("L") == resonator.params.value("L")
    assert abs(res.objective - res.initial_objective) <= 1e-12 and res.evaluations == 1


def test_tune_deterministic_and_pure(resonator):
    before = serialize(resonator)
    target = TuneTarget((BandTarget(4.5e9, 4.5e7),))
    free = {"L": (10e-3, 20e-3), "LC": (0.5e-9, 2e-9)}
    a = tune(resonator, free, target, 60, GRID, seed=7)
    b = tune(resonator, free, target, 60, GRID, seed=7)
    assert a.trace == b.trace and a.best == b.best
    assert serialize(resonator) == before


def test_tune_budget_one(resonator):
    res = tune(resonator, {"L": (10e-3, 20e-3)}, TuneTarget((BandTarget(5e9, 5e7),)), 1, GRID)
    assert res.evaluations == 1 and res.objective == res.initial_objective


def test_tune_preconditions(resonator):
    t = TuneTarget((BandTarget(5e9, 5e7),))
    with pytest.raises(ValueError):
        tune(resonator, {"L": (2e-2, 1e-2)}, t, 10, GRID)
    with pytest.raises(ValueError):
        tune(resonator, {"L": (1e-2, np.inf)}, t, 10, GRID)
    with pytest.raises(ValueError):
        tune(resonator, {"L": (1e-2, 2e-2)}, t, 0, GRID)


def test_tune_all_singular_fails():
    net = parse_netlist(".param L 13e-3 m\nport P1 a 50\nport P2 b 50\ntl T a b z0=50 len=1e-2\n"
                        "stub_short S a z0=50 len=$L\n")
    # every grid point sits on a stub singularity, whatever L is (within the bound)
    grid = np.array([2 * C0 / (4 * 13e-3)])
    with pytest.raises(TuneError, match="evaluations failed"):
        tune(net, {"L": (13e-3, 13e-3 * (1 + 1e-15))}, TuneTarget((BandTarget(5e9, 5e7),)), 5, grid)


def test_tune_goal_stops_early():
    plain = parse_netlist(PLAIN)
    target = TuneTarget((BandTarget(5e9, 5e7),))
    full = tune(plain, {"L": (10e-3, 20e-3)}, target, 300, GRID)
    early = tune(plain, {"L": (10e-3, 20e-3)}, target, 300, GRID, goal=0.25)
    assert early.objective <= 0.25 and early.evaluations < full.evaluations
    # the trace up to the stop is the same search
    assert early.trace == full.trace[:early.evaluations]
    # a goal the start already meets costs a single evaluation
    assert tune(plain, {"L": (10e-3, 20e-3)}, target, 300, GRID, goal=1e9).evaluations == 1
