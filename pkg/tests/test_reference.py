import numpy as np
import pytest
from scipy.optimize import brentq

from dualband.analysis import isolation, zeros_between_bands
from dualband.netlist import bind_params, validate, with_params
from dualband.network import C0, sweep
from dualband.reference import BAND_CENTERS, load_reference, reference_grid
from dualband.tuning import analyze, classify_trend, feature_series, parameter_sweep


@pytest.fixture(scope="module")
def ref():
    return load_reference()


@pytest.fixture(scope="module")
def response(ref):
    s = sweep(bind_params(ref), reference_grid())
    zeros, bands = analyze(s)
    return s, zeros, bands


def test_reference_is_valid(ref):
    assert len(validate(ref)) == 0
    for name in ("eps", "yy", "L_h", "L_s", "L_2"):
        assert name in ref.params


def test_two_bands_near_targets(response):
    _, _, bands = response
    assert len(bands) == 2
    for b, f in zip(bands, BAND_CENTERS):
        assert abs(b.f_center - f) / f < 0.05
    assert bands[1].poles == 3


def test_zero_counts(response):
    _, zeros, bands = response
    assert len(zeros_between_bands(zeros, bands)) >= 3
    assert len(zeros) >= 5
    assert not any(b.contains(z.frequency) for b in bands for z in zeros)


def test_between_band_isolation(response):
    # central half of the gap between the two 3 dB bands
    s, _, bands = response
    lo, hi = bands[0].f_hi, bands[1].f_lo
    w = hi - lo
    assert isolation(s, lo + w / 4, hi - w / 4) >= 20.0


def test_yy_moves_lower_edge_only(ref):
    yy = ref.params.value("yy")
    table = parameter_sweep(ref, "yy", yy * np.linspace(0.9, 1.2, 5), reference_grid())
    lo = feature_series(table, "band1.lo")
    hi = feature_series(table, "band1.hi")
    assert max(lo) - min(lo) > 0.02 * BAND_CENTERS[0]
    assert (max(hi) - min(hi)) / min(hi) < 0.01
    assert classify_trend(table, "band1.lo").kind != "non-monotone"


def test_l_n_is_an_alias_for_l_h(ref):
    values = ref.params.value("L_h") * np.array([1.0, 1.02, 1.04])
    a = parameter_sweep(ref, "L_n", values, reference_grid(801))
    b = parameter_sweep(ref, "L_h", values, reference_grid(801))
    assert a.records == b.records and a.param == b.param == "L_h"


def _roots(g, lo, hi, n=4001):
    f = np.linspace(lo, hi, n)
    v = g(f)
    return [brentq(g, a, b, xtol=1e-3) for a, b, va, vb in zip(f, f[1:], v, v[1:])
            if np.sign(va) != np.sign(vb) and abs(va - vb) < 1.0]


def _section_zeros(ref, lo, hi):
    """Closed-form zeros of the cascaded sections and the port stubs.

    Independent of the network engine: a capacitor across a line blocks where
    the two paths' transfer admittances cancel, and an open stub shorts its
    node at a quarter wave.
    """
    p = ref.params.value
    vel = C0 / np.sqrt(p("eps"))

    def gap_line(c, z, length):
        return lambda f: 2 * np.pi * f * c * z * np.sin(2 * np.pi * f * length / vel) - 1

    def t_section(f):
        w = 2 * np.pi * f
        th, ph, z = w * p("L_III") / vel, w * p("L_s") / vel, p("Z_III")
        return w * p("C_II") * z * np.sin(th) * (2 * np.cos(th) + z / p("Z_S") * np.sin(th) / np.tan(ph)) - 1

    expected = []
    for g in (gap_line(p("C_I"), p("Z_M1"), p("L_h")), gap_line(p("C_5"), p("Z_2"), p("L_2")), t_section):
        roots = _roots(g, lo, hi)
        assert len(roots) == 1
        expected += roots
    return expected + [vel / (4 * p("L_Oa")), vel / (4 * p("L_Ob"))]


def test_section_zeros_match_closed_form(ref, response):
    _, zeros, bands = response
    for f in _section_zeros(ref, bands[0].f_hi, bands[1].f_lo):
        assert np.min(np.abs(zeros.frequencies - f)) / f < 1e-6


def test_detuned_channel_keeps_section_zeros(ref, response):
    # the sections sit outside both channels, so detuning a channel leaves their zeros in place
    _, _, bands = response
    det = with_params(ref, {"L_H": ref.params.value("L_H") * 0.99})
    zeros, _ = analyze(sweep(bind_params(det), reference_grid()))
    for f in _section_zeros(ref, bands[0].f_hi, bands[1].f_lo):
        assert np.min(np.abs(zeros.frequencies - f)) / f < 1e-6
