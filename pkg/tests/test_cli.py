import re

import pytest

from dualband.analysis import find_transmission_zeros
from dualband.cli import main, parse_targets, InputError
from dualband.netlist import bind_params, load_netlist
from dualband.network import linear_grid, sweep
from dualband.reference import reference_text
from dualband.touchstone import load_touchstone

RESONATOR = """.param L 14e-3 m
port P1 p1 50
port P2 p2 50
jinv J1 p1 a j=0.01
stub_short R a z0=50 len=$L
jinv J2 a p2 j=0.01
"""
NOTCH = "port P1 a 50\nport P2 b 50\ntl T a b z0=50 len=1e-2\nind L a m l=2e-9\ncap C m 0 c=1e-12\n"


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in (("ref.net", reference_text()), ("res.net", RESONATOR), ("notch.net", NOTCH),
                       ("bad.net", "port P1 a 50\nwidget W a b\n")):
        paths[name] = tmp_path / name
        paths[name].write_text(text, encoding="utf-8")
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_modes_worked_example(capsys):
    code, out, _ = run(capsys, "modes", "--yc", 0.02, "--zc", 50, "--lm", 5e-11, "--cm", 1e-14, "--len", 13e-3,
                       "--eps", 1)
    assert code == 0
    assert "f_e=5.5147 GHz" in out and "f_o=5.6391 GHz" in out and "C=0.04363" in out.splitlines()


def test_modes_exact_speed_of_light(capsys):
    code, out, _ = run(capsys, "modes", "--zc", 50, "--lm", 5e-11, "--cm", 1e-14, "--len", 13e-3,
                       "--c", 299792458)
    assert code == 0 and "f_e=5.5111 GHz" in out


def test_reference_zeros_between_bands(capsys, files):
    code, out, _ = run(capsys, "zeros", files["ref.net"], "--f-start", 1e9, "--f-stop", 12e9, "--points", 2001)
    assert code == 0
    n = int(re.search(r"between bands: (\d+)", out).group(1))
    assert n >= 3 and out.startswith("TZ1 ")


def test_reference_bands(capsys, files):
    code, out, _ = run(capsys, "bands", files["ref.net"])
    assert code == 0 and len(out.splitlines()) == 2 and "poles 3" in out.splitlines()[1]


def test_simulate_then_zeros_matches_memory(capsys, files, tmp_path):
    s2p = tmp_path / "notch.s2p"
    assert run(capsys, "simulate", files["notch.net"], "--points", 501, "-o", s2p)[0] == 0
    grid = linear_grid(1e9, 12e9, 501)
    mem = find_transmission_zeros(sweep(bind_params(load_netlist(files["notch.net"])), grid))
    back = find_transmission_zeros(load_touchstone(s2p))
    assert len(mem) == len(back) == 1
    assert abs(mem[0].frequency - back[0].frequency) < grid[1] - grid[0]
    code, out, _ = run(capsys, "zeros", s2p)
    assert code == 0 and f"{mem[0].frequency / 1e9:.6f}" in out


def test_export_csv(capsys, files):
    code, out, _ = run(capsys, "export", files["res.net"], "--points", 3)
    assert code == 0 and len(out.splitlines()) == 4 and out.startswith("frequency_Hz,")


def test_sweep_with_trend(capsys, files):
    code, out, err = run(capsys, "sweep", files["res.net"], "--param", "L", "--from", 12e-3, "--to", 14e-3,
                         "--steps", 3, "--points", 801, "--trend", "band1.center")
    assert code == 0 and len(out.splitlines()) == 4
    assert "trend band1.center: decreasing" in err


def test_tune_with_targets_file(capsys, files, tmp_path):
    targets = tmp_path / "t.txt"
    targets.write_text("band1.center=5e9  # quarter wave at 15 mm\nfree.L=10e-3,20e-3\nbudget=200\ngoal=0.01\n")
    out_net = tmp_path / "tuned.net"
    code, out, _ = run(capsys, "tune", files["res.net"], "--targets", targets, "--points", 1101, "-o", out_net)
    assert code == 0
    value = float(re.search(r"^L=(\S+)", out, re.M).group(1))
    assert abs(value - 299792458 / 2e10) / value < 0.01
    assert load_netlist(out_net).params.value("L") == value


def test_parse_targets():
    target, free, options = parse_targets("band1.center=3.45e9\nband1.fbw=11.0\nband2.center=4.9e9\n"
                                          "tz1=4e9\nfree.L=1,2\nseed=3\ngoal=0.5\n")
    assert [b.center for b in target.bands] == [3.45e9, 4.9e9] and target.bands[0].fbw == 11.0
    assert target.bands[0].center_tol == pytest.approx(3.45e7) and target.zeros[0].frequency == 4e9
    assert free == {"L": (1.0, 2.0)} and options == {"seed": 3, "goal": 0.5}
    for bad in ("band1.fbw=3\n", "nonsense=1\n", "band1.center\n", "band1.center=abc\n"):
        with pytest.raises(InputError):
            parse_targets(bad)


@pytest.mark.parametrize("argv, code", [
    (["zeros", "missing.net"], 1),
    (["frobnicate"], 1),
    ([], 1),
    (["modes", "--lm", "1e-10", "--cm", "1e-14", "--len", "1e-2"], 1),
    (["simulate", "{res}", "--f-start", "5e9", "--f-stop", "1e9"], 1),
    (["simulate", "{res}", "--points", "1"], 1),
    (["bands", "{bad}"], 2),
    (["modes", "--zc", "-5", "--lm", "1e-10", "--cm", "1e-14", "--len", "1e-2"], 2),
    (["sweep", "{res}", "--param", "nope", "--from", "1", "--to", "2"], 2),
    (["sweep", "{res}", "--param", "L", "--from", "1e-2", "--to", "2e-2", "--steps", "3", "--points", "101",
      "--trend", "tz9"], 3),
])
def test_failure_exit_codes(capsys, files, argv, code):
    argv = [a.format(res=files["res.net"], bad=files["bad.net"]) for a in argv]
    got, _, err = run(capsys, *argv)
    assert got == code
    errors = [l for l in err.splitlines() if l.startswith("error:")]
    assert len(errors) == 1
    if code == 1:
        assert "usage:" in err


def test_missing_file_shows_usage(capsys):
    code, _, err = run(capsys, "zeros", "does-not-exist.net")
    assert code == 1 and "usage:" in err and "error: no such file" in err
