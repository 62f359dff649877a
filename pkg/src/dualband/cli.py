"""Command-line front end: ``dualband <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import find_passbands, find_transmission_zeros, zeros_between_bands
from .modal import QsirModel, coupling_coefficient
from .netlist import NetlistError, bind_params, load_netlist, serialize, with_params
from .network import NetworkError, SParameterSet, linear_grid, sweep
from .tables import export_csv
from .touchstone import TouchstoneError, export_touchstone, load_touchstone
from .tuning import (BandTarget, FeatureDiscontinuity, SweepError, TuneError, TuneTarget, TzTarget,
                     classify_trend, parameter_sweep, tune)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    def __init__(self, message: str, usage_shown: bool = False):
        super().__init__(message)
        self.usage_shown = usage_shown


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message, usage_shown=True)


def parse_targets(text: str) -> tuple[TuneTarget, dict[str, tuple[float, float]], dict[str, float]]:
    """Read a key=value targets file.

    Keys: ``band<k>.center``, ``band<k>.center_tol`` (default 1% of the
    center), ``band<k>.fbw`` (percent), ``band<k>.fbw_tol``,
    ``band<k>.center_weight``, ``band<k>.fbw_weight``; ``tz<k>.frequency``,
    ``tz<k>.weight``, ``tz<k>.tol``; ``free.<param>=lo,hi``; and the options
    ``budget``, ``seed`` and ``goal`` (stop once the objective is this low).
    """
    bands: dict[int, dict[str, float]] = {}
    zeros: dict[int, dict[str, float]] = {}
    free: dict[str, tuple[float, float]] = {}
    options: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (t.strip() for t in line.partition("="))
        if not sep or not value:
            raise InputError(f"targets line {lineno}: expected key=value")
        try:
            if key.startswith("free."):
                lo, hi = (float(v) for v in value.split(","))
                free[key[5:]] = (lo, hi)
            elif key.startswith(("band", "tz")):
                head, _, attr = key.partition(".")
                group, idx = (bands, head[4:]) if head.startswith("band") else (zeros, head[2:])
                if head.startswith("tz") and not attr:
                    attr = "frequency"
                group.setdefault(int(idx), {})[attr] = float(value)
            elif key in ("budget", "seed"):
                options[key] = int(value)
            elif key == "goal":
                options[key] = float(value)
            else:
                raise InputError(f"targets line {lineno}: unknown key {key!r}")
        except ValueError:
            raise InputError(f"targets line {lineno}: bad value {value!r}") from None

    band_targets = []
    for k in sorted(bands):
        d = bands[k]
        if "center" not in d:
            raise InputError(f"band{k} has no center")
        extra = set(d) - {"center", "center_tol", "fbw", "fbw_tol", "center_weight", "fbw_weight"}
        if extra:
            raise InputError(f"band{k}: unknown fields {sorted(extra)}")
        band_targets.append(BandTarget(d["center"], d.get("center_tol", 0.01 * d["center"]), d.get("fbw"),
                                       d.get("fbw_tol", 1.0), d.get("center_weight", 1.0),
                                       d.get("fbw_weight", 1.0)))
    tz_targets = []
    for k in sorted(zeros):
        d = zeros[k]
        if "frequency" not in d:
            raise InputError(f"tz{k} has no frequency")
        tz_targets.append(TzTarget(d["frequency"], d.get("weight", 1.0), d.get("tol")))
    try:
        target = TuneTarget(tuple(band_targets), tuple(tz_targets))
    except ValueError as exc:
        raise InputError(f"targets: {exc}") from None
    return target, free, options


def _grid(args) -> np.ndarray:
    if not args.f_start < args.f_stop or args.f_start <= 0:
        raise UsageError("need 0 < --f-start < --f-stop")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    return linear_grid(args.f_start, args.f_stop, args.points)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _netlist(path: str):
    return bind_params(load_netlist(_existing(path)))


def _response(path: str, args) -> SParameterSet:
    """S-parameters from a netlist (simulated on the grid) or an .s2p file."""
    p = _existing(path)
    if p.suffix.lower() == ".s2p":
        return load_touchstone(p)
    return sweep(bind_params(load_netlist(p)), _grid(args))


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> None:
    s = sweep(_netlist(args.input), _grid(args))
    text = export_csv(s) if args.format == "csv" else export_touchstone(s, args.precision)
    _emit(text, args.output)
    if s.gaps:
        print(f"warning: {len(s.gaps)} singular frequencies skipped", file=sys.stderr)


def cmd_export(args) -> None:
    s = _response(args.input, args)
    _emit(export_csv(s) if args.format == "csv" else export_touchstone(s, args.precision), args.output)


def cmd_modes(args) -> None:
    if args.zc is None and args.yc is None:
        raise UsageError("give --zc or --yc")
    zc = args.zc if args.zc is not None else 1 / args.yc
    yc = args.yc if args.yc is not None else 1 / args.zc
    try:
        m = QsirModel(yc, zc, args.lm, args.cm, args.len, args.eps, args.c)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    r = coupling_coefficient(m)
    print(f"f_e={r.f_e / 1e9:.4f} GHz")
    print(f"f_o={r.f_o / 1e9:.4f} GHz")
    print(f"f_0={r.f_0 / 1e9:.4f} GHz")
    print(f"F={r.F:.4e}")
    print(f"M={r.M:.4g}")
    print(f"E={r.E:.4g}")
    print(f"C={r.C:.4g}")
    print(f"C_freq={r.C_freq:.4g}")
    print(f"dominance={r.dominance}")


def cmd_zeros(args) -> None:
    s = _response(args.input, args)
    tz = find_transmission_zeros(s, args.threshold).labelled([f"TZ{i}" for i in range(1, 100)])
    if args.format == "csv":
        _emit(export_csv(tz), args.output)
        return
    lines = [f"{z.label} {z.frequency / 1e9:.6f} GHz depth {z.depth:.1f} dB" for z in tz]
    bands = find_passbands(s, args.edge)
    if len(bands) >= 2:
        lines.append(f"between bands: {len(zeros_between_bands(tz, bands))}")
    _emit("\n".join(lines) + "\n" if lines else "", args.output)


def cmd_bands(args) -> None:
    s = _response(args.input, args)
    bands = find_passbands(s, args.edge)
    if args.format == "csv":
        _emit(export_csv(bands), args.output)
        return
    lines = [f"band{i} center {b.f_center / 1e9:.4f} GHz [{b.f_lo / 1e9:.4f}, {b.f_hi / 1e9:.4f}] "
             f"fbw {b.fbw:.2f}% il {b.il:.3f} dB rl {b.rl:.1f} dB poles {b.poles}"
             for i, b in enumerate(bands, 1)]
    _emit("\n".join(lines) + "\n" if lines else "", args.output)


def cmd_sweep(args) -> None:
    net = load_netlist(_existing(args.input))
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    values = np.linspace(args.start, args.stop, args.steps)
    table = parameter_sweep(net, args.param, values, _grid(args))
    _emit(export_csv(table), args.output)
    for feature in args.trend or ():
        t = classify_trend(table, feature)
        slopes = " ".join(f"{x:.6g}" for x in t.slopes)
        print(f"trend {feature}: {t.kind} (Hz per unit: {slopes})", file=sys.stderr)


def cmd_tune(args) -> None:
    net = load_netlist(_existing(args.input))
    target, free, options = parse_targets(_existing(args.targets).read_text(encoding="utf-8"))
    if not free:
        raise InputError("targets file declares no free.<param> bounds")
    budget = args.budget if args.budget is not None else int(options.get("budget", 500))
    seed = args.seed if args.seed is not None else int(options.get("seed", 0))
    goal = args.goal if args.goal is not None else float(options.get("goal", 0.0))
    res = tune(net, free, target, budget, _grid(args), seed=seed, goal=goal)
    for name, p in res.best.items():
        print(f"{name}={p.value!r}")
    print(f"objective={res.objective:.6g} (initial {res.initial_objective:.6g}, {res.evaluations} evaluations)")
    for i, b in enumerate(res.bands, 1):
        print(f"band{i} center {b.f_center / 1e9:.4f} GHz fbw {b.fbw:.2f}%")
    if args.output:
        tuned = with_params(net, {k: p.value for k, p in res.best.items()})
        Path(args.output).write_text(serialize(tuned), encoding="utf-8", newline="\n")


def _add_grid(p) -> None:
    p.add_argument("--f-start", type=float, default=1e9, help="first frequency in Hz")
    p.add_argument("--f-stop", type=float, default=12e9, help="last frequency in Hz")
    p.add_argument("--points", type=int, default=2001)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualband", description="Dual-band filter circuit analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="sweep a netlist and write S-parameters")
    p.add_argument("input")
    _add_grid(p)
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=("s2p", "csv"), default="s2p")
    p.add_argument("--precision", type=int, default=9)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="convert a netlist or .s2p file to Touchstone or CSV")
    p.add_argument("input")
    _add_grid(p)
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=("s2p", "csv"), default="csv")
    p.add_argument("--precision", type=int, default=9)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("modes", help="closed-form modes and coupling of a QSIR pair")
    p.add_argument("--yc", type=float)
    p.add_argument("--zc", type=float)
    p.add_argument("--lm", type=float, required=True, help="shared short inductance in H")
    p.add_argument("--cm", type=float, required=True, help="open-end gap capacitance in F")
    p.add_argument("--len", type=float, required=True, help="line length in m")
    p.add_argument("--eps", type=float, default=1.0)
    # the worked modal examples are quoted with c = 3e8; pass --c 299792458 for exact c0
    p.add_argument("--c", type=float, default=3e8, help="propagation speed in m/s (default 3e8)")
    p.set_defaults(func=cmd_modes)

    for name, func, text in (("zeros", cmd_zeros, "list transmission zeros"),
                             ("bands", cmd_bands, "list passbands")):
        p = sub.add_parser(name, help=text)
        p.add_argument("input", help=".net netlist or .s2p file")
        _add_grid(p)
        p.add_argument("--threshold", type=float, default=-40.0, help="TZ depth threshold in dB")
        p.add_argument("--edge", type=float, default=3.0, help="band edge level below peak in dB")
        p.add_argument("--format", choices=("text", "csv"), default="text")
        p.add_argument("-o", "--output")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="sweep a netlist parameter and tabulate features")
    p.add_argument("input")
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--trend", action="append", help="feature selector to classify, e.g. tz-between:1")
    _add_grid(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", help="tune free parameters toward band targets")
    p.add_argument("input")
    p.add_argument("--targets", required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--goal", type=float, help="stop once the objective reaches this value")
    _add_grid(p)
    p.add_argument("-o", "--output", help="write the tuned netlist here")
    p.set_defaults(func=cmd_tune)
    return parser


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return EXIT_OK
    except UsageError as exc:
        if not exc.usage_shown:
            parser.print_usage(sys.stderr)
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (NetlistError, TouchstoneError, InputError, SweepError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_INPUT
    except (NetworkError, TuneError, FeatureDiscontinuity, ValueError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
