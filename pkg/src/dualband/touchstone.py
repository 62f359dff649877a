"""Touchstone v1 (.s2p) writer and reader."""

from __future__ import annotations

import numpy as np

from .network import SParameterSet

_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
# v1 two-port column order
_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


class TouchstoneError(ValueError):
    pass


def _fmt_freq(f: float) -> str:
    return np.format_float_positional(float(f), trim="-")


def _fmt_value(x: float, precision: int) -> str:
    # snap round-off noise so exact fixtures print as 0
    if abs(x) < 10.0 ** -(precision + 3):
        x = 0.0
    text = f"{x + 0.0:.{precision}g}"
    return "0" if text in ("0", "-0") else text


def export_touchstone(s: SParameterSet, precision: int = 9) -> str:
    """Render S-parameters as Touchstone v1 text in real/imaginary format."""
    data = np.asarray(s.s)
    if data.ndim != 3 or data.shape[1:] != (2, 2):
        raise TouchstoneError("Touchstone export supports 2-port data only")
    if precision < 1:
        raise ValueError("precision must be at least 1")
    lines = [f"# HZ S RI R {_fmt_freq(s.z_ref)}"]
    for f, m in zip(s.f, data):
        fields = [_fmt_freq(f)]
        for i, j in _ORDER:
            fields += [_fmt_value(m[i, j].real, precision), _fmt_value(m[i, j].imag, precision)]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def read_touchstone(text: str) -> SParameterSet:
    """Parse 2-port Touchstone v1 text (RI, MA or DB data)."""
    unit, fmt, z_ref = "GHZ", "MA", 50.0
    numbers: list[float] = []
    seen_option = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if seen_option:
                continue  # only the first option line counts
            seen_option = True
            toks = line[1:].upper().split()
            i = 0
            while i < len(toks):
                t = toks[i]
                if t in _UNITS:
                    unit = t
                elif t in ("RI", "MA", "DB"):
                    fmt = t
                elif t == "R" and i + 1 < len(toks):
                    z_ref = float(toks[i + 1])
                    i += 1
                elif t != "S":
                    raise TouchstoneError(f"line {lineno}: unsupported option {t!r}")
                i += 1
            continue
        try:
            numbers += [float(t) for t in line.split()]
        except ValueError:
            raise TouchstoneError(f"line {lineno}: bad number in {raw!r}") from None
    if not numbers or len(numbers) % 9:
        raise TouchstoneError("expected 9 numbers per frequency point for 2-port data")
    rows = np.array(numbers).reshape(-1, 9)
    f = rows[:, 0] * _UNITS[unit]
    a, b = rows[:, 1::2], rows[:, 2::2]
    if fmt == "RI":
        vals = a + 1j * b
    elif fmt == "MA":
        vals = a * np.exp(1j * np.deg2rad(b))
    else:
        vals = 10 ** (a / 20) * np.exp(1j * np.deg2rad(b))
    s = np.empty((len(f), 2, 2), dtype=complex)
    for k, (i, j) in enumerate(_ORDER):
        s[:, i, j] = vals[:, k]
    return SParameterSet(f, s, z_ref)


def load_touchstone(path) -> SParameterSet:
    with open(path, encoding="utf-8") as fh:
        return read_touchstone(fh.read())
