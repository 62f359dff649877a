"""CSV renderings of sweeps, S-parameter sets and reports."""

from __future__ import annotations

import csv
import io
from typing import Sequence

from .analysis import BandReport, TzReport
from .network import SParameterSet, to_db
from .tuning import SweepTable


def _num(x: float) -> str:
    return repr(float(x))


def _write(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _sparams_csv(s: SParameterSet) -> str:
    header = ["frequency_Hz"]
    for name in ("S11", "S21", "S12", "S22"):
        header += [f"{name}_re", f"{name}_im"]
    header += ["S11_dB", "S21_dB"]
    s11db, s21db = to_db(s.s11), to_db(s.s21)
    rows = []
    for k, f in enumerate(s.f):
        row = [_num(f)]
        for v in (s.s11[k], s.s21[k], s.s12[k], s.s22[k]):
            row += [_num(v.real), _num(v.imag)]
        rows.append(row + [_num(s11db[k]), _num(s21db[k])])
    return _write(header, rows)


_BAND_COLS = ("f_center_Hz", "f_lo_Hz", "f_hi_Hz", "fbw_pct", "il_dB", "rl_dB", "poles")


def _band_fields(b: BandReport) -> list[str]:
    return [_num(b.f_center), _num(b.f_lo), _num(b.f_hi), _num(b.fbw), _num(b.il), _num(b.rl), str(b.poles)]


def _bands_csv(bands: Sequence[BandReport]) -> str:
    return _write(["band", *_BAND_COLS], [[str(i), *_band_fields(b)] for i, b in enumerate(bands, 1)])


def _zeros_csv(tz: TzReport) -> str:
    labelled = tz.labelled([f"TZ{i}" for i in range(1, len(tz) + 1)])
    return _write(["label", "frequency_Hz", "depth_dB"],
                  [[z.label, _num(z.frequency), _num(z.depth)] for z in labelled])


def _sweep_csv(table: SweepTable) -> str:
    n_bands = max((len(r.bands) for r in table.records), default=0)
    header = [f"{table.param}_value", "n_zeros", "zeros_Hz"]
    for k in range(1, n_bands + 1):
        header += [f"band{k}_{c}" for c in _BAND_COLS]
    rows = []
    for r in table.records:
        row = [_num(r.value), str(len(r.zeros)), " ".join(_num(f) for f in r.zeros.frequencies)]
        for k in range(n_bands):
            row += _band_fields(r.bands[k]) if k < len(r.bands) else [""] * len(_BAND_COLS)
        rows.append(row)
    return _write(header, rows)


def export_csv(data) -> str:
    """CSV text for an SParameterSet, SweepTable, TzReport or list of BandReports."""
    if isinstance(data, SParameterSet):
        return _sparams_csv(data)
    if isinstance(data, SweepTable):
        return _sweep_csv(data)
    if isinstance(data, TzReport):
        return _zeros_csv(data)
    if isinstance(data, BandReport):
        return _bands_csv([data])
    if isinstance(data, (list, tuple)) and all(isinstance(b, BandReport) for b in data):
        return _bands_csv(data)
    raise TypeError(f"cannot render {type(data).__name__} as CSV")
