"""Transmission zeros, passbands and related figures of merit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .network import SingularFrequencyError, SParameterSet, to_db

TZ_LABELS = ("TZ1", "TZ2", "TZ3", "TZ4", "TZ5", "TZ6")
# |S11| below this is round-off, not structure
NOISE_FLOOR_DB = -240.0


@dataclass(frozen=True)
class TransmissionZero:
    frequency: float
    depth: float  # |S21| in dB at the zero
    label: str | None = None


@dataclass(frozen=True)
class TzReport:
    zeros: tuple[TransmissionZero, ...] = ()

    def __len__(self) -> int:
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([z.frequency for z in self.zeros])

    def between(self, f_lo: float, f_hi: float) -> list[TransmissionZero]:
        return [z for z in self.zeros if f_lo < z.frequency < f_hi]

    def labelled(self, labels: Sequence[str] = TZ_LABELS) -> "TzReport":
        """Tag zeros TZ1, TZ2, ... in frequency order."""
        return TzReport(tuple(TransmissionZero(z.frequency, z.depth, lab)
                              for z, lab in zip(self.zeros, labels)))


@dataclass(frozen=True)
class BandReport:
    f_center: float
    f_lo: float
    f_hi: float
    fbw: float  # percent
    il: float  # dB, >= 0
    rl: float  # dB, worst in-band return loss
    poles: int

    @property
    def bandwidth(self) -> float:
        return self.f_hi - self.f_lo

    def contains(self, f: float) -> bool:
        return self.f_lo <= f <= self.f_hi


def _strict_minima(y: np.ndarray) -> np.ndarray:
    return np.flatnonzero((y[1:-1] < y[:-2]) & (y[1:-1] < y[2:])) + 1


def _golden_refine(fun, a: float, b: float, c: float, rtol: float) -> float:
    res = minimize_scalar(fun, bracket=(a, b, c), method="golden", options={"xtol": rtol})
    x = float(res.x)
    return x if a <= x <= c else b


def _rational_interpolant(f: np.ndarray, y: np.ndarray):
    """|P/Q| through five complex samples, P and Q quadratic with Q(0) = 1.

    A zero next to a pole is what makes a notch narrow, and a polynomial
    interpolant cannot follow that; a low-order rational one can.
    """
    x0, h = f[2], f[3] - f[2]
    x = (f - x0) / h
    a = np.column_stack([np.ones_like(x), x, x**2, -y * x, -y * x**2])
    c = np.linalg.solve(a, y)

    def fun(v):
        u = (v - x0) / h
        return float(abs((c[0] + c[1] * u + c[2] * u * u) / (1 + c[3] * u + c[4] * u * u)))
    return fun


def find_transmission_zeros(s: SParameterSet, threshold_db: float = -40.0, rtol: float = 1e-10) -> TzReport:
    """Grid-local minima of |S21|, refined in frequency, that reach ``threshold_db``.

    Every strict grid minimum is refined and then tested against the
    threshold, so narrow notches that fall between grid points are still
    found.  Refinement is a golden-section search between the neighbouring
    grid points.  It evaluates the source network when the data carries one and
    falls back to a local complex rational interpolant otherwise (e.g.
    Touchstone data), or a cubic spline next to the grid ends.  Points at
    the ends of the grid are never reported.
    """
    f = s.f
    mag = np.abs(s.s21)
    db = to_db(mag)
    zeros = []
    for i in _strict_minima(db):
        a, b, c = f[i - 1], f[i], f[i + 1]
        if s.evaluator is not None:
            def fun(x, _ev=s.evaluator):
                try:
                    return float(np.abs(_ev(np.array([x]))[0, 1, 0]))
                except SingularFrequencyError:
                    # ideal element singular exactly here; step off the point
                    return float(np.abs(_ev(np.array([x * (1 + 1e-8)]))[0, 1, 0]))
        else:
            fun = None
            if 2 <= i < len(f) - 2:
                try:
                    fun = _rational_interpolant(f[i - 2:i + 3], s.s21[i - 2:i + 3])
                except np.linalg.LinAlgError:
                    pass
        if fun is None:
            lo, hi = max(i - 3, 0), min(i + 4, len(f))
            spline_re = CubicSpline(f[lo:hi], s.s21[lo:hi].real)
            spline_im = CubicSpline(f[lo:hi], s.s21[lo:hi].imag)

            def fun(x, _r=spline_re, _i=spline_im):
                return float(np.hypot(_r(x), _i(x)))
        fz = _golden_refine(fun, a, b, c, rtol)
        depth = float(to_db(np.array(fun(fz))))
        if fun(fz) > mag[i]:
            fz, depth = float(b), float(db[i])
        if depth > threshold_db:
            continue
        zeros.append(TransmissionZero(float(fz), depth))
    return TzReport(tuple(zeros))


def _edge(f: np.ndarray, db: np.ndarray, inside: int, outside: int, level: float) -> float:
    """Linear interpolation of the level crossing between two grid points."""
    y0, y1 = db[inside], db[outside]
    if y0 == y1:
        return float(f[inside])
    t = (y0 - level) / (y0 - y1)
    return float(f[inside] + t * (f[outside] - f[inside]))


def find_passbands(s: SParameterSet, edge_db: float = 3.0, peak_window_db: float = 10.0) -> list[BandReport]:
    """Contiguous regions within ``edge_db`` of a local |S21| maximum.

    Only maxima within ``peak_window_db`` of the global maximum count as
    in-band peaks; weaker stopband lobes never seed a band.  Regions
    separated by fewer than two grid steps are merged.
    """
    f = s.f
    db = to_db(s.s21)
    n = len(f)
    gmax = db.max()
    left = np.r_[-np.inf, db[:-1]]
    right = np.r_[db[1:], -np.inf]
    peaks = np.flatnonzero((db >= left) & (db >= right) & (db >= gmax - peak_window_db))
    peaks = peaks[np.argsort(-db[peaks], kind="stable")]

    regions: list[list[int]] = []
    covered = np.zeros(n, dtype=bool)
    for p in peaks:
        if covered[p]:
            continue
        level = db[p] - edge_db
        lo = p
        while lo > 0 and db[lo - 1] >= level:
            lo -= 1
        hi = p
        while hi < n - 1 and db[hi + 1] >= level:
            hi += 1
        covered[lo:hi + 1] = True
        regions.append([lo, hi, p])

    regions.sort()
    merged: list[list[int]] = []
    for r in regions:
        if merged and r[0] - merged[-1][1] <= 2:
            prev = merged[-1]
            prev[1] = max(prev[1], r[1])
            if db[r[2]] > db[prev[2]]:
                prev[2] = r[2]
        else:
            merged.append(list(r))

    bands = []
    for lo, hi, p in merged:
        peak = db[lo:hi + 1].max()
        level = peak - edge_db
        f_lo = float(f[0]) if lo == 0 else _edge(f, db, lo, lo - 1, level)
        f_hi = float(f[-1]) if hi == n - 1 else _edge(f, db, hi, hi + 1, level)
        if not f_hi > f_lo:
            continue
        fc = 0.5 * (f_lo + f_hi)
        rl = float(-to_db(s.s11[lo:hi + 1]).max())
        band = BandReport(fc, f_lo, f_hi, 100 * (f_hi - f_lo) / fc, max(0.0, float(-peak)), rl, 0)
        bands.append(BandReport(**{**band.__dict__, "poles": count_reflection_poles(s, band)}))
    return bands


def count_reflection_poles(s: SParameterSet, band: BandReport, below_db: float = -10.0) -> int:
    """Number of strict in-band local minima of |S11| below ``below_db``."""
    db = np.maximum(to_db(s.s11), NOISE_FLOOR_DB)
    idx = _strict_minima(db)
    f = s.f
    return int(sum(1 for i in idx if band.f_lo <= f[i] <= band.f_hi and db[i] < below_db))


def isolation(s: SParameterSet, f_lo: float, f_hi: float) -> float:
    """Worst-case rejection over [f_lo, f_hi], i.e. -max |S21| in dB."""
    sel = (s.f >= f_lo) & (s.f <= f_hi)
    if not np.any(sel):
        raise ValueError(f"no grid points in [{f_lo:g}, {f_hi:g}] Hz")
    return float(-to_db(s.s21[sel]).max())


def zeros_between_bands(tz: TzReport, bands: Sequence[BandReport]) -> list[TransmissionZero]:
    """Zeros strictly between the first two passbands."""
    if len(bands) < 2:
        return []
    return tz.between(bands[0].f_hi, bands[1].f_lo)
