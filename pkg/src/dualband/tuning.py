"""Parameter sweeps with feature tracking, trend classification and tuning."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .analysis import BandReport, TzReport, find_passbands, find_transmission_zeros
from .netlist import Netlist, NetlistError, ParamTable, bind_params, serialize, validate
from .network import NetworkError, SParameterSet, sweep


@dataclass(frozen=True)
class FeatureRecord:
    value: float
    zeros: TzReport
    bands: tuple[BandReport, ...]


@dataclass(frozen=True)
class SweepTable:
    param: str
    values: tuple[float, ...]
    records: tuple[FeatureRecord, ...]
    netlist_hash: str
    grid: tuple[float, float, int]

    def __len__(self) -> int:
        return len(self.records)


class SweepError(ValueError):
    def __init__(self, message: str, value: float | None = None):
        self.value = value
        super().__init__(message)


class FeatureDiscontinuity(ValueError):
    """A tracked feature vanished or jumped (e.g. two zeros merged)."""

    def __init__(self, feature: str, index: int, value: float):
        self.feature = feature
        self.index = index
        self.value = value
        super().__init__(f"feature {feature!r} lost at sweep point {index} (parameter value {value:g})")


def netlist_hash(netlist: Netlist) -> str:
    return hashlib.sha256(serialize(netlist).encode()).hexdigest()[:16]


def analyze(s: SParameterSet, threshold_db: float = -40.0, edge_db: float = 3.0) -> tuple[TzReport, list[BandReport]]:
    return find_transmission_zeros(s, threshold_db), find_passbands(s, edge_db)


def _grid_key(grid: np.ndarray) -> tuple[float, float, int]:
    return (float(grid[0]), float(grid[-1]), len(grid))


# figure-axis names accepted for netlist parameters
PARAM_ALIASES = {"L_n": "L_h"}


def resolve_param(netlist: Netlist, name: str) -> str:
    """Map an alias such as ``L_n`` onto the parameter the netlist declares."""
    if name in netlist.params:
        return name
    target = PARAM_ALIASES.get(name)
    if target is not None and target in netlist.params:
        return target
    return name


def parameter_sweep(netlist: Netlist, param: str, values: Sequence[float], grid: Sequence[float],
                    threshold_db: float = -40.0, edge_db: float = 3.0, workers: int | None = None) -> SweepTable:
    """Bind ``param`` to each value, simulate and extract zeros and bands."""
    values = [float(v) for v in values]
    param = resolve_param(netlist, param)
    if param not in netlist.params:
        raise SweepError(f"unknown parameter {param!r}")
    d = np.diff(values)
    if len(values) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise SweepError("sweep values must be strictly monotone")
    grid = np.asarray(grid, dtype=float)

    def run(v: float) -> FeatureRecord:
        try:
            bound = bind_params(netlist, {param: v})
        except NetlistError as exc:
            raise SweepError(f"cannot bind {param}={v:g}: {exc}", v) from exc
        report = validate(bound)
        if report:
            raise SweepError(f"cannot bind {param}={v:g}: " + "; ".join(report), v)
        zeros, bands = analyze(sweep(bound, grid), threshold_db, edge_db)
        return FeatureRecord(v, zeros, tuple(bands))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(run, values))
    else:
        records = [run(v) for v in values]
    return SweepTable(param, tuple(values), tuple(records), netlist_hash(netlist), _grid_key(grid))


# ---------------------------------------------------------------------------
# Feature selection


FeatureSelector = Callable[[FeatureRecord], "float | None"]


def _nth(seq, k: int):
    try:
        return seq[k - 1] if k > 0 else seq[k]
    except IndexError:
        return None


def selector(feature: str | FeatureSelector) -> FeatureSelector:
    """Build a feature extractor from a short string.

    ``band<k>.<center|lo|hi|fbw|il|rl|poles>``, ``tz<k>``, ``tz-between:<k>``
    (k-th zero between bands 1 and 2; negative counts from the top),
    ``tz-above:<band>`` / ``tz-below:<band>`` (nearest zero outside a band)
    and ``tz-near:<Hz>``.
    """
    if callable(feature):
        return feature
    s = feature.strip()
    if s.startswith("band"):
        k, _, attr = s[4:].partition(".")
        attr = {"center": "f_center", "lo": "f_lo", "hi": "f_hi"}.get(attr or "center", attr)

        def band_feature(r: FeatureRecord):
            b = _nth(r.bands, int(k))
            return None if b is None else float(getattr(b, attr))
        return band_feature
    if s.startswith("tz-between:"):
        k = int(s.split(":", 1)[1])

        def between(r: FeatureRecord):
            if len(r.bands) < 2:
                return None
            z = _nth(r.zeros.between(r.bands[0].f_hi, r.bands[1].f_lo), k)
            return None if z is None else z.frequency
        return between
    if s.startswith(("tz-above:", "tz-below:")):
        kind, k = s.split(":", 1)
        k = int(k)

        def outside(r: FeatureRecord):
            b = _nth(r.bands, k)
            if b is None:
                return None
            if kind == "tz-above":
                cand = [z.frequency for z in r.zeros if z.frequency > b.f_hi]
                return min(cand) if cand else None
            cand = [z.frequency for z in r.zeros if z.frequency < b.f_lo]
            return max(cand) if cand else None
        return outside
    if s.startswith("tz-near:"):
        target = float(s.split(":", 1)[1])

        def near(r: FeatureRecord):
            if not len(r.zeros):
                return None
            return min((z.frequency for z in r.zeros), key=lambda f: abs(f - target))
        return near
    if s.startswith("tz"):
        k = int(s[2:])

        def nth_zero(r: FeatureRecord):
            z = _nth(r.zeros.zeros, k)
            return None if z is None else z.frequency
        return nth_zero
    raise ValueError(f"unknown feature selector {feature!r}")


def feature_series(table: SweepTable, feature: str | FeatureSelector, gate: float = 0.1) -> list[float | None]:
    """Feature value per record.

    Zero selectors are tracked: after the first record each zero is matched
    to the nearest zero of the next record, provided it moved by less than
    ``gate`` (relative).  A failed match yields ``None``.
    """
    sel = selector(feature)
    out = [sel(r) for r in table.records]
    if not (isinstance(feature, str) and feature.startswith("tz")) or not out or out[0] is None:
        return out
    tracked: list[float | None] = [out[0]]
    prev = out[0]
    for r in table.records[1:]:
        if prev is None or not len(r.zeros):
            tracked.append(None)
            prev = None
            continue
        f = min((z.frequency for z in r.zeros), key=lambda x: abs(x - prev))
        if abs(f - prev) > gate * prev:
            tracked.append(None)
            prev = None
        else:
            tracked.append(f)
            prev = f
    return tracked


@dataclass(frozen=True)
class Trend:
    kind: str  # 'increasing', 'decreasing' or 'non-monotone'
    features: tuple[float, ...]
    steps: tuple[float, ...]  # feature differences between consecutive records
    slopes: tuple[float, ...]  # steps per parameter unit

    @property
    def monotone(self) -> bool:
        return self.kind != "non-monotone"


def classify_trend(table: SweepTable, feature: str | FeatureSelector, gate: float = 0.1) -> Trend:
    """Classify how a feature moves as the swept parameter increases."""
    series = feature_series(table, feature, gate)
    if len(series) < 3:
        raise ValueError("trend classification needs at least three records")
    for i, v in enumerate(series):
        if v is None:
            raise FeatureDiscontinuity(str(feature), i, table.values[i])
    feats = np.array(series, dtype=float)
    vals = np.array(table.values, dtype=float)
    steps = np.diff(feats)
    slopes = steps / np.diff(vals)
    if np.all(slopes > 0):
        kind = "increasing"
    elif np.all(slopes < 0):
        kind = "decreasing"
    else:
        kind = "non-monotone"
    return Trend(kind, tuple(map(float, feats)), tuple(map(float, steps)), tuple(map(float, slopes)))


# ---------------------------------------------------------------------------
# Tuning


@dataclass(frozen=True)
class BandTarget:
    center: float
    center_tol: float
    fbw: float | None = None  # percent
    fbw_tol: float = 1.0
    center_weight: float = 1.0
    fbw_weight: float = 1.0


@dataclass(frozen=True)
class TzTarget:
    frequency: float
    weight: float = 1.0
    tol: float | None = None  # Hz; defaults to 1% of the frequency


@dataclass(frozen=True)
class TuneTarget:
    bands: tuple[BandTarget, ...]
    zeros: tuple[TzTarget, ...] = ()
    missing_penalty: float = 10.0

    def __post_init__(self):
        weights = []
        for b in self.bands:
            if b.center_tol <= 0 or b.fbw_tol <= 0:
                raise ValueError("tolerances must be positive")
            weights += [b.center_weight, b.fbw_weight if b.fbw is not None else 0.0]
        for z in self.zeros:
            if z.tol is not None and z.tol <= 0:
                raise ValueError("tolerances must be positive")
            weights.append(z.weight)
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ValueError("weights must be non-negative and not all zero")


def objective(bands: Sequence[BandReport], zeros: TzReport, target: TuneTarget) -> float:
    """Weighted sum of squared normalized errors.

    Each target band is matched to the nearest unused passband; a missing
    band or zero costs ``missing_penalty`` times its weight.
    """
    total = 0.0
    free = list(bands)
    for bt in target.bands:
        w = bt.center_weight + (bt.fbw_weight if bt.fbw is not None else 0.0)
        if not free:
            total += target.missing_penalty * w
            continue
        b = min(free, key=lambda x: abs(x.f_center - bt.center))
        free.remove(b)
        total += bt.center_weight * ((b.f_center - bt.center) / bt.center_tol) ** 2
        if bt.fbw is not None:
            total += bt.fbw_weight * ((b.fbw - bt.fbw) / bt.fbw_tol) ** 2
    freqs = list(zeros.frequencies) if len(zeros) else []
    for zt in target.zeros:
        if not freqs:
            total += target.missing_penalty * zt.weight
            continue
        f = min(freqs, key=lambda x: abs(x - zt.frequency))
        tol = zt.tol if zt.tol is not None else 0.01 * zt.frequency
        total += zt.weight * ((f - zt.frequency) / tol) ** 2
    return float(total)


@dataclass(frozen=True)
class TuneResult:
    best: ParamTable
    netlist: Netlist
    objective: float
    initial_objective: float
    bands: tuple[BandReport, ...]
    zeros: TzReport
    trace: tuple[float, ...]  # best-seen objective after each evaluation
    evaluations: int = field(default=0)


class TuneError(RuntimeError):
    pass


class _Stop(Exception):
    """Budget spent or goal reached."""


def tune(netlist: Netlist, free_params: Mapping[str, tuple[float, float]], target: TuneTarget, budget: int,
         grid: Sequence[float], seed: int = 0, initial_step: float = 0.1, threshold_db: float = -40.0,
         edge_db: float = 3.0, goal: float = 0.0) -> TuneResult:
    """Nelder-Mead search over bounded parameters toward ``target``.

    Parameters are searched in coordinates normalized to their bounds; the
    initial simplex steps ``initial_step`` of each range and candidates are
    clamped into bounds before evaluation.  When a simplex collapses before
    the budget is spent the search restarts from the best point with a
    freshly oriented simplex (drawn from ``seed``).  The search ends when the
    budget is spent or the best objective reaches ``goal``.  The best point
    seen is returned, so the final objective never exceeds the initial one.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    free_params = {resolve_param(netlist, n): b for n, b in free_params.items()}
    names = list(free_params)
    if not names:
        raise ValueError("no free parameters")
    lo = np.array([float(free_params[n][0]) for n in names])
    hi = np.array([float(free_params[n][1]) for n in names])
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
        raise ValueError("bounds must be finite with lo < hi")
    for n in names:
        if n not in netlist.params:
            raise ValueError(f"unknown parameter {n!r}")
    grid = np.asarray(grid, dtype=float)

    u0 = np.clip((np.array([netlist.params.value(n) for n in names]) - lo) / (hi - lo), 0, 1)
    state = {"count": 0, "best": math.inf, "best_u": u0, "best_eval": None, "trace": [], "errors": 0,
             "last_error": None}
    cache: dict[bytes, float] = {}

    def evaluate(u: np.ndarray) -> float:
        u = np.clip(u, 0, 1)
        key = u.tobytes()
        if key in cache:
            return cache[key]
        if state["count"] >= budget or state["best"] <= goal:
            raise _Stop
        state["count"] += 1
        values = dict(zip(names, lo + u * (hi - lo)))
        try:
            bound = bind_params(netlist, values)
            s = sweep(bound, grid)
            zeros, bands = analyze(s, threshold_db, edge_db)
            val = objective(bands, zeros, target)
        except (NetworkError, NetlistError, ValueError) as exc:
            state["errors"] += 1
            state["last_error"] = exc
            val, bands, zeros, bound = math.inf, [], TzReport(), None
        if val < state["best"]:
            state.update(best=val, best_u=u.copy(), best_eval=(bound, bands, zeros))
        state["trace"].append(state["best"])
        cache[key] = val
        return val

    rng = np.random.default_rng(seed)
    try:
        evaluate(u0)
        start = u0
        restarts = 0
        while state["best"] > goal:
            n = len(names)
            if restarts == 0:
                basis = np.eye(n)
            else:
                basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
            step = initial_step / (1 + restarts)
            simplex = [start]
            for i in range(n):
                direction = basis[i] * step
                cand = start + direction
                if np.any(cand > 1) or np.any(cand < 0):
                    cand = start - direction
                simplex.append(np.clip(cand, 0, 1))
            before = state["best"]
            minimize(evaluate, start, method="Nelder-Mead",
                     options={"initial_simplex": np.array(simplex), "maxfev": budget, "xatol": 1e-10,
                              "fatol": 1e-14 * max(before, 1e-300)})
            start = state["best_u"]
            restarts += 1
            if state["best"] >= before and restarts > 3:
                break
    except _Stop:
        pass

    if state["best_eval"] is None:
        raise TuneError(f"all {state['count']} evaluations failed; last error: {state['last_error']}")
    bound, bands, zeros = state["best_eval"]
    best_values = dict(zip(names, lo + state["best_u"] * (hi - lo)))
    if state["best_u"] is u0:
        best_values = {n: netlist.params.value(n) for n in names}
    best = ParamTable({n: best_values[n] for n in names})
    return TuneResult(best, bound, state["best"], state["trace"][0], tuple(bands), zeros,
                      tuple(state["trace"]), state["count"])
