"""Frequency-domain two-port engine.

Chain (ABCD) matrices for ladders, nodal admittance assembly for arbitrary
topologies, Y/S/ABCD conversions and vectorized frequency sweeps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .netlist import (
    GROUND,
    AdmittanceInverter,
    Capacitor,
    CoupledLine,
    Element,
    ImpedanceInverter,
    Inductor,
    Netlist,
    OpenStub,
    ShortedStub,
    TransmissionLine,
    validate,
)

logger = logging.getLogger(__name__)

C0 = 299_792_458.0
NEPER_PER_DB = np.log(10.0) / 20.0
# |sinh|, |tanh| or |cosh| below this marks an element singularity
SINGULAR_EPS = 1e-9
SINGULAR_FRACTION_LIMIT = 0.10


class NetworkError(ArithmeticError):
    """Numerical failure in network evaluation."""


class SingularFrequencyError(NetworkError):
    def __init__(self, frequency: float, element: str | None = None, reason: str = ""):
        self.frequency = frequency
        self.element = element
        where = f" in element {element}" if element else ""
        super().__init__(f"singular at f={frequency:.9g} Hz{where}{': ' + reason if reason else ''}")


class NotALadderError(NetworkError):
    pass


# ---------------------------------------------------------------------------
# Chain matrices


@dataclass(frozen=True)
class ChainMatrix:
    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def identity(cls) -> "ChainMatrix":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_array(cls, m: np.ndarray) -> "ChainMatrix":
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "ChainMatrix") -> "ChainMatrix":
        return ChainMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


def _theta(length: float, eps_eff: float, loss: float, f: np.ndarray) -> np.ndarray:
    """Complex propagation gamma*l for a line section."""
    beta = 2 * np.pi * f * np.sqrt(eps_eff) / C0
    alpha = loss * NEPER_PER_DB
    return (alpha + 1j * beta) * length


def _line_abcd(el, f: np.ndarray) -> np.ndarray:
    gl = _theta(el.length, el.eps_eff, el.loss, f)
    ch, sh = np.cosh(gl), np.sinh(gl)
    z0 = el.z0
    out = np.empty(f.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ch
    out[..., 0, 1] = z0 * sh
    out[..., 1, 0] = sh / z0
    out[..., 1, 1] = ch
    return out


def _branch_admittance(el: Element, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Admittance of a two-terminal element and a mask of singular points."""
    w = 2 * np.pi * f
    ok = np.zeros(f.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(el, Capacitor):
            y = 1j * w * el.c
        elif isinstance(el, Inductor):
            y = 1 / (1j * w * el.l)
        elif isinstance(el, ShortedStub):
            t = np.tanh(_theta(el.length, el.eps_eff, el.loss, f))
            ok = np.abs(t) < SINGULAR_EPS
            y = 1 / (el.z0 * t)
        elif isinstance(el, OpenStub):
            gl = _theta(el.length, el.eps_eff, el.loss, f)
            ok = np.abs(np.cosh(gl)) < SINGULAR_EPS
            y = np.tanh(gl) / el.z0
        else:
            raise TypeError(f"{el.name}: not a two-terminal impedance element")
    return np.broadcast_to(y, f.shape).astype(complex), ok


def _twoport_y(el: Element, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Short-circuit Y-matrix (..., 2, 2) of a two-port element."""
    out = np.zeros(f.shape + (2, 2), dtype=complex)
    bad = np.zeros(f.shape, dtype=bool)
    if isinstance(el, TransmissionLine):
        gl = _theta(el.length, el.eps_eff, el.loss, f)
        sh = np.sinh(gl)
        bad = np.abs(sh) < SINGULAR_EPS
        with np.errstate(divide="ignore", invalid="ignore"):
            y11 = np.cosh(gl) / (el.z0 * sh)
            y12 = -1 / (el.z0 * sh)
        out[..., 0, 0] = out[..., 1, 1] = y11
        out[..., 0, 1] = out[..., 1, 0] = y12
    elif isinstance(el, AdmittanceInverter):
        out[..., 0, 1] = out[..., 1, 0] = 1j * el.j
    elif isinstance(el, ImpedanceInverter):
        out[..., 0, 1] = out[..., 1, 0] = 1j / el.k
    else:
        raise TypeError(f"{el.name}: not a two-port element")
    return out, bad


def _coupled_line_y(el: CoupledLine, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """4x4 Y-matrix ordered (n1, n2, n3, n4) from even/odd line modes."""
    gl = _theta(el.length, el.eps_eff, 0.0, f)
    sh, ch = np.sinh(gl), np.cosh(gl)
    bad = np.abs(sh) < SINGULAR_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        ys, ym = [], []
        for z in (el.z0_even, el.z0_odd):
            ys.append(ch / (z * sh))
            ym.append(-1 / (z * sh))
    (se, so), (me, mo) = ys, ym
    out = np.zeros(f.shape + (4, 4), dtype=complex)
    # block (line a) = (Ye + Yo)/2, cross block = (Ye - Yo)/2
    for (i, j), (e, o) in {(0, 0): (se, so), (0, 1): (me, mo), (1, 0): (me, mo), (1, 1): (se, so)}.items():
        out[..., i, j] = out[..., i + 2, j + 2] = (e + o) / 2
        out[..., i, j + 2] = out[..., i + 2, j] = (e - o) / 2
    return out, bad


def element_stamp(el: Element, f: np.ndarray) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Nodes, (..., k, k) admittance block and singular mask for one element."""
    f = np.asarray(f, dtype=float)
    if isinstance(el, (Capacitor, Inductor, ShortedStub, OpenStub)):
        y, bad = _branch_admittance(el, f)
        block = np.empty(f.shape + (2, 2), dtype=complex)
        block[..., 0, 0] = block[..., 1, 1] = y
        block[..., 0, 1] = block[..., 1, 0] = -y
        return el.nodes, block, bad
    if isinstance(el, CoupledLine):
        block, bad = _coupled_line_y(el, f)
        return el.nodes, block, bad
    block, bad = _twoport_y(el, f)
    return el.nodes, block, bad


def element_chain(el: Element, f: float) -> ChainMatrix:
    """Chain matrix of a two-terminal element at frequency ``f``.

    Impedance elements (capacitors, inductors, stubs) become shunt branches
    when one terminal is ground and series branches otherwise.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    if isinstance(el, CoupledLine):
        raise TypeError(f"{el.name}: four-terminal elements need nodal assembly")
    return ChainMatrix.from_array(_chain_stack(el, np.array([float(f)]))[0])


def _chain_stack(el: Element, f: np.ndarray) -> np.ndarray:
    out = np.zeros(f.shape + (2, 2), dtype=complex)
    if isinstance(el, TransmissionLine):
        if el.is_shunt:
            y = _twoport_y(el, f)[0][..., 0, 0]
            out[..., 0, 0] = out[..., 1, 1] = 1
            out[..., 1, 0] = y
            return out
        return _line_abcd(el, f)
    if isinstance(el, AdmittanceInverter):
        out[..., 0, 1] = 1j / el.j
        out[..., 1, 0] = 1j * el.j
        return out
    if isinstance(el, ImpedanceInverter):
        out[..., 0, 1] = 1j * el.k
        out[..., 1, 0] = 1j / el.k
        return out
    y, _ = _branch_admittance(el, f)
    out[..., 0, 0] = out[..., 1, 1] = 1
    if el.is_shunt:
        out[..., 1, 0] = y
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out[..., 0, 1] = 1 / y
    return out


def cascade(matrices: Sequence[ChainMatrix]) -> ChainMatrix:
    """Ordered product, input side first."""
    if not matrices:
        raise ValueError("cascade needs at least one matrix")
    out = matrices[0]
    for m in matrices[1:]:
        out = out @ m
    return out


# ---------------------------------------------------------------------------
# Conversions


def chain_to_s(m: ChainMatrix | np.ndarray, z_ref: float = 50.0) -> np.ndarray:
    """ABCD -> 2x2 S (works on stacks of shape (..., 2, 2))."""
    if z_ref <= 0:
        raise ValueError("z_ref must be positive")
    arr = m.as_array() if isinstance(m, ChainMatrix) else np.asarray(m, dtype=complex)
    a, b, c, d = arr[..., 0, 0], arr[..., 0, 1], arr[..., 1, 0], arr[..., 1, 1]
    den = a + b / z_ref + c * z_ref + d
    if np.any(np.abs(den) < 1e-30):
        raise NetworkError("singular chain-to-S conversion")
    s = np.empty(arr.shape, dtype=complex)
    s[..., 0, 0] = (a + b / z_ref - c * z_ref - d) / den
    s[..., 0, 1] = 2 * (a * d - b * c) / den
    s[..., 1, 0] = 2 / den
    s[..., 1, 1] = (-a + b / z_ref - c * z_ref + d) / den
    return s


def s_to_chain(s: np.ndarray, z_ref: float = 50.0) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    s11, s12, s21, s22 = s[..., 0, 0], s[..., 0, 1], s[..., 1, 0], s[..., 1, 1]
    if np.any(np.abs(s21) < 1e-30):
        raise NetworkError("S21 = 0 has no chain representation")
    out = np.empty(s.shape, dtype=complex)
    den = 2 * s21
    out[..., 0, 0] = ((1 + s11) * (1 - s22) + s12 * s21) / den
    out[..., 0, 1] = z_ref * ((1 + s11) * (1 + s22) - s12 * s21) / den
    out[..., 1, 0] = ((1 - s11) * (1 - s22) - s12 * s21) / (den * z_ref)
    out[..., 1, 1] = ((1 - s11) * (1 + s22) + s12 * s21) / den
    return out


def _zref_diag(z_ref, n: int) -> np.ndarray:
    return np.sqrt(np.broadcast_to(np.asarray(z_ref, dtype=float), (n,)))


def y_to_s(y: np.ndarray, z_ref: float | Sequence[float] = 50.0) -> np.ndarray:
    """S = (I - G Y G)(I + G Y G)^-1 with G = diag(sqrt(z_ref))."""
    y = np.asarray(y, dtype=complex)
    n = y.shape[-1]
    g = _zref_diag(z_ref, n)
    yn = y * g[:, None] * g[None, :]
    eye = np.eye(n)
    # (I - Yn)(I + Yn)^-1 == (I + Yn)^-1 (I - Yn) since both are functions of Yn
    return np.linalg.solve(eye + yn, eye - yn)


def s_to_y(s: np.ndarray, z_ref: float | Sequence[float] = 50.0) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    n = s.shape[-1]
    g = 1 / _zref_diag(z_ref, n)
    eye = np.eye(n)
    yn = np.linalg.solve(eye + s, eye - s)
    return yn * g[:, None] * g[None, :]


# ---------------------------------------------------------------------------
# Nodal analysis


@dataclass(frozen=True)
class AdmittanceMatrix:
    nodes: tuple[str, ...]
    y: np.ndarray

    def index(self, node: str) -> int:
        return self.nodes.index(node)


def _require_numeric(netlist: Netlist) -> None:
    if not netlist.is_numeric:
        raise ValueError("netlist has unbound parameters; call bind_params first")


def _nodal_stack(netlist: Netlist, f: np.ndarray) -> tuple[tuple[str, ...], np.ndarray, dict[str, np.ndarray]]:
    nodes = netlist.nodes
    index = {n: i for i, n in enumerate(nodes)}
    y = np.zeros(f.shape + (len(nodes), len(nodes)), dtype=complex)
    singular: dict[str, np.ndarray] = {}
    for el in netlist.elements:
        el_nodes, block, bad = element_stamp(el, f)
        if np.any(bad):
            singular[el.name] = bad
            block = np.where(bad[..., None, None], 0, block)
        for a, na in enumerate(el_nodes):
            if na == GROUND:
                continue
            for b, nb in enumerate(el_nodes):
                if nb == GROUND:
                    continue
                y[..., index[na], index[nb]] += block[..., a, b]
    return nodes, y, singular


def assemble_nodal(netlist: Netlist, f: float) -> AdmittanceMatrix:
    """Node-indexed admittance matrix with the ground row/column removed."""
    _require_numeric(netlist)
    if f <= 0:
        raise ValueError("frequency must be positive")
    nodes, y, singular = _nodal_stack(netlist, np.array([float(f)]))
    if singular:
        raise SingularFrequencyError(f, next(iter(singular)), "element admittance is singular")
    return AdmittanceMatrix(nodes, y[0])


def reduce_to_ports(y: AdmittanceMatrix | np.ndarray, ports: Sequence, nodes: Sequence[str] | None = None,
                    frequency: float | None = None) -> np.ndarray:
    """Schur complement of ``y`` onto the port nodes (in the given order)."""
    if isinstance(y, AdmittanceMatrix):
        nodes, mat = y.nodes, y.y
    else:
        mat = np.asarray(y, dtype=complex)
        if nodes is None:
            nodes = list(range(mat.shape[-1]))
    nodes = list(nodes)
    p = [nodes.index(getattr(port, "node", port)) for port in ports]
    internal = [i for i in range(len(nodes)) if i not in p]
    ypp = mat[np.ix_(p, p)]
    if not internal:
        return ypp
    yii = mat[np.ix_(internal, internal)]
    yip = mat[np.ix_(internal, p)]
    ypi = mat[np.ix_(p, internal)]
    cond = np.linalg.cond(yii)
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularFrequencyError(frequency if frequency is not None else float("nan"),
                                     reason="internal node block is singular")
    return ypp - ypi @ np.linalg.solve(yii, yip)


def port_admittance(netlist: Netlist, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Port Y-matrices over ``f`` (NaN where singular) and the singular mask."""
    _require_numeric(netlist)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    nodes, y, singular = _nodal_stack(netlist, f)
    bad = np.zeros(f.shape, dtype=bool)
    for mask in singular.values():
        bad |= mask
    p = [nodes.index(port.node) for port in netlist.ports]
    internal = [i for i in range(len(nodes)) if i not in p]
    ypp = y[:, p][:, :, p]
    if internal:
        yii = y[:, internal][:, :, internal]
        cond = np.linalg.cond(yii)
        bad |= ~np.isfinite(cond) | (cond > 1e15)
        yii = np.where(bad[:, None, None], np.eye(len(internal)), yii)
        ypi = y[:, p][:, :, internal]
        yip = y[:, internal][:, :, p]
        ypp = ypp - ypi @ np.linalg.solve(yii, yip)
    ypp = np.where(bad[:, None, None], np.nan, ypp)
    return ypp, bad


def _terminated_s(netlist: Netlist, f: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """S via the port-terminated nodal system: S = 2 G Zt G - I.

    Terminating the ports keeps the system regular at frequencies where
    the unterminated port Y-matrix has poles.
    """
    nodes, y, singular = _nodal_stack(netlist, f)
    bad = np.zeros(f.shape, dtype=bool)
    for mask in singular.values():
        bad |= mask
    p = [nodes.index(port.node) for port in netlist.ports]
    zr = np.array([port.z_ref for port in netlist.ports])
    for k, i in enumerate(p):
        y[..., i, i] += 1 / zr[k]
    cond = np.linalg.cond(y)
    bad |= ~np.isfinite(cond) | (cond > 1e15)
    y = np.where(bad[:, None, None], np.eye(len(nodes)), y)
    rhs = np.zeros((len(nodes), len(p)), dtype=complex)
    for k, i in enumerate(p):
        rhs[i, k] = 1.0
    zt = np.linalg.solve(y, np.broadcast_to(rhs, f.shape + rhs.shape))[:, p, :]
    g = 1 / np.sqrt(zr)
    s = 2 * zt * g[:, None] * g[None, :] - np.eye(len(p))
    return s, bad, singular


# ---------------------------------------------------------------------------
# Ladder (chain) path


def ladder_chain(netlist: Netlist, f: np.ndarray) -> np.ndarray:
    """Cascade the netlist as a ladder from port 1 to port 2.

    Raises :class:`NotALadderError` if the topology is not a simple path of
    series two-ports with shunt branches hanging off path nodes.
    """
    _require_numeric(netlist)
    if len(netlist.ports) != 2:
        raise NotALadderError("ladder analysis needs two ports")
    f = np.atleast_1d(np.asarray(f, dtype=float))
    shunts: dict[str, list[Element]] = {}
    series: list[Element] = []
    for el in netlist.elements:
        if isinstance(el, CoupledLine):
            raise NotALadderError(f"{el.name}: coupled lines are not ladder elements")
        if GROUND in el.nodes:
            node = el.n1 if el.n2 == GROUND else el.n2
            if el.n1 == GROUND and isinstance(el, TransmissionLine):
                raise NotALadderError(f"{el.name}: line grounded at its input end")
            shunts.setdefault(node, []).append(el)
        else:
            series.append(el)
    node = netlist.ports[0].node
    end = netlist.ports[1].node
    total = np.broadcast_to(np.eye(2, dtype=complex), f.shape + (2, 2)).copy()
    visited = {node}
    remaining = list(series)
    while True:
        for el in shunts.pop(node, []):
            total = total @ _chain_stack(el, f)
        if node == end:
            break
        nxt = [el for el in remaining if node in el.nodes]
        if len(nxt) != 1:
            raise NotALadderError(f"node {node!r} has {len(nxt)} series continuations")
        el = nxt[0]
        remaining.remove(el)
        m = _chain_stack(el, f)
        if el.n2 == node:
            # reversed two-port: swap A and D
            m = m[..., ::-1, ::-1].swapaxes(-1, -2)
        total = total @ m
        node = el.n2 if el.n1 == node else el.n1
        if node in visited:
            raise NotALadderError("loop in series path")
        visited.add(node)
    if remaining or shunts:
        raise NotALadderError("elements off the port-to-port path")
    return total


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SParameterSet:
    """Two-port scattering data on a strictly increasing frequency grid."""

    f: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0
    gaps: tuple[float, ...] = ()
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if f.ndim != 1 or len(f) == 0:
            raise ValueError("frequency grid must be a nonempty 1-D array")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if s.shape != (len(f), 2, 2):
            raise ValueError(f"expected S of shape ({len(f)}, 2, 2), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("S-parameters must be finite")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "s", s)

    def __len__(self) -> int:
        return len(self.f)

    @property
    def s11(self) -> np.ndarray:
        return self.s[:, 0, 0]

    @property
    def s21(self) -> np.ndarray:
        return self.s[:, 1, 0]

    @property
    def s12(self) -> np.ndarray:
        return self.s[:, 0, 1]

    @property
    def s22(self) -> np.ndarray:
        return self.s[:, 1, 1]

    def db(self, i: int, j: int) -> np.ndarray:
        return to_db(self.s[:, i - 1, j - 1])


def to_db(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.maximum(20 * np.log10(np.abs(x)), -400.0)


def linear_grid(f_start: float, f_stop: float, points: int) -> np.ndarray:
    if not (0 < f_start < f_stop) or points < 2:
        raise ValueError("need 0 < f_start < f_stop and points >= 2")
    return np.linspace(f_start, f_stop, int(points))


def _evaluate(netlist: Netlist, f: np.ndarray) -> np.ndarray:
    s, bad, singular = _terminated_s(netlist, np.atleast_1d(np.asarray(f, dtype=float)))
    if np.any(bad):
        culprit = next((n for n, m in singular.items() if np.any(m)), None)
        raise SingularFrequencyError(float(np.atleast_1d(f)[bad][0]), culprit)
    return s


def sweep(netlist: Netlist, grid: Sequence[float] | np.ndarray) -> SParameterSet:
    """S-parameters of a validated, fully numeric two-port netlist.

    Frequencies where an ideal element is singular are dropped from the
    result and listed in ``gaps``.  More than 10% singular points abort.
    """
    _require_numeric(netlist)
    report = validate(netlist)
    if report:
        raise ValueError("invalid netlist: " + "; ".join(report))
    if len(netlist.ports) != 2:
        raise ValueError("sweep needs a two-port netlist")
    zr = {p.z_ref for p in netlist.ports}
    if len(zr) != 1:
        raise ValueError("ports with different reference impedances are not supported")
    f = np.asarray(grid, dtype=float)
    if f.ndim != 1 or len(f) == 0 or np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise ValueError("grid must be strictly increasing and positive")

    s, bad, singular = _terminated_s(netlist, f)
    if np.count_nonzero(bad) > SINGULAR_FRACTION_LIMIT * len(f):
        names = ", ".join(sorted(singular)) or "internal block"
        raise NetworkError(f"{np.count_nonzero(bad)} of {len(f)} frequencies singular ({names})")
    if np.any(bad):
        logger.debug("dropping %d singular frequencies", np.count_nonzero(bad))
    return SParameterSet(f[~bad], s[~bad], zr.pop(), tuple(float(x) for x in f[bad]),
                         evaluator=lambda x, _n=netlist: _evaluate(_n, x))
