"""Even/odd-mode analysis of a coupled quarter-wave SIR pair.

Closed forms for the even- and odd-mode resonances of a QSIR pair that
shares a common short (inductance ``lm``, the magnetic path) and couples
across an open-end gap (capacitance ``cm``, the electric path), the M - E
coupling decomposition, symmetric bisection of netlists and a numerical
resonance search used as an independent check on the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .netlist import (
    GROUND,
    Capacitor,
    Element,
    Inductor,
    Netlist,
    OpenStub,
    Port,
    ShortedStub,
    TransmissionLine,
    _LineLike,
    validate,
)
from .network import C0, port_admittance

BALANCED_TOL = 1e-12


@dataclass(frozen=True)
class QsirModel:
    """Circuit symbols of a QSIR pair.

    ``c`` is the propagation speed used in the closed forms; it defaults to
    the exact vacuum speed of light.
    """

    yc: float  # S
    zc: float  # ohm
    lm: float  # H
    cm: float  # F
    length: float  # m
    eps_re: float = 1.0
    c: float = C0

    def __post_init__(self):
        if not self.zc > 0:
            raise ValueError("zc must be positive")
        if abs(self.yc * self.zc - 1) > 1e-12:
            raise ValueError(f"yc * zc must be 1 (got {self.yc * self.zc!r})")
        if self.lm < 0 or self.cm < 0:
            raise ValueError("lm and cm must be non-negative")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if self.eps_re < 1:
            raise ValueError("eps_re must be >= 1")
        if not self.c > 0:
            raise ValueError("c must be positive")

    @classmethod
    def from_impedance(cls, zc: float, lm: float, cm: float, length: float, eps_re: float = 1.0,
                       c: float = C0) -> "QsirModel":
        return cls(1 / zc, zc, lm, cm, length, eps_re, c)

    @property
    def delay(self) -> float:
        """One-way line delay sqrt(eps_re) * L / c."""
        return math.sqrt(self.eps_re) * self.length / self.c


@dataclass(frozen=True)
class ModalResult:
    f_e: float
    f_o: float
    f_0: float
    F: float
    M: float
    E: float
    C: float
    C_freq: float
    dominance: str  # 'M-dominant', 'E-dominant' or 'balanced'


def even_mode_freq(m: QsirModel) -> float:
    return 1.0 / (4.0 * (2.0 * m.yc * m.lm + m.delay))


def odd_mode_freq(m: QsirModel) -> float:
    return 1.0 / (4.0 * (2.0 * m.zc * m.cm + m.delay))


def coupling_coefficient(m: QsirModel) -> ModalResult:
    """Mode frequencies and the coupling split into magnetic and electric parts.

    ``C`` (= M - E) decides dominance.  ``C_freq`` is the same coupling
    estimated from the mean and even-mode frequencies; the two agree only
    to leading order and ``C_freq`` is kept for comparison.
    """
    f_e = even_mode_freq(m)
    f_o = odd_mode_freq(m)
    f_0 = (f_e + f_o) / 2
    tau = m.delay
    F = 4 * (tau + m.yc * m.lm + m.cm * m.zc) / (2 * m.yc * m.lm + tau) ** 2
    M = F * m.yc * m.lm
    E = F * m.cm * m.zc
    C = M - E
    w0, we = 2 * math.pi * f_0, 2 * math.pi * f_e
    c_freq = (w0**2 - we**2) / (w0**2 + we**2)
    if abs(C) < BALANCED_TOL:
        dominance = "balanced"
    else:
        dominance = "M-dominant" if C > 0 else "E-dominant"
    return ModalResult(f_e, f_o, f_0, F, M, E, C, c_freq, dominance)


# ---------------------------------------------------------------------------
# Symmetric bisection


@dataclass(frozen=True)
class SymmetryHalves:
    even_half: Netlist
    odd_half: Netlist


class SymmetryError(ValueError):
    pass


def _scaled_crossing(el: Element, node: str, mode: str) -> Element | None:
    """Half-circuit image of a series element joining ``node`` to its mirror."""
    if mode == "even":
        # magnetic wall: no current crosses the plane
        if isinstance(el, TransmissionLine):
            return OpenStub(el.name, node, GROUND, el.z0, el.length / 2, el.eps_eff, el.loss)
        return None
    if isinstance(el, Capacitor):
        return Capacitor(el.name, node, GROUND, 2 * el.c)
    if isinstance(el, Inductor):
        return Inductor(el.name, node, GROUND, el.l / 2)
    if isinstance(el, TransmissionLine):
        return ShortedStub(el.name, node, GROUND, el.z0, el.length / 2, el.eps_eff, el.loss)
    raise SymmetryError(f"{el.name}: {type(el).__name__} cannot straddle the symmetry plane")


def _halved_on_plane(el: Element) -> Element:
    """Even-mode share of an element lying in the plane (half its admittance)."""
    if isinstance(el, Capacitor):
        return replace(el, c=el.c / 2)
    if isinstance(el, Inductor):
        return replace(el, l=el.l * 2)
    if isinstance(el, _LineLike):
        return replace(el, z0=el.z0 * 2)
    raise SymmetryError(f"{el.name}: cannot halve a {type(el).__name__} lying in the plane")


def _same_values(a: Element, b: Element) -> bool:
    return type(a) is type(b) and a.values() == b.values()


def split_symmetric(netlist: Netlist, plane: Sequence[tuple[str, str]]) -> SymmetryHalves:
    """Bisect a mirror-symmetric netlist into even- and odd-mode one-ports.

    ``plane`` lists mirror node pairs ``(a, b)``; the first node of each pair
    is kept.  Nodes that appear in no pair lie on the symmetry plane.  The
    even half opens every plane crossing and halves elements lying in the
    plane; the odd half grounds the plane.
    """
    if not netlist.is_numeric:
        raise ValueError("bind parameters before splitting")
    mirror: dict[str, str] = {GROUND: GROUND}
    side_a: set[str] = set()
    for a, b in plane:
        if a == b or a in mirror or b in mirror:
            raise SymmetryError(f"bad pair ({a}, {b})")
        mirror[a], mirror[b] = b, a
        side_a.add(a)
    for n in netlist.nodes:
        mirror.setdefault(n, n)
    on_plane = {n for n, m in mirror.items() if n == m and n != GROUND}

    by_nodes: dict[tuple[str, ...], list[Element]] = {}
    for el in netlist.elements:
        by_nodes.setdefault(el.nodes, []).append(el)

    def has_mirror(el: Element) -> bool:
        image = tuple(mirror[n] for n in el.nodes)
        candidates = by_nodes.get(image, []) + by_nodes.get(image[::-1], [])
        self_image = image in (el.nodes, el.nodes[::-1])
        return any(_same_values(el, other) for other in candidates if other is not el or self_image)

    even: list[Element] = []
    odd: list[Element] = []
    for el in netlist.elements:
        nodes = set(el.nodes) - {GROUND}
        if not has_mirror(el):
            raise SymmetryError(f"{el.name} has no mirror image under the declared pairing")
        if nodes <= on_plane:
            even.append(_halved_on_plane(el))
            continue
        if len(el.nodes) == 2 and el.nodes[1] == mirror[el.nodes[0]] and el.nodes[0] != el.nodes[1]:
            node = el.nodes[0] if el.nodes[0] in side_a else el.nodes[1]
            if node not in side_a:
                continue
            for mode, out in (("even", even), ("odd", odd)):
                image = _scaled_crossing(el, node, mode)
                if image is not None:
                    out.append(image)
            continue
        if nodes & side_a:
            if any(n not in side_a and n not in on_plane for n in nodes):
                raise SymmetryError(f"{el.name} couples non-mirror nodes across the plane")
            even.append(el)
            odd.append(_ground_plane(el, on_plane))
        # elements entirely on side b are the mirrors of side-a elements

    ports_a = tuple(p for p in netlist.ports if p.node in side_a or p.node in on_plane)
    even_net = _prune(Netlist(tuple(even), ports_a, netlist.params))
    odd_net = _prune(Netlist(tuple(odd), tuple(p for p in ports_a if p.node not in on_plane), netlist.params))
    for label, half in (("even", even_net), ("odd", odd_net)):
        report = validate(half)
        if report:
            raise SymmetryError(f"{label} half is not a valid one-port: " + "; ".join(report))
    return SymmetryHalves(even_net, odd_net)


def _ground_plane(el: Element, on_plane: set[str]) -> Element:
    updates = {}
    for attr in ("n1", "n2", "n3", "n4"):
        if hasattr(el, attr) and getattr(el, attr) in on_plane:
            updates[attr] = GROUND
    return replace(el, **updates) if updates else el


def _prune(net: Netlist) -> Netlist:
    """Drop elements shorted to ground at both ends."""
    kept = tuple(el for el in net.elements if any(n != GROUND for n in el.nodes))
    return Netlist(kept, net.ports, net.params)


# ---------------------------------------------------------------------------
# Numerical resonance search


def input_admittance(one_port: Netlist, f: np.ndarray) -> np.ndarray:
    """Y_in at the single port (NaN where the network is singular)."""
    if len(one_port.ports) != 1:
        raise ValueError("resonance search needs a one-port netlist")
    y, _ = port_admittance(one_port, np.atleast_1d(f))
    return y[:, 0, 0]


def resonance_search(one_port: Netlist, f_lo: float, f_hi: float, points: int = 1001,
                     rtol: float = 1e-12) -> list[float]:
    """Parallel-type resonances: zeros of Im(Y_in) crossed with positive slope.

    A sign-change scan over ``points`` (at least 1001) frequencies brackets
    each root; Brent's method then refines it to ``rtol`` relative.
    """
    if not 0 < f_lo < f_hi:
        raise ValueError("need 0 < f_lo < f_hi")
    points = max(int(points), 1001)
    grid = np.linspace(f_lo, f_hi, points)
    b = input_admittance(one_port, grid).imag

    def g(x: float) -> float:
        v = input_admittance(one_port, np.array([x]))[0].imag
        if not np.isfinite(v):
            v = input_admittance(one_port, np.array([x * (1 + 1e-13)]))[0].imag
        return float(v)

    roots = []
    if b[0] == 0.0 and b[1] > 0.0:
        roots.append(float(grid[0]))
    for i in range(points - 1):
        b0, b1 = b[i], b[i + 1]
        if not (np.isfinite(b0) and np.isfinite(b1)) or not (b0 < 0.0 <= b1):
            continue
        if b1 == 0.0:
            roots.append(float(grid[i + 1]))
        else:
            roots.append(float(brentq(g, grid[i], grid[i + 1], xtol=1e-300, rtol=max(rtol, 4e-16))))
    return roots


# ---------------------------------------------------------------------------
# QSIR pair as a circuit


def qsir_pair_netlist(m: QsirModel, z_ref: float = 50.0) -> tuple[Netlist, list[tuple[str, str]]]:
    """Two quarter-wave lines shorted through a shared inductor ``lm`` and
    coupled at their open ends by a gap capacitor ``cm``.

    Returns the netlist and its mirror pairing.  The line lengths use the
    exact speed of light, so build models with the default ``c`` when
    comparing against the closed forms.
    """
    line = dict(z0=m.zc, length=m.length, eps_eff=m.eps_re)
    els: list[Element] = [
        TransmissionLine("T1", "o1", "s", **line),
        TransmissionLine("T2", "o2", "s", **line),
    ]
    if m.lm > 0:
        els.append(Inductor("LM", "s", GROUND, m.lm))
    else:
        els = [TransmissionLine("T1", "o1", GROUND, **line), TransmissionLine("T2", "o2", GROUND, **line)]
    if m.cm > 0:
        els.append(Capacitor("CM", "o1", "o2", m.cm))
    ports = (Port("P1", "o1", z_ref), Port("P2", "o2", z_ref))
    return Netlist(tuple(els), ports), [("o1", "o2")]


def bisect_qsir(m: QsirModel) -> SymmetryHalves:
    net, pairs = qsir_pair_netlist(m)
    return split_symmetric(net, pairs)
