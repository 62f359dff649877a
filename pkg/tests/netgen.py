"""Random netlist builders shared by the property tests."""

import numpy as np

from dualband.netlist import (
    AdmittanceInverter,
    Capacitor,
    CoupledLine,
    ImpedanceInverter,
    Inductor,
    Netlist,
    OpenStub,
    Port,
    ShortedStub,
    TransmissionLine,
)


def _line(rng, cls, name, n1, n2, lossy):
    return cls(name, n1, n2, z0=float(rng.uniform(20, 150)), length=float(rng.uniform(1e-3, 30e-3)),
               eps_eff=float(rng.uniform(1, 4)), loss=float(rng.uniform(0, 3)) if lossy else 0.0)


def _series(rng, name, n1, n2, lossy):
    kind = rng.integers(6)
    if kind == 0:
        return _line(rng, TransmissionLine, name, n1, n2, lossy)
    if kind == 1:
        return Capacitor(name, n1, n2, float(rng.uniform(0.05e-12, 2e-12)))
    if kind == 2:
        return Inductor(name, n1, n2, float(rng.uniform(0.2e-9, 10e-9)))
    if kind == 3:
        return AdmittanceInverter(name, n1, n2, float(rng.uniform(0.005, 0.04)))
    if kind == 4:
        return ImpedanceInverter(name, n1, n2, float(rng.uniform(20, 150)))
    return _line(rng, ShortedStub if rng.random() < 0.5 else OpenStub, name, n1, n2, lossy)


def _shunt(rng, name, node, lossy):
    kind = rng.integers(4)
    if kind == 0:
        return Capacitor(name, node, "0", float(rng.uniform(0.05e-12, 2e-12)))
    if kind == 1:
        return Inductor(name, node, "0", float(rng.uniform(0.2e-9, 10e-9)))
    return _line(rng, ShortedStub if kind == 2 else OpenStub, name, node, "0", lossy)


def random_ladder(rng, lossy=False, z_ref=50.0):
    """Series path p1 -> n1 -> ... -> p2 with random shunt branches."""
    n = int(rng.integers(1, 5))
    nodes = ["p1"] + [f"n{i}" for i in range(1, n)] + ["p2"]
    els = []
    for i in range(n):
        a, b = nodes[i], nodes[i + 1]
        if rng.random() < 0.3:
            a, b = b, a
        els.append(_series(rng, f"S{i}", a, b, lossy))
    for i, node in enumerate(nodes):
        if rng.random() < 0.6:
            els.append(_shunt(rng, f"H{i}", node, lossy))
    return Netlist(tuple(els), (Port("P1", "p1", z_ref), Port("P2", "p2", z_ref)))


def random_network(rng, lossy=False, z_ref=50.0):
    """A ladder plus bridging elements and possibly a coupled-line section."""
    net = random_ladder(rng, lossy, z_ref)
    nodes = list(net.nodes)
    extra = []
    for i in range(int(rng.integers(0, 3))):
        a, b = rng.choice(len(nodes), 2, replace=False)
        extra.append(_series(rng, f"B{i}", nodes[a], nodes[b], lossy))
    if rng.random() < 0.5:
        ze = float(rng.uniform(60, 150))
        zo = float(rng.uniform(20, ze * 0.9))
        extra.append(CoupledLine("M", nodes[0], "c2", "c3", nodes[-1], ze, zo,
                                 float(rng.uniform(2e-3, 20e-3)), float(rng.uniform(1, 4))))
        extra.append(_shunt(rng, "MC2", "c2", lossy))
        extra.append(_shunt(rng, "MC3", "c3", lossy))
    return Netlist(net.elements + tuple(extra), net.ports)


FREQS = np.linspace(0.5e9, 10e9, 201)
