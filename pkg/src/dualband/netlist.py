"""Netlist data model, text format, parameter binding and validation.

A netlist is an immutable value: elements, ports and a table of named
parameters.  Element values are either numbers or ``$name`` references into
the parameter table; :func:`bind_params` resolves them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import ClassVar, Iterable, Iterator, Mapping, Union

GROUND = "0"

Value = Union[float, str]

# netlist key -> (dataclass field, unit)
_LINE_KEYS = {"z0": ("z0", "ohm"), "len": ("length", "m"), "eps": ("eps_eff", "1"), "loss": ("loss", "dB/m")}


class NetlistError(ValueError):
    """Raised for netlist syntax, binding and validation failures."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# Elements


@dataclass(frozen=True)
class Element:
    name: str

    keyword: ClassVar[str] = ""
    # netlist key -> (field, unit)
    keys: ClassVar[dict] = {}
    # field -> rule name ('pos', 'nonneg', 'ge1')
    rules: ClassVar[dict] = {}

    @property
    def nodes(self) -> tuple[str, ...]:
        raise NotImplementedError

    def values(self) -> dict[str, Value]:
        return {fname: getattr(self, fname) for fname, _ in self.keys.values()}

    def with_values(self, **values) -> "Element":
        return replace(self, **values)

    @property
    def refs(self) -> set[str]:
        return {v[1:] for v in self.values().values() if isinstance(v, str)}


@dataclass(frozen=True)
class _TwoNode(Element):
    n1: str = ""
    n2: str = GROUND

    @property
    def nodes(self) -> tuple[str, str]:
        return (self.n1, self.n2)

    @property
    def is_shunt(self) -> bool:
        return GROUND in (self.n1, self.n2)


@dataclass(frozen=True)
class _LineLike(_TwoNode):
    z0: Value = 50.0
    length: Value = 0.0
    eps_eff: Value = 1.0
    loss: Value = 0.0

    keys = _LINE_KEYS
    rules = {"z0": "pos", "length": "pos", "eps_eff": "ge1", "loss": "nonneg"}


@dataclass(frozen=True)
class TransmissionLine(_LineLike):
    """Two-port line section from ``n1`` to ``n2`` (ground return)."""

    keyword = "tl"


@dataclass(frozen=True)
class ShortedStub(_LineLike):
    """Short-circuited stub seen as an impedance between ``n1`` and ``n2``."""

    keyword = "stub_short"


@dataclass(frozen=True)
class OpenStub(_LineLike):
    """Open-circuited stub seen as an impedance between ``n1`` and ``n2``."""

    keyword = "stub_open"


@dataclass(frozen=True)
class Capacitor(_TwoNode):
    c: Value = 0.0

    keyword = "cap"
    keys = {"c": ("c", "F")}
    rules = {"c": "pos"}


@dataclass(frozen=True)
class Inductor(_TwoNode):
    l: Value = 0.0  # noqa: E741

    keyword = "ind"
    keys = {"l": ("l", "H")}
    rules = {"l": "pos"}


@dataclass(frozen=True)
class AdmittanceInverter(_TwoNode):
    j: Value = 0.0

    keyword = "jinv"
    keys = {"j": ("j", "S")}
    rules = {"j": "pos"}


@dataclass(frozen=True)
class ImpedanceInverter(_TwoNode):
    k: Value = 0.0

    keyword = "kinv"
    keys = {"k": ("k", "ohm")}
    rules = {"k": "pos"}


@dataclass(frozen=True)
class CoupledLine(Element):
    """Symmetric coupled pair: line a runs n1->n2, line b runs n3->n4.

    ``n1`` and ``n3`` sit at the same physical end.
    """

    n1: str = ""
    n2: str = ""
    n3: str = ""
    n4: str = ""
    z0_even: Value = 0.0
    z0_odd: Value = 0.0
    length: Value = 0.0
    eps_eff: Value = 1.0

    keyword = "mcl"
    keys = {"z0e": ("z0_even", "ohm"), "z0o": ("z0_odd", "ohm"), "len": ("length", "m"), "eps": ("eps_eff", "1")}
    rules = {"z0_even": "pos", "z0_odd": "pos", "length": "pos", "eps_eff": "ge1"}

    @property
    def nodes(self) -> tuple[str, str, str, str]:
        return (self.n1, self.n2, self.n3, self.n4)


ELEMENT_TYPES: dict[str, type[Element]] = {
    cls.keyword: cls
    for cls in (
        TransmissionLine,
        ShortedStub,
        OpenStub,
        Capacitor,
        Inductor,
        AdmittanceInverter,
        ImpedanceInverter,
        CoupledLine,
    )
}


# ---------------------------------------------------------------------------
# Parameters and ports


@dataclass(frozen=True)
class Param:
    name: str
    value: float
    unit: str | None = None


class ParamTable(Mapping[str, Param]):
    """Immutable ordered mapping of parameter name to :class:`Param`."""

    def __init__(self, params: Iterable[Param] | Mapping[str, float] = ()):
        if isinstance(params, Mapping):
            params = [p if isinstance(p, Param) else Param(k, float(p)) for k, p in params.items()]
        table: dict[str, Param] = {}
        for p in params:
            if p.name in table:
                raise NetlistError(f"duplicate parameter {p.name!r}")
            if not math.isfinite(p.value):
                raise NetlistError(f"parameter {p.name!r} is not finite")
            table[p.name] = p
        self._table = table

    def __getitem__(self, name: str) -> Param:
        return self._table[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamTable):
            return NotImplemented
        return list(self._table.values()) == list(other._table.values())

    def __hash__(self) -> int:
        return hash(tuple(self._table.values()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{p.name}={p.value!r}" for p in self._table.values())
        return f"ParamTable({inner})"

    def value(self, name: str) -> float:
        return self._table[name].value

    def as_dict(self) -> dict[str, float]:
        return {k: p.value for k, p in self._table.items()}

    def overlay(self, overrides: "ParamTable") -> "ParamTable":
        merged = dict(self._table)
        for name, p in overrides.items():
            if name not in merged:
                raise NetlistError(f"unresolved parameter {name!r}")
            base = merged[name]
            if p.unit is not None and base.unit is not None and p.unit != base.unit:
                raise NetlistError(f"unit mismatch for {name!r}: {p.unit} vs {base.unit}")
            merged[name] = Param(name, p.value, base.unit or p.unit)
        return ParamTable(merged.values())


@dataclass(frozen=True)
class Port:
    name: str
    node: str
    z_ref: float = 50.0


# ---------------------------------------------------------------------------
# Netlist


@dataclass(frozen=True)
class Netlist:
    elements: tuple[Element, ...] = ()
    ports: tuple[Port, ...] = ()
    params: ParamTable = field(default_factory=ParamTable)

    @property
    def nodes(self) -> tuple[str, ...]:
        """Non-ground nodes in order of first appearance."""
        seen: dict[str, None] = {}
        for el in self.elements:
            for n in el.nodes:
                if n != GROUND:
                    seen.setdefault(n)
        for p in self.ports:
            if p.node != GROUND:
                seen.setdefault(p.node)
        return tuple(seen)

    @property
    def is_numeric(self) -> bool:
        return not any(el.refs for el in self.elements)

    def element(self, name: str) -> Element:
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def _param_units(netlist: Netlist) -> dict[str, str]:
    """Units implied by where each parameter is used; raises on conflicts."""
    units: dict[str, str] = {}
    for el in netlist.elements:
        for fname, unit in el.keys.values():
            v = getattr(el, fname)
            if isinstance(v, str):
                name = v[1:]
                if units.setdefault(name, unit) != unit:
                    raise NetlistError(f"unit mismatch for {name!r}: used as {units[name]} and {unit}")
    return units


def _check_value(rule: str, v: float) -> bool:
    if not math.isfinite(v):
        return False
    if rule == "pos":
        return v > 0
    if rule == "nonneg":
        return v >= 0
    if rule == "ge1":
        return v >= 1
    return True


def validate(netlist: Netlist) -> ValidationReport:
    """List every invariant violation; an empty report means simulatable."""
    out: list[str] = []
    params = netlist.params

    names = [el.name for el in netlist.elements]
    for name in sorted({n for n in names if names.count(n) > 1}):
        out.append(f"duplicate element name {name!r}")

    for el in netlist.elements:
        nodes = el.nodes
        if any(not n for n in nodes):
            out.append(f"{el.name}: missing node")
        if len(nodes) == 2 and nodes[0] == nodes[1]:
            out.append(f"{el.name}: both terminals on node {nodes[0]!r}")
        for fname, rule in el.rules.items():
            v = getattr(el, fname)
            if isinstance(v, str):
                ref = v[1:]
                if ref not in params:
                    out.append(f"{el.name}: unresolved parameter {ref!r}")
                    continue
                v = params.value(ref)
            if not _check_value(rule, float(v)):
                out.append(f"{el.name}: {fname}={v!r} violates {_RULE_TEXT[rule]}")
        if isinstance(el, CoupledLine):
            ze, zo = (_resolve(el.z0_even, params), _resolve(el.z0_odd, params))
            if ze is not None and zo is not None and not ze > zo:
                out.append(f"{el.name}: z0_even ({ze}) must exceed z0_odd ({zo})")

    if len(netlist.ports) not in (1, 2):
        out.append(f"port count is {len(netlist.ports)}, expected 1 or 2")
    port_nodes = [p.node for p in netlist.ports]
    if len(set(port_nodes)) != len(port_nodes):
        out.append("port nodes are not distinct")
    pnames = [p.name for p in netlist.ports]
    if len(set(pnames)) != len(pnames):
        out.append("port names are not distinct")
    touched = {n for el in netlist.elements for n in el.nodes}
    for p in netlist.ports:
        if p.node == GROUND:
            out.append(f"port {p.name} sits on ground")
        elif p.node not in touched:
            out.append(f"node {p.node!r} (port {p.name}) is not connected to any element")
        if not (math.isfinite(p.z_ref) and p.z_ref > 0):
            out.append(f"port {p.name}: z_ref must be positive")

    try:
        _param_units(netlist)
    except NetlistError as exc:
        out.append(str(exc))
    return ValidationReport(tuple(out))


_RULE_TEXT = {"pos": "positivity (> 0)", "nonneg": "non-negativity (>= 0)", "ge1": "lower bound (>= 1)"}


def _resolve(v: Value, params: ParamTable) -> float | None:
    if isinstance(v, str):
        return params.value(v[1:]) if v[1:] in params else None
    return float(v)


# ---------------------------------------------------------------------------
# Binding


def bind_params(netlist: Netlist, overrides: ParamTable | Mapping[str, float] | None = None) -> Netlist:
    """Resolve every ``$name`` reference, with ``overrides`` taking precedence.

    Returns a fully numeric netlist; the input is left untouched.  The
    returned netlist keeps the (overlaid) parameter table so it can be
    re-bound or serialized.
    """
    if overrides is None:
        overrides = ParamTable()
    elif not isinstance(overrides, ParamTable):
        overrides = ParamTable(overrides)
    params = netlist.params.overlay(overrides)
    usage = _param_units(netlist)
    for name, unit in usage.items():
        if name in params and params[name].unit not in (None, unit):
            raise NetlistError(f"unit mismatch for {name!r}: declared {params[name].unit}, used as {unit}")

    elements = []
    for el in netlist.elements:
        updates = {}
        for fname, _ in el.keys.values():
            v = getattr(el, fname)
            if isinstance(v, str):
                ref = v[1:]
                if ref not in params:
                    raise NetlistError(f"{el.name}: unresolved parameter {ref!r}")
                updates[fname] = params.value(ref)
        elements.append(replace(el, **updates) if updates else el)
    return Netlist(tuple(elements), netlist.ports, params)


def with_params(netlist: Netlist, values: Mapping[str, float]) -> Netlist:
    """Change parameter values while keeping references symbolic."""
    return replace(netlist, params=netlist.params.overlay(ParamTable(values)))


# ---------------------------------------------------------------------------
# Text format

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def _parse_number(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise NetlistError(f"bad number {tok!r}", lineno) from None
    return v


def _parse_value(tok: str, lineno: int) -> Value:
    if tok.startswith("$"):
        if not _NAME_RE.match(tok[1:]):
            raise NetlistError(f"bad parameter reference {tok!r}", lineno)
        return tok
    return _parse_number(tok, lineno)


def parse_netlist(text: str) -> Netlist:
    """Parse the line-based netlist format and validate the result.

    ``/`` may be used in place of a newline to separate statements, which
    keeps one-line netlists readable in tests and on the command line.
    """
    elements: list[Element] = []
    ports: list[Port] = []
    params: list[Param] = []
    seen: dict[str, int] = {}

    statements: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for part in line.split(" / "):
            if part.strip():
                statements.append((lineno, part.strip()))

    for lineno, stmt in statements:
        toks = stmt.split()
        kw = toks[0].lower()
        if kw == ".param":
            if len(toks) not in (3, 4):
                raise NetlistError("expected '.param <name> <value> [unit]'", lineno)
            if not _NAME_RE.match(toks[1]):
                raise NetlistError(f"bad parameter name {toks[1]!r}", lineno)
            if any(p.name == toks[1] for p in params):
                raise NetlistError(f"duplicate parameter {toks[1]!r}", lineno)
            value = _parse_number(toks[2], lineno)
            if not math.isfinite(value):
                raise NetlistError(f"parameter {toks[1]!r} is not finite", lineno)
            params.append(Param(toks[1], value, toks[3] if len(toks) == 4 else None))
            continue
        if kw == "port":
            if len(toks) != 4:
                raise NetlistError("expected 'port <name> <node> <z_ref>'", lineno)
            if any(p.name == toks[1] for p in ports):
                raise NetlistError(f"duplicate port name {toks[1]!r}", lineno)
            ports.append(Port(toks[1], toks[2], _parse_number(toks[3], lineno)))
            continue
        cls = ELEMENT_TYPES.get(kw)
        if cls is None:
            raise NetlistError(f"unknown element keyword {toks[0]!r}", lineno)
        if len(toks) < 2:
            raise NetlistError("missing element name", lineno)
        name = toks[1]
        if name in seen:
            raise NetlistError(f"duplicate element name {name!r} (first on line {seen[name]})", lineno)
        seen[name] = lineno
        nodes = [t for t in toks[2:] if "=" not in t]
        kv = [t for t in toks[2:] if "=" in t]
        if toks[2 + len(nodes):] != kv:
            raise NetlistError("node names must precede key=value pairs", lineno)
        kwargs: dict[str, Value] = {}
        for item in kv:
            key, _, raw_v = item.partition("=")
            if key not in cls.keys:
                raise NetlistError(f"unknown key {key!r} for {kw}", lineno)
            kwargs[cls.keys[key][0]] = _parse_value(raw_v, lineno)
        for key, (fname, _) in cls.keys.items():
            if fname not in kwargs and key not in ("eps", "loss"):
                raise NetlistError(f"{kw} {name}: missing {key}=", lineno)
        if cls is CoupledLine:
            if len(nodes) != 4:
                raise NetlistError("mcl needs exactly four nodes", lineno)
            el = cls(name, *nodes, **kwargs)
        else:
            optional_n2 = cls in (ShortedStub, OpenStub)
            if len(nodes) == 1 and optional_n2:
                nodes.append(GROUND)
            if len(nodes) != 2:
                raise NetlistError(f"{kw} needs two nodes", lineno)
            el = cls(name, nodes[0], nodes[1], **kwargs)
        for fname, rule in el.rules.items():
            v = getattr(el, fname)
            if not isinstance(v, str) and not _check_value(rule, v):
                raise NetlistError(f"{name}: {fname}={v!r} violates {_RULE_TEXT[rule]}", lineno)
        elements.append(el)

    netlist = Netlist(tuple(elements), tuple(ports), ParamTable(params))
    report = validate(netlist)
    if report:
        raise NetlistError("; ".join(report.violations))
    return netlist


def _fmt(v: Value) -> str:
    return v if isinstance(v, str) else repr(float(v))


def serialize(netlist: Netlist) -> str:
    """Render a netlist in the text format; ``parse_netlist`` inverts it."""
    lines = []
    for p in netlist.params.values():
        unit = f" {p.unit}" if p.unit else ""
        lines.append(f".param {p.name} {p.value!r}{unit}")
    for port in netlist.ports:
        lines.append(f"port {port.name} {port.node} {port.z_ref!r}")
    for el in netlist.elements:
        toks = [el.keyword, el.name, *el.nodes]
        for key, (fname, _) in el.keys.items():
            toks.append(f"{key}={_fmt(getattr(el, fname))}")
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def load_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())

