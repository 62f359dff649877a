"""The shipped dual-band reference netlist (3.45/4.9 GHz, ideal elements)."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .netlist import Netlist, parse_netlist
from .network import linear_grid

# analysis grid used by the acceptance checks and the CLI defaults
REFERENCE_GRID = (1e9, 12e9, 2001)
BAND_CENTERS = (3.45e9, 4.9e9)
FBW_TARGETS = (11.0, 6.9)

# which between-band zero (1-based, frequency order) each section length controls;
# the other two between-band zeros come from cancellation of the two channels
ZERO_CONTROLS = {"L_h": 1, "L_s": 2, "L_2": 3}


def reference_text() -> str:
    return resources.files("dualband").joinpath("data/reference.net").read_text(encoding="utf-8")


def load_reference() -> Netlist:
    """Parsed reference netlist with its parameters still symbolic."""
    return parse_netlist(reference_text())


def reference_grid(points: int | None = None) -> np.ndarray:
    lo, hi, n = REFERENCE_GRID
    return linear_grid(lo, hi, points or n)
