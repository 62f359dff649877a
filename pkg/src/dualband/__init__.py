"""Circuit-level toolkit for dual-band bandpass filters built from coupled
quarter-wave SIRs and hairpin resonators: netlists, network solving, modal
analysis, transmission-zero and passband extraction, sweeps and tuning."""

from .analysis import (BandReport, TransmissionZero, TzReport, count_reflection_poles, find_passbands,
                       find_transmission_zeros, isolation, zeros_between_bands)
from .modal import (ModalResult, QsirModel, SymmetryError, SymmetryHalves, bisect_qsir, coupling_coefficient,
                    even_mode_freq, odd_mode_freq, qsir_pair_netlist, resonance_search, split_symmetric)
from .netlist import (Netlist, NetlistError, Param, ParamTable, Port, ValidationReport, bind_params,
                      load_netlist, parse_netlist, serialize, validate, with_params)
from .network import (C0, ChainMatrix, NetworkError, SingularFrequencyError, SParameterSet, cascade, chain_to_s,
                      linear_grid, s_to_chain, s_to_y, sweep, y_to_s)
from .tables import export_csv
from .touchstone import export_touchstone, load_touchstone, read_touchstone
from .tuning import (BandTarget, FeatureDiscontinuity, SweepTable, Trend, TuneResult, TuneTarget, TzTarget,
                     classify_trend, parameter_sweep, tune)

__version__ = "0.1.0"

__all__ = [
    "BandReport",
    "BandTarget",
    "bind_params",
    "bisect_qsir",
    "C0",
    "cascade",
    "chain_to_s",
    "ChainMatrix",
    "classify_trend",
    "count_reflection_poles",
    "coupling_coefficient",
    "even_mode_freq",
    "export_csv",
    "export_touchstone",
    "FeatureDiscontinuity",
    "find_passbands",
    "find_transmission_zeros",
    "isolation",
    "linear_grid",
    "load_netlist",
    "load_touchstone",
    "ModalResult",
    "Netlist",
    "NetlistError",
    "NetworkError",
    "odd_mode_freq",
    "Param",
    "parameter_sweep",
    "ParamTable",
    "parse_netlist",
    "Port",
    "qsir_pair_netlist",
    "QsirModel",
    "read_touchstone",
    "resonance_search",
    "s_to_chain",
    "s_to_y",
    "serialize",
    "SingularFrequencyError",
    "SParameterSet",
    "split_symmetric",
    "sweep",
    "SweepTable",
    "SymmetryError",
    "SymmetryHalves",
    "TransmissionZero",
    "Trend",
    "tune",
    "TuneResult",
    "TuneTarget",
    "TzReport",
    "TzTarget",
    "validate",
    "ValidationReport",
    "with_params",
    "y_to_s",
    "zeros_between_bands",
]
