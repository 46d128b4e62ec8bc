"""Discrete-event simulator for linear quantum-repeater chains with banded purification."""

from .bell import (
    BellState,
    apply_depolarizing,
    make_dephased,
    make_werner,
    purify,
    swap_states,
    symmetric_chain_oracle,
)
from .config import SimConfig, parse_config
from .harness import SweepSpec, parse_sweep, run, sweep, write_outputs
from .metrics import ArrivalLog, ThroughputFit, fit_throughput
from .scheduling import BandConfig, SchedulerKind, min_qubits_required, select_pairs, validate_config

__version__ = "0.1.0"
