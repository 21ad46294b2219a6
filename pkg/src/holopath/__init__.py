"""Pulse synthesis and open-system simulation for path-optimized holonomic gates.

The package covers the full chain from an abstract gate specification to
circuit-level fidelity numbers:

``pathsynth``
    turns a target rotation plus a longitude-latitude Bloch path into a
    three-segment drive schedule with closed-form phase laws.
``models``
    builds the Lambda-system and superconducting (transmon/cavity chain,
    DFS-encoded) Hamiltonians, error terms and collapse operators.
``dynamics``
    unitary and Lindblad propagation, holonomy accumulators, and Bloch-path
    reconstruction from a schedule.
``metrics``
    gate/state fidelity definitions used throughout.
``sweeps``
    grid experiments: pulse-area maps, robustness scans, the two-qubit
    parameter search.
``cli``
    command line front end (``holopath synth|figure|verify``).
"""

from .pathsynth import GateSpec, PathSpec, PulseSchedule
from .qcore import QuantumState

__all__ = ["GateSpec", "PathSpec", "PulseSchedule", "QuantumState"]

__version__ = "0.1.0"
