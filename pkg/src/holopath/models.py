"""Physical models the pulse schedules drive.

Three families share the schedule objects from :mod:`holopath.pathsynth`:

* a dimensionless three-level Lambda system (two ground states coupled to
  one excited state), the reference testbed for path-shaped gates;
* a pair of transmons exchange-coupled through an auxiliary mode, where
  parametric modulation of the transmon frequencies synthesizes the same
  Lambda structure inside a decoherence-free subspace of two physical
  excitation patterns;
* two three-level transmons whose modulated coupling drives a two-photon
  loop |11> -> |02> -> |11>, producing a controlled phase on the doubly
  excited logical state.

All superconducting frequencies are angular, in rad/ns; use ``MHZ`` and
``KHZ`` to convert quoted lab values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml
from scipy.special import j1 as _bessel_j1

from .pathsynth import PulseSchedule
from .qcore import QuantumState, dagger

MHZ = 2.0 * math.pi * 1e-3  # rad/ns per MHz
KHZ = 2.0 * math.pi * 1e-6  # rad/ns per kHz

_SM2 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
_ZZ2 = np.diag([-1.0, 1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)

# three-level transmon ladder operators
_SM3 = np.diag(np.sqrt([1.0, 2.0]), k=1).astype(complex)
_NZ3 = np.diag([0.0, 1.0, 2.0]).astype(complex)
_I3 = np.eye(3, dtype=complex)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Collapse operators with their rates, consumed by the Lindblad solver."""

    ops: tuple
    rates: tuple

    def __post_init__(self):
        if len(self.ops) != len(self.rates):
            raise ValueError("ops and rates must have equal length")
        if any(r < 0 for r in self.rates):
            raise ValueError("collapse rates must be nonnegative")

    def __iter__(self):
        return iter(zip(self.ops, self.rates))


@dataclass(frozen=True, eq=False)
class LambdaModel:
    """Lambda system driven by a schedule, with optional control errors.

    ``delta_err`` detunes the shared excited level by that fraction of the
    peak Rabi frequency; ``eps_err`` scales both drive amplitudes by
    (1 + eps_err).
    """

    schedule: PulseSchedule
    delta_err: float = 0.0
    eps_err: float = 0.0


def lambda_hamiltonian(model: LambdaModel, t):
    """Rotating-frame Hamiltonian on basis (|0>, |1>, |a>), vectorized in t."""
    s = model.schedule
    t = np.asarray(t, dtype=float)
    om = s.omega(t) * (1.0 + model.eps_err)
    h = np.zeros(t.shape + (3, 3), dtype=complex)
    h[..., 0, 2] = 0.5 * om * math.sin(s.theta / 2.0) * np.exp(-1j * s.phase0(t))
    h[..., 1, 2] = 0.5 * om * math.cos(s.theta / 2.0) * np.exp(-1j * s.phase1(t))
    h[..., 2, 0] = np.conj(h[..., 0, 2])
    h[..., 2, 1] = np.conj(h[..., 1, 2])
    h[..., 2, 2] = model.delta_err * s.omega_max
    return h


def lambda_collapse_ops(omega_max: float = 1.0) -> NoiseModel:
    """Excited-state decay into both ground states plus dephasing.

    Both rates are fixed at omega_max / 2000, the decoherence strength used
    throughout the dimensionless benchmarks.
    """
    sm = np.zeros((3, 3), dtype=complex)
    sm[0, 2] = 1.0
    sm[1, 2] = 1.0
    sz = np.diag([-1.0, -1.0, 2.0]).astype(complex)
    rate = omega_max / 2000.0
    return NoiseModel(ops=(sm, sz), rates=(rate, rate))


# -- transmon chain, single logical qubit -----------------------------------
#
# Physical basis: three two-level sites (transmon 1, auxiliary mode,
# transmon 2), index 4*n1 + 2*na + n2.  Logical |0> = |100>, |1> = |001>,
# shared excited state |a> = |010>.

IDX_0L = 4
IDX_AUX = 2
IDX_1L = 1


@dataclass(frozen=True, eq=False)
class TransmonChainModel:
    """Static lab-frame chain of anharmonic sites with exchange couplings."""

    levels: tuple
    omegas: tuple
    alphas: tuple
    couplings: tuple


def _embed(op, site: int, dims) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[site] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def static_chain_hamiltonian(model: TransmonChainModel) -> np.ndarray:
    dims = model.levels
    dim = int(np.prod(dims))
    h = np.zeros((dim, dim), dtype=complex)
    lowers = []
    for i, d in enumerate(dims):
        n = np.diag(np.arange(d, dtype=float)).astype(complex)
        h += model.omegas[i] * _embed(n, i, dims)
        h -= 0.5 * model.alphas[i] * _embed(n @ (n - np.eye(d)), i, dims)
        lowers.append(np.diag(np.sqrt(np.arange(1.0, d)), k=1).astype(complex))
    for i, j, g in model.couplings:
        op = _embed(dagger(lowers[i]), i, dims) @ _embed(lowers[j], j, dims)
        h += g * op + dagger(g * op)
    return h


@dataclass(frozen=True, eq=False)
class SCDrivenModel:
    g: float
    delta: float
    beta: float
    schedule: PulseSchedule


def sc_single_qubit_model(g: float, delta: float, beta: float,
                          schedule: PulseSchedule) -> SCDrivenModel:
    """Bundle the drive parameters for :func:`sc_driven_hamiltonian`.

    ``g`` is the transmon-auxiliary exchange coupling, ``delta`` the shared
    detuning of both transmons from the auxiliary mode and ``beta`` the
    frequency-modulation depth.  The modulation phase of transmon j tracks
    the negative of schedule phase j, which makes the first sideband
    reproduce the scheduled drive.
    """
    return SCDrivenModel(g=g, delta=delta, beta=beta, schedule=schedule)


# exchange operators: raise transmon j while absorbing the auxiliary photon
_EX1 = np.kron(dagger(_SM2), np.kron(_SM2, _I2))
_EX2 = np.kron(_I2, np.kron(_SM2, dagger(_SM2)))


def sc_driven_hamiltonian(model: SCDrivenModel, t):
    """Full modulated-chain Hamiltonian in the interaction picture.

    No rotating-wave approximation beyond the interaction picture itself:
    the fast e^{-i delta t} factor and every sideband of the modulation are
    kept, so propagation under this operator exhibits the residual
    micro-oscillations the effective model averages away.
    """
    t = np.asarray(t, dtype=float)
    f1 = model.beta * np.sin(model.delta * t - model.schedule.phase0(t))
    f2 = model.beta * np.sin(model.delta * t - model.schedule.phase1(t))
    carrier = np.exp(-1j * model.delta * t)
    c1 = model.g * carrier * np.exp(1j * f1)
    c2 = model.g * carrier * np.exp(1j * f2)
    h = c1[..., None, None] * _EX1 + c2[..., None, None] * _EX2
    return h + np.conj(np.swapaxes(h, -1, -2))


def sc_effective_hamiltonian(schedule: PulseSchedule, g: float, beta: float, t):
    """First-sideband average of the driven chain on (|0>, |1>, |a>).

    Keeping only the static term of the Jacobi-Anger expansion leaves a
    Lambda Hamiltonian with per-leg amplitude g J1(beta), i.e. a flat
    bright-state Rabi frequency of 2 sqrt(2) g J1(beta).
    """
    leg = g * float(_bessel_j1(beta))
    t = np.asarray(t, dtype=float)
    h = np.zeros(t.shape + (3, 3), dtype=complex)
    h[..., 0, 2] = leg * math.sqrt(2.0) * math.sin(schedule.theta / 2.0) * np.exp(-1j * schedule.phase0(t))
    h[..., 1, 2] = leg * math.sqrt(2.0) * math.cos(schedule.theta / 2.0) * np.exp(-1j * schedule.phase1(t))
    h[..., 2, 0] = np.conj(h[..., 0, 2])
    h[..., 2, 1] = np.conj(h[..., 1, 2])
    return h


def sc_error_hamiltonians(d1: float, d2: float, e1: float, e2: float,
                          config: str = "cavity", dt_aux: Optional[float] = None,
                          schedule: Optional[PulseSchedule] = None):
    """Static frequency errors and drive-amplitude errors for the chain.

    Returns ``(h_delta, h_eps)``: a constant 8x8 matrix shifting each
    excited transmon by its frequency error, and a callable adding drive
    legs of absolute strength e1, e2 that follow the scheduled phases.

    With ``config="3T"`` the auxiliary site is a third transmon fabricated
    to the mean of the qubit frequencies, so it inherits the opposite shift
    -(d1 + d2)/2; a linear cavity ("cavity") is unaffected.  ``dt_aux``
    overrides that auxiliary shift explicitly.
    """
    if dt_aux is None:
        dt_aux = -(d1 + d2) / 2.0 if config == "3T" else 0.0
    dims = (2, 2, 2)
    n2 = np.diag([0.0, 1.0]).astype(complex)
    h_delta = (d1 * _embed(n2, 0, dims) + dt_aux * _embed(n2, 1, dims)
               + d2 * _embed(n2, 2, dims))

    if (e1 != 0.0 or e2 != 0.0) and schedule is None:
        raise ValueError("drive-amplitude errors require a schedule")

    def h_eps(t):
        t = np.asarray(t, dtype=float)
        h = np.zeros(t.shape + (8, 8), dtype=complex)
        if e1 == 0.0 and e2 == 0.0:
            return h
        h[..., IDX_0L, IDX_AUX] = 0.5 * e1 * np.exp(-1j * schedule.phase0(t))
        h[..., IDX_1L, IDX_AUX] = 0.5 * e2 * np.exp(-1j * schedule.phase1(t))
        h[..., IDX_AUX, IDX_0L] = np.conj(h[..., IDX_0L, IDX_AUX])
        h[..., IDX_AUX, IDX_1L] = np.conj(h[..., IDX_1L, IDX_AUX])
        return h

    return h_delta, h_eps


KAPPA_SC = 3.0 * KHZ  # uniform decay / dephasing rate of the transmon devices


def sc_collapse_ops(config: str = "cavity") -> NoiseModel:
    """Collective decay and dephasing for the chosen device variant.

    "cavity": all three sites relax; only the transmons dephase (a linear
    cavity has no low-frequency phase noise channel).  "3T": the auxiliary
    transmon dephases too.  "two_qubit": the two three-level transmons of
    the controlled-phase pair.
    """
    dims = (2, 2, 2)
    if config in ("cavity", "3T"):
        d_minus = sum(_embed(_SM2, i, dims) for i in range(3))
        sites = range(3) if config == "3T" else (0, 2)
        d_z = sum(_embed(_ZZ2, i, dims) for i in sites)
        return NoiseModel(ops=(d_minus, d_z), rates=(KAPPA_SC, KAPPA_SC))
    if config == "two_qubit":
        d_minus = np.kron(_SM3, _I3) + np.kron(_I3, _SM3)
        d_z = np.kron(_NZ3, _I3) + np.kron(_I3, _NZ3)
        return NoiseModel(ops=(d_minus, d_z), rates=(KAPPA_SC, KAPPA_SC))
    raise ValueError(f"unknown collapse config {config!r}")


def spectator_ops() -> tuple:
    """Per-site decay and dephasing for an idle two-level spectator."""
    return _SM2.copy(), np.diag([0.0, 1.0]).astype(complex)


# -- two three-level transmons, controlled phase -----------------------------
#
# Physical basis: occupation (n2, n3) of the coupled pair, index 3*n2 + n3.

def _pair_idx(n2: int, n3: int) -> int:
    return 3 * n2 + n3


def two_qubit_hamiltonian(g23: float, beta3: float, alpha2: float, alpha3: float,
                          delta3: float, phi3: Callable, t, mode: str = "full",
                          nu3: Optional[float] = None):
    """Modulated-coupling Hamiltonian of the transmon pair.

    ``mode="full"`` keeps, besides the resonant two-photon term
    |11><02|, the two detuned single-photon exchanges left over after
    locking the modulation frequency to the two-photon resonance.  Their
    detunings are the anharmonicities alpha3 and alpha2 + alpha3; the bare
    qubit frequency difference delta3 cancels out of this frame entirely
    (it fixes the required modulation frequency but not the rotating-frame
    dynamics), so it is accepted for interface uniformity and ignored.

    ``mode="unlocked"`` keeps the first modulation sideband at an explicit
    frequency ``nu3`` instead of absorbing it: each exchange leg carries
    its bare oscillation (delta3, delta3 - alpha3, delta3 + alpha2) times
    g23 J1(beta3) e^{i(nu3 t + phi3)}.  ``nu3=None`` slaves the modulation
    to the two-photon resonance delta3 - alpha3, reproducing "full";
    fixing nu3 while varying delta3 models a qubit pair whose actual
    frequency difference has drifted from the value the modulation was
    calibrated for, which is what an operating-point map over
    (beta3, delta3) probes.

    ``mode="effective"`` keeps only the resonant term.

    ``phi3`` is the modulation phase program (callable of t); the resonant
    coupling amplitude is sqrt(2) g23 J1(beta3).
    """
    if mode not in ("full", "effective", "unlocked"):
        raise ValueError(f"unknown mode {mode!r}")
    t = np.asarray(t, dtype=float)
    gj = g23 * float(_bessel_j1(beta3))
    h = np.zeros(t.shape + (9, 9), dtype=complex)
    if mode == "unlocked":
        if nu3 is None:
            nu3 = delta3 - alpha3
        side = gj * np.exp(1j * (nu3 * t + np.asarray(phi3(t), dtype=float)))
        h[..., _pair_idx(1, 0), _pair_idx(0, 1)] = side * np.exp(-1j * delta3 * t)
        h[..., _pair_idx(1, 1), _pair_idx(0, 2)] = (math.sqrt(2.0) * side
                                                    * np.exp(-1j * (delta3 - alpha3) * t))
        h[..., _pair_idx(2, 0), _pair_idx(1, 1)] = (math.sqrt(2.0) * side
                                                    * np.exp(-1j * (delta3 + alpha2) * t))
        return h + np.conj(np.swapaxes(h, -1, -2))
    ph = np.exp(1j * np.asarray(phi3(t), dtype=complex))
    h[..., _pair_idx(1, 1), _pair_idx(0, 2)] = math.sqrt(2.0) * gj * ph
    if mode == "full":
        h[..., _pair_idx(1, 0), _pair_idx(0, 1)] = gj * ph * np.exp(-1j * alpha3 * t)
        h[..., _pair_idx(2, 0), _pair_idx(1, 1)] = (math.sqrt(2.0) * gj * ph
                                                    * np.exp(-1j * (alpha2 + alpha3) * t))
    return h + np.conj(np.swapaxes(h, -1, -2))


# -- encodings and targets ----------------------------------------------------

def dfs_encode(state: QuantumState, subspace: str) -> QuantumState:
    """Embed a logical state into the physical excitation-pattern basis.

    "S1" maps a qubit onto the single-excitation pair |100>, |001> of the
    chain.  "S2" maps two qubits onto four transmons paired as (1,2) and
    (3,4), one excitation per pair; logical |11> puts both excitations on
    the inner transmons 2 and 3, where the two-photon loop acts.  Site
    dimensions are (2, 3, 3, 2): the inner pair needs its second excited
    states, the outer spectators do not.
    """
    if subspace == "S1":
        iso = np.zeros((8, 2), dtype=complex)
        iso[IDX_0L, 0] = 1.0
        iso[IDX_1L, 1] = 1.0
    elif subspace == "S2":
        dims = (2, 3, 3, 2)
        iso = np.zeros((36, 4), dtype=complex)
        for logical in range(4):
            j, k = logical >> 1, logical & 1
            occ = (1 - j, j, k, 1 - k)
            phys = np.ravel_multi_index(occ, dims)
            iso[phys, logical] = 1.0
    else:
        raise ValueError(f"unknown subspace {subspace!r}")
    if state.dim != iso.shape[1]:
        raise ValueError(f"state dimension {state.dim} does not fit {subspace}")
    if state.kind == "vector":
        return QuantumState.vector(iso @ state.data)
    return QuantumState.density(iso @ state.data @ dagger(iso))


def cp_target(gamma: float) -> np.ndarray:
    """Controlled-phase unitary: e^{i gamma} on logical |11>."""
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * gamma)]).astype(complex)


# -- configuration -------------------------------------------------------------

def _convert_units(raw: dict) -> dict:
    out = {}
    for key, val in raw.items():
        if key.endswith("_mhz"):
            out[key[:-4]] = float(val) * MHZ
        elif key.endswith("_khz"):
            out[key[:-4]] = float(val) * KHZ
        elif key.endswith("_over_pi"):
            out[key[:-8]] = float(val) * math.pi
        elif key == "kappa_fraction":
            continue
        else:
            out[key] = val
    if "kappa_fraction" in raw:
        out["kappa"] = float(raw["kappa_fraction"]) * float(raw.get("omega_max", 1.0))
    return out


def load_config(name_or_path: str) -> dict:
    """Load a model configuration by shipped name or YAML file path.

    Unit-suffixed keys are converted to angular rad/ns (``*_mhz``,
    ``*_khz``) or radians (``*_over_pi``) and the suffix dropped;
    ``kappa_fraction`` becomes ``kappa`` relative to ``omega_max``.
    """
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml"):
        if not p.exists():
            raise ValueError(f"config file not found: {name_or_path}")
        raw = yaml.safe_load(p.read_text())
    else:
        res = resources.files("holopath").joinpath("configs", f"{name_or_path}.yaml")
        try:
            raw = yaml.safe_load(res.read_text())
        except FileNotFoundError:
            raise ValueError(f"unknown config {name_or_path!r}") from None
    if not isinstance(raw, dict):
        raise ValueError("config must be a YAML mapping")
    return _convert_units(raw)
