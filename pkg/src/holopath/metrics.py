"""Gate and state fidelity averages plus population read-outs.

The average gate fidelity used throughout is the uniform average of
<psi_f| rho(tau) |psi_f> over initial states cos(theta)|0> + sin(theta)|1>
with theta on a uniform grid over [0, 2pi) (inclusive of 0, exclusive of
2pi).  The coefficients are real, which is the convention the reference
numbers were produced with; it is not the Haar average.  Two-qubit averages
use the product-state grid over (theta_1, theta_2).
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .qcore import QuantumState

_DEFINITIONS = ("single_qubit_avg", "two_qubit_avg", "state")


@dataclass(frozen=True)
class FidelityReport:
    """A single fidelity number plus enough context to reproduce it."""

    value: float
    n_samples: int
    definition: str

    def __post_init__(self):
        if self.definition not in _DEFINITIONS:
            raise ValueError(f"unknown definition {self.definition!r}")
        v = float(self.value)
        if not -1e-9 <= v <= 1.0 + 1e-9:
            raise ValueError(f"fidelity {v} outside [0, 1]")
        object.__setattr__(self, "value", min(max(v, 0.0), 1.0))

    def to_json_dict(self, model_config_hash=None) -> dict:
        return {
            "value": self.value,
            "n_samples": self.n_samples,
            "definition": self.definition,
            "model_config_hash": model_config_hash,
        }


def _theta_grid(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one sample")
    return np.arange(n) * (2.0 * np.pi / n)


def _embed_vector(vec, embed, dim):
    if embed is not None:
        out = np.asarray(embed(vec), dtype=complex)
    else:
        out = np.zeros(dim, dtype=complex)
        out[: len(vec)] = vec
    return out


def _density_of(result) -> np.ndarray:
    if isinstance(result, QuantumState):
        if result.kind != "density":
            raise ValueError("evolve must return a density operator")
        return result.data
    return np.asarray(result, dtype=complex)


def single_qubit_gate_fidelity(evolve, target, n: int = 1000, embed=None) -> FidelityReport:
    """Average fidelity of `evolve` against a 2x2 target unitary.

    evolve maps an initial QuantumState (already embedded in the physical
    space) to the final density operator.  `embed` lifts logical 2-vectors
    into that space; by default they are zero-padded, which matches a model
    whose first two levels are the qubit.
    """
    target = np.asarray(target, dtype=complex)
    thetas = _theta_grid(n)
    overlaps = np.empty(n)
    for k, th in enumerate(thetas):
        c = np.array([np.cos(th), np.sin(th)])
        psi_f = target @ c
        probe = evolve(QuantumState.vector(_embed_vector(c, embed, 2)))
        rho = _density_of(probe)
        psi_f_phys = _embed_vector(psi_f, embed, rho.shape[0])
        overlaps[k] = np.real(psi_f_phys.conj() @ rho @ psi_f_phys)
    return FidelityReport(float(np.mean(overlaps)), n, "single_qubit_avg")


def two_qubit_gate_fidelity(evolve, target, n: int = 100, embed=None) -> FidelityReport:
    """Product-state average fidelity against a 4x4 target (n x n grid)."""
    target = np.asarray(target, dtype=complex)
    thetas = _theta_grid(n)
    overlaps = np.empty(n * n)
    k = 0
    for t1 in thetas:
        a = np.array([np.cos(t1), np.sin(t1)])
        for t2 in thetas:
            b = np.array([np.cos(t2), np.sin(t2)])
            c = np.kron(a, b)
            psi_f = target @ c
            probe = evolve(QuantumState.vector(_embed_vector(c, embed, 4)))
            rho = _density_of(probe)
            psi_f_phys = _embed_vector(psi_f, embed, rho.shape[0])
            overlaps[k] = np.real(psi_f_phys.conj() @ rho @ psi_f_phys)
            k += 1
    return FidelityReport(float(np.mean(overlaps)), n * n, "two_qubit_avg")


def _channel_average(e, target, coeffs, embed) -> float:
    # e[i, j] is the evolved image of the logical basis operator |i><j|;
    # linearity gives rho_out(psi) = sum_ij c_i c_j* e[i, j] for real c
    e = np.asarray(e, dtype=complex)
    dim = e.shape[-1]
    psi_f = coeffs @ target.T  # (n, d_logical)
    if embed is not None:
        phys = np.stack([np.asarray(embed(v), dtype=complex) for v in psi_f])
    else:
        phys = np.zeros((psi_f.shape[0], dim), dtype=complex)
        phys[:, : psi_f.shape[1]] = psi_f
    # <psi_f| e[i,j] |psi_f> for every sample, then contract with the
    # (real) initial-state coefficients
    sandwich = np.einsum("nd,ijde,ne->nij", phys.conj(), e, phys)
    vals = np.real(np.einsum("ni,nij,nj->n", coeffs, sandwich, coeffs))
    return float(np.mean(vals))


def single_qubit_fidelity_from_channel(e, target, n: int = 1000, embed=None) -> FidelityReport:
    """Same average as single_qubit_gate_fidelity, from a precomputed channel.

    e has shape (2, 2, d, d): the evolved density operators of the logical
    basis |i><j|.  Evolving three operators (the (1,0) image is the dagger
    of (0,1)) replaces one Lindblad run per sampled state.
    """
    thetas = _theta_grid(n)
    coeffs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    value = _channel_average(e, np.asarray(target, dtype=complex), coeffs, embed)
    return FidelityReport(value, n, "single_qubit_avg")


def two_qubit_fidelity_from_channel(e, target, n: int = 100, embed=None) -> FidelityReport:
    """Product-grid average from a (4, 4, d, d) evolved-basis tensor."""
    thetas = _theta_grid(n)
    single = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    coeffs = np.einsum("ai,bj->abij", single, single).reshape(n * n, 4)
    value = _channel_average(e, np.asarray(target, dtype=complex), coeffs, embed)
    return FidelityReport(value, n * n, "two_qubit_avg")


def state_fidelity(rho, psi_f) -> FidelityReport:
    """Overlap <psi_f| rho |psi_f> for one target state."""
    mat = _density_of(rho)
    v = np.asarray(psi_f, dtype=complex)
    return FidelityReport(float(np.real(v.conj() @ mat @ v)), 1, "state")


PopulationSeries = namedtuple("PopulationSeries", ["times", "series"])


def population_trace(trajectory, labels) -> PopulationSeries:
    """Diagonal populations <l|rho(t)|l> for each requested basis label."""
    states = trajectory.states
    if not states:
        raise ValueError("trajectory stores no states")
    have = states[0].basis_labels
    for lab in labels:
        if lab not in have:
            raise ValueError(f"unknown basis label {lab!r}, state has {have}")
    series = {}
    for lab in labels:
        idx = have.index(lab)
        vals = np.empty(len(states))
        for k, st in enumerate(states):
            if st.kind == "density":
                vals[k] = np.real(st.data[idx, idx])
            else:
                vals[k] = np.abs(st.data[idx]) ** 2
        series[lab] = vals
    return PopulationSeries(np.asarray(trajectory.times, dtype=float), series)
