"""Dense complex linear algebra and state containers for small Hilbert spaces.

Everything in this package lives in dimension <= 81, so matrices are plain
dense ``numpy`` arrays and no sparsity machinery exists. Operators are
complex128 throughout; stated tolerances assume double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conjugate(np.swapaxes(m, -1, -2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper so call sites stay uniform)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Anti-Hermitian arguments (the -i*H*dt propagator case) go through a
    Hermitian eigendecomposition, which keeps the result unitary to machine
    precision over long step products. Anything else falls back to
    scaling-and-squaring.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {m.shape}")
    scale = max(np.max(np.abs(m)), 1.0)
    if np.max(np.abs(m + dagger(m))) <= 1e-12 * scale:
        w, v = np.linalg.eigh(1j * m)  # m = -i*h with h Hermitian
        return (v * np.exp(-1j * w)) @ dagger(v)
    return scipy.linalg.expm(m)


def expm_unitary_steps(h_samples: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i*h*dt) for a batch of Hermitian samples, shape (n, d, d).

    Batched eigendecomposition; each factor is exactly unitary.
    """
    w, v = np.linalg.eigh(h_samples)
    phases = np.exp(-1j * w * dt)
    return np.einsum("...ij,...j,...kj->...ik", v, phases, v.conj())


def overlap_fidelity(a, b) -> float:
    """|<a|b>|^2 for two vectors, or <a|rho_b|a> when b is a density matrix."""
    av = _as_vector(a)
    if isinstance(b, QuantumState) and b.kind == "density":
        bm = b.data
        if bm.shape[0] != av.shape[0]:
            raise ValueError("dimension mismatch")
        return float(np.real(av.conj() @ bm @ av))
    bm = np.asarray(b.data if isinstance(b, QuantumState) else b)
    if bm.ndim == 2 and bm.shape[0] == bm.shape[1] and bm.shape[0] > 1:
        if bm.shape[0] != av.shape[0]:
            raise ValueError("dimension mismatch")
        return float(np.real(av.conj() @ bm @ av))
    bv = bm.reshape(-1)
    if bv.shape[0] != av.shape[0]:
        raise ValueError("dimension mismatch")
    return float(np.abs(av.conj() @ bv) ** 2)


def _as_vector(s) -> np.ndarray:
    if isinstance(s, QuantumState):
        if s.kind != "vector":
            raise ValueError("first argument must be a state vector")
        return s.data.reshape(-1)
    return np.asarray(s, dtype=complex).reshape(-1)


def unitary_distance_upto_phase(u: np.ndarray, v: np.ndarray) -> float:
    """1 - |Tr(u^dag v)| / d; zero iff u = exp(i*phi) v.

    Also used on propagators restricted to a computational sub-block, whose
    trace norm is then < d; the global-phase invariance still holds there.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"incompatible shapes {u.shape} vs {v.shape}")
    d = u.shape[0]
    return float(1.0 - np.abs(np.trace(dagger(u) @ v)) / d)


@dataclass(frozen=True)
class QuantumState:
    """State vector or density matrix with labeled basis.

    Invariants are enforced on construction: unit norm for vectors; for
    density matrices Hermiticity (1e-9), unit trace (1e-9) and eigenvalues
    above -1e-9.
    """

    kind: str
    data: np.ndarray
    basis_labels: tuple = field(default_factory=tuple)

    @classmethod
    def vector(cls, amplitudes, labels=None) -> "QuantumState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"state vector norm {n} is not 1")
        return cls("vector", v, _labels(labels, v.shape[0]))

    @classmethod
    def density(cls, matrix, labels=None) -> "QuantumState":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(m - dagger(m))) > 1e-9:
            raise ValueError("density matrix is not Hermitian")
        tr = np.real(np.trace(m))
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"density matrix trace {tr} is not 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-9:
            raise ValueError("density matrix has a negative eigenvalue")
        return cls("density", m, _labels(labels, m.shape[0]))

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def _labels(labels, dim: int) -> tuple:
    if labels is None:
        return tuple(f"|{i}>" for i in range(dim))
    labels = tuple(labels)
    if len(labels) != dim:
        raise ValueError("label count does not match dimension")
    return labels
