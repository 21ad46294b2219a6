"""Time evolution: unitary propagation and Lindblad master-equation integration.

The drive phases synthesized in :mod:`holopath.pathsynth` turn corners at the
segment boundaries tau1/tau2, so every integrator here accepts ``breakpoints``
and splits the grid there; stepping across a corner would silently degrade
the integration order. Midpoint exponential stepping keeps unitary evolution
exactly unitary per step; the master equation uses fixed-step RK4.
"""

from __future__ import annotations

import csv
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qcore import QuantumState, dagger, expm_unitary_steps


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [t0, t1] with the given number of steps."""

    t0: float
    t1: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.steps

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.steps + 1)

    def midpoints(self) -> np.ndarray:
        return self.t0 + (np.arange(self.steps) + 0.5) * self.dt

    def half_times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, 2 * self.steps + 1)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    metadata: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]

    def export_csv(self, path, kind: str = "populations", labels=None):
        """Write t plus populations, or t plus Re/Im amplitudes, per row."""
        first = self.states[0]
        base = list(first.basis_labels)
        if kind == "populations":
            use = base if labels is None else list(labels)
            idx = [base.index(l) for l in use]
            header = ["t"] + use
            rows = []
            for t, st in zip(self.times, self.states):
                p = np.abs(st.data) ** 2 if st.kind == "vector" else np.real(np.diag(st.data))
                rows.append([repr(float(t))] + [repr(float(p[i])) for i in idx])
        elif kind == "amplitudes":
            if first.kind != "vector":
                raise ValueError("amplitude export needs vector states")
            header = ["t"]
            for l in base:
                header += [f"re_{l}", f"im_{l}"]
            rows = []
            for t, st in zip(self.times, self.states):
                row = [repr(float(t))]
                for a in st.data:
                    row += [repr(float(a.real)), repr(float(a.imag))]
                rows.append(row)
        else:
            raise ValueError(f"unknown export kind {kind!r}")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)


def _sample_hamiltonian(h, times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if isinstance(h, np.ndarray):
        return np.broadcast_to(h, times.shape + h.shape)
    try:
        probe = np.asarray(h(times[:1]))
        vectorized = probe.ndim == 3 and probe.shape[0] == 1
    except Exception:
        vectorized = False
    if vectorized:
        return np.asarray(h(times))
    return np.stack([np.asarray(h(float(t))) for t in times])


def _check_hermitian(hs: np.ndarray):
    asym = np.max(np.abs(hs - np.conj(np.swapaxes(hs, -1, -2))))
    scale = max(1.0, float(np.max(np.abs(hs))) if hs.size else 0.0)
    if asym > 1e-9 * scale:
        raise ValueError(f"non-Hermitian Hamiltonian sample (asymmetry {asym:.2e})")


def _split_parts(t0: float, t1: float, steps: int, breakpoints):
    """Partition [t0, t1] at interior breakpoints, steps shared by duration."""
    pts = [t0] + sorted(b for b in breakpoints if t0 < b < t1) + [t1]
    parts = []
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        n = max(1, round(steps * (b - a) / (t1 - t0)))
        parts.append((a, b, n))
    return parts


def propagate_unitary(h, grid: TimeGrid, *, breakpoints=(), check: bool = False,
                      trajectory_state: Optional[QuantumState] = None,
                      return_trajectory: bool = False):
    """Time-ordered propagator over the grid; optionally a state trajectory.

    ``check=True`` repeats the run at half the step size and raises if the
    result moves by more than 1e-6.
    """
    u, traj = _propagate_unitary_once(h, grid, breakpoints, trajectory_state,
                                      return_trajectory)
    if check:
        fine = TimeGrid(grid.t0, grid.t1, 2 * grid.steps)
        u2, _ = _propagate_unitary_once(h, fine, breakpoints, None, False)
        defect = float(np.max(np.abs(u - u2)))
        if defect > 1e-6:
            raise RuntimeError(f"propagator changed by {defect:.2e} under step halving")
    return (u, traj) if return_trajectory else u


def _propagate_unitary_once(h, grid, breakpoints, trajectory_state, want_traj):
    psi = None if trajectory_state is None else trajectory_state.data.astype(complex)
    times_out = [grid.t0]
    raw = [psi.copy() if psi is not None else None]
    u = None
    for a, b, n in _split_parts(grid.t0, grid.t1, grid.steps, breakpoints):
        dt = (b - a) / n
        mids = a + (np.arange(n) + 0.5) * dt
        hs = _sample_hamiltonian(h, mids)
        _check_hermitian(hs)
        if u is None:
            u = np.eye(hs.shape[-1], dtype=complex)
        steps = expm_unitary_steps(hs, dt)
        for k in range(n):
            u = steps[k] @ u
            if want_traj:
                times_out.append(a + (k + 1) * dt)
                if psi is not None:
                    psi = steps[k] @ psi
                    raw.append(psi.copy())
                else:
                    raw.append(u.copy())
    if not want_traj:
        return u, None
    if trajectory_state is not None:
        labels = trajectory_state.basis_labels
        states = [QuantumState.vector(v, labels=labels) for v in raw]
        meta = {"content": "states"}
    else:
        raw[0] = np.eye(u.shape[0], dtype=complex)
        states = raw
        meta = {"content": "propagators"}
    return u, Trajectory(np.asarray(times_out), states, meta)


def _lindblad_terms(noise):
    terms = []
    if noise is not None:
        for op, rate in noise:
            if rate < 0:
                raise ValueError("collapse rates must be nonnegative")
            if rate == 0.0:
                continue
            od = dagger(op)
            terms.append((rate, np.asarray(op, dtype=complex), od, od @ op))
    return terms


def _lindblad_rhs(hb, rho, terms):
    out = -1j * (hb @ rho - rho @ hb)
    for rate, op, od, nn in terms:
        out += rate * ((op @ rho) @ od - 0.5 * (nn @ rho + rho @ nn))
    return out


def lindblad_rk4(h_half, dt: float, rho0, noise=None, record=None) -> np.ndarray:
    """Fixed-step RK4 master-equation kernel.

    ``h_half``: Hamiltonian at half-step resolution, shape (..., 2N+1, d, d);
    ``rho0``: (..., d, d), optionally with one extra batch axis relative to
    the Hamiltonian's leading axes, which then broadcasts over it. The rate
    convention: each (op, rate) pair contributes rate * (op rho op^dag -
    {op^dag op, rho}/2). ``record(step, rho)`` is called after every step.
    """
    terms = _lindblad_terms(noise)
    rho = np.asarray(rho0, dtype=complex)
    n = (h_half.shape[-3] - 1) // 2
    batched = rho.ndim > h_half.ndim - 1
    for k in range(n):
        h1 = h_half[..., 2 * k, :, :]
        h2 = h_half[..., 2 * k + 1, :, :]
        h3 = h_half[..., 2 * k + 2, :, :]
        if batched:
            h1 = h1[..., None, :, :]
            h2 = h2[..., None, :, :]
            h3 = h3[..., None, :, :]
        k1 = _lindblad_rhs(h1, rho, terms)
        k2 = _lindblad_rhs(h2, rho + (0.5 * dt) * k1, terms)
        k3 = _lindblad_rhs(h2, rho + (0.5 * dt) * k2, terms)
        k4 = _lindblad_rhs(h3, rho + dt * k3, terms)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if record is not None:
            record(k, rho)
    return rho


def propagate_lindblad(h, noise, rho0: QuantumState, grid: TimeGrid, *,
                       breakpoints=(), store="final",
                       check_convergence: bool = False) -> Trajectory:
    """Integrate the master equation; returns a trajectory of density states.

    ``store``: "final" (endpoints only), "all", or an integer stride.
    ``check_convergence=True`` repeats at half the step size and raises on a
    final-state discrepancy above 1e-5.
    """
    if rho0.kind == "vector":
        rho_init = np.outer(rho0.data, rho0.data.conj())
    else:
        rho_init = rho0.data.astype(complex)
    labels = rho0.basis_labels

    rho, recorded = _lindblad_run(h, noise, rho_init, grid, breakpoints, store)
    if check_convergence:
        fine = TimeGrid(grid.t0, grid.t1, 2 * grid.steps)
        rho2, _ = _lindblad_run(h, noise, rho_init, fine, breakpoints, "final")
        defect = float(np.max(np.abs(rho - rho2)))
        if defect > 1e-5:
            raise RuntimeError(f"step-halving discrepancy {defect:.2e} exceeds 1e-5")

    drift = abs(float(np.real(np.trace(rho))) - float(np.real(np.trace(rho_init))))
    if drift > 1e-7:
        raise RuntimeError(f"trace drift {drift:.2e} exceeds 1e-7")
    floor = float(np.min(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))))
    if floor < -1e-7:
        raise RuntimeError(f"positivity violated: eigenvalue floor {floor:.2e}")

    times = np.asarray([grid.t0] + [t for t, _ in recorded])
    states = [QuantumState.density(rho_init, labels=labels)]
    states += [QuantumState.density(m, labels=labels) for _, m in recorded]
    return Trajectory(times, states, {"content": "density", "steps": grid.steps})


def _lindblad_run(h, noise, rho_init, grid, breakpoints, store):
    parts = _split_parts(grid.t0, grid.t1, grid.steps, breakpoints)
    total = sum(n for _, _, n in parts)
    stride = None
    if store == "all":
        stride = 1
    elif isinstance(store, int):
        stride = store
    elif store != "final":
        raise ValueError(f"unknown store policy {store!r}")

    recorded = []
    rho = rho_init
    done = 0
    for a, b, n in parts:
        dt = (b - a) / n
        half = np.linspace(a, b, 2 * n + 1)
        half[-1] = b - 1e-9 * dt  # stay on this segment's branch of the drive
        hs = _sample_hamiltonian(h, half)
        _check_hermitian(hs)
        offset = done

        def record(k, r, _a=a, _dt=dt, _off=offset):
            g = _off + k + 1
            if (stride is not None and g % stride == 0 and g != total) or g == total:
                recorded.append((_a + (k + 1) * _dt, r.copy()))

        rho = lindblad_rk4(hs, dt, rho, noise, record=record)
        done += n
    return rho, recorded


def holonomy_accumulators(chi_t, xi_t, h, grid: TimeGrid, *, bright=None,
                          breakpoints=()):
    """Geometric and dynamical phase accumulated along a path (A11, K11).

    A11 = -(1/2) * integral of (1 - cos chi) d(xi) over the path; K11 is
    minus the time integral of the energy expectation in the state
    cos(chi/2)|bright> + sin(chi/2) e^{i xi}|aux>, with the auxiliary level
    last in the basis of ``h``. ``bright`` defaults to the first basis
    vector of the remaining subspace.
    """
    times = grid.times()
    extra = []
    for b in breakpoints:
        if grid.t0 < b < grid.t1:
            extra += [b - 1e-9 * grid.dt, b]
    if extra:
        times = np.unique(np.concatenate([times, extra]))
    chi = np.asarray(chi_t(times), dtype=float)
    xi = np.asarray(xi_t(times), dtype=float)
    if chi.size > 1 and float(np.max(np.abs(np.diff(chi)))) > 0.5:
        raise ValueError("discontinuous chi samples")

    dxi = np.diff(xi)
    chi_mid = 0.5 * (chi[1:] + chi[:-1])
    # azimuth is a gauge coordinate at the poles: a full-loop path (chi = pi)
    # legally steps xi by the whole span while sitting on the south pole
    jumps = (np.abs(dxi) > 0.5) & (np.abs(np.sin(chi_mid)) > 5e-3)
    if np.any(jumps):
        raise ValueError("discontinuous xi samples")
    a11 = -0.5 * float(np.sum(dxi * (1.0 - np.cos(chi_mid))))

    hs = _sample_hamiltonian(h, times)
    _check_hermitian(hs)
    d = hs.shape[-1]
    if bright is None:
        mu = np.zeros(d - 1, dtype=complex)
        mu[0] = 1.0
    else:
        mu = np.asarray(bright, dtype=complex).reshape(-1)
        if mu.shape[0] != d - 1:
            raise ValueError("bright vector does not match Hamiltonian dimension")
    psi = np.zeros((times.shape[0], d), dtype=complex)
    psi[:, : d - 1] = np.cos(chi / 2.0)[:, None] * mu
    psi[:, d - 1] = np.sin(chi / 2.0) * np.exp(1j * xi)
    e = np.einsum("ti,tij,tj->t", psi.conj(), hs, psi)
    if float(np.max(np.abs(e.imag))) > 1e-9 * max(1.0, float(np.max(np.abs(e)))):
        raise ValueError("energy expectation is not real; check Hamiltonian")
    k11 = -float(np.trapezoid(e.real, times))
    return a11, k11


PathTrack = namedtuple("PathTrack", ["times", "chi", "xi"])


def path_reconstruct(schedule, grid: Optional[TimeGrid] = None) -> PathTrack:
    """Bloch path of the auxiliary-state vector driven by the schedule.

    The angles obey chi' = Omega sin(phi0 - xi) and xi' = -Delta -
    Omega cot(chi) cos(phi0 - xi); integrating them directly is singular
    at the poles, which the full-loop path must cross, so the state itself
    is propagated in the regular two-level (bright, aux) chart and the
    angles are read off as chi = 2 atan2(|c_a|, |c_mu|), xi = arg(c_a) -
    arg(c_mu).  xi is unwrapped and pinned to xi1 at t = 0 where the
    azimuth is a gauge choice.  For a valid schedule the path climbs to its
    design latitude and closes back to the pole at tau.
    """
    if grid is None:
        grid = TimeGrid(0.0, schedule.tau, 4000)

    def h2(t):
        t = np.asarray(t, dtype=float)
        om = np.asarray(schedule.omega(t), dtype=float)
        ph = np.asarray(schedule.phase0(t), dtype=float)
        h = np.zeros(t.shape + (2, 2), dtype=complex)
        h[..., 0, 1] = 0.5 * om * np.exp(-1j * ph)
        h[..., 1, 0] = np.conj(h[..., 0, 1])
        h[..., 1, 1] = np.asarray(schedule.detuning(t), dtype=float)
        return h

    start = QuantumState.vector([1.0, 0.0])
    _, traj = propagate_unitary(h2, grid,
                                breakpoints=(schedule.tau1, schedule.tau2),
                                trajectory_state=start, return_trajectory=True)
    amps = np.array([st.data for st in traj.states])
    chi = 2.0 * np.arctan2(np.abs(amps[:, 1]), np.abs(amps[:, 0]))
    xi = np.angle(amps[:, 1]) - np.angle(amps[:, 0])
    xi[0] = float(schedule.xi1)
    return PathTrack(np.asarray(traj.times), chi, np.unwrap(xi))
