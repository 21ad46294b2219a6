"""Grid experiments: area maps, error-robustness maps, parameter searches.

Every operation builds a SweepGrid and evaluates it through run_sweep.
Cells are grouped into chunks whose boundaries do not depend on the worker
count, and no cell's arithmetic reads another cell's result, so the emitted
CSV bytes are identical for any level of parallelism.  A failure inside a
chunk masks its cells (value NaN, reason recorded) instead of aborting the
sweep.

Master-equation cells share one fixed-step RK4 kernel, batched over the
cells of a chunk; the drive-phase breakpoints of each schedule split the
time grid exactly as in dynamics.propagate_lindblad.  Fidelity cells evolve
the logical basis operators once and average over initial states by
linearity, which keeps the per-cell cost independent of the sample count.
"""

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.special import j1 as _bessel_j1

from . import dynamics, metrics, models
from .models import MHZ, NoiseModel
from .pathsynth import GateSpec, PathSpec, synthesize, target_unitary
from .qcore import QuantumState

_STATS = ("fidelity", "infidelity", "area_over_pi", "max_population")


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian scan: axes of (name, unit, values) plus a payload descriptor."""

    axes: tuple
    payload: dict
    budget: int = 100_000

    def __post_init__(self):
        if not self.axes:
            raise ValueError("grid needs at least one axis")
        norm = []
        cells = 1
        for name, unit, values in self.axes:
            v = np.asarray(values, dtype=float)
            if v.ndim != 1 or v.size == 0:
                raise ValueError(f"axis {name!r} must be a nonempty 1-d sequence")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"axis {name!r} has non-finite values")
            if v.size > 1:
                d = np.diff(v)
                if not (np.all(d > 0) or np.all(d < 0)):
                    raise ValueError(f"axis {name!r} must be strictly monotone")
            norm.append((str(name), str(unit), v))
            cells *= v.size
        if cells > self.budget:
            raise ValueError(f"grid of {cells} cells exceeds budget {self.budget}")
        object.__setattr__(self, "axes", tuple(norm))

    @property
    def shape(self) -> tuple:
        return tuple(a[2].size for a in self.axes)

    def cells(self):
        vals = [a[2] for a in self.axes]
        for idx in np.ndindex(*self.shape):
            yield idx, tuple(float(vals[k][i]) for k, i in enumerate(idx))


@dataclass
class SweepResult:
    """Dense result plane over a SweepGrid, plus named extra planes.

    values is NaN exactly at the masked cells; every mask entry records the
    cell indices, coordinates and failure reason.
    """

    grid: SweepGrid
    values: np.ndarray
    stat: str
    extra: dict = field(default_factory=dict)
    masked: list = field(default_factory=list)
    runtime: float = 0.0

    def __post_init__(self):
        if self.stat not in _STATS:
            raise ValueError(f"unknown stat {self.stat!r}, expected one of {_STATS}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError("values shape does not match the grid")
        want = {tuple(int(i) for i in m["indices"]) for m in self.masked}
        got = {tuple(int(i) for i in idx) for idx in np.argwhere(np.isnan(self.values))}
        if want != got:
            raise ValueError("NaN cells do not match the masked-cell list")

    def to_csv_text(self) -> str:
        header = [f"{n} ({u})" for n, u, _ in self.grid.axes]
        header.append(f"{self.stat} (dimensionless)")
        header.extend(self.extra)
        lines = [",".join(header)]
        for idx, coord in self.grid.cells():
            row = [repr(c) for c in coord] + [repr(float(self.values[idx]))]
            for name in self.extra:
                cell = self.extra[name][idx]
                row.append(str(cell) if isinstance(cell, str) else repr(float(cell)))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        raw = self.to_csv_text().encode()
        return hashlib.sha1(b"blob %d\x00" % len(raw) + raw).hexdigest()

    def sidecar_dict(self) -> dict:
        return {
            "config": {
                "payload": self.payload_jsonable(),
                "axes": [[n, u, v.tolist()] for n, u, v in self.grid.axes],
                "stat": self.stat,
                "extra_columns": list(self.extra),
            },
            "content_hash": self.content_hash(),
            "runtime": self.runtime,
            "masked_cells": self.masked,
        }

    def payload_jsonable(self) -> dict:
        return json.loads(json.dumps(self.grid.payload))

    def save(self, basepath):
        base = Path(basepath)
        base.parent.mkdir(parents=True, exist_ok=True)
        csv_path = base.with_suffix(".csv")
        json_path = base.with_suffix(".json")
        csv_path.write_text(self.to_csv_text())
        json_path.write_text(json.dumps(self.sidecar_dict(), indent=1) + "\n")
        return csv_path, json_path

    @classmethod
    def from_csv(cls, csv_path) -> "SweepResult":
        csv_path = Path(csv_path)
        sidecar = csv_path.with_suffix(".json")
        if not sidecar.exists():
            raise ValueError(f"missing sidecar {sidecar}")
        doc = json.loads(sidecar.read_text())
        cfg = doc["config"]
        grid = SweepGrid(axes=tuple((n, u, v) for n, u, v in cfg["axes"]),
                         payload=cfg["payload"])
        lines = csv_path.read_text().strip().split("\n")[1:]
        n_axes = len(cfg["axes"])
        extra_names = cfg.get("extra_columns", [])
        flat_values = []
        flat_extra = {name: [] for name in extra_names}
        for line in lines:
            parts = line.split(",")
            flat_values.append(float(parts[n_axes]))
            for k, name in enumerate(extra_names):
                cell = parts[n_axes + 1 + k]
                try:
                    flat_extra[name].append(float(cell))
                except ValueError:
                    flat_extra[name].append(cell)
        values = np.asarray(flat_values).reshape(grid.shape)
        extra = {name: np.asarray(col).reshape(grid.shape)
                 for name, col in flat_extra.items()}
        return cls(grid, values, cfg["stat"], extra, doc.get("masked_cells", []),
                   doc.get("runtime", 0.0))


def _eval_chunk(args):
    payload, coords = args
    kernel = _KERNELS[payload["op"]][0]
    try:
        return kernel(payload, coords)
    except Exception as exc:  # mask the chunk, keep the rest of the sweep alive
        reason = f"{type(exc).__name__}: {exc}"
        return [(math.nan, None, reason)] * len(coords)


def run_sweep(grid: SweepGrid, workers: int = 1) -> SweepResult:
    """Evaluate every grid cell; failures become masked cells, not aborts."""
    op = grid.payload.get("op")
    if op not in _KERNELS:
        raise ValueError(f"unknown sweep op {op!r}")
    _, chunking = _KERNELS[op]
    t0 = time.perf_counter()

    cells = list(grid.cells())
    if chunking == "row":
        size = int(np.prod(grid.shape[1:], dtype=np.int64))
    elif chunking is None:
        size = len(cells)
    else:
        size = int(chunking)
    chunks = [cells[i:i + size] for i in range(0, len(cells), size)]
    args = [(grid.payload, [c for _, c in chunk]) for chunk in chunks]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_eval_chunk, args))
    else:
        outs = [_eval_chunk(a) for a in args]

    values = np.full(grid.shape, np.nan)
    extra = {}
    masked = []
    for chunk, out in zip(chunks, outs):
        for (idx, coord), (val, ext, err) in zip(chunk, out):
            if err is not None:
                masked.append({
                    "indices": [int(i) for i in idx],
                    "coords": {grid.axes[k][0]: coord[k] for k in range(len(coord))},
                    "reason": err,
                })
                continue
            values[idx] = val
            for name, cell in (ext or {}).items():
                if name not in extra:
                    fill = np.full(grid.shape, np.nan,
                                   dtype=object if isinstance(cell, str) else float)
                    extra[name] = fill
                extra[name][idx] = cell
    stat = grid.payload["stat"]
    return SweepResult(grid, values, stat, extra, masked, time.perf_counter() - t0)


# -- pulse-area map ------------------------------------------------------------

def _area_cells(payload, coords):
    out = []
    for chi, gamma in coords:
        s = chi + abs(gamma) / math.tan(chi / 2.0)
        if s > 2.0 * math.pi:
            region = "I"
        elif s > math.pi:
            region = "II"
        else:
            region = "III"
        out.append((s / math.pi, {"region": region}, None))
    return out


def pulse_area_map(chi_values, gamma_values, *, workers: int = 1,
                   budget: int = 100_000) -> SweepResult:
    """Pulse area S = chi + |gamma| cot(chi/2) in units of pi, with region labels.

    The area is the time integral of the coupling amplitude (half the bright
    Rabi frequency); the chi = pi row is the constant pi-pulse level set.
    The boundary level sets S = pi and S = 2pi attach to the smaller-area
    region.
    """
    chis = np.asarray(chi_values, dtype=float)
    if np.any(chis <= 0.0):
        raise ValueError("chi must be positive")
    if np.any(chis > math.pi + 1e-12):
        raise ValueError("chi must not exceed pi")
    grid = SweepGrid(axes=(("chi", "rad", chis), ("gamma", "rad", gamma_values)),
                     payload={"op": "pulse_area", "stat": "area_over_pi"},
                     budget=budget)
    return run_sweep(grid, workers)


# -- three-level-model fidelity maps -------------------------------------------

_PAUX3 = np.diag([0.0, 0.0, 1.0]).astype(complex)


def _lambda_channel_fidelity(schedule, deltas, epss, steps, kappa_scale, n_avg, target):
    # batch of (delta, eps) cells: evolve the three logical basis operators
    # of every cell at once, then average initial states by linearity
    noise0 = models.lambda_collapse_ops(schedule.omega_max)
    noise = NoiseModel(ops=noise0.ops,
                       rates=tuple(r * kappa_scale for r in noise0.rates))
    model0 = models.LambdaModel(schedule)
    deltas = np.asarray(deltas, dtype=float)
    epss = np.asarray(epss, dtype=float)
    g = deltas.size
    rho = np.zeros((g, 3, 3, 3), dtype=complex)
    rho[:, 0, 0, 0] = 1.0  # |0><0|
    rho[:, 1, 0, 1] = 1.0  # |0><1|
    rho[:, 2, 1, 1] = 1.0  # |1><1|

    parts = dynamics._split_parts(0.0, schedule.tau, steps,
                                  (schedule.tau1, schedule.tau2))
    for a, b, n in parts:
        dt = (b - a) / n
        half = np.linspace(a, b, 2 * n + 1)
        half[-1] = b - 1e-9 * dt
        hd = models.lambda_hamiltonian(model0, half)
        hc = ((1.0 + epss)[:, None, None, None] * hd[None]
              + (deltas * schedule.omega_max)[:, None, None, None] * _PAUX3)
        rho = dynamics.lindblad_rk4(hc, dt, rho, noise)

    out = np.empty(g)
    for k in range(g):
        e = np.empty((2, 2, 3, 3), dtype=complex)
        e[0, 0] = rho[k, 0]
        e[0, 1] = rho[k, 1]
        e[1, 0] = rho[k, 1].conj().T
        e[1, 1] = rho[k, 2]
        out[k] = metrics.single_qubit_fidelity_from_channel(e, target, n=n_avg).value
    return out


def _lambda_row_cells(payload, coords):
    chi = coords[0][0]
    errs = np.array([c[1] for c in coords])
    gate = GateSpec(*payload["gate"])
    try:
        sched = synthesize(gate, PathSpec(chi))
    except ValueError as exc:
        return [(math.nan, None, f"synthesis failed: {exc}")] * len(coords)
    zeros = np.zeros_like(errs)
    deltas, epss = (errs, zeros) if payload["error_kind"] == "delta" else (zeros, errs)
    fs = _lambda_channel_fidelity(sched, deltas, epss, payload["steps"],
                                  payload["kappa_scale"], payload["n_avg"],
                                  target_unitary(gate))
    return [(float(v), None, None) for v in fs]


def fidelity_vs_chi_error(gate: GateSpec, error_kind: str, chi_values, error_values, *,
                          steps: int = 4000, n_avg: int = 1000,
                          kappa_scale: float = 1.0, workers: int = 1,
                          budget: int = 20_000) -> SweepResult:
    """Average gate fidelity over (chi, relative error) under decoherence.

    error_kind "delta" detunes the shared excited level by err * omega_max;
    "epsilon" scales the drive amplitude by (1 + err). Rows that fail to
    synthesize are masked.
    """
    if error_kind not in ("delta", "epsilon"):
        raise ValueError(f"unknown error kind {error_kind!r}")
    errs = np.asarray(error_values, dtype=float)
    if errs.size and (errs.min() < -0.1 - 1e-12 or errs.max() > 0.1 + 1e-12):
        raise ValueError("relative errors are limited to [-0.1, 0.1]")
    payload = {"op": "lambda_chi_error", "stat": "fidelity",
               "gate": [gate.theta, gate.phi, gate.gamma],
               "error_kind": error_kind, "steps": int(steps),
               "n_avg": int(n_avg), "kappa_scale": float(kappa_scale)}
    grid = SweepGrid(axes=(("chi", "rad", chi_values),
                           (error_kind, "dimensionless", errs)),
                     payload=payload, budget=budget)
    return run_sweep(grid, workers)


def _lambda_surface_cells(payload, coords):
    gate = GateSpec(*payload["gate"])
    sched = synthesize(gate, PathSpec(payload["chi"]))
    deltas = np.array([c[0] for c in coords])
    epss = np.array([c[1] for c in coords])
    fs = _lambda_channel_fidelity(sched, deltas, epss, payload["steps"],
                                  payload["kappa_scale"], payload["n_avg"],
                                  target_unitary(gate))
    return [(float(1.0 - v), None, None) for v in fs]


def infidelity_surface(gate: GateSpec, chi: float, delta_values, eps_values, *,
                       steps: int = 4000, n_avg: int = 1000,
                       kappa_scale: float = 1.0, workers: int = 1,
                       budget: int = 20_000) -> SweepResult:
    """1 - F over simultaneous (delta, epsilon) errors at a fixed path."""
    for vals in (delta_values, eps_values):
        v = np.asarray(vals, dtype=float)
        if v.size and (v.min() < -0.1 - 1e-12 or v.max() > 0.1 + 1e-12):
            raise ValueError("relative errors are limited to [-0.1, 0.1]")
    payload = {"op": "lambda_surface", "stat": "infidelity",
               "gate": [gate.theta, gate.phi, gate.gamma], "chi": float(chi),
               "steps": int(steps), "n_avg": int(n_avg),
               "kappa_scale": float(kappa_scale)}
    grid = SweepGrid(axes=(("delta", "dimensionless", delta_values),
                           ("epsilon", "dimensionless", eps_values)),
                     payload=payload, budget=budget)
    return run_sweep(grid, workers)


def _aux_pop_cells(payload, coords):
    gate = GateSpec(*payload["gate"])
    out = []
    for (chi,) in coords:
        sched = synthesize(gate, PathSpec(chi))
        model = models.LambdaModel(sched)
        mu = gate.bright()
        psi0 = QuantumState.vector([mu[0], mu[1], 0.0])
        grid = dynamics.TimeGrid(0.0, sched.tau, payload["steps"])
        _, traj = dynamics.propagate_unitary(
            lambda t: models.lambda_hamiltonian(model, t), grid,
            breakpoints=(sched.tau1, sched.tau2),
            trajectory_state=psi0, return_trajectory=True)
        peak = max(float(np.abs(st.data[2]) ** 2) for st in traj.states)
        out.append((peak, None, None))
    return out


def aux_population_map(gate: GateSpec, chi_values, *, steps: int = 2000,
                       workers: int = 1, budget: int = 20_000) -> SweepResult:
    """Peak excited-level population of the bright state along the gate."""
    payload = {"op": "aux_population", "stat": "max_population",
               "gate": [gate.theta, gate.phi, gate.gamma], "steps": int(steps)}
    grid = SweepGrid(axes=(("chi", "rad", chi_values),), payload=payload,
                     budget=budget)
    return run_sweep(grid, workers)


# -- superconducting-chain robustness -------------------------------------------

_EMB_S1 = np.zeros((8, 3), dtype=complex)
_EMB_S1[models.IDX_0L, 0] = 1.0
_EMB_S1[models.IDX_1L, 1] = 1.0
_EMB_S1[models.IDX_AUX, 2] = 1.0


def _sc_channel_fidelity(schedule, g, beta, herr_fn, scales, noise, steps, n_avg, target):
    iso = _EMB_S1[:, :2]
    nvals = scales.size
    rho = np.zeros((nvals, 3, 8, 8), dtype=complex)
    rho[:, 0] = np.outer(iso[:, 0], iso[:, 0].conj())
    rho[:, 1] = np.outer(iso[:, 0], iso[:, 1].conj())
    rho[:, 2] = np.outer(iso[:, 1], iso[:, 1].conj())

    parts = dynamics._split_parts(0.0, schedule.tau, steps,
                                  (schedule.tau1, schedule.tau2))
    for a, b, n in parts:
        dt = (b - a) / n
        half = np.linspace(a, b, 2 * n + 1)
        half[-1] = b - 1e-9 * dt
        h3 = models.sc_effective_hamiltonian(schedule, g, beta, half)
        h8 = np.einsum("ri,tij,cj->trc", _EMB_S1, h3, _EMB_S1.conj())
        hc = h8[None] + scales[:, None, None, None] * herr_fn(half)[None]
        rho = dynamics.lindblad_rk4(hc, dt, rho, noise)

    out = np.empty(nvals)
    for k in range(nvals):
        e = np.empty((2, 2, 8, 8), dtype=complex)
        e[0, 0] = rho[k, 0]
        e[0, 1] = rho[k, 1]
        e[1, 0] = rho[k, 1].conj().T
        e[1, 1] = rho[k, 2]
        rep = metrics.single_qubit_fidelity_from_channel(
            e, target, n=n_avg, embed=lambda v: iso @ v)
        out[k] = rep.value
    return out


def _sc_robust_cells(payload, coords):
    scales = np.array([c[0] for c in coords]) * MHZ
    gate = GateSpec(*payload["gate"])
    config = payload["config"]
    g, beta = payload["g"], payload["beta"]
    omega = 2.0 * math.sqrt(2.0) * g * float(_bessel_j1(beta))
    noise = models.sc_collapse_ops(config)
    target = target_unitary(gate)

    curves = {}
    for curve, chi in (("ours", payload["chi"]), ("single_loop", math.pi)):
        sched = synthesize(gate, PathSpec(chi), omega_max=omega, envelope_kind="flat")
        if payload["error_kind"] == "delta":
            h_unit, _ = models.sc_error_hamiltonians(1.0, 1.0, 0.0, 0.0, config)

            def herr(half, _h=h_unit):
                return np.broadcast_to(_h, half.shape + (8, 8))
        else:
            _, herr = models.sc_error_hamiltonians(0.0, 0.0, 1.0, 1.0, config,
                                                   schedule=sched)
        curves[curve] = _sc_channel_fidelity(sched, g, beta, herr, scales, noise,
                                             payload["steps"], payload["n_avg"],
                                             target)
    return [(float(curves["ours"][k]),
             {"single_loop": float(curves["single_loop"][k])}, None)
            for k in range(len(coords))]


def sc_robustness_curves(gate: GateSpec, config: str, error_kind: str, values, *,
                         chi: float = 0.25 * math.pi, steps: int = 2000,
                         n_avg: int = 1000, workers: int = 1,
                         model_config: str = "sc_single",
                         budget: int = 20_000) -> SweepResult:
    """Fidelity vs static error for the chosen path next to the full loop.

    The first-sideband effective chain model is used with collective decay
    and dephasing at kappa = 2pi x 3 kHz.  Axis values are in 2pi MHz;
    "delta" shifts both qubit frequencies (and, for config "3T", pulls the
    auxiliary transmon by the opposite mean), "epsilon" adds an absolute
    drive-amplitude deviation on both legs.  The chi = pi reference curve is
    returned as the extra column "single_loop".
    """
    if error_kind not in ("delta", "epsilon"):
        raise ValueError(f"unknown error kind {error_kind!r}")
    if config not in ("cavity", "3T"):
        raise ValueError(f"unknown device config {config!r}")
    cfg = models.load_config(model_config)
    payload = {"op": "sc_robustness", "stat": "fidelity",
               "gate": [gate.theta, gate.phi, gate.gamma], "config": config,
               "error_kind": error_kind, "chi": float(chi),
               "g": cfg["g"], "beta": cfg["beta"],
               "steps": int(steps), "n_avg": int(n_avg)}
    grid = SweepGrid(axes=((error_kind, "2pi*MHz", values),), payload=payload,
                     budget=budget)
    return run_sweep(grid, workers)


def sc_full_gate_fidelity(gate: GateSpec, *, chi: float = 0.25 * math.pi,
                          steps: int = 40_000, n_avg: int = 1000,
                          model_config: str = "sc_single"):
    """Gate fidelity of the fully modulated transmon chain.

    Unlike the first-sideband effective model used everywhere else, this
    keeps the carrier at the full transmon-auxiliary detuning and every
    modulation sideband, so the step count has to resolve the carrier
    period.  The schedule is synthesized for the flat effective Rabi
    frequency 2 sqrt(2) g J1(beta); decay and dephasing act collectively at
    the device rate.  Returns the fidelity report of the resulting channel
    on the logical pair.
    """
    cfg = models.load_config(model_config)
    g, beta = cfg["g"], cfg["beta"]
    omega_max = 2.0 * math.sqrt(2.0) * g * float(_bessel_j1(beta))
    sched = synthesize(gate, PathSpec(chi), omega_max=omega_max,
                       envelope_kind="flat")
    model = models.sc_single_qubit_model(g, cfg["delta_full"], beta, sched)
    noise = models.sc_collapse_ops("cavity")

    iso = _EMB_S1[:, :2]
    rho = np.zeros((3, 8, 8), dtype=complex)
    rho[0] = np.outer(iso[:, 0], iso[:, 0].conj())
    rho[1] = np.outer(iso[:, 0], iso[:, 1].conj())
    rho[2] = np.outer(iso[:, 1], iso[:, 1].conj())

    parts = dynamics._split_parts(0.0, sched.tau, steps,
                                  (sched.tau1, sched.tau2))
    for a, b, n in parts:
        dt = (b - a) / n
        # blockwise so the sampled Hamiltonian stays a few MB at large n
        for k0 in range(0, n, 4000):
            m = min(4000, n - k0)
            a0 = a + k0 * dt
            half = a0 + dt * np.linspace(0.0, m, 2 * m + 1)
            if k0 + m == n:
                half[-1] = b - 1e-9 * dt
            hs = models.sc_driven_hamiltonian(model, half)
            rho = dynamics.lindblad_rk4(hs, dt, rho, noise)

    e = np.empty((2, 2, 8, 8), dtype=complex)
    e[0, 0] = rho[0]
    e[0, 1] = rho[1]
    e[1, 0] = rho[1].conj().T
    e[1, 1] = rho[2]
    return metrics.single_qubit_fidelity_from_channel(
        e, target_unitary(gate), n=n_avg, embed=lambda v: iso @ v)


def aux_population_series(gate: GateSpec, chi_values, *, steps: int = 2000,
                          points: int = 400) -> dict:
    """Auxiliary-level population vs normalized time, one row per path.

    Noiseless dynamics from the bright state.  The paths have different
    durations, so each series is resampled onto the shared fractional-time
    grid t/tau.  Returns arrays "t_over_tau" (points+1,), "populations"
    (len(chi), points+1), plus the chi and tau lists.
    """
    chis = [float(c) for c in np.asarray(chi_values, dtype=float)]
    frac = np.linspace(0.0, 1.0, points + 1)
    pops = np.empty((len(chis), points + 1))
    taus = []
    for i, chi in enumerate(chis):
        sched = synthesize(gate, PathSpec(chi))
        model = models.LambdaModel(sched)
        mu = gate.bright()
        psi0 = QuantumState.vector([mu[0], mu[1], 0.0])
        grid = dynamics.TimeGrid(0.0, sched.tau, steps)
        _, traj = dynamics.propagate_unitary(
            lambda t: models.lambda_hamiltonian(model, t), grid,
            breakpoints=(sched.tau1, sched.tau2),
            trajectory_state=psi0, return_trajectory=True)
        pa = np.array([float(np.abs(st.data[2]) ** 2) for st in traj.states])
        pops[i] = np.interp(frac, np.asarray(traj.times) / sched.tau, pa)
        taus.append(sched.tau)
    return {"t_over_tau": frac, "chi": chis, "populations": pops, "tau": taus}


# -- two-qubit parameter search --------------------------------------------------

def _spectator_site_channel(tau, kappa):
    # one idle three-level transmon: decay + dephasing superoperator, with
    # row-major vec convention so kron(c, c.conj) implements c rho c^dag
    sm, nz = models._SM3, models._NZ3
    eye = np.eye(3, dtype=complex)
    lmat = np.zeros((9, 9), dtype=complex)
    for c in (sm, nz):
        nn = c.conj().T @ c
        lmat += kappa * (np.kron(c, c.conj())
                         - 0.5 * np.kron(nn, eye) - 0.5 * np.kron(eye, nn.T))
    return expm(lmat * tau)


def _spectator_tensor(tau, kappa):
    # S[l, l', j, j'] = <occ(l)| Phi(|occ(j)><occ(j')|) |occ(l')>, occ = 1 - bit
    ch = _spectator_site_channel(tau, kappa)
    s = np.zeros((2, 2, 2, 2), dtype=complex)
    for j in range(2):
        for jp in range(2):
            e = np.zeros((3, 3), dtype=complex)
            e[1 - j, 1 - jp] = 1.0
            img = (ch @ e.reshape(9)).reshape(3, 3)
            for l in range(2):
                for lp in range(2):
                    s[l, lp, j, jp] = img[1 - l, 1 - lp]
    return s


def _two_qubit_run(beta3, delta3_mhz, gamma, chi, steps, params, n_avg=100,
                   want_series=False):
    g23, a2, a3 = params["g23"], params["alpha2"], params["alpha3"]
    kappa = params.get("kappa", models.KAPPA_SC)
    omega = 2.0 * math.sqrt(2.0) * g23 * float(_bessel_j1(beta3))
    if omega <= 0.0:
        raise ValueError(f"modulation index {beta3} gives no drive")
    sched = synthesize(GateSpec(0.0, 0.0, gamma), PathSpec(chi),
                       omega_max=omega, envelope_kind="flat")

    def phi3(t):
        return -sched.phase0(t)

    # modulation frequency stays calibrated to the design detuning, so a
    # scanned delta3 detunes the two-photon resonance instead of retuning it
    nu3 = params.get("nu3")

    def ham(t):
        return models.two_qubit_hamiltonian(g23, beta3, a2, a3,
                                            delta3_mhz * MHZ, phi3, t,
                                            mode="unlocked", nu3=nu3)

    noise = NoiseModel(ops=models.sc_collapse_ops("two_qubit").ops,
                       rates=(kappa, kappa))

    # 16 logical basis operators of the pair plus the benchmark superposition
    rho = np.zeros((17, 9, 9), dtype=complex)
    for b, (j, k, jp, kp) in enumerate(np.ndindex(2, 2, 2, 2)):
        rho[b, 3 * j + k, 3 * jp + kp] = 1.0
    bench = np.zeros(9, dtype=complex)
    bench[1] = bench[4] = 1.0 / math.sqrt(2.0)  # (|01> + |11>) / sqrt(2)
    rho[16] = np.outer(bench, bench.conj())

    series = {"times": [], "p01": [], "p11": [], "p02": []} if want_series else None
    stride = max(1, steps // 400)
    done = 0
    parts = dynamics._split_parts(0.0, sched.tau, steps, (sched.tau1, sched.tau2))
    for a, b, n in parts:
        dt = (b - a) / n
        half = np.linspace(a, b, 2 * n + 1)
        half[-1] = b - 1e-9 * dt
        hs = ham(half)
        record = None
        if want_series:
            def record(k, r, _a=a, _dt=dt, _off=done):
                gstep = _off + k + 1
                if gstep % stride == 0 or gstep == steps:
                    series["times"].append(_a + (k + 1) * _dt)
                    series["p01"].append(float(np.real(r[16, 1, 1])))
                    series["p11"].append(float(np.real(r[16, 4, 4])))
                    series["p02"].append(float(np.real(r[16, 2, 2])))
        rho = dynamics.lindblad_rk4(hs, dt, rho, noise, record=record)
        done += n

    # pair process tensor restricted to the logical occupations
    blocks = rho[:16].reshape(2, 2, 2, 2, 3, 3, 3, 3)[..., :2, :2, :2, :2]
    e23 = np.transpose(blocks, (4, 5, 6, 7, 0, 1, 2, 3))
    spect = _spectator_tensor(sched.tau, kappa)
    btens = np.einsum("lLjJ,lmLMjkJK,mMkK->lmLMjkJK", spect, e23, spect)
    e_log = np.transpose(btens.reshape(4, 4, 4, 4), (2, 3, 0, 1))
    f2 = metrics.two_qubit_fidelity_from_channel(
        e_log, models.cp_target(gamma), n=n_avg).value

    psif = np.zeros(9, dtype=complex)
    psif[1] = 1.0 / math.sqrt(2.0)
    psif[4] = np.exp(1j * gamma) / math.sqrt(2.0)
    fs = float(np.real(psif.conj() @ rho[16] @ psif))

    out = {"f2": f2, "state_fidelity": fs, "tau": sched.tau}
    if want_series:
        out["series"] = {k: np.asarray(v) for k, v in series.items()}
    return out


def _two_qubit_cells(payload, coords):
    out = []
    for beta3, delta3 in coords:
        try:
            res = _two_qubit_run(beta3, delta3, payload["gamma"], payload["chi"],
                                 payload["steps"], payload, n_avg=payload["n_avg"])
        except ValueError as exc:
            out.append((math.nan, None, f"run failed: {exc}"))
        else:
            out.append((res["f2"], None, None))
    return out


def _two_qubit_params(model_config):
    cfg = models.load_config(model_config)
    return {"g23": cfg["g23"], "alpha2": cfg["alpha2"], "alpha3": cfg["alpha3"],
            "nu3": cfg["delta3"] - cfg["alpha3"],
            "kappa": cfg.get("kappa", models.KAPPA_SC),
            "gamma": cfg.get("gamma", 0.25 * math.pi),
            "chi": cfg.get("chi", math.pi)}


def two_qubit_param_search(beta3_values, delta3_values, *, gamma=None, chi=None,
                           steps: int = 8000, n_avg: int = 100, workers: int = 1,
                           model_config: str = "sc_two_qubit",
                           budget: int = 20_000) -> SweepResult:
    """Controlled-phase average fidelity over the (beta3, delta3) plane.

    The modulated-coupling pair model is integrated per cell with collective
    decay and dephasing, and the two idle outer transmons of the encoding are
    composed in as independent decay channels.  The modulation frequency is
    calibrated once, to the config's design detuning, so the delta3 axis maps
    how far the actual pair detuning may drift from that calibration; the
    fidelity peaks where the two-photon transition stays resonant.
    """
    params = _two_qubit_params(model_config)
    payload = {"op": "two_qubit_search", "stat": "fidelity",
               "g23": params["g23"], "alpha2": params["alpha2"],
               "alpha3": params["alpha3"], "nu3": params["nu3"],
               "kappa": params["kappa"],
               "gamma": params["gamma"] if gamma is None else float(gamma),
               "chi": params["chi"] if chi is None else float(chi),
               "steps": int(steps), "n_avg": int(n_avg)}
    grid = SweepGrid(axes=(("beta3", "dimensionless", beta3_values),
                           ("delta3", "2pi*MHz", delta3_values)),
                     payload=payload, budget=budget)
    return run_sweep(grid, workers)


def two_qubit_point(beta3: float, delta3_mhz: float, *, gamma=None, chi=None,
                    steps: int = 24000, n_avg: int = 100,
                    model_config: str = "sc_two_qubit", series: bool = False) -> dict:
    """Single controlled-phase run: average fidelity, benchmark-state fidelity,
    gate time, and optionally the population series of the benchmark state."""
    params = _two_qubit_params(model_config)
    return _two_qubit_run(beta3, delta3_mhz,
                          params["gamma"] if gamma is None else float(gamma),
                          params["chi"] if chi is None else float(chi),
                          steps, params, n_avg=n_avg, want_series=series)


_KERNELS = {
    "pulse_area": (_area_cells, None),
    "lambda_chi_error": (_lambda_row_cells, "row"),
    "lambda_surface": (_lambda_surface_cells, 64),
    "aux_population": (_aux_pop_cells, 1),
    "sc_robustness": (_sc_robust_cells, 8),
    "two_qubit_search": (_two_qubit_cells, 1),
}
