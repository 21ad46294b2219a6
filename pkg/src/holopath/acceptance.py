"""Self-auditing acceptance suite: ten numbered checks over the library.

Each check re-derives its quantities from scratch through the public API
and returns a CriterionResult carrying the measured numbers, one line of
summary text and the check's own runtime.  The CLI exposes the suite as
``holopath verify``; the test suite runs the same functions, so a fresh
install can audit itself either way.

Checks that mirror a stated runtime budget include that budget in their
pass condition.  Nothing here is tunable on purpose: the grids, step
counts and tolerances are the published contract of the package.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import dynamics, metrics, models, pathsynth, sweeps
from .pathsynth import GateSpec, PathSpec, synthesize, target_unitary
from .qcore import QuantumState, unitary_distance_upto_phase

# the shared benchmark set: three non-commuting rotations crossed with the
# path latitudes used throughout, plus the full-loop row over gamma
GATE_TABLE = (("rx", math.pi / 2.0), ("ry", math.pi / 4.0), ("rz", math.pi / 3.0))
CHI_TABLE = (0.2 * math.pi, 0.25 * math.pi, 0.4 * math.pi, 0.6 * math.pi,
             0.75 * math.pi, math.pi)
FULL_LOOP_GAMMAS = tuple(np.linspace(0.0, math.pi / 2.0, 11))


@dataclass
class CriterionResult:
    slug: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""
    runtime: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.slug}: {self.detail} [{self.runtime:.1f}s]"


def _benchmark_schedules():
    """(gate, chi, schedule) for the gate x latitude benchmark set."""
    out = []
    for name, angle in GATE_TABLE:
        gate = GateSpec.named(name, angle)
        for chi in CHI_TABLE:
            out.append((gate, chi, synthesize(gate, PathSpec(chi))))
    return out


def _full_loop_schedules():
    """(gamma, schedule) along the chi = pi row."""
    return [(g, synthesize(GateSpec.named("rz", g), PathSpec(math.pi)))
            for g in FULL_LOOP_GAMMAS]


def check_gate_synthesis() -> CriterionResult:
    """Noiseless three-level propagation reproduces every target rotation.

    Distance to the target is measured up to a global phase on the logical
    block of the propagator; leakage is the worst-case population left on
    the auxiliary level over all logical inputs.
    """
    t0 = time.perf_counter()
    worst_dist = 0.0
    worst_leak = 0.0
    for gate, chi, sched in _benchmark_schedules():
        model = models.LambdaModel(sched)
        grid = dynamics.TimeGrid(0.0, sched.tau, 4000)
        u = dynamics.propagate_unitary(
            lambda t: models.lambda_hamiltonian(model, t), grid,
            breakpoints=(sched.tau1, sched.tau2))
        dist = unitary_distance_upto_phase(u[:2, :2], target_unitary(gate))
        leak = float(np.abs(u[2, 0]) ** 2 + np.abs(u[2, 1]) ** 2)
        worst_dist = max(worst_dist, dist)
        worst_leak = max(worst_leak, leak)
    rt = time.perf_counter() - t0
    passed = worst_dist <= 1e-3 and worst_leak <= 1e-3 and rt < 60.0
    return CriterionResult(
        "gate-synthesis", passed,
        {"max_distance": worst_dist, "max_leakage": worst_leak, "runtime_s": rt},
        f"max distance {worst_dist:.2e}, max leakage {worst_leak:.2e} "
        f"over {len(GATE_TABLE) * len(CHI_TABLE)} gate/path pairs",
        rt)


def check_area_law() -> CriterionResult:
    """Closed-form pulse area matches quadrature; full loop is a pi pulse.

    Every benchmark schedule's envelope is integrated numerically (composite
    Simpson on 40001 samples) and compared with chi + |gamma| cot(chi/2);
    the chi = pi row must sit at exactly pi for any rotation angle, and the
    region labels of the area map must match the S = pi and S = 2 pi level
    sets.
    """
    t0 = time.perf_counter()
    scheds = [(g.gamma, chi, s) for g, chi, s in _benchmark_schedules()]
    scheds += [(g, math.pi, s) for g, s in _full_loop_schedules()]
    worst_quad = 0.0
    worst_row = 0.0
    for gamma, chi, sched in scheds:
        ts = np.linspace(0.0, sched.tau, 40001)
        s_quad = float(simpson(np.asarray(sched.omega(ts)), x=ts)) / 2.0
        s_form = chi + abs(gamma) / math.tan(chi / 2.0)
        worst_quad = max(worst_quad, abs(s_quad - s_form))
        if chi == math.pi:
            worst_row = max(worst_row, abs(s_quad - math.pi))

    res = sweeps.pulse_area_map(np.linspace(0.02, 1.0, 41) * math.pi,
                                np.linspace(0.0, 0.5, 41) * math.pi)
    labels_ok = True
    region = res.extra["region"]
    for idx, (chi, gamma) in res.grid.cells():
        s = float(res.values[idx]) * math.pi
        want = "I" if s > 2.0 * math.pi else ("II" if s > math.pi else "III")
        if region[idx] != want:
            labels_ok = False
    rt = time.perf_counter() - t0
    passed = worst_quad <= 1e-9 and worst_row <= 1e-9 and labels_ok
    return CriterionResult(
        "area-law", passed,
        {"max_quadrature_gap": worst_quad, "max_full_loop_gap": worst_row,
         "region_labels_consistent": labels_ok},
        f"quadrature gap {worst_quad:.1e}, full-loop gap {worst_row:.1e}, "
        f"region labels {'consistent' if labels_ok else 'WRONG'}",
        rt)


def check_holonomy() -> CriterionResult:
    """Accumulated phase pair obeys the fixed dynamical-to-geometric ratio.

    The Bloch path is reconstructed from each schedule and fed to the phase
    accumulators; away from the equator the ratio K11/A11 must equal the
    latitude constant and the sum must reproduce the rotation angle mod
    2 pi.  On the full loop the dynamical part must vanish.
    """
    t0 = time.perf_counter()
    worst_ratio = 0.0
    worst_total = 0.0
    worst_loop = 0.0
    for gate, chi, sched in _benchmark_schedules():
        track = dynamics.path_reconstruct(sched)
        grid = dynamics.TimeGrid(0.0, sched.tau, 4000)
        model = models.LambdaModel(sched)
        a11, k11 = dynamics.holonomy_accumulators(
            lambda t: np.interp(t, track.times, track.chi),
            lambda t: np.interp(t, track.times, track.xi),
            lambda t: models.lambda_hamiltonian(model, t),
            grid, bright=gate.bright(), breakpoints=(sched.tau1, sched.tau2))
        if chi == math.pi:
            worst_loop = max(worst_loop, abs(k11) / abs(gate.gamma))
        if abs(chi - math.pi / 2.0) > 0.05:
            eta = pathsynth.eta_of_chi(chi)
            worst_ratio = max(worst_ratio, abs(k11 / a11 - eta))
        total = a11 + k11 - gate.gamma
        total = abs((total + math.pi) % (2.0 * math.pi) - math.pi)
        worst_total = max(worst_total, total)
    rt = time.perf_counter() - t0
    passed = worst_ratio <= 1e-3 and worst_total <= 1e-3 and worst_loop <= 1e-6
    return CriterionResult(
        "holonomy", passed,
        {"max_ratio_gap": worst_ratio, "max_total_phase_gap": worst_total,
         "full_loop_dynamical_fraction": worst_loop},
        f"ratio gap {worst_ratio:.2e}, total-phase gap {worst_total:.2e}, "
        f"full-loop dynamical fraction {worst_loop:.1e}",
        rt)


def check_aux_population() -> CriterionResult:
    """Peak auxiliary population grows with latitude and tops 0.9 on the loop."""
    t0 = time.perf_counter()
    chis = np.array([0.2, 0.4, 0.6, 0.8, 1.0]) * math.pi
    res = sweeps.aux_population_map(GateSpec.named("rx", math.pi / 2.0), chis)
    peaks = res.values
    monotone = bool(np.all(np.diff(peaks) >= 0.0))
    top = float(peaks[-1])
    rt = time.perf_counter() - t0
    passed = monotone and top > 0.9
    return CriterionResult(
        "aux-population", passed,
        {"peaks": [float(p) for p in peaks], "nondecreasing": monotone,
         "full_loop_peak": top},
        f"peaks {np.array2string(peaks, precision=3)}, "
        f"{'nondecreasing' if monotone else 'NOT monotone'}, "
        f"full loop {top:.3f}",
        rt)


def check_path_dominance() -> CriterionResult:
    """Short-path infidelity surface sits below the full loop's almost everywhere.

    21 x 21 grid of simultaneous detuning and amplitude errors over
    [-0.1, 0.1]^2 with decoherence at Omega_m / 2000: the chi = 0.25 pi
    surface must be lower at 95% of cells and strictly lower in grid mean,
    for both benchmark rotations, inside the runtime budget.
    """
    t0 = time.perf_counter()
    errs = np.linspace(-0.1, 0.1, 21)
    measured = {}
    passed = True
    bits = []
    for name, angle in (("rx", math.pi / 2.0), ("ry", math.pi / 4.0)):
        gate = GateSpec.named(name, angle)
        ours = sweeps.infidelity_surface(gate, 0.25 * math.pi, errs, errs)
        loop = sweeps.infidelity_surface(gate, math.pi, errs, errs)
        frac = float(np.mean(ours.values <= loop.values))
        mean_gap = float(np.mean(loop.values) - np.mean(ours.values))
        measured[name] = {"cell_fraction": frac, "mean_infidelity_gap": mean_gap}
        passed = passed and frac >= 0.95 and mean_gap > 0.0
        bits.append(f"{name}: {100 * frac:.1f}% cells, mean gap {mean_gap:+.2e}")
    rt = time.perf_counter() - t0
    passed = passed and rt < 900.0
    measured["runtime_s"] = rt
    return CriterionResult("path-dominance", passed, measured,
                           "; ".join(bits), rt)


def check_sc_full_fidelity() -> CriterionResult:
    """Fully modulated transmon chain hits the quoted gate fidelities."""
    t0 = time.perf_counter()
    windows = {"rx": (math.pi / 2.0, 0.9976), "ry": (math.pi / 4.0, 0.9982)}
    measured = {}
    passed = True
    bits = []
    for name, (angle, center) in windows.items():
        rep = sweeps.sc_full_gate_fidelity(GateSpec.named(name, angle))
        measured[name] = rep.value
        ok = abs(rep.value - center) <= 0.0010
        passed = passed and ok
        bits.append(f"{name}: {rep.value:.4f} (want {center:.4f}+-0.0010)")
    rt = time.perf_counter() - t0
    passed = passed and rt < 600.0
    measured["runtime_s"] = rt
    return CriterionResult("sc-full-fidelity", passed, measured,
                           "; ".join(bits), rt)


def check_sc_robustness() -> CriterionResult:
    """Short path at least matches the full loop against static transmon errors.

    Effective-model curves over [-2, 2] x 2 pi MHz for both rotations: ours
    never drops more than 1e-3 below the full loop; the cavity device beats
    the all-transmon one in grid mean against frequency drift while the two
    agree to 2e-3 against drive-amplitude error.
    """
    t0 = time.perf_counter()
    values = np.linspace(-2.0, 2.0, 9)
    min_margin = math.inf
    min_delta_gap = math.inf
    max_eps_gap = 0.0
    for name, angle in (("rx", math.pi / 2.0), ("ry", math.pi / 4.0)):
        gate = GateSpec.named(name, angle)
        curves = {}
        for config in ("cavity", "3T"):
            for kind in ("delta", "epsilon"):
                res = sweeps.sc_robustness_curves(gate, config, kind, values)
                curves[config, kind] = res
                if config == "cavity":
                    sl = np.asarray(res.extra["single_loop"], dtype=float)
                    min_margin = min(min_margin, float(np.min(res.values - sl)))
        dgap = float(np.mean(curves["cavity", "delta"].values)
                     - np.mean(curves["3T", "delta"].values))
        egap = float(np.max(np.abs(curves["cavity", "epsilon"].values
                                   - curves["3T", "epsilon"].values)))
        min_delta_gap = min(min_delta_gap, dgap)
        max_eps_gap = max(max_eps_gap, egap)
    rt = time.perf_counter() - t0
    passed = (min_margin >= -1e-3 and min_delta_gap > 0.0
              and max_eps_gap <= 2e-3)
    return CriterionResult(
        "sc-robustness", passed,
        {"min_margin_vs_full_loop": min_margin,
         "min_cavity_minus_3T_delta_mean": min_delta_gap,
         "max_cavity_vs_3T_epsilon_gap": max_eps_gap},
        f"margin vs full loop {min_margin:+.2e}, cavity-3T drift-mean gap "
        f"{min_delta_gap:+.2e}, amplitude-curve gap {max_eps_gap:.2e}",
        rt)


def check_two_qubit() -> CriterionResult:
    """Controlled-phase pair: quoted fidelities plus a sane parameter optimum.

    The 21 x 21 search spans modulation depths [1.0, 3.0] and pair
    detunings 2 pi x [500, 900] MHz with the modulation calibrated for the
    design detuning, so the detuning axis is a drift-robustness lobe around
    the design point.  The grid argmax must land in the quoted window, and
    the pinned operating point must reproduce both quoted fidelities at the
    fine step count.
    """
    t0 = time.perf_counter()
    betas = np.linspace(1.0, 3.0, 21)
    deltas = np.linspace(500.0, 900.0, 21)
    res = sweeps.two_qubit_param_search(betas, deltas)
    bi, di = np.unravel_index(int(np.nanargmax(res.values)), res.values.shape)
    beta_star = float(betas[bi])
    delta_star = float(deltas[di])

    point = sweeps.two_qubit_point(2.0, 700.0, steps=24000)
    f2 = float(point["f2"])
    fs = float(point["state_fidelity"])
    rt = time.perf_counter() - t0
    passed = (1.8 <= beta_star <= 2.2 and 650.0 <= delta_star <= 750.0
              and abs(f2 - 0.9950) <= 0.0015 and abs(fs - 0.9950) <= 0.0015
              and rt < 1800.0)
    return CriterionResult(
        "two-qubit", passed,
        {"argmax_beta3": beta_star, "argmax_delta3_mhz": delta_star,
         "gate_fidelity": f2, "state_fidelity": fs, "runtime_s": rt},
        f"argmax ({beta_star:.2f}, 2pi x {delta_star:.0f} MHz), "
        f"F2 {f2:.4f}, FS {fs:.4f} (want 0.9950+-0.0015)",
        rt)


def check_path_reconstruction() -> CriterionResult:
    """Integrated Bloch path closes at the pole and plateaus at the design latitude."""
    t0 = time.perf_counter()
    scheds = [(chi, s) for _, chi, s in _benchmark_schedules()]
    scheds += [(math.pi, s) for _, s in _full_loop_schedules()]
    worst_close = 0.0
    worst_plateau = 0.0
    for chi, sched in scheds:
        track = dynamics.path_reconstruct(sched)
        worst_close = max(worst_close, float(track.chi[-1]))
        worst_plateau = max(worst_plateau, abs(float(np.max(track.chi)) - chi))
    rt = time.perf_counter() - t0
    passed = worst_close <= 1e-3 and worst_plateau <= 1e-3
    return CriterionResult(
        "path-reconstruction", passed,
        {"max_final_chi": worst_close, "max_plateau_gap": worst_plateau,
         "paths": len(scheds)},
        f"final latitude {worst_close:.2e}, plateau gap {worst_plateau:.2e} "
        f"over {len(scheds)} paths",
        rt)


def check_hygiene() -> CriterionResult:
    """Integrator bookkeeping: trace, unitarity, convergence, determinism."""
    t0 = time.perf_counter()
    gate = GateSpec.named("rx", math.pi / 2.0)
    sched = synthesize(gate, PathSpec(0.25 * math.pi))
    model = models.LambdaModel(sched)
    ham = lambda t: models.lambda_hamiltonian(model, t)
    noise = models.lambda_collapse_ops()
    mu = gate.bright()
    rho0 = QuantumState.vector([mu[0], mu[1], 0.0])

    grid = dynamics.TimeGrid(0.0, sched.tau, 3000)
    traj = dynamics.propagate_lindblad(ham, noise, rho0, grid,
                                       breakpoints=(sched.tau1, sched.tau2))
    drift = abs(float(np.real(np.trace(traj.final.data))) - 1.0)

    fine = dynamics.TimeGrid(0.0, sched.tau, 6000)
    traj2 = dynamics.propagate_lindblad(ham, noise, rho0, fine,
                                        breakpoints=(sched.tau1, sched.tau2))
    halving = float(np.max(np.abs(traj.final.data - traj2.final.data)))

    u = dynamics.propagate_unitary(ham, grid,
                                   breakpoints=(sched.tau1, sched.tau2))
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(3))))

    kw = dict(steps=300, n_avg=16)
    one = sweeps.fidelity_vs_chi_error(gate, "delta",
                                       [0.25 * math.pi, math.pi],
                                       [-0.05, 0.05], workers=1, **kw)
    two = sweeps.fidelity_vs_chi_error(gate, "delta",
                                       [0.25 * math.pi, math.pi],
                                       [-0.05, 0.05], workers=2, **kw)
    deterministic = one.to_csv_text() == two.to_csv_text()
    rt = time.perf_counter() - t0
    passed = (drift <= 1e-7 and defect <= 1e-9 and halving <= 1e-5
              and deterministic)
    return CriterionResult(
        "hygiene", passed,
        {"trace_drift": drift, "unitarity_defect": defect,
         "step_halving_gap": halving, "deterministic_sweeps": deterministic},
        f"trace drift {drift:.1e}, unitarity defect {defect:.1e}, halving gap "
        f"{halving:.1e}, worker determinism "
        f"{'byte-exact' if deterministic else 'BROKEN'}",
        rt)


CRITERIA = (
    ("gate-synthesis", check_gate_synthesis),
    ("area-law", check_area_law),
    ("holonomy", check_holonomy),
    ("aux-population", check_aux_population),
    ("path-dominance", check_path_dominance),
    ("sc-full-fidelity", check_sc_full_fidelity),
    ("sc-robustness", check_sc_robustness),
    ("two-qubit", check_two_qubit),
    ("path-reconstruction", check_path_reconstruction),
    ("hygiene", check_hygiene),
)


def run(only=None, printer=None) -> list:
    """Run the suite (or the named subset) in order; returns the results."""
    known = {slug for slug, _ in CRITERIA}
    if only:
        bad = sorted(set(only) - known)
        if bad:
            raise ValueError(f"unknown criteria: {', '.join(bad)}")
    results = []
    for slug, fn in CRITERIA:
        if only and slug not in only:
            continue
        res = fn()
        results.append(res)
        if printer is not None:
            printer(res.line())
    return results
