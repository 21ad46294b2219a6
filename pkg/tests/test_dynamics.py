import csv

import numpy as np
import pytest

from holopath import dynamics, models, pathsynth
from holopath.dynamics import TimeGrid
from holopath.models import LambdaModel, NoiseModel, lambda_hamiltonian, lambda_collapse_ops
from holopath.pathsynth import GateSpec, PathSpec, target_unitary
from holopath.qcore import QuantumState, unitary_distance_upto_phase

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def smooth_h(t):
    t = np.asarray(t, dtype=float)
    return (np.multiply.outer(np.cos(t), SX) + 0.7 * np.multiply.outer(np.sin(t), SZ)).reshape(t.shape + (2, 2))


@pytest.fixture(scope="module")
def rx_setup():
    gate = GateSpec.named("rx", np.pi / 2)
    sched = pathsynth.synthesize(gate, PathSpec(0.25 * np.pi))
    model = LambdaModel(sched)
    return gate, sched, (lambda t: lambda_hamiltonian(model, t))


class TestTimeGrid:
    def test_basic_fields(self):
        g = TimeGrid(0.0, 2.0, 4)
        assert g.dt == 0.5
        assert np.allclose(g.times(), [0, 0.5, 1.0, 1.5, 2.0])
        assert np.allclose(g.midpoints(), [0.25, 0.75, 1.25, 1.75])
        assert len(g.half_times()) == 9

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 0)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 1.0, 10)


class TestPropagateUnitary:
    def test_zero_hamiltonian(self):
        u = dynamics.propagate_unitary(np.zeros((3, 3), dtype=complex), TimeGrid(0, 1, 10))
        assert np.allclose(u, np.eye(3), atol=1e-14)

    def test_constant_sz_closed_form(self):
        w, tau = 0.8, 2.5
        u = dynamics.propagate_unitary(0.5 * w * SZ, TimeGrid(0, tau, 64))
        expect = np.diag([np.exp(-0.5j * w * tau), np.exp(0.5j * w * tau)])
        assert np.allclose(u, expect, atol=1e-12)

    def test_unitarity(self):
        u = dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 300))
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12

    def test_synthesized_gate_hits_target(self, rx_setup):
        gate, sched, h = rx_setup
        u = dynamics.propagate_unitary(h, TimeGrid(0, sched.tau, 2000),
                                       breakpoints=(sched.tau1, sched.tau2))
        dist = unitary_distance_upto_phase(u[:2, :2], target_unitary(gate))
        assert dist < 1e-6
        # aux level returns home
        assert abs(u[2, 2]) > 1 - 1e-6

    def test_second_order_convergence(self):
        ref = dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 8192))
        e1 = np.max(np.abs(dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 64)) - ref))
        e2 = np.max(np.abs(dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 128)) - ref))
        assert 3.0 < e1 / e2 < 5.0

    def test_richardson_check(self):
        dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 2000), check=True)
        with pytest.raises(RuntimeError, match="halv"):
            dynamics.propagate_unitary(smooth_h, TimeGrid(0, 2, 8), check=True)

    def test_non_hermitian_sample_rejected(self):
        bad = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(ValueError, match="[Hh]ermitian"):
            dynamics.propagate_unitary(bad, TimeGrid(0, 1, 10))

    def test_trajectory_of_states(self, rx_setup):
        gate, sched, h = rx_setup
        psi0 = QuantumState.vector([0, 0, 1.0])
        u, traj = dynamics.propagate_unitary(h, TimeGrid(0, sched.tau, 400),
                                             breakpoints=(sched.tau1, sched.tau2),
                                             trajectory_state=psi0, return_trajectory=True)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(sched.tau)
        assert np.all(np.diff(traj.times) > 0)
        assert np.allclose(traj.states[-1].data, u @ psi0.data, atol=1e-12)


class TestPropagateLindblad:
    def test_amplitude_damping_exact(self):
        # H = 0, single decay |0><1| at rate kappa: excited population decays
        # as e^{-kappa t}, coherence as e^{-kappa t / 2}
        kappa, tau = 0.3, 3.0
        op = np.array([[0, 1], [0, 0]], dtype=complex)
        rho0 = QuantumState.density(np.full((2, 2), 0.5, dtype=complex))
        traj = dynamics.propagate_lindblad(np.zeros((2, 2), dtype=complex),
                                           NoiseModel(ops=(op,), rates=(kappa,)),
                                           rho0, TimeGrid(0, tau, 2000))
        rho = traj.final.data
        assert rho[1, 1].real == pytest.approx(0.5 * np.exp(-kappa * tau), abs=1e-10)
        assert rho[0, 1] == pytest.approx(0.5 * np.exp(-kappa * tau / 2), abs=1e-10)
        assert rho[0, 0].real == pytest.approx(1 - 0.5 * np.exp(-kappa * tau), abs=1e-10)

    def test_shared_decay_rate_doubles(self):
        # the collective lowering operator |0><a| + |1><a| empties the excited
        # level at twice the single-channel rate
        nm = lambda_collapse_ops(1.0)
        rho0 = QuantumState.density(np.diag([0, 0, 1.0]).astype(complex))
        traj = dynamics.propagate_lindblad(np.zeros((3, 3), dtype=complex), nm, rho0,
                                           TimeGrid(0, 1000.0, 1000))
        kappa = 1.0 / 2000
        assert traj.final.data[2, 2].real == pytest.approx(np.exp(-2 * kappa * 1000.0), abs=1e-10)

    def test_closed_system_matches_unitary_constant_h(self):
        h = 0.6 * SX + 0.3 * SZ
        grid = TimeGrid(0, 5.0, 500)
        u = dynamics.propagate_unitary(h, grid)
        rho0 = QuantumState.density(np.array([[0.7, 0.21], [0.21, 0.3]], dtype=complex))
        traj = dynamics.propagate_lindblad(h, NoiseModel(ops=(), rates=()), rho0, grid)
        assert np.max(np.abs(traj.final.data - u @ rho0.data @ u.conj().T)) < 1e-8

    def test_closed_system_matches_unitary_gate(self, rx_setup):
        gate, sched, h = rx_setup
        grid = TimeGrid(0, sched.tau, 4000)
        bps = (sched.tau1, sched.tau2)
        u = dynamics.propagate_unitary(h, grid, breakpoints=bps)
        psi = np.array([0.6, 0.8, 0], dtype=complex)
        rho0 = QuantumState.density(np.outer(psi, psi.conj()))
        traj = dynamics.propagate_lindblad(h, NoiseModel(ops=(), rates=()), rho0, grid, breakpoints=bps)
        assert np.max(np.abs(traj.final.data - u @ rho0.data @ u.conj().T)) < 1e-4

    def test_fourth_order_convergence(self):
        h = 0.9 * SX
        op = np.array([[0, 1], [0, 0]], dtype=complex)
        nm = NoiseModel(ops=(op,), rates=(0.25,))
        rho0 = QuantumState.density(np.diag([0.2, 0.8]).astype(complex))
        ref = dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, 2, 4096)).final.data
        e1 = np.max(np.abs(dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, 2, 16)).final.data - ref))
        e2 = np.max(np.abs(dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, 2, 32)).final.data - ref))
        assert 10.0 < e1 / e2 < 24.0

    def test_trace_and_hermiticity_preserved(self, rx_setup):
        gate, sched, h = rx_setup
        nm = lambda_collapse_ops(sched.omega_max)
        rho0 = QuantumState.density(np.diag([1.0, 0, 0]).astype(complex))
        traj = dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, sched.tau, 3000),
                                           breakpoints=(sched.tau1, sched.tau2), store="all")
        for st in traj.states[:: len(traj.states) // 7]:
            rho = st.data
            assert abs(np.trace(rho).real - 1.0) < 1e-7
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-9

    def test_coarse_grid_raises_with_convergence_check(self, rx_setup):
        gate, sched, h = rx_setup
        nm = lambda_collapse_ops(sched.omega_max)
        rho0 = QuantumState.density(np.diag([1.0, 0, 0]).astype(complex))
        with pytest.raises(RuntimeError, match="discrepancy"):
            dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, sched.tau, 6),
                                        check_convergence=True)
        dynamics.propagate_lindblad(h, nm, rho0, TimeGrid(0, sched.tau, 2000),
                                    breakpoints=(sched.tau1, sched.tau2),
                                    check_convergence=True)

    def test_vector_initial_state_accepted(self):
        psi0 = QuantumState.vector([1, 0])
        traj = dynamics.propagate_lindblad(np.zeros((2, 2), dtype=complex),
                                           NoiseModel(ops=(), rates=()), psi0, TimeGrid(0, 1, 10))
        assert traj.final.kind == "density"
        assert traj.final.data[0, 0].real == pytest.approx(1.0)

    def test_store_stride(self):
        rho0 = QuantumState.density(np.eye(2, dtype=complex) / 2)
        traj = dynamics.propagate_lindblad(np.zeros((2, 2), dtype=complex),
                                           NoiseModel(ops=(), rates=()), rho0,
                                           TimeGrid(0, 1, 105), store=10)
        assert len(traj.times) == 12  # initial + every 10th + final
        assert traj.times[-1] == pytest.approx(1.0)


class TestTrajectoryExport:
    def test_population_csv(self, tmp_path):
        rho0 = QuantumState.density(np.diag([0.25, 0.75]).astype(complex), labels=["g", "e"])
        traj = dynamics.propagate_lindblad(np.zeros((2, 2), dtype=complex),
                                           NoiseModel(ops=(), rates=()), rho0,
                                           TimeGrid(0, 1, 20), store="all")
        out = tmp_path / "traj.csv"
        traj.export_csv(out, kind="populations")
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "g", "e"]
        assert len(rows) == 22  # header + initial + 20 steps
        assert float(rows[1][1]) == pytest.approx(0.25)
        assert float(rows[-1][2]) == pytest.approx(0.75)

    def test_amplitude_csv(self, tmp_path):
        psi0 = QuantumState.vector([0, 0, 1.0])
        gate = GateSpec.named("rx", 1.0)
        sched = pathsynth.synthesize(gate, PathSpec(0.5 * np.pi))
        model = LambdaModel(sched)
        _, traj = dynamics.propagate_unitary(lambda t: lambda_hamiltonian(model, t),
                                             TimeGrid(0, sched.tau, 50),
                                             trajectory_state=psi0, return_trajectory=True)
        out = tmp_path / "amp.csv"
        traj.export_csv(out, kind="amplitudes")
        with open(out) as fh:
            header = fh.readline().strip().split(",")
        assert header[0] == "t" and len(header) == 7


class TestHolonomyAccumulators:
    def test_static_path(self):
        zeros = np.zeros((3, 3), dtype=complex)
        a11, k11 = dynamics.holonomy_accumulators(lambda t: 0.3 + 0 * np.asarray(t),
                                                  lambda t: 0.7 + 0 * np.asarray(t),
                                                  zeros, TimeGrid(0, 1, 50))
        assert a11 == 0.0 and k11 == 0.0

    def test_generic_path_matches_closed_form(self):
        gamma, chi = np.pi / 4, np.pi / 4
        gate = GateSpec.named("rx", gamma)
        s = pathsynth.synthesize(gate, PathSpec(chi))
        model = LambdaModel(s)
        a11, k11 = dynamics.holonomy_accumulators(
            s.polar, s.azimuth, lambda t: lambda_hamiltonian(model, t),
            TimeGrid(0, s.tau, 4000), bright=gate.bright(),
            breakpoints=(s.tau1, s.tau2))
        gg, gd = pathsynth.closed_form_phases(gamma, chi)
        assert a11 == pytest.approx(gg, abs=1e-4)
        assert k11 == pytest.approx(gd, abs=1e-4)
        assert a11 + k11 == pytest.approx(gamma, abs=1e-3)
        assert k11 / a11 == pytest.approx(pathsynth.eta_of_chi(chi), abs=1e-3)

    def test_full_loop_kills_dynamical_part(self):
        gamma = 0.6
        gate = GateSpec.named("ry", gamma)
        s = pathsynth.synthesize(gate, PathSpec(np.pi))
        model = LambdaModel(s)
        a11, k11 = dynamics.holonomy_accumulators(
            s.polar, s.azimuth, lambda t: lambda_hamiltonian(model, t),
            TimeGrid(0, s.tau, 4000), bright=gate.bright(),
            breakpoints=(s.tau1, s.tau2))
        assert abs(k11) < 1e-6
        assert a11 == pytest.approx(gamma, abs=1e-4)

    def test_discontinuous_samples_rejected(self):
        zeros = np.zeros((3, 3), dtype=complex)
        step_xi = lambda t: np.where(np.asarray(t) < 0.5, 0.0, 2.0)
        with pytest.raises(ValueError, match="discontinu"):
            dynamics.holonomy_accumulators(lambda t: 0.5 + 0 * np.asarray(t), step_xi,
                                           zeros, TimeGrid(0, 1, 100))


class TestPathReconstruct:
    def test_plateau_and_closure(self):
        s = pathsynth.synthesize(GateSpec.named("rx", np.pi / 4), PathSpec(0.25 * np.pi))
        track = dynamics.path_reconstruct(s, TimeGrid(0, s.tau, 4000))
        assert np.max(track.chi) == pytest.approx(0.25 * np.pi, abs=1e-3)
        assert track.chi[-1] <= 1e-3
        # first segment is a longitude move: xi stays at xi1
        i1 = np.searchsorted(track.times, s.tau1) - 1
        assert track.xi[i1] == pytest.approx(s.xi1, abs=1e-3)

    def test_azimuth_span_matches_design(self):
        s = pathsynth.synthesize(GateSpec.named("ry", 0.8), PathSpec(0.3 * np.pi))
        track = dynamics.path_reconstruct(s, TimeGrid(0, s.tau, 4000))
        i2 = np.searchsorted(track.times, s.tau2) - 1
        assert track.xi[i2] == pytest.approx(s.xi2, abs=2e-3)

    def test_zero_angle_loop_returns(self):
        s = pathsynth.synthesize(GateSpec.named("rx", 0.0), PathSpec(0.4 * np.pi))
        track = dynamics.path_reconstruct(s, TimeGrid(0, s.tau, 2000))
        assert np.max(track.chi) == pytest.approx(0.4 * np.pi, abs=1e-3)
        assert track.chi[-1] <= 1e-3
        assert track.xi[-1] == pytest.approx(track.xi[0], abs=1e-3)
