import json

import numpy as np
import pytest
from scipy.integrate import simpson

from holopath import pathsynth
from holopath.pathsynth import GateSpec, PathSpec, PulseSchedule


class TestEta:
    def test_single_loop_limit(self):
        assert pathsynth.eta_of_chi(np.pi) == pytest.approx(0.0, abs=1e-12)

    def test_quarter_pi(self):
        assert pathsynth.eta_of_chi(np.pi / 4) == pytest.approx(-(1 + np.sqrt(2)), abs=1e-12)

    def test_two_thirds_pi(self):
        assert pathsynth.eta_of_chi(2 * np.pi / 3) == pytest.approx(1.0, abs=1e-12)

    def test_equator_guard(self):
        with pytest.raises(ValueError):
            pathsynth.eta_of_chi(np.pi / 2)
        with pytest.raises(ValueError):
            pathsynth.eta_of_chi(np.pi / 2 + 5e-7)


class TestXiSpan:
    def test_zero_gamma(self):
        assert pathsynth.solve_xi_span(0.0, 0.3 * np.pi) == 0.0

    def test_quarter_quarter(self):
        # (pi/2)/(sqrt(2)-1)
        got = pathsynth.solve_xi_span(np.pi / 4, np.pi / 4)
        assert got == pytest.approx(3.7922377, abs=1e-6)

    def test_single_loop(self):
        assert pathsynth.solve_xi_span(np.pi / 4, np.pi) == pytest.approx(-np.pi / 4, abs=1e-12)

    def test_equator_guard(self):
        with pytest.raises(ValueError):
            pathsynth.solve_xi_span(0.1, np.pi / 2)


class TestClosedFormPhases:
    def test_quarter_quarter(self):
        gg, gd = pathsynth.closed_form_phases(np.pi / 4, np.pi / 4)
        assert gg == pytest.approx(-0.5553604, abs=1e-6)
        assert gd == pytest.approx(1.3407585, abs=1e-6)

    def test_sum_is_gamma(self):
        for gamma in (0.3, -1.1, np.pi / 2):
            for chi in (0.2 * np.pi, 0.75 * np.pi, np.pi):
                gg, gd = pathsynth.closed_form_phases(gamma, chi)
                assert gg + gd == pytest.approx(gamma, abs=1e-12)

    def test_ratio_is_eta(self):
        for chi in (0.2 * np.pi, 0.4 * np.pi, 0.6 * np.pi, 0.9 * np.pi):
            gg, gd = pathsynth.closed_form_phases(0.7, chi)
            assert gd / gg == pytest.approx(pathsynth.eta_of_chi(chi), abs=1e-12)

    def test_single_loop_pure_geometric(self):
        gg, gd = pathsynth.closed_form_phases(1.234, np.pi)
        assert gg == pytest.approx(1.234, abs=1e-12)
        assert gd == pytest.approx(0.0, abs=1e-12)

    def test_zero_gamma(self):
        assert pathsynth.closed_form_phases(0.0, 0.3 * np.pi) == (0.0, 0.0)


class TestTargetUnitary:
    def test_identity(self):
        u = pathsynth.target_unitary(GateSpec(np.pi / 2, np.pi, 0.0))
        assert np.allclose(u, np.eye(2), atol=1e-15)

    def test_rx_half_pi(self):
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        u = pathsynth.target_unitary(GateSpec(np.pi / 2, np.pi, np.pi / 2))
        expect = np.exp(1j * np.pi / 4) * (np.cos(np.pi / 4) * np.eye(2) - 1j * np.sin(np.pi / 4) * sx)
        assert np.allclose(u, expect, atol=1e-14)

    def test_z_axis_phase_on_bright(self):
        # theta=0 puts the coupled (bright) level at |1>, so the accumulated
        # phase lands there: diag(1, e^{i gamma}). Verified against direct
        # propagation of the synthesized schedule.
        g = 0.77
        u = pathsynth.target_unitary(GateSpec(0.0, 0.0, g))
        assert np.allclose(u, np.diag([1.0, np.exp(1j * g)]), atol=1e-14)

    def test_named_gates(self):
        assert GateSpec.named("rx", 0.5) == GateSpec(np.pi / 2, np.pi, 0.5)
        assert GateSpec.named("ry", 0.5) == GateSpec(np.pi / 2, -np.pi / 2, 0.5)
        assert GateSpec.named("rz", 0.5).theta == 0.0
        with pytest.raises(ValueError):
            GateSpec.named("cnot", 0.5)

    def test_axis_table(self):
        np.testing.assert_allclose(GateSpec.named("rx", 1.0).axis(), [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(GateSpec.named("ry", 1.0).axis(), [0, 1, 0], atol=1e-15)
        np.testing.assert_allclose(GateSpec.named("rz", 1.0).axis(), [0, 0, 1], atol=1e-15)

    def test_bright_dark_orthonormal(self):
        g = GateSpec(1.1, 0.4, 0.9)
        b, d = g.bright(), g.dark()
        assert abs(np.vdot(b, b) - 1) < 1e-12
        assert abs(np.vdot(d, d) - 1) < 1e-12
        assert abs(np.vdot(b, d)) < 1e-12


def quad_area(sched, t0, t1, n=200001):
    ts = np.linspace(t0, t1, n)
    return simpson(sched.omega(ts), x=ts)


class TestSynthesize:
    @pytest.mark.parametrize("envelope", ["sin2", "flat"])
    @pytest.mark.parametrize("gamma,chi", [
        (np.pi / 2, 0.25 * np.pi),
        (np.pi / 4, 0.6 * np.pi),
        (-np.pi / 3, 0.4 * np.pi),
        (np.pi / 3, np.pi),
    ])
    def test_segment_areas(self, envelope, gamma, chi):
        gate = GateSpec.named("rx", gamma)
        s = pathsynth.synthesize(gate, PathSpec(chi), omega_max=1.0, envelope_kind=envelope)
        seg2 = 2 * abs(gamma) / np.tan(chi / 2)
        total = 2 * chi + seg2
        assert quad_area(s, 0, s.tau1) == pytest.approx(chi, rel=1e-9, abs=1e-9)
        assert quad_area(s, s.tau1, s.tau2) == pytest.approx(seg2, rel=1e-9, abs=1e-9)
        assert quad_area(s, s.tau2, s.tau) == pytest.approx(chi, rel=1e-9, abs=1e-9)
        assert quad_area(s, 0, s.tau) == pytest.approx(total, rel=1e-9)

    def test_total_duration(self):
        gate = GateSpec.named("rx", np.pi / 2)
        total = 2 * 0.25 * np.pi + 2 * (np.pi / 2) / np.tan(0.125 * np.pi)
        s2 = pathsynth.synthesize(gate, PathSpec(0.25 * np.pi), omega_max=1.0, envelope_kind="sin2")
        assert s2.tau == pytest.approx(2 * total, rel=1e-12)
        fl = pathsynth.synthesize(gate, PathSpec(0.25 * np.pi), omega_max=2.0, envelope_kind="flat")
        assert fl.tau == pytest.approx(total / 2.0, rel=1e-12)

    def test_boundary_ordering(self):
        s = pathsynth.synthesize(GateSpec.named("ry", 0.3), PathSpec(0.7 * np.pi))
        assert 0 < s.tau1 <= s.tau2 < s.tau

    def test_zero_gamma_degenerate_segment(self):
        s = pathsynth.synthesize(GateSpec.named("rz", 0.0), PathSpec(0.3 * np.pi))
        assert s.tau1 == pytest.approx(s.tau2, abs=1e-12)

    def test_single_loop_always_pi_pulse(self):
        for gamma in (0.1, 0.7, np.pi / 2):
            s = pathsynth.synthesize(GateSpec.named("rz", gamma), PathSpec(np.pi))
            assert quad_area(s, 0, s.tau) / 2 == pytest.approx(np.pi, rel=1e-9)

    def test_phase_difference_constant(self):
        gate = GateSpec(np.pi / 2, -np.pi / 2, 0.8)
        s = pathsynth.synthesize(gate, PathSpec(0.35 * np.pi))
        ts = np.linspace(0, s.tau, 501)
        np.testing.assert_allclose(s.phase0(ts) - s.phase1(ts), gate.phi, atol=1e-12)

    def test_detuning_zero(self):
        s = pathsynth.synthesize(GateSpec.named("rx", 1.0), PathSpec(0.5 * np.pi))
        assert np.all(s.detuning(np.linspace(0, s.tau, 11)) == 0)

    def test_envelope_continuity(self):
        s = pathsynth.synthesize(GateSpec.named("rx", 1.0), PathSpec(0.25 * np.pi))
        ts = np.linspace(0, s.tau, 20001)
        om = s.omega(ts)
        assert np.max(np.abs(np.diff(om))) < 5 * s.omega_max / 20000 * np.pi

    def test_azimuth_continuous_at_boundaries(self):
        # The drive phase turns a corner at tau1/tau2 but the path azimuth
        # xi(t) it encodes stays continuous.
        for gamma in (0.9, -0.9):
            s = pathsynth.synthesize(GateSpec.named("rx", gamma), PathSpec(0.3 * np.pi))
            eps = 1e-9 * s.tau
            xi_end_seg2 = s.azimuth(s.tau2 - eps)
            assert s.azimuth(s.tau1 + eps) == pytest.approx(s.xi1, abs=1e-6)
            assert xi_end_seg2 == pytest.approx(s.xi2, abs=1e-6)

    def test_polar_design_profile(self):
        s = pathsynth.synthesize(GateSpec.named("rx", np.pi / 2), PathSpec(0.25 * np.pi))
        ts = np.linspace(0, s.tau, 4001)
        chi = s.polar(ts)
        assert chi[0] == 0.0
        assert chi[-1] == pytest.approx(0.0, abs=1e-12)
        assert np.max(chi) == pytest.approx(0.25 * np.pi, abs=1e-12)
        mid = (s.tau1 <= ts) & (ts < s.tau2)
        assert np.all(chi[mid] == 0.25 * np.pi)
        # rises along the first longitude exactly as accumulated pulse area
        first = ts < s.tau1
        assert np.allclose(chi[first], s.cumulative_area(ts[first]), atol=1e-12)

    def test_polar_scalar_matches_array(self):
        s = pathsynth.synthesize(GateSpec.named("ry", -0.7), PathSpec(0.6 * np.pi))
        for t in (0.0, 0.3 * s.tau, 0.5 * s.tau, 0.97 * s.tau):
            assert s.polar(t) == pytest.approx(float(s.polar(np.array([t]))[0]), abs=1e-15)

    def test_degenerate_path_rejected(self):
        with pytest.raises(ValueError):
            pathsynth.synthesize(GateSpec.named("rx", 1.0), PathSpec(0.0))
        with pytest.raises(ValueError):
            pathsynth.synthesize(GateSpec.named("rx", 1.0), PathSpec(1e-12))

    def test_json_round_trip(self, tmp_path):
        s = pathsynth.synthesize(GateSpec.named("ry", np.pi / 4), PathSpec(0.25 * np.pi))
        doc = s.to_json_dict(samples=32)
        for key in ("tau", "tau1", "tau2", "omega_max", "envelope_kind", "chi", "xi1", "xi2", "theta", "phi", "gamma"):
            assert key in doc
        assert len(doc["samples"]["t"]) == 32
        path = tmp_path / "sched.json"
        path.write_text(json.dumps(doc))
        back = PulseSchedule.from_json_dict(json.loads(path.read_text()))
        ts = np.linspace(0, s.tau, 257)
        np.testing.assert_allclose(back.omega(ts), s.omega(ts), atol=1e-12)
        np.testing.assert_allclose(back.phase0(ts), s.phase0(ts), atol=1e-12)
