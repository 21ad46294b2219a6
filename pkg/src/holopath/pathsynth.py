"""Pulse synthesis for longitude-latitude holonomic paths.

A gate is fixed by a rotation axis (theta, phi) and angle gamma. The evolving
auxiliary state starts at the north pole of the Bloch sphere attached to the
{bright, aux} doublet, runs down a longitude to polar angle chi, along the
latitude circle from azimuth xi1 to xi2, and back up to the pole:

    A(0, xi1) -> B(chi, xi1) -> C(chi, xi2) -> A(0, xi2)

The drive that produces this path is a single envelope with three phase
segments. Segment areas are (chi, 2|gamma| cot(chi/2), chi); the azimuth span
xi2 - xi1 = 2 gamma cos(chi) / (1 - cos(chi)) fixes the accumulated phase.
The geometric and dynamical parts of that phase obey gamma_d = eta(chi) *
gamma_g with eta = -(1 + sec chi), so the total stays path-shaped for every
chi away from the equator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

EQUATOR_GUARD = 1e-6

_NAMED_AXES = {
    "rx": (np.pi / 2, np.pi),
    "ry": (np.pi / 2, -np.pi / 2),
    "rz": (0.0, 0.0),
}


@dataclass(frozen=True)
class GateSpec:
    """Target holonomic rotation: angle gamma about the (theta, phi) axis."""

    theta: float
    phi: float
    gamma: float

    @classmethod
    def named(cls, name: str, gamma: float) -> "GateSpec":
        try:
            theta, phi = _NAMED_AXES[name.lower()]
        except KeyError:
            raise ValueError(f"unknown gate name {name!r}, expected one of {sorted(_NAMED_AXES)}") from None
        return cls(theta, phi, gamma)

    def axis(self) -> np.ndarray:
        return np.array([
            -np.sin(self.theta) * np.cos(self.phi),
            -np.sin(self.theta) * np.sin(self.phi),
            np.cos(self.theta),
        ])

    def bright(self) -> np.ndarray:
        """Qubit-space superposition that couples to the auxiliary level."""
        return np.array([np.sin(self.theta / 2), np.cos(self.theta / 2) * np.exp(1j * self.phi)])

    def dark(self) -> np.ndarray:
        """Orthogonal superposition untouched by the drive."""
        return np.array([np.cos(self.theta / 2), -np.sin(self.theta / 2) * np.exp(1j * self.phi)])


@dataclass(frozen=True)
class PathSpec:
    """Bloch-path choice: latitude chi, starting azimuth xi1 (a gauge)."""

    chi: float
    xi1: float = 0.0
    xi2: Optional[float] = None  # derived from gamma unless overridden


def eta_of_chi(chi: float) -> float:
    """Dynamical-to-geometric phase ratio, -(1 + sec chi).

    Diverges at the equator; calls within 1e-6 of pi/2 are rejected.
    """
    if abs(chi - np.pi / 2) <= EQUATOR_GUARD:
        raise ValueError("eta(chi) is singular at chi = pi/2")
    return -(1.0 + 1.0 / math.cos(chi))


def solve_xi_span(gamma: float, chi: float) -> float:
    """Azimuth span on the latitude circle for total phase gamma.

    Delta xi = 2 gamma / (sec chi - 1). The span crosses zero at the equator
    where eta blows up, so the same guard band applies.
    """
    if abs(chi - np.pi / 2) <= EQUATOR_GUARD:
        raise ValueError("xi span is degenerate at chi = pi/2 (eta diverges)")
    if gamma == 0.0:
        return 0.0
    return 2.0 * gamma / (1.0 / math.cos(chi) - 1.0)


def _xi_span_continuous(gamma: float, chi: float) -> float:
    # same quantity as solve_xi_span but in the form that stays finite
    # through chi = pi/2 (where it is simply 0)
    return 2.0 * gamma * math.cos(chi) / (1.0 - math.cos(chi))


def closed_form_phases(gamma: float, chi: float) -> tuple:
    """(gamma_g, gamma_d): geometric and dynamical parts of the total phase.

    gamma_g = -1/2 * Dxi * (1 - cos chi) = -gamma cos chi and
    gamma_d = 1/2 * Dxi * sin^2 chi / cos chi; they sum to gamma exactly.
    """
    if gamma == 0.0:
        return (0.0, 0.0)
    dxi = solve_xi_span(gamma, chi)
    gg = -0.5 * dxi * (1.0 - math.cos(chi))
    gd = 0.5 * dxi * math.sin(chi) ** 2 / math.cos(chi)
    return (gg, gd)


def target_unitary(gate: GateSpec) -> np.ndarray:
    """2x2 gate matrix exp(i gamma/2) exp(-i gamma/2 n.sigma), global phase included."""
    n = gate.axis()
    half = gate.gamma / 2.0
    nsigma = np.array([[n[2], n[0] - 1j * n[1]], [n[0] + 1j * n[1], -n[2]]])
    return np.exp(1j * half) * (np.cos(half) * np.eye(2) - 1j * np.sin(half) * nsigma)


@dataclass(frozen=True)
class PulseSchedule:
    """Piecewise drive for one gate: envelope plus three-segment phase law.

    All time dependence is derived from the stored scalars, so the object
    round-trips losslessly through its JSON form. phase0 - phase1 equals the
    gate's phi at every instant; detuning is identically zero here.
    """

    tau: float
    tau1: float
    tau2: float
    omega_max: float
    envelope_kind: str
    chi: float
    xi1: float
    xi2: float
    theta: float
    phi: float
    gamma: float

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        if self.envelope_kind == "sin2":
            return self.omega_max * np.sin(np.pi * t / self.tau) ** 2
        return np.full_like(t, self.omega_max)

    def cumulative_area(self, t):
        """Integral of omega from 0 to t, exact for both envelopes."""
        t = np.asarray(t, dtype=float)
        if self.envelope_kind == "sin2":
            return self.omega_max * (t / 2.0 - self.tau / (4.0 * np.pi) * np.sin(2.0 * np.pi * t / self.tau))
        return self.omega_max * t

    def detuning(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def _segment_masks(self, t):
        t = np.asarray(t, dtype=float)
        m2 = (t >= self.tau1) & (t < self.tau2)
        m3 = t >= self.tau2
        m1 = ~(m2 | m3)
        return t, m1, m2, m3

    def polar(self, t):
        """Design polar angle chi(t): rises along the first longitude, holds
        at chi through the latitude arc, returns to the pole on the last."""
        t, m1, m2, m3 = self._segment_masks(t)
        area = self.cumulative_area(t)
        out = np.empty_like(t)
        out[m1] = area[m1] if area.ndim else area
        out[m2] = self.chi
        out[m3] = self.chi - (area[m3] if area.ndim else area) + self.cumulative_area(self.tau2)
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def azimuth(self, t):
        """Latitude azimuth xi(t) encoded by the drive; continuous in t."""
        t, m1, m2, m3 = self._segment_masks(t)
        out = np.empty_like(t)
        out[m1] = self.xi1
        if np.any(m2):
            cot = math.cos(self.chi) / math.sin(self.chi)
            ramp = math.copysign(1.0, self.gamma) * cot * (self.cumulative_area(t[m2]) - self.chi)
            out[m2] = self.xi1 + ramp
        out[m3] = self.xi2
        return out if out.ndim else float(out)

    def phase0(self, t):
        t, m1, m2, m3 = self._segment_masks(t)
        out = np.empty_like(t)
        out[m1] = self.xi1 + np.pi / 2
        if np.any(m2):
            cot = math.cos(self.chi) / math.sin(self.chi)
            ramp = math.copysign(1.0, self.gamma) * cot * (self.cumulative_area(t[m2]) - self.chi)
            out[m2] = (np.pi if self.gamma > 0 else 0.0) + ramp + self.xi1
        out[m3] = self.xi2 - np.pi / 2
        return out if out.ndim else float(out)

    def phase1(self, t):
        return self.phase0(t) - self.phi

    def segment_areas(self) -> tuple:
        a = self.cumulative_area
        return (float(a(self.tau1)), float(a(self.tau2) - a(self.tau1)), float(a(self.tau) - a(self.tau2)))

    def to_json_dict(self, samples: int = 0) -> dict:
        doc = {
            "tau": self.tau, "tau1": self.tau1, "tau2": self.tau2,
            "omega_max": self.omega_max, "envelope_kind": self.envelope_kind,
            "chi": self.chi, "xi1": self.xi1, "xi2": self.xi2,
            "theta": self.theta, "phi": self.phi, "gamma": self.gamma,
        }
        if samples:
            ts = np.linspace(0.0, self.tau, samples)
            doc["samples"] = {
                "t": ts.tolist(),
                "omega": self.omega(ts).tolist(),
                "phase0": self.phase0(ts).tolist(),
                "phase1": self.phase1(ts).tolist(),
            }
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PulseSchedule":
        keys = ("tau", "tau1", "tau2", "omega_max", "envelope_kind", "chi", "xi1", "xi2", "theta", "phi", "gamma")
        return cls(**{k: doc[k] for k in keys})


def synthesize(gate: GateSpec, path: PathSpec, omega_max: float = 1.0,
               envelope_kind: str = "sin2") -> PulseSchedule:
    """Build the three-segment schedule driving the gate along the given path.

    Segment areas are (chi, 2|gamma| cot(chi/2), chi) under one global
    envelope; tau is fixed so the envelope with peak omega_max delivers the
    total area, and tau1/tau2 are located by root-finding on the cumulative
    area. The drive phase is

        xi1 + pi/2                                   on [0, tau1)
        pi*[gamma>0] + sgn(gamma) cot(chi) (F(t)-chi) + xi1   on [tau1, tau2)
        xi2 - pi/2                                   on [tau2, tau]

    with F the cumulative area. The azimuth span uses the form of Delta xi
    that is continuous through chi = pi/2 (it vanishes there), so synthesis
    itself has no equator exclusion; only the eta/xi-span closed forms do.
    """
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    if envelope_kind not in ("sin2", "flat"):
        raise ValueError(f"unknown envelope {envelope_kind!r}")
    chi = path.chi
    if not (0.0 < chi <= np.pi):
        raise ValueError(f"chi must lie in (0, pi], got {chi}")
    gamma = gate.gamma
    seg2 = 2.0 * abs(gamma) / math.tan(chi / 2.0)
    if not math.isfinite(seg2) or seg2 > 1e8:
        raise ValueError(f"segment-2 area {seg2:.3g} diverges: chi too close to 0")
    total = 2.0 * chi + seg2

    # peak-amplitude normalization: mean of sin^2 is 1/2
    tau = 2.0 * total / omega_max if envelope_kind == "sin2" else total / omega_max

    if envelope_kind == "sin2":
        cum = lambda t: omega_max * (t / 2.0 - tau / (4.0 * np.pi) * math.sin(2.0 * np.pi * t / tau))
    else:
        cum = lambda t: omega_max * t
    tau1 = brentq(lambda t: cum(t) - chi, 0.0, tau, xtol=1e-15 * tau, rtol=8.9e-16)
    if seg2 == 0.0:
        tau2 = tau1
    else:
        tau2 = brentq(lambda t: cum(t) - (chi + seg2), 0.0, tau, xtol=1e-15 * tau, rtol=8.9e-16)

    xi1 = path.xi1
    xi2 = path.xi2 if path.xi2 is not None else xi1 + _xi_span_continuous(gamma, chi)
    return PulseSchedule(
        tau=tau, tau1=tau1, tau2=tau2, omega_max=omega_max, envelope_kind=envelope_kind,
        chi=chi, xi1=xi1, xi2=xi2, theta=gate.theta, phi=gate.phi, gamma=gamma,
    )
