"""Command-line entry point: synthesize schedules, emit figure data, verify.

Three subcommands.  ``synth`` wraps the pulse synthesizer and writes a
schedule JSON plus a sampled pulse CSV.  ``figure`` recomputes one of the
report figures and writes data.csv, meta.json and figure.png under
out/<figure-id>/.  ``verify`` runs the acceptance suite and emits a
machine-readable report.  All science lives in the library modules; this
file owns parsing, wiring and file layout only.  Every command is fully
deterministic, so rerunning with the same arguments reproduces each
output byte for byte (meta files carry a null runtime for that reason).

Angles are written as multiples of pi ("0.25pi", "-pi/3") to avoid
decimal drift in configs; bare numbers are taken as radians.
"""

import argparse
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import acceptance, models, plots, sweeps
from .pathsynth import GateSpec, PathSpec, eta_of_chi, synthesize

_ANGLE_RE = re.compile(r"([+-]?\d*\.?\d*)\*?pi(?:/(\d*\.?\d+))?")


def parse_angle(text: str) -> float:
    """Angle in radians from "0.25pi", "pi", "2pi/3" or a bare number."""
    s = text.strip().lower().replace(" ", "")
    m = _ANGLE_RE.fullmatch(s)
    try:
        if m:
            coef_txt = m.group(1)
            if coef_txt in ("", "+"):
                coef = 1.0
            elif coef_txt == "-":
                coef = -1.0
            else:
                coef = float(coef_txt)
            den = float(m.group(2)) if m.group(2) else 1.0
            return coef * math.pi / den
        return float(s)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}")


def parse_gate(text: str) -> GateSpec:
    """GateSpec from "name:angle", e.g. "rx:0.5pi" or "cp:0.25pi"."""
    name, _, angle_txt = text.partition(":")
    if not angle_txt:
        raise ValueError(f"gate must look like name:angle, got {text!r}")
    gamma = parse_angle(angle_txt)
    name = name.strip().lower()
    if name == "cp":
        # the controlled-phase loop drives a single bright state, so its
        # schedule has the same shape as a z rotation by gamma
        return GateSpec(0.0, 0.0, gamma)
    return GateSpec.named(name, gamma)


@dataclass(frozen=True)
class RunConfig:
    """One resolved command invocation; rng_free is a standing guarantee."""

    command: str
    gate: Optional[GateSpec] = None
    path: Optional[PathSpec] = None
    figure: Optional[str] = None
    model_config: Optional[str] = None
    resolution: Optional[int] = None
    workers: int = 1
    out: str = "out"
    envelope: str = "sin2"
    omega_max: float = 1.0
    samples: int = 1000
    only: tuple = ()
    report: Optional[str] = None
    rng_free: bool = field(default=True, init=False)


def _blob_hash(text: str) -> str:
    raw = text.encode()
    return hashlib.sha1(b"blob %d\x00" % len(raw) + raw).hexdigest()


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else repr(float(c))
                              for c in row))
    return "\n".join(lines) + "\n"


def _sweep_meta(which: str, result) -> dict:
    meta = {"figure": which}
    meta.update(result.sidecar_dict())
    meta["runtime"] = None
    return meta


def _composite_meta(which: str, config: dict, csv_text: str, **extra) -> dict:
    meta = {"figure": which, "config": config,
            "content_hash": _blob_hash(csv_text), "runtime": None,
            "masked_cells": 0}
    meta.update(extra)
    return meta


# -- synth ---------------------------------------------------------------------

def cmd_synth(cfg: RunConfig) -> int:
    sched = synthesize(cfg.gate, cfg.path, omega_max=cfg.omega_max,
                       envelope_kind=cfg.envelope)
    seg = sched.segment_areas()
    doc = sched.to_json_dict()
    doc["segment_areas"] = list(seg)
    doc["pulse_area"] = sum(seg) / 2.0

    ts = np.linspace(0.0, sched.tau, cfg.samples + 1)
    csv = _csv_text(
        ("t (time)", "omega (rad/time)", "phase0 (rad)", "phase1 (rad)",
         "detuning (rad/time)"),
        zip(ts, sched.omega(ts), sched.phase0(ts), sched.phase1(ts),
            sched.detuning(ts)))

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "schedule.json").write_text(json.dumps(doc, indent=1) + "\n")
    (out / "pulse.csv").write_text(csv)
    print(f"tau {sched.tau:.6g}  pulse area {doc['pulse_area']:.6g} rad "
          f"({doc['pulse_area'] / math.pi:.4f} pi)")
    print(f"wrote {out / 'schedule.json'}")
    print(f"wrote {out / 'pulse.csv'}")
    return 0


# -- figures -------------------------------------------------------------------

def _fig_area_map(cfg: RunConfig):
    n = cfg.resolution or 100
    chis = np.linspace(0.01, 1.0, n) * math.pi
    gammas = np.linspace(0.0, 0.5, n) * math.pi
    res = sweeps.pulse_area_map(chis, gammas, workers=cfg.workers)

    def render(path):
        plots.heat_map(path, gammas / math.pi, chis / math.pi, res.values,
                       xlabel="gamma / pi", ylabel="chi / pi",
                       clabel="S / pi", contour_levels=(1.0, 2.0))

    return res.to_csv_text(), _sweep_meta(cfg.figure, res), render


def _fig_aux_population(cfg: RunConfig):
    gate = GateSpec.named("rx", 0.5 * math.pi)
    chis = np.array([0.2, 0.4, 0.6, 0.8, 1.0]) * math.pi
    series = sweeps.aux_population_series(gate, chis,
                                          points=cfg.resolution or 400)
    header = ["t_over_tau (fraction)"]
    header += [f"p_aux[chi={c / math.pi:.1f}pi] (probability)" for c in chis]
    rows = zip(series["t_over_tau"], *series["populations"])
    csv = _csv_text(header, rows)
    config = {"gate": "rx:0.5pi", "chi_over_pi": [round(c / math.pi, 3) for c in chis],
              "points": int(cfg.resolution or 400)}
    meta = _composite_meta(cfg.figure, config, csv,
                           results={"tau": list(map(float, series["tau"]))})

    def render(path):
        plots.population_curves(path, series["t_over_tau"], series["chi"],
                                series["populations"])

    return csv, meta, render


def _fig_chi_error(cfg: RunConfig, gate_name, gamma, kind):
    gate = GateSpec.named(gate_name, gamma)
    n = cfg.resolution or 41
    chis = np.linspace(0.2, 1.0, n) * math.pi
    errs = np.linspace(-0.1, 0.1, n)
    res = sweeps.fidelity_vs_chi_error(gate, kind, chis, errs,
                                       workers=cfg.workers)

    def render(path):
        plots.heat_map(path, errs, chis / math.pi, res.values,
                       xlabel=f"{kind} error (fraction)", ylabel="chi / pi",
                       clabel="F")

    return res.to_csv_text(), _sweep_meta(cfg.figure, res), render


def _fig_surfaces(cfg: RunConfig, gate_name, gamma):
    gate = GateSpec.named(gate_name, gamma)
    n = cfg.resolution or 21
    errs = np.linspace(-0.1, 0.1, n)
    ours = sweeps.infidelity_surface(gate, 0.25 * math.pi, errs, errs,
                                     workers=cfg.workers)
    loop = sweeps.infidelity_surface(gate, math.pi, errs, errs,
                                     workers=cfg.workers)
    rows = []
    for i, d in enumerate(errs):
        for j, e in enumerate(errs):
            rows.append((d, e, ours.values[i, j], loop.values[i, j]))
    csv = _csv_text(("delta (fraction)", "epsilon (fraction)",
                     "infidelity_path (dimensionless)",
                     "infidelity_loop (dimensionless)"), rows)
    config = {"gate": f"{gate_name}:{gamma / math.pi:g}pi",
              "chi_path_over_pi": 0.25, "chi_loop_over_pi": 1.0,
              "grid": int(n)}
    meta = _composite_meta(cfg.figure, config, csv)

    def render(path):
        plots.infidelity_surfaces(path, errs, errs, ours.values, loop.values)

    return csv, meta, render


def _fig_sc_robustness(cfg: RunConfig):
    if cfg.model_config not in (None, "cavity", "3T"):
        raise ValueError("figure 3 config must be cavity or 3T")
    with_alt = cfg.model_config == "3T"
    n = cfg.resolution or 21
    values = np.linspace(-2.0, 2.0, n)
    gates = (("rx:0.5pi", GateSpec.named("rx", 0.5 * math.pi)),
             ("ry:0.25pi", GateSpec.named("ry", 0.25 * math.pi)))
    header = ["gate", "error_kind", "error (2pi*MHz)",
              "F_path (dimensionless)", "F_loop (dimensionless)"]
    if with_alt:
        header.append("F_3T (dimensionless)")
    rows = []
    panels = {}
    for gi, (label, gate) in enumerate(gates):
        for ki, kind in enumerate(("delta", "epsilon")):
            cav = sweeps.sc_robustness_curves(gate, "cavity", kind, values,
                                              workers=cfg.workers)
            alt = None
            if with_alt:
                alt = sweeps.sc_robustness_curves(gate, "3T", kind, values,
                                                  workers=cfg.workers)
            for k, v in enumerate(values):
                row = [label, kind, v, cav.values[k],
                       cav.extra["single_loop"][k]]
                if with_alt:
                    row.append(alt.values[k])
                rows.append(row)
            panels[(gi, ki)] = {
                "title": f"{label}, {kind} error",
                "xlabel": f"{kind} (2pi*MHz)",
                "ours": cav.values,
                "loop": np.asarray(cav.extra["single_loop"], dtype=float),
                "alt": None if alt is None else alt.values,
            }
    csv = _csv_text(header, rows)
    config = {"gates": [g for g, _ in gates], "error_range_mhz": [-2.0, 2.0],
              "points": int(n), "overlay_3t": bool(with_alt)}
    meta = _composite_meta(cfg.figure, config, csv)

    def render(path):
        plots.robustness_panels(path, values, panels)

    return csv, meta, render


def _fig_pair_search(cfg: RunConfig):
    n = cfg.resolution or 21
    betas = np.linspace(1.0, 3.0, n)
    deltas = np.linspace(500.0, 900.0, n)
    res = sweeps.two_qubit_param_search(betas, deltas, workers=cfg.workers,
                                        model_config=cfg.model_config
                                        or "sc_two_qubit")

    def render(path):
        plots.heat_map(path, deltas, betas, res.values,
                       xlabel="delta3 (2pi*MHz)", ylabel="beta3",
                       clabel="F2")

    return res.to_csv_text(), _sweep_meta(cfg.figure, res), render


def _fig_pair_populations(cfg: RunConfig):
    name = cfg.model_config or "sc_two_qubit"
    conf = models.load_config(name)
    beta3 = float(conf.get("beta3", 2.0))
    delta3_mhz = float(conf["delta3"] / models.MHZ)
    point = sweeps.two_qubit_point(beta3, delta3_mhz, steps=24000,
                                   model_config=name, series=True)
    s = point["series"]
    csv = _csv_text(("t (ns)", "p01 (probability)", "p11 (probability)",
                     "p02 (probability)"),
                    zip(s["times"], s["p01"], s["p11"], s["p02"]))
    config = {"model_config": name, "beta3": beta3,
              "delta3_mhz": delta3_mhz, "steps": 24000}
    results = {"state_fidelity": float(point["state_fidelity"]),
               "gate_fidelity": float(point["f2"]),
               "tau_ns": float(point["tau"])}
    meta = _composite_meta(cfg.figure, config, csv, results=results)

    def render(path):
        plots.pair_populations(path, s["times"], s["p01"], s["p11"],
                               s["p02"], results["state_fidelity"])

    return csv, meta, render


_FIGURES = {
    "2a": _fig_area_map,
    "2b": _fig_aux_population,
    "2c": lambda cfg: _fig_chi_error(cfg, "rx", 0.5 * math.pi, "delta"),
    "2d": lambda cfg: _fig_chi_error(cfg, "rx", 0.5 * math.pi, "epsilon"),
    "2e": lambda cfg: _fig_chi_error(cfg, "ry", 0.25 * math.pi, "delta"),
    "2f": lambda cfg: _fig_chi_error(cfg, "ry", 0.25 * math.pi, "epsilon"),
    "2g": lambda cfg: _fig_surfaces(cfg, "rx", 0.5 * math.pi),
    "2h": lambda cfg: _fig_surfaces(cfg, "ry", 0.25 * math.pi),
    "3": _fig_sc_robustness,
    "4a": _fig_pair_search,
    "4b": _fig_pair_populations,
}

_NO_CONFIG_FIGURES = frozenset(
    ("2a", "2b", "2c", "2d", "2e", "2f", "2g", "2h"))


def cmd_figure(cfg: RunConfig) -> int:
    if cfg.figure in _NO_CONFIG_FIGURES and cfg.model_config is not None:
        raise ValueError(f"figure {cfg.figure} takes no --config")
    csv, meta, render = _FIGURES[cfg.figure](cfg)
    out = Path(cfg.out) / cfg.figure
    out.mkdir(parents=True, exist_ok=True)
    (out / "data.csv").write_text(csv)
    (out / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    render(out / "figure.png")
    for name in ("data.csv", "meta.json", "figure.png"):
        print(f"wrote {out / name}")
    return 0


# -- verify --------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    results = acceptance.run(only=list(cfg.only) or None,
                             printer=lambda line: print(line, file=sys.stderr))
    doc = {
        "criteria": [
            {"slug": r.slug, "passed": r.passed, "measured": r.measured,
             "detail": r.detail, "runtime_s": round(r.runtime, 1)}
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    text = json.dumps(doc, indent=1, default=float)
    print(text)
    if cfg.report:
        path = Path(cfg.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    return 0 if doc["passed"] else 1


# -- wiring --------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holopath",
        description="Pulse synthesis and simulation for path-optimized "
                    "holonomic gates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize one pulse schedule")
    p.add_argument("--gate", required=True, type=parse_gate,
                   help='gate as name:angle, e.g. rx:0.5pi')
    p.add_argument("--chi", required=True, type=parse_angle,
                   help='path latitude, e.g. 0.25pi')
    p.add_argument("--xi1", type=parse_angle, default=0.0,
                   help="starting azimuth (gauge), default 0")
    p.add_argument("--envelope", choices=("sin2", "flat"), default="sin2")
    p.add_argument("--omega-max", type=float, default=1.0,
                   help="peak Rabi frequency, default 1 (dimensionless)")
    p.add_argument("--samples", type=int, default=1000,
                   help="rows in the sampled pulse CSV")
    p.add_argument("--out", default="out/synth")

    p = sub.add_parser("figure", help="recompute one report figure")
    p.add_argument("which", choices=sorted(_FIGURES))
    p.add_argument("--config", default=None,
                   help="figure 3: cavity or 3T; 4a/4b: model config name")
    p.add_argument("--resolution", type=int, default=None,
                   help="grid points per axis (per-figure default)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out")

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", action="append", metavar="SLUG",
                   help="run a single criterion (repeatable)")
    p.add_argument("--report", default=None,
                   help="also write the JSON report to this path")
    return parser


def _config_from_args(args) -> RunConfig:
    if args.command == "synth":
        return RunConfig(command="synth", gate=args.gate,
                         path=PathSpec(chi=args.chi, xi1=args.xi1),
                         envelope=args.envelope, omega_max=args.omega_max,
                         samples=args.samples, out=args.out)
    if args.command == "figure":
        return RunConfig(command="figure", figure=args.which,
                         model_config=args.config, resolution=args.resolution,
                         workers=args.workers, out=args.out)
    return RunConfig(command="verify", only=tuple(args.only or ()),
                     report=args.report)


_COMMANDS = {"synth": cmd_synth, "figure": cmd_figure, "verify": cmd_verify}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    try:
        return _COMMANDS[cfg.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
