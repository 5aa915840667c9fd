"""End-to-end orchestration: fields -> coupling -> converter -> report.

``run_pipeline`` executes the two independent field solves (electrostatic
potential and optical eigenmode) on one shared grid, combines them into the
vacuum coupling rate, evaluates the converter theory, and assembles a fully
reproducible RunReport: the embedded configuration snapshot re-runs to the
same numbers.  Failures are wrapped into PipelineError with the failing
stage named.
"""

import hashlib
import json
import os
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import config as cfgmod
from . import converter as conv
from . import coupling as cpl
from . import electrostatics as es
from . import geometry as geo
from . import optics
from .constants import CONSTANTS, TWO_PI
from .errors import CavityEOError, ConfigError, PipelineError
from .grid import build_grid
from .reference import (
    REFERENCE_DESIGN,
    REFERENCE_OMEGA_A_OVER_2PI_HZ,
    REFERENCE_OMEGA_B_OVER_2PI_HZ,
    REFERENCE_Q_A,
    REFERENCE_Q_B,
)


class SolutionCache:
    """Thread-safe memo for field solutions, keyed by grid content hashes."""

    def __init__(self):
        self._store = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key, fn):
        with self._lock:
            if key in self._store:
                return self._store[key]
        value = fn()
        with self._lock:
            self._store.setdefault(key, value)
            return self._store[key]


@contextmanager
def _stage(name):
    try:
        yield
    except PipelineError:
        raise
    except CavityEOError as err:
        raise PipelineError(name, err) from err


@dataclass(frozen=True)
class RunReport:
    """Everything one pipeline run produced, plus provenance."""

    config: dict
    mode_summary: dict
    potential_summary: dict
    coupling: cpl.CouplingResult
    conversion: conv.ConversionReport
    warnings: tuple
    provenance: dict
    report_id: str

    def to_dict(self, include_curve=True):
        out = {
            "config": self.config,
            "mode": self.mode_summary,
            "potential": self.potential_summary,
            "coupling": {
                "g0_rad_per_s": self.coupling.g0,
                "g0_over_2pi_hz": self.coupling.g0_over_2pi_hz,
                "delta_omega_per_volt_rad_per_s_per_v":
                    self.coupling.delta_omega_per_volt,
                "method": self.coupling.method,
                "inputs": dict(self.coupling.inputs),
                "notes": list(self.coupling.notes),
            },
            "conversion": _conversion_dict(self.conversion, include_curve),
            "warnings": list(self.warnings),
            "provenance": self.provenance,
            "report_id": self.report_id,
        }
        return _plain(out)


def _conversion_dict(report, include_curve=True):
    out = {
        "c0": report.c0,
        "cooperativity": report.cooperativity,
        "gamma_peak": report.gamma_peak,
        "bandwidth_fwhm_over_2pi_hz": report.bandwidth_fwhm / TWO_PI,
        "p_c1_single_w": report.p_c1_single_w,
        "p_c1_dual_w": report.p_c1_dual_w,
        "n_eq_quanta": report.n_eq,
        "coherence": {
            k: {"ratio": (None if not np.isfinite(v[0]) else v[0]),
                "flag": v[1]}
            for k, v in report.coherence.items()
        },
        "params": {
            "omega_a_over_2pi_hz": report.params.omega_a / TWO_PI,
            "omega_b_over_2pi_hz": report.params.omega_b / TWO_PI,
            "kappa_a_over_2pi_hz": report.params.kappa_a / TWO_PI,
            "kappa_b_over_2pi_hz": report.params.kappa_b / TWO_PI,
            "kappa_a_ex_over_2pi_hz": report.params.kappa_a_ex / TWO_PI,
            "kappa_b_ex_over_2pi_hz": report.params.kappa_b_ex / TWO_PI,
            "g0_over_2pi_hz": report.params.g0 / TWO_PI,
            "topology": report.params.topology,
            "pump_power_w": report.params.pump_power_w,
            "n_pump": report.params.n_pump,
            "n_thermal": report.params.n_thermal,
        },
    }
    if include_curve:
        out["gamma_curve"] = {
            "omega_over_2pi_hz": list(report.gamma_curve_omega / TWO_PI),
            "gamma": list(report.gamma_curve),
        }
    return out


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _timestamp():
    for var in ("CAVITYEO_TIMESTAMP", "SOURCE_DATE_EPOCH"):
        if var in os.environ:
            return float(os.environ[var])
    return time.time()


def run_pipeline(raw_config, solution_cache=None, keep_fields=False):
    """Run the full chain on a configuration mapping; returns a RunReport."""
    cache = solution_cache if solution_cache is not None else SolutionCache()
    warnings_list = []

    with _stage("config"):
        config = cfgmod.validate_config(raw_config)
        geometry = cfgmod.build_geometry(config)
        polarization = cfgmod.resolve_polarization(config, geometry)
        core_material = geometry.cores[0].material

    solver = config["solver"]
    convc = config["converter"]
    omega_a_target = TWO_PI * convc["omega_a_over_2pi_hz"]
    omega_b = TWO_PI * convc["omega_b_over_2pi_hz"]
    resolution = solver["resolution_cells_per_um"] * 1e6
    n_modes = int(solver["n_modes"])

    if convc["match_fsr"]:
        with _stage("fsr_matching"):
            r_matched = optics.match_fsr(
                geometry, omega_b, resolution,
                polarization=polarization, omega_target=omega_a_target,
                n_modes=n_modes,
            )
            geometry = geo.with_ring_radius(geometry, r_matched)
            warnings_list.append(
                f"ring radius adjusted to {r_matched * 1e6:.1f} um to match "
                f"the FSR to omega_b"
            )

    with _stage("grid"):
        margin = (
            solver["margin_um"] * 1e-6 if solver["margin_um"] is not None else None
        )
        grid = build_grid(
            geometry, resolution, margin=margin,
            margin_factor=solver["margin_factor"],
        )
        grid_hash = grid.content_hash()

    with _stage("electrostatics"):
        potential = cache.get_or_compute(
            ("potential", grid_hash), lambda: es.solve_potential(grid)
        )
        l_eff = (
            convc["l_eff_um"] * 1e-6
            if convc["l_eff_um"] is not None
            else TWO_PI * geometry.ring_major_radius
        )
        if potential.applied_voltage != 0.0:
            c_farads = es.capacitance(
                potential, l_eff, convc["energy_fraction"]
            )
            vzpf = es.v_zpf(c_farads, omega_b)
        else:
            c_farads, vzpf = None, None

    with _stage("optics"):
        mode_key = ("mode", grid_hash, polarization, omega_a_target, n_modes)
        mode = cache.get_or_compute(
            mode_key,
            lambda: optics.find_fundamental_near(
                grid, omega_a_target, polarization, n_modes
            ),
        )
        neighbor = cache.get_or_compute(
            ("mode_m", grid_hash, polarization, mode.m + 1, n_modes),
            lambda: optics.fundamental_at_m(
                grid, mode.m + 1, polarization, n_modes
            ),
        )
        fsr = neighbor.omega - mode.omega
        mode = optics.attach_fsr(mode, fsr)

    with _stage("coupling"):
        if potential.applied_voltage == 0.0:
            coupling = cpl.CouplingResult(
                g0=0.0, delta_omega_per_volt=0.0, method="overlap_integral",
                inputs={"grid_hash": grid_hash},
                notes=("no coupling: zero electrode voltage",),
            )
            warnings_list.append("no coupling: zero electrode voltage")
        else:
            coupling = cpl.g0_overlap(
                mode, potential, core_material, c_farads, omega_b,
                f_phi=geometry.f_phi, n_phi=int(solver["n_phi"]),
            )
            warnings_list.extend(coupling.notes)

    with _stage("converter"):
        kappa_a = mode.omega / convc["q_a"]
        kappa_b = omega_b / convc["q_b"]
        fa, fb = convc["kappa_a_ex_fraction"], convc["kappa_b_ex_fraction"]
        pump_kwargs = {}
        if convc["pump_power_w"] is not None:
            pump_kwargs["pump_power_w"] = convc["pump_power_w"]
        elif convc["n_pump"] is not None:
            pump_kwargs["n_pump"] = convc["n_pump"]
        else:
            c0 = conv.single_photon_cooperativity(
                coupling.g0, kappa_a, kappa_b
            ) if coupling.g0 > 0.0 else 0.0
            pump_kwargs["n_pump"] = 1.0 / c0 if c0 > 0.0 else 0.0
        params = conv.ConverterParams(
            omega_a=mode.omega,
            omega_b=omega_b,
            kappa_a_in=(1.0 - fa) * kappa_a,
            kappa_a_ex=fa * kappa_a,
            kappa_b_in=(1.0 - fb) * kappa_b,
            kappa_b_ex=fb * kappa_b,
            g0=coupling.g0,
            topology=convc["topology"],
            n_thermal=convc["n_thermal"],
            **pump_kwargs,
        )
        report = conv.build_report(params)
        if params.cooperativity == 0.0:
            warnings_list.append("converter: no coupling (C = 0)")
        for name, (_, flag) in report.coherence.items():
            if flag.startswith(("warn", "fail")):
                warnings_list.append(f"coherence {flag}: {name}")

    mode_summary = {
        "omega_a_over_2pi_hz": mode.omega / TWO_PI,
        "m": mode.m,
        "polarization": mode.polarization,
        "n_eff": mode.n_eff,
        "rho_centroid_m": mode.rho_centroid,
        "fsr_over_2pi_hz": mode.fsr / TWO_PI,
        "round_trip_time_s": mode.tau,
        "eigen_residual": mode.residual,
        "confinement_db": mode.confinement_db,
        "energy_j": mode.energy,
    }
    potential_summary = {
        "applied_voltage_v": potential.applied_voltage,
        "capacitance_f": c_farads,
        "v_zpf_v": vzpf,
        "l_eff_m": l_eff,
        "energy_fraction": convc["energy_fraction"],
        "energy_per_length_j_per_m": potential.energy_per_length,
        "stored_energy_per_radian_j_per_rad": potential.stored_energy_per_radian,
        "linear_residual": potential.residual,
    }
    provenance = {
        "version": __version__,
        "created_unix_s": _timestamp(),
        "grid_hash": grid_hash,
        "grid_shape": list(grid.shape),
    }

    body = _plain({
        "config": config,
        "mode": mode_summary,
        "potential": potential_summary,
        "g0": coupling.g0,
        "conversion": _conversion_dict(report, include_curve=False),
    })
    report_id = hashlib.sha256(
        json.dumps(body, sort_keys=True).encode()
    ).hexdigest()[:16]

    run_report = RunReport(
        config=config,
        mode_summary=mode_summary,
        potential_summary=potential_summary,
        coupling=coupling,
        conversion=report,
        warnings=tuple(warnings_list),
        provenance=provenance,
        report_id=report_id,
    )
    if keep_fields:
        object.__setattr__(run_report, "_fields", (grid, potential, mode))
    return run_report


def pipeline_fields(report_with_fields):
    """(grid, potential, mode) attached by ``run_pipeline(..., keep_fields=True)``."""
    return getattr(report_with_fields, "_fields")


def save_report(report, out_dir, formats=("json", "text"), write_fields=False):
    """Persist a RunReport; returns the list of file paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    if "text" in formats:
        path = os.path.join(out_dir, "report.txt")
        with open(path, "w") as fh:
            fh.write(format_report_text(report))
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "gamma_curve.csv")
        with open(path, "w") as fh:
            fh.write("omega_over_2pi_hz,gamma\n")
            for w, g in zip(report.conversion.gamma_curve_omega,
                            report.conversion.gamma_curve):
                fh.write(f"{w / TWO_PI!r},{g!r}\n")
        written.append(path)
    if write_fields and hasattr(report, "_fields"):
        grid, potential, mode = pipeline_fields(report)
        es.write_field_text(os.path.join(out_dir, "potential_field.txt"),
                            potential)
        optics.write_mode_text(os.path.join(out_dir, "optical_mode.txt"), mode)
        written += [os.path.join(out_dir, "potential_field.txt"),
                    os.path.join(out_dir, "optical_mode.txt")]
    return written


def format_report_text(report):
    m = report.mode_summary
    p = report.potential_summary
    c = report.conversion
    lines = [
        f"cavityeo run report {report.report_id}",
        f"  optical mode: omega_a/2pi = {m['omega_a_over_2pi_hz']:.6g} Hz, "
        f"m = {m['m']}, {m['polarization']}, n_eff = {m['n_eff']:.4f}",
        f"  FSR/2pi = {m['fsr_over_2pi_hz']:.6g} Hz, "
        f"tau = {m['round_trip_time_s']:.6g} s",
        f"  applied voltage = {p['applied_voltage_v']:.6g} V, "
        f"C = {p['capacitance_f']} F, V_zpf = {p['v_zpf_v']} V",
        f"  g0/2pi = {report.coupling.g0_over_2pi_hz:.6g} Hz "
        f"({report.coupling.method})",
        f"  C0 = {c.c0:.6g}, C = {c.cooperativity:.6g}, "
        f"gamma_peak = {c.gamma_peak:.6g}",
        f"  P(C=1) single = {c.p_c1_single_w:.6g} W, "
        f"dual = {c.p_c1_dual_w:.6g} W",
        f"  n_eq = {c.n_eq}",
        "  coherence:",
    ]
    for name, (ratio, flag) in c.coherence.items():
        lines.append(f"    {name}: {ratio:.3g} [{flag}]")
    if report.warnings:
        lines.append("  warnings:")
        lines += [f"    - {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TableRow:
    """One column of the geometry comparison table."""

    label: str
    g0_over_2pi_hz: float
    c0: float
    p_single_w: float
    p_dual_w: float


def _row_from_report(report):
    c = report.conversion
    return TableRow(
        label=report.config["geometry"]["preset"] or report.report_id,
        g0_over_2pi_hz=report.coupling.g0_over_2pi_hz,
        c0=c.c0,
        p_single_w=c.p_c1_single_w,
        p_dual_w=c.p_c1_dual_w,
    )


def injected_rows(g0_over_2pi_by_label=None):
    """Comparison rows computed from injected coupling rates (no field solve).

    Defaults to the bundled reference design points; the converter arithmetic
    (C0 and pump powers) is evaluated from the injected g0 values with the
    reference Q factors and frequencies.
    """
    if g0_over_2pi_by_label is None:
        g0_over_2pi_by_label = {
            k: v["g0_over_2pi_hz"] for k, v in REFERENCE_DESIGN.items()
        }
    omega_a = TWO_PI * REFERENCE_OMEGA_A_OVER_2PI_HZ
    omega_b = TWO_PI * REFERENCE_OMEGA_B_OVER_2PI_HZ
    kappa_a = omega_a / REFERENCE_Q_A
    kappa_b = omega_b / REFERENCE_Q_B
    rows = []
    for label in sorted(g0_over_2pi_by_label):
        g0 = TWO_PI * g0_over_2pi_by_label[label]
        c0 = conv.single_photon_cooperativity(g0, kappa_a, kappa_b)
        p_dual = CONSTANTS.hbar * omega_a * kappa_a / c0
        p_single = p_dual * conv.single_mode_penalty(omega_b, kappa_a)
        rows.append(TableRow(label, g0 / TWO_PI, c0, p_single, p_dual))
    return rows


def emit_table1(items):
    """Format the geometry comparison table (2 significant figures).

    ``items``: RunReport or TableRow instances, one column each.
    """
    if not items:
        raise ConfigError("comparison table needs at least one report")
    rows = [
        it if isinstance(it, TableRow) else _row_from_report(it)
        for it in items
    ]

    def fmt(x):
        return f"{x:.2g}"

    headers = ["quantity"] + [r.label for r in rows]
    table = [
        ["g0/2pi (kHz)"] + [fmt(r.g0_over_2pi_hz / 1e3) for r in rows],
        ["C0"] + [fmt(r.c0) for r in rows],
        ["P single mode (W)"] + [fmt(r.p_single_w) for r in rows],
        ["P dual mode (W)"] + [fmt(r.p_dual_w) for r in rows],
    ]
    widths = [
        max(len(line[i]) for line in [headers] + table)
        for i in range(len(headers))
    ]

    def render(line):
        return "  ".join(s.ljust(w) for s, w in zip(line, widths)).rstrip()

    out = [render(headers), render(["-" * w for w in widths])]
    out += [render(line) for line in table]
    return "\n".join(out) + "\n"
