"""Run-configuration schema: YAML in, validated + defaulted mapping out.

Every dimensional key carries its unit in the name (``*_um``, ``*_hz``,
``*_w`` ...).  Unknown keys anywhere in the tree are rejected with their
dotted location.  The geometry is given either as one of the bundled
presets plus overrides, or as an explicit region list.
"""

import copy

import numpy as np
import yaml

from . import geometry as geo
from . import materials as mats
from .errors import ConfigError

_UNSET = object()


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number(path):
    def check(v):
        if not _is_number(v):
            raise ConfigError(f"{path}: expected a number, got {v!r}")
        return float(v)

    return check


def _positive(path):
    base = _number(path)

    def check(v):
        x = base(v)
        if x <= 0.0:
            raise ConfigError(f"{path}: must be positive, got {v!r}")
        return x

    return check


def _nonneg(path):
    base = _number(path)

    def check(v):
        x = base(v)
        if x < 0.0:
            raise ConfigError(f"{path}: must be >= 0, got {v!r}")
        return x

    return check


def _optional(checker):
    def check(v):
        return None if v is None else checker(v)

    return check


def _choice(path, options):
    def check(v):
        if v not in options:
            raise ConfigError(f"{path}: expected one of {options}, got {v!r}")
        return v

    return check


def _boolean(path):
    def check(v):
        if not isinstance(v, bool):
            raise ConfigError(f"{path}: expected true/false, got {v!r}")
        return v

    return check


def _identity(v):
    return v


def _schema():
    return {
        "material": {
            "core": ("LiNbO3", _identity),
            "cladding": ("SiO2", _identity),
            "definitions": ({}, _identity),
        },
        "geometry": {
            "preset": ("G4", _optional(_choice("geometry.preset",
                                               geo.PRESET_NAMES))),
            "overrides": ({}, _identity),
            "regions": (None, _identity),
            "ring_major_radius_um": (None, _optional(
                _positive("geometry.ring_major_radius_um"))),
            "electrode_potentials_v": (None, _identity),
            "f_phi": (None, _optional(_positive("geometry.f_phi"))),
            "d_um": (None, _optional(_positive("geometry.d_um"))),
        },
        "solver": {
            "resolution_cells_per_um": (20.0, _positive(
                "solver.resolution_cells_per_um")),
            "margin_factor": (3.0, _positive("solver.margin_factor")),
            "margin_um": (None, _optional(_positive("solver.margin_um"))),
            "n_phi": (64, _positive("solver.n_phi")),
            "n_modes": (6, _positive("solver.n_modes")),
            "polarization": ("auto", _choice("solver.polarization",
                                             ("auto", "TE", "TM"))),
        },
        "converter": {
            "q_a": (1.0e5, _positive("converter.q_a")),
            "q_b": (1.0e3, _positive("converter.q_b")),
            "kappa_a_ex_fraction": (0.9, _positive(
                "converter.kappa_a_ex_fraction")),
            "kappa_b_ex_fraction": (0.99, _positive(
                "converter.kappa_b_ex_fraction")),
            "omega_a_over_2pi_hz": (200.0e12, _positive(
                "converter.omega_a_over_2pi_hz")),
            "omega_b_over_2pi_hz": (6.0e9, _positive(
                "converter.omega_b_over_2pi_hz")),
            "topology": ("dual_mode", _choice(
                "converter.topology", ("single_mode", "dual_mode"))),
            "n_thermal": (0.0, _nonneg("converter.n_thermal")),
            "pump_power_w": (None, _optional(_nonneg("converter.pump_power_w"))),
            "n_pump": (None, _optional(_nonneg("converter.n_pump"))),
            "l_eff_um": (None, _optional(_positive("converter.l_eff_um"))),
            "energy_fraction": (0.5, _positive("converter.energy_fraction")),
            "match_fsr": (False, _boolean("converter.match_fsr")),
        },
        "output": {
            "directory": (None, _identity),
            "formats": (["json", "text"], _identity),
            "write_fields": (False, _boolean("output.write_fields")),
        },
    }


def validate_config(raw):
    """Fill defaults and validate; raises ConfigError with dotted locations."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    schema = _schema()
    unknown_sections = set(raw) - set(schema)
    if unknown_sections:
        raise ConfigError(f"unknown configuration sections {sorted(unknown_sections)}")
    out = {}
    for section, fields in schema.items():
        given = raw.get(section, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ConfigError(f"{section}: expected a mapping")
        unknown = set(given) - set(fields)
        if unknown:
            raise ConfigError(
                f"unknown keys {sorted(f'{section}.{k}' for k in unknown)}"
            )
        out[section] = {}
        for key, (default, check) in fields.items():
            value = given.get(key, _UNSET)
            if value is _UNSET:
                out[section][key] = copy.deepcopy(default)
            else:
                out[section][key] = check(value)

    fmts = out["output"]["formats"]
    if not isinstance(fmts, list) or not all(
        f in ("json", "text", "csv") for f in fmts
    ):
        raise ConfigError("output.formats: expected a list drawn from json/text/csv")

    conv = out["converter"]
    if conv["pump_power_w"] is not None and conv["n_pump"] is not None:
        raise ConfigError(
            "converter: give at most one of pump_power_w / n_pump"
        )
    if not (0.0 < conv["kappa_a_ex_fraction"] <= 1.0):
        raise ConfigError("converter.kappa_a_ex_fraction must be in (0, 1]")
    if not (0.0 < conv["kappa_b_ex_fraction"] <= 1.0):
        raise ConfigError("converter.kappa_b_ex_fraction must be in (0, 1]")

    gsec = out["geometry"]
    if gsec["preset"] is None and gsec["regions"] is None:
        raise ConfigError("geometry: give either a preset or explicit regions")
    return out


def load_config(path):
    try:
        with open(path, "r") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"could not parse {path}: {err}") from None
    return validate_config(raw)


def material_registry(config):
    """Built-in materials plus any defined in material.definitions."""
    reg = {name: factory() for name, factory in mats.BUILTIN_MATERIALS.items()}
    for name, spec in config["material"]["definitions"].items():
        reg[name] = mats.material_from_dict(name, spec)
    return reg


def _region_from_dict(entry, registry, index):
    where = f"geometry.regions[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a mapping")
    required = {"name", "role", "material", "rho_um", "z_um"}
    unknown = set(entry) - required
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(entry)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    mat = entry["material"]
    if mat not in registry:
        raise ConfigError(f"{where}: unknown material '{mat}'")
    try:
        rho = [float(v) * 1e-6 for v in entry["rho_um"]]
        z = [float(v) * 1e-6 for v in entry["z_um"]]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: rho_um and z_um must be [lo, hi] pairs") from None
    if len(rho) != 2 or len(z) != 2:
        raise ConfigError(f"{where}: rho_um and z_um must be [lo, hi] pairs")
    return geo.Region(
        name=entry["name"], role=entry["role"], material=registry[mat],
        rho_min=rho[0], rho_max=rho[1], z_min=z[0], z_max=z[1],
    )


def build_geometry(config):
    """CrossSectionGeometry from the validated configuration."""
    gsec = config["geometry"]
    registry = material_registry(config)
    if gsec["regions"] is not None:
        if gsec["ring_major_radius_um"] is None:
            raise ConfigError(
                "geometry.ring_major_radius_um is required with explicit regions"
            )
        if gsec["electrode_potentials_v"] is None:
            raise ConfigError(
                "geometry.electrode_potentials_v is required with explicit regions"
            )
        regions = tuple(
            _region_from_dict(e, registry, i)
            for i, e in enumerate(gsec["regions"])
        )
        pots = {k: float(v) for k, v in gsec["electrode_potentials_v"].items()}
        return geo.CrossSectionGeometry(
            ring_major_radius=gsec["ring_major_radius_um"] * 1e-6,
            regions=regions,
            electrode_potentials=pots,
            electrode_gap=(gsec["d_um"] or 0.0) * 1e-6 or _infer_gap(regions),
            f_phi=gsec["f_phi"] if gsec["f_phi"] is not None else 1.0,
        )
    overrides = dict(gsec["overrides"])
    if gsec["ring_major_radius_um"] is not None:
        overrides.setdefault("ring_major_radius_um", gsec["ring_major_radius_um"])
    if gsec["d_um"] is not None:
        overrides.setdefault("d_um", gsec["d_um"])
    if gsec["f_phi"] is not None:
        overrides.setdefault("f_phi", gsec["f_phi"])
    return geo.geometry_from_preset(gsec["preset"], overrides)


def _infer_gap(regions):
    electrodes = [r for r in regions if r.role == "electrode"]
    if len(electrodes) != 2:
        return 0.0
    a, b = electrodes
    d_rho = max(b.rho_min - a.rho_max, a.rho_min - b.rho_max)
    d_z = max(b.z_min - a.z_max, a.z_min - b.z_max)
    return max(d_rho, d_z, 0.0)


def resolve_polarization(config, geometry_obj):
    pol = config["solver"]["polarization"]
    if pol == "auto":
        return getattr(geometry_obj, "polarization_hint", "TM")
    return pol


def config_to_yaml(config):
    return yaml.safe_dump(config, sort_keys=True)
