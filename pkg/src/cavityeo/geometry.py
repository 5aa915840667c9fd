"""Axisymmetric device cross-sections: ring core, cladding, electrodes.

A cross-section is a set of axis-aligned rectangles in the (rho, z) plane at
fixed azimuth; the device is the body of revolution about rho = 0.  Four
bundled electrode layouts G1-G4 cover the design space studied by this tool:

* G1 - electrodes beside the ring core (slightly elevated, as deposited on a
  planarized cladding step), gap ``d`` measured between electrode inner faces.
* G2 - electrodes above and below the core at an unoptimized distance.
* G3 - electrodes above and below the core at an optimized distance.
* G4 - same layout as G3; the converter is operated on the axially polarized
  optical mode instead of the radial one.

All dimensions that the bundled layouts do not pin down physically (ring
radius, core cross-section, electrode width, cladding extent) are documented
defaults chosen so the optical mode near 200 THz is well confined; every one
of them can be overridden.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, GeometryError
from . import materials as mats

ROLES = ("electrode", "core", "cladding", "substrate", "vacuum")
# cell tagging priority, highest first
ROLE_PRIORITY = {role: i for i, role in enumerate(ROLES)}

UM = 1e-6


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in the (rho, z) plane with a role and material."""

    name: str
    role: str
    material: mats.Material
    rho_min: float
    rho_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"region '{self.name}': unknown role '{self.role}'")
        if self.rho_min < 0.0:
            raise GeometryError(f"region '{self.name}' extends to rho < 0")
        if not (self.rho_max > self.rho_min and self.z_max > self.z_min):
            raise GeometryError(f"region '{self.name}' is degenerate (zero area)")

    @property
    def width(self):
        return self.rho_max - self.rho_min

    @property
    def height(self):
        return self.z_max - self.z_min

    def overlaps(self, other):
        return (
            self.rho_min < other.rho_max
            and other.rho_min < self.rho_max
            and self.z_min < other.z_max
            and other.z_min < self.z_max
        )


@dataclass(frozen=True)
class CrossSectionGeometry:
    """Device cross-section: regions, electrode drive, azimuthal coverage.

    ``electrode_gap`` is a derived convenience value (distance between the
    two electrode inner faces along their separation axis).  ``f_phi`` is the
    fraction of the ring circumference covered by the uniform-phase microwave
    field; the symmetry-broken resonator design is modeled as one electrode
    pair whose cross-section field applies over that arc.
    """

    ring_major_radius: float
    regions: tuple
    electrode_potentials: dict
    electrode_gap: float
    f_phi: float = 1.0
    polarization_hint: str = "TM"

    def __post_init__(self):
        if not (0.0 < self.f_phi <= 1.0):
            raise ConfigError(f"f_phi must be in (0, 1], got {self.f_phi}")
        if self.ring_major_radius <= 0.0:
            raise ConfigError("ring_major_radius must be positive")
        cores = [r for r in self.regions if r.role == "core"]
        electrodes = [r for r in self.regions if r.role == "electrode"]
        for r in cores:
            if not r.material.has_pockels:
                raise GeometryError(
                    f"core region '{r.name}' uses material '{r.material.name}' "
                    f"with an all-zero Pockels tensor"
                )
        for e in electrodes:
            for c in cores:
                if e.overlaps(c):
                    raise GeometryError(
                        f"electrode '{e.name}' overlaps core '{c.name}'"
                    )
        for e in electrodes:
            if e.name not in self.electrode_potentials:
                raise ConfigError(f"no potential given for electrode '{e.name}'")
        for name in self.electrode_potentials:
            if name not in {e.name for e in electrodes}:
                raise ConfigError(f"potential given for unknown electrode '{name}'")

    @property
    def electrodes(self):
        return tuple(r for r in self.regions if r.role == "electrode")

    @property
    def cores(self):
        return tuple(r for r in self.regions if r.role == "core")

    def bounding_box(self):
        rho0 = min(r.rho_min for r in self.regions)
        rho1 = max(r.rho_max for r in self.regions)
        z0 = min(r.z_min for r in self.regions)
        z1 = max(r.z_max for r in self.regions)
        return rho0, rho1, z0, z1

    def smallest_feature(self):
        """Smallest region edge length, used for resolution checks."""
        return min(min(r.width, r.height) for r in self.regions)


@dataclass(frozen=True)
class PresetParams:
    """Documented default dimensions for the bundled G1-G4 layouts (meters)."""

    ring_major_radius: float = 100.0 * UM
    core_width: float = 1.2 * UM
    core_thickness: float = 0.6 * UM
    electrode_width: float = 2.0 * UM
    electrode_thickness: float = 0.6 * UM
    electrode_gap: float = 1.5 * UM
    # G1 only: electrodes sit on a planarized cladding step above the core
    # mid-plane, so the residual axial field component at the core is finite.
    side_electrode_lift: float = 0.45 * UM
    cladding_pad: float = 1.8 * UM
    f_phi: float = 1.0
    applied_voltage: float = 1.0


_PRESET_GAPS = {
    # electrode separation d: optimized 1.5 um for G1/G3/G4, loose for G2
    "G1": 1.5 * UM,
    "G2": 6.0 * UM,
    "G3": 1.5 * UM,
    "G4": 1.5 * UM,
}

# G4 runs on the axially polarized optical mode; all others on the radial one.
_PRESET_POLARIZATION = {"G1": "TM", "G2": "TM", "G3": "TM", "G4": "TE"}

PRESET_NAMES = tuple(sorted(_PRESET_GAPS))

_OVERRIDE_KEYS = {
    "ring_major_radius_um",
    "core_width_um",
    "core_thickness_um",
    "electrode_width_um",
    "electrode_thickness_um",
    "d_um",
    "side_electrode_lift_um",
    "cladding_pad_um",
    "f_phi",
    "applied_voltage_v",
}


def geometry_from_preset(preset, overrides=None):
    """Build a CrossSectionGeometry for one of the bundled layouts G1-G4.

    ``overrides`` is a mapping with any of the keys in micrometers:
    ``ring_major_radius_um, core_width_um, core_thickness_um,
    electrode_width_um, electrode_thickness_um, d_um, side_electrode_lift_um,
    cladding_pad_um`` plus dimensionless ``f_phi`` and ``applied_voltage_v``.
    """
    if preset not in _PRESET_GAPS:
        raise ConfigError(f"unknown preset '{preset}'; choose from {PRESET_NAMES}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - _OVERRIDE_KEYS
    if unknown:
        raise ConfigError(f"unknown geometry overrides {sorted(unknown)}")

    p = PresetParams(electrode_gap=_PRESET_GAPS[preset])
    um_fields = {
        "ring_major_radius_um": "ring_major_radius",
        "core_width_um": "core_width",
        "core_thickness_um": "core_thickness",
        "electrode_width_um": "electrode_width",
        "electrode_thickness_um": "electrode_thickness",
        "d_um": "electrode_gap",
        "side_electrode_lift_um": "side_electrode_lift",
        "cladding_pad_um": "cladding_pad",
    }
    updates = {}
    for key, attr in um_fields.items():
        if key in overrides:
            updates[attr] = float(overrides[key]) * UM
    if "f_phi" in overrides:
        updates["f_phi"] = float(overrides["f_phi"])
    if "applied_voltage_v" in overrides:
        updates["applied_voltage"] = float(overrides["applied_voltage_v"])
    p = replace(p, **updates)

    ln = mats.lithium_niobate()
    sio2 = mats.silica()
    R = p.ring_major_radius
    hw, ht = 0.5 * p.core_width, 0.5 * p.core_thickness
    core = Region("core", "core", ln, R - hw, R + hw, -ht, ht)

    v = 0.5 * p.applied_voltage
    if preset == "G1":
        z0 = p.side_electrode_lift
        z1 = z0 + p.electrode_thickness
        gap_half = 0.5 * p.electrode_gap
        el_in = Region("electrode_in", "electrode", sio2,
                       max(0.0, R - gap_half - p.electrode_width),
                       R - gap_half, z0, z1)
        el_out = Region("electrode_out", "electrode", sio2,
                        R + gap_half, R + gap_half + p.electrode_width, z0, z1)
    else:
        half_gap = 0.5 * p.electrode_gap
        we = 0.5 * p.electrode_width
        el_in = Region("electrode_bottom", "electrode", sio2,
                       R - we, R + we, -half_gap - p.electrode_thickness, -half_gap)
        el_out = Region("electrode_top", "electrode", sio2,
                        R - we, R + we, half_gap, half_gap + p.electrode_thickness)

    pad = p.cladding_pad
    rho_lo = min(core.rho_min, el_in.rho_min, el_out.rho_min) - pad
    rho_hi = max(core.rho_max, el_in.rho_max, el_out.rho_max) + pad
    z_lo = min(core.z_min, el_in.z_min, el_out.z_min) - pad
    z_hi = max(core.z_max, el_in.z_max, el_out.z_max) + pad
    cladding = Region("cladding", "cladding", sio2,
                      max(0.0, rho_lo), rho_hi, z_lo, z_hi)

    return CrossSectionGeometry(
        ring_major_radius=R,
        regions=(core, el_in, el_out, cladding),
        electrode_potentials={el_in.name: +v, el_out.name: -v},
        electrode_gap=p.electrode_gap,
        f_phi=p.f_phi,
        polarization_hint=_PRESET_POLARIZATION[preset],
    )


def preset_polarization(preset):
    try:
        return _PRESET_POLARIZATION[preset]
    except KeyError:
        raise ConfigError(f"unknown preset '{preset}'") from None


def with_ring_radius(geometry, new_radius):
    """Same cross-section shifted radially so the ring sits at ``new_radius``."""
    shift = new_radius - geometry.ring_major_radius
    regions = tuple(
        replace(r, rho_min=r.rho_min + shift, rho_max=r.rho_max + shift)
        for r in geometry.regions
    )
    return replace(geometry, ring_major_radius=new_radius, regions=regions)
