"""Structured-grid discretization of a cross-section geometry.

Cells are uniform rectangles in (rho, z); every cell carries exactly one
region tag, resolved by the fixed priority electrode > core > cladding >
substrate > vacuum.  Unknowns of both field solvers live at cell centers.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError
from .geometry import ROLE_PRIORITY

VACUUM_TAG = ROLE_PRIORITY["vacuum"]

MIN_CELLS_PER_FEATURE = 8


@dataclass(frozen=True)
class StructuredGrid:
    """Uniform cell-centered grid over the cross-section plus vacuum margin."""

    geometry: object
    rho_edges: np.ndarray   # (n_rho + 1,) m
    z_edges: np.ndarray     # (n_z + 1,) m
    tags: np.ndarray        # (n_rho, n_z) role index, see geometry.ROLE_PRIORITY
    region_index: np.ndarray  # (n_rho, n_z) index into geometry.regions, -1 = margin
    resolution: float       # cells per meter

    def __post_init__(self):
        for arr in (self.rho_edges, self.z_edges, self.tags, self.region_index):
            arr.setflags(write=False)

    @property
    def n_rho(self):
        return self.rho_edges.size - 1

    @property
    def n_z(self):
        return self.z_edges.size - 1

    @property
    def shape(self):
        return (self.n_rho, self.n_z)

    @property
    def h_rho(self):
        return float(self.rho_edges[1] - self.rho_edges[0])

    @property
    def h_z(self):
        return float(self.z_edges[1] - self.z_edges[0])

    @property
    def rho_centers(self):
        return 0.5 * (self.rho_edges[:-1] + self.rho_edges[1:])

    @property
    def z_centers(self):
        return 0.5 * (self.z_edges[:-1] + self.z_edges[1:])

    def cell_materials(self):
        """List of per-cell materials, addressed by region_index (-1 -> vacuum)."""
        from . import materials as mats

        table = [r.material for r in self.geometry.regions]
        table.append(mats.vacuum())
        return table

    def material_property(self, extract):
        """Per-cell scalar map ``extract(material)`` as an (n_rho, n_z) array."""
        table = self.cell_materials()
        values = np.array([extract(m) for m in table], dtype=float)
        return values[self.region_index]

    def eps_mw_components(self):
        """(eps_rho_rho, eps_z_z) microwave permittivity per cell."""
        err = self.material_property(lambda m: m.eps_microwave[0, 0])
        ezz = self.material_property(lambda m: m.eps_microwave[2, 2])
        return err, ezz

    def eps_opt_diag(self):
        """Optical permittivity diagonal per cell, shape (3, n_rho, n_z)."""
        return np.stack(
            [self.material_property(lambda m, i=i: m.eps_optical[i, i])
             for i in range(3)]
        )

    def electrode_cells(self):
        """(mask, potential) arrays; potential is 0 outside electrodes."""
        mask = self.tags == ROLE_PRIORITY["electrode"]
        pot = np.zeros(self.shape)
        for idx, region in enumerate(self.geometry.regions):
            if region.role == "electrode":
                sel = self.region_index == idx
                pot[sel] = self.geometry.electrode_potentials[region.name]
        return mask, pot

    def pockels_mask(self):
        return self.material_property(lambda m: 1.0 if m.has_pockels else 0.0) > 0.5

    def cell_volumes(self):
        """Axisymmetric cell volumes 2*pi*rho*h_rho*h_z, shape (n_rho, n_z)."""
        return (2.0 * np.pi * self.rho_centers * self.h_rho * self.h_z)[:, None] * np.ones(
            (1, self.n_z)
        )

    def content_hash(self):
        """Stable hash of everything the field solvers see."""
        h = hashlib.sha256()
        for arr in (self.rho_edges, self.z_edges, self.tags, self.region_index):
            h.update(np.ascontiguousarray(arr).tobytes())
        for m in self.cell_materials():
            h.update(m.name.encode())
            h.update(np.ascontiguousarray(m.eps_optical).tobytes())
            h.update(np.ascontiguousarray(m.eps_microwave).tobytes())
            h.update(np.ascontiguousarray(m.r_contracted).tobytes())
        for name in sorted(self.geometry.electrode_potentials):
            h.update(name.encode())
            h.update(np.float64(self.geometry.electrode_potentials[name]).tobytes())
        return h.hexdigest()


def default_margin(geometry, margin_factor=3.0):
    """Vacuum margin: ``margin_factor`` times the largest core/electrode extent."""
    dims = [
        max(r.width, r.height)
        for r in geometry.regions
        if r.role in ("core", "electrode")
    ]
    if not dims:
        dims = [max(r.width, r.height) for r in geometry.regions]
    return margin_factor * max(dims)


def build_grid(geometry, resolution, margin=None, margin_factor=3.0):
    """Discretize ``geometry`` at ``resolution`` cells per meter.

    Raises ResolutionError when fewer than 8 cells span the smallest region
    edge, naming the offending region.
    """
    h = 1.0 / float(resolution)
    for region in geometry.regions:
        feature = min(region.width, region.height)
        if feature / h < MIN_CELLS_PER_FEATURE - 1e-9:
            raise ResolutionError(
                f"region '{region.name}' ({feature * 1e6:.3f} um) spans fewer "
                f"than {MIN_CELLS_PER_FEATURE} cells at resolution "
                f"{resolution * 1e-6:.3f} cells/um"
            )

    if margin is None:
        margin = default_margin(geometry, margin_factor)
    rho0, rho1, z0, z1 = geometry.bounding_box()
    rho_lo = max(0.0, rho0 - margin)
    rho_hi = rho1 + margin
    z_lo, z_hi = z0 - margin, z1 + margin

    # tolerance ceil: exact multiples of h must not gain a roundoff cell
    n_rho = int(np.ceil((rho_hi - rho_lo) / h - 1e-9))
    n_z = int(np.ceil((z_hi - z_lo) / h - 1e-9))
    rho_edges = rho_lo + h * np.arange(n_rho + 1)
    z_edges = z_lo + h * np.arange(n_z + 1)

    rc = 0.5 * (rho_edges[:-1] + rho_edges[1:])
    zc = 0.5 * (z_edges[:-1] + z_edges[1:])

    tags = np.full((n_rho, n_z), VACUUM_TAG, dtype=np.int8)
    region_index = np.full((n_rho, n_z), -1, dtype=np.int32)
    # paint lowest priority first so higher-priority roles overwrite
    order = sorted(
        range(len(geometry.regions)),
        key=lambda i: -ROLE_PRIORITY[geometry.regions[i].role],
    )
    for idx in order:
        r = geometry.regions[idx]
        sel_rho = (rc >= r.rho_min) & (rc < r.rho_max)
        sel_z = (zc >= r.z_min) & (zc < r.z_max)
        block = np.ix_(sel_rho, sel_z)
        tags[block] = ROLE_PRIORITY[r.role]
        region_index[block] = idx

    return StructuredGrid(
        geometry=geometry,
        rho_edges=rho_edges,
        z_edges=z_edges,
        tags=tags,
        region_index=region_index,
        resolution=float(resolution),
    )
