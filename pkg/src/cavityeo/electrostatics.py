"""Quasi-static anisotropic Laplace solver for the electrode potential.

The microwave drive wavelength (cm scale) vastly exceeds the cross-section
(um scale), so the electrode field is the solution of

    div( eps_mw grad V ) = 0

in axisymmetric (rho, z) coordinates with Dirichlet values on electrode
cells and zero normal flux on the outer boundary.  Discretization: cell
centered five-point finite volumes, harmonic permittivity averaging at
material interfaces, electrode surfaces resolved as half-cell Dirichlet
faces.  The resulting SPD system is solved by conjugate gradients with an
algebraic-multigrid preconditioner.

Capacitance of the distributed strip resonator is modeled from the planar
(per-unit-length) cross-section energy times an effective strip length and
a standing-wave energy fraction (default 1/2 for a half-wave voltage
profile); both factors are configuration inputs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import CONSTANTS
from .errors import ConfigError, SolverError

DEFAULT_ENERGY_FRACTION = 0.5


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def _face_coefficients(grid, eps_override=None):
    """Axisymmetric face conductances (without eps0) and Dirichlet data.

    Returns (g_r, g_z, mask_el, v_el): radial-face and axial-face conductance
    arrays for the interior faces, the electrode mask and per-cell electrode
    potentials.  ``eps_override`` = (eps_rr, eps_zz) replaces the per-cell
    material permittivities (used by analytic benchmark oracles).
    """
    if eps_override is None:
        eps_rr, eps_zz = grid.eps_mw_components()
    else:
        eps_rr, eps_zz = eps_override
    rho = grid.rho_centers
    h_r, h_z = grid.h_rho, grid.h_z
    rho_faces = grid.rho_edges[1:-1]  # interior radial faces

    # face between (i, j) and (i+1, j): area 2*pi*rho_face*h_z, distance h_r
    g_r = _harmonic(eps_rr[:-1, :], eps_rr[1:, :]) * (
        2.0 * np.pi * rho_faces[:, None] * h_z / h_r
    )
    # face between (i, j) and (i, j+1): area 2*pi*rho_c*h_r, distance h_z
    g_z = _harmonic(eps_zz[:, :-1], eps_zz[:, 1:]) * (
        2.0 * np.pi * rho[:, None] * h_r / h_z
    )
    mask_el, v_el = grid.electrode_cells()
    return g_r, g_z, mask_el, v_el


@dataclass(frozen=True)
class PotentialField:
    """Solved electrode potential and derived microwave field on a grid."""

    grid: object
    potential: np.ndarray       # (n_rho, n_z) volts
    applied_voltage: float      # max-min electrode potential, volts
    e_rho: np.ndarray           # V/m
    e_z: np.ndarray             # V/m
    residual: float             # relative linear-system residual
    energy_per_length: float    # J/m, planar cross-section energy density
    stored_energy_per_radian: float  # J/rad, axisymmetric measure
    grid_hash: str

    def __post_init__(self):
        for arr in (self.potential, self.e_rho, self.e_z):
            arr.setflags(write=False)

    def e_field_vectors(self):
        """Per-cell microwave field as (n_cells, 3) cylindrical (rho, phi, z)."""
        n = self.potential.size
        out = np.zeros((n, 3))
        out[:, 0] = self.e_rho.ravel()
        out[:, 2] = self.e_z.ravel()
        return out


def solve_potential(grid, rtol=1e-12, maxiter=20000, eps_override=None):
    """Solve the electrode Dirichlet problem on ``grid``.

    The achieved relative residual must be <= 1e-10; otherwise a SolverError
    carrying the residual is raised.
    """
    g_r, g_z, mask_el, v_el = _face_coefficients(grid, eps_override)
    if not mask_el.any():
        raise SolverError("no electrode cells: the potential problem is singular")

    n_rho, n_z = grid.shape
    idx = -np.ones(grid.shape, dtype=np.int64)
    free = ~mask_el
    idx[free] = np.arange(free.sum())
    n_free = int(free.sum())

    rows, cols, vals = [], [], []
    diag = np.zeros(n_free)
    rhs = np.zeros(n_free)

    def couple(ia, ib, fa, fb, va, vb, g):
        """Process one face family: cells a and b share a face of conductance g."""
        both = fa & fb
        gb = g[both]
        rows.append(ia[both])
        cols.append(ib[both])
        vals.append(-gb)
        rows.append(ib[both])
        cols.append(ia[both])
        vals.append(-gb)
        np.add.at(diag, ia[both], gb)
        np.add.at(diag, ib[both], gb)
        # Dirichlet neighbor: the electrode surface sits on the shared face,
        # so the drop happens over half the center distance
        for i_free, v_dir, sel in (
            (ia, vb, fa & ~fb),
            (ib, va, fb & ~fa),
        ):
            gd = 2.0 * g[sel]
            np.add.at(diag, i_free[sel], gd)
            np.add.at(rhs, i_free[sel], gd * v_dir[sel])

    couple(
        idx[:-1, :].ravel(), idx[1:, :].ravel(),
        free[:-1, :].ravel(), free[1:, :].ravel(),
        v_el[:-1, :].ravel(), v_el[1:, :].ravel(),
        g_r.ravel(),
    )
    couple(
        idx[:, :-1].ravel(), idx[:, 1:].ravel(),
        free[:, :-1].ravel(), free[:, 1:].ravel(),
        v_el[:, :-1].ravel(), v_el[:, 1:].ravel(),
        g_z.ravel(),
    )

    rows.append(np.arange(n_free))
    cols.append(np.arange(n_free))
    vals.append(diag)
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_free, n_free),
    )

    if np.linalg.norm(rhs) == 0.0:
        x = np.zeros(n_free)
        achieved = 0.0
    else:
        try:
            import pyamg

            ml = pyamg.smoothed_aggregation_solver(A, max_coarse=64)
            M = ml.aspreconditioner(cycle="V")
        except Exception:
            d = A.diagonal()
            M = spla.LinearOperator(A.shape, matvec=lambda v: v / d)
        x, info = spla.cg(A, rhs, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
        achieved = float(
            np.linalg.norm(rhs - A @ x) / np.linalg.norm(rhs)
        )
        if info != 0 or achieved > 1e-10:
            raise SolverError(
                f"potential solve did not converge (residual {achieved:.3e})",
                residual=achieved,
            )

    V = np.array(v_el)
    V[free] = x

    e_rho, e_z = electric_field_from_potential(V, grid, mask_el)
    u_planar, u_radian = _field_energies(V, grid, mask_el, eps_override)

    potentials = list(grid.geometry.electrode_potentials.values())
    v_app = float(max(potentials) - min(potentials))
    return PotentialField(
        grid=grid,
        potential=V,
        applied_voltage=v_app,
        e_rho=e_rho,
        e_z=e_z,
        residual=achieved,
        energy_per_length=u_planar,
        stored_energy_per_radian=u_radian,
        grid_hash=grid.content_hash(),
    )


def electric_field_from_potential(V, grid, electrode_mask=None):
    """E = -grad V, central differences inside, one-sided at domain edges.

    The field inside electrode cells is set to zero (conductor interior).
    """
    d_rho = np.gradient(V, grid.h_rho, axis=0)
    d_z = np.gradient(V, grid.h_z, axis=1)
    e_rho, e_z = -d_rho, -d_z
    if electrode_mask is not None:
        e_rho = np.where(electrode_mask, 0.0, e_rho)
        e_z = np.where(electrode_mask, 0.0, e_z)
    return e_rho, e_z


def electric_field(potential_field):
    """Recompute E_b from a solved potential (same stencil as the solver)."""
    mask, _ = potential_field.grid.electrode_cells()
    return electric_field_from_potential(
        potential_field.potential, potential_field.grid, mask
    )


def _field_energies(V, grid, mask_el, eps_override=None):
    """Face-based field energies: planar per-unit-length (J/m) and per-radian."""
    if eps_override is None:
        eps_rr, eps_zz = grid.eps_mw_components()
    else:
        eps_rr, eps_zz = eps_override
    h_r, h_z = grid.h_rho, grid.h_z
    free = ~mask_el

    def face_sums(eps_pairs, dv, free_a, free_b, planar_w, axi_w, over):
        """Energy contributions of one face family for both measures."""
        interior = free_a & free_b
        dirich = (free_a & ~free_b) | (~free_a & free_b)
        e2 = (dv / over) ** 2
        planar = eps_pairs * e2 * (planar_w * over)
        axi = eps_pairs * e2 * (axi_w * over)
        # Dirichlet faces: potential drop over half distance, half volume
        e2d = (dv / (0.5 * over)) ** 2
        planar_d = eps_pairs * e2d * (planar_w * 0.5 * over)
        axi_d = eps_pairs * e2d * (axi_w * 0.5 * over)
        return (
            planar[interior].sum() + planar_d[dirich].sum(),
            axi[interior].sum() + axi_d[dirich].sum(),
        )

    rho_faces = grid.rho_edges[1:-1]
    rho_c = grid.rho_centers

    # radial faces
    eps_f = _harmonic(eps_rr[:-1, :], eps_rr[1:, :])
    dv = V[1:, :] - V[:-1, :]
    planar_r, axi_r = face_sums(
        eps_f, dv, free[:-1, :], free[1:, :],
        planar_w=h_z, axi_w=rho_faces[:, None] * h_z, over=h_r,
    )
    # axial faces
    eps_f = _harmonic(eps_zz[:, :-1], eps_zz[:, 1:])
    dv = V[:, 1:] - V[:, :-1]
    planar_z, axi_z = face_sums(
        eps_f, dv, free[:, :-1], free[:, 1:],
        planar_w=h_r, axi_w=rho_c[:, None] * h_r, over=h_z,
    )
    u_planar = 0.5 * CONSTANTS.eps0 * (planar_r + planar_z)
    u_radian = 0.5 * CONSTANTS.eps0 * (axi_r + axi_z)
    return float(u_planar), float(u_radian)


def capacitance(potential_field, l_eff, energy_fraction=DEFAULT_ENERGY_FRACTION):
    """Effective lumped capacitance of the strip resonator, farads.

    C = 2 U_es / V_app^2 with U_es = energy_fraction * l_eff * (planar
    per-unit-length cross-section energy).  ``energy_fraction`` defaults to
    1/2, the mean-square weight of a half-wave standing voltage profile.
    """
    if potential_field.applied_voltage == 0.0:
        raise ConfigError("capacitance undefined at zero applied voltage")
    u_es = energy_fraction * l_eff * potential_field.energy_per_length
    return 2.0 * u_es / potential_field.applied_voltage**2


def charge_per_length_through_z_cut(potential_field, z_level, eps_override=None):
    """Free charge per unit strip length below a z = const cut, via Gauss.

    Integrates eps0*eps_zz*E_z across the full width of the domain at the
    cell row nearest ``z_level`` using the central-difference field; this is
    an estimator independent of the face-energy bookkeeping.
    """
    grid = potential_field.grid
    j = int(np.argmin(np.abs(grid.z_centers - z_level)))
    if eps_override is None:
        _, eps_zz = grid.eps_mw_components()
    else:
        _, eps_zz = eps_override
    flux = CONSTANTS.eps0 * eps_zz[:, j] * potential_field.e_z[:, j]
    return float(np.sum(flux) * grid.h_rho)


def v_zpf(c_farads, omega_b):
    """Zero-point voltage sqrt(hbar*omega_b / (2 C)) of the microwave mode."""
    if c_farads <= 0.0 or omega_b <= 0.0:
        raise ConfigError("v_zpf requires positive capacitance and frequency")
    return float(np.sqrt(CONSTANTS.hbar * omega_b / (2.0 * c_farads)))


def write_field_text(path, potential_field):
    """Plain-text field dump: rho_m  z_m  v_volts  e_rho_v_per_m  e_z_v_per_m."""
    grid = potential_field.grid
    rho = np.repeat(grid.rho_centers, grid.n_z)
    z = np.tile(grid.z_centers, grid.n_rho)
    data = np.column_stack(
        [rho, z, potential_field.potential.ravel(),
         potential_field.e_rho.ravel(), potential_field.e_z.ravel()]
    )
    header = (
        "electrostatic field dump\n"
        "columns: rho_m z_m v_volts e_rho_v_per_m e_z_v_per_m\n"
        f"shape: {grid.n_rho} x {grid.n_z} (rho-major ordering)"
    )
    np.savetxt(path, data, header=header)
