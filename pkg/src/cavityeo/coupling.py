"""Vacuum electro-optic coupling rate from field overlap.

The chain implemented here: the microwave field E_b perturbs the optical
impermeability through the Pockels tensor, the permittivity perturbation
shifts the optical resonance per first-order cavity perturbation theory
(delta_omega/omega = delta_U/U, magnitudes; physically an increased
permittivity lowers the frequency and the sign is reported separately), and
scaling the voltage-normalized shift by the zero-point voltage of the
microwave mode gives the vacuum rate

    g0 = V_zpf * delta_omega_a / V_applied.

Because the Pockels tensor is not axisymmetric while the fields are solved
on one (rho, z) cross-section, the interaction is integrated numerically
over the angular coordinate: at each sampled azimuth the cylindrical field
components are rotated into the crystal frame and contracted with the
crystal-frame tensors, and the arc actually covered by the uniform-phase
electrode field enters as the coverage factor f_phi.

All overlap quadrature: midpoint per cell with 2*pi*rho weights in the
cross-section, trapezoid (uniform samples on the periodic interval) in
azimuth.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS, TWO_PI
from .electrostatics import v_zpf
from .errors import ConfigError
from .materials import rotation_about_z
from .optics import POLARIZATION_AXIS, fundamental_at_m, _dominant_eps


@dataclass(frozen=True)
class CouplingResult:
    """Vacuum coupling rate and the record of how it was obtained."""

    g0: float                    # rad/s, magnitude convention
    delta_omega_per_volt: float  # rad/s per applied volt
    method: str                  # overlap_integral | bethe_schwinger | ...
    inputs: dict = field(default_factory=dict)
    notes: tuple = ()

    def __post_init__(self):
        if not np.isfinite(self.g0):
            raise ConfigError("coupling rate must be finite")

    @property
    def g0_over_2pi_hz(self):
        return self.g0 / TWO_PI


def _pockels_cells(grid):
    mask = grid.pockels_mask().ravel()
    if not mask.any():
        raise ConfigError("grid has no cells with a nonzero Pockels tensor")
    return mask


def eo_overlap_integral(mode, e_b_vectors, material, f_phi=1.0, n_phi=64):
    """Angular-averaged anisotropic overlap integral of Eq.-of-motion chain.

    Evaluates  closed-integral d_phi  integral dA rho *
    r_klm (eps E_a)_k (eps E_a)_l E_b_m  over the electro-optic cells, with
    all tensors in the crystal frame, scaled by the coverage f_phi.
    Units: V^2 * m (so that (eps0/2) * integral is an energy per volt^2
    after dividing by the applied voltage squared... the caller keeps track).
    """
    grid = mode.grid
    mask = _pockels_cells(grid)
    w = (grid.rho_centers[:, None] * grid.h_rho * grid.h_z * np.ones(
        (1, grid.n_z))).ravel()[mask]
    ea = mode.e_vectors()[mask]
    eb = np.asarray(e_b_vectors)[mask]
    eps_diag = grid.eps_opt_diag().reshape(3, -1).T[mask]
    r = material.r_full

    total = 0.0
    for phi in np.arange(n_phi) * (TWO_PI / n_phi):
        rot = rotation_about_z(phi)
        ea_cr = ea @ rot.T
        eb_cr = eb @ rot.T
        d_ea = eps_diag * ea_cr
        total += np.einsum("klm,ck,cl,cm,c->", r, d_ea, d_ea, eb_cr, w)
    return float(f_phi * (TWO_PI / n_phi) * total)


def bethe_schwinger_shift(mode, delta_eps_cells):
    """First-order resonance shift from a permittivity perturbation.

    ``delta_eps_cells``: (n_cells, 3, 3) cylindrical-component tensors.
    Returns omega_a * delta_U / U_a (magnitude convention: the physical
    frequency shift is negative for a positive permittivity change).
    Warns when the perturbation is too large for first-order accuracy.
    """
    if mode.energy <= 0.0:
        raise ConfigError("mode has zero stored energy")
    grid = mode.grid
    d_eps = np.asarray(delta_eps_cells, dtype=float)
    eps_scale = grid.eps_opt_diag().max()
    ratio = np.abs(d_eps).max() / eps_scale
    if ratio > 1e-2:
        warnings.warn(
            f"permittivity perturbation ratio {ratio:.2e} > 1e-2: first-order "
            f"perturbation theory may be inaccurate",
            stacklevel=2,
        )
    delta_u = delta_energy_from_delta_eps(mode, d_eps)
    return mode.omega * delta_u / mode.energy


def delta_energy_from_delta_eps(mode, delta_eps_cells):
    """Perturbation energy (eps0/2) * integral delta_eps_ij E_a^i E_a^j dV."""
    vol = mode.grid.cell_volumes().ravel()
    ea = mode.e_vectors()
    d_eps = np.asarray(delta_eps_cells, dtype=float)
    return 0.5 * CONSTANTS.eps0 * float(
        np.einsum("c,cij,ci,cj->", vol, d_eps, ea, ea)
    )


def delta_energy(mode, delta_eta_cells):
    """Perturbation energy from the impermeability form.

    (eps0/2) * integral delta_eta_kl d^k d^l dV with d = eps E_a the relative
    displacement (the stored displacement D_a divided by eps0); algebraically
    identical to the delta_eps form through
    delta_eps_ij = eps_ik eps_jl delta_eta_kl.
    """
    vol = mode.grid.cell_volumes().ravel()
    d_rel = mode.d_vectors() / CONSTANTS.eps0
    d_eta = np.asarray(delta_eta_cells, dtype=float)
    return 0.5 * CONSTANTS.eps0 * float(
        np.einsum("c,ckl,ck,cl->", vol, d_eta, d_rel, d_rel)
    )


def g0_overlap(mode, potential, material, c_farads, omega_b, f_phi=1.0,
               n_phi=64):
    """Vacuum coupling rate from the full anisotropic overlap integral.

    ``mode`` and ``potential`` must live on the same grid.  The result obeys
    g0 = (delta_omega per volt) * V_zpf by construction.
    """
    if mode.grid_hash != potential.grid_hash:
        raise ConfigError(
            "optical mode and electrostatic solution were computed on "
            "different grids"
        )
    if c_farads <= 0.0:
        raise ConfigError("capacitance must be positive")
    v_app = potential.applied_voltage
    if v_app == 0.0:
        raise ConfigError("applied voltage is zero: no field to scale")

    integral = eo_overlap_integral(
        mode, potential.e_field_vectors(), material, f_phi=f_phi, n_phi=n_phi
    )
    delta_u = 0.5 * CONSTANTS.eps0 * integral
    d_omega_per_volt = mode.omega * delta_u / (mode.energy * v_app)
    vzpf = v_zpf(c_farads, omega_b)
    g0 = abs(d_omega_per_volt) * vzpf
    notes = (
        "semivectorial fields: Pockels terms involving the minor optical "
        "field components are dropped",
    )
    return CouplingResult(
        g0=g0,
        delta_omega_per_volt=d_omega_per_volt,
        method="overlap_integral",
        inputs={
            "mode_m": mode.m,
            "polarization": mode.polarization,
            "omega_a_rad_per_s": mode.omega,
            "omega_b_rad_per_s": omega_b,
            "capacitance_f": c_farads,
            "v_zpf_v": vzpf,
            "f_phi": f_phi,
            "n_phi": n_phi,
            "applied_voltage_v": v_app,
            "grid_hash": mode.grid_hash,
        },
        notes=notes,
    )


def g0_from_bethe_schwinger(mode, potential, material, c_farads, omega_b,
                            f_phi=1.0, n_phi=64):
    """Same rate through the explicit perturbation-theory route.

    Builds the azimuth-averaged cylindrical delta_eps from the Pockels chain
    and feeds it to the Bethe-Schwinger shift; algebraically equivalent to
    ``g0_overlap`` and used as a consistency diagnostic.
    """
    if mode.grid_hash != potential.grid_hash:
        raise ConfigError("mode/potential grid mismatch")
    d_eps = azimuth_averaged_delta_eps(
        mode.grid, potential.e_field_vectors(), material, n_phi=n_phi
    )
    shift = bethe_schwinger_shift(mode, d_eps * f_phi)
    d_omega_per_volt = shift / potential.applied_voltage
    g0 = abs(d_omega_per_volt) * v_zpf(c_farads, omega_b)
    return CouplingResult(
        g0=g0,
        delta_omega_per_volt=d_omega_per_volt,
        method="bethe_schwinger",
        inputs={"omega_b_rad_per_s": omega_b, "capacitance_f": c_farads},
    )


def azimuth_averaged_delta_eps(grid, e_b_vectors, material, n_phi=64):
    """Azimuth-averaged cylindrical delta_eps tensor per cell, (n_cells, 3, 3).

    For each sampled azimuth the Pockels perturbation is evaluated in the
    crystal frame and rotated back to cylindrical components; the average
    over the ring is what an axisymmetric mode quadratic form sees.
    """
    n_cells = grid.tags.size
    eb = np.asarray(e_b_vectors)
    mask = grid.pockels_mask().ravel()
    eps = np.diag(np.stack([grid.eps_opt_diag().reshape(3, -1).T[mask][:, i]
                            for i in range(3)], axis=1).mean(axis=0))
    # per-cell eps as (n_sel, 3) diagonal
    eps_diag = grid.eps_opt_diag().reshape(3, -1).T[mask]
    r = material.r_full
    out = np.zeros((n_cells, 3, 3))
    acc = np.zeros((mask.sum(), 3, 3))
    for phi in np.arange(n_phi) * (TWO_PI / n_phi):
        rot = rotation_about_z(phi)
        eb_cr = eb[mask] @ rot.T
        d_eta = np.einsum("ijk,ck->cij", r, eb_cr)
        d_eps = (
            eps_diag[:, :, None] * d_eta * eps_diag[:, None, :]
        )  # eps_ik eps_jl d_eta_kl for diagonal eps
        # back to cylindrical components
        acc += np.einsum("ai,cij,bj->cab", rot.T, d_eps, rot.T)
    out[mask] = acc / n_phi
    return out


def direct_eigen_shift_oracle(grid, m, polarization, delta_eps_dd, n_modes=6):
    """Brute-force validation of the perturbation formula.

    Re-solves the optical eigenproblem with the dominant-axis permittivity
    perturbed by ``delta_eps_dd`` (per-cell array) at identical
    discretization and returns the signed frequency difference.
    """
    base = fundamental_at_m(grid, m, polarization, n_modes)
    eps_dd = _dominant_eps(grid, polarization) + np.asarray(delta_eps_dd)
    from .optics import solve_scalar_modes

    n_rho_prod = np.sqrt(eps_dd) * grid.rho_centers[:, None]
    omega_lb = float(m) * CONSTANTS.c / n_rho_prod.max()
    perturbed = solve_scalar_modes(
        grid, m, polarization, 0.995 * omega_lb, n_modes,
        eps_dd_override=eps_dd,
    )
    pert_fund = min(perturbed, key=lambda mo: mo.omega)
    return pert_fund.omega - base.omega


def g0_closed_form(omega_a, n, r, omega_b, eps_mw, v_b):
    """Closed-form estimate g0 = omega_a n^2 r sqrt(hbar omega_b / (eps0 eps V_b)).

    ``v_b`` is the microwave mode volume; the estimate ignores the detailed
    field overlap and energy-ratio factors of the rigorous chain.
    """
    vals = {"omega_a": omega_a, "n": n, "r": r, "omega_b": omega_b,
            "eps_mw": eps_mw, "v_b": v_b}
    for name, v in vals.items():
        if v <= 0.0:
            raise ConfigError(f"g0_closed_form requires positive {name}, got {v}")
    return omega_a * n**2 * r * np.sqrt(
        CONSTANTS.hbar * omega_b / (CONSTANTS.eps0 * eps_mw * v_b)
    )


def implied_mode_volume(g0, omega_a, n, r, omega_b, eps_mw):
    """Invert the closed form for the mode volume that reproduces ``g0``."""
    if g0 <= 0.0:
        raise ConfigError("implied mode volume needs a positive g0")
    return CONSTANTS.hbar * omega_b * (omega_a * n**2 * r / g0) ** 2 / (
        CONSTANTS.eps0 * eps_mw
    )


def g0_generic_form(omega_a, n, r, l, d, tau, c_farads, omega_b):
    """Generic-geometry estimate omega_a n^3 r l / (c tau D) * V_zpf-like factor."""
    vals = {"omega_a": omega_a, "n": n, "r": r, "l": l, "d": d, "tau": tau,
            "c_farads": c_farads, "omega_b": omega_b}
    for name, v in vals.items():
        if v <= 0.0:
            raise ConfigError(f"g0_generic_form requires positive {name}, got {v}")
    return (
        omega_a * n**3 * r * l / (CONSTANTS.c * tau * d)
    ) * np.sqrt(CONSTANTS.hbar * omega_b / (2.0 * c_farads))
