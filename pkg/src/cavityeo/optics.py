"""Whispering-gallery optical eigenmodes of the axisymmetric ring.

Semivectorial scalar model: each polarization is represented by its dominant
electric-field component (TE -> axial z component, TM -> radial component;
minor components are set to zero and this approximation is recorded in run
reports).  With the azimuthal factor exp(i m phi) the scalar Helmholtz
equation on the (rho, z) cross-section becomes

    -(1/rho) d_rho(rho d_rho psi) - d_zz psi + (m^2/rho^2) psi
        = (omega/c)^2 n^2(rho, z) psi

discretized with the same cell-centered finite volumes as the electrostatic
solver (axisymmetric 2*pi*rho weights, Dirichlet walls on the domain
boundary).  The generalized sparse eigenproblem A x = lambda B x is solved
by ARPACK in shift-invert mode around a target frequency with a fixed,
seeded start vector so results are bit-reproducible.

Mode energies follow the equipartition convention: U_a is the full
(electric + magnetic) stored energy, numerically equal to the volume
integral of eps0 * eps * |E|^2 over the cross-section of revolution.
Returned modes are normalized to U_a = 1 J with the scale factor recorded.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import CONSTANTS, TWO_PI
from .errors import BracketError, ModeError, SolverError

# dominant field component per polarization label
POLARIZATION_AXIS = {"TE": 2, "TM": 0}

CONFINEMENT_DB_REQUIRED = 40.0
BOUNDARY_SHELL_CELLS = 2
EIGEN_RESIDUAL_LIMIT = 1e-8
WAVELENGTH_RANGE = (0.4e-6, 5.0e-6)

_EIGEN_SEED = 2718


def _dominant_eps(grid, polarization):
    axis = POLARIZATION_AXIS[polarization]
    return grid.eps_opt_diag()[axis]


def _assemble(grid, m, eps_dd):
    """Stiffness A and mass B for azimuthal order m (axisymmetric weights)."""
    n_rho, n_z = grid.shape
    n = n_rho * n_z
    h_r, h_z = grid.h_rho, grid.h_z
    rho_c = grid.rho_centers
    rho_f = grid.rho_edges[1:-1]

    idx = np.arange(n).reshape(n_rho, n_z)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)

    # radial interior faces
    g = (TWO_PI * rho_f[:, None] * h_z / h_r) * np.ones((1, n_z))
    ia, ib, gv = idx[:-1, :].ravel(), idx[1:, :].ravel(), g.ravel()
    rows += [ia, ib]
    cols += [ib, ia]
    vals += [-gv, -gv]
    np.add.at(diag, ia, gv)
    np.add.at(diag, ib, gv)

    # axial interior faces
    g = (TWO_PI * rho_c[:, None] * h_r / h_z) * np.ones((1, n_z))
    ia, ib, gv = idx[:, :-1].ravel(), idx[:, 1:].ravel(), g[:, :-1].ravel()
    rows += [ia, ib]
    cols += [ib, ia]
    vals += [-gv, -gv]
    np.add.at(diag, ia, gv)
    np.add.at(diag, ib, gv)

    # Dirichlet walls: ghost value 0 half a cell outside each boundary face
    np.add.at(diag, idx[0, :], 2.0 * TWO_PI * grid.rho_edges[0] * h_z / h_r)
    np.add.at(diag, idx[-1, :], 2.0 * TWO_PI * grid.rho_edges[-1] * h_z / h_r)
    np.add.at(diag, idx[:, 0], 2.0 * TWO_PI * rho_c * h_r / h_z)
    np.add.at(diag, idx[:, -1], 2.0 * TWO_PI * rho_c * h_r / h_z)

    # centrifugal term m^2 / rho^2
    vol = (TWO_PI * rho_c * h_r * h_z)[:, None] * np.ones((1, n_z))
    diag += (vol * (float(m) ** 2) / (rho_c**2)[:, None]).ravel()

    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag)
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    B = sp.diags((vol * eps_dd).ravel())
    return A, B, vol


@dataclass(frozen=True)
class ModeSolution:
    """One optical WGM eigenmode on a structured grid.

    ``psi`` is the dominant-component amplitude in V/m after normalization
    to U_a = 1 J.  ``fsr``/``tau`` are attached once the neighboring
    azimuthal order has been solved (see ``fsr_and_tau``).
    """

    grid: object
    m: int
    polarization: str
    omega: float                # rad/s
    psi: np.ndarray             # (n_rho, n_z) V/m
    energy: float               # J, equals 1.0 after normalization
    n_eff: float
    rho_centroid: float         # m, energy-weighted mode radius
    residual: float
    confinement_db: float
    normalization_scale: float  # multiplier applied to the raw eigenvector
    grid_hash: str
    fsr: float = None           # rad/s
    tau: float = None           # s

    def __post_init__(self):
        self.psi.setflags(write=False)

    @property
    def dominant_axis(self):
        return POLARIZATION_AXIS[self.polarization]

    def e_vectors(self):
        """Cylindrical field vectors (n_cells, 3); minor components are zero."""
        n = self.psi.size
        out = np.zeros((n, 3))
        out[:, self.dominant_axis] = self.psi.ravel()
        return out

    def d_vectors(self):
        """Electric displacement eps0 * eps * E per cell, (n_cells, 3), C/m^2."""
        eps = self.grid.eps_opt_diag().reshape(3, -1).T
        return CONSTANTS.eps0 * eps * self.e_vectors()


def mode_energy(mode):
    """Total stored energy: integral of eps0*eps*|E|^2 with 2*pi*rho weights.

    The electric energy integral (which carries a 1/2) is doubled per the
    equipartition convention, giving the full electric + magnetic energy.
    """
    eps_dd = _dominant_eps(mode.grid, mode.polarization)
    vol = mode.grid.cell_volumes()
    return float(CONSTANTS.eps0 * np.sum(vol * eps_dd * mode.psi**2))


def _boundary_max(field):
    k = BOUNDARY_SHELL_CELLS
    edges = [field[:k, :], field[-k:, :], field[:, :k], field[:, -k:]]
    return max(np.abs(e).max() for e in edges)


def solve_scalar_modes(grid, m, polarization, sigma_omega, n_modes=6,
                       eps_dd_override=None, check_confinement=True):
    """Raw eigensolve: confined modes nearest ``sigma_omega``.

    Returns a list of ModeSolution sorted by |omega - sigma_omega|.  Modes
    failing the confinement check are dropped (all dropped -> ModeError
    unless ``check_confinement`` is False).
    """
    if m < 1 or int(m) != m:
        raise ModeError(f"azimuthal order must be a positive integer, got {m}")
    eps_dd = (
        _dominant_eps(grid, polarization)
        if eps_dd_override is None
        else np.asarray(eps_dd_override, dtype=float)
    )
    A, B, vol = _assemble(grid, int(m), eps_dd)
    sigma = (sigma_omega / CONSTANTS.c) ** 2
    rng = np.random.default_rng(_EIGEN_SEED)
    v0 = rng.standard_normal(A.shape[0])
    try:
        eigvals, eigvecs = spla.eigsh(
            A, k=n_modes, M=B, sigma=sigma, which="LM", v0=v0
        )
    except spla.ArpackNoConvergence as err:
        raise SolverError(f"eigen-iteration did not converge: {err}") from err

    grid_hash = grid.content_hash()
    modes = []
    for lam, vec in zip(eigvals, eigvecs.T):
        if lam <= 0.0:
            continue
        omega = CONSTANTS.c * math.sqrt(lam)
        resid = float(
            np.linalg.norm(A @ vec - lam * (B @ vec))
            / np.linalg.norm(lam * (B @ vec))
        )
        if resid > EIGEN_RESIDUAL_LIMIT:
            raise SolverError(
                f"eigenpair residual {resid:.2e} exceeds {EIGEN_RESIDUAL_LIMIT}",
                residual=resid,
            )
        psi = vec.reshape(grid.shape)
        peak = np.abs(psi).max()
        if psi.ravel()[np.abs(psi).argmax()] < 0:
            psi = -psi
        conf_db = 20.0 * math.log10(max(_boundary_max(psi) / peak, 1e-300))
        confined = conf_db <= -CONFINEMENT_DB_REQUIRED
        if check_confinement and not confined:
            continue

        raw_energy = CONSTANTS.eps0 * float(np.sum(vol * eps_dd * psi**2))
        scale = 1.0 / math.sqrt(raw_energy)
        psi = psi * scale
        weights = vol * eps_dd * psi**2
        rho_centroid = float(
            np.sum(weights * grid.rho_centers[:, None]) / np.sum(weights)
        )
        n_eff = float(m) * CONSTANTS.c / (omega * rho_centroid)
        modes.append(
            ModeSolution(
                grid=grid,
                m=int(m),
                polarization=polarization,
                omega=omega,
                psi=psi,
                energy=1.0,
                n_eff=n_eff,
                rho_centroid=rho_centroid,
                residual=resid,
                confinement_db=conf_db,
                normalization_scale=scale,
                grid_hash=grid_hash,
            )
        )
    if not modes:
        raise ModeError(
            f"no confined mode near omega/2pi = {sigma_omega / TWO_PI:.4e} Hz "
            f"for m = {m} ({polarization}): all candidates failed the "
            f"{CONFINEMENT_DB_REQUIRED:.0f} dB boundary-decay check"
        )
    modes.sort(key=lambda mo: abs(mo.omega - sigma_omega))
    return modes


def solve_wgm_modes(grid, m, polarization, target_wavelength, n_modes=6):
    """Confined WGM modes with free-space wavelength nearest ``target_wavelength``."""
    lo, hi = WAVELENGTH_RANGE
    if not (lo <= target_wavelength <= hi):
        raise ModeError(
            f"target wavelength {target_wavelength * 1e6:.3f} um outside the "
            f"validated transparency range [{lo * 1e6:.1f}, {hi * 1e6:.1f}] um"
        )
    omega_target = TWO_PI * CONSTANTS.c / target_wavelength
    return solve_scalar_modes(grid, m, polarization, omega_target, n_modes)


def _radial_node_count(mode):
    """Sign changes of psi along the radial line through the peak."""
    i_pk, j_pk = np.unravel_index(np.abs(mode.psi).argmax(), mode.psi.shape)
    line = mode.psi[:, j_pk]
    significant = np.abs(line) > 1e-3 * np.abs(line).max()
    signs = np.sign(line[significant])
    return int(np.count_nonzero(np.diff(signs) != 0))


def fundamental_at_m(grid, m, polarization, n_modes=6):
    """Lowest-frequency confined mode at azimuthal order m.

    The eigensolver is targeted just below the fundamental using the bound
    omega > m*c / (n_max * rho_max): no mode can lie below the angular phase
    velocity limit set by the largest n*rho product on the grid.
    """
    eps_dd = _dominant_eps(grid, polarization)
    n_rho_prod = np.sqrt(eps_dd) * grid.rho_centers[:, None]
    omega_lb = float(m) * CONSTANTS.c / n_rho_prod.max()
    modes = solve_scalar_modes(grid, m, polarization, 0.995 * omega_lb, n_modes)
    lowest = min(modes, key=lambda mo: mo.omega)
    candidates = [
        mo for mo in modes
        if _radial_node_count(mo) == 0 and mo.omega <= lowest.omega * 1.2
    ]
    return min(candidates, key=lambda mo: mo.omega) if candidates else lowest


def find_fundamental_near(grid, omega_target, polarization, n_modes=6,
                          max_iter=8):
    """Fundamental WGM nearest ``omega_target``, selecting m automatically.

    Starts from the bulk-index estimate m0 = round(n_max * omega * R / c) and
    applies secant updates m -> round(m * omega_target / omega(m)); the bulk
    estimate alone can be tens of orders off because n_eff < n_bulk, so a
    fixed-width scan is not sufficient.  Ends with a +-1 neighborhood scan.
    """
    R = grid.geometry.ring_major_radius
    eps_dd = _dominant_eps(grid, polarization)
    n_bulk = float(np.sqrt(eps_dd.max()))
    m = max(1, round(n_bulk * omega_target * R / CONSTANTS.c))

    solved = {}

    def fundamental(m_try):
        if m_try not in solved:
            solved[m_try] = fundamental_at_m(grid, m_try, polarization, n_modes)
        return solved[m_try]

    for _ in range(max_iter):
        mode = fundamental(m)
        m_next = max(1, round(m * omega_target / mode.omega))
        if m_next == m:
            break
        m = m_next
    else:
        raise ModeError(
            f"azimuthal-order search did not settle near "
            f"omega/2pi = {omega_target / TWO_PI:.4e} Hz"
        )

    best = None
    for m_try in (m - 1, m, m + 1):
        if m_try < 1:
            continue
        try:
            cand = fundamental(m_try)
        except ModeError:
            continue
        if best is None or abs(cand.omega - omega_target) < abs(
            best.omega - omega_target
        ):
            best = cand
    if best is None:
        raise ModeError("no confined fundamental mode found in the m scan")
    return best


def fsr_and_tau(grid, m, polarization, n_modes=6):
    """Free spectral range omega(m+1) - omega(m) and round-trip time 2*pi/FSR."""
    mode_m = fundamental_at_m(grid, m, polarization, n_modes)
    mode_m1 = fundamental_at_m(grid, m + 1, polarization, n_modes)
    fsr = mode_m1.omega - mode_m.omega
    return fsr, TWO_PI / fsr


def attach_fsr(mode, fsr):
    return replace(mode, fsr=fsr, tau=TWO_PI / fsr)


def match_fsr(geometry, omega_b, resolution, polarization="TM",
              omega_target=None, r_bounds_factor=8.0, fsr_rtol=5e-3,
              n_modes=6):
    """Adjust the ring major radius until the optical FSR equals ``omega_b``.

    Root-solve on ln(R) over [R/f, R*f]; raises BracketError when the target
    FSR is not attainable inside the allowed radius range.  Returns the
    adjusted radius in meters.
    """
    from .geometry import with_ring_radius
    from .grid import build_grid

    if omega_b <= 0.0:
        raise BracketError("target FSR must be positive")
    R0 = geometry.ring_major_radius
    if omega_target is None:
        omega_target = TWO_PI * 200e12

    def fsr_at(R):
        g = build_grid(with_ring_radius(geometry, R), resolution)
        mode = find_fundamental_near(g, omega_target, polarization, n_modes)
        neighbor = fundamental_at_m(g, mode.m + 1, polarization, n_modes)
        return neighbor.omega - mode.omega

    lo, hi = R0 / r_bounds_factor, R0 * r_bounds_factor
    f_lo, f_hi = fsr_at(lo), fsr_at(hi)
    # FSR decreases with radius
    if not (f_hi <= omega_b <= f_lo):
        raise BracketError(
            f"no radius in [{lo * 1e6:.1f}, {hi * 1e6:.1f}] um reaches "
            f"FSR/2pi = {omega_b / TWO_PI:.4e} Hz "
            f"(attainable range [{f_hi / TWO_PI:.4e}, {f_lo / TWO_PI:.4e}] Hz)"
        )

    x_lo, x_hi = math.log(lo), math.log(hi)
    for _ in range(60):
        x_mid = 0.5 * (x_lo + x_hi)
        fsr_mid = fsr_at(math.exp(x_mid))
        if abs(fsr_mid - omega_b) <= fsr_rtol * omega_b:
            return math.exp(x_mid)
        if fsr_mid > omega_b:
            x_lo = x_mid
        else:
            x_hi = x_mid
    raise BracketError("FSR matching did not converge to the requested tolerance")


def write_mode_text(path, mode):
    """Plain-text mode dump: rho_m  z_m  e_dominant_v_per_m."""
    grid = mode.grid
    rho = np.repeat(grid.rho_centers, grid.n_z)
    z = np.tile(grid.z_centers, grid.n_rho)
    data = np.column_stack([rho, z, mode.psi.ravel()])
    header = (
        "optical mode dump\n"
        "columns: rho_m z_m e_dominant_v_per_m\n"
        f"m: {mode.m}  polarization: {mode.polarization}  "
        f"omega_over_2pi_hz: {mode.omega / TWO_PI!r}\n"
        f"shape: {grid.n_rho} x {grid.n_z} (rho-major ordering)"
    )
    np.savetxt(path, data, header=header)
