"""Anisotropic material descriptions and Pockels-tensor algebra.

Conventions
-----------
* Crystal frame: the crystal z axis coincides with the device symmetry axis
  (Z-cut orientation).  All tensors stored in the crystal frame.
* ``r_contracted`` uses Voigt row indexing 1..6 -> (11, 22, 33, 23, 13, 12)
  and is given in pm/V; the expanded rank-3 tensor is in m/V.
* The impermeability perturbation keeps only the linear (Pockels) term:
  ``delta_eta_ij = r_ijk E_k``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

PM_PER_V_TO_M_PER_V = 1e-12

# Voigt row -> tensor index pairs (0-based)
_VOIGT_PAIRS = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


def expand_contracted_tensor(r_contracted):
    """Expand a 6x3 contracted Pockels tensor (pm/V) to rank-3 r_ijk (m/V).

    The result satisfies r_ijk = r_jik by construction.
    """
    r6 = np.asarray(r_contracted, dtype=float)
    if r6.shape != (6, 3):
        raise ConfigError(f"contracted Pockels tensor must be 6x3, got {r6.shape}")
    r = np.zeros((3, 3, 3))
    for row, (i, j) in enumerate(_VOIGT_PAIRS):
        r[i, j, :] = r6[row]
        r[j, i, :] = r6[row]
    return r * PM_PER_V_TO_M_PER_V


def rotation_about_z(phi):
    """3x3 rotation matrix about the crystal z axis by angle phi (rad)."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_tensor_about_axis(r, phi):
    """Rotate a rank-3 tensor about the z axis: r'_ijk = R_ia R_jb R_kc r_abc."""
    R = rotation_about_z(phi)
    return np.einsum("ia,jb,kc,abc->ijk", R, R, R, np.asarray(r, dtype=float))


def pockels_delta_impermeability(material, e_field):
    """Impermeability change delta_eta_ij = r_ijk E_k for field E (V/m, crystal frame)."""
    e = np.asarray(e_field, dtype=float)
    return np.einsum("ijk,k->ij", material.r_full, e)


def delta_epsilon_from_delta_eta(eps, delta_eta):
    """Permittivity change delta_eps_ij = eps_ik eps_jl delta_eta_kl."""
    eps = np.asarray(eps, dtype=float)
    return eps @ np.asarray(delta_eta, dtype=float) @ eps.T


def _check_spd(t, name, label):
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 3):
        raise ConfigError(f"{name}: {label} must be 3x3, got {t.shape}")
    if not np.allclose(t, t.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(t).max())):
        raise ConfigError(f"{name}: {label} must be symmetric")
    eigvals = np.linalg.eigvalsh(t)
    if eigvals.min() <= 0.0:
        raise ConfigError(f"{name}: {label} must be positive definite")
    if np.diag(t).min() < 1.0:
        raise ConfigError(f"{name}: diagonal entries of {label} must be >= 1")
    return t


@dataclass(frozen=True)
class Material:
    """Linear anisotropic optical material with optional Pockels response.

    Attributes
    ----------
    name : str
    eps_optical : (3, 3) array
        Relative optical permittivity tensor, crystal frame.
    eps_microwave : (3, 3) array
        Relative microwave (quasi-static) permittivity tensor.
    r_contracted : (6, 3) array
        Contracted Pockels tensor in pm/V; zeros for non-EO materials.
    refractive_index_scalar : float
        Scalar index for closed-form estimates; its square must lie between
        the extreme eigenvalues of ``eps_optical``.
    r_full : (3, 3, 3) array
        Expanded Pockels tensor in m/V (derived, read-only).
    """

    name: str
    eps_optical: np.ndarray
    eps_microwave: np.ndarray
    r_contracted: np.ndarray
    refractive_index_scalar: float
    r_full: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        eps_o = _check_spd(self.eps_optical, self.name, "eps_optical")
        eps_m = _check_spd(self.eps_microwave, self.name, "eps_microwave")
        r6 = np.asarray(self.r_contracted, dtype=float)
        r_full = expand_contracted_tensor(r6)
        n2 = self.refractive_index_scalar**2
        lo, hi = np.linalg.eigvalsh(eps_o)[[0, -1]]
        if not (lo - 1e-9 <= n2 <= hi + 1e-9):
            raise ConfigError(
                f"{self.name}: refractive_index_scalar^2={n2:.4f} outside "
                f"eps_optical eigenvalue range [{lo:.4f}, {hi:.4f}]"
            )
        for arr in (eps_o, eps_m, r6, r_full):
            arr.setflags(write=False)
        object.__setattr__(self, "eps_optical", eps_o)
        object.__setattr__(self, "eps_microwave", eps_m)
        object.__setattr__(self, "r_contracted", r6)
        object.__setattr__(self, "r_full", r_full)

    @property
    def has_pockels(self):
        return bool(np.any(self.r_contracted != 0.0))


def _diag(a, b, c):
    return np.diag([float(a), float(b), float(c)])


def lithium_niobate(r51_pm_per_v=30.0, r13_pm_per_v=9.6, r22_pm_per_v=6.8,
                    r33_pm_per_v=30.9):
    """Z-cut congruent lithium niobate with configurable Pockels entries.

    Default tensor entries and permittivities are standard literature values
    for the clamped crystal near 1550 nm (n_o = 2.211, n_e = 2.138;
    eps_mw = diag(44, 44, 28)); they are external data, not derived here,
    and can be overridden from the material configuration file.
    """
    n_o, n_e = 2.211, 2.138
    r6 = np.zeros((6, 3))
    r6[0, 1] = -r22_pm_per_v
    r6[0, 2] = r13_pm_per_v
    r6[1, 1] = r22_pm_per_v
    r6[1, 2] = r13_pm_per_v
    r6[2, 2] = r33_pm_per_v
    r6[3, 1] = r51_pm_per_v
    r6[4, 0] = r51_pm_per_v
    r6[5, 0] = -r22_pm_per_v
    return Material(
        name="LiNbO3",
        eps_optical=_diag(n_o**2, n_o**2, n_e**2),
        eps_microwave=_diag(44.0, 44.0, 28.0),
        r_contracted=r6,
        refractive_index_scalar=n_e,
    )


def silica():
    """Fused silica cladding (n = 1.444 near 1550 nm, eps_mw = 3.9)."""
    n = 1.444
    return Material(
        name="SiO2",
        eps_optical=_diag(n**2, n**2, n**2),
        eps_microwave=_diag(3.9, 3.9, 3.9),
        r_contracted=np.zeros((6, 3)),
        refractive_index_scalar=n,
    )


def vacuum():
    return Material(
        name="vacuum",
        eps_optical=np.eye(3),
        eps_microwave=np.eye(3),
        r_contracted=np.zeros((6, 3)),
        refractive_index_scalar=1.0,
    )


_MATERIAL_KEYS = {
    "eps_optical",
    "eps_microwave",
    "r_contracted_pm_per_v",
    "refractive_index_scalar",
}


def material_from_dict(name, spec):
    """Build a Material from a configuration mapping.

    Expected keys: ``eps_optical`` and ``eps_microwave`` (each a 3-list of
    diagonal entries or a 3x3 nested list), ``r_contracted_pm_per_v``
    (6x3 nested list, optional, default zeros), ``refractive_index_scalar``
    (optional, default sqrt of the smallest optical diagonal entry).
    Unknown keys are rejected.
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"material '{name}' must be a mapping")
    unknown = set(spec) - _MATERIAL_KEYS
    if unknown:
        raise ConfigError(f"material '{name}': unknown keys {sorted(unknown)}")

    def tensor3(key):
        if key not in spec:
            raise ConfigError(f"material '{name}': missing key '{key}'")
        val = np.asarray(spec[key], dtype=float)
        if val.shape == (3,):
            return np.diag(val)
        if val.shape == (3, 3):
            return val
        raise ConfigError(
            f"material '{name}': '{key}' must be a 3-vector of diagonal "
            f"entries or a 3x3 matrix"
        )

    eps_o = tensor3("eps_optical")
    eps_m = tensor3("eps_microwave")
    r6 = np.asarray(spec.get("r_contracted_pm_per_v", np.zeros((6, 3))), dtype=float)
    if r6.shape != (6, 3):
        raise ConfigError(f"material '{name}': r_contracted_pm_per_v must be 6x3")
    n_scalar = float(
        spec.get("refractive_index_scalar", np.sqrt(np.diag(eps_o).min()))
    )
    return Material(
        name=name,
        eps_optical=eps_o,
        eps_microwave=eps_m,
        r_contracted=r6,
        refractive_index_scalar=n_scalar,
    )


BUILTIN_MATERIALS = {
    "LiNbO3": lithium_niobate,
    "SiO2": silica,
    "vacuum": vacuum,
}


def get_material(name, overrides=None):
    """Look up a built-in material by name, or build one from ``overrides``."""
    if overrides is not None:
        return material_from_dict(name, overrides)
    try:
        return BUILTIN_MATERIALS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown material '{name}'; built-ins: {sorted(BUILTIN_MATERIALS)}"
        ) from None
