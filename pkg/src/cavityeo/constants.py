"""Physical constants and frequency conventions.

All internal angular frequencies are in rad/s.  Quantities reported to the
user as "/2pi" values are ordinary frequencies in Hz; conversion between the
two is an exact multiplication or division by 2*pi.
"""

from dataclasses import dataclass

import numpy as np
import scipy.constants

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values used throughout, SI units."""

    hbar: float = scipy.constants.hbar        # J*s
    eps0: float = scipy.constants.epsilon_0   # F/m
    c: float = scipy.constants.c              # m/s


CONSTANTS = PhysicalConstants()


def rad_per_s_to_hz(omega):
    """Angular frequency (rad/s) -> ordinary frequency (Hz)."""
    return omega / TWO_PI


def hz_to_rad_per_s(f):
    """Ordinary frequency (Hz) -> angular frequency (rad/s)."""
    return f * TWO_PI
