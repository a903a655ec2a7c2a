"""Physical constants and unit helpers (SI throughout, angles in radians)."""

import math

# Earth gravitational parameter [m^3/s^2]
MU_EARTH = 3.986004418e14
# Earth equatorial radius [m]
R_EARTH = 6378137.0
# Second zonal harmonic of the geopotential [-]
J2 = 1.08263e-3

ARCSEC = math.pi / (180.0 * 3600.0)
DEG = math.pi / 180.0


def orbit_period(a: float) -> float:
    """Keplerian period [s] of an orbit with semimajor axis ``a`` [m]."""
    return 2.0 * math.pi * math.sqrt(a**3 / MU_EARTH)


def mean_motion(a: float) -> float:
    """Keplerian mean motion [rad/s] for semimajor axis ``a`` [m]."""
    return math.sqrt(MU_EARTH / a**3)
