"""Physical constants (CODATA 2018) and reference-instrument defaults.

Every derived number in the package traces back to this table.
"""
import math

PLANCK = 6.62607015e-34  # J s, exact
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
SPEED_OF_LIGHT = 299792458.0  # m/s, exact

STANDARD_GRAVITY = 9.81  # m/s^2, value used for the reference lab
EARTH_ROTATION = 7.2e-5  # rad/s, rounded sidereal rate
VIENNA_LATITUDE = math.radians(48.0)

INTENSITY_STABILITY_LIMIT = 0.1
MIRROR_FLATNESS_FRACTION = 0.1  # surface deviation must stay below wavelength/10
SLIT_SAFETY_FACTOR = 10.0
YAW_SAFETY_FACTOR = 10.0
