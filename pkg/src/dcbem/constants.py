"""Physical constants shared by every module."""

import math

#: Vacuum permittivity (CODATA 2018), F/m.
EPS0 = 8.8541878128e-12

#: 1 / (4 pi), the static Green's function prefactor.
INV_4PI = 1.0 / (4.0 * math.pi)

#: Hard lower bound on triangle area, m^2.
MIN_TRIANGLE_AREA = 1e-18

#: Aspect ratio (longest edge over its altitude) above which a warning is logged.
ASPECT_WARN = 20.0
