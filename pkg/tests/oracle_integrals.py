"""Reference integrals computed without any package code.

In-plane points use polar coordinates centred on the observation point, where
the 1/R singularity cancels against the Jacobian; off-plane points use a
plain adaptive double integral. Both are slow and only used to produce and
re-check the frozen values in ``GOLDEN``.
"""

import numpy as np
from scipy import integrate

FOUR_PI = 4.0 * np.pi

UNIT_TRI = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

# int_T 1/(4 pi R) dS for the unit right triangle, recorded from the functions below
GOLDEN = {
    "centroid": ((1 / 3, 1 / 3, 0.0), 1.915612707151378e-01),
    "vertex0": ((0.0, 0.0, 0.0), 9.918937762795120e-02),
    "vertex1": ((1.0, 0.0, 0.0), 7.013748154239752e-02),
    "above": ((0.2, 0.3, 0.1), 1.443545439590001e-01),
    "outside": ((1.5, -0.4, 0.3), 2.923470091548754e-02),
    "below_close": ((0.1, 0.1, -0.02), 1.449760334734152e-01),
}


def single_layer_inplane(p, tri2d):
    """int over a 2-D triangle of 1/R from a point inside it or on a vertex."""
    p = np.asarray(p, float)
    total = 0.0
    for i in range(3):
        a, b = tri2d[i], tri2d[(i + 1) % 3]
        if np.linalg.norm(a - p) == 0 or np.linalg.norm(b - p) == 0:
            continue
        e = b - a
        nrm = np.array([e[1], -e[0]]) / np.linalg.norm(e)
        h = abs(np.dot(a - p, nrm))
        if h == 0:
            continue
        ta = np.arctan2(*(a - p)[::-1])
        tb = np.arctan2(*(b - p)[::-1])
        dth = (tb - ta + np.pi) % (2 * np.pi) - np.pi
        foot = nrm * np.dot(a - p, nrm)
        tn = np.arctan2(foot[1], foot[0])
        val, _ = integrate.quad(lambda t: h / np.cos(t - tn), ta, ta + dth, epsabs=0, epsrel=1e-13, limit=200)
        total += abs(val)
    return total / FOUR_PI


def triangle_dblquad(fn, tri, epsrel=1e-11):
    """int_T fn(r') dS' via the barycentric map (smooth integrands only)."""
    V = np.asarray(tri, float)
    e1, e2 = V[1] - V[0], V[2] - V[0]
    jac = np.linalg.norm(np.cross(e1, e2))
    val, _ = integrate.dblquad(lambda v, u: fn(V[0] + u * e1 + v * e2), 0, 1, 0, lambda u: 1 - u,
                               epsabs=0, epsrel=epsrel)
    return val * jac


def single_layer_offplane(obs, tri):
    obs = np.asarray(obs, float)
    return triangle_dblquad(lambda r: 1.0 / np.linalg.norm(r - obs), tri) / FOUR_PI


def double_layer_offplane(obs, tri):
    """int_T n'.(r' - r) / (4 pi R^3) dS' by direct quadrature."""
    obs = np.asarray(obs, float)
    V = np.asarray(tri, float)
    n = np.cross(V[1] - V[0], V[2] - V[0])
    n /= np.linalg.norm(n)
    return triangle_dblquad(lambda r: np.dot(n, r - obs) / np.linalg.norm(r - obs) ** 3, V) / FOUR_PI
