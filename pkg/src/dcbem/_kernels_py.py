"""Pure NumPy implementation of the flat-triangle integration kernels.

This is the reference/fallback path; ``_kernels.pyx`` mirrors it loop by loop.
"""

import numpy as np

INV_4PI = 1.0 / (4.0 * np.pi)
# edge terms with |p| below this fraction of the edge length are dropped (their limit is 0)
EDGE_TOL = 1e-14

# 12-point degree-6 symmetric rule (barycentric), all weights positive
_RULE = (
    (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
    (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
    (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
)


def _expand_rule():
    pts, wts = [], []
    for w, (a, b, c) in _RULE:
        perms = {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}
        for perm in sorted(perms):
            pts.append(perm)
            wts.append(w)
    return np.array(pts), np.array(wts)


QUAD_BARY, QUAD_WEIGHTS = _expand_rule()


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def solid_angle(rel):
    """Signed solid angle of triangles given corner positions relative to the
    observation point, ``rel[..., i, :] = v_i - r``. Positive when the point lies
    behind the triangle (opposite its normal)."""
    r0, r1, r2 = rel[..., 0, :], rel[..., 1, :], rel[..., 2, :]
    d0 = np.linalg.norm(r0, axis=-1)
    d1 = np.linalg.norm(r1, axis=-1)
    d2 = np.linalg.norm(r2, axis=-1)
    num = _dot(r0, np.cross(r1, r2))
    den = d0 * d1 * d2 + _dot(r0, r1) * d2 + _dot(r0, r2) * d1 + _dot(r1, r2) * d0
    return 2.0 * np.arctan2(num, den)


def single_layer_analytic(rel, normal):
    """Exact integral of G = 1/(4 pi R) over flat triangles (edge-sum formula)."""
    d = -_dot(normal, rel[..., 0, :])
    total = d * solid_angle(rel)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(3):
            a = rel[..., i, :]
            b = rel[..., (i + 1) % 3, :]
            e = b - a
            length = np.linalg.norm(e, axis=-1)
            s = e / length[..., None]
            m = np.cross(s, normal)
            p = _dot(a, m)
            sm = _dot(a, s)
            sp = _dot(b, s)
            rm = np.linalg.norm(a, axis=-1)
            rp = np.linalg.norm(b, axis=-1)
            keep = np.abs(p) > EDGE_TOL * length
            r0sq = p * p + d * d
            num = np.where(sp >= 0, rp + sp, r0sq / (rp - sp))
            den = np.where(sm >= 0, rm + sm, r0sq / (rm - sm))
            total = total + np.where(keep, p * np.log(np.where(keep, num / den, 1.0)), 0.0)
    return total * INV_4PI


def single_layer_quadrature(obs, corners, area):
    """12-point approximation of the same integral; broadcasting over leading axes."""
    pts = np.einsum("qk,...kj->...qj", QUAD_BARY, corners)
    dist = np.linalg.norm(pts - obs[..., None, :], axis=-1)
    return area * np.einsum("q,...q->...", QUAD_WEIGHTS, 1.0 / dist) * INV_4PI


def assemble(corners, centroids, normals, areas, max_edges, near_ratio, rows=None, block=64):
    """Return (L, M) with L[m, n] = A_m * int_n G(c_m), M[m, n] = A_m * solid_angle_n(c_m) / 4 pi.

    The self double-layer entry is exactly 0.
    """
    n = len(areas)
    rows = np.arange(n) if rows is None else np.asarray(rows)
    L = np.empty((len(rows), n))
    M = np.empty((len(rows), n))
    for start in range(0, len(rows), block):
        sel = rows[start : start + block]
        obs = centroids[sel]
        rel = corners[None, :, :, :] - obs[:, None, None, :]
        dist = np.linalg.norm(centroids[None, :, :] - obs[:, None, :], axis=-1)
        near = dist < near_ratio * max_edges[None, :]
        sl = np.empty(dist.shape)
        if near.any():
            ii, jj = np.nonzero(near)
            sl[ii, jj] = single_layer_analytic(rel[ii, jj], normals[jj])
        far = ~near
        if far.any():
            ii, jj = np.nonzero(far)
            sl[ii, jj] = single_layer_quadrature(obs[ii], corners[jj], areas[jj])
        dl = solid_angle(rel) * INV_4PI
        local = np.arange(len(sel))
        dl[local, sel] = 0.0
        L[start : start + len(sel)] = areas[sel, None] * sl
        M[start : start + len(sel)] = areas[sel, None] * dl
    return L, M
