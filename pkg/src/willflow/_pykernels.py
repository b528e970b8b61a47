"""Vectorized numpy implementations of the numerical kernels.

This module is the fallback used when the compiled ``_ckernels`` extension is
not available, and the reference the extension is tested against.  Both
modules expose the same functions with the same argument conventions:
``pos`` is a C-contiguous float64 (V, 3) array and ``faces`` an int64 (F, 3)
array.  All reductions run in a fixed order, so results are reproducible.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _face_frame(pos, faces):
    p0 = pos[faces[:, 0]]
    p1 = pos[faces[:, 1]]
    p2 = pos[faces[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    return p0, p1, p2, n


def _corner_cots(p0, p1, p2, dbl_area):
    # cot of the interior angle at each corner; dbl_area = |(p1-p0) x (p2-p0)|
    cots = np.empty((len(p0), 3))
    angles = np.empty((len(p0), 3))
    for j, (a, b, c) in enumerate(((p0, p1, p2), (p1, p2, p0), (p2, p0, p1))):
        d = np.einsum("ij,ij->i", b - a, c - a)
        cots[:, j] = d / dbl_area
        angles[:, j] = np.arctan2(dbl_area, d)
    return cots, angles


def vertex_geometry(pos, faces):
    """Per-vertex accumulations needed by every curvature operator.

    Returns ``(va, nsum, lapx, angle_sum, cots, min_area)``: barycentric vertex
    areas, the sum of incident face normals weighted by twice the face area,
    the unnormalized cotangent Laplacian of the positions, the sum of interior
    angles at each vertex, per-corner cotangents (F, 3) and the smallest face
    area.
    """
    V = len(pos)
    p0, p1, p2, n = _face_frame(pos, faces)
    dbl = np.linalg.norm(n, axis=1)
    area = 0.5 * dbl
    cots, angles = _corner_cots(p0, p1, p2, dbl)

    flat = faces.ravel()
    va = np.bincount(flat, np.repeat(area / 3.0, 3), V)
    nsum = np.stack([np.bincount(flat, np.repeat(n[:, k], 3), V) for k in range(3)], axis=1)
    angle_sum = np.bincount(flat, angles.ravel(), V)
    lapx = cot_laplacian(faces, cots, pos)
    return va, nsum, lapx, angle_sum, cots, float(area.min()) if len(area) else 0.0


def cot_laplacian(faces, cots, u):
    """Unnormalized cotangent Laplacian: sum over edges of w_vw (u_w - u_v)."""
    u = np.asarray(u, dtype=np.float64)
    V = len(u)
    scalar = u.ndim == 1
    uu = u[:, None] if scalar else u
    out = np.zeros_like(uu)
    for j in range(3):
        # corner j is opposite the edge (j+1, j+2)
        b = faces[:, (j + 1) % 3]
        c = faces[:, (j + 2) % 3]
        w = 0.5 * cots[:, j]
        d = w[:, None] * (uu[c] - uu[b])
        for k in range(uu.shape[1]):
            out[:, k] += np.bincount(b, d[:, k], V) - np.bincount(c, d[:, k], V)
    return out[:, 0] if scalar else out


def energy(pos, faces, lam):
    """Return ``(willmore, volume, min_face_area)`` of the discrete surface."""
    va, _, lapx, _, _, min_area = vertex_geometry(pos, faces)
    W = float(np.sum(np.einsum("ij,ij->i", lapx, lapx) / (4.0 * va)))
    vol = enclosed_volume(pos, faces)
    return W, vol, min_area


def enclosed_volume(pos, faces):
    p0 = pos[faces[:, 0]]
    p1 = pos[faces[:, 1]]
    p2 = pos[faces[:, 2]]
    return float(np.sum(np.einsum("ij,ij->i", p0, np.cross(p1, p2)))) / 6.0


def _face_contributions(p0, p1, p2):
    """Contributions of a face to (lapx, va) of its three vertices."""
    n = np.cross(p1 - p0, p2 - p0)
    dbl = np.linalg.norm(n, axis=1)
    cots, _ = _corner_cots(p0, p1, p2, dbl)
    w0, w1, w2 = (0.5 * cots[:, j, None] for j in range(3))
    # corner 0 weights edge (1,2), corner 1 edge (2,0), corner 2 edge (0,1)
    L0 = w1 * (p2 - p0) + w2 * (p1 - p0)
    L1 = w2 * (p0 - p1) + w0 * (p2 - p1)
    L2 = w0 * (p1 - p2) + w1 * (p0 - p2)
    a3 = dbl / 6.0
    det = np.einsum("ij,ij->i", p0, np.cross(p1, p2))
    return (L0, L1, L2), a3, det


def fd_gradient(pos, faces, lam, h):
    """Central-difference Euclidean gradient of ``W + lam * vol``.

    Perturbing one vertex only changes the Laplacian and area of its closed
    one-ring, so every difference is accumulated locally instead of
    re-evaluating the global energy.
    """
    V = len(pos)
    F = len(faces)
    va, _, lapx, _, _, _ = vertex_geometry(pos, faces)
    e_base = np.einsum("ij,ij->i", lapx, lapx) / (4.0 * va)

    # pair (perturbed vertex i, affected vertex v) for each of the 9 (corner, slot) combos
    owner = np.repeat(faces, 3, axis=1).reshape(F, 3, 3)  # owner[f, j, s] = faces[f, j]
    target = np.tile(faces, (1, 3)).reshape(F, 3, 3)  # target[f, j, s] = faces[f, s]
    keys = (owner * V + target).ravel()
    uniq, inverse = np.unique(keys, return_inverse=True)
    pair_i = uniq // V
    pair_v = uniq % V
    inverse = inverse.reshape(F, 3, 3)
    P = len(uniq)

    p = [pos[faces[:, s]] for s in range(3)]
    L_old, a_old, det_old = _face_contributions(*p)

    grad = np.zeros((V, 3))
    for k in range(3):
        dE = []
        for sign in (1.0, -1.0):
            acc_L = np.zeros((P, 3))
            acc_a = np.zeros(P)
            acc_det = np.zeros(V)
            # perturb the vertex sitting in slot j of every face at once; each
            # face sees one perturbed vertex, and pairs keep owners apart
            for j in range(3):
                q = [x.copy() for x in p]
                q[j][:, k] += sign * h
                L_new, a_new, det_new = _face_contributions(*q)
                for s in range(3):
                    idx = inverse[:, j, s]
                    diff = L_new[s] - L_old[s]
                    for c in range(3):
                        acc_L[:, c] += np.bincount(idx, diff[:, c], P)
                    acc_a += np.bincount(idx, a_new - a_old, P)
                acc_det += np.bincount(faces[:, j], det_new - det_old, V)
            Lp = lapx[pair_v] + acc_L
            ap = va[pair_v] + acc_a
            e_new = np.einsum("ij,ij->i", Lp, Lp) / (4.0 * ap)
            dE_i = np.bincount(pair_i, e_new - e_base[pair_v], V) + lam * acc_det / 6.0
            dE.append(dE_i)
        grad[:, k] = (dE[0] - dE[1]) / (2.0 * h)
    return grad


def _seg_disk_area(ax, ay, bx, by, R):
    """Signed area of disk(0, R) intersected with triangle (0, a, b)."""
    dx, dy = bx - ax, by - ay
    A = dx * dx + dy * dy
    B = ax * dx + ay * dy
    C = ax * ax + ay * ay - R * R
    pts = [(ax, ay)]
    if A > 0.0:
        disc = B * B - A * C
        if disc > 0.0:
            sq = np.sqrt(disc)
            for t in ((-B - sq) / A, (-B + sq) / A):
                if 0.0 < t < 1.0:
                    pts.append((ax + t * dx, ay + t * dy))
    pts.append((bx, by))
    total = 0.0
    R2 = R * R
    for (px, py), (qx, qy) in zip(pts[:-1], pts[1:]):
        mx, my = 0.5 * (px + qx), 0.5 * (py + qy)
        cr = px * qy - py * qx
        if mx * mx + my * my <= R2:
            total += 0.5 * cr
        else:
            total += 0.5 * R2 * np.arctan2(cr, px * qx + py * qy)
    return total


def triangle_ball_area(p0, p1, p2, c, r):
    """Exact area of the planar triangle (p0, p1, p2) inside the ball B_r(c)."""
    p0, p1, p2, c = (np.asarray(x, dtype=np.float64) for x in (p0, p1, p2, c))
    e1 = p1 - p0
    n = np.cross(e1, p2 - p0)
    dbl = np.linalg.norm(n)
    if dbl == 0.0:
        return 0.0
    n = n / dbl
    d = float(np.dot(c - p0, n))
    if abs(d) >= r:
        return 0.0
    rho = np.sqrt(r * r - d * d)
    u = e1 / np.linalg.norm(e1)
    w = np.cross(n, u)
    cp = c - d * n
    q = [(float(np.dot(p - cp, u)), float(np.dot(p - cp, w))) for p in (p0, p1, p2)]
    s = 0.0
    for i in range(3):
        (ax, ay), (bx, by) = q[i], q[(i + 1) % 3]
        s += _seg_disk_area(ax, ay, bx, by, rho)
    return abs(s)


def clipped_areas(pos, faces, centers, radii):
    """Surface area inside ``B_r(x)`` for every center ``x`` and radius ``r``.

    Returns a (len(centers), len(radii)) array.  Faces entirely inside the
    ball count in full, faces whose bounding sphere misses it are skipped,
    and the rest are clipped exactly in their plane.
    """
    p0, p1, p2, n = _face_frame(pos, faces)
    area = 0.5 * np.linalg.norm(n, axis=1)
    g = (p0 + p1 + p2) / 3.0
    bound = np.sqrt(
        np.max(
            np.stack([np.sum((p - g) ** 2, axis=1) for p in (p0, p1, p2)], axis=1), axis=1
        )
    )
    out = np.zeros((len(centers), len(radii)))
    for ci, c in enumerate(np.asarray(centers, dtype=np.float64)):
        dmax = np.sqrt(
            np.max(np.stack([np.sum((p - c) ** 2, axis=1) for p in (p0, p1, p2)], axis=1), axis=1)
        )
        dg = np.sqrt(np.sum((g - c) ** 2, axis=1))
        for ri, r in enumerate(radii):
            inside = dmax <= r
            partial = ~inside & (dg - bound < r)
            total = float(np.sum(area[inside]))
            for f in np.flatnonzero(partial):
                total += triangle_ball_area(p0[f], p1[f], p2[f], c, r)
            out[ci, ri] = total
    return out


def max_pairwise_distance(pos):
    best = 0.0
    chunk = 512
    for lo in range(0, len(pos), chunk):
        block = pos[lo : lo + chunk]
        d2 = np.sum((block[:, None, :] - pos[None, :, :]) ** 2, axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def min_edge_length(pos, edges):
    d = pos[edges[:, 1]] - pos[edges[:, 0]]
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", d, d))))
