# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels; mirrors the API of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, fabs

cnp.import_array()

BACKEND = "compiled"

ctypedef cnp.int64_t idx_t


cdef inline double _dot(double* a, double* b) nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void _cross(double* a, double* b, double* out) nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double _face_terms(double* p0, double* p1, double* p2,
                               double* L, double* cot, double* ang) nogil:
    """Cotangents, angles and Laplacian contributions of one face.

    Fills ``L`` (9 values, three 3-vectors, one per face vertex), ``cot`` and
    ``ang`` (3 values each) and returns twice the face area.
    """
    cdef double e01[3]
    cdef double e02[3]
    cdef double e12[3]
    cdef double n[3]
    cdef double dbl, d0, d1, d2, w0, w1, w2
    cdef int k
    for k in range(3):
        e01[k] = p1[k] - p0[k]
        e02[k] = p2[k] - p0[k]
        e12[k] = p2[k] - p1[k]
    _cross(e01, e02, n)
    dbl = sqrt(_dot(n, n))
    d0 = _dot(e01, e02)
    d1 = -_dot(e01, e12)
    d2 = _dot(e02, e12)
    cot[0] = d0 / dbl
    cot[1] = d1 / dbl
    cot[2] = d2 / dbl
    if ang != NULL:
        ang[0] = atan2(dbl, d0)
        ang[1] = atan2(dbl, d1)
        ang[2] = atan2(dbl, d2)
    w0 = 0.5 * cot[0]
    w1 = 0.5 * cot[1]
    w2 = 0.5 * cot[2]
    for k in range(3):
        L[k] = w1 * (p2[k] - p0[k]) + w2 * (p1[k] - p0[k])
        L[3 + k] = w2 * (p0[k] - p1[k]) + w0 * (p2[k] - p1[k])
        L[6 + k] = w0 * (p1[k] - p2[k]) + w1 * (p0[k] - p2[k])
    return dbl


cdef inline double _det(double* a, double* b, double* c) nogil:
    cdef double n[3]
    _cross(b, c, n)
    return _dot(a, n)


def vertex_geometry(const double[:, ::1] pos, const idx_t[:, ::1] faces):
    cdef Py_ssize_t V = pos.shape[0], F = faces.shape[0], f
    cdef int s, k
    va_a = np.zeros(V)
    nsum_a = np.zeros((V, 3))
    lapx_a = np.zeros((V, 3))
    ang_a = np.zeros(V)
    cots_a = np.empty((F, 3))
    cdef double[::1] va = va_a
    cdef double[:, ::1] nsum = nsum_a
    cdef double[:, ::1] lapx = lapx_a
    cdef double[::1] angs = ang_a
    cdef double[:, ::1] cots = cots_a
    cdef double p[3][3]
    cdef double L[9]
    cdef double cot[3]
    cdef double ang[3]
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double dbl, third, min_area = np.inf
    cdef idx_t v
    with nogil:
        for f in range(F):
            for s in range(3):
                v = faces[f, s]
                for k in range(3):
                    p[s][k] = pos[v, k]
            dbl = _face_terms(p[0], p[1], p[2], L, cot, ang)
            for k in range(3):
                e1[k] = p[1][k] - p[0][k]
                e2[k] = p[2][k] - p[0][k]
            _cross(e1, e2, n)
            if 0.5 * dbl < min_area:
                min_area = 0.5 * dbl
            third = dbl / 6.0
            for s in range(3):
                v = faces[f, s]
                cots[f, s] = cot[s]
                va[v] += third
                angs[v] += ang[s]
                for k in range(3):
                    nsum[v, k] += n[k]
                    lapx[v, k] += L[3 * s + k]
    if F == 0:
        min_area = 0.0
    return va_a, nsum_a, lapx_a, ang_a, cots_a, float(min_area)


def _cot_laplacian_1d(const idx_t[:, ::1] faces, const double[:, ::1] cots,
                      const double[::1] u):
    cdef Py_ssize_t V = u.shape[0], F = faces.shape[0], f
    cdef int j
    cdef idx_t b, c
    cdef double d
    out_a = np.zeros(V)
    cdef double[::1] out = out_a
    with nogil:
        for f in range(F):
            for j in range(3):
                b = faces[f, (j + 1) % 3]
                c = faces[f, (j + 2) % 3]
                d = 0.5 * cots[f, j] * (u[c] - u[b])
                out[b] += d
                out[c] -= d
    return out_a


def _cot_laplacian_2d(const idx_t[:, ::1] faces, const double[:, ::1] cots,
                      const double[:, ::1] u):
    cdef Py_ssize_t V = u.shape[0], F = faces.shape[0], f
    cdef Py_ssize_t m = u.shape[1], k
    cdef int j
    cdef idx_t b, c
    cdef double w, d
    out_a = np.zeros((V, m))
    cdef double[:, ::1] out = out_a
    with nogil:
        for f in range(F):
            for j in range(3):
                b = faces[f, (j + 1) % 3]
                c = faces[f, (j + 2) % 3]
                w = 0.5 * cots[f, j]
                for k in range(m):
                    d = w * (u[c, k] - u[b, k])
                    out[b, k] += d
                    out[c, k] -= d
    return out_a


def cot_laplacian(faces, cots, u):
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim == 1:
        return _cot_laplacian_1d(faces, cots, u)
    return _cot_laplacian_2d(faces, cots, u)


def energy(const double[:, ::1] pos, const idx_t[:, ::1] faces, double lam):
    cdef Py_ssize_t V = pos.shape[0], F = faces.shape[0], f, v
    cdef int s, k
    va_a = np.zeros(V)
    lapx_a = np.zeros((V, 3))
    cdef double[::1] va = va_a
    cdef double[:, ::1] lapx = lapx_a
    cdef double p[3][3]
    cdef double L[9]
    cdef double cot[3]
    cdef double dbl, third, W = 0.0, det = 0.0, min_area = np.inf
    cdef idx_t u
    with nogil:
        for f in range(F):
            for s in range(3):
                u = faces[f, s]
                for k in range(3):
                    p[s][k] = pos[u, k]
            dbl = _face_terms(p[0], p[1], p[2], L, cot, NULL)
            if 0.5 * dbl < min_area:
                min_area = 0.5 * dbl
            det += _det(p[0], p[1], p[2])
            third = dbl / 6.0
            for s in range(3):
                u = faces[f, s]
                va[u] += third
                for k in range(3):
                    lapx[u, k] += L[3 * s + k]
        for v in range(V):
            W += (lapx[v, 0] * lapx[v, 0] + lapx[v, 1] * lapx[v, 1]
                  + lapx[v, 2] * lapx[v, 2]) / (4.0 * va[v])
    if F == 0:
        min_area = 0.0
    return float(W), float(det / 6.0), float(min_area)


def enclosed_volume(const double[:, ::1] pos, const idx_t[:, ::1] faces):
    cdef Py_ssize_t F = faces.shape[0], f
    cdef double det = 0.0
    with nogil:
        for f in range(F):
            det += _det(&pos[faces[f, 0], 0], &pos[faces[f, 1], 0], &pos[faces[f, 2], 0])
    return float(det / 6.0)


def fd_gradient(const double[:, ::1] pos, const idx_t[:, ::1] faces, double lam, double h):
    cdef Py_ssize_t V = pos.shape[0], F = faces.shape[0]
    cdef Py_ssize_t f, i, a, t, nt
    cdef int s, k, axis, sg, slot
    cdef idx_t u

    va_a, _, lapx_a, _, _, _ = vertex_geometry(pos, faces)
    cdef double[::1] va = va_a
    cdef double[:, ::1] lapx = lapx_a

    # vertex -> incident faces (CSR), in increasing face order
    flat = np.asarray(faces).ravel()
    order = np.argsort(flat, kind="stable")
    star_faces_a = (order // 3).astype(np.int64)
    star_ptr_a = np.zeros(V + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=V), out=star_ptr_a[1:])
    cdef idx_t[::1] star_faces = star_faces_a
    cdef idx_t[::1] star_ptr = star_ptr_a

    L_old_a = np.empty((F, 9))
    a_old_a = np.empty(F)
    det_old_a = np.empty(F)
    cdef double[:, ::1] L_old = L_old_a
    cdef double[::1] a_old = a_old_a
    cdef double[::1] det_old = det_old_a

    e_base_a = np.einsum("ij,ij->i", lapx_a, lapx_a) / (4.0 * va_a)
    cdef double[::1] e_base = e_base_a

    dL_a = np.zeros((V, 3))
    da_a = np.zeros(V)
    mark_a = np.zeros(V, dtype=np.int64)
    touched_a = np.empty(V, dtype=np.int64)
    cdef double[:, ::1] dL = dL_a
    cdef double[::1] da = da_a
    cdef idx_t[::1] mark = mark_a
    cdef idx_t[::1] touched = touched_a

    grad_a = np.zeros((V, 3))
    cdef double[:, ::1] grad = grad_a

    cdef double p[3][3]
    cdef double L[9]
    cdef double cot[3]
    cdef double dbl, ddet, dE, lx, ly, lz, ar
    cdef double dE_pm[2]

    with nogil:
        for f in range(F):
            for s in range(3):
                u = faces[f, s]
                for k in range(3):
                    p[s][k] = pos[u, k]
            dbl = _face_terms(p[0], p[1], p[2], L, cot, NULL)
            for k in range(9):
                L_old[f, k] = L[k]
            a_old[f] = dbl / 6.0
            det_old[f] = _det(p[0], p[1], p[2])

        for i in range(V):
            for axis in range(3):
                for sg in range(2):
                    nt = 0
                    ddet = 0.0
                    for a in range(star_ptr[i], star_ptr[i + 1]):
                        f = star_faces[a]
                        slot = 0
                        for s in range(3):
                            u = faces[f, s]
                            if u == i:
                                slot = s
                            for k in range(3):
                                p[s][k] = pos[u, k]
                        if sg == 0:
                            p[slot][axis] += h
                        else:
                            p[slot][axis] -= h
                        dbl = _face_terms(p[0], p[1], p[2], L, cot, NULL)
                        ddet += _det(p[0], p[1], p[2]) - det_old[f]
                        for s in range(3):
                            u = faces[f, s]
                            if mark[u] == 0:
                                mark[u] = 1
                                touched[nt] = u
                                nt += 1
                            for k in range(3):
                                dL[u, k] += L[3 * s + k] - L_old[f, 3 * s + k]
                            da[u] += dbl / 6.0 - a_old[f]
                    dE = lam * ddet / 6.0
                    for t in range(nt):
                        u = touched[t]
                        lx = lapx[u, 0] + dL[u, 0]
                        ly = lapx[u, 1] + dL[u, 1]
                        lz = lapx[u, 2] + dL[u, 2]
                        ar = va[u] + da[u]
                        dE += (lx * lx + ly * ly + lz * lz) / (4.0 * ar) - e_base[u]
                        dL[u, 0] = 0.0
                        dL[u, 1] = 0.0
                        dL[u, 2] = 0.0
                        da[u] = 0.0
                        mark[u] = 0
                    dE_pm[sg] = dE
                grad[i, axis] = (dE_pm[0] - dE_pm[1]) / (2.0 * h)
    return grad_a


cdef double _seg_disk_area(double ax, double ay, double bx, double by, double R) nogil:
    cdef double dx = bx - ax, dy = by - ay
    cdef double A = dx * dx + dy * dy
    cdef double B = ax * dx + ay * dy
    cdef double C = ax * ax + ay * ay - R * R
    cdef double R2 = R * R
    cdef double px[4]
    cdef double py[4]
    cdef int m = 1, j
    cdef double disc, sq, tt, mx, my, cr, total = 0.0
    px[0] = ax
    py[0] = ay
    if A > 0.0:
        disc = B * B - A * C
        if disc > 0.0:
            sq = sqrt(disc)
            tt = (-B - sq) / A
            if 0.0 < tt < 1.0:
                px[m] = ax + tt * dx
                py[m] = ay + tt * dy
                m += 1
            tt = (-B + sq) / A
            if 0.0 < tt < 1.0:
                px[m] = ax + tt * dx
                py[m] = ay + tt * dy
                m += 1
    px[m] = bx
    py[m] = by
    for j in range(m):
        mx = 0.5 * (px[j] + px[j + 1])
        my = 0.5 * (py[j] + py[j + 1])
        cr = px[j] * py[j + 1] - py[j] * px[j + 1]
        if mx * mx + my * my <= R2:
            total += 0.5 * cr
        else:
            total += 0.5 * R2 * atan2(cr, px[j] * px[j + 1] + py[j] * py[j + 1])
    return total


cdef double _triangle_ball_area(double* p0, double* p1, double* p2,
                                double* c, double r) nogil:
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double u[3]
    cdef double w[3]
    cdef double cp[3]
    cdef double q[3][2]
    cdef double dbl, d, rho, ln, s = 0.0
    cdef double* pts[3]
    cdef int k, j
    for k in range(3):
        e1[k] = p1[k] - p0[k]
        e2[k] = p2[k] - p0[k]
    _cross(e1, e2, n)
    dbl = sqrt(_dot(n, n))
    if dbl == 0.0:
        return 0.0
    for k in range(3):
        n[k] /= dbl
    d = (c[0] - p0[0]) * n[0] + (c[1] - p0[1]) * n[1] + (c[2] - p0[2]) * n[2]
    if fabs(d) >= r:
        return 0.0
    rho = sqrt(r * r - d * d)
    ln = sqrt(_dot(e1, e1))
    for k in range(3):
        u[k] = e1[k] / ln
        cp[k] = c[k] - d * n[k]
    _cross(n, u, w)
    pts[0] = p0
    pts[1] = p1
    pts[2] = p2
    for j in range(3):
        q[j][0] = (pts[j][0] - cp[0]) * u[0] + (pts[j][1] - cp[1]) * u[1] + (pts[j][2] - cp[2]) * u[2]
        q[j][1] = (pts[j][0] - cp[0]) * w[0] + (pts[j][1] - cp[1]) * w[1] + (pts[j][2] - cp[2]) * w[2]
    for j in range(3):
        s += _seg_disk_area(q[j][0], q[j][1], q[(j + 1) % 3][0], q[(j + 1) % 3][1], rho)
    return fabs(s)


def triangle_ball_area(p0, p1, p2, c, double r):
    cdef const double[::1] a = np.ascontiguousarray(p0, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(p1, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(p2, dtype=np.float64)
    cdef const double[::1] cc = np.ascontiguousarray(c, dtype=np.float64)
    return _triangle_ball_area(&a[0], &b[0], &d[0], &cc[0], r)


def clipped_areas(const double[:, ::1] pos, const idx_t[:, ::1] faces,
                  centers, radii):
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
    cdef const double[::1] R = np.ascontiguousarray(radii, dtype=np.float64).ravel()
    cdef Py_ssize_t F = faces.shape[0], nc = C.shape[0], nr = R.shape[0]
    cdef Py_ssize_t f, ci, ri
    cdef int s, k
    out_a = np.zeros((nc, nr))
    cdef double[:, ::1] out = out_a
    gb_a = np.empty((F, 5))
    cdef double[:, ::1] gb = gb_a
    cdef double p[3][3]
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double dmax, dd, dg, r, bnd
    with nogil:
        for f in range(F):
            for s in range(3):
                for k in range(3):
                    p[s][k] = pos[faces[f, s], k]
            for k in range(3):
                gb[f, k] = (p[0][k] + p[1][k] + p[2][k]) / 3.0
                e1[k] = p[1][k] - p[0][k]
                e2[k] = p[2][k] - p[0][k]
            bnd = 0.0
            for s in range(3):
                dd = ((p[s][0] - gb[f, 0]) ** 2 + (p[s][1] - gb[f, 1]) ** 2
                      + (p[s][2] - gb[f, 2]) ** 2)
                if dd > bnd:
                    bnd = dd
            gb[f, 3] = sqrt(bnd)
            _cross(e1, e2, n)
            gb[f, 4] = 0.5 * sqrt(_dot(n, n))
        for ci in range(nc):
            for f in range(F):
                dmax = 0.0
                for s in range(3):
                    dd = ((pos[faces[f, s], 0] - C[ci, 0]) ** 2
                          + (pos[faces[f, s], 1] - C[ci, 1]) ** 2
                          + (pos[faces[f, s], 2] - C[ci, 2]) ** 2)
                    if dd > dmax:
                        dmax = dd
                dmax = sqrt(dmax)
                dg = sqrt((gb[f, 0] - C[ci, 0]) ** 2 + (gb[f, 1] - C[ci, 1]) ** 2
                          + (gb[f, 2] - C[ci, 2]) ** 2)
                for ri in range(nr):
                    r = R[ri]
                    if dmax <= r:
                        out[ci, ri] += gb[f, 4]
                    elif dg - gb[f, 3] < r:
                        out[ci, ri] += _triangle_ball_area(
                            &pos[faces[f, 0], 0], &pos[faces[f, 1], 0],
                            &pos[faces[f, 2], 0], &C[ci, 0], r)
    return out_a


def max_pairwise_distance(const double[:, ::1] pos):
    cdef Py_ssize_t V = pos.shape[0], i, j
    cdef double best = 0.0, d, dx, dy, dz
    with nogil:
        for i in range(V):
            for j in range(i + 1, V):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                dz = pos[i, 2] - pos[j, 2]
                d = dx * dx + dy * dy + dz * dz
                if d > best:
                    best = d
    return float(sqrt(best))


def min_edge_length(const double[:, ::1] pos, const idx_t[:, ::1] edges):
    cdef Py_ssize_t E = edges.shape[0], e
    cdef double best = np.inf, d, dx, dy, dz
    with nogil:
        for e in range(E):
            dx = pos[edges[e, 1], 0] - pos[edges[e, 0], 0]
            dy = pos[edges[e, 1], 1] - pos[edges[e, 0], 1]
            dz = pos[edges[e, 1], 2] - pos[edges[e, 0], 2]
            d = dx * dx + dy * dy + dz * dz
            if d < best:
                best = d
    return float(sqrt(best))
