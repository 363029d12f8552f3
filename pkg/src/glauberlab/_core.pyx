# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the triple-sum kernels in ``_core_py``.

Same signatures, same accumulator layout; per-block sums are kept in local
scalars and flushed once per batch row, which matches the numpy version's
matmul accumulation order closely enough that the two backends agree to the
1e-10-scale tolerances used by the identity checks.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def boch1_block(
    cnp.int64_t[::1] i,
    cnp.int64_t[::1] jb,
    cnp.int64_t[::1] jc,
    cnp.int64_t[::1] jd,
    double[::1] w,
    double[:, ::1] F,
    double[:, ::1] G,
    double[:, ::1] acc,
):
    """First-identity terms: acc[:, :] += [lhs, rhs, sum w|lhs|, sum w|rhs|]."""
    cdef Py_ssize_t B = F.shape[0]
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t b, t
    cdef double fa, fb, fc, fd, ga, gb, gc, gd, tl, tr, wt
    cdef double s_l, s_r, s_al, s_ar
    for b in range(B):
        s_l = s_r = s_al = s_ar = 0.0
        for t in range(n):
            wt = w[t]
            fa = F[b, i[t]]
            fb = F[b, jb[t]]
            fc = F[b, jc[t]]
            fd = F[b, jd[t]]
            ga = G[b, i[t]]
            gb = G[b, jb[t]]
            gc = G[b, jc[t]]
            gd = G[b, jd[t]]
            tl = (fc - fa) * (gb - ga)
            tr = 0.25 * (fd - fc - fb + fa) * (gd - gc - gb + ga)
            s_l += wt * tl
            s_r += wt * tr
            s_al += wt * (tl if tl >= 0.0 else -tl)
            s_ar += wt * (tr if tr >= 0.0 else -tr)
        acc[b, 0] += s_l
        acc[b, 1] += s_r
        acc[b, 2] += s_al
        acc[b, 3] += s_ar


def boch2_block(
    cnp.int64_t[::1] i,
    cnp.int64_t[::1] jb,
    cnp.int64_t[::1] jc,
    cnp.int64_t[::1] jd,
    double[::1] w,
    double[:, ::1] F,
    double[:, ::1] acc,
):
    """Second-identity terms for positive F: acc rows [lhs, rhs, |lhs|, |rhs|]."""
    cdef Py_ssize_t B = F.shape[0]
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t b, t
    cdef double fa, fb, fc, fd, tl, tr, u, v, wt
    cdef double s_l, s_r, s_al, s_ar
    for b in range(B):
        s_l = s_r = s_al = s_ar = 0.0
        for t in range(n):
            wt = w[t]
            fa = F[b, i[t]]
            fb = F[b, jb[t]]
            fc = F[b, jc[t]]
            fd = F[b, jd[t]]
            tl = (fc - fa) * (fb - fa) / fa
            u = (fd - fc) / fd - (fb - fa) / fb
            v = (fd - fc) * (fd - fc) / (fc * fd) - (fb - fa) * (fb - fa) / (fa * fb)
            tr = 0.25 * (u * (fd - fc - fb + fa) - v * (fc - fa))
            s_l += wt * tl
            s_r += wt * tr
            s_al += wt * (tl if tl >= 0.0 else -tl)
            s_ar += wt * (tr if tr >= 0.0 else -tr)
        acc[b, 0] += s_l
        acc[b, 1] += s_r
        acc[b, 2] += s_al
        acc[b, 3] += s_ar


def gamma_block(
    cnp.int64_t[::1] i,
    cnp.int64_t[::1] jb,
    cnp.int64_t[::1] jc,
    double[::1] w,
    double[:, ::1] F,
    double[:, ::1] LOGF,
    double[:, ::1] acc,
):
    """Quadratic-entropy terms: acc[:, :] += [value, sum w(|t1|+|t2|)]."""
    cdef Py_ssize_t B = F.shape[0]
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t b, t
    cdef double fa, fb, fc, t1, t2, wt
    cdef double s_v, s_a
    for b in range(B):
        s_v = 0.0
        s_a = 0.0
        for t in range(n):
            wt = w[t]
            fa = F[b, i[t]]
            fb = F[b, jb[t]]
            fc = F[b, jc[t]]
            t1 = (fc - fa) * (LOGF[b, jb[t]] - LOGF[b, i[t]])
            t2 = (fc - fa) * (fb - fa) / fa
            s_v += wt * (t1 + t2)
            s_a += wt * ((t1 if t1 >= 0.0 else -t1) + (t2 if t2 >= 0.0 else -t2))
        acc[b, 0] += s_v
        acc[b, 1] += s_a
