# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Only the renormalized chain sum lives here: it is the one place where a single
grid node needs ~1e5 scalar terms.  ``_kernels_py`` mirrors every function with
identical semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, fabs

cnp.import_array()


cdef inline double _cell(double r2, double dz, double qn, double qb,
                         double R, double c) noexcept nogil:
    # one lattice cell: nucleus at offset 0, uniform ball centred at offset c
    cdef double v = 0.0
    cdef double s
    if qn != 0.0:
        v -= qn / sqrt(r2 + dz * dz)
    if qb != 0.0:
        s = sqrt(r2 + (dz - c) * (dz - c))
        if s < R:
            v += qb * (3.0 * R * R - s * s) / (2.0 * R * R * R)
        else:
            v += qb / s
    return v


def chain_sum(double[::1] r, double[::1] z, double period, double nucleus_charge,
              double ball_charge, double ball_radius, double ball_offset,
              double log_coef, double tol, long n_max):
    """Renormalized lattice sum at each (r[p], z[p]).

    Partial sums run over |n| <= N with the cells n = +-N weighted 1/2, which
    removes the O(1/N) end error of a charged cell and leaves O(1/N^2).

    Returns ``(values, previous, n_used, converged)``; ``previous`` holds the
    iterate before the last doubling.
    """
    cdef Py_ssize_t npts = r.shape[0]
    cdef Py_ssize_t p
    cdef long k, N
    cdef double r2, zz, s, val, prev, new, edge
    cdef bint done
    out = np.empty(npts, dtype=np.float64)
    before = np.empty(npts, dtype=np.float64)
    used = np.empty(npts, dtype=np.int64)
    ok = np.zeros(npts, dtype=np.bool_)
    cdef double[::1] out_v = out
    cdef double[::1] before_v = before
    cdef long long[::1] used_v = used
    cdef cnp.npy_bool[::1] ok_v = ok

    with nogil:
        for p in range(npts):
            r2 = r[p] * r[p]
            zz = z[p]
            s = _cell(r2, zz, nucleus_charge, ball_charge, ball_radius, ball_offset)
            s += _cell(r2, zz - period, nucleus_charge, ball_charge, ball_radius, ball_offset)
            s += _cell(r2, zz + period, nucleus_charge, ball_charge, ball_radius, ball_offset)
            N = 1
            val = s
            prev = s
            done = False
            while N < n_max:
                for k in range(N + 1, 2 * N + 1):
                    s += (_cell(r2, zz - k * period, nucleus_charge, ball_charge,
                                ball_radius, ball_offset)
                          + _cell(r2, zz + k * period, nucleus_charge, ball_charge,
                                  ball_radius, ball_offset))
                N = 2 * N
                # trapezoid weight 1/2 on the two outermost cells
                edge = 0.5 * (_cell(r2, zz - N * period, nucleus_charge, ball_charge,
                                    ball_radius, ball_offset)
                              + _cell(r2, zz + N * period, nucleus_charge, ball_charge,
                                      ball_radius, ball_offset))
                new = s - edge + log_coef * log(<double>N)
                prev = val
                val = new
                if fabs(val - prev) < tol:
                    done = True
                    break
            out_v[p] = val
            before_v[p] = prev
            used_v[p] = N
            ok_v[p] = done
    return out, before, used, ok
