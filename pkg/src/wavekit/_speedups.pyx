# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the integer and contouring kernels; see ``_purepy`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline long long _isqrt(long long n):
    cdef long long r = <long long> sqrt(<double> n)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


def two_square_pairs(H):
    """All (e, o) with e >= 0 even, o > 0 odd and e^2 + o^2 = H, sorted by e."""
    if H >= (1 << 62):
        raise OverflowError("H too large for the compiled kernel")
    cdef long long h = H
    cdef long long e = 0, rest, o
    out = []
    while e * e <= h:
        rest = h - e * e
        o = _isqrt(rest)
        if o * o == rest and (o & 1) == 1:
            out.append((int(e), int(o)))
        e += 2
    return out


def two_square_count_table(h_max):
    cdef long long hm = h_max
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(hm + 1, dtype=np.int64)
    cdef long long e = 0, o, e2
    while e * e <= hm:
        e2 = e * e
        o = 1
        while e2 + o * o <= hm:
            counts[e2 + o * o] += 1
            o += 2
        e += 2
    return counts


cdef inline void _edge_point(int edge, int i, int j, double v0, double v1, double v2, double v3,
                             double* pi, double* pj):
    if edge == 0:
        pi[0] = i + v0 / (v0 - v1); pj[0] = j
    elif edge == 1:
        pi[0] = i + 1; pj[0] = j + v1 / (v1 - v2)
    elif edge == 2:
        pi[0] = i + v3 / (v3 - v2); pj[0] = j + 1
    else:
        pi[0] = i; pj[0] = j + v0 / (v0 - v3)


# edge pairs per case; -1 marks unused slots, saddles resolved at run time
cdef int _PAIRS[16][4]
_PAIRS[0][:] = [-1, -1, -1, -1]
_PAIRS[1][:] = [0, 3, -1, -1]
_PAIRS[2][:] = [0, 1, -1, -1]
_PAIRS[3][:] = [1, 3, -1, -1]
_PAIRS[4][:] = [1, 2, -1, -1]
_PAIRS[5][:] = [-1, -1, -1, -1]
_PAIRS[6][:] = [0, 2, -1, -1]
_PAIRS[7][:] = [2, 3, -1, -1]
_PAIRS[8][:] = [2, 3, -1, -1]
_PAIRS[9][:] = [0, 2, -1, -1]
_PAIRS[10][:] = [-1, -1, -1, -1]
_PAIRS[11][:] = [1, 2, -1, -1]
_PAIRS[12][:] = [1, 3, -1, -1]
_PAIRS[13][:] = [0, 1, -1, -1]
_PAIRS[14][:] = [0, 3, -1, -1]
_PAIRS[15][:] = [-1, -1, -1, -1]


def marching_squares(field, double level):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] f = np.ascontiguousarray(field, dtype=np.float64)
    cdef Py_ssize_t ni = f.shape[0], nj = f.shape[1]
    cdef Py_ssize_t cap = 2 * (ni - 1) * (nj - 1) + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=3] segs = np.empty((cap, 2, 2), dtype=np.float64)
    cdef Py_ssize_t m = 0
    cdef int i, j, idx, k, npairs
    cdef double v0, v1, v2, v3, ai, aj, bi, bj
    cdef int pairs[4]
    for i in range(ni - 1):
        for j in range(nj - 1):
            v0 = f[i, j] - level
            v1 = f[i + 1, j] - level
            v2 = f[i + 1, j + 1] - level
            v3 = f[i, j + 1] - level
            idx = (v0 > 0) | ((v1 > 0) << 1) | ((v2 > 0) << 2) | ((v3 > 0) << 3)
            if idx == 0 or idx == 15:
                continue
            if idx == 5 or idx == 10:
                npairs = 2
                if (idx == 5) == (v0 + v1 + v2 + v3 > 0):
                    pairs[0] = 0; pairs[1] = 1; pairs[2] = 2; pairs[3] = 3
                else:
                    pairs[0] = 0; pairs[1] = 3; pairs[2] = 1; pairs[3] = 2
            else:
                npairs = 1
                pairs[0] = _PAIRS[idx][0]; pairs[1] = _PAIRS[idx][1]
            for k in range(npairs):
                _edge_point(pairs[2 * k], i, j, v0, v1, v2, v3, &ai, &aj)
                _edge_point(pairs[2 * k + 1], i, j, v0, v1, v2, v3, &bi, &bj)
                segs[m, 0, 0] = ai; segs[m, 0, 1] = aj
                segs[m, 1, 0] = bi; segs[m, 1, 1] = bj
                m += 1
    return segs[:m].copy()
