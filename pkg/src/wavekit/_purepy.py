"""Pure-Python reference versions of the compiled kernels in ``_speedups.pyx``.

The signatures and return types match exactly; ``_kernels`` picks one of the two at import.
"""
from __future__ import annotations

import math

import numpy as np


def two_square_pairs(H: int) -> list[tuple[int, int]]:
    """All (e, o) with e >= 0 even, o > 0 odd and e^2 + o^2 = H, sorted by e."""
    out = []
    e = 0
    while e * e <= H:
        rest = H - e * e
        o = math.isqrt(rest)
        if o * o == rest and o % 2 == 1:
            out.append((e, o))
        e += 2
    return out


def two_square_count_table(h_max: int) -> np.ndarray:
    """counts[H] = number of (e, o) as above, for every H <= h_max (even H stay 0)."""
    counts = np.zeros(h_max + 1, dtype=np.int64)
    e = 0
    while e * e <= h_max:
        o = 1
        e2 = e * e
        while e2 + o * o <= h_max:
            counts[e2 + o * o] += 1
            o += 2
        e += 2
    return counts


def marching_squares(field, level: float) -> np.ndarray:
    """Contour segments of ``field`` at ``level``.

    Returns an (m, 2, 2) array of segment endpoints in fractional index coordinates (i, j).
    Saddle cells are disambiguated by the cell-centre average.
    """
    f = np.asarray(field, dtype=float)
    ni, nj = f.shape
    segs = []
    for i in range(ni - 1):
        for j in range(nj - 1):
            v0 = f[i, j] - level
            v1 = f[i + 1, j] - level
            v2 = f[i + 1, j + 1] - level
            v3 = f[i, j + 1] - level
            idx = (v0 > 0) | ((v1 > 0) << 1) | ((v2 > 0) << 2) | ((v3 > 0) << 3)
            if idx == 0 or idx == 15:
                continue
            # edge crossing points: 0 bottom (v0-v1), 1 right (v1-v2), 2 top (v3-v2), 3 left (v0-v3)
            pts = [None, None, None, None]
            if (v0 > 0) != (v1 > 0):
                pts[0] = (i + v0 / (v0 - v1), float(j))
            if (v1 > 0) != (v2 > 0):
                pts[1] = (float(i + 1), j + v1 / (v1 - v2))
            if (v3 > 0) != (v2 > 0):
                pts[2] = (i + v3 / (v3 - v2), float(j + 1))
            if (v0 > 0) != (v3 > 0):
                pts[3] = (float(i), j + v0 / (v0 - v3))
            for a, b in _cell_pairs(idx, v0 + v1 + v2 + v3):
                segs.append((pts[a], pts[b]))
    if not segs:
        return np.zeros((0, 2, 2))
    return np.asarray(segs, dtype=float)


def _cell_pairs(idx: int, centre_sum: float):
    if idx in (5, 10):
        centre_pos = centre_sum > 0
        # the corners on the opposite side of the centre get cut off individually
        if idx == 5:  # v0 and v2 above
            return ((0, 1), (2, 3)) if centre_pos else ((0, 3), (1, 2))
        return ((0, 3), (1, 2)) if centre_pos else ((0, 1), (2, 3))
    return (_SINGLE_PAIR[idx],)


# for non-saddle cases exactly two edges are crossed
_SINGLE_PAIR = {}
for _idx in range(1, 15):
    if _idx in (5, 10):
        continue
    _bits = [(_idx >> k) & 1 for k in range(4)]
    _edges = [e for e, (p, q) in enumerate(((0, 1), (1, 2), (3, 2), (0, 3))) if _bits[p] != _bits[q]]
    _SINGLE_PAIR[_idx] = tuple(_edges)
del _idx, _bits, _edges
