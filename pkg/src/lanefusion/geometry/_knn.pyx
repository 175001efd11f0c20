# cython: language_level=3
"""Compiled k-NN fill for sparse modal maps (uniform grid bucketing)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline void _insert(i64 key, i64* best, int* count, int k) noexcept nogil:
    # keep best[0:count] sorted ascending, at most k entries
    cdef int j
    if count[0] == k:
        if key >= best[k - 1]:
            return
        j = k - 1
    else:
        j = count[0]
        count[0] += 1
    while j > 0 and best[j - 1] > key:
        best[j] = best[j - 1]
        j -= 1
    best[j] = key


def knn_fill(double[:, :, ::1] channels, cnp.uint8_t[:, ::1] known, int k, int cell=8):
    """Fill every blank pixel with the inverse-distance mean of its k nearest known pixels.

    Neighbours are ordered by (squared distance, raster index). Returns a new
    array; known pixels are copied unchanged.
    """
    cdef Py_ssize_t nc = channels.shape[0]
    cdef Py_ssize_t H = channels.shape[1]
    cdef Py_ssize_t W = channels.shape[2]
    cdef i64 N = H * W
    out_arr = np.array(channels, dtype=np.float64, copy=True)
    cdef double[:, :, ::1] out = out_arr

    cdef Py_ssize_t ncy = (H + cell - 1) // cell
    cdef Py_ssize_t ncx = (W + cell - 1) // cell
    counts_arr = np.zeros(ncy * ncx + 1, dtype=np.int64)
    cdef i64[::1] starts = counts_arr
    cdef Py_ssize_t y, x, c, i
    cdef i64 nknown = 0
    for y in range(H):
        for x in range(W):
            if known[y, x]:
                starts[(y // cell) * ncx + x // cell + 1] += 1
                nknown += 1
    if nknown == 0:
        return np.zeros_like(out_arr), True
    for i in range(ncy * ncx):
        starts[i + 1] += starts[i]
    members_arr = np.empty(nknown, dtype=np.int64)
    cdef i64[::1] members = members_arr
    fill_arr = counts_arr[:-1].copy()
    cdef i64[::1] fillpos = fill_arr
    cdef Py_ssize_t cidx
    for y in range(H):
        for x in range(W):
            if known[y, x]:
                cidx = (y // cell) * ncx + x // cell
                members[fillpos[cidx]] = y * W + x
                fillpos[cidx] += 1

    best_arr = np.empty(max(k, 1), dtype=np.int64)
    cdef i64[::1] best = best_arr
    cdef int count
    cdef Py_ssize_t r, cy, cx, gy, gx, y0, y1, x0, x1, m
    cdef i64 pix, dy, dx, d2, key, bound, b_row, b_col, d2_0
    cdef double dmin, ratio, den, num
    cdef Py_ssize_t rmax = ncy if ncy > ncx else ncx

    with nogil:
        for y in range(H):
            for x in range(W):
                if known[y, x]:
                    continue
                count = 0
                cy = y // cell
                cx = x // cell
                r = 0
                while True:
                    y0 = cy - r
                    y1 = cy + r
                    x0 = cx - r
                    x1 = cx + r
                    for gy in range(y0, y1 + 1):
                        if gy < 0 or gy >= ncy:
                            continue
                        for gx in range(x0, x1 + 1):
                            if gx < 0 or gx >= ncx:
                                continue
                            # only the ring at Chebyshev distance r
                            if r > 0 and gy != y0 and gy != y1 and gx != x0 and gx != x1:
                                continue
                            cidx = gy * ncx + gx
                            for m in range(starts[cidx], starts[cidx + 1]):
                                pix = members[m]
                                dy = pix // W - y
                                dx = pix % W - x
                                d2 = dy * dy + dx * dx
                                key = d2 * N + pix
                                _insert(key, &best[0], &count, k)
                    if r >= rmax:
                        break
                    # any pixel outside the searched block is at least `bound` away
                    b_row = y - (y0 * cell - 1)
                    if (y1 + 1) * cell - y < b_row:
                        b_row = (y1 + 1) * cell - y
                    b_col = x - (x0 * cell - 1)
                    if (x1 + 1) * cell - x < b_col:
                        b_col = (x1 + 1) * cell - x
                    bound = b_row if b_row < b_col else b_col
                    if count == k and best[k - 1] // N < bound * bound:
                        break
                    r += 1

                d2_0 = best[0] // N
                dmin = sqrt(<double>d2_0)
                for c in range(nc):
                    num = 0.0
                    den = 0.0
                    for i in range(count):
                        d2 = best[i] // N
                        pix = best[i] % N
                        ratio = dmin / sqrt(<double>d2)
                        num = num + ratio * channels[c, pix // W, pix % W]
                        den = den + ratio
                    out[c, y, x] = num / den
    return out_arr, False
