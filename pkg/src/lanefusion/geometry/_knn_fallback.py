"""NumPy k-NN fill used when the compiled kernel is unavailable.

Same neighbour order and the same floating-point operation sequence as the
Cython kernel, so both produce identical maps.
"""
from __future__ import annotations

import numpy as np

_CHUNK_ELEMS = 4_000_000


def knn_fill(channels: np.ndarray, known: np.ndarray, k: int, cell: int = 8):
    channels = np.ascontiguousarray(channels, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    nc, H, W = channels.shape
    N = H * W
    out = channels.copy()

    known_flat = np.flatnonzero(known.ravel())
    if len(known_flat) == 0:
        return np.zeros_like(out), True
    ky, kx = np.divmod(known_flat, W)
    kvals = channels.reshape(nc, N)[:, known_flat]

    blank_flat = np.flatnonzero(~known.ravel())
    m = min(k, len(known_flat))
    step = max(1, _CHUNK_ELEMS // len(known_flat))
    for start in range(0, len(blank_flat), step):
        pix = blank_flat[start:start + step]
        by, bx = np.divmod(pix, W)
        dy = by[:, None] - ky[None, :]
        dx = bx[:, None] - kx[None, :]
        keys = (dy * dy + dx * dx) * N + known_flat[None, :]
        if m < keys.shape[1]:
            part = np.argpartition(keys, m - 1, axis=1)[:, :m]
        else:
            part = np.broadcast_to(np.arange(keys.shape[1]), keys.shape)
        sel_keys = np.take_along_axis(keys, part, axis=1)
        order = np.argsort(sel_keys, axis=1)
        part = np.take_along_axis(part, order, axis=1)
        sel_keys = np.take_along_axis(sel_keys, order, axis=1)

        d2 = (sel_keys // N).astype(np.float64)
        dmin = np.sqrt(d2[:, 0])
        num = np.zeros((nc, len(pix)))
        den = np.zeros(len(pix))
        for i in range(m):
            ratio = dmin / np.sqrt(d2[:, i])
            num = num + ratio[None, :] * kvals[:, part[:, i]]
            den = den + ratio
        out.reshape(nc, N)[:, pix] = num / den[None, :]
    return out, False
