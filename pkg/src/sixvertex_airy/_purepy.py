"""Numpy implementations of the hot kernels, used when the compiled module is unavailable."""

from __future__ import annotations

import numpy as np


def sweep_columns(U: np.ndarray, b1: float, b2: float, horiz: np.ndarray, exits: np.ndarray, record: np.ndarray) -> None:
    """Advance a batch of six-vertex samples through K columns in place.

    ``U`` has shape (samples, K, rows) of uniforms on [0, 1).  A lone
    horizontal arrow continues right when U < b2, a lone vertical arrow
    continues up when U < b1.  ``horiz`` (samples, rows) holds the occupancy
    of the horizontal edges entering the next column, ``exits`` the running
    number of arrows that left through the top, and ``record[s, x]``
    receives ``exits[s]`` after column x.
    """
    S, K, M = U.shape
    h_all = horiz.astype(bool)
    for x in range(K):
        carry = np.zeros(S, dtype=bool)
        for y in range(M):
            h = h_all[:, y]
            u = U[:, x, y]
            turn_up = h & ~carry & (u >= b2)
            turn_right = carry & ~h & (u >= b1)
            h_all[:, y] = (h & ~turn_up) | turn_right
            carry = (carry & ~turn_right) | turn_up
        exits += carry
        record[:, x] = exits
    horiz[:] = h_all


def _block_det(C: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if rows.shape[1] == 0:
        return np.ones(rows.shape[0], dtype=complex)
    return np.linalg.det(C[rows[:, :, None], cols[:, None, :]])


def direct_term_sum(W1, C1, W2, C2, Pz, Pw, Pwz, Pzw, N1: int, N2: int) -> complex:
    """Sum over every node tuple of det C1 prod W1 det C2 prod W2 prod(cross).

    Rows of W1, C1 index z, columns w; rows of W2, C2 index zhat, columns
    what.  The cross factor for z_k, w_l, zhat_p, what_q is
    Pz[p, k] Pw[q, l] / (Pwz[q, k] Pzw[p, l]).
    """
    n = W1.shape[0]
    dim = 2 * (N1 + N2)
    total = 0j
    count = n**dim
    chunk = 1 << 16
    for lo in range(0, count, chunk):
        flat = np.arange(lo, min(count, lo + chunk))
        idx = np.stack(np.unravel_index(flat, (n,) * dim), axis=1) if dim else np.zeros((1, 0), dtype=int)
        k, l = idx[:, :N1], idx[:, N1 : 2 * N1]
        p, q = idx[:, 2 * N1 : 2 * N1 + N2], idx[:, 2 * N1 + N2 :]
        val = np.prod(W1[k, l], axis=1) * _block_det(C1, k, l)
        val = val * np.prod(W2[p, q], axis=1) * _block_det(C2, p, q)
        for i in range(N1):
            for j in range(N2):
                val = val * Pz[p[:, j], k[:, i]] * Pw[q[:, j], l[:, i]] / (Pwz[q[:, j], k[:, i]] * Pzw[p[:, j], l[:, i]])
        total += np.sum(val)
    return complex(total)
