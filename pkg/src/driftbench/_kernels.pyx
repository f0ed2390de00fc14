# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-ascent sweep kernel.

Keep in lockstep with _kernels_py.sweep: identical visit order, identical
floating-point association order, identical tie rule.  Compiled with
-ffp-contract=off so results match the Python fallback bit for bit.
"""


from libc.math cimport INFINITY


def sweep(int[::1] x_flat, int[::1] row_id, int[::1] z,
          long long[::1] nz, long long[::1] nvz, long long[::1] mrz,
          double[::1] xlog, Py_ssize_t n, Py_ssize_t d, Py_ssize_t c,
          Py_ssize_t vmax):
    """One in-order pass over all samples; see the Python twin for docs."""
    cdef Py_ssize_t i, j, s, base, a, r, best_s
    cdef long long cnt, cz, cm
    cdef double col, score, best_score, dm1
    cdef int moves = 0

    dm1 = <double> (d - 1)

    for i in range(n):
        a = z[i]
        r = row_id[i]
        base = i * d

        nz[a] -= 1
        mrz[r * c + a] -= 1
        for j in range(d):
            nvz[(j * vmax + x_flat[base + j]) * c + a] -= 1

        best_s = 0
        best_score = -INFINITY
        for s in range(c):
            col = 0.0
            for j in range(d):
                cnt = nvz[(j * vmax + x_flat[base + j]) * c + s]
                col += xlog[cnt + 1] - xlog[cnt]
            cz = nz[s]
            cm = mrz[r * c + s]
            score = col - dm1 * (xlog[cz + 1] - xlog[cz]) - (xlog[cm + 1] - xlog[cm])
            if score > best_score:
                best_score = score
                best_s = s

        nz[best_s] += 1
        mrz[r * c + best_s] += 1
        for j in range(d):
            nvz[(j * vmax + x_flat[base + j]) * c + best_s] += 1
        z[i] = <int> best_s
        if best_s != a:
            moves += 1

    return moves
