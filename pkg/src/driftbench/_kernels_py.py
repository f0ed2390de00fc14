"""Pure-Python fallback for the coordinate-ascent sweep kernel.

Mirrors _kernels.pyx statement for statement: same visit order, same
floating-point association order, same tie rule, so both backends produce
bit-identical assignments.  The compiled extension is typically 30-80x
faster; this module exists so the package works without a C toolchain.
"""

from math import inf


def sweep(x_flat, row_id, z, nz, nvz, mrz, xlog, n, d, c, vmax):
    """One in-order pass over all samples, reassigning each to the state
    that maximizes the total-correlation-explained objective.

    Count arrays are updated in place.  Returns the number of samples that
    changed state.  Ties break toward the lowest state index.
    """
    x = x_flat.tolist()
    rid = row_id.tolist()
    zz = z.tolist()
    cnz = nz.tolist()
    cnvz = nvz.tolist()
    cmrz = mrz.tolist()
    xl = xlog.tolist()
    dm1 = float(d - 1)

    moves = 0
    for i in range(n):
        a = zz[i]
        r = rid[i]
        base = i * d

        cnz[a] -= 1
        cmrz[r * c + a] -= 1
        for j in range(d):
            cnvz[(j * vmax + x[base + j]) * c + a] -= 1

        best_s = 0
        best_score = -inf
        for s in range(c):
            col = 0.0
            for j in range(d):
                cnt = cnvz[(j * vmax + x[base + j]) * c + s]
                col += xl[cnt + 1] - xl[cnt]
            cz = cnz[s]
            cm = cmrz[r * c + s]
            score = col - dm1 * (xl[cz + 1] - xl[cz]) - (xl[cm + 1] - xl[cm])
            if score > best_score:
                best_score = score
                best_s = s

        cnz[best_s] += 1
        cmrz[r * c + best_s] += 1
        for j in range(d):
            cnvz[(j * vmax + x[base + j]) * c + best_s] += 1
        zz[i] = best_s
        if best_s != a:
            moves += 1

    z[:] = zz
    nz[:] = cnz
    nvz[:] = cnvz
    mrz[:] = cmrz
    return moves
