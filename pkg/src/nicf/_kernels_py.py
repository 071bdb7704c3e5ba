"""Pure-numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce bitwise identical map iterates.
"""
import numpy as np

FOLDED, ODD, EVEN, CONJUGATE, HURWITZ = 0, 1, 2, 3, 4

_SQRT5 = np.sqrt(5.0)
_G_SMALL = (_SQRT5 - 1.0) / 2.0
_G_SQ = (3.0 - _SQRT5) / 2.0
# relative tolerance that sends rounding ties of the Hurwitz digit upwards
TIE = 4.440892098500626e-16
# below this 1/|x| overflows; the image of any |x| < 2**-53 rounds to 0 anyway
TINY = 1.1125369292536007e-308

# rows of the (branch, target, node) block processed at once
_CHUNK = 64


def map_step(code, x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if code == FOLDED:
            u = 1.0 / x
            r = np.abs(u - np.floor(u + 0.5))
            zero = np.abs(x) < TINY
        elif code == ODD:
            u = 1.0 / np.abs(x)
            r = u - np.floor(u + 0.5)
            r = np.where(x < 0.0, -r, r)
            zero = np.abs(x) < TINY
        elif code == EVEN:
            u = 1.0 / np.abs(x)
            r = u - np.floor(u + 0.5)
            zero = np.abs(x) < TINY
        elif code == CONJUGATE:
            z = np.where(x <= 0.5, x, 1.0 - x)
            u = 1.0 / z
            r = u - np.floor(u)
            zero = (x <= 0.0) | (x >= 1.0) | ~np.isfinite(u)
        elif code == HURWITZ:
            u = 1.0 / x
            i = np.maximum(np.floor(u + _G_SQ + TIE * u), 2.0)
            d = u - i
            # exact images lie in [0, g**2] after a -1 sign and in [0, g] after +1
            r = np.where(d < 0.0, np.minimum(-d, _G_SQ), np.minimum(d, _G_SMALL))
            zero = np.abs(x) < TINY
        else:
            raise ValueError(f"unknown map code {code}")
    return np.where(zero, 0.0, r)


def iterate_map(code, x, n):
    y = np.array(x, dtype=np.float64, copy=True)
    for _ in range(n):
        y = map_step(code, y)
    return y


def barycentric_eval(nodes, bweights, values, x):
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, 4096):
        xs = flat[start:start + 4096]
        diff = xs[:, None] - nodes[None, :]
        exact = diff == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = bweights / diff
            res = (t @ values) / t.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            res[hit] = values[exact[hit].argmax(axis=1)]
        out[start:start + 4096] = res
    return out.reshape(x.shape)


def accumulate_branches(nodes, bweights, points, weights, out):
    """Add ``sum_k weights[k, i] * l_j(points[k, i])`` into ``out[i, j]``.

    ``l_j`` is the j-th Lagrange basis polynomial on ``nodes`` in barycentric
    form.
    """
    n_branch = points.shape[0]
    for start in range(0, n_branch, _CHUNK):
        p = points[start:start + _CHUNK]
        w = weights[start:start + _CHUNK]
        diff = p[:, :, None] - nodes[None, None, :]
        exact = diff == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = bweights / diff
            basis = t / t.sum(axis=2, keepdims=True)
        hit = exact.any(axis=2)
        if hit.any():
            basis[hit] = exact[hit].astype(np.float64)
        out += np.einsum("ki,kij->ij", w, basis)
    return out
