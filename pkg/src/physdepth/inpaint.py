"""Fast-marching (Telea) inpainting of scalar rasters.

Unknown pixels are visited in increasing order of their distance ``T`` to
the known region, obtained from a first-order upwind Eikonal solve. Each
pixel is filled when it is popped from the narrow band, from the already
finalized pixels inside a disk of the given radius: every such neighbor
``q`` contributes its first-order estimate ``I(q) + grad I(q) . (p - q)``
with weight ``dir * dst * lev`` (direction to the level-set normal, inverse
squared distance, level-set proximity). The result is clamped to the value
range of the contributing neighbors, so filled values never leave the range
of the known data.

Heap ties are broken by row-major pixel index, which makes the march
deterministic.
"""

import heapq

import numba
import numpy as np

from .exceptions import EmptyPrior, InvalidInput

_KNOWN = 0
_BAND = 1
_INSIDE = 2
_INF = 1e12


@numba.njit(cache=True)
def _solve_eikonal(T, flag, i, j):
    H, W = T.shape
    a = _INF
    b = _INF
    if j > 0 and flag[i, j - 1] == _KNOWN:
        a = T[i, j - 1]
    if j < W - 1 and flag[i, j + 1] == _KNOWN and T[i, j + 1] < a:
        a = T[i, j + 1]
    if i > 0 and flag[i - 1, j] == _KNOWN:
        b = T[i - 1, j]
    if i < H - 1 and flag[i + 1, j] == _KNOWN and T[i + 1, j] < b:
        b = T[i + 1, j]
    if a < _INF and b < _INF and abs(a - b) < 1.0:
        return 0.5 * (a + b + np.sqrt(2.0 - (a - b) * (a - b)))
    return min(a, b) + 1.0


@numba.njit(cache=True)
def _axis_diff(arr, flag, i, j, di, dj):
    # derivative of arr at (i, j) along (di, dj) from finalized neighbors only
    H, W = arr.shape
    i0, j0, i1, j1 = i - di, j - dj, i + di, j + dj
    lo = 0 <= i0 < H and 0 <= j0 < W and flag[i0, j0] == _KNOWN
    hi = 0 <= i1 < H and 0 <= j1 < W and flag[i1, j1] == _KNOWN
    if lo and hi:
        return 0.5 * (arr[i1, j1] - arr[i0, j0])
    if hi:
        return arr[i1, j1] - arr[i, j]
    if lo:
        return arr[i, j] - arr[i0, j0]
    return 0.0


@numba.njit(cache=True)
def _level_normal(T, flag, i, j):
    # grad T at a band pixel, using any neighbor with a finite T
    H, W = T.shape
    g = np.zeros(2)
    for axis in range(2):
        di = 1 if axis == 0 else 0
        dj = 1 - di
        i0, j0, i1, j1 = i - di, j - dj, i + di, j + dj
        lo = 0 <= i0 < H and 0 <= j0 < W and flag[i0, j0] != _INSIDE
        hi = 0 <= i1 < H and 0 <= j1 < W and flag[i1, j1] != _INSIDE
        if lo and hi:
            g[axis] = 0.5 * (T[i1, j1] - T[i0, j0])
        elif hi:
            g[axis] = T[i1, j1] - T[i, j]
        elif lo:
            g[axis] = T[i, j] - T[i0, j0]
    n = np.sqrt(g[0] * g[0] + g[1] * g[1])
    if n > 0.0:
        g /= n
    return g, n > 0.0


@numba.njit(cache=True)
def _fill_pixel(out, T, flag, i, j, radius):
    H, W = out.shape
    normal, has_normal = _level_normal(T, flag, i, j)
    acc = 0.0
    wsum = 0.0
    lo = np.inf
    hi = -np.inf
    r2max = radius * radius
    for k in range(max(0, i - radius), min(H, i + radius + 1)):
        for l in range(max(0, j - radius), min(W, j + radius + 1)):
            if flag[k, l] != _KNOWN:
                continue
            ri = float(i - k)
            rj = float(j - l)
            d2 = ri * ri + rj * rj
            if d2 == 0.0 or d2 > r2max:
                continue
            dist = np.sqrt(d2)
            if has_normal:
                direction = abs(ri * normal[0] + rj * normal[1]) / dist
                if direction < 1e-6:
                    direction = 1e-6
            else:
                direction = 1.0
            dst = 1.0 / d2
            lev = 1.0 / (1.0 + abs(T[i, j] - T[k, l]))
            w = direction * dst * lev
            gi = _axis_diff(out, flag, k, l, 1, 0)
            gj = _axis_diff(out, flag, k, l, 0, 1)
            q = out[k, l]
            acc += w * (q + gi * ri + gj * rj)
            wsum += w
            if q < lo:
                lo = q
            if q > hi:
                hi = q
    v = acc / wsum
    if v < lo:
        v = lo
    elif v > hi:
        v = hi
    return v


@numba.njit(cache=True)
def _march(values, known, radius):
    H, W = values.shape
    flag = np.full((H, W), _INSIDE, dtype=np.int8)
    T = np.full((H, W), _INF)
    out = np.zeros((H, W))
    order = np.full((H, W), -1, dtype=np.int64)
    for i in range(H):
        for j in range(W):
            if known[i, j]:
                flag[i, j] = _KNOWN
                T[i, j] = 0.0
                out[i, j] = values[i, j]

    heap = [(0.0, np.int64(0))]
    heap.pop()
    for i in range(H):
        for j in range(W):
            if flag[i, j] != _INSIDE:
                continue
            if ((i > 0 and flag[i - 1, j] == _KNOWN) or (i < H - 1 and flag[i + 1, j] == _KNOWN)
                    or (j > 0 and flag[i, j - 1] == _KNOWN) or (j < W - 1 and flag[i, j + 1] == _KNOWN)):
                t = _solve_eikonal(T, flag, i, j)
                T[i, j] = t
                flag[i, j] = _BAND
                heapq.heappush(heap, (t, np.int64(i * W + j)))

    count = 0
    while len(heap) > 0:
        t, idx = heapq.heappop(heap)
        i = idx // W
        j = idx % W
        if flag[i, j] == _KNOWN or t > T[i, j]:
            continue
        out[i, j] = _fill_pixel(out, T, flag, i, j, radius)
        flag[i, j] = _KNOWN
        order[i, j] = count
        count += 1
        for n in range(4):
            ni = i + (-1, 1, 0, 0)[n]
            nj = j + (0, 0, -1, 1)[n]
            if ni < 0 or ni >= H or nj < 0 or nj >= W or flag[ni, nj] == _KNOWN:
                continue
            tn = _solve_eikonal(T, flag, ni, nj)
            if tn < T[ni, nj]:
                T[ni, nj] = tn
                flag[ni, nj] = _BAND
                heapq.heappush(heap, (tn, np.int64(ni * W + nj)))
    return out, T, order


def _check_problem(values, known, radius):
    values = np.asarray(values, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    if values.ndim != 2 or values.shape != known.shape:
        raise InvalidInput(f"values {values.shape} and known {known.shape} must be equal 2-D shapes")
    if int(radius) != radius or radius < 1:
        raise InvalidInput(f"radius must be an integer >= 1, got {radius!r}")
    if not known.any():
        raise EmptyPrior("inpainting needs at least one known pixel")
    if not np.all(np.isfinite(values[known])):
        raise InvalidInput("known values must be finite")
    return values, known, int(radius)


def telea_march(values, known, radius=5):
    """Run the march and also return its instrumentation.

    Returns ``(filled, T, order)`` where ``T`` is the arrival distance of
    every pixel (0 on known pixels) and ``order`` the fill sequence number
    of each originally unknown pixel (-1 for known pixels).
    """
    values, known, radius = _check_problem(values, known, radius)
    work = np.where(known, values, 0.0)
    return _march(work, known, radius)


def telea(values, known, radius=5):
    """Fill the pixels where ``known`` is False; known pixels are returned unchanged."""
    values, known, radius = _check_problem(values, known, radius)
    if known.all():
        return values.copy()
    filled, _, _ = _march(np.where(known, values, 0.0), known, radius)
    return filled
