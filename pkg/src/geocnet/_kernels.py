"""Compiled pair-counting kernels.

All kernels count unordered pairs ``i < j`` whose distance is strictly below a
radius. Distances are evaluated with exactly the arithmetic a naive double loop
would use (``abs(a - b)`` per coordinate, then max or sqrt of the sum of
squares in coordinate order), so counts are bit-for-bit reproducible against a
brute-force reference.
"""
import numpy as np
from numba import njit

NORM_MAX = 0
NORM_EUCLID = 1


@njit(cache=True, nogil=True)
def _bin_index(dist, radii, guess):
    # first k with radii[k] > dist
    nr = radii.shape[0]
    idx = guess
    while idx < nr and dist >= radii[idx]:
        idx += 1
    while idx > 0 and dist < radii[idx - 1]:
        idx -= 1
    return idx


@njit(cache=True, nogil=True)
def _search_index(dist, radii):
    lo = 0
    hi = radii.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if radii[mid] > dist:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def sweep_counts(cols, order, radii, linear, norm, theiler):
    """Pair counts below every radius for a cloud sorted on its first coordinate.

    ``cols`` is the transposed cloud, shape (dim, n), sorted ascending on row 0.
    ``order`` holds the original time index of each column (used only when
    ``theiler > 0``). ``radii`` must be strictly increasing.

    On a linear grid the bin of a distance is read off arithmetically; only
    distances within rounding reach of a radius are re-binned by exact
    comparison, so the result equals a comparison against every radius.
    """
    d, n = cols.shape
    nr = radii.shape[0]
    counts = np.zeros(nr, np.int64)
    if n < 2 or nr == 0:
        return counts
    rmax = radii[nr - 1]
    r0 = radii[0]
    inv = 0.0
    if linear and nr > 1:
        inv = (nr - 1) / (rmax - r0)
    else:
        linear = False
    width = nr + 2
    # four interleaved histograms break store-to-load chains on repeated bins
    hist = np.zeros(4 * width, np.int64)
    buf = np.empty(n, np.float64)
    bins = np.empty(n, np.int64)
    flag = np.empty(n, np.int64)
    tol = 1e-6
    c0 = cols[0]
    end = 0
    for i in range(n):
        xi = c0[i]
        if end < i + 1:
            end = i + 1
        while end < n and c0[end] - xi < rmax:
            end += 1
        m = end - i - 1
        if m == 0:
            continue
        if norm == NORM_MAX:
            for t in range(m):
                buf[t] = c0[i + 1 + t] - xi
            for k in range(1, d):
                ck = cols[k]
                yi = ck[i]
                for t in range(m):
                    v = abs(ck[i + 1 + t] - yi)
                    buf[t] = v if v > buf[t] else buf[t]
        else:
            for t in range(m):
                v = c0[i + 1 + t] - xi
                buf[t] = v * v
            for k in range(1, d):
                ck = cols[k]
                yi = ck[i]
                for t in range(m):
                    v = ck[i + 1 + t] - yi
                    buf[t] += v * v
            for t in range(m):
                buf[t] = np.sqrt(buf[t])
        if theiler > 0:
            for t in range(m):
                if abs(order[i] - order[i + 1 + t]) <= theiler:
                    buf[t] = np.inf
        if linear:
            nflag = 0
            for t in range(m):
                # u = k + 1 exactly at radii[k]; bin = number of radii <= dist
                u = (buf[t] - r0) * inv + 1.0
                u = min(max(u, 0.0), nr + 0.5)
                b = np.int64(u)
                f = u - b
                bins[t] = b
                flag[t] = (f < tol) | (f > 1.0 - tol)
                nflag += flag[t]
            for t in range(m):
                hist[(t & 3) * width + bins[t]] += 1
            if nflag:
                for t in range(m):
                    if flag[t]:
                        b = bins[t]
                        e = _bin_index(buf[t], radii, min(b, nr))
                        hist[b] -= 1
                        hist[e] += 1
        else:
            for t in range(m):
                hist[_search_index(buf[t], radii)] += 1
    acc = 0
    for k in range(nr):
        for h in range(4):
            acc += hist[h * width + k]
        counts[k] = acc
    return counts


@njit(cache=True, nogil=True)
def sorted_line_counts(x, radii):
    """Pair counts below every radius for a sorted 1-d sample (two pointers)."""
    n = x.shape[0]
    nr = radii.shape[0]
    counts = np.zeros(nr, np.int64)
    for k in range(nr):
        r = radii[k]
        j = 0
        total = 0
        for i in range(n):
            if j < i + 1:
                j = i + 1
            while j < n and x[j] - x[i] < r:
                j += 1
            total += j - i - 1
        counts[k] = total
    return counts


@njit(cache=True, nogil=True)
def logistic_orbit(x0, parent_ptr, parent_idx, sigma, kappa, a, kind, n_states, tol):
    """Iterate a network of coupled logistic maps.

    Returns the (n_states, n, d) trajectory starting with ``x0`` and the step
    index of the first state outside [0, 1] (or -1). Coupling contributions
    are summed after sorting so that relabelling nodes cannot change rounding.
    """
    n, d = x0.shape
    out = np.empty((n_states, n, d))
    out[0] = x0
    fx = np.empty((n, d))
    acc = np.empty(d)
    maxdeg = 0
    for i in range(n):
        deg = parent_ptr[i + 1] - parent_ptr[i]
        if deg > maxdeg:
            maxdeg = deg
    terms = np.empty(max(maxdeg, 1))
    for s in range(1, n_states):
        prev = out[s - 1]
        for i in range(n):
            for q in range(d):
                fx[i, q] = a * prev[i, q] * (1.0 - prev[i, q])
        for i in range(n):
            lo = parent_ptr[i]
            hi = parent_ptr[i + 1]
            for q in range(d):
                for e in range(lo, hi):
                    j = parent_idx[e]
                    if kind == 0:
                        terms[e - lo] = fx[j, q] - fx[i, q]
                    else:
                        terms[e - lo] = prev[j, q] - prev[i, q]
                part = np.sort(terms[: hi - lo])
                total = 0.0
                for e in range(hi - lo):
                    total += part[e]
                acc[q] = total
            for q in range(d):
                c = 0.0
                for r in range(d):
                    c += kappa[q, r] * acc[r]
                v = fx[i, q] + sigma * c
                out[s, i, q] = v
                if not (v >= -tol and v <= 1.0 + tol):
                    return out, s
    return out, -1
