"""Compiled inner loops over the genotype space.

All kernels walk genotypes sequentially, so results do not depend on thread
scheduling and repeated runs are bit-identical.
"""

import numba
import numpy as np

jit = numba.njit(cache=True, nogil=True)


@jit
def forward_sweep(order, indptr, indices, weights, block):
    """``block[s] = sum_t w(s,t) * block[t]`` for ``s`` in ``order`` (sinks already set)."""
    width = block.shape[1]
    for s in order:
        lo, hi = indptr[s], indptr[s + 1]
        if lo == hi:
            continue
        row = np.zeros(width)
        for a in range(lo, hi):
            w = weights[a]
            t = indices[a]
            for c in range(width):
                row[c] += w * block[t, c]
        for c in range(width):
            block[s, c] = row[c]


@jit
def adjoint_sweep(order, indptr, indices, weights, y):
    """In place ``y[t] += w(s,t) * y[s]`` for ``s`` in ``order`` (deepest level first)."""
    width = y.shape[1]
    for s in order:
        for a in range(indptr[s], indptr[s + 1]):
            w = weights[a]
            t = indices[a]
            for c in range(width):
                y[t, c] += w * y[s, c]


@jit
def hypercube_sum(block, n):
    out = np.zeros_like(block)
    size, width = block.shape
    for s in range(size):
        for b in range(n):
            t = s ^ (1 << b)
            for c in range(width):
                out[s, c] += block[t, c]
    return out


@jit
def csr_column_block(indptr, indices, data, cursor, stop, out):
    """Densify columns ``[start, stop)`` of a CSR matrix into ``out``.

    ``cursor[s]`` must point at the first entry of row ``s`` with column
    ``>= start``; it is advanced past the block, so consecutive blocks
    cost one pass over the matrix in total.
    """
    start = stop - out.shape[1]
    for s in range(out.shape[0]):
        a = cursor[s]
        end = indptr[s + 1]
        while a < end and indices[a] < stop:
            out[s, indices[a] - start] = data[a]
            a += 1
        cursor[s] = a


@jit
def scatter_block(block, start, bits, filled, data, indices):
    """Append the supported entries of a dense column block to CSR arrays.

    Returns the number of nonzero entries found outside the support, which
    must be zero.
    """
    stray = 0
    size, width = block.shape
    for s in range(size):
        a = filled[s]
        for c in range(width):
            col = start + c
            if bits[s, col >> 3] & (1 << (col & 7)):
                data[a] = block[s, c]
                indices[a] = col
                a += 1
            elif block[s, c] != 0.0:
                stray += 1
        filled[s] = a
    return stray


@jit
def _sift_down(keys, vals, size, pos):
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and keys[child + 1] < keys[child]:
            child += 1
        if keys[child] >= keys[pos]:
            break
        keys[pos], keys[child] = keys[child], keys[pos]
        vals[pos], vals[child] = vals[child], vals[pos]
        pos = child


@jit
def _sift_up(keys, vals, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if keys[parent] <= keys[pos]:
            break
        keys[pos], keys[parent] = keys[parent], keys[pos]
        vals[pos], vals[parent] = vals[parent], vals[pos]
        pos = parent


@jit
def bounded_dijkstra(indptr, indices, lengths, bounds, totals, reached):
    """Single-source shortest paths from every node, summed per source.

    Rows of the CSR graph must be sorted by ascending length.  ``bounds[s]``
    is an upper bound on every finite distance from ``s``; arcs that cannot
    produce a distance within it are skipped, which leaves the result exact.
    Writes the sum of finite distances to other nodes into ``totals[s]`` and
    their count into ``reached[s]``.
    """
    p = indptr.shape[0] - 1
    nnz = indices.shape[0]
    dist = np.empty(p)
    done = np.zeros(p, dtype=np.bool_)
    keys = np.empty(nnz + 1)
    vals = np.empty(nnz + 1, dtype=np.int64)
    for s in range(p):
        dist[:] = np.inf
        done[:] = False
        bound = bounds[s]
        dist[s] = 0.0
        keys[0] = 0.0
        vals[0] = s
        size = 1
        total = 0.0
        count = 0
        while size > 0:
            d = keys[0]
            u = vals[0]
            size -= 1
            keys[0] = keys[size]
            vals[0] = vals[size]
            _sift_down(keys, vals, size, 0)
            if done[u]:
                continue
            done[u] = True
            if u != s:
                total += d
                count += 1
            for a in range(indptr[u], indptr[u + 1]):
                nd = d + lengths[a]
                if nd > bound:
                    break
                v = indices[a]
                if nd < dist[v]:
                    dist[v] = nd
                    keys[size] = nd
                    vals[size] = v
                    _sift_up(keys, vals, size)
                    size += 1
        totals[s] = total
        reached[s] = count


@jit
def sort_rows(indptr, keys, values):
    """Stable in-place sort of each CSR row segment by ``keys``."""
    for s in range(indptr.shape[0] - 1):
        lo, hi = indptr[s], indptr[s + 1]
        order = np.argsort(keys[lo:hi], kind="mergesort")
        keys[lo:hi] = keys[lo:hi][order]
        values[lo:hi] = values[lo:hi][order]
