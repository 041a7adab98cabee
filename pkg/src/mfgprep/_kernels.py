"""Compiled inner loops for sampling, MFG construction, and slicing.

Everything here is numba-njit with nogil=True so that batch-prep worker
threads actually run in parallel.  Data-structure variants are selected by
integer codes; all variants are behaviorally identical by construction
(membership semantics only), which the test suite checks exhaustively.

Map codes: 0 = chained hash (separate chaining, modulo bucketing, models a
std::unordered_map); 1/2 = open addressing with linear probing over a
power-of-two table (2 differs only in the Python-side initial-capacity
policy).  Set codes: 0 = small open-addressing hash set, 1 = linear-scan
array, 2 = per-call zeroed bit set.
"""

import numpy as np
from numba import njit

MAP_STD = 0
MAP_FLAT = 1
MAP_FLAT_HINT = 2

SET_HASH = 0
SET_VECTOR = 1
SET_BIT = 2

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)


@njit(nogil=True, cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(nogil=True, cache=True, inline="always")
def _stream_u64(key, counter):
    return _mix64(key + (counter + U64(1)) * _GOLDEN)


@njit(nogil=True, cache=True)
def hop_budget(indptr, globals_arr, n_dst, fanout):
    """Exact number of edges the hop will emit: sum of min(deg, fanout)."""
    total = 0
    for i in range(n_dst):
        v = globals_arr[i]
        deg = indptr[v + 1] - indptr[v]
        total += min(deg, fanout)
    return total


@njit(nogil=True, cache=True)
def rehash_chained(globals_arr, size, heads, nxt):
    heads[:] = -1
    nbuckets = heads.shape[0]
    for e in range(size):
        b = globals_arr[e] % nbuckets
        nxt[e] = heads[b]
        heads[b] = e
    return heads


@njit(nogil=True, cache=True)
def rehash_flat(globals_arr, size, table):
    table[:] = -1
    mask = U64(table.shape[0] - 1)
    for e in range(size):
        slot = np.int64(_mix64(U64(globals_arr[e])) & mask)
        while table[slot] != -1:
            slot = np.int64((U64(slot) + U64(1)) & mask)
        table[slot] = e
    return table


@njit(nogil=True, cache=True, inline="always")
def _map_get_or_insert(key, globals_arr, size, heads, nxt, table, map_impl):
    """Returns (local_id, new_size); inserts on first sight."""
    if map_impl == MAP_STD:
        nbuckets = heads.shape[0]
        b = key % nbuckets
        e = heads[b]
        while e != -1:
            if globals_arr[e] == key:
                return e, size
            e = nxt[e]
        globals_arr[size] = key
        nxt[size] = heads[b]
        heads[b] = size
        return size, size + 1
    mask = U64(table.shape[0] - 1)
    slot = np.int64(_mix64(U64(key)) & mask)
    while table[slot] != -1:
        if globals_arr[table[slot]] == key:
            return table[slot], size
        slot = np.int64((U64(slot) + U64(1)) & mask)
    globals_arr[size] = key
    table[slot] = size
    return size, size + 1


@njit(nogil=True, cache=True)
def _sample_positions(key, deg, d, set_impl, accepted, set_scratch):
    """Rejection-sample d distinct slot positions from [0, deg).

    The accepted sequence depends only on the draw stream, deg, and d;
    the set structure influences speed, never the result.  Fills
    accepted[0:d] in acceptance order.
    """
    if set_impl == SET_BIT:
        bits = np.zeros((deg + 7) >> 3, dtype=np.uint8)
    else:
        bits = np.zeros(1, dtype=np.uint8)
    if set_impl == SET_HASH:
        set_scratch[:] = -1
    smask = U64(set_scratch.shape[0] - 1)
    acc = 0
    ctr = U64(0)
    while acc < d:
        pos = np.int64(_stream_u64(key, ctr) % U64(deg))
        ctr += U64(1)
        if set_impl == SET_VECTOR:
            hit = False
            for j in range(acc):
                if accepted[j] == pos:
                    hit = True
                    break
            if hit:
                continue
        elif set_impl == SET_BIT:
            if bits[pos >> 3] & (1 << (pos & 7)):
                continue
            bits[pos >> 3] |= 1 << (pos & 7)
        else:
            slot = np.int64(_mix64(U64(pos)) & smask)
            hit = False
            while set_scratch[slot] != -1:
                if set_scratch[slot] == pos:
                    hit = True
                    break
                slot = np.int64((U64(slot) + U64(1)) & smask)
            if hit:
                continue
            set_scratch[slot] = pos
        accepted[acc] = pos
        acc += 1
    return acc


@njit(nogil=True, cache=True)
def hop_kernel(indptr, indices, globals_arr, size, heads, nxt, table,
               map_impl, set_impl, fused, n_dst, fanout, hop_key_prefix,
               src_out, dst_indptr_out, pos_scratch, set_scratch, pos_all):
    """Sample one hop for destinations (locals 0..n_dst-1) and emit edges.

    Edges land in src_out grouped by destination (CSR-by-destination via
    dst_indptr_out).  New source nodes are appended to the ID map.  Returns
    the map size after the hop; the edge count equals hop_budget.
    """
    e = 0
    if fused:
        for i in range(n_dst):
            dst_indptr_out[i] = e
            v = globals_arr[i]
            lo = indptr[v]
            deg = indptr[v + 1] - lo
            key = _mix64(hop_key_prefix ^ U64(i))
            if deg <= fanout:
                for p in range(deg):
                    local, size = _map_get_or_insert(
                        indices[lo + p], globals_arr, size, heads, nxt,
                        table, map_impl)
                    src_out[e] = local
                    e += 1
            else:
                acc = _sample_positions(key, deg, fanout, set_impl,
                                        pos_scratch, set_scratch)
                for j in range(acc):
                    local, size = _map_get_or_insert(
                        indices[lo + pos_scratch[j]], globals_arr, size,
                        heads, nxt, table, map_impl)
                    src_out[e] = local
                    e += 1
        dst_indptr_out[n_dst] = e
        return size
    # Two-pass: sample every destination first, then build the layer.
    w = 0
    for i in range(n_dst):
        dst_indptr_out[i] = w
        v = globals_arr[i]
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        key = _mix64(hop_key_prefix ^ U64(i))
        if deg <= fanout:
            for p in range(deg):
                pos_all[w] = p
                w += 1
        else:
            acc = _sample_positions(key, deg, fanout, set_impl,
                                    pos_scratch, set_scratch)
            for j in range(acc):
                pos_all[w] = pos_scratch[j]
                w += 1
    dst_indptr_out[n_dst] = w
    for i in range(n_dst):
        v = globals_arr[i]
        lo = indptr[v]
        for k in range(dst_indptr_out[i], dst_indptr_out[i + 1]):
            local, size = _map_get_or_insert(
                indices[lo + pos_all[k]], globals_arr, size, heads, nxt,
                table, map_impl)
            src_out[k] = local
    return size


@njit(nogil=True, cache=True)
def insert_keys(keys, globals_arr, size, heads, nxt, table, map_impl):
    """Insert keys in order (get-or-insert); returns the new map size."""
    for i in range(keys.shape[0]):
        _, size = _map_get_or_insert(keys[i], globals_arr, size, heads, nxt,
                                     table, map_impl)
    return size


@njit(nogil=True, cache=True)
def gather_f32(data, ids, out):
    for i in range(ids.shape[0]):
        row = ids[i]
        for j in range(data.shape[1]):
            out[i, j] = data[row, j]


@njit(nogil=True, cache=True, inline="always")
def _half_to_f32(h):
    sign = -np.float32(1.0) if (h & 0x8000) else np.float32(1.0)
    e = (h >> 10) & 0x1F
    m = h & 0x3FF
    if e == 0:
        return sign * np.float32(m) * np.float32(5.960464477539063e-08)
    if e == 31:
        if m:
            return np.float32(np.nan)
        return sign * np.float32(np.inf)
    return sign * np.float32((1.0 + m / 1024.0) * 2.0 ** (e - 15))


@njit(nogil=True, cache=True)
def gather_f16(data_u16, ids, out):
    for i in range(ids.shape[0]):
        row = ids[i]
        for j in range(data_u16.shape[1]):
            out[i, j] = _half_to_f32(data_u16[row, j])


@njit(nogil=True, cache=True)
def gather_labels(values, ids, out):
    for i in range(ids.shape[0]):
        out[i] = values[ids[i]]
