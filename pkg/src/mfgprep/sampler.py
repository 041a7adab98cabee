"""Fanout-bounded neighborhood sampling and message-flow-graph construction.

The sampler is parameterized over a data-structure design space: the
global-to-local ID map (chained hash vs open-addressing flat table, with or
without a size hint), the without-replacement set (hash set, linear-scan
array, bit set), and whether sampling and edge emission are fused into one
pass.  All 18 variants produce structurally identical output; they differ
only in speed.

Sampling semantics: if deg(v) <= fanout, all edge slots are taken in CSR
order and no randomness is consumed; otherwise distinct slot positions are
rejection-sampled from a counter-based stream keyed by
(global_seed, batch_id, hop_index, dst_position).  Positions, not neighbor
IDs, are deduplicated, so multi-edge slots can contribute the same global
neighbor twice.
"""

import hashlib
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _kernels as K
from .graph import CsrGraph
from .rng import CounterRng, mix64, GOLDEN, MASK64

MAP_IMPLS = ("std_hash", "flat_probing", "flat_probing_with_size_hint")
SET_IMPLS = ("hash_set", "vector_set", "bit_set")

_MAP_CODE = {"std_hash": K.MAP_STD, "flat_probing": K.MAP_FLAT,
             "flat_probing_with_size_hint": K.MAP_FLAT_HINT}
_SET_CODE = {"hash_set": K.SET_HASH, "vector_set": K.SET_VECTOR,
             "bit_set": K.SET_BIT}


@dataclass(frozen=True)
class SamplerVariant:
    map_impl: str = "flat_probing"
    set_impl: str = "vector_set"
    fuse: bool = True

    def __post_init__(self):
        if self.map_impl not in MAP_IMPLS:
            raise ValueError(f"unknown map_impl {self.map_impl!r}")
        if self.set_impl not in SET_IMPLS:
            raise ValueError(f"unknown set_impl {self.set_impl!r}")

    @property
    def descriptor(self) -> str:
        return f"{self.map_impl}/{self.set_impl}/{'fused' if self.fuse else 'twopass'}"

    @classmethod
    def from_descriptor(cls, desc: str) -> "SamplerVariant":
        try:
            m, s, f = desc.split("/")
        except ValueError:
            raise ValueError(f"bad variant descriptor {desc!r}") from None
        if f not in ("fused", "twopass"):
            raise ValueError(f"bad fuse field in {desc!r}")
        return cls(map_impl=m, set_impl=s, fuse=(f == "fused"))


def list_variants() -> list[SamplerVariant]:
    """All 18 variants in a stable order."""
    return [SamplerVariant(m, s, f)
            for m, s, f in product(MAP_IMPLS, SET_IMPLS, (True, False))]


@dataclass(frozen=True)
class FanoutSpec:
    """Per-hop fanouts, outermost hop first (training-layer order)."""

    per_hop: tuple

    def __post_init__(self):
        if len(self.per_hop) < 1:
            raise ValueError("need at least one hop")
        if any(d < 0 for d in self.per_hop):
            raise ValueError("fanouts must be >= 0")
        object.__setattr__(self, "per_hop", tuple(int(d) for d in self.per_hop))

    def __len__(self):
        return len(self.per_hop)

    @classmethod
    def parse(cls, text: str) -> "FanoutSpec":
        return cls(tuple(int(t) for t in text.split(",")))


@dataclass(frozen=True)
class SeedBatch:
    batch_id: int
    dst_ids: np.ndarray  # distinct global node IDs

    def __post_init__(self):
        ids = np.asarray(self.dst_ids, dtype=np.int64)
        object.__setattr__(self, "dst_ids", ids)
        if len(np.unique(ids)) != len(ids):
            raise ValueError("seed IDs must be distinct")

    def __len__(self):
        return len(self.dst_ids)


class IdMap:
    """Insertion-ordered global<->local bijection, destinations first.

    Backed by flat arrays shared with the compiled hop kernel.  Locals are
    assigned 0, 1, 2, ... on first sight.
    """

    def __init__(self, variant: SamplerVariant = SamplerVariant(),
                 size_hint: int | None = None):
        self.variant = variant
        self.map_code = _MAP_CODE[variant.map_impl]
        self.size = 0
        cap = 64
        if variant.map_impl == "flat_probing_with_size_hint" and size_hint:
            cap = max(cap, int(size_hint))
        self._globals = np.empty(cap, dtype=np.int64)
        if self.map_code == K.MAP_STD:
            self._heads = np.full(_pow2_at_least(cap), -1, dtype=np.int64)
            self._nxt = np.empty(cap, dtype=np.int64)
            self._table = np.empty(1, dtype=np.int64)
        else:
            self._heads = np.empty(1, dtype=np.int64)
            self._nxt = np.empty(1, dtype=np.int64)
            self._table = np.full(_pow2_at_least(2 * cap), -1, dtype=np.int64)

    def ensure_capacity(self, extra: int) -> None:
        need = self.size + extra
        if need > len(self._globals):
            cap = max(2 * len(self._globals), need)
            self._globals = np.resize(self._globals, cap)
            if self.map_code == K.MAP_STD:
                self._nxt = np.resize(self._nxt, cap)
        if self.map_code == K.MAP_STD:
            if need > len(self._heads):
                self._heads = np.full(_pow2_at_least(need), -1, dtype=np.int64)
                K.rehash_chained(self._globals, self.size, self._heads, self._nxt)
        else:
            if 2 * need > len(self._table):
                self._table = np.full(_pow2_at_least(2 * need), -1, dtype=np.int64)
                K.rehash_flat(self._globals, self.size, self._table)

    def insert(self, keys: np.ndarray) -> None:
        keys = np.asarray(keys, dtype=np.int64)
        self.ensure_capacity(len(keys))
        self.size = int(K.insert_keys(keys, self._globals, self.size,
                                      self._heads, self._nxt, self._table,
                                      self.map_code))

    @property
    def global_ids(self) -> np.ndarray:
        return self._globals[:self.size]

    def global_of(self, local: int) -> int:
        if not 0 <= local < self.size:
            raise KeyError(local)
        return int(self._globals[local])

    def local_of(self, global_id: int) -> int:
        # Lookup path is Python-side only; tests and small queries.
        idx = np.flatnonzero(self.global_ids == global_id)
        if not idx.size:
            raise KeyError(global_id)
        return int(idx[0])

    def __len__(self):
        return self.size


def _pow2_at_least(n: int) -> int:
    return 1 << max(4, (int(n) - 1).bit_length())


@dataclass(frozen=True)
class MfgLayer:
    """One bipartite hop: CSR-by-destination edges over local IDs."""

    num_dst: int
    num_src: int
    indptr: np.ndarray     # int64, length num_dst + 1
    src_local: np.ndarray  # int64, edge source locals grouped by dst

    @property
    def num_edges(self) -> int:
        return len(self.src_local)

    def in_degree(self, dst_local: int) -> int:
        return int(self.indptr[dst_local + 1] - self.indptr[dst_local])

    def structurally_equal(self, other: "MfgLayer") -> bool:
        return (self.num_dst == other.num_dst
                and self.num_src == other.num_src
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.src_local, other.src_local))


@dataclass(frozen=True)
class Mfg:
    """Sampled multi-hop neighborhood: layers in consumption order.

    layers[0] is the outermost hop (largest source set, consumed by the
    first aggregation layer); the last layer's destinations are exactly the
    seed batch.
    """

    layers: tuple
    id_map: IdMap
    seeds: SeedBatch

    @property
    def num_nodes(self) -> int:
        return self.id_map.size

    @property
    def num_edges(self) -> int:
        return sum(l.num_edges for l in self.layers)

    def structurally_equal(self, other: "Mfg") -> bool:
        return (len(self.layers) == len(other.layers)
                and np.array_equal(self.id_map.global_ids, other.id_map.global_ids)
                and all(a.structurally_equal(b)
                        for a, b in zip(self.layers, other.layers)))

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(np.ascontiguousarray(self.id_map.global_ids).tobytes())
        for l in self.layers:
            h.update(np.int64([l.num_dst, l.num_src]).tobytes())
            h.update(np.ascontiguousarray(l.indptr).tobytes())
            h.update(np.ascontiguousarray(l.src_local).tobytes())
        return h.hexdigest()


class HopStream:
    """Key context for one (global_seed, batch_id, hop) sampling pass."""

    def __init__(self, global_seed: int, batch_id: int, hop: int):
        self.global_seed = global_seed
        self.batch_id = batch_id
        self.hop = hop
        k = mix64(global_seed ^ GOLDEN)
        k = mix64(k ^ batch_id)
        self.key_prefix = mix64(k ^ (hop + 0x51ED))

    def node_stream(self, dst_pos: int) -> CounterRng:
        return CounterRng(mix64(self.key_prefix ^ dst_pos))


def sample_neighbors(g: CsrGraph, v: int, d: int, rng: CounterRng) -> np.ndarray:
    """Sample d distinct edge-slot offsets of node v without replacement.

    Take-all rule: deg(v) <= d returns all slots in CSR order and consumes
    no randomness.  Otherwise rejection-samples positions from the stream,
    returned in acceptance order.
    """
    deg = g.degree(v)
    if deg <= d:
        return np.arange(deg, dtype=np.int64)
    seen = set()
    out = np.empty(d, dtype=np.int64)
    n = 0
    while n < d:
        pos = rng.next_below(deg)
        if pos in seen:
            continue
        seen.add(pos)
        out[n] = pos
        n += 1
    return out


def _hop_scratch(variant: SamplerVariant, fanout: int, max_degree: int):
    sampling_possible = fanout < max_degree
    cap = max(1, fanout if sampling_possible else 1)
    pos_scratch = np.empty(cap, dtype=np.int64)
    set_scratch = np.empty(_pow2_at_least(2 * cap), dtype=np.int64)
    return pos_scratch, set_scratch


def _run_hop(g: CsrGraph, id_map: IdMap, n_dst: int, fanout: int,
             hop_stream: HopStream, variant: SamplerVariant) -> MfgLayer:
    budget = int(K.hop_budget(g.indptr, id_map._globals, n_dst, fanout))
    id_map.ensure_capacity(budget)
    src_out = np.empty(budget, dtype=np.int64)
    dst_indptr = np.empty(n_dst + 1, dtype=np.int64)
    pos_scratch, set_scratch = _hop_scratch(variant, fanout, g.max_degree())
    pos_all = np.empty(budget if not variant.fuse else 1, dtype=np.int64)
    new_size = K.hop_kernel(
        g.indptr, g.indices, id_map._globals, id_map.size,
        id_map._heads, id_map._nxt, id_map._table,
        id_map.map_code, _SET_CODE[variant.set_impl], variant.fuse,
        n_dst, fanout, np.uint64(hop_stream.key_prefix),
        src_out, dst_indptr, pos_scratch, set_scratch, pos_all)
    id_map.size = int(new_size)
    return MfgLayer(num_dst=n_dst, num_src=id_map.size,
                    indptr=dst_indptr, src_local=src_out)


def one_hop_mfg(g: CsrGraph, dst, d: int, rng: HopStream,
                variant: SamplerVariant, id_map: IdMap) -> MfgLayer:
    """Sample one hop; id_map must already hold the destinations as a prefix.

    `dst` gives the destination count: either a SeedBatch (whose IDs must be
    the map prefix) or an integer local frontier size.
    """
    if isinstance(dst, SeedBatch):
        n_dst = len(dst)
        if not np.array_equal(id_map.global_ids[:n_dst], dst.dst_ids):
            raise ValueError("id_map prefix does not match destination batch")
    else:
        n_dst = int(dst)
    if n_dst > id_map.size:
        raise ValueError("destination count exceeds id_map size")
    return _run_hop(g, id_map, n_dst, int(d), rng, variant)


def size_hint_for(seeds_len: int, fanouts: FanoutSpec, num_nodes: int) -> int:
    est = seeds_len
    for d in reversed(fanouts.per_hop):
        est = min(num_nodes, est * (1 + d))
    return min(num_nodes, est)


def multihop_mfg(g: CsrGraph, seeds: SeedBatch, fanouts: FanoutSpec,
                 global_seed: int, variant: SamplerVariant) -> Mfg:
    """Expand seeds hop by hop; expansion hop h uses per_hop[L-1-h].

    Each hop's destinations are the previous hop's full source set (all
    locals so far).  Layers come back in reverse-expansion order so that
    consuming them in sequence shrinks the node set down to the seeds.
    """
    id_map = IdMap(variant, size_hint=size_hint_for(len(seeds), fanouts,
                                                    g.num_nodes))
    id_map.insert(seeds.dst_ids)
    if id_map.size != len(seeds):
        raise ValueError("seed IDs must be distinct")
    layers = []
    for hop, fanout in enumerate(reversed(fanouts.per_hop)):
        n_dst = id_map.size
        hs = HopStream(global_seed, seeds.batch_id, hop)
        layers.append(_run_hop(g, id_map, n_dst, fanout, hs, variant))
    return Mfg(layers=tuple(reversed(layers)), id_map=id_map, seeds=seeds)
