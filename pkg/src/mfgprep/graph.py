"""Immutable graph, feature, and label storage.

Graphs are compressed sparse row (CSR) over unsigned node IDs.  Multi-edges
and self-loops are preserved; sampling operates over edge slots, so
deduplicating here would silently change sampling distributions.  All types
are immutable after construction and safe to share across threads.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

CSR_MAGIC = b"MFGC"
FEAT_MAGIC = b"FEAT"
LABL_MAGIC = b"LABL"
FORMAT_VERSION = 1

DTYPE_F16 = 1
DTYPE_F32 = 2


class FormatError(Exception):
    """Base class for binary-format problems."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


@dataclass(frozen=True)
class CsrGraph:
    """Compressed-sparse-row adjacency; neighbors keep insertion order."""

    num_nodes: int
    indptr: np.ndarray   # int64, length num_nodes + 1
    indices: np.ndarray  # int64 node IDs, length num_edges

    @property
    def num_edges(self) -> int:
        return len(self.indices)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.num_nodes else 0

    def validate(self) -> None:
        if self.indptr[0] != 0 or self.indptr[-1] != self.num_edges:
            raise ValueError("indptr endpoints inconsistent with edge count")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be non-decreasing")
        if self.num_edges and (
            self.indices.min() < 0 or self.indices.max() >= self.num_nodes
        ):
            raise ValueError("neighbor ID out of range")

    def structurally_equal(self, other: "CsrGraph") -> bool:
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def checksum(self) -> int:
        import zlib

        h = zlib.crc32(np.ascontiguousarray(self.indptr).tobytes())
        h = zlib.crc32(np.ascontiguousarray(self.indices).tobytes(), h)
        return zlib.crc32(struct.pack("<Q", self.num_nodes), h)


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major node features; stored as f16 or f32, gathered as f32."""

    rows: int
    cols: int
    data: np.ndarray  # shape (rows, cols), dtype float16 or float32

    def __post_init__(self):
        if self.data.dtype not in (np.float16, np.float32):
            raise ValueError("feature dtype must be float16 or float32")
        if self.data.shape != (self.rows, self.cols):
            raise ValueError("feature data shape mismatch")

    @property
    def dtype_code(self) -> int:
        return DTYPE_F16 if self.data.dtype == np.float16 else DTYPE_F32


@dataclass(frozen=True)
class LabelVector:
    values: np.ndarray  # int64 class indices
    num_classes: int

    def __post_init__(self):
        if len(self.values) and (
            self.values.min() < 0 or self.values.max() >= self.num_classes
        ):
            raise ValueError("label out of range")


@dataclass(frozen=True)
class DegreeHistogram:
    buckets: dict = field(default_factory=dict)  # degree -> node count

    def num_nodes(self) -> int:
        return sum(self.buckets.values())

    def num_edges(self) -> int:
        return sum(d * c for d, c in self.buckets.items())

    def mean_degree(self) -> float:
        n = self.num_nodes()
        return self.num_edges() / n if n else 0.0


def from_edge_list(edges, num_nodes: int, make_undirected: bool = False) -> CsrGraph:
    """Build a CSR graph from (src, dst) pairs, preserving input order.

    With make_undirected, each input edge contributes both directions,
    interleaved so that reverse slots keep the input ordering per node.
    Raises ValueError naming the first out-of-range edge.
    """
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    src, dst = arr[:, 0], arr[:, 1]
    bad = np.flatnonzero((src < 0) | (src >= num_nodes) | (dst < 0) | (dst >= num_nodes))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"edge {i} = ({src[i]}, {dst[i]}) has endpoint outside "
                         f"[0, {num_nodes})")
    if make_undirected:
        src2 = np.column_stack([src, dst]).ravel()
        dst2 = np.column_stack([dst, src]).ravel()
        src, dst = src2, dst2
    counts = np.bincount(src, minlength=num_nodes)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.argsort(src, kind="stable")
    indices = dst[order].astype(np.int64)
    g = CsrGraph(num_nodes=num_nodes, indptr=indptr, indices=indices)
    g.validate()
    return g


def read_edge_list(path) -> np.ndarray:
    """Parse a whitespace-separated "src dst" text file; '#' lines ignored."""
    pairs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()[:2]
            pairs.append((int(a), int(b)))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise TruncatedFileError(f"truncated file while reading {what}")
    return buf


def _check_header(f, magic: bytes):
    got = _read_exact(f, 4, "magic")
    if got != magic:
        raise BadMagicError(f"bad magic {got!r}, expected {magic!r}")
    (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported version {version}")


def save_csr(g: CsrGraph, path) -> None:
    with open(path, "wb") as f:
        f.write(CSR_MAGIC)
        f.write(struct.pack("<IQQ", FORMAT_VERSION, g.num_nodes, g.num_edges))
        f.write(g.indptr.astype("<u8").tobytes())
        f.write(g.indices.astype("<u4").tobytes())


def load_csr(path) -> CsrGraph:
    with open(path, "rb") as f:
        _check_header(f, CSR_MAGIC)
        num_nodes, num_edges = struct.unpack("<QQ", _read_exact(f, 16, "counts"))
        indptr = np.frombuffer(
            _read_exact(f, 8 * (num_nodes + 1), "indptr"), dtype="<u8"
        ).astype(np.int64)
        indices = np.frombuffer(
            _read_exact(f, 4 * num_edges, "indices"), dtype="<u4"
        ).astype(np.int64)
    g = CsrGraph(num_nodes=int(num_nodes), indptr=indptr, indices=indices)
    g.validate()
    return g


def save_features(fm: FeatureMatrix, path) -> None:
    with open(path, "wb") as f:
        f.write(FEAT_MAGIC)
        f.write(struct.pack("<IQIB3x", FORMAT_VERSION, fm.rows, fm.cols, fm.dtype_code))
        f.write(np.ascontiguousarray(fm.data).tobytes())


def load_features(path) -> FeatureMatrix:
    with open(path, "rb") as f:
        _check_header(f, FEAT_MAGIC)
        rows, cols, code = struct.unpack("<QIB3x", _read_exact(f, 16, "shape"))
        dt = np.float16 if code == DTYPE_F16 else np.float32
        nbytes = rows * cols * np.dtype(dt).itemsize
        data = np.frombuffer(_read_exact(f, nbytes, "payload"), dtype=dt)
    return FeatureMatrix(rows=int(rows), cols=int(cols),
                         data=data.reshape(rows, cols))


def save_labels(y: LabelVector, path) -> None:
    with open(path, "wb") as f:
        f.write(LABL_MAGIC)
        f.write(struct.pack("<IQI", FORMAT_VERSION, len(y.values), y.num_classes))
        f.write(y.values.astype("<u4").tobytes())


def load_labels(path) -> LabelVector:
    with open(path, "rb") as f:
        _check_header(f, LABL_MAGIC)
        rows, num_classes = struct.unpack("<QI", _read_exact(f, 12, "shape"))
        values = np.frombuffer(
            _read_exact(f, 4 * rows, "payload"), dtype="<u4"
        ).astype(np.int64)
    return LabelVector(values=values, num_classes=int(num_classes))


def synth_graph(n: int, avg_degree: float, exponent: float = 3.0,
                seed: int = 0) -> CsrGraph:
    """Random undirected multigraph with a power-law-ish degree sequence.

    Target degrees follow a rounded Pareto(shape=exponent-1) whose mean is
    avg_degree; exponent=inf degenerates to a near-regular graph.  Stubs are
    paired uniformly (configuration model), so self-loops and multi-edges
    can occur and are kept.  Deterministic in seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if avg_degree < 0:
        raise ValueError("avg_degree must be >= 0")
    rng = np.random.default_rng(seed)
    if not np.isfinite(exponent):
        degs = np.full(n, int(round(avg_degree)), dtype=np.int64)
    else:
        if exponent <= 2.0:
            raise ValueError("exponent must be > 2 for a finite mean degree")
        a = exponent - 1.0
        scale = avg_degree * (a - 1.0) / a
        degs = np.rint(scale * (1.0 + rng.pareto(a, size=n))).astype(np.int64)
        np.clip(degs, 0, n - 1, out=degs)
    if degs.sum() % 2 == 1:
        degs[int(rng.integers(n))] += 1
    stubs = np.repeat(np.arange(n, dtype=np.int64), degs)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    return from_edge_list(pairs, n, make_undirected=True)


def generate_features(n: int, f: int, dtype: str = "f32",
                      seed: int = 0) -> FeatureMatrix:
    """Uniform features in [-1, 1]; f16 rounds the f32 values nearest-even."""
    rng = np.random.default_rng(seed)
    data = rng.uniform(-1.0, 1.0, size=(n, f)).astype(np.float32)
    if dtype == "f16":
        data = data.astype(np.float16)
    elif dtype != "f32":
        raise ValueError(f"unknown feature dtype {dtype!r}")
    return FeatureMatrix(rows=n, cols=f, data=data)


def generate_labels(n: int, num_classes: int, seed: int = 0) -> LabelVector:
    rng = np.random.default_rng(seed)
    values = rng.integers(0, num_classes, size=n, dtype=np.int64)
    return LabelVector(values=values, num_classes=num_classes)


def degree_histogram(g: CsrGraph) -> DegreeHistogram:
    degs, counts = np.unique(g.degrees(), return_counts=True)
    return DegreeHistogram(buckets={int(d): int(c) for d, c in zip(degs, counts)})
