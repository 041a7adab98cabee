"""Shared-memory parallel batch preparation.

P worker threads pull batch IDs from a pre-filled input queue (dynamic load
balancing, no static partition), prepare each batch end-to-end (sampling
then serial slicing), and push results into a bounded output queue.  Sliced
tensors land in preallocated buffers drawn from a fixed pool of
queue_capacity + P slots, modeling reusable pinned host memory.  Because
the sampling streams are keyed per batch, the produced batches are
identical for any worker count or schedule.

Buffers are recycled: a PreparedBatch's buffers are valid until the
consumer advances the epoch iterator past it (or call detach() to copy).
"""

import hashlib
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graph import CsrGraph, FeatureMatrix, LabelVector
from .sampler import (FanoutSpec, IdMap, Mfg, SamplerVariant, SeedBatch,
                      multihop_mfg)


@dataclass(frozen=True)
class EpochPlan:
    batches: tuple  # of SeedBatch
    batch_size: int
    shuffle_seed: int

    def __len__(self):
        return len(self.batches)


def make_epoch_plan(train_ids, batch_size: int, shuffle_seed: int) -> EpochPlan:
    """Shuffle train IDs deterministically and chunk into seed batches."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = np.asarray(train_ids, dtype=np.int64)
    rng = np.random.default_rng(shuffle_seed)
    perm = ids[rng.permutation(len(ids))]
    batches = tuple(
        SeedBatch(batch_id=i, dst_ids=perm[start:start + batch_size])
        for i, start in enumerate(range(0, len(perm), batch_size))
    )
    return EpochPlan(batches=batches, batch_size=batch_size,
                     shuffle_seed=shuffle_seed)


@dataclass
class PrepConfig:
    num_workers: int = 1
    queue_capacity: int = 0  # 0 -> default 4 * num_workers
    fanouts: FanoutSpec = field(default_factory=lambda: FanoutSpec((15, 10, 5)))
    variant: SamplerVariant = field(default_factory=SamplerVariant)
    delivery: str = "in_order"  # or "completion_order"

    def __post_init__(self):
        if self.num_workers < 1:
            raise ValueError("need at least one worker")
        if self.queue_capacity == 0:
            self.queue_capacity = 4 * self.num_workers
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        if self.delivery not in ("in_order", "completion_order"):
            raise ValueError(f"unknown delivery mode {self.delivery!r}")


class _Slot:
    """One reusable buffer pair from the pool; grows to fit, never shrinks."""

    def __init__(self):
        self.features = np.empty(0, dtype=np.float32)
        self.labels = np.empty(0, dtype=np.int64)

    def reserve(self, feat_elems: int, label_elems: int):
        if len(self.features) < feat_elems:
            self.features = np.empty(feat_elems, dtype=np.float32)
        if len(self.labels) < label_elems:
            self.labels = np.empty(label_elems, dtype=np.int64)


class BufferPool:
    """Fixed number of slots; acquire blocks when all are in flight."""

    def __init__(self, nslots: int):
        self._sem = threading.Semaphore(nslots)
        self._lock = threading.Lock()
        self._free = [_Slot() for _ in range(nslots)]
        self._outstanding = 0
        self.peak_outstanding = 0

    def acquire(self) -> _Slot:
        self._sem.acquire()
        with self._lock:
            self._outstanding += 1
            self.peak_outstanding = max(self.peak_outstanding, self._outstanding)
            return self._free.pop()

    def release(self, slot: _Slot):
        with self._lock:
            self._free.append(slot)
            self._outstanding -= 1
        self._sem.release()


@dataclass
class PreparedBatch:
    """An Mfg joined with sliced feature/label buffers, ready to transfer."""

    mfg: Mfg
    features: np.ndarray  # (id_map.size, f) float32 view into a pool slot
    labels: np.ndarray    # (|seeds|,) int64 view into a pool slot
    byte_size: int
    stats: tuple          # ((num_dst, num_src, num_edges) per layer)
    _slot: _Slot | None = None
    _pool: BufferPool | None = None

    @property
    def num_nodes(self) -> int:
        return self.mfg.num_nodes

    @property
    def num_edges(self) -> int:
        return self.mfg.num_edges

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(self.mfg.digest().encode())
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        return h.hexdigest()

    def detach(self) -> "PreparedBatch":
        """Copy out of the pool buffers and release the slot."""
        out = PreparedBatch(mfg=self.mfg, features=self.features.copy(),
                            labels=self.labels.copy(), byte_size=self.byte_size,
                            stats=self.stats)
        self.release()
        return out

    def release(self):
        if self._slot is not None and self._pool is not None:
            self._pool.release(self._slot)
            self._slot = None


def slice_features(fm: FeatureMatrix, id_map: IdMap, out: np.ndarray) -> np.ndarray:
    """Gather id_map's rows into `out` as f32; no intermediate allocation.

    `out` must be a float32 buffer with capacity >= id_map.size * fm.cols.
    Raises ValueError on capacity shortfall rather than truncating.
    """
    need = id_map.size * fm.cols
    if out.dtype != np.float32:
        raise ValueError("output buffer must be float32")
    if out.size < need:
        raise ValueError(f"output buffer holds {out.size} elements, "
                         f"need {need}")
    view = out.reshape(-1)[:need].reshape(id_map.size, fm.cols)
    ids = id_map.global_ids
    if fm.data.dtype == np.float16:
        K.gather_f16(fm.data.view(np.uint16), ids, view)
    else:
        K.gather_f32(fm.data, ids, view)
    return view


def slice_labels(y: LabelVector, seeds: SeedBatch,
                 out: np.ndarray | None = None) -> np.ndarray:
    """Destination labels in seed order."""
    n = len(seeds)
    if out is None:
        out = np.empty(n, dtype=np.int64)
    view = out[:n]
    K.gather_labels(y.values, seeds.dst_ids, view)
    return view


def _batch_bytes(mfg: Mfg, fm_cols: int, nseeds: int) -> int:
    feat = mfg.num_nodes * fm_cols * 4
    lab = nseeds * 8
    edges = sum(l.src_local.nbytes + l.indptr.nbytes for l in mfg.layers)
    return feat + lab + edges


def prepare_batch(g: CsrGraph, fm: FeatureMatrix, y: LabelVector,
                  seeds: SeedBatch, fanouts: FanoutSpec,
                  variant: SamplerVariant, global_seed: int,
                  slot: _Slot | None = None,
                  pool: BufferPool | None = None) -> PreparedBatch:
    """Sample the MFG then slice features and labels for one batch."""
    mfg = multihop_mfg(g, seeds, fanouts, global_seed, variant)
    own_slot = slot if slot is not None else _Slot()
    own_slot.reserve(mfg.num_nodes * fm.cols, len(seeds))
    feats = slice_features(fm, mfg.id_map, own_slot.features)
    labels = slice_labels(y, seeds, own_slot.labels)
    stats = tuple((l.num_dst, l.num_src, l.num_edges) for l in mfg.layers)
    return PreparedBatch(mfg=mfg, features=feats, labels=labels,
                         byte_size=_batch_bytes(mfg, fm.cols, len(seeds)),
                         stats=stats, _slot=slot, _pool=pool)


@dataclass
class PrepReport:
    threads: int
    sampling_s: float = 0.0
    slicing_s: float = 0.0
    both_s: float = 0.0
    per_batch: list = field(default_factory=list)  # (batch_id, sampling, slicing)
    peak_resident: int = 0

    def csv_row(self) -> str:
        return f"{self.threads},{self.sampling_s:.6f},{self.slicing_s:.6f},{self.both_s:.6f}"

    @staticmethod
    def csv_header() -> str:
        return "threads,sampling_s,slicing_s,both_s"


class EpochPrepRun:
    """Iterable over an epoch's PreparedBatches; .report is valid afterwards."""

    def __init__(self, g, fm, y, plan: EpochPlan, cfg: PrepConfig,
                 global_seed: int):
        self._g, self._fm, self._y = g, fm, y
        self._plan, self._cfg, self._seed = plan, cfg, global_seed
        self.report = PrepReport(threads=cfg.num_workers)

    def __iter__(self):
        g, fm, y = self._g, self._fm, self._y
        plan, cfg, seed = self._plan, self._cfg, self._seed
        nbatches = len(plan)
        pool = BufferPool(cfg.queue_capacity + cfg.num_workers)
        inq = deque(range(nbatches))
        outq = queue.Queue(maxsize=cfg.queue_capacity)
        stop = threading.Event()
        t_start = time.perf_counter()

        def emit(item):
            # Bounded blocking put that still honors early shutdown.
            while not stop.is_set():
                try:
                    outq.put(item, timeout=0.05)
                    return True
                except queue.Full:
                    continue
            return False

        def worker():
            while not stop.is_set():
                try:
                    idx = inq.popleft()
                except IndexError:
                    return
                try:
                    slot = pool.acquire()
                    seeds = plan.batches[idx]
                    t0 = time.perf_counter()
                    mfg = multihop_mfg(g, seeds, cfg.fanouts, seed, cfg.variant)
                    t1 = time.perf_counter()
                    slot.reserve(mfg.num_nodes * fm.cols, len(seeds))
                    feats = slice_features(fm, mfg.id_map, slot.features)
                    labels = slice_labels(y, seeds, slot.labels)
                    t2 = time.perf_counter()
                    stats = tuple((l.num_dst, l.num_src, l.num_edges)
                                  for l in mfg.layers)
                    batch = PreparedBatch(
                        mfg=mfg, features=feats, labels=labels,
                        byte_size=_batch_bytes(mfg, fm.cols, len(seeds)),
                        stats=stats, _slot=slot, _pool=pool)
                    if not emit((idx, batch, t1 - t0, t2 - t1)):
                        batch.release()
                        return
                except Exception as exc:  # surfaced to the consumer
                    emit((None, exc, 0.0, 0.0))
                    return

        threads = [threading.Thread(target=worker, daemon=True)
                   for _ in range(cfg.num_workers)]
        for t in threads:
            t.start()

        in_order = cfg.delivery == "in_order"
        reorder: dict[int, PreparedBatch] = {}
        expect = 0
        received = 0
        current: PreparedBatch | None = None
        try:
            while received < nbatches:
                idx, item, ts, tsl = outq.get()
                if idx is None:
                    raise RuntimeError("batch preparation worker failed") from item
                received += 1
                self.report.per_batch.append((idx, ts, tsl))
                self.report.sampling_s += ts
                self.report.slicing_s += tsl
                if in_order:
                    reorder[idx] = item
                    while expect in reorder:
                        if current is not None:
                            current.release()
                        current = reorder.pop(expect)
                        expect += 1
                        yield current
                else:
                    if current is not None:
                        current.release()
                    current = item
                    yield current
        finally:
            stop.set()
            inq.clear()
            if current is not None:
                current.release()
            for b in reorder.values():
                if isinstance(b, PreparedBatch):
                    b.release()
            while True:  # drain so producers blocked on put can exit
                try:
                    _, item, _, _ = outq.get_nowait()
                    if isinstance(item, PreparedBatch):
                        item.release()
                except queue.Empty:
                    break
            for t in threads:
                t.join()
            self.report.both_s = time.perf_counter() - t_start
            self.report.peak_resident = pool.peak_outstanding


def run_epoch_prep(g: CsrGraph, fm: FeatureMatrix, y: LabelVector,
                   plan: EpochPlan, cfg: PrepConfig,
                   global_seed: int) -> EpochPrepRun:
    """Prepare an epoch with P workers; iterate the result for batches."""
    return EpochPrepRun(g, fm, y, plan, cfg, global_seed)


def prep_sweep_csv(g, fm, y, plan, workers_list, fanouts, variant,
                   global_seed: int) -> str:
    """One epoch per worker count; CSV with per-stage totals per P."""
    lines = [PrepReport.csv_header()]
    if len(plan):
        # untimed warm-up so JIT dispatch cost stays out of the first row
        prepare_batch(g, fm, y, plan.batches[0], fanouts, variant, global_seed)
    for p in workers_list:
        cfg = PrepConfig(num_workers=p, fanouts=fanouts, variant=variant)
        run = run_epoch_prep(g, fm, y, plan, cfg, global_seed)
        for _ in run:
            pass
        lines.append(run.report.csv_row())
    return "\n".join(lines) + "\n"
