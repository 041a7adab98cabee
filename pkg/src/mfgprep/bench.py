"""Hop-replay microbenchmark for the sampler design space.

End-to-end sampling runs are noisy because each hop's input depends on the
previous hop's output.  Instead, a reference trace pins down every hop's
destination list once; each variant then replays the identical hops with
the identical draw streams.  Timing is min-of-R with one warm-up pass;
structural digests guard against a variant silently diverging (a sweep
with any digest mismatch is invalid).  Slicing is excluded here; it is
benchmarked separately by the batch-prep report.
"""

import hashlib
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import BadMagicError, CsrGraph, TruncatedFileError, \
    VersionMismatchError
from .sampler import (FanoutSpec, HopStream, IdMap, SamplerVariant, _run_hop,
                      multihop_mfg)

TRACE_MAGIC = b"TRCE"
TRACE_VERSION = 1


@dataclass(frozen=True)
class TraceRecord:
    batch_id: int
    hop: int
    fanout: int
    dst_ids: np.ndarray  # global IDs, map order


@dataclass(frozen=True)
class Trace:
    graph_checksum: int
    global_seed: int
    records: tuple  # of TraceRecord

    def num_hops(self) -> int:
        return 1 + max((r.hop for r in self.records), default=-1)


def record_trace(g: CsrGraph, plan, fanouts: FanoutSpec, global_seed: int,
                 path=None) -> Trace:
    """Expand every batch once and log each hop's destination list."""
    records = []
    for seeds in plan.batches:
        mfg = multihop_mfg(g, seeds, fanouts, global_seed, SamplerVariant())
        # layers are in consumption order; expansion order is the reverse.
        for hop, layer in enumerate(reversed(mfg.layers)):
            records.append(TraceRecord(
                batch_id=seeds.batch_id, hop=hop,
                fanout=fanouts.per_hop[len(fanouts) - 1 - hop],
                dst_ids=mfg.id_map.global_ids[:layer.num_dst].copy()))
    trace = Trace(graph_checksum=g.checksum(), global_seed=global_seed,
                  records=tuple(records))
    if path is not None:
        save_trace(trace, path)
    return trace


def save_trace(trace: Trace, path) -> None:
    with open(path, "wb") as f:
        f.write(TRACE_MAGIC)
        f.write(struct.pack("<IIQQ", TRACE_VERSION, trace.graph_checksum,
                            trace.global_seed, len(trace.records)))
        for r in trace.records:
            f.write(struct.pack("<IIQQ", r.batch_id, r.hop, r.fanout,
                                len(r.dst_ids)))
            f.write(r.dst_ids.astype("<u8").tobytes())


def load_trace(path) -> Trace:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != TRACE_MAGIC:
            raise BadMagicError(f"bad magic {magic!r}")
        hdr = f.read(24)
        if len(hdr) != 24:
            raise TruncatedFileError("truncated trace header")
        version, checksum, seed, nrec = struct.unpack("<IIQQ", hdr)
        if version != TRACE_VERSION:
            raise VersionMismatchError(f"unsupported trace version {version}")
        records = []
        for _ in range(nrec):
            rh = f.read(24)
            if len(rh) != 24:
                raise TruncatedFileError("truncated trace record")
            batch_id, hop, fanout, n = struct.unpack("<IIQQ", rh)
            buf = f.read(8 * n)
            if len(buf) != 8 * n:
                raise TruncatedFileError("truncated destination list")
            records.append(TraceRecord(
                batch_id=batch_id, hop=hop, fanout=fanout,
                dst_ids=np.frombuffer(buf, dtype="<u8").astype(np.int64)))
    return Trace(graph_checksum=checksum, global_seed=seed,
                 records=tuple(records))


@dataclass
class ReplayResult:
    digest: str
    hop_times: dict  # hop index -> min-of-R seconds


def replay_variant(trace: Trace, g: CsrGraph, variant: SamplerVariant,
                   repetitions: int = 5, warmup: bool = True) -> ReplayResult:
    """Re-run every recorded hop with the recorded streams; time per hop."""
    if trace.graph_checksum != g.checksum():
        raise ValueError("trace checksum does not match graph")

    def one_pass(collect_digest: bool, times: dict | None):
        h = hashlib.blake2b(digest_size=16) if collect_digest else None
        for r in trace.records:
            id_map = IdMap(variant,
                           size_hint=len(r.dst_ids) * (1 + int(r.fanout)))
            id_map.insert(r.dst_ids)
            hs = HopStream(trace.global_seed, r.batch_id, r.hop)
            t0 = time.perf_counter()
            layer = _run_hop(g, id_map, len(r.dst_ids), int(r.fanout), hs,
                             variant)
            dt = time.perf_counter() - t0
            if times is not None:
                times[r.hop] = times.get(r.hop, 0.0) + dt
            if h is not None:
                h.update(np.ascontiguousarray(id_map.global_ids).tobytes())
                h.update(np.ascontiguousarray(layer.indptr).tobytes())
                h.update(np.ascontiguousarray(layer.src_local).tobytes())
        return h.hexdigest() if h else ""

    if not trace.records:
        return ReplayResult(digest="", hop_times={})
    if warmup:
        one_pass(False, None)
    digest = ""
    best: dict = {}
    for rep in range(max(1, repetitions)):
        times: dict = {}
        d = one_pass(rep == 0, times)
        if rep == 0:
            digest = d
        for hop, t in times.items():
            best[hop] = min(best.get(hop, float("inf")), t)
    return ReplayResult(digest=digest, hop_times=best)


class SweepDigestMismatch(RuntimeError):
    pass


@dataclass
class SweepResult:
    baseline: str
    rows: list = field(default_factory=list)  # (variant, hop, time_s, speedup)

    def to_csv(self) -> str:
        lines = ["variant,hop,time_s,speedup_vs_baseline"]
        for v, hop, t, s in self.rows:
            lines.append(f"{v},{hop},{t:.9f},{s:.4f}")
        return "\n".join(lines) + "\n"


def sweep(trace: Trace, g: CsrGraph, variants, baseline: SamplerVariant,
          path=None, repetitions: int = 5) -> SweepResult:
    """Benchmark each variant on the trace; abort on any digest divergence."""
    variants = list(variants)
    if baseline.descriptor not in {v.descriptor for v in variants}:
        raise ValueError("baseline must be among the swept variants")
    base = replay_variant(trace, g, baseline, repetitions)
    result = SweepResult(baseline=baseline.descriptor)
    for v in variants:
        r = (base if v.descriptor == baseline.descriptor
             else replay_variant(trace, g, v, repetitions))
        if r.digest != base.digest:
            raise SweepDigestMismatch(
                f"variant {v.descriptor} diverged from baseline "
                f"{baseline.descriptor}")
        for hop in sorted(r.hop_times):
            t = r.hop_times[hop]
            bt = base.hop_times[hop]
            speedup = bt / t if t > 0 else float("inf")
            result.rows.append((v.descriptor, hop, t, speedup))
    if path is not None:
        with open(path, "w") as f:
            f.write(result.to_csv())
    return result
