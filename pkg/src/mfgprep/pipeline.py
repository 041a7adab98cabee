"""Transfer/compute pipeline model.

Device work is emulated, never executed on real hardware: the virtual mode
schedules batches on an exact deterministic clock, and the live mode
busy-waits the modeled durations on dedicated channel threads.  Blocking
time is attributed the way a training loop perceives it: the time the main
loop spends waiting on each stage, so overlapped work is invisible.
"""

import csv
import io
import json
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TransferModel:
    """Affine host-to-device transfer cost with optional validation round trips."""

    bandwidth: float              # bytes/second at peak
    efficiency: float = 1.0       # fraction of peak actually attained
    base_latency: float = 0.0     # seconds per transfer
    validate_on_transfer: bool = False
    round_trips: int = 2
    rt_latency: float = 50e-6     # seconds per round trip

    def __post_init__(self):
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError("efficiency must be in (0, 1]")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def transfer_time(nbytes: int, m: TransferModel) -> float:
    if nbytes < 0:
        raise ValueError("negative byte count")
    t = m.base_latency + nbytes / (m.bandwidth * m.efficiency)
    if m.validate_on_transfer:
        t += m.round_trips * m.rt_latency
    return t


@dataclass(frozen=True)
class ComputeModel:
    """Affine per-batch device compute cost: alpha + beta*nodes + gamma*edges."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def time(self, num_nodes: int, num_edges: int) -> float:
        t = self.alpha + self.beta * num_nodes + self.gamma * num_edges
        if t < 0:
            raise ValueError("negative compute time")
        return t

    @classmethod
    def fit(cls, stats, times) -> "ComputeModel":
        """Least-squares fit of (alpha, beta, gamma) from (nodes, edges) pairs."""
        A = np.array([[1.0, n, e] for n, e in stats])
        coef, *_ = np.linalg.lstsq(A, np.asarray(times, dtype=float), rcond=None)
        return cls(alpha=float(coef[0]), beta=float(coef[1]), gamma=float(coef[2]))


@dataclass(frozen=True)
class BatchCost:
    """What the pipeline needs to know about one prepared batch."""

    batch_id: int
    nbytes: int
    num_nodes: int
    num_edges: int
    prep_ready: float = 0.0  # virtual time the batch becomes available


@dataclass
class Timeline:
    events: list = field(default_factory=list)  # (batch_id, stage, start, end)
    makespan: float = 0.0
    blocking: dict = field(default_factory=lambda: {"prep": 0.0, "transfer": 0.0,
                                                    "compute": 0.0})
    utilization: dict = field(default_factory=dict)

    def add(self, batch_id: int, stage: str, start: float, end: float):
        self.events.append((batch_id, stage, start, end))

    def stage_intervals(self, stage: str):
        return sorted((s, e, b) for b, st, s, e in self.events if st == stage)

    def check_invariants(self):
        """Channel exclusivity and transfer-before-compute ordering."""
        for stage in ("transfer", "compute"):
            iv = self.stage_intervals(stage)
            for (s0, e0, _), (s1, e1, _) in zip(iv, iv[1:]):
                if s1 < e0 - 1e-12:
                    raise AssertionError(f"overlapping {stage} intervals")
        te = {b: e for b, st, s, e in self.events if st == "transfer"}
        for b, st, s, e in self.events:
            if st == "compute" and s < te[b] - 1e-12:
                raise AssertionError("compute started before transfer finished")

    def _finish(self):
        if self.events:
            self.makespan = max(e for _, _, _, e in self.events)
        for stage in ("transfer", "compute"):
            busy = sum(e - s for _, st, s, e in self.events if st == stage)
            self.utilization[f"{stage}_channel"] = (
                busy / self.makespan if self.makespan else 0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["batch_id", "stage", "start_s", "end_s"])
        for b, st, s, e in self.events:
            w.writerow([b, st, f"{s:.9f}", f"{e:.9f}"])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps({"makespan_s": self.makespan,
                           "blocking": self.blocking,
                           "utilization": self.utilization}, indent=2)


def run_serial(batches, tm: TransferModel, cm: ComputeModel) -> Timeline:
    """Unoverlapped loop: wait for prep, transfer, compute, repeat."""
    tl = Timeline()
    clock = 0.0
    for b in batches:
        start = max(clock, b.prep_ready)
        tl.blocking["prep"] += start - clock
        t = transfer_time(b.nbytes, tm)
        c = cm.time(b.num_nodes, b.num_edges)
        tl.add(b.batch_id, "transfer", start, start + t)
        tl.blocking["transfer"] += t
        tl.add(b.batch_id, "compute", start + t, start + t + c)
        tl.blocking["compute"] += c
        clock = start + t + c
    tl._finish()
    return tl


def run_pipelined(batches, tm: TransferModel, cm: ComputeModel,
                  prefetch_depth: int = 1) -> Timeline:
    """One exclusive transfer channel overlapping one exclusive compute channel.

    transfer(i) starts once batch i is prep-ready, the channel is free, and
    no more than prefetch_depth transfers are in flight beyond the batch
    currently computing; compute(i) starts when its transfer is done and the
    compute channel frees up.
    """
    if prefetch_depth < 1:
        raise ValueError("prefetch_depth must be >= 1")
    batches = list(batches)
    tl = Timeline()
    t_free = 0.0
    c_free = 0.0
    compute_end = {}
    for i, b in enumerate(batches):
        gate = compute_end.get(i - 1 - prefetch_depth, 0.0)
        ts = max(b.prep_ready, t_free, gate)
        te = ts + transfer_time(b.nbytes, tm)
        t_free = te
        cs = max(te, c_free)
        ce = cs + cm.time(b.num_nodes, b.num_edges)
        c_free = ce
        compute_end[i] = ce
        tl.add(b.batch_id, "transfer", ts, te)
        tl.add(b.batch_id, "compute", cs, ce)
        # Blocking as seen by the consuming loop, waiting before compute(i).
        prev_ce = compute_end.get(i - 1, 0.0)
        wait = cs - prev_ce
        prep_part = min(max(b.prep_ready - prev_ce, 0.0), wait)
        tl.blocking["prep"] += prep_part
        tl.blocking["transfer"] += wait - prep_part
        tl.blocking["compute"] += ce - cs
    tl._finish()
    return tl


class _Channel:
    """Worker thread that busy-waits each job's modeled duration."""

    def __init__(self, name: str):
        self._q = queue.Queue()
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name=name)
        self._thread.start()

    def _loop(self):
        while True:
            item = self._q.get()
            if item is None:
                return
            duration, done = item
            deadline = time.perf_counter() + duration
            # Sleep the bulk (lets channels overlap even on few cores),
            # spin the tail for accuracy.
            while True:
                remaining = deadline - time.perf_counter()
                if remaining <= 0.002:
                    break
                time.sleep(remaining - 0.002)
            while time.perf_counter() < deadline:
                pass
            done.set()

    def submit(self, duration: float) -> threading.Event:
        done = threading.Event()
        self._q.put((duration, done))
        return done

    def close(self):
        self._q.put(None)
        self._thread.join()


@dataclass
class LiveReport:
    epoch_s: float = 0.0
    prep_block_s: float = 0.0
    transfer_block_s: float = 0.0
    compute_s: float = 0.0

    @property
    def prep_pct(self) -> float:
        return 100.0 * self.prep_block_s / self.epoch_s if self.epoch_s else 0.0

    @property
    def transfer_pct(self) -> float:
        return 100.0 * self.transfer_block_s / self.epoch_s if self.epoch_s else 0.0

    @property
    def compute_pct(self) -> float:
        return 100.0 * self.compute_s / self.epoch_s if self.epoch_s else 0.0

    def as_dict(self) -> dict:
        return {"epoch_s": self.epoch_s,
                "prep_block_s": self.prep_block_s, "prep_pct": self.prep_pct,
                "transfer_block_s": self.transfer_block_s,
                "transfer_pct": self.transfer_pct,
                "compute_s": self.compute_s, "compute_pct": self.compute_pct}


def run_live(prep_iterable, tm: TransferModel, cm: ComputeModel,
             prefetch_depth: int = 1, overlap: bool = True):
    """Wall-clock pipeline over real prepared batches.

    Transfer and compute run on dedicated channel threads that busy-wait the
    modeled duration.  Returns (Timeline, LiveReport); the report's per-stage
    blocking times are measured at the main loop, so fully overlapped
    transfers contribute nothing.
    """
    tl = Timeline()
    rep = LiveReport()
    transfer_ch = _Channel("transfer-channel")
    compute_ch = _Channel("compute-channel")
    t0 = time.perf_counter()
    now = lambda: time.perf_counter() - t0

    def batch_cost(b):
        return (transfer_time(b.byte_size, tm),
                cm.time(b.num_nodes, b.num_edges))

    it = iter(prep_iterable)
    pending = deque()  # (batch_id, transfer_done_event, transfer_start, c_dur)
    state = {"exhausted": False}

    def refill():
        while not state["exhausted"] and len(pending) < prefetch_depth:
            w0 = now()
            try:
                b = next(it)
            except StopIteration:
                state["exhausted"] = True
                return
            rep.prep_block_s += now() - w0
            tdur, cdur = batch_cost(b)
            ts = now()
            pending.append((b.mfg.seeds.batch_id, transfer_ch.submit(tdur),
                            ts, cdur))

    try:
        while True:
            if not pending:
                refill()
                if not pending:
                    break
            bid, done, ts, cdur = pending.popleft()
            w0 = now()
            done.wait()
            rep.transfer_block_s += now() - w0
            tl.add(bid, "transfer", ts, now())
            cs = now()
            cdone = compute_ch.submit(cdur)
            if overlap:
                refill()  # next transfer proceeds while this batch computes
            w0 = now()
            cdone.wait()
            rep.compute_s += now() - w0
            tl.add(bid, "compute", cs, now())
        rep.epoch_s = now()
    finally:
        transfer_ch.close()
        compute_ch.close()
    tl.blocking = {"prep": rep.prep_block_s, "transfer": rep.transfer_block_s,
                   "compute": rep.compute_s}
    tl._finish()
    return tl, rep


def costs_from_batches(batches, ready_times=None) -> list[BatchCost]:
    """BatchCost list from PreparedBatch-like objects (byte_size/nodes/edges)."""
    out = []
    for i, b in enumerate(batches):
        ready = 0.0 if ready_times is None else ready_times[i]
        bid = b.mfg.seeds.batch_id if hasattr(b, "mfg") else getattr(b, "batch_id", i)
        out.append(BatchCost(batch_id=bid, nbytes=b.byte_size,
                             num_nodes=b.num_nodes, num_edges=b.num_edges,
                             prep_ready=ready))
    return out


def prep_ready_schedule(prep_durations, num_workers: int) -> list[float]:
    """Virtual completion times of batches prepared by a P-worker pool."""
    free = [0.0] * num_workers
    ready = []
    for d in prep_durations:
        w = min(range(num_workers), key=free.__getitem__)
        free[w] += d
        ready.append(free[w])
    return ready


ABLATION_STEPS = ("baseline", "+fast_sampling", "+parallel_prep", "+pipelined")


def ablation_report(batch_costs, prep_costs_baseline, prep_costs_fast,
                    tm: TransferModel, cm: ComputeModel,
                    num_workers: int = 4, prefetch_depth: int = 1) -> list[dict]:
    """Virtual-clock epoch times for the four-step optimization ladder.

    Steps: slow sampler + serial pipeline; fast sampler + serial; fast +
    P-worker prep; fast + parallel prep + pipelined transfers.  Per-batch
    prep costs for the slow and fast samplers are supplied by the caller
    (measured or modeled).
    """
    rows = []
    configs = [
        ("baseline", prep_costs_baseline, 1, False),
        ("+fast_sampling", prep_costs_fast, 1, False),
        ("+parallel_prep", prep_costs_fast, num_workers, False),
        ("+pipelined", prep_costs_fast, num_workers, True),
    ]
    for name, prep_costs, P, pipelined in configs:
        ready = prep_ready_schedule(prep_costs, P)
        costs = [BatchCost(batch_id=b.batch_id, nbytes=b.nbytes,
                           num_nodes=b.num_nodes, num_edges=b.num_edges,
                           prep_ready=r)
                 for b, r in zip(batch_costs, ready)]
        tl = (run_pipelined(costs, tm, cm, prefetch_depth) if pipelined
              else run_serial(costs, tm, cm))
        rows.append({"optimization": name, "epoch_s": tl.makespan})
    return rows
