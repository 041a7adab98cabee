"""Slow, independent reference implementations and the validation suite.

Everything here deliberately avoids the compiled kernels: plain Python
dicts, sets, and loops recompute what the fast paths produce, so a bug in
the kernels cannot hide in its own oracle.  The CLI `validate` subcommand
runs the whole suite on a fresh synthetic instance.
"""

import numpy as np

from . import mpnn
from .graph import CsrGraph, generate_features, generate_labels, synth_graph
from .pipeline import BatchCost, ComputeModel, TransferModel, transfer_time, \
    run_pipelined, run_serial
from .prep import make_epoch_plan, prepare_batch
from .rng import CounterRng, stream_key
from .sampler import FanoutSpec, SamplerVariant, SeedBatch, list_variants, \
    multihop_mfg, sample_neighbors


def sample_positions_oracle(deg: int, d: int, key: int) -> list[int]:
    """Scalar rejection-sampling loop over the keyed stream."""
    if deg <= d:
        return list(range(deg))
    rng = CounterRng(key)
    seen = set()
    out = []
    while len(out) < d:
        pos = rng.next_below(deg)
        if pos in seen:
            continue
        seen.add(pos)
        out.append(pos)
    return out


def multihop_oracle(g: CsrGraph, seeds: SeedBatch, fanouts: FanoutSpec,
                    global_seed: int):
    """Dict-and-list reimplementation of multi-hop MFG construction.

    Returns (global_ids_in_local_order, layers) with each layer a dict
    {num_dst, num_src, indptr, src_local} using plain Python containers.
    """
    local_of = {}
    order = []

    def get_or_insert(gid):
        if gid not in local_of:
            local_of[gid] = len(order)
            order.append(gid)
        return local_of[gid]

    for s in seeds.dst_ids:
        get_or_insert(int(s))
    layers = []
    for hop, fanout in enumerate(reversed(fanouts.per_hop)):
        n_dst = len(order)
        indptr = [0]
        src_local = []
        for pos in range(n_dst):
            v = order[pos]
            lo, hi = int(g.indptr[v]), int(g.indptr[v + 1])
            key = stream_key(global_seed, seeds.batch_id, hop, pos)
            for p in sample_positions_oracle(hi - lo, fanout, key):
                src_local.append(get_or_insert(int(g.indices[lo + p])))
            indptr.append(len(src_local))
        layers.append({"num_dst": n_dst, "num_src": len(order),
                       "indptr": indptr, "src_local": src_local})
    return order, list(reversed(layers))


def bfs_closed_neighborhood(g: CsrGraph, seeds, hops: int) -> set:
    """Seeds plus every node reachable within `hops` edge traversals."""
    frontier = {int(s) for s in seeds}
    seen = set(frontier)
    for _ in range(hops):
        nxt = set()
        for v in frontier:
            nxt.update(int(u) for u in g.neighbors(v))
        frontier = nxt - seen
        seen |= nxt
    return seen


def event_replay_oracle(batches, tm: TransferModel, cm: ComputeModel,
                        prefetch_depth: int | None = None) -> float:
    """Discrete-event makespan via a one-event-at-a-time replay.

    prefetch_depth=None replays the serial loop; otherwise the two-channel
    pipelined discipline.  Independent of the closed-form schedulers.
    """
    batches = list(batches)
    if prefetch_depth is None:
        clock = 0.0
        for b in batches:
            clock = max(clock, b.prep_ready)
            clock += transfer_time(b.nbytes, tm)
            clock += cm.time(b.num_nodes, b.num_edges)
        return clock
    n = len(batches)
    t_start = [None] * n
    t_end = [None] * n
    c_start = [None] * n
    c_end = [None] * n
    # advance whichever action is enabled next, one at a time
    while c_end and c_end[-1] is None:
        progressed = False
        for i, b in enumerate(batches):
            if t_start[i] is None:
                gate = 0.0
                if i - 1 - prefetch_depth >= 0:
                    if c_end[i - 1 - prefetch_depth] is None:
                        continue
                    gate = c_end[i - 1 - prefetch_depth]
                chan = t_end[i - 1] if i > 0 and t_end[i - 1] is not None \
                    else (0.0 if i == 0 else None)
                if chan is None:
                    continue
                t_start[i] = max(b.prep_ready, chan, gate)
                t_end[i] = t_start[i] + transfer_time(b.nbytes, tm)
                progressed = True
            if t_end[i] is not None and c_start[i] is None:
                chan = c_end[i - 1] if i > 0 else 0.0
                if chan is None:
                    continue
                c_start[i] = max(t_end[i], chan)
                c_end[i] = c_start[i] + cm.time(b.num_nodes, b.num_edges)
                progressed = True
        if not progressed:
            raise AssertionError("event replay stalled")
    return c_end[-1] if c_end else 0.0


def naive_gather(data: np.ndarray, ids) -> np.ndarray:
    """Row-by-row scalar gather with f32 conversion."""
    out = np.empty((len(ids), data.shape[1]), dtype=np.float32)
    for i, r in enumerate(ids):
        for j in range(data.shape[1]):
            out[i, j] = np.float32(data[int(r), j])
    return out


def run_validation(n: int = 2000, avg_degree: float = 8.0, seed: int = 1,
                   fanouts: FanoutSpec = FanoutSpec((15, 10, 5)),
                   batch_size: int = 64, hidden: int = 16) -> list[tuple]:
    """Full oracle suite on a synthetic instance; returns (name, ok, detail)."""
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    g = synth_graph(n, avg_degree, 3.0, seed=seed)
    fm = generate_features(n, 8, "f32", seed=seed)
    y = generate_labels(n, 10, seed=seed)
    plan = make_epoch_plan(np.arange(n), batch_size, shuffle_seed=seed)
    seeds = plan.batches[0]

    # cross-variant equality
    mfgs = [multihop_mfg(g, seeds, fanouts, seed, v) for v in list_variants()]
    check("cross_variant_equality",
          len({m.digest() for m in mfgs}) == 1,
          f"{len(mfgs)} variants")

    # kernel output vs pure-python oracle
    order, layers = multihop_oracle(g, seeds, fanouts, seed)
    m = mfgs[0]
    ok = np.array_equal(m.id_map.global_ids, np.array(order))
    for lay, ref in zip(m.layers, layers):
        ok = ok and lay.num_dst == ref["num_dst"] \
            and lay.num_src == ref["num_src"] \
            and np.array_equal(lay.indptr, np.array(ref["indptr"])) \
            and np.array_equal(lay.src_local, np.array(ref["src_local"]))
    check("python_oracle_equality", ok)

    # fanout bound and without-replacement
    ok = True
    for lay, fanout in zip(m.layers, fanouts.per_hop):
        indeg = np.diff(lay.indptr)
        for dst in range(lay.num_dst):
            deg = g.degree(int(m.id_map.global_ids[dst]))
            if indeg[dst] != min(fanout, deg):
                ok = False
    check("fanout_bound", ok)

    # sample_neighbors vs scalar oracle
    ok = True
    for v in range(0, min(200, n)):
        key = stream_key(seed, 0, 0, v)
        got = sample_neighbors(g, v, 3, CounterRng(key))
        want = sample_positions_oracle(g.degree(v), 3, key)
        if list(got) != list(want):
            ok = False
    check("sample_neighbors_oracle", ok)

    # unbounded fanout == BFS neighborhood
    big = FanoutSpec((g.max_degree(),) * 3)
    mb = multihop_mfg(g, seeds, big, seed, SamplerVariant())
    want = bfs_closed_neighborhood(g, seeds.dst_ids, 3)
    check("bfs_expansion", set(int(x) for x in mb.id_map.global_ids) == want)

    # aggregation semantics
    weights = mpnn.init_weights(fm.cols, hidden, 3, seed=seed)
    pb = prepare_batch(g, fm, y, seeds, fanouts, SamplerVariant(), seed)
    out_local = mpnn.mfg_forward(pb.mfg, pb.features, weights)
    out_ref = mpnn.sampled_reference_forward(pb.mfg, fm.data, weights)
    check("local_global_consistency",
          np.max(np.abs(out_local - out_ref)) <= 1e-6)
    pb_full = prepare_batch(g, fm, y, seeds, big, SamplerVariant(), seed)
    out_mfg = mpnn.mfg_forward(pb_full.mfg, pb_full.features, weights)
    out_full = mpnn.full_forward(g, fm.data, weights, seeds.dst_ids)
    check("unbounded_fanout_semantics",
          np.max(np.abs(out_mfg - out_full)) <= 1e-5)

    # slicing vs naive gather
    check("slicing_oracle",
          np.array_equal(pb.features, naive_gather(fm.data,
                                                   pb.mfg.id_map.global_ids)))
    check("label_slicing",
          np.array_equal(pb.labels, y.values[seeds.dst_ids]))

    # pipeline laws
    tm = TransferModel(bandwidth=1e9)
    cm = ComputeModel(alpha=1e-3)
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(20):
        costs = [BatchCost(i, int(rng.integers(1, 10**7)), 10, 10,
                           float(rng.uniform(0, 0.01)))
                 for i in range(int(rng.integers(1, 12)))]
        sim = run_pipelined(costs, tm, cm).makespan
        ref = event_replay_oracle(costs, tm, cm, prefetch_depth=1)
        ser = run_serial(costs, tm, cm).makespan
        ser_ref = event_replay_oracle(costs, tm, cm)
        if abs(sim - ref) > 1e-9 or abs(ser - ser_ref) > 1e-9 or sim > ser + 1e-12:
            ok = False
    check("pipeline_event_oracle", ok)

    return results
