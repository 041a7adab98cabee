"""Mean-aggregation message-passing evaluator.

A deliberately small forward-only model used to check that sampled-MFG
construction plus slicing preserves aggregation semantics: the layer rule
is h_dst = W_self @ h_dst_prev + W_neigh @ mean(h_src_prev over sampled
in-neighbors), with the empty-neighborhood mean defined as zero.  The
update is a sum of two linear maps (equivalent in expressive power to
concatenate-then-linear with fixed weights).  f32 arithmetic throughout.

Three evaluation paths exist on purpose: mfg_forward over local IDs and a
sliced buffer (the production layout), sampled_reference_forward over
global IDs (layout-independent cross-check), and full_forward over the
whole graph with no sampling (the exact semantics at unbounded fanout).
"""

from dataclasses import dataclass

import numpy as np

from .graph import CsrGraph
from .sampler import Mfg


@dataclass(frozen=True)
class LayerWeights:
    w_self: np.ndarray   # (f_out, f_in)
    w_neigh: np.ndarray  # (f_out, f_in)

    def __post_init__(self):
        if self.w_self.shape != self.w_neigh.shape:
            raise ValueError("weight shape mismatch")


def init_weights(f_in: int, f_hidden: int, num_layers: int,
                 seed: int = 0) -> list[LayerWeights]:
    """Chained layer shapes (f_hidden x f_in), then (f_hidden x f_hidden)."""
    rng = np.random.default_rng(seed)
    out = []
    d_in = f_in
    for _ in range(num_layers):
        w1 = rng.uniform(-0.1, 0.1, size=(f_hidden, d_in)).astype(np.float32)
        w2 = rng.uniform(-0.1, 0.1, size=(f_hidden, d_in)).astype(np.float32)
        out.append(LayerWeights(w_self=w1, w_neigh=w2))
        d_in = f_hidden
    return out


def _check_dims(h_cols: int, weights) -> None:
    d = h_cols
    for i, w in enumerate(weights):
        if w.w_self.shape[1] != d:
            raise ValueError(f"layer {i} expects input dim {w.w_self.shape[1]},"
                             f" got {d}")
        d = w.w_self.shape[0]


def _mean_neighbors(h: np.ndarray, indptr: np.ndarray, src_local: np.ndarray,
                    num_dst: int) -> np.ndarray:
    acc = np.zeros((num_dst, h.shape[1]), dtype=np.float32)
    counts = np.diff(indptr).astype(np.float32)
    dst_idx = np.repeat(np.arange(num_dst), np.diff(indptr))
    np.add.at(acc, dst_idx, h[src_local])
    nz = counts > 0
    acc[nz] /= counts[nz, None]
    return acc


def mfg_forward(mfg: Mfg, features: np.ndarray,
                weights: list[LayerWeights]) -> np.ndarray:
    """Evaluate over local IDs; features rows follow mfg.id_map order.

    Returns |seeds| embedding rows in seed order.
    """
    if len(weights) != len(mfg.layers):
        raise ValueError("one weight set per MFG layer required")
    h = np.asarray(features, dtype=np.float32)
    if h.shape[0] != mfg.num_nodes:
        raise ValueError("feature rows must cover the whole id_map")
    _check_dims(h.shape[1], weights)
    for layer, w in zip(mfg.layers, weights):
        neigh = _mean_neighbors(h, layer.indptr, layer.src_local, layer.num_dst)
        h = h[:layer.num_dst] @ w.w_self.T + neigh @ w.w_neigh.T
    return h


def sampled_reference_forward(mfg: Mfg, features_global: np.ndarray,
                              weights: list[LayerWeights]) -> np.ndarray:
    """Same math as mfg_forward, but indexing the global feature matrix.

    Bypasses the sliced local buffer entirely: every edge is resolved to its
    global endpoint through the ID map, so a disagreement with mfg_forward
    pinpoints a local-ID or slicing defect.  Test/validation use only.
    """
    X = np.asarray(features_global, dtype=np.float32)
    gids = mfg.id_map.global_ids
    h = {int(g): X[int(g)].copy() for g in gids}
    _check_dims(X.shape[1], weights)
    for layer, w in zip(mfg.layers, weights):
        new_h = {}
        for dst in range(layer.num_dst):
            g_dst = int(gids[dst])
            lo, hi = int(layer.indptr[dst]), int(layer.indptr[dst + 1])
            if hi > lo:
                srcs = [int(gids[int(s)]) for s in layer.src_local[lo:hi]]
                mean = np.mean([h[s] for s in srcs], axis=0, dtype=np.float32)
            else:
                mean = np.zeros(w.w_neigh.shape[1], dtype=np.float32)
            new_h[g_dst] = (w.w_self @ h[g_dst] + w.w_neigh @ mean).astype(
                np.float32)
        h = new_h
    return np.stack([h[int(g)] for g in mfg.seeds.dst_ids])


def full_forward(g: CsrGraph, X: np.ndarray, weights: list[LayerWeights],
                 dst_ids, num_layers: int | None = None) -> np.ndarray:
    """Exact evaluation over FULL neighborhoods (no sampling), all nodes.

    Each layer is computed once for the whole graph (memoized per layer);
    the requested destination rows are returned at the end.
    """
    if num_layers is None:
        num_layers = len(weights)
    if num_layers < 1:
        raise ValueError("need at least one layer")
    h = np.asarray(X, dtype=np.float32)
    _check_dims(h.shape[1], weights)
    dst_idx = np.repeat(np.arange(g.num_nodes), np.diff(g.indptr))
    counts = g.degrees().astype(np.float32)
    nz = counts > 0
    for w in weights[:num_layers]:
        acc = np.zeros((g.num_nodes, h.shape[1]), dtype=np.float32)
        np.add.at(acc, dst_idx, h[g.indices])
        acc[nz] /= counts[nz, None]
        h = h @ w.w_self.T + acc @ w.w_neigh.T
    return h[np.asarray(dst_ids, dtype=np.int64)]
