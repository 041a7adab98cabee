import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfgprep import (CounterRng, FanoutSpec, IdMap, SamplerVariant, SeedBatch,
                     HopStream, from_edge_list, list_variants, multihop_mfg,
                     one_hop_mfg, sample_neighbors, synth_graph)
from mfgprep.reference import (bfs_closed_neighborhood, multihop_oracle,
                               sample_positions_oracle)
from mfgprep.rng import stream_key


def test_take_all_rule(path3):
    rng = CounterRng(stream_key(0, 0, 0, 1))
    got = sample_neighbors(path3, 1, 5, rng)
    assert list(got) == [0, 1]
    assert rng.counter == 0  # no randomness consumed


def test_zero_fanout(path3):
    assert len(sample_neighbors(path3, 1, 0, CounterRng(1))) == 0


def test_rejection_matches_scalar_oracle(small_graph):
    for v in range(300):
        deg = small_graph.degree(v)
        key = stream_key(42, 0, 0, v)
        got = sample_neighbors(small_graph, v, 3, CounterRng(key))
        assert list(got) == sample_positions_oracle(deg, 3, key)


def test_sampled_positions_distinct(small_graph):
    rng = np.random.default_rng(5)
    for _ in range(500):
        v = int(rng.integers(small_graph.num_nodes))
        d = int(rng.integers(0, 12))
        key = stream_key(7, 1, 2, v)
        pos = sample_neighbors(small_graph, v, d, CounterRng(key))
        assert len(pos) == min(d, small_graph.degree(v))
        assert len(set(pos.tolist())) == len(pos)


def test_one_hop_tiny_example():
    # node 7 with neighbors {2, 9}: take-all, id_map grows in CSR order
    edges = [(7, 2), (7, 9)]
    g = from_edge_list(edges, 10)
    seeds = SeedBatch(0, np.array([7]))
    id_map = IdMap(SamplerVariant())
    id_map.insert(seeds.dst_ids)
    layer = one_hop_mfg(g, seeds, 5, HopStream(0, 0, 0), SamplerVariant(),
                        id_map)
    assert list(id_map.global_ids) == [7, 2, 9]
    assert layer.num_dst == 1 and layer.num_src == 3
    assert list(layer.indptr) == [0, 2]
    assert list(layer.src_local) == [1, 2]


def test_one_hop_isolated_dst():
    g = from_edge_list([(0, 1)], 3)
    id_map = IdMap(SamplerVariant())
    id_map.insert(np.array([2]))
    layer = one_hop_mfg(g, SeedBatch(0, np.array([2])), 4, HopStream(0, 0, 0),
                        SamplerVariant(), id_map)
    assert layer.num_dst == 1 and layer.num_edges == 0


@pytest.mark.parametrize("variant", list_variants(),
                         ids=lambda v: v.descriptor)
def test_all_variants_equal(small_graph, seeds64, fanouts355, variant):
    base = multihop_mfg(small_graph, seeds64, fanouts355, 42, SamplerVariant())
    got = multihop_mfg(small_graph, seeds64, fanouts355, 42, variant)
    assert got.structurally_equal(base)


def test_matches_pure_python_oracle(small_graph, seeds64, fanouts355):
    mfg = multihop_mfg(small_graph, seeds64, fanouts355, 9, SamplerVariant())
    order, layers = multihop_oracle(small_graph, seeds64, fanouts355, 9)
    assert list(mfg.id_map.global_ids) == order
    for lay, ref in zip(mfg.layers, layers):
        assert lay.num_dst == ref["num_dst"]
        assert lay.num_src == ref["num_src"]
        assert list(lay.indptr) == ref["indptr"]
        assert list(lay.src_local) == ref["src_local"]


def test_fanout_bound_exact(small_graph, seeds64, fanouts355):
    mfg = multihop_mfg(small_graph, seeds64, fanouts355, 3, SamplerVariant())
    for layer, fanout in zip(mfg.layers, fanouts355.per_hop):
        indeg = np.diff(layer.indptr)
        for dst in range(layer.num_dst):
            deg = small_graph.degree(int(mfg.id_map.global_ids[dst]))
            assert indeg[dst] == min(fanout, deg)


def test_layer_chaining(small_graph, seeds64, fanouts355):
    mfg = multihop_mfg(small_graph, seeds64, fanouts355, 3, SamplerVariant())
    assert mfg.layers[-1].num_dst == len(seeds64)
    for outer, inner in zip(mfg.layers, mfg.layers[1:]):
        assert outer.num_dst == inner.num_src
    assert mfg.layers[0].num_src == mfg.id_map.size
    # destination-first: seeds occupy locals 0..len-1 in input order
    assert np.array_equal(mfg.id_map.global_ids[:len(seeds64)],
                          seeds64.dst_ids)


def test_single_hop_chain_equals_one_hop(small_graph, seeds64):
    mfg = multihop_mfg(small_graph, seeds64, FanoutSpec((4,)), 5,
                       SamplerVariant())
    id_map = IdMap(SamplerVariant())
    id_map.insert(seeds64.dst_ids)
    layer = one_hop_mfg(small_graph, seeds64, 4, HopStream(5, 0, 0),
                        SamplerVariant(), id_map)
    assert mfg.layers[0].structurally_equal(layer)
    assert np.array_equal(mfg.id_map.global_ids, id_map.global_ids)


def test_unbounded_fanout_is_bfs(small_graph, seeds64):
    d = small_graph.max_degree()
    mfg = multihop_mfg(small_graph, seeds64, FanoutSpec((d, d, d)), 0,
                       SamplerVariant())
    want = bfs_closed_neighborhood(small_graph, seeds64.dst_ids, 3)
    assert {int(x) for x in mfg.id_map.global_ids} == want


def test_determinism_across_runs(small_graph, seeds64, fanouts355):
    a = multihop_mfg(small_graph, seeds64, fanouts355, 77, SamplerVariant())
    b = multihop_mfg(small_graph, seeds64, fanouts355, 77, SamplerVariant())
    assert a.digest() == b.digest()
    c = multihop_mfg(small_graph, seeds64, fanouts355, 78, SamplerVariant())
    assert a.digest() != c.digest()


def test_list_variants():
    vs = list_variants()
    descs = [v.descriptor for v in vs]
    assert len(vs) == 18
    assert len(set(descs)) == 18
    assert "flat_probing/vector_set/fused" in descs
    assert list_variants() == vs  # stable order


def test_variant_descriptor_round_trip():
    for v in list_variants():
        assert SamplerVariant.from_descriptor(v.descriptor) == v
    with pytest.raises(ValueError):
        SamplerVariant.from_descriptor("nope")
    with pytest.raises(ValueError):
        SamplerVariant.from_descriptor("std_hash/hash_set/maybe")


def test_id_map_compactness(small_graph, seeds64, fanouts355):
    mfg = multihop_mfg(small_graph, seeds64, fanouts355, 1, SamplerVariant())
    gids = mfg.id_map.global_ids
    assert len(set(gids.tolist())) == len(gids)
    for local in (0, len(gids) // 2, len(gids) - 1):
        assert mfg.id_map.local_of(mfg.id_map.global_of(local)) == local


def test_seed_batch_rejects_duplicates():
    with pytest.raises(ValueError):
        SeedBatch(0, np.array([1, 1, 2]))


@given(st.integers(0, 2**32), st.integers(1, 50), st.integers(0, 60))
@settings(max_examples=80, deadline=None)
def test_sampling_invariants_property(key, deg, d):
    got = sample_positions_oracle(deg, d, key)
    assert len(got) == min(deg, d)
    assert len(set(got)) == len(got)
    assert all(0 <= p < deg for p in got)


def test_multi_edge_slots_can_repeat_neighbor():
    # node 0 has two parallel slots to node 1; take-all keeps both
    g = from_edge_list([(0, 1), (0, 1)], 2)
    id_map = IdMap(SamplerVariant())
    id_map.insert(np.array([0]))
    layer = one_hop_mfg(g, SeedBatch(0, np.array([0])), 5, HopStream(0, 0, 0),
                        SamplerVariant(), id_map)
    assert list(layer.src_local) == [1, 1]
