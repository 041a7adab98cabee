import numpy as np
import pytest

from mfgprep import (FanoutSpec, SeedBatch, from_edge_list, generate_features,
                     generate_labels, synth_graph)


@pytest.fixture(scope="session")
def path3():
    # 0 - 1 - 2 undirected path
    return from_edge_list([(0, 1), (1, 2)], 3, make_undirected=True)


@pytest.fixture(scope="session")
def small_graph():
    return synth_graph(1000, 8, 3.0, seed=13)


@pytest.fixture(scope="session")
def small_features(small_graph):
    return generate_features(small_graph.num_nodes, 8, "f32", seed=13)


@pytest.fixture(scope="session")
def small_labels(small_graph):
    return generate_labels(small_graph.num_nodes, 7, seed=13)


@pytest.fixture
def seeds64(small_graph):
    rng = np.random.default_rng(99)
    ids = rng.choice(small_graph.num_nodes, size=64, replace=False)
    return SeedBatch(batch_id=0, dst_ids=ids)


@pytest.fixture(scope="session")
def fanouts355():
    return FanoutSpec((15, 10, 5))
