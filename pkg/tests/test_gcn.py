import numpy as np
import pytest

from src.core.errors import ConfigError, VocabMismatchError
from src.core.scene_types import SceneGraph, Triplet
from src.core.vocab import Vocab
from src.data_processing.graph_builder import AugmentConfig, build_graphs
from src.data_processing.scene_generator import SceneGenConfig, default_priors, generate_dataset
from src.model import autodiff as ad
from src.model.gcn import (GcnConfig, GcnParams, LayerParams, check_shapes, embed_graph, expected_shapes,
                           init_params)
from src.model.network import batch_loss, init_model
from src.model.prediction import HeadConfig, LossWeights


def test_parameter_shapes_follow_config():
    vocab = Vocab.default()
    shapes = expected_shapes(GcnConfig(), vocab)
    assert shapes["gcn.object_table"] == (10, 32)
    assert shapes["gcn.predicate_table"] == (8, 32)
    assert shapes["gcn.layers.2.edge_w1"] == (96, 64)
    assert shapes["gcn.layers.2.edge_w2"] == (64, 96)
    assert shapes["gcn.layers.0.node_w"] == (32, 32)
    assert "gcn.layers.3.edge_w1" not in shapes


def test_init_is_deterministic_and_scaled():
    vocab = Vocab.default()
    cfg = GcnConfig(embed_dim=4, hidden_dim=5, n_layers=2, init_scale=0.05, seed=7)
    first, second = init_params(cfg, vocab).named_arrays(), init_params(cfg, vocab).named_arrays()
    for name, arr in first.items():
        np.testing.assert_array_equal(arr, second[name])
        assert np.all(np.abs(arr) <= 0.05)
    np.testing.assert_array_equal(first["gcn.layers.0.edge_b1"], np.zeros(5))
    other = init_params(GcnConfig(embed_dim=4, hidden_dim=5, n_layers=2, seed=8), vocab).named_arrays()
    assert not np.array_equal(first["gcn.object_table"], other["gcn.object_table"])


def test_zero_init_scale_gives_zero_parameters():
    arrays = init_params(GcnConfig(init_scale=0.0), Vocab.default()).named_arrays()
    assert all(not arr.any() for arr in arrays.values())


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        GcnConfig(embed_dim=0).validate()
    with pytest.raises(ConfigError):
        GcnConfig(init_scale=-1.0).validate()


def test_shape_check_reports_mismatch():
    vocab = Vocab.default()
    cfg = GcnConfig(embed_dim=4, hidden_dim=5, n_layers=1)
    arrays = init_params(cfg, vocab).named_arrays()
    check_shapes(arrays, expected_shapes(cfg, vocab))
    with pytest.raises(VocabMismatchError):
        check_shapes(arrays, expected_shapes(cfg, Vocab.default(5)))


def _values(graph, params):
    obj, pred, _ = embed_graph(graph, params)
    return obj.value, pred.value


def test_graph_without_edges_keeps_input_embeddings(tiny_model):
    graph = SceneGraph((1, 4, 4))
    obj, pred = _values(graph, tiny_model.gcn)
    np.testing.assert_array_equal(obj, tiny_model.gcn.object_table[[1, 4, 4]])
    assert pred.shape == (0, 4)


def test_identity_layer_returns_own_candidates():
    d = 2
    eye3 = np.eye(3 * d)
    layer = LayerParams(eye3, np.zeros(3 * d), eye3, np.zeros(3 * d), np.eye(d), np.zeros(d))
    table = np.array([[0.1, 0.2], [0.3, 0.0], [0.5, 0.7]])
    params = GcnParams(table, np.full((8, d), 0.25), (layer,))
    graph = SceneGraph((0, 1, 2), (Triplet(0, 3, 1),))
    obj, pred = _values(graph, params)
    np.testing.assert_allclose(obj, table, rtol=0, atol=1e-15)
    np.testing.assert_allclose(pred, [[0.25, 0.25]], rtol=0, atol=1e-15)


def test_zero_layers_gives_category_embeddings(vocab):
    params = init_params(GcnConfig(embed_dim=3, n_layers=0, seed=2), vocab)
    graph = SceneGraph((5, 5, 0), (Triplet(0, 1, 2), Triplet(1, 0, 2)))
    obj, pred = _values(graph, params)
    np.testing.assert_array_equal(obj[0], obj[1])
    np.testing.assert_array_equal(pred, params.predicate_table[[1, 0]])


def test_edge_order_does_not_change_node_embeddings(graphs, tiny_model):
    graph = graphs[0]
    reversed_graph = SceneGraph(graph.node_categories, graph.edges[::-1], graph.augmented_flags[::-1])
    obj, pred = _values(graph, tiny_model.gcn)
    obj_r, pred_r = _values(reversed_graph, tiny_model.gcn)
    np.testing.assert_allclose(obj_r, obj, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(pred_r, pred[::-1], rtol=1e-13, atol=1e-15)


def test_node_relabelling_permutes_embeddings(graphs, tiny_model, rng):
    graph = graphs[1]
    perm = rng.permutation(graph.num_nodes)
    categories = [0] * graph.num_nodes
    for old, new in enumerate(perm):
        categories[new] = graph.node_categories[old]
    edges = tuple(Triplet(int(perm[t.subject]), t.predicate, int(perm[t.object])) for t in graph.edges)
    relabelled = SceneGraph(tuple(categories), edges, graph.augmented_flags)
    obj, pred = _values(graph, tiny_model.gcn)
    obj_p, pred_p = _values(relabelled, tiny_model.gcn)
    np.testing.assert_allclose(obj_p[perm], obj, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(pred_p, pred, rtol=1e-12, atol=1e-15)


def test_embedding_gradient_touches_only_used_rows(tiny_model):
    graph = SceneGraph((2, 7, 2))
    obj, _, tape = embed_graph(graph, tiny_model.gcn)
    grads = ad.backward(tape, output=ad.sum_all(obj))
    used = np.abs(grads["gcn.object_table"]).sum(axis=1) > 0
    np.testing.assert_array_equal(np.flatnonzero(used), [2, 7])
    np.testing.assert_array_equal(grads["gcn.object_table"][2], np.full(4, 2.0))
    assert not grads["gcn.predicate_table"].any()


def _check_against_finite_differences(model, scene, graph, n_coords, seed, eps=1e-5):
    weights = LossWeights(1.0, 1.0, 1.0, 1.0)
    _, grads, _ = batch_loss(model, [scene], [graph], weights)
    arrays = model.named_arrays()
    names = sorted(arrays)
    sizes = np.array([arrays[n].size for n in names])
    picker = np.random.default_rng(seed)
    flat_ids = picker.choice(int(sizes.sum()), size=min(n_coords, int(sizes.sum())), replace=False)
    bounds = np.cumsum(sizes)
    for flat in flat_ids:
        k = int(np.searchsorted(bounds, flat, side="right"))
        name = names[k]
        offset = int(flat - (bounds[k] - sizes[k]))
        idx = np.unravel_index(offset, arrays[name].shape)

        def loss_at(delta):
            shifted = {n: a.copy() for n, a in arrays.items()}
            shifted[name][idx] += delta
            return batch_loss(model.with_arrays(shifted), [scene], [graph], weights)[0]

        numeric = (loss_at(eps) - loss_at(-eps)) / (2 * eps)
        analytic = grads[name][idx]
        scale = max(abs(numeric), abs(analytic), 1e-4)
        assert abs(numeric - analytic) / scale < 1e-4, (name, idx, analytic, numeric)


def _random_graphs(n_graphs, seed):
    vocab = Vocab.default()
    cfg = SceneGenConfig(n_scenes=n_graphs, category_priors=default_priors(vocab), mask_side=4, seed=seed,
                         min_objects=3, max_objects=6)
    scenes = generate_dataset(cfg)
    return scenes, build_graphs(scenes, seed, 2, AugmentConfig(enabled=True))


def test_gradients_match_finite_differences(tiny_model):
    scenes, graphs = _random_graphs(2, 21)
    for i, (scene, graph) in enumerate(zip(scenes, graphs)):
        _check_against_finite_differences(tiny_model, scene, graph, n_coords=40, seed=i)


@pytest.mark.slow
def test_gradients_match_finite_differences_many_graphs(vocab):
    model = init_model(vocab, GcnConfig(embed_dim=4, hidden_dim=6, n_layers=2, init_scale=0.3, seed=5),
                       HeadConfig(object_mask_side=4, triplet_mask_side=6, init_scale=0.3))
    scenes, graphs = _random_graphs(10, 9)
    for i, (scene, graph) in enumerate(zip(scenes, graphs)):
        _check_against_finite_differences(model, scene, graph, n_coords=200, seed=100 + i)
