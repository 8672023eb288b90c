import json

import numpy as np
import pandas as pd
import pytest

from src.core.errors import DataError
from src.core.scene_types import SceneGraph
from src.introspection.clustering import agglomerate
from src.introspection.embeddings import (LabelledEmbeddings, collect_embeddings, collect_predicate_embeddings,
                                         filter_top, top_classes)
from src.introspection.export import (export_embeddings, read_embeddings, write_cluster_tree, write_heatmap)

NAMES = tuple(f"c{i}" for i in range(7))


def _embeddings(rng):
    labels = np.repeat(np.arange(7), [9, 8, 7, 6, 5, 4, 3])
    return LabelledEmbeddings(rng.normal(size=(len(labels), 3)), labels, NAMES)


def test_export_writes_header_plus_one_row_per_vector(tmp_path, rng):
    emb = _embeddings(rng)
    path = export_embeddings(emb, tmp_path / "embeddings.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == len(emb) + 1
    assert lines[0] == "label,category_name,v0,v1,v2"


def test_top_k_export_keeps_most_frequent_classes(tmp_path, rng):
    emb = _embeddings(rng)
    frame = pd.read_csv(export_embeddings(emb, tmp_path / "top.csv", top_k=5))
    assert sorted(frame["label"].unique()) == [0, 1, 2, 3, 4]
    assert len(frame) == 9 + 8 + 7 + 6 + 5


def test_exported_vectors_read_back_exactly(tmp_path, rng):
    emb = _embeddings(rng)
    back = read_embeddings(export_embeddings(emb, tmp_path / "e.csv"), NAMES)
    np.testing.assert_array_equal(back.vectors, emb.vectors)
    np.testing.assert_array_equal(back.labels, emb.labels)


def test_top_classes_break_count_ties_by_label():
    assert top_classes([3, 3, 1, 1, 2], 2) == [1, 3]
    assert filter_top(LabelledEmbeddings(np.zeros((5, 1)), [3, 3, 1, 1, 2], NAMES), 1).labels.tolist() == [1, 1]


def test_heatmap_follows_leaf_order(tmp_path):
    dist = np.array([[0.0, 3.0, 4.0], [3.0, 0.0, 1.0], [4.0, 1.0, 0.0]])
    frame = pd.read_csv(write_heatmap(tmp_path / "heat.csv", ["a", "b", "c"], dist, [2, 0, 1]))
    assert list(frame.columns) == ["category", "c", "a", "b"]
    assert frame["category"].tolist() == ["c", "a", "b"]
    assert frame["a"].tolist() == [4.0, 0.0, 3.0]


def test_cluster_tree_json(tmp_path):
    tree = agglomerate(np.array([[0.0, 2.0], [2.0, 0.0]]), labels=["x", "y"])
    payload = json.loads(write_cluster_tree(tmp_path / "tree.json", tree).read_text())
    assert payload == {"merges": [[0, 1, 2.0]], "leaf_order": [0, 1], "labels": ["x", "y"]}


def test_collected_embeddings_cover_every_node(graphs, tiny_model):
    emb = collect_embeddings(graphs, tiny_model, source="triplet")
    assert len(emb) == sum(g.num_nodes for g in graphs)
    assert emb.dim == tiny_model.gcn_config.embed_dim
    assert emb.label_names == tiny_model.vocab.object_categories


def test_predicate_embeddings_are_labelled_by_predicate(graphs, tiny_model):
    emb = collect_predicate_embeddings(graphs, tiny_model)
    assert len(emb) == sum(g.num_edges for g in graphs)
    expected = [t.predicate for g in graphs for t in g.edges]
    assert emb.labels.tolist() == expected
    assert emb.label_names == tiny_model.vocab.predicates


def test_predicate_embeddings_need_an_edge(tiny_model):
    with pytest.raises(DataError):
        collect_predicate_embeddings([SceneGraph((0, 1))], tiny_model)
