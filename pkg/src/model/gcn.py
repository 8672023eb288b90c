"""
Graph convolution over scene graphs.

Each layer sends every triple (subject, predicate, object) through an edge
MLP (affine -> ReLU -> affine) producing a candidate vector for the
subject, a new predicate vector and a candidate for the object. A node's
new vector is a node-update MLP (affine -> ReLU) applied to the mean of
its candidates; nodes in no edge keep their vector.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from src.core.errors import ConfigError, VocabMismatchError
from src.core.rng import derive_rng
from src.core.scene_types import SceneGraph
from src.core.vocab import Vocab
from src.model import autodiff as ad

logger = logging.getLogger(__name__)

LAYER_FIELDS = ("edge_w1", "edge_b1", "edge_w2", "edge_b2", "node_w", "node_b")


@dataclass(frozen=True)
class GcnConfig:
    embed_dim: int = 32
    hidden_dim: int = 64
    n_layers: int = 3
    init_scale: float = 0.05
    seed: int = 0

    def validate(self):
        if self.embed_dim < 1 or self.hidden_dim < 1 or self.n_layers < 0:
            raise ConfigError("embed_dim and hidden_dim must be >= 1, n_layers >= 0")
        if self.init_scale < 0:
            raise ConfigError(f"init_scale must be >= 0, got {self.init_scale}")
        return self

    def to_dict(self):
        return {"embed_dim": self.embed_dim, "hidden_dim": self.hidden_dim, "n_layers": self.n_layers,
                "init_scale": self.init_scale, "seed": self.seed}


@dataclass(frozen=True)
class LayerParams:
    edge_w1: np.ndarray
    edge_b1: np.ndarray
    edge_w2: np.ndarray
    edge_b2: np.ndarray
    node_w: np.ndarray
    node_b: np.ndarray


@dataclass(frozen=True)
class GcnParams:
    object_table: np.ndarray
    predicate_table: np.ndarray
    layers: Tuple[LayerParams, ...]

    def named_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {"gcn.object_table": self.object_table, "gcn.predicate_table": self.predicate_table}
        for l, layer in enumerate(self.layers):
            for name in LAYER_FIELDS:
                arrays[f"gcn.layers.{l}.{name}"] = getattr(layer, name)
        return arrays

    @classmethod
    def from_named(cls, arrays, n_layers):
        layers = tuple(
            LayerParams(**{name: arrays[f"gcn.layers.{l}.{name}"] for name in LAYER_FIELDS})
            for l in range(n_layers)
        )
        return cls(arrays["gcn.object_table"], arrays["gcn.predicate_table"], layers)


def expected_shapes(cfg: GcnConfig, vocab: Vocab):
    d, h = cfg.embed_dim, cfg.hidden_dim
    shapes = {"gcn.object_table": (vocab.num_categories, d), "gcn.predicate_table": (vocab.num_predicates, d)}
    for l in range(cfg.n_layers):
        shapes.update({
            f"gcn.layers.{l}.edge_w1": (3 * d, h),
            f"gcn.layers.{l}.edge_b1": (h,),
            f"gcn.layers.{l}.edge_w2": (h, 3 * d),
            f"gcn.layers.{l}.edge_b2": (3 * d,),
            f"gcn.layers.{l}.node_w": (d, d),
            f"gcn.layers.{l}.node_b": (d,),
        })
    return shapes


def check_shapes(arrays, shapes):
    for name, shape in shapes.items():
        if name not in arrays:
            raise VocabMismatchError(f"missing parameter {name}")
        if tuple(arrays[name].shape) != tuple(shape):
            raise VocabMismatchError(f"parameter {name} has shape {arrays[name].shape}, expected {shape}")
        if not np.all(np.isfinite(arrays[name])):
            raise VocabMismatchError(f"parameter {name} has non-finite values")


def uniform_init(rng, shapes, scale):
    """Weights uniform in [-scale, scale] in name order; biases (1-d, non-table) zero."""
    arrays = {}
    for name, shape in shapes.items():
        is_bias = len(shape) == 1
        if is_bias or scale == 0:
            arrays[name] = np.zeros(shape, dtype=np.float64)
        else:
            arrays[name] = rng.uniform(-scale, scale, size=shape)
    return arrays


def init_params(cfg: GcnConfig, vocab: Vocab) -> GcnParams:
    cfg.validate()
    arrays = uniform_init(derive_rng(cfg.seed, "init", "gcn"), expected_shapes(cfg, vocab), cfg.init_scale)
    return GcnParams.from_named(arrays, cfg.n_layers)


def candidate_order(s_idx, p_idx, o_idx):
    """
    Accumulation order for the interleaved (subject, object) candidate rows:
    by receiving node, then by the triple itself, so the result does not
    depend on how the edge list is ordered.
    """
    n_edges = len(s_idx)
    node = np.empty(2 * n_edges, dtype=np.int64)
    node[0::2], node[1::2] = s_idx, o_idx
    role = np.tile([0, 1], n_edges)
    s2, p2, o2 = (np.repeat(a, 2) for a in (s_idx, p_idx, o_idx))
    return node, np.lexsort((role, o2, p2, s2, node))


def gcn_layer(node_vecs, pred_vecs, edges, layer):
    """
    One graph convolution step on tape variables.
    edges is (s_idx, p_idx, o_idx); layer maps LAYER_FIELDS to tape Vars.
    """
    s_idx, p_idx, o_idx = (np.asarray(a, dtype=np.int64) for a in edges)
    if len(s_idx) == 0:
        return node_vecs, pred_vecs
    d = node_vecs.shape[1]
    n = node_vecs.shape[0]

    triples = ad.concat_cols([ad.gather_rows(node_vecs, s_idx), pred_vecs, ad.gather_rows(node_vecs, o_idx)])
    hidden = ad.relu(ad.affine(triples, layer["edge_w1"], layer["edge_b1"]))
    out = ad.affine(hidden, layer["edge_w2"], layer["edge_b2"])
    cand_s = ad.slice_cols(out, 0, d)
    new_pred = ad.slice_cols(out, d, 2 * d)
    cand_o = ad.slice_cols(out, 2 * d, 3 * d)

    receivers, order = candidate_order(s_idx, p_idx, o_idx)
    pooled = ad.scatter_mean(ad.interleave_rows(cand_s, cand_o), receivers, n, order=order)
    updated = ad.relu(ad.affine(pooled, layer["node_w"], layer["node_b"]))
    has_candidates = np.bincount(receivers, minlength=n) > 0
    return ad.select_rows(has_candidates, updated, node_vecs), new_pred


def embed_graph(graph: SceneGraph, params: GcnParams, tape=None):
    """
    Object embeddings (n x D) and predicate embeddings (|edges| x D) as tape
    variables, plus the tape that recorded them.
    """
    tape = tape if tape is not None else ad.Tape()
    named = {name: tape.param(name, arr) for name, arr in params.named_arrays().items()}
    s_idx, p_idx, o_idx = graph.edge_arrays()

    obj = ad.gather_rows(named["gcn.object_table"], np.asarray(graph.node_categories, dtype=np.int64))
    pred = ad.gather_rows(named["gcn.predicate_table"], p_idx)
    for l in range(len(params.layers)):
        layer = {name: named[f"gcn.layers.{l}.{name}"] for name in LAYER_FIELDS}
        obj, pred = gcn_layer(obj, pred, (s_idx, p_idx, o_idx), layer)
    return obj, pred, tape
