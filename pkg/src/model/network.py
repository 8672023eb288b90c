"""
The layout network: GCN embedding plus prediction heads, run on one scene
graph or on the disjoint union of a minibatch of graphs.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict

import numpy as np

from src.core.scene_types import batch_graphs
from src.core.vocab import Vocab
from src.model import autodiff as ad
from src.model.gcn import GcnConfig, GcnParams, check_shapes, embed_graph, expected_shapes, init_params
from src.model.prediction import (HeadConfig, HeadParams, LayoutPrediction, LayoutTargets, LossWeights, box_rows,
                                  build_targets, head_shapes, head_vars, init_heads, mask_rows, triplet_mask_rows,
                                  triplet_rows, weighted_loss)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayoutModel:
    vocab: Vocab
    gcn_config: GcnConfig
    head_config: HeadConfig
    gcn: GcnParams
    heads: HeadParams

    def named_arrays(self) -> Dict[str, np.ndarray]:
        arrays = dict(self.gcn.named_arrays())
        arrays.update(self.heads.named_arrays())
        return arrays

    def with_arrays(self, arrays):
        """Same configuration, new parameter values."""
        return replace(self, gcn=GcnParams.from_named(arrays, self.gcn_config.n_layers),
                       heads=HeadParams.from_named(arrays))

    def expected_shapes(self):
        return model_shapes(self.vocab, self.gcn_config, self.head_config)

    def check(self):
        check_shapes(self.named_arrays(), self.expected_shapes())
        return self


def model_shapes(vocab, gcn_config, head_config):
    shapes = expected_shapes(gcn_config, vocab)
    shapes.update(head_shapes(head_config, gcn_config.embed_dim))
    return shapes


def init_model(vocab: Vocab, gcn_config: GcnConfig, head_config: HeadConfig) -> LayoutModel:
    gcn_config.validate()
    head_config.validate()
    return LayoutModel(
        vocab=vocab,
        gcn_config=gcn_config,
        head_config=head_config,
        gcn=init_params(gcn_config, vocab),
        heads=init_heads(head_config, gcn_config.embed_dim, gcn_config.seed),
    )


def forward(model: LayoutModel, graph, tape=None, with_triplets=True):
    """
    Record the full forward pass. Returns a dict of output Vars (boxes,
    masks, and when with_triplets and the graph has edges, triplet_masks and
    superboxes) together with the object/predicate embedding Vars.
    """
    obj, pred, tape = embed_graph(graph, model.gcn, tape)
    h = head_vars(tape, model.heads)
    outputs = {
        "objects": obj,
        "predicates": pred,
        "boxes": box_rows(obj, h["head.box_w"], h["head.box_b"]),
        "masks": mask_rows(obj, h["head.mask_w"], h["head.mask_b"]),
    }
    if with_triplets and graph.num_edges:
        s_idx, _, o_idx = graph.edge_arrays()
        t = triplet_rows(obj, pred, s_idx, o_idx)
        outputs["triplet_masks"] = triplet_mask_rows(t, h["head.tmask_w"], h["head.tmask_b"])
        outputs["superboxes"] = box_rows(t, h["head.superbox_w"], h["head.superbox_b"])
    return outputs, tape


def to_prediction(outputs, graph, head_config: HeadConfig) -> LayoutPrediction:
    mo, mt = head_config.object_mask_side, head_config.triplet_mask_side
    n, e = graph.num_nodes, graph.num_edges
    if "triplet_masks" in outputs:
        tmasks = outputs["triplet_masks"].value.reshape(e, mt, mt, 3)
        supers = outputs["superboxes"].value
    else:
        tmasks = np.zeros((e, mt, mt, 3), dtype=np.float64)
        supers = np.zeros((e, 4), dtype=np.float64)
    return LayoutPrediction(
        boxes=outputs["boxes"].value.copy(),
        masks=outputs["masks"].value.reshape(n, mo, mo),
        triplet_masks=tmasks,
        superboxes=supers,
    )


def row_weights(graphs):
    """Per-row factors that average per-scene means over the batch."""
    n_scenes = len(graphs)
    node_w = np.concatenate([np.full(g.num_nodes, 1.0 / (g.num_nodes * n_scenes)) for g in graphs])
    edge_w = [np.full(g.num_edges, 1.0 / (g.num_edges * n_scenes)) for g in graphs if g.num_edges]
    edge_w = np.concatenate(edge_w) if edge_w else np.zeros(0)
    return node_w, edge_w


def batch_loss(model: LayoutModel, scenes, graphs, weights: LossWeights, targets=None):
    """
    Mean over the batch of the per-scene total loss, with exact gradients.
    Returns (loss, grads, term values). targets may be precomputed
    LayoutTargets per scene.
    """
    merged, _, _ = batch_graphs(graphs)
    if targets is None:
        targets = [build_targets(s, g, model.head_config) for s, g in zip(scenes, graphs)]
    stacked = LayoutTargets.concat(targets)
    need_triplets = weights.w_tmask > 0 or weights.w_superbox > 0
    outputs, tape = forward(model, merged, with_triplets=need_triplets)
    node_w, edge_w = row_weights(graphs)
    loss, terms = weighted_loss(outputs, stacked, weights, node_w, edge_w)
    if loss is None:
        grads = {name: np.zeros_like(arr) for name, arr in model.named_arrays().items()}
        return 0.0, grads, {}
    grads = ad.backward(tape, 1.0, loss)
    return float(loss.value), grads, {name: float(v.value) for name, v in terms.items()}
