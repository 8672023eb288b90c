"""
File exports for external projection and plotting tools.
"""
import logging

import numpy as np
import pandas as pd

from src.core.errors import DataError
from src.core.storage import read_csv, write_csv, write_json
from src.introspection.embeddings import LabelledEmbeddings, filter_top

logger = logging.getLogger(__name__)


def embeddings_frame(emb: LabelledEmbeddings):
    frame = pd.DataFrame(emb.vectors, columns=[f"v{d}" for d in range(emb.dim)])
    frame.insert(0, "category_name", [emb.label_names[c] for c in emb.labels])
    frame.insert(0, "label", emb.labels)
    return frame


def export_embeddings(emb: LabelledEmbeddings, path, top_k=None):
    """CSV label,category_name,v0..v{D-1}; top_k keeps only the most frequent classes."""
    if top_k is not None:
        emb = filter_top(emb, top_k)
    write_csv(path, embeddings_frame(emb))
    logger.info("wrote %d embeddings to %s", len(emb), path)
    return path


def read_embeddings(path, label_names, source="baseline") -> LabelledEmbeddings:
    frame = read_csv(path)
    columns = [c for c in frame.columns if c.startswith("v")]
    if list(frame.columns[:2]) != ["label", "category_name"] or not columns:
        raise DataError(f"{path}: expected columns label,category_name,v0,...")
    return LabelledEmbeddings(frame[columns].to_numpy(dtype=np.float64), frame["label"].to_numpy(),
                              label_names, source)


def write_heatmap(path, labels, dist, leaf_order):
    """Distance matrix as CSV with rows and columns in dendrogram leaf order."""
    order = list(leaf_order)
    names = [labels[i] for i in order]
    frame = pd.DataFrame(np.asarray(dist)[np.ix_(order, order)], columns=names)
    frame.insert(0, "category", names)
    return write_csv(path, frame)


def write_cluster_tree(path, tree):
    return write_json(path, tree.to_dict(), indent=2)


def write_probe_report(path, report):
    return write_json(path, report.to_dict(), indent=2)
