"""
Model checkpoints as versioned JSON.
Arrays are stored flat with their shapes; identical models give identical bytes.
"""
import logging

import numpy as np

from src.core.errors import ConfigError, DataError, VocabMismatchError
from src.core.storage import read_json, write_json
from src.core.vocab import Vocab
from src.model.gcn import GcnConfig, GcnParams, check_shapes
from src.model.network import LayoutModel, model_shapes
from src.model.prediction import HeadConfig, HeadParams

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "triplet-layout-checkpoint"
CHECKPOINT_VERSION = 1


def checkpoint_payload(model: LayoutModel, extra=None):
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "vocab": model.vocab.to_dict(),
        "gcn_config": model.gcn_config.to_dict(),
        "head_config": model.head_config.to_dict(),
        "extra": extra or {},
        "arrays": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in np.ravel(arr)]}
            for name, arr in model.named_arrays().items()
        },
    }


def save_checkpoint(path, model: LayoutModel, extra=None):
    write_json(path, checkpoint_payload(model, extra))
    logger.info("saved checkpoint %s", path)
    return path


def load_checkpoint(path, vocab: Vocab = None):
    """
    Read a checkpoint and validate every array against its configuration.
    When vocab is given (the data's vocabulary) it must equal the stored one.
    Returns (model, extra).
    """
    payload = read_json(path)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    try:
        stored_vocab = Vocab.from_dict(payload["vocab"])
        gcn_config = GcnConfig(**payload["gcn_config"]).validate()
        head_config = HeadConfig(**payload["head_config"]).validate()
        arrays = {
            name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in payload["arrays"].items()
        }
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise DataError(f"{path}: malformed checkpoint ({exc})") from exc

    if vocab is not None and vocab.object_categories != stored_vocab.object_categories:
        raise VocabMismatchError(
            f"{path}: checkpoint categories {list(stored_vocab.object_categories)} "
            f"do not match data categories {list(vocab.object_categories)}")

    check_shapes(arrays, model_shapes(stored_vocab, gcn_config, head_config))
    model = LayoutModel(stored_vocab, gcn_config, head_config,
                        GcnParams.from_named(arrays, gcn_config.n_layers), HeadParams.from_named(arrays))
    logger.info("loaded checkpoint %s (%d arrays)", path, len(arrays))
    return model, payload.get("extra", {})
