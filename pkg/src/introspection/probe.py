"""
Linear separability probe.

One-vs-rest linear SVMs trained by full-batch subgradient descent on
    lam/2 |w|^2 + mean_i max(0, 1 - y_i <w, x_i>),    lam = 1 / C
with step 1/(lam t) and the average of the iterates as the final weights.
The bias is an extra constant feature equal to the mean training-vector
norm, so scaling every vector by c and C by 1/c^2 scales the weights by 1/c
and leaves every prediction unchanged.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from src.core.errors import ConfigError, DataError
from src.core.rng import derive_rng
from src.introspection.embeddings import LabelledEmbeddings, top_classes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeConfig:
    C: float = 1.0
    iterations: int = 200
    test_fraction: float = 0.2
    split_seed: int = 0
    export_top_k: int = 5
    mean_top_k: int = 50
    report_top: int = 10

    def validate(self):
        if not self.C > 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if min(self.export_top_k, self.mean_top_k, self.report_top) < 1:
            raise ConfigError("top-k settings must be >= 1")
        return self


@dataclass
class ProbeReport:
    per_class_accuracy: Dict[str, float]
    mean_accuracy: float
    split: dict
    svm: dict
    source: str = "baseline"
    top_class_accuracy: Dict[str, float] = field(default_factory=dict)
    excluded_classes: Dict[str, int] = field(default_factory=dict)
    clustering: Optional[dict] = None

    def to_dict(self):
        payload = {
            "source": self.source,
            "mean_accuracy": self.mean_accuracy,
            "per_class_accuracy": dict(self.per_class_accuracy),
            "top_class_accuracy": dict(self.top_class_accuracy),
            "excluded_classes": dict(self.excluded_classes),
            "split": dict(self.split),
            "svm": dict(self.svm),
        }
        if self.clustering is not None:
            payload["clustering"] = self.clustering
        return payload


def stratified_split(labels, test_fraction, seed):
    """
    Boolean test mask. Each class is shuffled by its own keyed stream and
    contributes max(1, round(test_fraction * n)) test samples.
    """
    labels = np.asarray(labels, dtype=np.int64)
    test = np.zeros(labels.shape[0], dtype=bool)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        n_test = max(1, int(round(test_fraction * members.size)))
        picked = derive_rng(seed, "probe-split", int(c)).permutation(members)[:n_test]
        test[picked] = True
    return test


def fit_one_vs_rest(x, labels, classes, C, iterations):
    """
    Weights (D + 1, K) and the bias feature value for classes (in order).
    """
    lam = 1.0 / C
    norms = np.sqrt(np.sum(x * x, axis=1))
    bias = float(np.mean(norms)) or 1.0
    xa = np.hstack([x, np.full((x.shape[0], 1), bias)])
    y = np.where(labels[:, None] == np.asarray(classes)[None, :], 1.0, -1.0)
    n = x.shape[0]

    w = np.zeros((xa.shape[1], len(classes)))
    w_sum = np.zeros_like(w)
    for t in range(1, iterations + 1):
        active = (y * (xa @ w)) < 1.0
        grad = lam * w - (xa.T @ (y * active)) / n
        w = w - grad / (lam * t)
        w_sum += w
    return w_sum / iterations, bias


def predict(w, bias, x):
    """Index into the class list of the top-scoring SVM; ties go to the lower index."""
    xa = np.hstack([x, np.full((x.shape[0], 1), bias)])
    return np.argmax(xa @ w, axis=1)


def linear_probe(emb: LabelledEmbeddings, split_seed=0, C=1.0, iterations=200, test_fraction=0.2,
                 report_top=10) -> ProbeReport:
    """Per-class test accuracy of one-vs-rest linear SVMs and its unweighted mean."""
    ProbeConfig(C=C, iterations=iterations, test_fraction=test_fraction, report_top=report_top).validate()
    counts = emb.class_counts()
    excluded = {emb.label_names[c]: int(counts[c]) for c in np.flatnonzero((counts > 0) & (counts < 2))}
    classes = [int(c) for c in np.flatnonzero(counts >= 2)]
    if len(classes) < 2:
        raise DataError(f"linear probe needs >= 2 classes with >= 2 samples, got {len(classes)}")
    if excluded:
        logger.info("probe excludes classes with fewer than 2 samples: %s", sorted(excluded))

    kept = emb.subset(np.isin(emb.labels, classes))
    test = stratified_split(kept.labels, test_fraction, split_seed)
    w, bias = fit_one_vs_rest(kept.vectors[~test], kept.labels[~test], classes, C, iterations)
    predicted = np.asarray(classes)[predict(w, bias, kept.vectors[test])]
    truth = kept.labels[test]

    per_class = {}
    for c in classes:
        in_class = truth == c
        per_class[emb.label_names[c]] = float(np.mean(predicted[in_class] == c))
    top = top_classes(kept.labels, report_top, len(emb.label_names))
    report = ProbeReport(
        per_class_accuracy=per_class,
        mean_accuracy=float(np.mean(list(per_class.values()))),
        split={"seed": split_seed, "test_fraction": test_fraction, "n_train": int((~test).sum()),
               "n_test": int(test.sum()), "stratified": True},
        svm={"C": C, "iterations": iterations, "solver": "one-vs-rest hinge subgradient", "bias_feature": bias},
        source=emb.source,
        top_class_accuracy={emb.label_names[c]: per_class[emb.label_names[c]] for c in top},
        excluded_classes=excluded,
    )
    logger.info("probe on %d vectors (%d classes): mean accuracy %.4f", len(kept), len(classes),
                report.mean_accuracy)
    return report
