"""
Reverse-mode differentiation on a recorded tape of numpy array operations.

Only the primitives the layout network needs are provided. Each recorded
node keeps a forward function (used again by ``Tape.replay``) and a
backward function mapping the output gradient to input gradients.
Scatter-style reductions run in ascending row order so forward and
backward passes are bit-reproducible.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from src.core.errors import TapeError

PROB_EPS = 1e-7


@dataclass
class _Node:
    op: str
    inputs: Tuple[int, ...]
    forward: Optional[Callable]
    backward: Optional[Callable]
    param_name: Optional[str] = None


class Var:
    """Handle to a value recorded on a tape."""

    __slots__ = ("tape", "index")

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    @property
    def value(self):
        return self.tape.values[self.index]

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Var({self.tape.nodes[self.index].op}, shape={self.shape})"


class Tape:
    """Ordered record of primitive operations."""

    def __init__(self):
        self.nodes = []
        self.values = []
        self.params: Dict[str, int] = {}

    def __len__(self):
        return len(self.nodes)

    def _append(self, node, value):
        self.nodes.append(node)
        self.values.append(value)
        return Var(self, len(self.nodes) - 1)

    def param(self, name, array):
        """Leaf holding a trainable array; gradients are reported under name."""
        if name in self.params:
            return Var(self, self.params[name])
        var = self._append(_Node("param", (), None, None, param_name=name), np.asarray(array, dtype=np.float64))
        self.params[name] = var.index
        return var

    def constant(self, array):
        return self._append(_Node("constant", (), None, None), np.asarray(array, dtype=np.float64))

    def record(self, op, inputs, forward, backward):
        for v in inputs:
            if v.tape is not self:
                raise TapeError(f"{op}: input recorded on a different tape")
        value = forward(*(self.values[v.index] for v in inputs))
        return self._append(_Node(op, tuple(v.index for v in inputs), forward, backward), value)

    @property
    def output(self):
        if not self.nodes:
            raise TapeError("empty tape")
        return Var(self, len(self.nodes) - 1)

    def replay(self):
        """Recompute every recorded value from the leaves; returns the last value."""
        values = []
        for node, value in zip(self.nodes, self.values):
            if node.forward is None:
                values.append(value)
            else:
                values.append(node.forward(*(values[i] for i in node.inputs)))
        return values[-1] if values else None


def backward(tape: Tape, loss_grad=1.0, output: Optional[Var] = None):
    """
    Exact gradients of the scalar at the end of the tape (or at output)
    with respect to every registered parameter.
    """
    out = output if output is not None else tape.output
    if np.size(out.value) != 1:
        raise TapeError(f"backward needs a scalar output, got shape {np.shape(out.value)}")

    grads = [None] * (out.index + 1)
    grads[out.index] = np.full(np.shape(out.value), float(loss_grad))
    for idx in range(out.index, -1, -1):
        g = grads[idx]
        node = tape.nodes[idx]
        if g is None or node.backward is None:
            continue
        in_values = [tape.values[i] for i in node.inputs]
        in_grads = node.backward(g, tape.values[idx], *in_values)
        for i, ig in zip(node.inputs, in_grads):
            if ig is None:
                continue
            grads[i] = ig if grads[i] is None else grads[i] + ig

    result = {}
    for name, idx in tape.params.items():
        g = grads[idx] if idx < len(grads) else None
        result[name] = np.zeros_like(tape.values[idx]) if g is None else g
    return result


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


# ---------------------------------------------------------------- primitives

def gather_rows(x: Var, index):
    index = np.asarray(index, dtype=np.int64)

    def fwd(xv):
        return xv[index]

    def bwd(g, out, xv):
        gx = np.zeros_like(xv)
        np.add.at(gx, index, g)
        return (gx,)

    return x.tape.record("gather_rows", (x,), fwd, bwd)


def concat_cols(parts):
    widths = [p.shape[1] for p in parts]
    bounds = np.cumsum([0] + widths)

    def fwd(*vals):
        return np.concatenate(vals, axis=1)

    def bwd(g, out, *vals):
        return tuple(g[:, bounds[k]:bounds[k + 1]] for k in range(len(vals)))

    return parts[0].tape.record("concat_cols", tuple(parts), fwd, bwd)


def slice_cols(x: Var, start, stop):
    def fwd(xv):
        return xv[:, start:stop]

    def bwd(g, out, xv):
        gx = np.zeros_like(xv)
        gx[:, start:stop] = g
        return (gx,)

    return x.tape.record("slice_cols", (x,), fwd, bwd)


def interleave_rows(a: Var, b: Var):
    """Rows a0, b0, a1, b1, ..."""
    def fwd(av, bv):
        out = np.empty((av.shape[0] * 2, av.shape[1]), dtype=np.float64)
        out[0::2] = av
        out[1::2] = bv
        return out

    def bwd(g, out, av, bv):
        return g[0::2], g[1::2]

    return a.tape.record("interleave_rows", (a, b), fwd, bwd)


def scatter_mean(values: Var, index, n_rows, order=None):
    """
    Row i of the output averages the value rows whose index is i (zeros if
    none). Rows are accumulated in the given order, ascending by default.
    """
    index = np.asarray(index, dtype=np.int64)
    order = np.arange(len(index)) if order is None else np.asarray(order, dtype=np.int64)
    counts = np.bincount(index, minlength=n_rows).astype(np.float64)
    safe = np.where(counts > 0, counts, 1.0)

    def fwd(vv):
        total = np.zeros((n_rows, vv.shape[1]), dtype=np.float64)
        np.add.at(total, index[order], vv[order])
        return total / safe[:, None]

    def bwd(g, out, vv):
        return (g[index] / safe[index][:, None],)

    return values.tape.record("scatter_mean", (values,), fwd, bwd)


def select_rows(mask, a: Var, b: Var):
    """Rows of a where mask is true, rows of b elsewhere."""
    keep = np.asarray(mask, dtype=bool)[:, None]

    def fwd(av, bv):
        return np.where(keep, av, bv)

    def bwd(g, out, av, bv):
        return np.where(keep, g, 0.0), np.where(keep, 0.0, g)

    return a.tape.record("select_rows", (a, b), fwd, bwd)


def affine(x: Var, w: Var, b: Var):
    def fwd(xv, wv, bv):
        return xv @ wv + bv

    def bwd(g, out, xv, wv, bv):
        return g @ wv.T, xv.T @ g, g.sum(axis=0)

    return x.tape.record("affine", (x, w, b), fwd, bwd)


def relu(x: Var):
    def fwd(xv):
        return np.maximum(xv, 0.0)

    def bwd(g, out, xv):
        # subgradient 0 at 0
        return (g * (xv > 0.0),)

    return x.tape.record("relu", (x,), fwd, bwd)


def _logistic(xv):
    return 0.5 * (1.0 + np.tanh(0.5 * xv))


def sigmoid(x: Var):
    def fwd(xv):
        return _logistic(xv)

    def bwd(g, out, xv):
        return (g * out * (1.0 - out),)

    return x.tape.record("sigmoid", (x,), fwd, bwd)


def softmax_groups(x: Var, classes):
    """Reshape (n, k*classes) to (n, k, classes) and softmax the last axis."""
    def fwd(xv):
        z = xv.reshape(xv.shape[0], -1, classes)
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    def bwd(g, out, xv):
        gz = out * (g - np.sum(g * out, axis=-1, keepdims=True))
        return (gz.reshape(xv.shape),)

    return x.tape.record("softmax_groups", (x,), fwd, bwd)


def centre_size_to_corners(x: Var):
    """(cx, cy, w, h) rows to (x0, y0, x1, y1) rows."""
    def fwd(xv):
        cx, cy, w, h = xv[:, 0], xv[:, 1], xv[:, 2], xv[:, 3]
        return np.stack([cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0], axis=1)

    def bwd(g, out, xv):
        gx = np.empty_like(xv)
        gx[:, 0] = g[:, 0] + g[:, 2]
        gx[:, 1] = g[:, 1] + g[:, 3]
        gx[:, 2] = (g[:, 2] - g[:, 0]) / 2.0
        gx[:, 3] = (g[:, 3] - g[:, 1]) / 2.0
        return (gx,)

    return x.tape.record("centre_size_to_corners", (x,), fwd, bwd)


def clip(x: Var, lo, hi):
    def fwd(xv):
        return np.clip(xv, lo, hi)

    def bwd(g, out, xv):
        return (g * ((xv > lo) & (xv < hi)),)

    return x.tape.record("clip", (x,), fwd, bwd)


def _repair(xv, eps):
    out = xv.copy()
    fixed = np.zeros_like(xv, dtype=bool)
    for lo, hi in ((0, 2), (1, 3)):
        bad = (out[:, hi] - out[:, lo]) < eps
        if bad.any():
            mid = (out[bad, lo] + out[bad, hi]) / 2.0
            start = np.clip(mid - eps / 2.0, 0.0, 1.0 - eps)
            out[bad, lo] = start
            out[bad, hi] = start + eps
            fixed[bad, lo] = True
            fixed[bad, hi] = True
    return out, fixed


def repair_boxes(x: Var, eps):
    """Inflate degenerate (x0, y0, x1, y1) rows to extent eps; repaired coordinates get no gradient."""
    def fwd(xv):
        return _repair(xv, eps)[0]

    def bwd(g, out, xv):
        return (np.where(_repair(xv, eps)[1], 0.0, g),)

    return x.tape.record("repair_boxes", (x,), fwd, bwd)


def squared_error_rows(pred: Var, target, reduce="mean"):
    """Per-row squared error against a constant target, averaged or summed over columns."""
    target = np.asarray(target, dtype=np.float64)
    scale = 1.0 / target.shape[1] if reduce == "mean" else 1.0

    def fwd(pv):
        d = pv - target
        return np.sum(d * d, axis=1) * scale

    def bwd(g, out, pv):
        return (g[:, None] * 2.0 * (pv - target) * scale,)

    return pred.tape.record("squared_error_rows", (pred,), fwd, bwd)


def bce_rows(probs: Var, target):
    """Per-row mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    target = np.asarray(target, dtype=np.float64)
    n_cols = target.shape[1]

    def fwd(pv):
        p = np.clip(pv, PROB_EPS, 1.0 - PROB_EPS)
        return -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p), axis=1)

    def bwd(g, out, pv):
        p = np.clip(pv, PROB_EPS, 1.0 - PROB_EPS)
        inside = (pv > PROB_EPS) & (pv < 1.0 - PROB_EPS)
        dp = -(target / p - (1.0 - target) / (1.0 - p)) / n_cols
        return (g[:, None] * dp * inside,)

    return probs.tape.record("bce_rows", (probs,), fwd, bwd)


def categorical_ce_rows(probs: Var, labels):
    """Per-row mean categorical cross-entropy; probs (n, cells, classes), labels (n, cells)."""
    labels = np.asarray(labels, dtype=np.int64)
    n, cells = labels.shape
    rows = np.arange(n)[:, None]
    cols = np.arange(cells)[None, :]

    def fwd(pv):
        p = np.clip(pv[rows, cols, labels], PROB_EPS, 1.0 - PROB_EPS)
        return -np.mean(np.log(p), axis=1)

    def bwd(g, out, pv):
        picked = pv[rows, cols, labels]
        p = np.clip(picked, PROB_EPS, 1.0 - PROB_EPS)
        inside = (picked > PROB_EPS) & (picked < 1.0 - PROB_EPS)
        gp = np.zeros_like(pv)
        gp[rows, cols, labels] = -g[:, None] / (p * cells) * inside
        return (gp,)

    return probs.tape.record("categorical_ce_rows", (probs,), fwd, bwd)


def weighted_sum(x: Var, weights):
    weights = np.asarray(weights, dtype=np.float64)

    def fwd(xv):
        return np.asarray(np.dot(xv, weights))

    def bwd(g, out, xv):
        return (g * weights,)

    return x.tape.record("weighted_sum", (x,), fwd, bwd)


def sum_all(x: Var):
    def fwd(xv):
        return np.asarray(np.sum(xv))

    def bwd(g, out, xv):
        return (np.full_like(xv, g),)

    return x.tape.record("sum_all", (x,), fwd, bwd)


def add(*terms):
    def fwd(*vals):
        total = vals[0]
        for v in vals[1:]:
            total = total + v
        return total

    def bwd(g, out, *vals):
        return tuple(g for _ in vals)

    return terms[0].tape.record("add", tuple(terms), fwd, bwd)


def scale(x: Var, factor):
    def fwd(xv):
        return xv * factor

    def bwd(g, out, xv):
        return (g * factor,)

    return x.tape.record("scale", (x,), fwd, bwd)
