"""The Tesla classifier in numpy: forward pass, exact gradients, FLOP counts.

Pipeline per gesture::

    TF-Net 3x3 transform -> L x TeslaConv -> per-point MLP -> global max
    -> MLP classifier -> logits

A TeslaConv layer builds the temporal KNN graph on the (untransformed)
coordinates, computes an edge message ``MLP([h_i, h_j - h_i])`` for every
edge ``j -> i``, runs multi-head self-attention over the messages arriving
at each node, and max-aggregates the attended messages.

Everything runs in float64 in canonical point order, so results are
bitwise independent of the order in which points are stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import GestureSample
from .graph import GraphConfig, TemporalGraph, canonical_order, temporal_knn

SLOPE = 0.2
CHECKPOINT_VERSION = 1


class TraceError(RuntimeError):
    """A forward trace no longer matches the parameters it was made with."""


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int = 8
    k: int = 32
    alpha: float = 10.0
    layers: int = 1
    message_width: int = 64
    heads: int = 8
    pooled_width: int = 1024
    classifier_widths: tuple = (512, 256)
    tfnet_widths: tuple = (64, 128, 64)
    attention: bool = True
    temporal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "classifier_widths", tuple(self.classifier_widths))
        object.__setattr__(self, "tfnet_widths", tuple(self.tfnet_widths))
        if self.message_width % self.heads:
            raise ValueError("message_width must be divisible by heads")
        if self.layers < 1:
            raise ValueError("need at least one TeslaConv layer")
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if len(self.tfnet_widths) != 3:
            raise ValueError("tfnet_widths must list three widths")
        GraphConfig(self.k, self.alpha)

    @property
    def graph(self) -> GraphConfig:
        return GraphConfig(self.k, self.alpha)

    @property
    def head_dim(self) -> int:
        return self.message_width // self.heads

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classifier_widths"] = list(self.classifier_widths)
        d["tfnet_widths"] = list(self.tfnet_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


PRESETS = {
    "tesla": {"k": 32, "alpha": 10.0, "layers": 1},
    "tesla-v": {"k": 2, "alpha": 10.0, "layers": 1},
}


def tiny_config(**overrides) -> ModelConfig:
    """Small model used for gradient checking."""
    kw = dict(
        num_classes=3, k=3, alpha=10.0, message_width=8, heads=2,
        pooled_width=16, classifier_widths=(12, 10), tfnet_widths=(8, 12, 8),
    )
    kw.update(overrides)
    return ModelConfig(**kw)


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple]:
    t1, t2, t3 = cfg.tfnet_widths
    fo = cfg.message_width
    shapes = {
        "tfnet.conv1.W": (3, t1), "tfnet.conv1.b": (t1,),
        "tfnet.conv2.W": (t1, t2), "tfnet.conv2.b": (t2,),
        "tfnet.fc1.W": (t2, t3), "tfnet.fc1.b": (t3,),
        "tfnet.fc2.W": (t3, 9), "tfnet.fc2.b": (9,),
    }
    d = 3
    for l in range(cfg.layers):
        p = f"conv{l}."
        shapes.update({
            p + "msg1.W": (2 * d, fo), p + "msg1.b": (fo,),
            p + "msg2.W": (fo, fo), p + "msg2.b": (fo,),
        })
        if cfg.attention:
            # per-head projections stored side by side: head b owns columns
            # b*fo/m:(b+1)*fo/m of WQ, WK and WV
            for w in ("WQ", "WK", "WV", "WO"):
                shapes[p + "attn." + w] = (fo, fo)
        d = fo
    shapes["pool.W"] = (fo, cfg.pooled_width)
    shapes["pool.b"] = (cfg.pooled_width,)
    widths = [cfg.pooled_width, *cfg.classifier_widths, cfg.num_classes]
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        shapes[f"cls{i}.W"] = (a, b)
        shapes[f"cls{i}.b"] = (b,)
    return shapes


class ModelParameters:
    """Named float64 tensors plus the config they were built for.

    ``version`` increases on every in-place update, which lets a forward
    trace detect that the weights changed underneath it.
    """

    def __init__(self, cfg: ModelConfig, tensors: dict[str, np.ndarray]):
        shapes = parameter_shapes(cfg)
        if set(shapes) != set(tensors):
            missing = sorted(set(shapes) - set(tensors))
            extra = sorted(set(tensors) - set(shapes))
            raise CheckpointError(f"tensor names mismatch: missing {missing}, unexpected {extra}")
        for name, shape in shapes.items():
            if tuple(tensors[name].shape) != shape:
                raise CheckpointError(f"{name}: shape {tensors[name].shape} != {shape}")
        self.config = cfg
        self.tensors = {name: np.asarray(tensors[name], dtype=np.float64) for name in shapes}
        self.version = 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    @property
    def size(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def copy(self) -> "ModelParameters":
        return ModelParameters(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def bump(self) -> None:
        self.version += 1

    def to_json(self) -> str:
        doc = {
            "format_version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "tensors": {
                name: {"shape": list(t.shape), "data": t.ravel().tolist()}
                for name, t in self.tensors.items()
            },
        }
        return json.dumps(doc)

    def save(self, path, extra: Optional[dict] = None) -> None:
        text = self.to_json()
        if extra:
            doc = json.loads(text)
            doc.update(extra)
            text = json.dumps(doc)
        Path(path).write_text(text)

    @classmethod
    def from_json(cls, text: str) -> "ModelParameters":
        doc = json.loads(text)
        if doc.get("format_version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {doc.get('format_version')}")
        cfg = ModelConfig.from_dict(doc["config"])
        tensors = {}
        for name, t in doc["tensors"].items():
            arr = np.array(t["data"], dtype=np.float64)
            if arr.size != math.prod(t["shape"]):
                raise CheckpointError(f"{name}: data length does not match shape")
            tensors[name] = arr.reshape(t["shape"])
        return cls(cfg, tensors)

    @classmethod
    def load(cls, path) -> "ModelParameters":
        return cls.from_json(Path(path).read_text())


def init_params(cfg: ModelConfig, seed: int = 0) -> ModelParameters:
    """Glorot-uniform weights, zero biases, TF-Net output layer zeroed (T = I)."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in parameter_shapes(cfg).items():
        if len(shape) == 1 or name.startswith("tfnet.fc2"):
            tensors[name] = np.zeros(shape)
        else:
            lim = math.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = rng.uniform(-lim, lim, size=shape)
    return ModelParameters(cfg, tensors)


# --------------------------------------------------------------------------
# primitives


def lrelu(x):
    # max(x, 0.2x) equals the piecewise form for any slope below one
    return np.maximum(x, SLOPE * x)


def lrelu_grad(x, g):
    return np.where(x > 0, g, SLOPE * g)


def _rowmax(x):
    """Column-wise max over rows and the (first) row attaining it."""
    arg = np.argmax(x, axis=0)
    return x[arg, np.arange(x.shape[1])], arg


def _rowmax_backward(g, arg, n):
    out = np.zeros((n, g.size))
    out[arg, np.arange(g.size)] = g
    return out


# --------------------------------------------------------------------------
# TF-Net


def tfnet_forward(points: np.ndarray, params: ModelParameters, cache: Optional[dict] = None):
    """Return ``(points @ T, T)`` with ``T = I + MLP(maxpool(MLP(points)))``."""
    p = params
    a1 = points @ p["tfnet.conv1.W"] + p["tfnet.conv1.b"]
    z1 = lrelu(a1)
    a2 = z1 @ p["tfnet.conv2.W"] + p["tfnet.conv2.b"]
    z2 = lrelu(a2)
    g, arg = _rowmax(z2)
    a3 = g @ p["tfnet.fc1.W"] + p["tfnet.fc1.b"]
    z3 = lrelu(a3)
    t = z3 @ p["tfnet.fc2.W"] + p["tfnet.fc2.b"]
    T = np.eye(3) + t.reshape(3, 3)
    if cache is not None:
        cache.update(x=points, a1=a1, z1=z1, a2=a2, arg=arg, g=g, a3=a3, z3=z3, T=T)
    return points @ T, T


def _tfnet_backward(c: dict, dout: np.ndarray, params: ModelParameters, grads: dict):
    p = params
    x = c["x"]
    dT = x.T @ dout
    dt = dT.reshape(9)
    grads["tfnet.fc2.W"] = np.outer(c["z3"], dt)
    grads["tfnet.fc2.b"] = dt
    da3 = lrelu_grad(c["a3"], p["tfnet.fc2.W"] @ dt)
    grads["tfnet.fc1.W"] = np.outer(c["g"], da3)
    grads["tfnet.fc1.b"] = da3
    dg = p["tfnet.fc1.W"] @ da3
    da2 = lrelu_grad(c["a2"], _rowmax_backward(dg, c["arg"], x.shape[0]))
    grads["tfnet.conv2.W"] = c["z1"].T @ da2
    grads["tfnet.conv2.b"] = da2.sum(axis=0)
    da1 = lrelu_grad(c["a1"], da2 @ p["tfnet.conv2.W"].T)
    grads["tfnet.conv1.W"] = x.T @ da1
    grads["tfnet.conv1.b"] = da1.sum(axis=0)


# --------------------------------------------------------------------------
# graph layout


@dataclass
class EdgeLayout:
    """Index helpers for a graph whose edges are grouped by target.

    Slot ``r`` of node ``i`` holds the ``r``-th nearest incoming edge; padded
    arrays have shape ``(n, width, ...)`` with invalid slots masked.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    width: int
    flat: np.ndarray  # position of each edge in the flattened (n*width) padding
    valid: np.ndarray  # (n, width) bool
    to_dst: sp.csr_matrix  # (n, E) incidence, sums edge rows into targets
    to_src: sp.csr_matrix
    full: bool = False  # every slot used, so padding is a plain reshape

    @classmethod
    def from_graph(cls, g: TemporalGraph) -> "EdgeLayout":
        n, E = g.n, g.src.size
        deg = np.bincount(g.dst, minlength=n)
        width = int(deg.max()) if E else 0
        starts = np.concatenate([[0], np.cumsum(deg)[:-1]])
        slot = np.arange(E) - starts[g.dst]
        flat = g.dst * width + slot
        valid = np.arange(width)[None, :] < deg[:, None]
        ones = np.ones(E)
        cols = np.arange(E)
        to_dst = sp.csr_matrix((ones, (g.dst, cols)), shape=(n, E))
        to_src = sp.csr_matrix((ones, (g.src, cols)), shape=(n, E))
        full = E == n * width and np.array_equal(flat, cols)
        return cls(n, g.src, g.dst, width, flat, valid, to_dst, to_src, full)

    def pad(self, e: np.ndarray, fill=0.0) -> np.ndarray:
        if self.full:
            return e.reshape((self.n, self.width) + e.shape[1:])
        out = np.full((self.n * self.width,) + e.shape[1:], fill)
        out[self.flat] = e
        return out.reshape((self.n, self.width) + e.shape[1:])

    def unpad(self, p: np.ndarray) -> np.ndarray:
        if self.full:
            return p.reshape((self.n * self.width,) + p.shape[2:])
        return p.reshape((self.n * self.width,) + p.shape[2:])[self.flat]


# --------------------------------------------------------------------------
# message passing and attention


def message_forward(h: np.ndarray, graph, params: ModelParameters, layer: int = 0, cache=None):
    """Edge messages ``MLP([h_i, h_j - h_i])`` in the graph's edge order."""
    layout = graph if isinstance(graph, EdgeLayout) else EdgeLayout.from_graph(graph)
    p = f"conv{layer}."
    d = h.shape[1]
    W1 = params[p + "msg1.W"]
    Wa, Wb = W1[:d], W1[d:]
    # [h_i, h_j - h_i] @ W1 == h_i @ (Wa - Wb) + h_j @ Wb
    U = Wa - Wb
    e1 = (h @ U)[layout.dst] + (h @ Wb)[layout.src] + params[p + "msg1.b"]
    u1 = lrelu(e1)
    M = u1 @ params[p + "msg2.W"] + params[p + "msg2.b"]
    if cache is not None:
        cache.update(h=h, U=U, Wb=Wb, e1=e1, u1=u1, M=M)
    return M


def _message_backward(c, dM, layout: EdgeLayout, params, layer, grads):
    p = f"conv{layer}."
    grads[p + "msg2.W"] = c["u1"].T @ dM
    grads[p + "msg2.b"] = dM.sum(axis=0)
    de1 = lrelu_grad(c["e1"], dM @ params[p + "msg2.W"].T)
    grads[p + "msg1.b"] = de1.sum(axis=0)
    dP = layout.to_dst @ de1
    dR = layout.to_src @ de1
    h = c["h"]
    dU = h.T @ dP
    grads[p + "msg1.W"] = np.concatenate([dU, h.T @ dR - dU])
    return dP @ c["U"].T + dR @ c["Wb"].T


def _attention_padded(M, layout: EdgeLayout, params, layer, heads, cache=None):
    p = f"conv{layer}.attn."
    n, w = layout.n, layout.width
    fo = M.shape[1]
    dh = fo // heads
    scale = 1.0 / math.sqrt(dh)
    W = np.concatenate([params[p + "WQ"] * scale, params[p + "WK"], params[p + "WV"]], axis=1)
    # (E, 3fo) -> (3, n, heads, w, dh), contiguous for the batched products
    QKV = np.ascontiguousarray(layout.pad(M @ W).reshape(n, w, 3, heads, dh).transpose(2, 0, 3, 1, 4))
    Q, K, V = QKV
    S = Q @ K.transpose(0, 1, 3, 2)
    if not layout.full:
        S += np.where(layout.valid, 0.0, -np.inf)[:, None, None, :]
    smax = S.max(axis=-1, keepdims=True)
    if not layout.full:
        smax[~np.isfinite(smax)] = 0.0
    S -= smax
    Wt = np.exp(S, out=S)
    den = Wt.sum(axis=-1, keepdims=True)
    if not layout.full:
        den[den == 0] = 1.0
    Wt /= den
    H = Wt @ V
    Hcat = layout.unpad(H.transpose(0, 2, 1, 3).reshape(n, w, fo))
    A = Hcat @ params[p + "WO"]
    if cache is not None:
        cache.update(QKV=QKV, Wt=Wt, Hcat=Hcat, scale=scale)
    return A, Wt


def _attention_backward(c, dA, layout: EdgeLayout, params, layer, heads, grads):
    p = f"conv{layer}.attn."
    n, w = layout.n, layout.width
    M = c["M"]
    fo = M.shape[1]
    dh = fo // heads
    grads[p + "WO"] = c["Hcat"].T @ dA
    dH = layout.pad(dA @ params[p + "WO"].T).reshape(n, w, heads, dh).transpose(0, 2, 1, 3)
    Wt = c["Wt"]
    Q, K, V = c["QKV"]
    dQKV = np.empty_like(c["QKV"])
    dQKV[2] = Wt.transpose(0, 1, 3, 2) @ dH
    # softmax backward in place: dS = Wt * (dWt - rowsum(dWt * Wt))
    dS = dH @ V.transpose(0, 1, 3, 2)
    r = np.einsum("...ij,...ij->...i", dS, Wt)[..., None]
    dS -= r
    dS *= Wt
    dQKV[0] = dS @ K
    dQKV[1] = dS.transpose(0, 1, 3, 2) @ Q
    # back to edge rows: (3, n, heads, w, dh) -> (E, 3fo)
    dE = layout.unpad(dQKV.transpose(1, 3, 0, 2, 4).reshape(n, w, 3 * fo))
    dW = M.T @ dE
    s = c["scale"]
    grads[p + "WQ"] = dW[:, :fo] * s
    grads[p + "WK"] = dW[:, fo : 2 * fo]
    grads[p + "WV"] = dW[:, 2 * fo :]
    Wcat = np.concatenate([params[p + "WQ"] * s, params[p + "WK"], params[p + "WV"]], axis=1)
    return dE @ Wcat.T


def attention_forward(messages: np.ndarray, params: ModelParameters, layer: int = 0, return_weights=False):
    """Multi-head self-attention over the ``(r, f_o)`` messages of one node."""
    messages = np.asarray(messages, dtype=np.float64)
    r = messages.shape[0]
    g = TemporalGraph(1, np.zeros(r, dtype=np.int64), np.zeros(r, dtype=np.int64), np.zeros(r))
    layout = EdgeLayout.from_graph(g)
    A, Wt = _attention_padded(messages, layout, params, layer, params.config.heads)
    return (A, Wt[0]) if return_weights else A


def _conv_forward(h, layout: EdgeLayout, params, layer, cfg: ModelConfig, cache=None):
    c = {} if cache is not None else None
    M = message_forward(h, layout, params, layer, c)
    if cfg.attention and layout.width:
        A, _ = _attention_padded(M, layout, params, layer, cfg.heads, c)
    else:
        A = M
    fo = M.shape[1]
    if layout.width == 0:
        out, arg = np.zeros((layout.n, fo)), None
    else:
        P = layout.pad(A, -np.inf)
        arg = np.argmax(P, axis=1)
        out = np.take_along_axis(P, arg[:, None, :], axis=1)[:, 0, :]
        out[~layout.valid[:, 0]] = 0.0  # empty neighborhoods aggregate to zero
    if cache is not None:
        c.update(arg=arg)
        cache.append(c)
    return out


def _conv_backward(c, dout, layout: EdgeLayout, params, layer, cfg, grads):
    fo = dout.shape[1]
    if layout.width == 0:
        dA = np.zeros((0, fo))
    else:
        dout = np.where(layout.valid[:, :1], dout, 0.0)
        dP = np.zeros((layout.n, layout.width, fo))
        np.put_along_axis(dP, c["arg"][:, None, :], dout[:, None, :], axis=1)
        dA = layout.unpad(dP)
    if cfg.attention and layout.width:
        dM = _attention_backward(c, dA, layout, params, layer, cfg.heads, grads)
    else:
        dM = dA
    return _message_backward(c, dM, layout, params, layer, grads)


# --------------------------------------------------------------------------
# full model


def _graph_sample(sample: GestureSample, cfg: ModelConfig) -> GestureSample:
    if cfg.temporal:
        return sample
    return sample.replace(frame_ids=np.zeros_like(sample.frame_ids), num_frames=1)


@dataclass
class ForwardTrace:
    params: ModelParameters
    version: int
    logits: np.ndarray
    layout: EdgeLayout
    tfnet: dict
    convs: list
    head: dict = field(default_factory=dict)


def _encode(sample: GestureSample, cfg: ModelConfig, params: ModelParameters, trace_caches: Optional[dict]):
    canon = canonical_order(sample)
    cs = sample.replace(points=sample.points[canon], frame_ids=sample.frame_ids[canon])
    layout = EdgeLayout.from_graph(temporal_knn(_graph_sample(cs, cfg), cfg.graph))
    tf = {} if trace_caches is not None else None
    h, _ = tfnet_forward(cs.points, params, tf)
    convs = [] if trace_caches is not None else None
    for l in range(cfg.layers):
        h = _conv_forward(h, layout, params, l, cfg, convs)
    if trace_caches is not None:
        trace_caches.update(layout=layout, tfnet=tf, convs=convs)
    return canon, h


def teslaconv_forward(sample: GestureSample, cfg: ModelConfig, params: ModelParameters) -> np.ndarray:
    """Per-point features after TF-Net and all TeslaConv layers, in storage order."""
    canon, h = _encode(sample, cfg, params, None)
    out = np.empty_like(h)
    out[canon] = h
    return out


def classify_forward(sample: GestureSample, cfg: ModelConfig, params: ModelParameters):
    """Class logits for one gesture, plus the trace needed by :func:`backward`."""
    caches: dict = {}
    _, h = _encode(sample, cfg, params, caches)
    head = {"h": h}
    a = h @ params["pool.W"] + params["pool.b"]
    z = lrelu(a)
    g, arg = _rowmax(z)
    head.update(pool_a=a, pool_arg=arg)
    n_cls = len(cfg.classifier_widths) + 1
    x = g
    for i in range(n_cls):
        head[f"cls{i}.in"] = x
        y = x @ params[f"cls{i}.W"] + params[f"cls{i}.b"]
        if i < n_cls - 1:
            head[f"cls{i}.pre"] = y
            y = lrelu(y)
        x = y
    trace = ForwardTrace(params, params.version, x, caches["layout"], caches["tfnet"], caches["convs"], head)
    return x, trace


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    return z - math.log(np.exp(z).sum())


def backward(trace: ForwardTrace, label: int, dlogits: Optional[np.ndarray] = None):
    """Gradients of ``cross_entropy(logits, label)`` for every parameter.

    Returns ``(loss, grads)``. Passing ``dlogits`` backpropagates that
    upstream gradient instead of the cross-entropy one.
    """
    params = trace.params
    if params.version != trace.version:
        raise TraceError("parameters changed since the forward pass")
    cfg = params.config
    logp = log_softmax(trace.logits)
    if not 0 <= label < logp.size:
        raise ValueError(f"label {label} outside [0, {logp.size})")
    loss = -float(logp[label])
    if dlogits is None:
        dlogits = np.exp(logp)
        dlogits[label] -= 1.0

    grads: dict = {}
    hd = trace.head
    n_cls = len(cfg.classifier_widths) + 1
    dy = dlogits
    for i in reversed(range(n_cls)):
        if i < n_cls - 1:
            dy = lrelu_grad(hd[f"cls{i}.pre"], dy)
        grads[f"cls{i}.W"] = np.outer(hd[f"cls{i}.in"], dy)
        grads[f"cls{i}.b"] = dy
        dy = params[f"cls{i}.W"] @ dy
    h = hd["h"]
    da = lrelu_grad(hd["pool_a"], _rowmax_backward(dy, hd["pool_arg"], h.shape[0]))
    grads["pool.W"] = h.T @ da
    grads["pool.b"] = da.sum(axis=0)
    dh = da @ params["pool.W"].T
    for l in reversed(range(cfg.layers)):
        dh = _conv_backward(trace.convs[l], dh, trace.layout, params, l, cfg, grads)
    _tfnet_backward(trace.tfnet, dh, params, grads)
    return loss, grads


def predict_proba(sample: GestureSample, params: ModelParameters) -> np.ndarray:
    logits, _ = classify_forward(sample, params.config, params)
    return np.exp(log_softmax(logits))


# --------------------------------------------------------------------------
# FLOP accounting


def flop_breakdown(cfg: ModelConfig, sample: GestureSample) -> dict[str, int]:
    """Analytic FLOPs split into point-, edge-, score- and gesture-level terms.

    A dense map ``a -> b`` over ``p`` rows costs ``2*a*b*p``. ``edge`` holds
    the terms linear in the realized edge count (message MLP and attention
    projections); ``attention_scores`` holds the per-node ``2*r^2*f_o`` terms.
    """
    n = sample.n_points
    deg = temporal_knn(_graph_sample(sample, cfg), cfg.graph).in_degree.astype(np.int64)
    E = int(deg.sum())
    t1, t2, t3 = cfg.tfnet_widths
    fo = cfg.message_width
    point = 2 * 3 * t1 * n + 2 * t1 * t2 * n + 2 * 3 * 3 * n
    gesture = 2 * t2 * t3 + 2 * t3 * 9
    edge = scores = 0
    d = 3
    for _ in range(cfg.layers):
        edge += 2 * (2 * d) * fo * E + 2 * fo * fo * E
        if cfg.attention:
            edge += 2 * fo * fo * 3 * E + 2 * fo * fo * E
            scores += int(np.sum(2 * deg * deg * fo))
        d = fo
    point += 2 * fo * cfg.pooled_width * n
    widths = [cfg.pooled_width, *cfg.classifier_widths, cfg.num_classes]
    gesture += sum(2 * a * b for a, b in zip(widths[:-1], widths[1:]))
    return {"point": point, "edge": edge, "attention_scores": scores, "gesture": gesture, "edges": E}


def count_flops(cfg: ModelConfig, sample: GestureSample) -> int:
    b = flop_breakdown(cfg, sample)
    return b["point"] + b["edge"] + b["attention_scores"] + b["gesture"]
