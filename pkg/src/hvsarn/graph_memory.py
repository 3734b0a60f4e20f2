"""Gated graph-memory reasoning over a fully-connected node set.

One reasoning step is a read followed by a write.  The read controller
scores every node against its state Q, pools a content vector, and gates
its own update:

    a_k   = w . tanh(W1a Q + W2a v_k + ba)
    r     = sum_k softmax(a)_k * v_k
    Q'    = tanh(Wq Q + Wr r + b)
    G     = sigmoid(Wq' Q + Wr' r + b')
    Q_new = G * Q + (1 - G) * Q'

The write controller then refreshes every node from the pre-step snapshot
(synchronous update), mixing in the other nodes' context and the updated
controller:

    c_k   = sum_{i != k} softmax_i(mlp([v_k, v_i])) * v_i      (c = 0 if K = 1)
    v'_k  = tanh(Wv v_k + Uq Q_new + Hc c_k + b)
    Z_k   = sigmoid(Wv' v_k + Uq' Q_new + Hc' c_k + b')
    v_new = Z_k * v_k + (1 - Z_k) * v'_k

Everything is batched over independent graphs: controllers [B, D], nodes
[B, K, D].  At object level B is the number of frames (one controller per
frame); at frame level B = 1 and the nodes are frames.

`baseline_step` provides the drop-in ablation reasoners (plain graph
convolution, graph convolution fused with the controller, self-attention,
and an edge-free key-value memory update); they update nodes only and
leave the controller untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tt
from .params import weight, zeros
from .tensor import Tensor

_MASK_VALUE = -1e9  # exp() underflows to exactly 0, so diagonal weights vanish


def init_graph_memory_params(rng: np.random.Generator, dim: int, dtype) -> dict:
    d = dim
    return {
        "read": {
            "attn_w1": weight(rng, (d, d), dtype),
            "attn_w2": weight(rng, (d, d), dtype),
            "attn_b": zeros((d,), dtype),
            "attn_v": weight(rng, (d, 1), dtype),
            "cand_wq": weight(rng, (d, d), dtype),
            "cand_wr": weight(rng, (d, d), dtype),
            "cand_b": zeros((d,), dtype),
            "gate_wq": weight(rng, (d, d), dtype),
            "gate_wr": weight(rng, (d, d), dtype),
            "gate_b": zeros((d,), dtype),
        },
        "write": {
            "mlp_w1": weight(rng, (2 * d, d), dtype),
            "mlp_b1": zeros((d,), dtype),
            "mlp_w2": weight(rng, (d, 1), dtype),
            "mlp_b2": zeros((1,), dtype),
            "cand_wv": weight(rng, (d, d), dtype),
            "cand_wq": weight(rng, (d, d), dtype),
            "cand_wc": weight(rng, (d, d), dtype),
            "cand_b": zeros((d,), dtype),
            "gate_wv": weight(rng, (d, d), dtype),
            "gate_wq": weight(rng, (d, d), dtype),
            "gate_wc": weight(rng, (d, d), dtype),
            "gate_b": zeros((d,), dtype),
        },
    }


@dataclass
class GraphMemoryState:
    """Controller state [D] plus node representations [K, D] at step `step`."""

    controller: Tensor
    nodes: Tensor
    step: int = 0

    def __post_init__(self):
        if self.controller.ndim != 1:
            raise ValueError(f"controller must be a vector, got shape {self.controller.shape}")
        if self.nodes.ndim != 2 or self.nodes.shape[0] < 1:
            raise ValueError(f"nodes must be [K, D] with K >= 1, got shape {self.nodes.shape}")


def read_batch(controller: Tensor, nodes: Tensor, params: dict):
    """Batched read; returns (content [B,D], new_controller [B,D], weights [B,K])."""
    p = params["read"]
    B, K, _ = nodes.shape
    h = tt.tanh(
        tt.reshape(tt.linear(controller, p["attn_w1"]), (B, 1, -1))
        + tt.linear(nodes, p["attn_w2"])
        + p["attn_b"]
    )
    logits = tt.reshape(tt.linear(h, p["attn_v"]), (B, K))
    attn = tt.softmax(logits, axis=1)
    content = tt.reshape(tt.matmul(tt.reshape(attn, (B, 1, K)), nodes), (B, -1))
    candidate = tt.tanh(
        tt.linear(controller, p["cand_wq"]) + tt.linear(content, p["cand_wr"]) + p["cand_b"]
    )
    gate = tt.sigmoid(
        tt.linear(controller, p["gate_wq"]) + tt.linear(content, p["gate_wr"]) + p["gate_b"]
    )
    new_controller = gate * controller + (1.0 - gate) * candidate
    return content, new_controller, attn


def neighbor_context(nodes: Tensor, params: dict):
    """Eq-style neighbor aggregation; returns (context [B,K,D], weights [B,K,K] | None)."""
    p = params["write"]
    B, K, D = nodes.shape
    if K == 1:
        return Tensor(np.zeros((B, 1, D), dtype=nodes.dtype)), None
    target = tt.broadcast_to(tt.reshape(nodes, (B, K, 1, D)), (B, K, K, D))
    source = tt.broadcast_to(tt.reshape(nodes, (B, 1, K, D)), (B, K, K, D))
    pair = tt.concat([target, source], axis=-1)
    hidden = tt.tanh(tt.linear(pair, p["mlp_w1"], p["mlp_b1"]))
    logits = tt.reshape(tt.linear(hidden, p["mlp_w2"], p["mlp_b2"]), (B, K, K))
    mask = np.full((K, K), 0.0, dtype=nodes.dtype)
    np.fill_diagonal(mask, _MASK_VALUE)
    attn = tt.softmax(logits + Tensor(mask), axis=2)
    context = tt.matmul(attn, nodes)
    return context, attn


def write_batch(controller_new: Tensor, nodes: Tensor, params: dict):
    """Batched write; returns (nodes_new [B,K,D], neighbor weights)."""
    p = params["write"]
    B, K, _ = nodes.shape
    context, attn = neighbor_context(nodes, params)
    q_term_c = tt.reshape(tt.linear(controller_new, p["cand_wq"]), (B, 1, -1))
    q_term_g = tt.reshape(tt.linear(controller_new, p["gate_wq"]), (B, 1, -1))
    candidate = tt.tanh(
        tt.linear(nodes, p["cand_wv"]) + q_term_c + tt.linear(context, p["cand_wc"]) + p["cand_b"]
    )
    gate = tt.sigmoid(
        tt.linear(nodes, p["gate_wv"]) + q_term_g + tt.linear(context, p["gate_wc"]) + p["gate_b"]
    )
    nodes_new = gate * nodes + (1.0 - gate) * candidate
    return nodes_new, attn


def reason_batch(controller: Tensor, nodes: Tensor, params: dict, num_steps: int):
    """Alternate read/write `num_steps` times over a batch of graphs."""
    if num_steps < 0:
        raise ValueError(f"num_steps must be >= 0, got {num_steps}")
    for _ in range(num_steps):
        _, controller, _ = read_batch(controller, nodes, params)
        nodes, _ = write_batch(controller, nodes, params)
    return controller, nodes


# -- single-graph views ------------------------------------------------------


def _batched(state: GraphMemoryState):
    K, D = state.nodes.shape
    return tt.reshape(state.controller, (1, D)), tt.reshape(state.nodes, (1, K, D))


def read(state: GraphMemoryState, params: dict):
    """One read step; returns (content [D], new_controller [D])."""
    controller, nodes = _batched(state)
    content, new_controller, _ = read_batch(controller, nodes, params)
    return tt.reshape(content, (-1,)), tt.reshape(new_controller, (-1,))


def write(state: GraphMemoryState, controller_new: Tensor, params: dict) -> Tensor:
    """One synchronous write step; returns nodes_new [K, D]."""
    _, nodes = _batched(state)
    nodes_new, _ = write_batch(tt.reshape(controller_new, (1, -1)), nodes, params)
    return tt.reshape(nodes_new, state.nodes.shape)


def reason(state: GraphMemoryState, params: dict, num_steps: int) -> GraphMemoryState:
    """Run `num_steps` read/write alternations; num_steps=0 returns the input."""
    controller, nodes = _batched(state)
    controller, nodes = reason_batch(controller, nodes, params, num_steps)
    return GraphMemoryState(
        controller=tt.reshape(controller, state.controller.shape),
        nodes=tt.reshape(nodes, state.nodes.shape),
        step=state.step + num_steps,
    )


# -- ablation reasoners --------------------------------------------------------

BASELINE_KINDS = ("gcn", "gcn_fusion", "self_attention", "memory_network")


def init_baseline_params(rng: np.random.Generator, kind: str, dim: int, dtype) -> dict:
    d = dim
    if kind == "gcn":
        return {"w": weight(rng, (d, d), dtype), "b": zeros((d,), dtype)}
    if kind == "gcn_fusion":
        return {"w": weight(rng, (2 * d, d), dtype), "b": zeros((d,), dtype)}
    if kind == "self_attention":
        return {
            "wq": weight(rng, (d, d), dtype),
            "wk": weight(rng, (d, d), dtype),
            "wv": weight(rng, (d, d), dtype),
        }
    if kind == "memory_network":
        return {
            "cand_wv": weight(rng, (d, d), dtype),
            "cand_wq": weight(rng, (d, d), dtype),
            "cand_b": zeros((d,), dtype),
            "gate_wv": weight(rng, (d, d), dtype),
            "gate_wq": weight(rng, (d, d), dtype),
            "gate_b": zeros((d,), dtype),
        }
    raise ValueError(f"unknown baseline reasoner kind: {kind!r}")


def _neighbor_mean(nodes: Tensor) -> Tensor:
    B, K, D = nodes.shape
    if K == 1:
        return Tensor(np.zeros((B, 1, D), dtype=nodes.dtype))
    total = tt.tsum(nodes, axis=1, keepdims=True)
    return (total - nodes) * (1.0 / (K - 1))


def _activate(x: Tensor, activation: str) -> Tensor:
    if activation == "tanh":
        return tt.tanh(x)
    if activation == "identity":
        return x
    raise ValueError(f"unknown activation: {activation!r}")


def baseline_step(
    kind: str, nodes: Tensor, controller: Tensor, params: dict, activation: str = "tanh"
):
    """One layer of a drop-in ablation reasoner; returns (nodes_new, attn | None).

    gcn            mean over neighbors, then an affine map and activation.
    gcn_fusion     gcn over nodes concatenated with the (broadcast) controller.
    self_attention residual single-head attention over the node set.
    memory_network per-node gated update from the controller; no edges.
    """
    B, K, D = nodes.shape
    if kind == "gcn":
        neigh = _neighbor_mean(nodes)
        return _activate(tt.linear(neigh, params["w"], params["b"]), activation), None
    if kind == "gcn_fusion":
        ctrl = tt.broadcast_to(tt.reshape(controller, (B, 1, D)), (B, K, D))
        ext = tt.concat([nodes, ctrl], axis=-1)
        neigh = _neighbor_mean(ext)
        return _activate(tt.linear(neigh, params["w"], params["b"]), activation), None
    if kind == "self_attention":
        q = tt.linear(nodes, params["wq"])
        k = tt.linear(nodes, params["wk"])
        v = tt.linear(nodes, params["wv"])
        scores = tt.matmul(q, tt.swapaxes(k, -1, -2)) * (1.0 / np.sqrt(D))
        attn = tt.softmax(scores, axis=-1)
        return nodes + tt.matmul(attn, v), attn
    if kind == "memory_network":
        q_c = tt.reshape(tt.linear(controller, params["cand_wq"]), (B, 1, D))
        q_g = tt.reshape(tt.linear(controller, params["gate_wq"]), (B, 1, D))
        candidate = tt.tanh(tt.linear(nodes, params["cand_wv"]) + q_c + params["cand_b"])
        gate = tt.sigmoid(tt.linear(nodes, params["gate_wv"]) + q_g + params["gate_b"])
        return gate * nodes + (1.0 - gate) * candidate, None
    raise ValueError(f"unknown baseline reasoner kind: {kind!r}")


def baseline_reasoner(
    kind: str, nodes: Tensor, controller: Tensor, params: dict, activation: str = "tanh"
) -> Tensor:
    """Single-layer baseline on one graph: nodes [K, D], controller [D]."""
    K, D = nodes.shape
    out, _ = baseline_step(
        kind, tt.reshape(nodes, (1, K, D)), tt.reshape(controller, (1, D)), params, activation
    )
    return tt.reshape(out, (K, D))


def run_reasoner(
    kind: str, controller: Tensor, nodes: Tensor, params: dict, num_steps: int
):
    """Dispatch on reasoner kind; graph_memory evolves the controller, baselines do not."""
    if kind == "graph_memory":
        return reason_batch(controller, nodes, params, num_steps)
    for _ in range(num_steps):
        nodes, _ = baseline_step(kind, nodes, controller, params)
    return controller, nodes
