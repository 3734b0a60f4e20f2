"""Coupling between the visual and semantic node spaces.

Each direction scores every source node i against a target node k with a
row vector on the concatenated pair, pools the projected sources, then
concatenates the pooled evidence onto the target and projects back to
width D so downstream widths stay level-independent:

    logits_i = w_pair . [src_i, tgt_k]
    f_k      = sum_i softmax_i(logits) * (W_val src_i)
    out_k    = P [tgt_k, f_k] + b

visual_to_semantic reads sources from the visual graph and targets from the
semantic one; semantic_to_visual is the mirror.  Sources and targets must
come from the same frame (object level) or the same video (frame level),
so both node sets share K.
"""

from __future__ import annotations

import numpy as np

from . import tensor as tt
from .params import weight, zeros
from .tensor import Tensor


def init_cross_space_params(rng: np.random.Generator, dim: int, dtype) -> dict:
    def one_direction():
        return {
            "attn_w": weight(rng, (2 * dim, 1), dtype),
            "value_w": weight(rng, (dim, dim), dtype),
            "proj_w": weight(rng, (2 * dim, dim), dtype),
            "proj_b": zeros((dim,), dtype),
        }

    return {"v2s": one_direction(), "s2v": one_direction()}


def enhance_batch(source: Tensor, target: Tensor, params: dict):
    """Returns (enhanced [B,K,D], attention [B,K,K], pooled evidence [B,K,D])."""
    if source.shape != target.shape:
        raise ValueError(f"source/target shape mismatch: {source.shape} vs {target.shape}")
    B, K, D = source.shape
    src_b = tt.broadcast_to(tt.reshape(source, (B, 1, K, D)), (B, K, K, D))
    tgt_b = tt.broadcast_to(tt.reshape(target, (B, K, 1, D)), (B, K, K, D))
    pair = tt.concat([src_b, tgt_b], axis=-1)
    logits = tt.reshape(tt.linear(pair, params["attn_w"]), (B, K, K))
    attn = tt.softmax(logits, axis=2)
    pooled = tt.matmul(attn, tt.linear(source, params["value_w"]))
    enhanced = tt.linear(tt.concat([target, pooled], axis=-1), params["proj_w"], params["proj_b"])
    return enhanced, attn, pooled


def _single(fn_source: Tensor, fn_target: Tensor, params: dict) -> Tensor:
    K, D = fn_source.shape
    enhanced, _, _ = enhance_batch(
        tt.reshape(fn_source, (1, K, D)), tt.reshape(fn_target, (1, K, D)), params
    )
    return tt.reshape(enhanced, (K, D))


def visual_to_semantic(visual_nodes: Tensor, semantic_nodes: Tensor, params: dict) -> Tensor:
    """Enhance semantic nodes with attention-pooled visual evidence."""
    return _single(visual_nodes, semantic_nodes, params["v2s"])


def semantic_to_visual(semantic_nodes: Tensor, visual_nodes: Tensor, params: dict) -> Tensor:
    """Enhance visual nodes with attention-pooled semantic evidence."""
    return _single(semantic_nodes, visual_nodes, params["s2v"])
