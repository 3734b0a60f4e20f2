"""Frame fusion, temporal contextualization, and span prediction.

The head concatenates per-frame visual/semantic vectors, runs a Bi-GRU over
time, and maps each frame to a start logit and an end logit.  Candidate
segments are every frame pair (i, j) with i < j, scored by
softmax(start)[i] * softmax(end)[j], emitted in descending score with ties
broken lexicographically on (i, j), as fractions (i/T, (j+1)/T).  Training
minimizes cross-entropy of the start/end distributions at the ground-truth
frame indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as tt
from .data import GroundTruthSegment, frame_pair_to_fractions, segment_to_frame_indices
from .hierarchy import FrameRepresentations
from .params import weight, zeros
from .recurrent import bigru, init_bigru_params
from .tensor import Tensor


@dataclass
class SegmentPrediction:
    start_logits: Tensor  # [T]
    end_logits: Tensor  # [T]
    top_segments: list[tuple[float, float, float]]  # (start_frac, end_frac, score), sorted


def init_head_params(rng: np.random.Generator, input_width: int, hidden: int, dtype) -> dict:
    return {
        "gru": init_bigru_params(rng, input_width, hidden // 2, dtype),
        "start": {"w": weight(rng, (hidden, 1), dtype), "b": zeros((1,), dtype)},
        "end": {"w": weight(rng, (hidden, 1), dtype), "b": zeros((1,), dtype)},
    }


def fuse_and_contextualize(frames: FrameRepresentations, params: dict) -> Tensor:
    """[visual, semantic] per frame through the Bi-GRU; returns [T, hidden]."""
    fused = tt.concat([frames.visual, frames.semantic], axis=1)
    contextual, _ = bigru(fused, params["gru"])
    return contextual


def _np_softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def enumerate_segments(
    start_logits: np.ndarray, end_logits: np.ndarray, max_segments: int | None = None
) -> list[tuple[float, float, float]]:
    """Rank all (i, j), i < j by softmax(start)[i] * softmax(end)[j]."""
    T = start_logits.shape[0]
    s = _np_softmax(np.asarray(start_logits, dtype=np.float64))
    e = _np_softmax(np.asarray(end_logits, dtype=np.float64))
    ranked = sorted(
        ((float(s[i] * e[j]), i, j) for i in range(T - 1) for j in range(i + 1, T)),
        key=lambda item: (-item[0], item[1], item[2]),
    )
    if max_segments is not None:
        ranked = ranked[:max_segments]
    out = []
    for score, i, j in ranked:
        lo, hi = frame_pair_to_fractions(i, j, T)
        out.append((lo, hi, score))
    return out


def predict(contextual: Tensor, params: dict, max_segments: int | None = None) -> SegmentPrediction:
    """Score start/end per frame and enumerate ranked candidate segments."""
    T = contextual.shape[0]
    start_logits = tt.reshape(tt.linear(contextual, params["start"]["w"], params["start"]["b"]), (T,))
    end_logits = tt.reshape(tt.linear(contextual, params["end"]["w"], params["end"]["b"]), (T,))
    segments = enumerate_segments(start_logits.data, end_logits.data, max_segments)
    return SegmentPrediction(start_logits=start_logits, end_logits=end_logits, top_segments=segments)


def loss(prediction: SegmentPrediction, truth: GroundTruthSegment, num_frames: int) -> Tensor:
    """Start + end cross-entropy at the ground-truth frame indices."""
    s_idx, e_idx = segment_to_frame_indices(truth, num_frames)
    log_s = tt.log_softmax(prediction.start_logits, axis=0)
    log_e = tt.log_softmax(prediction.end_logits, axis=0)
    return -(log_s[s_idx] + log_e[e_idx])


def write_predictions_jsonl(path: str | Path, records: list[dict]) -> None:
    """One {"query_id": ..., "segments": [[start, end, score], ...]} object per line."""
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
