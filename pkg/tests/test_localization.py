"""Span head: candidate enumeration, tie-breaking, loss values, JSONL output."""

import json

import numpy as np

from hvsarn.data import GroundTruthSegment
from hvsarn.evaluation import read_predictions_jsonl
from hvsarn.hierarchy import FrameRepresentations
from hvsarn.localization import (
    SegmentPrediction,
    enumerate_segments,
    fuse_and_contextualize,
    init_head_params,
    loss,
    predict,
    write_predictions_jsonl,
)
from hvsarn.tensor import Tensor
from oracles import span_enumeration_oracle

D = 6


def head_setup(seed=0, T=5):
    rng = np.random.default_rng(seed)
    params = init_head_params(rng, 2 * D, D, np.float64)
    frames = FrameRepresentations(
        visual=Tensor(rng.normal(size=(T, D))), semantic=Tensor(rng.normal(size=(T, D)))
    )
    return params, frames


def test_enumeration_matches_oracle():
    for seed in range(15):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(2, 9))
        start = rng.normal(size=T)
        end = rng.normal(size=T)
        got = enumerate_segments(start, end)
        want = span_enumeration_oracle(start, end)
        assert len(got) == len(want)
        for (lo, hi, score), (rlo, rhi, rscore) in zip(got, want):
            assert (lo, hi) == (rlo, rhi)
            np.testing.assert_allclose(score, rscore, atol=1e-12)


def test_two_frame_video_has_single_candidate():
    segs = enumerate_segments(np.zeros(2), np.zeros(2))
    assert segs == [(0.0, 1.0, segs[0][2])]
    np.testing.assert_allclose(segs[0][2], 0.25, atol=1e-12)


def test_one_frame_video_has_no_candidates():
    assert enumerate_segments(np.zeros(1), np.zeros(1)) == []


def test_uniform_logits_tie_break_is_lexicographic():
    T = 4
    segs = enumerate_segments(np.zeros(T), np.zeros(T))
    pairs = [(round(lo * T), round(hi * T) - 1) for lo, hi, _ in segs]
    assert pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_max_segments_clamps_output():
    segs = enumerate_segments(np.zeros(6), np.zeros(6), max_segments=3)
    assert len(segs) == 3


def test_scores_sorted_descending():
    rng = np.random.default_rng(3)
    segs = enumerate_segments(rng.normal(size=7), rng.normal(size=7))
    scores = [score for _, _, score in segs]
    assert scores == sorted(scores, reverse=True)


def test_predict_returns_fractions_and_logits():
    params, frames = head_setup()
    contextual = fuse_and_contextualize(frames, params)
    pred = predict(contextual, params)
    assert pred.start_logits.shape == (5,)
    assert pred.end_logits.shape == (5,)
    assert len(pred.top_segments) == 10  # C(5, 2)
    for lo, hi, _ in pred.top_segments:
        assert 0.0 <= lo < hi <= 1.0


def test_uniform_logits_loss_is_two_log_t():
    T = 8
    pred = SegmentPrediction(
        start_logits=Tensor(np.zeros(T)), end_logits=Tensor(np.zeros(T)), top_segments=[]
    )
    truth = GroundTruthSegment(start=0.25, end=0.75)
    value = loss(pred, truth, num_frames=T)
    np.testing.assert_allclose(value.data, 2.0 * np.log(T), atol=1e-12)


def test_saturated_logits_loss_near_zero():
    T = 6
    truth = GroundTruthSegment(start=2 / T, end=5 / T)
    start = np.full(T, -50.0)
    end = np.full(T, -50.0)
    start[2] = 50.0
    end[4] = 50.0  # ceil(5/6 * 6) - 1 = 4
    pred = SegmentPrediction(Tensor(start), Tensor(end), [])
    assert loss(pred, truth, num_frames=T).data.item() < 1e-9


def test_loss_matches_manual_cross_entropy():
    rng = np.random.default_rng(5)
    T = 7
    start = rng.normal(size=T)
    end = rng.normal(size=T)
    truth = GroundTruthSegment(start=1 / T, end=5 / T)

    def log_softmax(x):
        z = x - x.max()
        return z - np.log(np.exp(z).sum())

    want = -(log_softmax(start)[1] + log_softmax(end)[4])
    pred = SegmentPrediction(Tensor(start), Tensor(end), [])
    np.testing.assert_allclose(loss(pred, truth, num_frames=T).data, want, atol=1e-12)


def test_loss_gradient_flows_to_head_params():
    params, frames = head_setup(seed=6)
    contextual = fuse_and_contextualize(frames, params)
    pred = predict(contextual, params)
    value = loss(pred, GroundTruthSegment(start=0.2, end=0.8), num_frames=5)
    value.backward()
    for name in ("start", "end"):
        assert params[name]["w"].grad is not None
        assert np.any(params[name]["w"].grad != 0.0)


def test_jsonl_round_trip(tmp_path):
    params, frames = head_setup(seed=7)
    pred = predict(fuse_and_contextualize(frames, params), params, max_segments=4)
    path = tmp_path / "predictions.jsonl"
    rows = [
        {
            "query_id": "q-0",
            "video_id": "v-0",
            "segments": [[lo, hi, score] for lo, hi, score in pred.top_segments],
        }
    ]
    write_predictions_jsonl(path, rows)
    assert read_predictions_jsonl(path) == rows
    # each line must parse standalone and carry array-shaped segments
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 1
    parsed = json.loads(lines[0])
    assert isinstance(parsed["segments"][0], list) and len(parsed["segments"][0]) == 3
