"""Level orchestration: flag contracts, fusion oracle, permutation properties,
and the end-to-end object->fuse->frame gradcheck.
"""

import numpy as np

import hvsarn.tensor as tt
from hvsarn.data import ModelConfig
from hvsarn.encoders import EncodedVideo
from hvsarn.hierarchy import (
    FrameRepresentations,
    frame_level_pass,
    frames_from_encoder_mean,
    fuse_objects,
    fusion_attention,
    init_fusion_params,
    init_level_params,
    object_level_pass,
)
from hvsarn.params import flatten
from hvsarn.tensor import Tensor
from hvsarn.training import gradcheck_tensors
from oracles import as_np, fusion_oracle

D = 6


def make_level(seed=0, T=3, K=2, config=None, dtype=np.float64):
    config = config or ModelConfig(hidden_size=D, reasoning_steps=1)
    rng = np.random.default_rng(seed)
    params = init_level_params(rng, config, dtype)
    encoded = EncodedVideo(
        visual=Tensor(rng.normal(size=(T, K, D))), semantic=Tensor(rng.normal(size=(T, K, D)))
    )
    sentence = Tensor(rng.normal(size=D))
    return config, params, encoded, sentence


def test_object_level_shapes():
    config, params, encoded, sentence = make_level(T=4, K=3)
    visual, semantic = object_level_pass(encoded, sentence, params, config)
    assert visual.shape == (4, 3, D)
    assert semantic.shape == (4, 3, D)


def test_visual_graph_flag_off_keeps_visual_path_inert():
    # with the semantic graph also off, the pass must be a pure identity
    config = ModelConfig(
        hidden_size=D, reasoning_steps=2, use_visual_graph=False, use_semantic_graph=False
    )
    _, params, encoded, sentence = make_level(config=config)
    visual, semantic = object_level_pass(encoded, sentence, params, config)
    np.testing.assert_array_equal(visual.data, encoded.visual.data)
    np.testing.assert_array_equal(semantic.data, encoded.semantic.data)


def test_semantic_graph_flag_off_skips_cross_space():
    config = ModelConfig(hidden_size=D, reasoning_steps=1, use_semantic_graph=False)
    _, params, encoded, sentence = make_level(config=config)
    visual, semantic = object_level_pass(encoded, sentence, params, config)
    np.testing.assert_array_equal(semantic.data, encoded.semantic.data)
    # visual still reasons
    assert not np.allclose(visual.data, encoded.visual.data)


def test_zero_steps_with_cross_space_still_enhances():
    # L=0 disables reasoning but the enhancement hops remain
    config = ModelConfig(hidden_size=D, reasoning_steps=0)
    _, params, encoded, sentence = make_level(config=config)
    visual, semantic = object_level_pass(encoded, sentence, params, config)
    assert not np.allclose(semantic.data, encoded.semantic.data)


def test_frame_level_disabled_is_identity():
    config = ModelConfig(hidden_size=D, use_frame_level=False, use_object_level=True)
    _, params, _, sentence = make_level(config=config)
    rng = np.random.default_rng(1)
    frames = FrameRepresentations(
        visual=Tensor(rng.normal(size=(5, D))), semantic=Tensor(rng.normal(size=(5, D)))
    )
    out = frame_level_pass(frames, sentence, params, config)
    assert out is frames


def test_frame_level_treats_video_as_one_graph():
    config, params, _, sentence = make_level(seed=2)
    rng = np.random.default_rng(3)
    frames = FrameRepresentations(
        visual=Tensor(rng.normal(size=(5, D))), semantic=Tensor(rng.normal(size=(5, D)))
    )
    out = frame_level_pass(frames, sentence, params, config)
    assert out.visual.shape == (5, D) and out.semantic.shape == (5, D)
    assert not np.allclose(out.visual.data, frames.visual.data)


def test_cross_space_at_frame_level_flag():
    base = dict(hidden_size=D, reasoning_steps=1)
    rng = np.random.default_rng(4)
    frames = FrameRepresentations(
        visual=Tensor(rng.normal(size=(4, D))), semantic=Tensor(rng.normal(size=(4, D)))
    )
    sentence = Tensor(rng.normal(size=D))
    on = ModelConfig(**base, cross_space_at_frame_level=True)
    off = ModelConfig(**base, cross_space_at_frame_level=False)
    params = init_level_params(np.random.default_rng(5), on, np.float64)
    out_on = frame_level_pass(frames, sentence, params, on)
    out_off = frame_level_pass(frames, sentence, params, off)
    assert not np.allclose(out_on.visual.data, out_off.visual.data)


def test_fusion_attention_matches_oracle():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        params = init_fusion_params(rng, D, np.float64)
        visual = rng.normal(size=(3, 4, D))
        semantic = rng.normal(size=(3, 4, D))
        sentence = rng.normal(size=D)
        attn = fusion_attention(Tensor(visual), Tensor(sentence), params)
        frames = fuse_objects(Tensor(visual), Tensor(semantic), Tensor(sentence), params)
        ref_pooled, ref_attn = fusion_oracle(visual, sentence, as_np(params))
        np.testing.assert_allclose(attn.data, ref_attn, atol=1e-10)
        np.testing.assert_allclose(frames.visual.data, ref_pooled, atol=1e-10)
        np.testing.assert_allclose(frames.semantic.data, semantic.mean(axis=1), atol=1e-10)
        np.testing.assert_allclose(attn.data.sum(axis=1), 1.0, atol=1e-6)


def test_fuse_objects_is_permutation_invariant():
    rng = np.random.default_rng(8)
    params = init_fusion_params(rng, D, np.float64)
    visual = rng.normal(size=(3, 5, D))
    semantic = rng.normal(size=(3, 5, D))
    sentence = rng.normal(size=D)
    perm = rng.permutation(5)
    a = fuse_objects(Tensor(visual), Tensor(semantic), Tensor(sentence), params)
    b = fuse_objects(
        Tensor(visual[:, perm]), Tensor(semantic[:, perm]), Tensor(sentence), params
    )
    np.testing.assert_allclose(a.visual.data, b.visual.data, atol=1e-10)
    np.testing.assert_allclose(a.semantic.data, b.semantic.data, atol=1e-10)


def test_object_permutation_leaves_frame_representations_unchanged():
    # reasoning is equivariant and fusion invariant, so the composition is invariant
    config, params, encoded, sentence = make_level(seed=9, T=3, K=4)
    fusion = init_fusion_params(np.random.default_rng(10), D, np.float64)
    perm = np.random.default_rng(11).permutation(4)
    v1, s1 = object_level_pass(encoded, sentence, params, config)
    frames1 = fuse_objects(v1, s1, sentence, fusion)
    shuffled = EncodedVideo(
        visual=Tensor(encoded.visual.data[:, perm]), semantic=Tensor(encoded.semantic.data[:, perm])
    )
    v2, s2 = object_level_pass(shuffled, sentence, params, config)
    frames2 = fuse_objects(v2, s2, sentence, fusion)
    np.testing.assert_allclose(frames1.visual.data, frames2.visual.data, atol=1e-10)
    np.testing.assert_allclose(frames1.semantic.data, frames2.semantic.data, atol=1e-10)


def test_frames_from_encoder_mean():
    _, _, encoded, _ = make_level(T=4, K=3)
    frames = frames_from_encoder_mean(encoded)
    np.testing.assert_allclose(frames.visual.data, encoded.visual.data.mean(axis=1), atol=1e-12)
    assert frames.semantic.shape == (4, D)


def test_baseline_reasoner_config_plumbs_through():
    config = ModelConfig(hidden_size=D, reasoning_steps=1, reasoner_kind="gcn")
    _, params, encoded, sentence = make_level(config=config)
    assert set(params["visual"].keys()) == {"w", "b"}
    visual, semantic = object_level_pass(encoded, sentence, params, config)
    assert visual.shape == encoded.visual.shape


def test_object_fuse_frame_gradcheck():
    # end-to-end through both levels and the fusion, T=3 K=2 D=6 L=1
    config, params, encoded, sentence = make_level(seed=12)
    fusion = init_fusion_params(np.random.default_rng(13), D, np.float64)
    frame_params = init_level_params(np.random.default_rng(14), config, np.float64)
    probe = Tensor(np.random.default_rng(15).normal(size=(3, D)))

    named = {}
    named.update({f"object/{k}": v for k, v in flatten(params).items()})
    named.update({f"fusion/{k}": v for k, v in flatten(fusion).items()})
    named.update({f"frame/{k}": v for k, v in flatten(frame_params).items()})

    def loss_fn():
        v, s = object_level_pass(encoded, sentence, params, config)
        frames = fuse_objects(v, s, sentence, fusion)
        out = frame_level_pass(frames, sentence, frame_params, config)
        return tt.tsum(out.visual * probe) + tt.tsum(out.semantic)

    report = gradcheck_tensors(loss_fn, named, tolerance=1e-4)
    assert report.passed, report.format()
