"""Read/write controllers against straight-line oracles, plus the invariants
the reasoning step is supposed to keep: simplex attention, strict gates,
permutation equivariance, saturation identity, and step-count contracts.
"""

import numpy as np
import pytest

import hvsarn.tensor as tt
from hvsarn.graph_memory import (
    BASELINE_KINDS,
    GraphMemoryState,
    baseline_reasoner,
    baseline_step,
    init_baseline_params,
    init_graph_memory_params,
    neighbor_context,
    read,
    read_batch,
    reason,
    reason_batch,
    run_reasoner,
    write,
    write_batch,
)
from hvsarn.params import astype, flatten
from hvsarn.tensor import Tensor
from oracles import as_np, read_oracle, reason_oracle, softmax_1d, write_oracle

from hvsarn.training import gradcheck_tensors


def make_instance(seed, K=4, D=6):
    rng = np.random.default_rng(seed)
    params = init_graph_memory_params(rng, D, np.float64)
    q = rng.normal(size=D)
    nodes = rng.normal(size=(K, D))
    return params, q, nodes


def test_read_matches_oracle_many_seeds():
    for seed in range(25):
        params, q, nodes = make_instance(seed)
        content, q_new, attn = read_batch(
            Tensor(q.reshape(1, -1)), Tensor(nodes.reshape(1, *nodes.shape)), params
        )
        r_ref, q_ref, attn_ref = read_oracle(q, nodes, as_np(params)["read"])
        np.testing.assert_allclose(content.data[0], r_ref, atol=1e-10)
        np.testing.assert_allclose(q_new.data[0], q_ref, atol=1e-10)
        np.testing.assert_allclose(attn.data[0], attn_ref, atol=1e-10)


def test_write_matches_oracle_many_seeds():
    for seed in range(25):
        params, q, nodes = make_instance(seed)
        q_new = read_oracle(q, nodes, as_np(params)["read"])[1]
        out, _ = write_batch(
            Tensor(q_new.reshape(1, -1)), Tensor(nodes.reshape(1, *nodes.shape)), params
        )
        ref = write_oracle(q_new, nodes, as_np(params)["write"])
        np.testing.assert_allclose(out.data[0], ref, atol=1e-10)


def test_multi_step_reason_matches_oracle():
    for seed in range(5):
        params, q, nodes = make_instance(seed, K=3)
        state = reason(GraphMemoryState(Tensor(q), Tensor(nodes)), params, num_steps=3)
        q_ref, n_ref = reason_oracle(q, nodes, as_np(params), 3)
        np.testing.assert_allclose(state.controller.data, q_ref, atol=1e-10)
        np.testing.assert_allclose(state.nodes.data, n_ref, atol=1e-10)
        assert state.step == 3


def test_batch_equals_per_graph_loop():
    rng = np.random.default_rng(11)
    params = init_graph_memory_params(rng, 6, np.float64)
    B, K, D = 5, 3, 6
    qs = rng.normal(size=(B, D))
    nodes = rng.normal(size=(B, K, D))
    q_out, n_out = reason_batch(Tensor(qs), Tensor(nodes), params, 2)
    for b in range(B):
        state = reason(GraphMemoryState(Tensor(qs[b]), Tensor(nodes[b])), params, 2)
        np.testing.assert_allclose(q_out.data[b], state.controller.data, atol=1e-12)
        np.testing.assert_allclose(n_out.data[b], state.nodes.data, atol=1e-12)


def test_read_attention_is_simplex():
    for seed in range(10):
        params, q, nodes = make_instance(seed, K=7)
        _, _, attn = read_batch(Tensor(q.reshape(1, -1)), Tensor(nodes[None]), params)
        np.testing.assert_allclose(attn.data.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(attn.data >= 0)


def test_neighbor_attention_excludes_self():
    params, _, nodes = make_instance(3, K=5)
    _, attn = neighbor_context(Tensor(nodes[None]), params)
    np.testing.assert_allclose(attn.data.sum(axis=2), 1.0, atol=1e-6)
    diag = np.diagonal(attn.data[0])
    np.testing.assert_allclose(diag, 0.0, atol=0.0)  # exactly zero, not merely small


def test_single_node_context_is_zero():
    params, q, nodes = make_instance(4, K=1)
    context, attn = neighbor_context(Tensor(nodes[None]), params)
    assert attn is None
    np.testing.assert_allclose(context.data, 0.0)
    # the write still updates the lone node through its gate
    out = write(GraphMemoryState(Tensor(q), Tensor(nodes)), Tensor(q), params)
    assert out.shape == (1, 6)


def test_zero_steps_is_identity():
    params, q, nodes = make_instance(5)
    state = reason(GraphMemoryState(Tensor(q), Tensor(nodes)), params, 0)
    np.testing.assert_array_equal(state.controller.data, q)
    np.testing.assert_array_equal(state.nodes.data, nodes)
    with pytest.raises(ValueError):
        reason_batch(Tensor(q[None]), Tensor(nodes[None]), params, -1)


def test_gates_strictly_inside_unit_interval():
    for seed in range(10):
        params, q, nodes = make_instance(seed)
        p = as_np(params)
        _, q_new, _ = read_oracle(q, nodes, p["read"])
        # recompute the gate exactly as the oracle does and check openness
        r = read_oracle(q, nodes, p["read"])[0]
        gate = 1.0 / (1.0 + np.exp(-(q @ p["read"]["gate_wq"] + r @ p["read"]["gate_wr"])))
        assert np.all(gate > 0.0) and np.all(gate < 1.0)


def test_saturated_read_gate_preserves_controller():
    params, q, nodes = make_instance(6)
    params["read"]["gate_b"].data[:] = 20.0
    _, q_new, _ = read_batch(Tensor(q[None]), Tensor(nodes[None]), params)
    gate_arg = (
        q @ params["read"]["gate_wq"].data + np.zeros_like(q) @ params["read"]["gate_wr"].data
    )
    assert np.max(np.abs(q_new.data[0] - q)) < 1e-6


def test_saturated_write_gate_preserves_nodes():
    params, q, nodes = make_instance(7)
    params["write"]["gate_b"].data[:] = 20.0
    out, _ = write_batch(Tensor(q[None]), Tensor(nodes[None]), params)
    assert np.max(np.abs(out.data[0] - nodes)) < 1e-6


def test_permutation_equivariance_and_controller_invariance():
    rng = np.random.default_rng(21)
    for seed in range(10):
        params, q, nodes = make_instance(seed, K=5)
        perm = rng.permutation(5)
        state_a = reason(GraphMemoryState(Tensor(q), Tensor(nodes)), params, 2)
        state_b = reason(GraphMemoryState(Tensor(q), Tensor(nodes[perm])), params, 2)
        np.testing.assert_allclose(state_b.nodes.data, state_a.nodes.data[perm], atol=1e-10)
        np.testing.assert_allclose(state_b.controller.data, state_a.controller.data, atol=1e-10)


def test_reason_gradcheck_small():
    # K=3 so the pairwise MLP actually receives gradient (a lone neighbor's
    # softmax is constant and grads vanish by construction).
    rng = np.random.default_rng(2)
    params = init_graph_memory_params(rng, 4, np.float64)
    q = Tensor(rng.normal(size=4))
    nodes = Tensor(rng.normal(size=(3, 4)))
    probe = Tensor(rng.normal(size=(3, 4)))

    def loss_fn():
        state = reason(GraphMemoryState(q, nodes), params, 2)
        return tt.tsum(state.nodes * probe) + tt.tsum(state.controller * state.controller)

    report = gradcheck_tensors(loss_fn, flatten(params), tolerance=1e-6)
    assert report.passed, report.format()
    assert all(e.status == "ok" for e in report.entries), report.format()


def test_state_shape_validation():
    with pytest.raises(ValueError, match="controller"):
        GraphMemoryState(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
    with pytest.raises(ValueError, match="nodes"):
        GraphMemoryState(Tensor(np.zeros(3)), Tensor(np.zeros(3)))


# -- baseline reasoners ---------------------------------------------------------


def test_gcn_is_neighbor_mean_affine():
    rng = np.random.default_rng(31)
    params = init_baseline_params(rng, "gcn", 4, np.float64)
    nodes = rng.normal(size=(3, 4))
    out = baseline_reasoner("gcn", Tensor(nodes), Tensor(rng.normal(size=4)), params)
    for k in range(3):
        neigh = (nodes.sum(axis=0) - nodes[k]) / 2.0
        ref = np.tanh(neigh @ params["w"].data + params["b"].data)
        np.testing.assert_allclose(out.data[k], ref, atol=1e-12)


def test_gcn_identity_weights_two_clique():
    # with identity weights, zero bias, and no nonlinearity the layer output
    # is exactly the other node of a 2-clique
    params = {"w": Tensor(np.eye(3)), "b": Tensor(np.zeros(3))}
    nodes = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    out = baseline_reasoner(
        "gcn", Tensor(nodes), Tensor(np.zeros(3)), params, activation="identity"
    )
    np.testing.assert_allclose(out.data, nodes[::-1], atol=1e-12)


def test_gcn_single_node_sees_zero_context():
    rng = np.random.default_rng(32)
    params = init_baseline_params(rng, "gcn", 4, np.float64)
    out = baseline_reasoner("gcn", Tensor(rng.normal(size=(1, 4))), Tensor(np.zeros(4)), params)
    np.testing.assert_allclose(out.data[0], np.tanh(params["b"].data), atol=1e-12)


def test_gcn_fusion_concatenates_controller():
    rng = np.random.default_rng(33)
    params = init_baseline_params(rng, "gcn_fusion", 3, np.float64)
    nodes = rng.normal(size=(4, 3))
    ctrl = rng.normal(size=3)
    out = baseline_reasoner("gcn_fusion", Tensor(nodes), Tensor(ctrl), params)
    ext = np.concatenate([nodes, np.tile(ctrl, (4, 1))], axis=1)
    for k in range(4):
        neigh = (ext.sum(axis=0) - ext[k]) / 3.0
        ref = np.tanh(neigh @ params["w"].data + params["b"].data)
        np.testing.assert_allclose(out.data[k], ref, atol=1e-12)


def test_self_attention_baseline_residual_and_simplex():
    rng = np.random.default_rng(34)
    params = init_baseline_params(rng, "self_attention", 4, np.float64)
    nodes = rng.normal(size=(1, 5, 4))
    out, attn = baseline_step("self_attention", Tensor(nodes), Tensor(np.zeros((1, 4))), params)
    np.testing.assert_allclose(attn.data.sum(axis=2), 1.0, atol=1e-6)
    q = nodes[0] @ params["wq"].data
    k = nodes[0] @ params["wk"].data
    v = nodes[0] @ params["wv"].data
    for i in range(5):
        w = softmax_1d(q[i] @ k.T / 2.0)  # sqrt(D)=2
        np.testing.assert_allclose(out.data[0, i], nodes[0, i] + w @ v, atol=1e-10)


def test_memory_network_has_no_edges():
    # node k's update must not depend on any other node
    rng = np.random.default_rng(35)
    params = init_baseline_params(rng, "memory_network", 4, np.float64)
    ctrl = rng.normal(size=(1, 4))
    nodes = rng.normal(size=(1, 3, 4))
    out1, _ = baseline_step("memory_network", Tensor(nodes), Tensor(ctrl), params)
    perturbed = nodes.copy()
    perturbed[0, 1:] += 100.0
    out2, _ = baseline_step("memory_network", Tensor(perturbed), Tensor(ctrl), params)
    np.testing.assert_allclose(out1.data[0, 0], out2.data[0, 0], atol=1e-12)


def test_run_reasoner_dispatch():
    rng = np.random.default_rng(36)
    q = Tensor(rng.normal(size=(1, 4)))
    nodes = Tensor(rng.normal(size=(1, 3, 4)))
    for kind in BASELINE_KINDS:
        params = init_baseline_params(rng, kind, 4, np.float64)
        ctrl_out, nodes_out = run_reasoner(kind, q, nodes, params, 2)
        assert ctrl_out is q  # baselines never touch the controller
        assert nodes_out.shape == nodes.shape
    with pytest.raises(ValueError, match="unknown baseline"):
        init_baseline_params(rng, "mamba", 4, np.float64)
    gm = init_graph_memory_params(rng, 4, np.float64)
    ctrl_out, _ = run_reasoner("graph_memory", q, nodes, gm, 1)
    assert ctrl_out is not q


def test_params_cast_between_precisions():
    rng = np.random.default_rng(37)
    params = init_graph_memory_params(rng, 4, np.float32)
    assert flatten(params)["read/attn_w1"].dtype == np.float32
    p64 = astype(params, np.float64)
    assert flatten(p64)["read/attn_w1"].dtype == np.float64
