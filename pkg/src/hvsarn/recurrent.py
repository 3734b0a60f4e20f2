"""Gated recurrent unit, unrolled on the tape.

Update convention (documented here once; the verification oracles restate it):

    z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
    r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
    g_t = tanh(Wh x_t + Uh (r_t * h_{t-1}) + bh)
    h_t = (1 - z_t) * h_{t-1} + z_t * g_t

The initial state is zero.  A bidirectional pass runs one GRU left-to-right
and an independently parameterized one right-to-left and concatenates the
per-position states, so the output width is twice the hidden size.
"""

from __future__ import annotations

import numpy as np

from . import tensor as tt
from .params import weight, zeros
from .tensor import Tensor


def init_gru_params(rng: np.random.Generator, input_dim: int, hidden_dim: int, dtype) -> dict:
    def gate():
        return {
            "w": weight(rng, (input_dim, hidden_dim), dtype),
            "u": weight(rng, (hidden_dim, hidden_dim), dtype),
            "b": zeros((hidden_dim,), dtype),
        }

    return {"update": gate(), "reset": gate(), "cand": gate()}


def init_bigru_params(rng: np.random.Generator, input_dim: int, hidden_dim: int, dtype) -> dict:
    return {
        "fwd": init_gru_params(rng, input_dim, hidden_dim, dtype),
        "bwd": init_gru_params(rng, input_dim, hidden_dim, dtype),
    }


def gru_sequence(x: Tensor, params: dict, reverse: bool = False):
    """Run the GRU over x [N, In]; returns (states [N, H], final state [1, H])."""
    n = x.shape[0]
    hidden = params["update"]["u"].shape[0]
    h = Tensor(np.zeros((1, hidden), dtype=x.dtype))
    order = range(n - 1, -1, -1) if reverse else range(n)
    states: list[Tensor | None] = [None] * n
    for t in order:
        xt = tt.reshape(x[t], (1, -1))
        z = tt.sigmoid(
            tt.linear(xt, params["update"]["w"])
            + tt.linear(h, params["update"]["u"])
            + params["update"]["b"]
        )
        r = tt.sigmoid(
            tt.linear(xt, params["reset"]["w"])
            + tt.linear(h, params["reset"]["u"])
            + params["reset"]["b"]
        )
        g = tt.tanh(
            tt.linear(xt, params["cand"]["w"])
            + tt.linear(r * h, params["cand"]["u"])
            + params["cand"]["b"]
        )
        h = (1.0 - z) * h + z * g
        states[t] = h
    return tt.concat(states, axis=0), h


def bigru(x: Tensor, params: dict):
    """Bidirectional pass over x [N, In].

    Returns (per-position states [N, 2H], final-state concat [2H]): forward
    final state is at the last position, backward at the first.
    """
    states_f, last_f = gru_sequence(x, params["fwd"], reverse=False)
    states_b, last_b = gru_sequence(x, params["bwd"], reverse=True)
    contextual = tt.concat([states_f, states_b], axis=1)
    final = tt.reshape(tt.concat([last_f, last_b], axis=1), (-1,))
    return contextual, final
