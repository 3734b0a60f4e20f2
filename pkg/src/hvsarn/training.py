"""Optimization loop, checkpointing, and gradient verification.

The trainer is deliberately plain: Adam over every parameter tensor, batches
drawn by reshuffled-epoch order from a seeded generator, loss averaged over
the batch. Identical seeds and hyperparameters give bit-identical curves.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import tensor as tt
from .data import ModelConfig
from .encoders import InputDims
from .fileio import FormatError, atomic_write_json, read_blob, read_json, write_blob
from .model import Model, build_model
from .params import zero_grads
from .tensor import Tensor


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass
class TrainHyper:
    learning_rate: float = 1e-3
    steps: int = 500
    batch_size: int = 8

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainState:
    model: Model
    moments_m: dict[str, np.ndarray]
    moments_v: dict[str, np.ndarray]
    step: int = 0


_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


def init_state(model: Model) -> TrainState:
    named = model.named_parameters()
    return TrainState(
        model=model,
        moments_m={k: np.zeros_like(t.data) for k, t in named.items()},
        moments_v={k: np.zeros_like(t.data) for k, t in named.items()},
        step=0,
    )


def adam_update(state: TrainState, learning_rate: float) -> None:
    """One Adam step over accumulated gradients (missing grads count as zero)."""
    state.step += 1
    t = state.step
    bias1 = 1.0 - _ADAM_BETA1**t
    bias2 = 1.0 - _ADAM_BETA2**t
    for name, param in state.model.named_parameters().items():
        g = param.grad
        if g is None:
            continue
        m = state.moments_m[name]
        v = state.moments_v[name]
        m *= _ADAM_BETA1
        m += (1.0 - _ADAM_BETA1) * g
        v *= _ADAM_BETA2
        v += (1.0 - _ADAM_BETA2) * (g * g)
        step_size = learning_rate / bias1
        param.data -= (step_size * m / (np.sqrt(v / bias2) + _ADAM_EPS)).astype(
            param.data.dtype, copy=False
        )


class _BatchOrder:
    """Reshuffled-epoch index stream."""

    def __init__(self, count: int, seed: int):
        self._rng = np.random.default_rng([abs(seed), count, 0x0B_A7C4])
        self._count = count
        self._queue: list[int] = []

    def draw(self, k: int) -> list[int]:
        out: list[int] = []
        while len(out) < k:
            if not self._queue:
                self._queue = list(self._rng.permutation(self._count))
            out.append(int(self._queue.pop()))
        return out


def train(
    dataset,
    config: ModelConfig,
    hyper: TrainHyper | None = None,
    dtype=np.float32,
    out_dir: str | None = None,
    checkpoint_every: int = 0,
    log=None,
) -> tuple[TrainState, list[float]]:
    """Fit a model to `dataset`; returns the final state and the loss curve.

    `out_dir`, when given, receives a final checkpoint (and intermediate ones
    every `checkpoint_every` steps).
    """
    if hyper is None:
        hyper = TrainHyper()
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    if any(video.annotation is None for video, _ in dataset):
        raise ValueError("training requires annotated samples")

    dims = InputDims.of(*dataset[0])
    model = build_model(config, dims, dtype)
    state = init_state(model)
    order = _BatchOrder(len(dataset), config.seed)
    curve: list[float] = []

    for step in range(1, hyper.steps + 1):
        batch = order.draw(hyper.batch_size)
        zero_grads(model.params)
        total: Tensor | None = None
        for idx in batch:
            video, query = dataset[idx]
            sample_loss = model.loss(video, query)
            total = sample_loss if total is None else total + sample_loss
        assert total is not None
        mean_loss = total * (1.0 / hyper.batch_size)
        value = float(mean_loss.data)
        if not np.isfinite(value):
            raise TrainingDiverged(f"non-finite loss {value!r} at step {step}")
        mean_loss.backward()
        adam_update(state, hyper.learning_rate)
        curve.append(value)
        if log is not None and (step % max(1, hyper.steps // 10) == 0 or step == 1):
            log(f"step {step}/{hyper.steps} loss {value:.4f}")
        if out_dir and checkpoint_every and step % checkpoint_every == 0 and step < hyper.steps:
            save_checkpoint(os.path.join(out_dir, f"checkpoint_{step:06d}"), state)

    if out_dir:
        save_checkpoint(os.path.join(out_dir, "checkpoint"), state)
    return state, curve


# -- checkpoints -------------------------------------------------------------

_CHECKPOINT_KIND = "hvsarn-checkpoint"


def _dtype_code(dtype) -> str:
    dtype = np.dtype(dtype)
    if dtype == np.float32:
        return "<f4"
    if dtype == np.float64:
        return "<f8"
    raise ValueError(f"unsupported checkpoint dtype {dtype}")


def save_checkpoint(out_dir: str, state: TrainState) -> None:
    """Write model + optimizer state as manifest.json plus raw blobs.

    Round-trips are bit-exact: blobs hold the tensors' native little-endian
    bytes and nothing is re-derived on load.
    """
    os.makedirs(out_dir, exist_ok=True)
    named = state.model.named_parameters()
    code = _dtype_code(next(iter(named.values())).data.dtype)
    ext = ".f32" if code == "<f4" else ".f64"

    groups = [
        ("params", {k: t.data for k, t in named.items()}),
        ("adam_m", state.moments_m),
        ("adam_v", state.moments_v),
    ]
    tensors = []
    i = 0
    for prefix, group in groups:
        for name in sorted(group):
            arr = group[name]
            filename = f"t{i:05d}{ext}"
            write_blob(os.path.join(out_dir, filename), arr, code)
            tensors.append(
                {"name": f"{prefix}/{name}", "shape": list(arr.shape), "file": filename}
            )
            i += 1

    manifest = {
        "kind": _CHECKPOINT_KIND,
        "format_version": 1,
        "dtype": code,
        "step": state.step,
        "config": state.model.config.to_dict(),
        "dims": {
            "feature_dim": state.model.dims.feature_dim,
            "semantic_dim": state.model.dims.semantic_dim,
            "word_dim": state.model.dims.word_dim,
        },
        "tensors": tensors,
    }
    atomic_write_json(os.path.join(out_dir, "manifest.json"), manifest)


def load_checkpoint(in_dir: str) -> TrainState:
    manifest = read_json(os.path.join(in_dir, "manifest.json"))
    if manifest.get("kind") != _CHECKPOINT_KIND:
        raise FormatError(f"{in_dir}: not a checkpoint (kind={manifest.get('kind')!r})")
    code = manifest["dtype"]
    dtype = np.float32 if code == "<f4" else np.float64
    config = ModelConfig.from_dict(manifest["config"])
    dims = InputDims(**manifest["dims"])
    model = build_model(config, dims, dtype)
    state = init_state(model)
    state.step = int(manifest["step"])

    named = model.named_parameters()
    seen: set[str] = set()
    for entry in manifest["tensors"]:
        full_name = entry["name"]
        shape = tuple(entry["shape"])
        arr = read_blob(os.path.join(in_dir, entry["file"]), shape, code, field=full_name)
        prefix, _, name = full_name.partition("/")
        if prefix == "params":
            if name not in named:
                raise FormatError(f"{in_dir}: checkpoint has unknown parameter {name!r}")
            if named[name].data.shape != shape:
                raise FormatError(
                    f"{in_dir}: parameter {name!r} has shape {shape}, "
                    f"expected {named[name].data.shape}"
                )
            named[name].data = arr
        elif prefix == "adam_m":
            state.moments_m[name] = arr
        elif prefix == "adam_v":
            state.moments_v[name] = arr
        else:
            raise FormatError(f"{in_dir}: unknown tensor group {prefix!r}")
        seen.add(full_name)

    missing = [f"params/{k}" for k in named if f"params/{k}" not in seen]
    if missing:
        raise FormatError(f"{in_dir}: checkpoint is missing tensors {missing[:4]}")
    return state


# -- gradient verification ---------------------------------------------------


@dataclass
class GradcheckEntry:
    name: str
    max_rel_err: float
    status: str  # "ok" | "fail" | "unused"


@dataclass
class GradcheckReport:
    entries: list[GradcheckEntry]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def failures(self) -> list[str]:
        return [e.name for e in self.entries if e.status == "fail"]

    def format(self) -> str:
        width = max((len(e.name) for e in self.entries), default=4)
        lines = [f"{'tensor'.ljust(width)}  max_rel_err  status"]
        for e in self.entries:
            lines.append(f"{e.name.ljust(width)}  {e.max_rel_err:11.3e}  {e.status}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict} (tolerance {self.tolerance:g}, {len(self.entries)} tensors)")
        return "\n".join(lines)


def gradcheck_tensors(
    loss_fn,
    named: dict[str, Tensor],
    tolerance: float = 1e-4,
    fd_step: float = 1e-5,
) -> GradcheckReport:
    """Compare tape gradients of `loss_fn()` against central finite differences.

    Works in whatever dtype the tensors carry; call it on a 64-bit model or
    the differences will drown in rounding noise. The per-tensor error is
    max|analytic - fd| relative to the tensor's largest gradient magnitude,
    floored at 1e-3 so that parameters whose true gradient vanishes by
    symmetry (e.g. a bias shared by every logit of a softmax) register FD
    cancellation noise (~1e-11) as zero rather than as a failure. A tensor
    whose analytic gradient is absent/zero and whose FD probes all come back
    zero is flagged "unused" rather than failed.
    """
    for t in named.values():
        t.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {
        name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
        for name, t in named.items()
    }
    had_grad = {name: t.grad is not None for name, t in named.items()}

    entries = []
    with tt.no_grad():
        for name in sorted(named):
            t = named[name]
            flat = t.data.reshape(-1)
            fd = np.zeros_like(flat)
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + fd_step
                hi = float(loss_fn().data)
                flat[i] = saved - fd_step
                lo = float(loss_fn().data)
                flat[i] = saved
                fd[i] = (hi - lo) / (2.0 * fd_step)
            a = analytic[name].reshape(-1)
            scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(fd))), 1e-3)
            rel = float(np.max(np.abs(a - fd))) / scale
            if not had_grad[name] and np.all(np.abs(fd) < 1e-10):
                entries.append(GradcheckEntry(name, 0.0, "unused"))
            elif np.all(a == 0.0) and np.all(np.abs(fd) < 1e-10):
                entries.append(GradcheckEntry(name, 0.0, "unused"))
            else:
                status = "ok" if rel < tolerance else "fail"
                entries.append(GradcheckEntry(name, rel, status))
    return GradcheckReport(entries=entries, tolerance=tolerance)


def _gradcheck_sample(seed: int = 7, num_frames: int = 3, num_objects: int = 2, num_tokens: int = 3):
    """Tiny hand-sized instance for FD verification (small dims keep it fast)."""
    from .data import GroundTruthSegment, QuerySample, VideoSample

    rng = np.random.default_rng([seed, num_frames, num_objects])
    feature_dim, semantic_dim, word_dim = 5, 4, 8
    x0 = rng.uniform(0.0, 0.4, size=(num_frames, num_objects))
    y0 = rng.uniform(0.0, 0.4, size=(num_frames, num_objects))
    w = rng.uniform(0.2, 0.5, size=(num_frames, num_objects))
    h = rng.uniform(0.2, 0.5, size=(num_frames, num_objects))
    boxes = np.stack([x0, y0, x0 + w, y0 + h], axis=2)
    video = VideoSample(
        video_id=f"gradcheck-{seed}",
        num_frames=num_frames,
        num_objects=num_objects,
        object_features=rng.normal(size=(num_frames, num_objects, feature_dim)),
        boxes=boxes,
        semantic_embeddings=rng.normal(size=(num_frames, num_objects, semantic_dim)),
        annotation=GroundTruthSegment(0.34, 1.0),
    )
    query = QuerySample(
        query_id=f"gradcheck-{seed}-q",
        token_embeddings=rng.normal(size=(num_tokens, word_dim)),
        num_tokens=num_tokens,
    )
    return video, query


def gradcheck(
    config: ModelConfig | None = None,
    tolerance: float = 1e-4,
    fd_step: float = 1e-5,
) -> GradcheckReport:
    """End-to-end FD check of the full network loss on a tiny 64-bit instance."""
    if config is None:
        config = ModelConfig(hidden_size=6, reasoning_steps=1)
    video, query = _gradcheck_sample()
    dims = InputDims.of(video, query)
    model = build_model(config, dims, np.float64)
    named = model.named_parameters()
    return gradcheck_tensors(
        lambda: model.loss(video, query), named, tolerance=tolerance, fd_step=fd_step
    )
