"""Minimal numpy neural-network kernel: MLPs with analytic backprop, softmax
policies and Adam. Everything runs in float64."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

LEAKY = "leaky"
LINEAR = "linear"
DEFAULT_SLOPE = 0.01


@dataclass
class MlpParams:
    weights: list          # (fan_in, fan_out) matrices
    biases: list
    activations: tuple
    slope: float = DEFAULT_SLOPE

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer lists must have equal length")
        for w0, w1 in zip(self.weights, self.weights[1:]):
            if w0.shape[1] != w1.shape[0]:
                raise ValueError(f"incompatible layer shapes {w0.shape} -> {w1.shape}")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def named(self, prefix: str = "") -> dict:
        out = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}W{k}"] = w
            out[f"{prefix}b{k}"] = b
        return out

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         self.activations, self.slope)


def init_mlp(sizes: Sequence[int], activations: Sequence[str], rng,
             slope: float = DEFAULT_SLOPE) -> MlpParams:
    """Uniform(+-1/sqrt(fan_in)) init for weights and biases."""
    if len(sizes) - 1 != len(activations):
        raise ValueError("need one activation per layer")
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(ws, bs, tuple(activations), slope)


def leaky_relu(x, slope=DEFAULT_SLOPE):
    if 0.0 <= slope <= 1.0:
        return np.maximum(x, slope * x)
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x, slope=DEFAULT_SLOPE):
    return np.where(x > 0, 1.0, slope)


def mlp_forward(params: MlpParams, x):
    """Returns (output, cache). ``x`` is (in,) or (batch, in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} != {params.in_dim}")
    inputs, pre = [], []
    h = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        inputs.append(h)
        z = h @ w + b
        pre.append(z)
        h = leaky_relu(z, params.slope) if act == LEAKY else z
    return h, (inputs, pre)


def mlp_backward(params: MlpParams, cache, grad_out):
    """Gradients of sum(grad_out * output) w.r.t. parameters and input.

    Returns (grads, grad_input) where ``grads`` mirrors ``params.arrays()``.
    """
    inputs, pre = cache
    g = np.asarray(grad_out, dtype=np.float64)
    grads = [None] * (2 * len(params.weights))
    for k in range(len(params.weights) - 1, -1, -1):
        if params.activations[k] == LEAKY:
            g = g * leaky_relu_grad(pre[k], params.slope)
        h = inputs[k]
        if h.ndim == 1:
            grads[2 * k] = np.outer(h, g)
            grads[2 * k + 1] = g.copy()
        else:
            h2 = h.reshape(-1, h.shape[-1])
            g2 = g.reshape(-1, g.shape[-1])
            grads[2 * k] = h2.T @ g2
            grads[2 * k + 1] = g2.sum(axis=0)
        g = g @ params.weights[k].T
    return grads, g


def softmax(logits, axis=-1):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis=-1):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def sample_categorical(probs, rng) -> np.ndarray:
    """Inverse-CDF sampling; ``probs`` is (k,) or (batch, k)."""
    p = np.asarray(probs, dtype=np.float64)
    cdf = np.cumsum(p, axis=-1)
    u = rng.random(p.shape[:-1] + (1,))
    idx = (u * cdf[..., -1:] > cdf).sum(axis=-1)
    return np.minimum(idx, p.shape[-1] - 1)


def log_prob(probs, index) -> float:
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= int(index) < p.shape[-1]:
        raise IndexError(f"action {index} out of range")
    return float(np.log(p[int(index)]))


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: Sequence[np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                     0, lr, beta1, beta2, eps)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
              inplace: bool = True):
    """One bias-corrected Adam update. Updates arrays in place by default."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state differ in length")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    out = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        delta = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        if inplace:
            p -= delta
            out.append(p)
        else:
            out.append(p - delta)
    return out, state


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> list:
    if max_norm <= 0:
        return list(grads)
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if norm <= max_norm:
        return list(grads)
    return [g * (max_norm / norm) for g in grads]


# checkpoints: little-endian float64 blob plus a JSON shape manifest
def save_arrays(path, arrays: Mapping[str, np.ndarray]) -> None:
    path = Path(path)
    manifest, chunks, offset = [], [], 0
    for name, arr in arrays.items():
        a = np.array(arr, dtype="<f8", order="C")
        manifest.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.size
        chunks.append(a.ravel())
    blob = np.concatenate(chunks) if chunks else np.zeros(0, dtype="<f8")
    path.with_suffix(".bin").write_bytes(blob.astype("<f8").tobytes())
    path.with_suffix(".json").write_text(json.dumps({"dtype": "<f8", "arrays": manifest}, indent=1))


def load_arrays(path) -> dict:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    blob = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype=manifest["dtype"])
    out = {}
    for entry in manifest["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        out[entry["name"]] = blob[entry["offset"]:entry["offset"] + size].reshape(entry["shape"]).astype(np.float64)
    return out
