"""Feed-forward multilayer perceptron with a flat parameter-vector view.

Every optimizer in this package works on the flattened parameter vector, so
the flatten/unflatten round trip and its ordering stability matter more than
usual. Hidden layers use tanh by default (smooth, with closed-form
derivatives up to third order as the jet backward pass requires); the output
layer is affine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .errors import ConfigurationError, ContractViolationError

Array = np.ndarray


@dataclass
class MLP:
    layer_sizes: tuple[int, ...]
    weights: list[Array]
    biases: list[Array]
    hidden_activation: str = "tanh"

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init(layer_sizes, seed: int, hidden_activation: str = "tanh") -> MLP:
    """Seeded Glorot-uniform initialization; biases start at zero."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ConfigurationError(f"invalid layer sizes {sizes}")
    autodiff.get_activation(hidden_activation)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MLP(sizes, weights, biases, hidden_activation)


def forward(net: MLP, inputs) -> float:
    """Scalar network output.

    Delegates to the jet forward pass and reads its value channel, so the
    two are identical by construction.
    """
    inputs = np.atleast_1d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape != (net.layer_sizes[0],):
        raise ContractViolationError(
            f"input shape {inputs.shape} does not match input width {net.layer_sizes[0]}"
        )
    if net.layer_sizes[0] == 1:
        jet = autodiff.forward_jet(net, 0.0, float(inputs[0]))
    else:
        jet = autodiff.forward_jet(net, float(inputs[0]), float(inputs[1]))
    return jet.v


def forward_batch(net: MLP, xs: Array, ts: Array) -> Array:
    """Value channel of the jet forward pass at a batch of (x, t) points."""
    return autodiff.forward_jet_batch(net, xs, ts).v


def flatten(net: MLP) -> Array:
    """Parameters as one vector: per layer, row-major weights then bias."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten(net: MLP, vector: Array) -> MLP:
    """New network with the same shape and the given parameter vector."""
    vector = np.asarray(vector, dtype=np.float64)
    expected = net.parameter_count()
    if vector.shape != (expected,):
        raise ContractViolationError(
            f"parameter vector has length {vector.size}, expected {expected}"
        )
    weights, biases, offset = [], [], 0
    for w, b in zip(net.weights, net.biases):
        weights.append(vector[offset:offset + w.size].reshape(w.shape).copy())
        offset += w.size
        biases.append(vector[offset:offset + b.size].copy())
        offset += b.size
    return MLP(net.layer_sizes, weights, biases, net.hidden_activation)


def save_params(path, vector: Array) -> None:
    """Checkpoint as text, one decimal value per line (full 64-bit precision)."""
    with open(path, "w") as fh:
        for value in np.asarray(vector, dtype=np.float64):
            fh.write(repr(float(value)) + "\n")


def load_params(path) -> Array:
    with open(path) as fh:
        return np.array([float(line) for line in fh if line.strip()], dtype=np.float64)
