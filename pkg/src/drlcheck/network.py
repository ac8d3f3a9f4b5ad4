"""Feed-forward networks built from weighted-sum and ReLU layers.

Networks are immutable once constructed. The on-disk format is a JSON
document::

    {"input_size": 2,
     "layers": [{"kind": "weighted_sum", "weights": [[2, 5], [-4, 1]], "biases": [1, -2]},
                {"kind": "relu"},
                {"kind": "weighted_sum", "weights": [[3, -1]], "biases": [0]}]}

Weights are row-major: one row per neuron of the layer, one column per
neuron of the preceding layer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed networks or model files."""


class NetworkParseError(NetworkError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightedSum:
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "biases", _frozen(self.biases))

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    kind = "weighted_sum"


@dataclass(frozen=True, eq=False)
class Relu:
    kind = "relu"


Layer = Union[WeightedSum, Relu]


@dataclass(frozen=True, eq=False)
class Network:
    """A mapping R^input_size -> R^output_size given by a layer sequence.

    The input layer is implicit (``input_size`` neurons); ``layers`` lists
    the computed layers in order.
    """

    input_size: int
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise NetworkError("network must contain at least input and output layers")
        if self.input_size < 1:
            raise NetworkError("input_size must be positive")
        sizes = [self.input_size]
        for i, layer in enumerate(self.layers):
            if isinstance(layer, WeightedSum):
                w, b = layer.weights, layer.biases
                if w.ndim != 2 or w.shape[1] != sizes[-1]:
                    raise NetworkError(
                        f"layer {i}: weight matrix has shape {w.shape}, "
                        f"expected rows x {sizes[-1]} (size of layer {i - 1})"
                    )
                if b.shape != (w.shape[0],):
                    raise NetworkError(
                        f"layer {i}: {b.shape[0] if b.ndim == 1 else b.shape} biases "
                        f"for {w.shape[0]} neurons"
                    )
                if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                    raise NetworkError(f"layer {i}: non-finite weight or bias")
                sizes.append(w.shape[0])
            elif isinstance(layer, Relu):
                sizes.append(sizes[-1])
            else:
                raise NetworkError(f"layer {i}: unknown layer type {type(layer).__name__}")
        object.__setattr__(self, "_sizes", tuple(sizes))

    @property
    def sizes(self) -> tuple:
        """Sizes s_1..s_m, input layer first."""
        return self._sizes

    @property
    def output_size(self) -> int:
        return self._sizes[-1]

    def relu_positions(self):
        """Indices (into ``layers``) of ReLU layers."""
        return [i for i, l in enumerate(self.layers) if isinstance(l, Relu)]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if self.input_size != other.input_size or len(self.layers) != len(other.layers):
            return False
        for a, b in zip(self.layers, other.layers):
            if type(a) is not type(b):
                return False
            if isinstance(a, WeightedSum) and not (
                np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)
            ):
                return False
        return True

    __hash__ = None


def evaluate(net: Network, x: Sequence[float], trace: bool = False):
    """Forward pass. With ``trace=True`` returns every layer's values, input first."""
    v = np.asarray(x, dtype=float)
    if v.shape != (net.input_size,):
        raise NetworkError(
            f"input layer: got vector of shape {v.shape}, expected ({net.input_size},)"
        )
    values = [v]
    for layer in net.layers:
        if isinstance(layer, WeightedSum):
            v = layer.weights @ v + layer.biases
        else:
            v = np.maximum(v, 0.0)
        values.append(v)
    return values if trace else v


def _layer_from_dict(i: int, d: dict) -> Layer:
    kind = d.get("kind")
    if kind == "relu":
        return Relu()
    if kind == "weighted_sum":
        try:
            w = np.array(d["weights"], dtype=float)
            b = np.array(d["biases"], dtype=float)
        except KeyError as e:
            raise NetworkError(f"layer {i}: missing field {e.args[0]!r}") from None
        except ValueError:
            raise NetworkError(f"layer {i}: ragged or non-numeric weights") from None
        if w.ndim == 1 and w.size == 0:
            w = w.reshape(0, 0)
        return WeightedSum(w, b)
    raise NetworkError(f"layer {i}: unknown layer kind {kind!r}")


def network_from_dict(d: dict) -> Network:
    if not isinstance(d, dict) or "input_size" not in d:
        raise NetworkError("model document must be an object with 'input_size'")
    layers = d.get("layers") or []
    if not layers:
        raise NetworkError("network must contain at least input and output layers")
    return Network(int(d["input_size"]), tuple(_layer_from_dict(i, l) for i, l in enumerate(layers)))


def network_to_dict(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        if isinstance(layer, WeightedSum):
            layers.append(
                {
                    "kind": "weighted_sum",
                    "weights": layer.weights.tolist(),
                    "biases": layer.biases.tolist(),
                }
            )
        else:
            layers.append({"kind": "relu"})
    return {"input_size": net.input_size, "layers": layers}


def load_network(source) -> Network:
    """Load from a path or from the JSON text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkParseError(e.msg, e.lineno, e.colno) from None
    return network_from_dict(doc)


def save_network(net: Network, path=None) -> str:
    # json emits repr() floats, which round-trip exactly
    text = json.dumps(network_to_dict(net), indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def lipschitz_bound(net: Network) -> float:
    """Product of layer-wise infinity norms; bounds |dN(x)|_inf / |dx|_inf."""
    L = 1.0
    for layer in net.layers:
        if isinstance(layer, WeightedSum) and layer.weights.size:
            L *= float(np.abs(layer.weights).sum(axis=1).max())
    return L


def random_network(rng: np.random.Generator, sizes: Sequence[int], scale: float = 1.0) -> Network:
    """Random fully connected ReLU network with the given layer sizes.

    ``sizes`` lists the input size, hidden sizes and output size. A ReLU
    follows every weighted-sum layer except the last.
    """
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.normal(0.0, scale / math.sqrt(a), size=(b, a))
        layers.append(WeightedSum(w, rng.normal(0.0, 0.5 * scale, size=b)))
        if i < len(sizes) - 2:
            layers.append(Relu())
    return Network(sizes[0], tuple(layers))
