"""Sequential models over the engine primitives, plus weight persistence.

The reference classifier for 16x16 single-channel images:

    conv1 (3x3, 1->8, same pad, no bias)
    pool1 (2x2 max, stride 2)
    conv1-relu
    conv2 (3x3, 8->16, same pad, no bias)
    pool2 (2x2 max, stride 2)
    conv2-relu            <- 4x4x16, the default CAM tap
    flatten               <- 256
    dense (256->4, bias)

Pooling before relu is equivalent to the usual relu-then-pool order (max
commutes with a monotone map) and puts the named "conv2-relu" activation at
the spatially pooled 4x4x16 grid that the class-activation maps read.
Convolutions carry no bias so the all-zeros image yields exactly the dense
bias as logits and feature maps scale exactly with input scale.

Weight file format (little-endian), magic "SGW1", then one record per
parameter in model order: name length (u32), name bytes (utf-8), rank
(u32), one u32 per dimension, then float64 payload in row-major order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import Array, Node, Tape
from .rng import SplitMix64, derive

CAM_LAYER = "conv2-relu"
INPUT_SHAPE = (16, 16, 1)
NUM_CLASSES = 4

_STREAM_INIT = 2


class ShapeMismatch(ValueError):
    """Input or weight shape rejected; the message names the offending layer."""


class WeightFileError(ValueError):
    """Malformed weight file (bad magic, bad structure, or truncation)."""


# ---------------------------------------------------------------------------
# layers


class Conv2d:
    def __init__(self, weight: Array):
        self.weight = np.asarray(weight, dtype=np.float64)
        if self.weight.ndim != 4 or self.weight.shape[2:] != (3, 3):
            raise ValueError(f"conv weight must be (out, in, 3, 3), got {self.weight.shape}")

    def out_shape(self, name, in_shape):
        if len(in_shape) != 3 or in_shape[2] != self.weight.shape[1]:
            raise ShapeMismatch(f"layer {name!r}: expected HxWx{self.weight.shape[1]} input, got {in_shape}")
        return (in_shape[0], in_shape[1], self.weight.shape[0])

    def params(self):
        return {"weight": self.weight}

    def apply(self, tape, x, pnodes):
        return engine.conv2d(tape, x, pnodes["weight"])


class Relu:
    def out_shape(self, name, in_shape):
        return in_shape

    def params(self):
        return {}

    def apply(self, tape, x, pnodes):
        return engine.relu(tape, x)


class MaxPool2:
    def out_shape(self, name, in_shape):
        if len(in_shape) != 3 or in_shape[0] % 2 or in_shape[1] % 2:
            raise ShapeMismatch(f"layer {name!r}: needs even HxWxC input, got {in_shape}")
        return (in_shape[0] // 2, in_shape[1] // 2, in_shape[2])

    def params(self):
        return {}

    def apply(self, tape, x, pnodes):
        return engine.maxpool2(tape, x)


class Flatten:
    def out_shape(self, name, in_shape):
        return (int(np.prod(in_shape)),)

    def params(self):
        return {}

    def apply(self, tape, x, pnodes):
        return engine.flatten(tape, x)


class Dense:
    def __init__(self, weight: Array, bias: Array):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError("dense wants weight (in, out) and bias (out,)")

    def out_shape(self, name, in_shape):
        if in_shape != (self.weight.shape[0],):
            raise ShapeMismatch(f"layer {name!r}: expected ({self.weight.shape[0]},) input, got {in_shape}")
        return (self.weight.shape[1],)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def apply(self, tape, x, pnodes):
        return engine.dense(tape, x, pnodes["weight"], pnodes["bias"])


# ---------------------------------------------------------------------------
# model


@dataclass
class ForwardPass:
    """Everything a caller needs to read values or run backward sweeps."""

    tape: Tape
    input_node: Node
    logits_node: Node
    layer_nodes: dict[str, Node]
    param_nodes: dict[str, Node]
    batched: bool

    def _squeeze(self, arr: Array) -> Array:
        return arr if self.batched else arr[0]

    @property
    def logits(self) -> Array:
        return self._squeeze(self.logits_node.value)

    def tapped(self, name: str) -> Array:
        return self._squeeze(self.layer_nodes[name].value)


class Model:
    """Ordered, named layers with a declared input shape.

    Weights are plain float64 arrays owned by the layers; forward passes
    never mutate them, so one model may serve many tapes concurrently.
    """

    def __init__(self, layers: list[tuple[str, object]], input_shape: tuple[int, ...]):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        names = [name for name, _ in self.layers]
        if len(set(names)) != len(names):
            raise ValueError("layer names must be unique")
        # validate the whole shape chain up front; errors name the layer
        shape = self.input_shape
        for name, layer in self.layers:
            shape = layer.out_shape(name, shape)
        if len(shape) != 1:
            raise ValueError(f"model must end in a logits vector, got shape {shape}")
        self.num_classes = shape[0]
        self.val_accuracy: float | None = None
        self.train_seconds: float | None = None

    def layer_names(self) -> list[str]:
        return [name for name, _ in self.layers]

    def param_arrays(self) -> dict[str, Array]:
        out: dict[str, Array] = {}
        for name, layer in self.layers:
            for pname, arr in layer.params().items():
                out[f"{name}.{pname}"] = arr
        return out

    def _lift(self, image: Array) -> tuple[Array, bool]:
        arr = np.asarray(image, dtype=np.float64)
        want = self.input_shape
        if arr.shape == want[:-1] and want[-1] == 1:
            arr = arr[..., None]
        if arr.shape == want:
            return arr[None], False
        if arr.ndim == len(want) + 1 and arr.shape[1:] == want:
            return arr, True
        raise ShapeMismatch(f"layer 'input': model expects {want} (optionally batched), got {arr.shape}")

    def _build(self, tape: Tape, x: Node, param_nodes: dict[str, Node]) -> tuple[Node, dict[str, Node]]:
        layer_nodes: dict[str, Node] = {}
        h = x
        for name, layer in self.layers:
            pnodes = {p: param_nodes[f"{name}.{p}"] for p in layer.params()}
            h = layer.apply(tape, h, pnodes)
            layer_nodes[name] = h
        return h, layer_nodes

    def forward(self, image: Array, taps: tuple[str, ...] = (),
                input_grad: bool = True) -> ForwardPass:
        """Run the network on one image or a batch, recording onto a fresh tape.

        input_grad=False lets backward skip the gradient into the image
        (training only cares about weight gradients).
        """
        names = set(self.layer_names())
        for tap in taps:
            if tap not in names:
                raise ValueError(f"unknown tap {tap!r}; available: {sorted(names)}")
        batch, batched = self._lift(image)
        tape = Tape()
        x = tape.leaf(batch, "input", needs_grad=input_grad)
        param_nodes = {key: tape.leaf(arr, key) for key, arr in self.param_arrays().items()}
        logits, layer_nodes = self._build(tape, x, param_nodes)
        if not np.all(np.isfinite(logits.value)):
            raise FloatingPointError("forward produced non-finite logits")
        return ForwardPass(tape, x, logits, layer_nodes, param_nodes, batched)

    def logits(self, image: Array) -> Array:
        return self.forward(image).logits

    def predict(self, image: Array) -> int:
        """Argmax class; ties break toward the lowest index."""
        return int(np.argmax(self.logits(image)))

    def save(self, path) -> None:
        save_weights(path, self.param_arrays())


# ---------------------------------------------------------------------------
# reference model


def toy_cnn(seed: int) -> Model:
    """The reference quadrant classifier with seeded uniform init.

    Weights are drawn in layer order (conv1, conv2, dense) from
    U[-s, s], s = sqrt(6 / (fan_in + fan_out)); conv fans count the 3x3
    patch. The dense bias starts at zero.
    """
    rng = SplitMix64(derive(seed, _STREAM_INIT))

    def glorot(shape, fan_in, fan_out):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform_array(shape, -s, s)

    w1 = glorot((8, 1, 3, 3), 1 * 9, 8 * 9)
    w2 = glorot((16, 8, 3, 3), 8 * 9, 16 * 9)
    wd = glorot((256, NUM_CLASSES), 256, NUM_CLASSES)
    bd = np.zeros(NUM_CLASSES)
    return Model(
        [
            ("conv1", Conv2d(w1)),
            ("pool1", MaxPool2()),
            ("conv1-relu", Relu()),
            ("conv2", Conv2d(w2)),
            ("pool2", MaxPool2()),
            ("conv2-relu", Relu()),
            ("flatten", Flatten()),
            ("dense", Dense(wd, bd)),
        ],
        INPUT_SHAPE,
    )


def linear_model(weight: Array, bias: Array, input_shape: tuple[int, ...]) -> Model:
    """Flatten followed by a single dense layer; exactly linear in the input."""
    return Model([("flatten", Flatten()), ("dense", Dense(weight, bias))], input_shape)


def constant_gradient_head(n_inputs: int, k: float, bias: Array) -> Model:
    """Dense head whose weight matrix is constant K everywhere.

    Every logit then has the same derivative K with respect to every input
    unit, which forces all post-softmax input gradients to zero regardless
    of how large K is.
    """
    bias = np.asarray(bias, dtype=np.float64)
    w = np.full((n_inputs, bias.size), float(k))
    return Model([("dense", Dense(w, bias))], (n_inputs,))


# ---------------------------------------------------------------------------
# shifted variant: add one hidden unit's activation to every logit


class ShiftedModel(Model):
    """Base model with shift_weight * (one pre-logits unit) added to all logits.

    Softmax outputs and their gradients are provably unchanged; the
    per-logit (pre-softmax) gradients shift by the unit's gradient.
    """

    def __init__(self, base: Model, shift_weight: float, source_unit: int):
        if len(base.layers) < 2:
            raise ValueError("base model has no hidden layer to source the shift from")
        super().__init__(base.layers, base.input_shape)
        self.source_layer = base.layers[-2][0]
        self.source_unit = int(source_unit)
        self.shift_weight = float(shift_weight)
        self.shift_source = f"{self.source_layer}[{self.source_unit}]"

    def _build(self, tape, x, param_nodes):
        logits, layer_nodes = super()._build(tape, x, param_nodes)
        hidden = layer_nodes[self.source_layer]
        if hidden.value.ndim != 2:
            raise ValueError(f"shift source layer {self.source_layer!r} is not a unit vector")
        t = engine.take_col(tape, hidden, self.source_unit)
        shifted = engine.add_rowwise(tape, logits, engine.scale(tape, t, self.shift_weight))
        layer_nodes["shifted-logits"] = shifted
        return shifted, layer_nodes


# ---------------------------------------------------------------------------
# persistence


_MAGIC = b"SGW1"


def save_weights(path, arrays: dict[str, Array]) -> None:
    chunks = [_MAGIC]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=np.float64)
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_weights(path) -> dict[str, Array]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise WeightFileError(f"bad magic {blob[:4]!r}; expected {_MAGIC!r}")
    pos = 4
    out: dict[str, Array] = {}

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise WeightFileError(f"truncated weight file: needed {n} bytes for {what} at byte {pos}")
        piece = blob[pos:pos + n]
        pos += n
        return piece

    while pos < len(blob):
        (nlen,) = struct.unpack("<I", take(4, "name length"))
        name = take(nlen, "name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, "rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims"))
        count = int(np.prod(dims)) if rank else 1
        payload = take(8 * count, f"payload of {name!r}")
        out[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    return out


def load_model(path) -> Model:
    """Reconstruct the reference classifier from a weight file."""
    records = load_weights(path)
    expected = {
        "conv1.weight": (8, 1, 3, 3),
        "conv2.weight": (16, 8, 3, 3),
        "dense.weight": (256, NUM_CLASSES),
        "dense.bias": (NUM_CLASSES,),
    }
    if set(records) != set(expected):
        raise WeightFileError(f"unexpected parameter set {sorted(records)}; expected {sorted(expected)}")
    for name, shape in expected.items():
        if records[name].shape != shape:
            raise WeightFileError(f"parameter {name!r} has shape {records[name].shape}, expected {shape}")
    model = toy_cnn(seed=0)
    for name, layer in model.layers:
        for pname in layer.params():
            layer.params()[pname][...] = records[f"{name}.{pname}"]
    return model
