"""Template-augmented graph classifier with hand-derived gradients.

The ``cnn`` encoder applies three structured layers to the augmented matrix
``X = W (*) G`` (entrywise product with the global template):

* edge-to-edge: per filter f, ``Y_f(i,j) = sum_m row_f(m) X(i,m)
  + sum_m col_f(m) X(m,j) + bias_f`` (a cross-shaped receptive field),
* edge-to-node: ``N_g(i) = sum_f sum_j w_gf(j) Y_f(i,j) + bias_g``,
* node-to-graph: ``h_u = sum_g sum_i v_ug(i) N_g(i) + bias_u``,

each followed by a leaky rectifier, then a linear output head.  The ``mlp``
encoder flattens the strict upper triangle of ``X`` through one hidden layer
of width ``f3`` into the same head.  All gradients are computed in closed
form (no autodiff) and checked against central finite differences in the
test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .connectivity import ConnectivityMatrix, GlobalTemplate, augment, global_template
from .dataset import LabeledDataset
from .errors import DataFormatError, DimensionMismatch, NonFinite, StaleCache
from .templates import TemplateSet, template_fingerprint

ENCODER_KINDS = ("cnn", "mlp")


@dataclass
class NetworkHyperParams:
    f1: int = 8
    f2: int = 16
    f3: int = 32
    leaky_slope: float = 0.33
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 16
    epochs: int = 100
    seed: int = 0
    encoder_kind: str = "cnn"

    def validate(self) -> None:
        if min(self.f1, self.f2, self.f3) < 1:
            raise ValueError("f1, f2, f3 must be positive")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.encoder_kind not in ENCODER_KINDS:
            raise ValueError(
                f"encoder_kind must be one of {ENCODER_KINDS}, "
                f"got {self.encoder_kind!r}"
            )


@dataclass
class NetworkParameters:
    """Named parameter tensors for one encoder kind."""

    encoder_kind: str
    num_rois: int
    num_classes: int
    leaky_slope: float
    arrays: dict[str, np.ndarray]

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            self.encoder_kind,
            self.num_rois,
            self.num_classes,
            self.leaky_slope,
            {k: v.copy() for k, v in self.arrays.items()},
        )

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def scalar_count(self) -> int:
        return sum(v.size for v in self.arrays.values())


@dataclass
class ForwardCache:
    encoder_kind: str
    num_rois: int
    num_classes: int
    values: dict[str, np.ndarray]


@dataclass
class TrainedModel:
    params: NetworkParameters
    hyper: NetworkHyperParams
    templates_fingerprint: str
    training_history: list[tuple[float, float]]


def init_network(
    num_rois: int, num_classes: int, hyper: NetworkHyperParams
) -> NetworkParameters:
    """Seed-deterministic uniform init, scale sqrt(6 / (fan_in + fan_out)).

    Fan counts: edge-to-edge combines 2M inputs per output entry and fans
    out to 2M entries per filter; edge-to-node combines f1*M and fans out to
    f2; node-to-graph combines f2*M and fans out to f3; the head and the mlp
    hidden layer are plain dense layers.  Biases start at zero.
    """
    hyper.validate()
    m, c = num_rois, num_classes
    rng = np.random.default_rng(hyper.seed)

    def glorot(shape, fan_in, fan_out):
        s = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-s, s, size=shape)

    arrays: dict[str, np.ndarray] = {}
    if hyper.encoder_kind == "cnn":
        arrays["e2e_row"] = glorot((hyper.f1, m), 2 * m, 2 * m * hyper.f1)
        arrays["e2e_col"] = glorot((hyper.f1, m), 2 * m, 2 * m * hyper.f1)
        arrays["e2e_bias"] = np.zeros(hyper.f1)
        arrays["e2n_w"] = glorot((hyper.f2, hyper.f1, m), hyper.f1 * m, hyper.f2)
        arrays["e2n_bias"] = np.zeros(hyper.f2)
        arrays["n2g_w"] = glorot((hyper.f3, hyper.f2, m), hyper.f2 * m, hyper.f3)
        arrays["n2g_bias"] = np.zeros(hyper.f3)
    else:
        n_pairs = m * (m - 1) // 2
        arrays["hidden_w"] = glorot((hyper.f3, n_pairs), n_pairs, hyper.f3)
        arrays["hidden_bias"] = np.zeros(hyper.f3)
    arrays["out_w"] = glorot((c, hyper.f3), hyper.f3, c)
    arrays["out_bias"] = np.zeros(c)
    return NetworkParameters(hyper.encoder_kind, m, c, hyper.leaky_slope, arrays)


def _leaky(z, slope):
    return np.where(z > 0.0, z, slope * z)


def _leaky_grad(z, slope):
    return np.where(z > 0.0, 1.0, slope)


def forward(params: NetworkParameters, x: np.ndarray):
    """Logits and a cache of intermediates for the backward pass."""
    x = np.asarray(x, dtype=float)
    m = params.num_rois
    if x.shape != (m, m):
        raise DimensionMismatch(f"input is {x.shape}, expected ({m}, {m})")
    a = params.arrays
    slope = params.leaky_slope
    vals: dict[str, np.ndarray] = {"x": x}
    if params.encoder_kind == "cnn":
        u = a["e2e_row"] @ x.T
        v = a["e2e_col"] @ x
        z1 = u[:, :, None] + v[:, None, :] + a["e2e_bias"][:, None, None]
        a1 = _leaky(z1, slope)
        z2 = np.einsum("gfj,fij->gi", a["e2n_w"], a1) + a["e2n_bias"][:, None]
        a2 = _leaky(z2, slope)
        z3 = np.einsum("ugi,gi->u", a["n2g_w"], a2) + a["n2g_bias"]
        a3 = _leaky(z3, slope)
        vals.update(z1=z1, a1=a1, z2=z2, a2=a2, z3=z3, a3=a3)
    else:
        iu, ju = np.triu_indices(m, k=1)
        t = x[iu, ju]
        z1 = a["hidden_w"] @ t + a["hidden_bias"]
        a1 = _leaky(z1, slope)
        vals.update(t=t, z1=z1, a1=a1)
    feat = vals["a3"] if params.encoder_kind == "cnn" else vals["a1"]
    logits = a["out_w"] @ feat + a["out_bias"]
    cache = ForwardCache(params.encoder_kind, m, params.num_classes, vals)
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """Negative log-likelihood of ``label`` with max-subtraction."""
    if not 0 <= label < logits.shape[0]:
        raise IndexError(f"label {label} out of range for {logits.shape[0]} classes")
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def backward(
    params: NetworkParameters, cache: ForwardCache, label: int
) -> dict[str, np.ndarray]:
    """Closed-form gradients of the cross-entropy loss for one sample."""
    if (
        cache.encoder_kind != params.encoder_kind
        or cache.num_rois != params.num_rois
        or cache.num_classes != params.num_classes
    ):
        raise StaleCache(
            f"cache built for {cache.encoder_kind}/{cache.num_rois} regions/"
            f"{cache.num_classes} classes, parameters are "
            f"{params.encoder_kind}/{params.num_rois}/{params.num_classes}"
        )
    a = params.arrays
    vals = cache.values
    slope = params.leaky_slope
    feat = vals["a3"] if params.encoder_kind == "cnn" else vals["a1"]
    logits = a["out_w"] @ feat + a["out_bias"]
    dlogits = softmax(logits)
    dlogits[label] -= 1.0

    grads: dict[str, np.ndarray] = {}
    grads["out_w"] = np.outer(dlogits, feat)
    grads["out_bias"] = dlogits
    dfeat = a["out_w"].T @ dlogits

    if params.encoder_kind == "cnn":
        x = vals["x"]
        dz3 = dfeat * _leaky_grad(vals["z3"], slope)
        grads["n2g_w"] = np.einsum("u,gi->ugi", dz3, vals["a2"])
        grads["n2g_bias"] = dz3
        da2 = np.einsum("u,ugi->gi", dz3, a["n2g_w"])
        dz2 = da2 * _leaky_grad(vals["z2"], slope)
        grads["e2n_w"] = np.einsum("gi,fij->gfj", dz2, vals["a1"])
        grads["e2n_bias"] = dz2.sum(axis=1)
        da1 = np.einsum("gi,gfj->fij", dz2, a["e2n_w"])
        dz1 = da1 * _leaky_grad(vals["z1"], slope)
        du = dz1.sum(axis=2)
        dv = dz1.sum(axis=1)
        grads["e2e_row"] = du @ x
        grads["e2e_col"] = dv @ x.T
        grads["e2e_bias"] = dz1.sum(axis=(1, 2))
    else:
        dz1 = dfeat * _leaky_grad(vals["z1"], slope)
        grads["hidden_w"] = np.outer(dz1, vals["t"])
        grads["hidden_bias"] = dz1
    return grads


def sgd_step(
    params: NetworkParameters,
    grads: dict[str, np.ndarray],
    velocity: dict[str, np.ndarray],
    learning_rate: float,
    momentum: float,
):
    """Momentum update in place: v <- mu*v - lr*g, p <- p + v."""
    for key, p in params.arrays.items():
        v = velocity[key]
        v *= momentum
        v -= learning_rate * grads[key]
        p += v
    return params, velocity


def _accuracy_on(params, xs, labels, indices):
    correct = 0
    for k in indices:
        logits, _ = forward(params, xs[k])
        if int(np.argmax(logits)) == labels[k]:
            correct += 1
    return correct / len(indices)


def train(
    data: LabeledDataset,
    templates: TemplateSet,
    hyper: NetworkHyperParams,
    split: tuple,
) -> TrainedModel:
    """Train by seeded mini-batch SGD with momentum.

    Every subject is augmented with the global template once up front.
    Batches average per-sample gradients in their shuffled order; the epoch
    train loss is the sample-mean cross-entropy seen during the epoch.  The
    returned parameters are the epoch snapshot with the best validation
    accuracy, later epochs winning ties.
    """
    hyper.validate()
    data.validate()
    train_idx = [int(k) for k in split[0]]
    val_idx = [int(k) for k in split[1]]
    if not train_idx:
        raise ValueError("training split is empty")
    if not val_idx:
        raise ValueError("validation split is empty")
    if set(train_idx) & set(val_idx):
        raise ValueError("training and validation splits overlap")

    gt = global_template(templates)
    xs = {
        k: augment(data.subjects[k].matrix, gt)
        for k in set(train_idx) | set(val_idx)
    }
    labels = {k: data.subjects[k].label for k in xs}

    params = init_network(data.num_rois, data.num_groups, hyper)
    velocity = params.zeros_like()
    rng = np.random.default_rng([hyper.seed, 1])

    history: list[tuple[float, float]] = []
    best_params = params.copy()
    best_acc = -1.0
    train_arr = np.array(train_idx)
    for epoch in range(hyper.epochs):
        order = train_arr[rng.permutation(len(train_arr))]
        loss_sum = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            grad_sum = params.zeros_like()
            for k in batch:
                k = int(k)
                logits, cache = forward(params, xs[k])
                loss = cross_entropy(logits, labels[k])
                if not math.isfinite(loss):
                    raise NonFinite(
                        f"loss became {loss} at epoch {epoch}, subject "
                        f"{data.subjects[k].subject_id!r}"
                    )
                loss_sum += loss
                g = backward(params, cache, labels[k])
                for key in grad_sum:
                    grad_sum[key] += g[key]
            scale = 1.0 / len(batch)
            for key in grad_sum:
                grad_sum[key] *= scale
            sgd_step(params, grad_sum, velocity, hyper.learning_rate, hyper.momentum)
        val_acc = _accuracy_on(params, xs, labels, val_idx)
        history.append((loss_sum / len(order), val_acc))
        if val_acc >= best_acc:
            best_acc = val_acc
            best_params = params.copy()
    return TrainedModel(
        best_params, replace(hyper), template_fingerprint(templates), history
    )


def predict_proba(
    model: TrainedModel, w: ConnectivityMatrix, templates: TemplateSet
) -> np.ndarray:
    """Class probabilities for one subject."""
    x = augment(w, global_template(templates))
    logits, _ = forward(model.params, x)
    return softmax(logits)


# ---------------------------------------------------------------------------
# Model file: JSON with the hyper block, the fingerprint of the templates
# used for augmentation, and each tensor as {shape, data} with data flat in
# row-major order.
# ---------------------------------------------------------------------------

_MODEL_FORMAT = "tgraph-model-v1"


def save_model(model: TrainedModel, path) -> None:
    hyper = model.hyper
    doc = {
        "format": _MODEL_FORMAT,
        "hyper": {
            "f1": hyper.f1,
            "f2": hyper.f2,
            "f3": hyper.f3,
            "leaky_slope": hyper.leaky_slope,
            "learning_rate": hyper.learning_rate,
            "momentum": hyper.momentum,
            "batch_size": hyper.batch_size,
            "epochs": hyper.epochs,
            "seed": hyper.seed,
            "encoder_kind": hyper.encoder_kind,
        },
        "num_rois": model.params.num_rois,
        "num_classes": model.params.num_classes,
        "templates_fingerprint": model.templates_fingerprint,
        "parameters": {
            key: {"shape": list(v.shape), "data": v.ravel().tolist()}
            for key, v in model.params.arrays.items()
        },
        "training_history": [[float(l), float(a)] for l, a in model.training_history],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"cannot parse model file {path}: {exc}") from exc
    if doc.get("format") != _MODEL_FORMAT:
        raise DataFormatError(
            f"model file {path} has format {doc.get('format')!r}, "
            f"expected {_MODEL_FORMAT!r}"
        )
    try:
        hyper = NetworkHyperParams(**doc["hyper"])
        arrays = {}
        for key, spec in doc["parameters"].items():
            arrays[key] = np.array(spec["data"], dtype=float).reshape(spec["shape"])
        params = NetworkParameters(
            hyper.encoder_kind,
            int(doc["num_rois"]),
            int(doc["num_classes"]),
            hyper.leaky_slope,
            arrays,
        )
        history = [(float(l), float(a)) for l, a in doc["training_history"]]
        fingerprint = doc["templates_fingerprint"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"model file {path} is malformed: {exc}") from exc
    return TrainedModel(params, hyper, fingerprint, history)
