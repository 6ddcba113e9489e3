"""Triplet-loss metric learning over frozen embeddings.

A small feed-forward projection head is trained from scratch (manual
backpropagation, SGD or Adam) so that same-relation tweets get high cosine
similarity and different-relation tweets get low cosine similarity.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kirelex.corpus import (
    DEFAULT_NORMALIZE,
    NormalizeConfig,
    RelationLabel,
    Tweet,
    tokenize,
)
from kirelex.embedding import EmbeddingProvider, cosine_similarity
from kirelex.matcher import PhraseMatchRecord

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"KIRX"
CHECKPOINT_VERSION = 1

_ACTIVATION_TAGS = {"linear": 0, "relu": 1, "tanh": 2}
_TAG_ACTIVATIONS = {v: k for k, v in _ACTIVATION_TAGS.items()}


@dataclass(frozen=True, eq=False)
class ExampleVector:
    tweet_id: str
    input: np.ndarray
    label: RelationLabel


@dataclass(frozen=True, eq=False)
class Triplet:
    anchor: ExampleVector
    positive: ExampleVector
    negative: ExampleVector

    def __post_init__(self):
        if self.anchor.label != self.positive.label:
            raise ValueError("positive must share the anchor's label")
        if self.anchor.label == self.negative.label:
            raise ValueError("negative must not share the anchor's label")
        if self.anchor.tweet_id == self.positive.tweet_id:
            raise ValueError("anchor and positive must be distinct examples")


@dataclass
class TrainConfig:
    margin: float = 0.2
    learning_rate: float = 1e-3
    epochs: int = 50
    triplets_per_anchor: int | None = 4
    optimizer: str = "adam"
    seed: int = 0
    hidden_dim: int = 256
    output_dim: int = 128
    batch_size: int = 32
    activation: str = "tanh"

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer: {self.optimizer!r}")
        if self.activation not in _ACTIVATION_TAGS:
            raise ValueError(f"unknown activation: {self.activation!r}")


@dataclass
class MetricModel:
    """Two-layer projection head: input -> hidden (activation) -> output."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)
    activation: str = "tanh"

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def param_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_model(
    input_dim: int,
    hidden_dim: int,
    output_dim: int,
    activation: str = "tanh",
    seed: int = 0,
) -> MetricModel:
    """Seeded uniform initialization in +-1/sqrt(fan_in); zero biases."""
    if activation not in _ACTIVATION_TAGS:
        raise ValueError(f"unknown activation: {activation!r}")
    rng = np.random.default_rng(seed)
    lim1 = 1.0 / np.sqrt(input_dim)
    lim2 = 1.0 / np.sqrt(hidden_dim)
    return MetricModel(
        w1=rng.uniform(-lim1, lim1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
        activation=activation,
    )


def _activate(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(pre)
    if activation == "relu":
        return np.maximum(pre, 0.0)
    return pre


def _activate_grad(pre: np.ndarray, post: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return 1.0 - post * post
    if activation == "relu":
        return (pre > 0.0).astype(np.float64)
    return np.ones_like(pre)


def _forward_batch(model: MetricModel, x: np.ndarray):
    pre = x @ model.w1.T + model.b1
    hidden = _activate(pre, model.activation)
    out = hidden @ model.w2.T + model.b2
    return pre, hidden, out


def forward(model: MetricModel, input: np.ndarray) -> np.ndarray:
    """Deterministic single-vector forward pass (unnormalized output)."""
    x = np.asarray(input, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValueError(
            f"input dim {x.shape} does not match model input dim {model.input_dim}"
        )
    out = _forward_batch(model, x[None, :])[2][0]
    if not np.all(np.isfinite(out)):
        raise RuntimeError("non-finite forward output")
    return out


def represent(model: MetricModel, inputs: np.ndarray) -> np.ndarray:
    """L2-normalized representations for one vector or a batch of rows."""
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    out = _forward_batch(model, x[None, :] if single else x)[2]
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise RuntimeError("zero-norm representation")
    out = out / norms
    return out[0] if single else out


def triplet_loss(a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float) -> float:
    """Hinge on cosine similarities: max(0, cos(a,n) - cos(a,p) + margin)."""
    return max(0.0, cosine_similarity(a, n) - cosine_similarity(a, p) + margin)


def build_triplets(
    examples: list[ExampleVector],
    per_anchor: int | None = 4,
    seed: int = 0,
) -> list[Triplet]:
    """Sample (anchor, positive, negative) triplets from labeled examples.

    per_anchor=None enumerates every valid combination; otherwise up to
    per_anchor (positive, negative) pairs are drawn uniformly without
    replacement per anchor. Anchors whose class has no second member yield
    nothing (logged once per class).
    """
    if len({e.label for e in examples}) < 2:
        raise ValueError("single-class dataset: no negatives exist")
    by_label: dict[RelationLabel, list[int]] = {}
    for i, ex in enumerate(examples):
        by_label.setdefault(ex.label, []).append(i)
    rng = np.random.default_rng(seed)
    warned: set[RelationLabel] = set()
    triplets: list[Triplet] = []
    for i, anchor in enumerate(examples):
        positives = [j for j in by_label[anchor.label] if j != i]
        negatives = [j for j in range(len(examples)) if examples[j].label != anchor.label]
        if not positives:
            if anchor.label not in warned:
                logger.warning(
                    "class %s has a single member; its anchors yield no triplets",
                    anchor.label.value,
                )
                warned.add(anchor.label)
            continue
        n_combos = len(positives) * len(negatives)
        if per_anchor is None or per_anchor >= n_combos:
            chosen = range(n_combos)
        else:
            chosen = sorted(rng.choice(n_combos, size=per_anchor, replace=False))
        for combo in chosen:
            p = positives[combo // len(negatives)]
            n = negatives[combo % len(negatives)]
            triplets.append(Triplet(anchor, examples[p], examples[n]))
    return triplets


def _cosine_grads(u: np.ndarray, v: np.ndarray):
    """Row-wise d cos(u,v)/du and d cos(u,v)/dv for batched vectors."""
    nu = np.linalg.norm(u, axis=1, keepdims=True)
    nv = np.linalg.norm(v, axis=1, keepdims=True)
    cos = np.sum(u * v, axis=1, keepdims=True) / (nu * nv)
    du = v / (nu * nv) - cos * u / (nu * nu)
    dv = u / (nu * nv) - cos * v / (nv * nv)
    return cos[:, 0], du, dv


def _loss_and_grads(
    model: MetricModel, a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float
):
    """Mean triplet loss over a batch plus analytic parameter gradients."""
    pre_a, h_a, z_a = _forward_batch(model, a)
    pre_p, h_p, z_p = _forward_batch(model, p)
    pre_n, h_n, z_n = _forward_batch(model, n)

    cos_p, d_ap_a, d_ap_p = _cosine_grads(z_a, z_p)
    cos_n, d_an_a, d_an_n = _cosine_grads(z_a, z_n)
    per_triplet = np.maximum(0.0, cos_n - cos_p + margin)
    active = (per_triplet > 0.0)[:, None].astype(np.float64)
    batch = a.shape[0]

    dz_a = active * (d_an_a - d_ap_a) / batch
    dz_p = active * (-d_ap_p) / batch
    dz_n = active * d_an_n / batch

    grads = {
        "w1": np.zeros_like(model.w1),
        "b1": np.zeros_like(model.b1),
        "w2": np.zeros_like(model.w2),
        "b2": np.zeros_like(model.b2),
    }
    for dz, pre, hidden, x in (
        (dz_a, pre_a, h_a, a),
        (dz_p, pre_p, h_p, p),
        (dz_n, pre_n, h_n, n),
    ):
        grads["w2"] += dz.T @ hidden
        grads["b2"] += dz.sum(axis=0)
        d_pre = (dz @ model.w2) * _activate_grad(pre, hidden, model.activation)
        grads["w1"] += d_pre.T @ x
        grads["b1"] += d_pre.sum(axis=0)
    return float(per_triplet.mean()), grads


class _Adam:
    def __init__(self, model: MetricModel, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in _named_params(model).items()}
        self.v = {k: np.zeros_like(v) for k, v in _named_params(model).items()}

    def step(self, model: MetricModel, grads: dict[str, np.ndarray]):
        self.t += 1
        for name, param in _named_params(model).items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Sgd:
    def __init__(self, model: MetricModel, lr: float):
        self.lr = lr

    def step(self, model: MetricModel, grads: dict[str, np.ndarray]):
        for name, param in _named_params(model).items():
            param -= self.lr * grads[name]


def _named_params(model: MetricModel) -> dict[str, np.ndarray]:
    return {"w1": model.w1, "b1": model.b1, "w2": model.w2, "b2": model.b2}


@dataclass
class TrainHistory:
    epoch_losses: list[float] = field(default_factory=list)
    triplet_count: int = 0


def train(
    examples: list[ExampleVector], config: TrainConfig
) -> tuple[MetricModel, TrainHistory]:
    """Mini-batch gradient descent on mean triplet loss, deterministic per seed."""
    triplets = build_triplets(examples, config.triplets_per_anchor, config.seed)
    if not triplets:
        raise ValueError("no triplets constructible from the given examples")
    input_dim = triplets[0].anchor.input.shape[0]
    model = init_model(
        input_dim, config.hidden_dim, config.output_dim, config.activation, config.seed
    )
    a = np.stack([t.anchor.input for t in triplets]).astype(np.float64)
    p = np.stack([t.positive.input for t in triplets]).astype(np.float64)
    n = np.stack([t.negative.input for t in triplets]).astype(np.float64)

    optimizer = (
        _Adam(model, config.learning_rate)
        if config.optimizer == "adam"
        else _Sgd(model, config.learning_rate)
    )
    rng = np.random.default_rng(config.seed + 1)
    history = TrainHistory(triplet_count=len(triplets))
    total = len(triplets)
    for epoch in range(config.epochs):
        perm = rng.permutation(total)
        epoch_loss = 0.0
        for start in range(0, total, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grads = _loss_and_grads(model, a[idx], p[idx], n[idx], config.margin)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}"
                )
            epoch_loss += loss * len(idx)
            optimizer.step(model, grads)
        history.epoch_losses.append(epoch_loss / total)
    return model, history


@dataclass
class GradientCheckResult:
    max_rel_error: float
    vacuous: bool


def gradient_check(
    model: MetricModel, triplet: Triplet, margin: float, step: float = 1e-5
) -> GradientCheckResult:
    """Compare analytic gradients against central finite differences.

    A triplet whose hinge is inactive has an identically zero gradient;
    that case is reported as vacuous rather than checked.
    """
    a = triplet.anchor.input[None, :].astype(np.float64)
    p = triplet.positive.input[None, :].astype(np.float64)
    n = triplet.negative.input[None, :].astype(np.float64)
    loss, grads = _loss_and_grads(model, a, p, n, margin)
    if loss <= 0.0:
        return GradientCheckResult(max_rel_error=0.0, vacuous=True)

    max_err = 0.0
    for name, param in _named_params(model).items():
        flat = param.ravel()
        analytic = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = _loss_and_grads(model, a, p, n, margin)
            flat[i] = orig - step
            down, _ = _loss_and_grads(model, a, p, n, margin)
            flat[i] = orig
            fd = (up - down) / (2 * step)
            scale = max(abs(analytic[i]), abs(fd))
            err = abs(analytic[i] - fd) if scale < 1e-8 else abs(analytic[i] - fd) / scale
            max_err = max(max_err, err)
    return GradientCheckResult(max_rel_error=max_err, vacuous=False)


def save_model(model: MetricModel, path: str | Path) -> None:
    """Write the KIRX checkpoint: magic, version, dims, activation, f64 arrays."""
    with Path(path).open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(
            struct.pack(
                "<IIIIB",
                CHECKPOINT_VERSION,
                model.input_dim,
                model.hidden_dim,
                model.output_dim,
                _ACTIVATION_TAGS[model.activation],
            )
        )
        for param in model.params():
            fh.write(np.ascontiguousarray(param, dtype="<f8").tobytes())


def load_model(path: str | Path) -> MetricModel:
    data = Path(path).read_bytes()
    if len(data) < 21 or data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a KIRX checkpoint: {path}")
    version, input_dim, hidden_dim, output_dim, tag = struct.unpack_from("<IIIIB", data, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    if tag not in _TAG_ACTIVATIONS:
        raise ValueError(f"unknown activation tag {tag}")
    offset = 21
    shapes = [(hidden_dim, input_dim), (hidden_dim,), (output_dim, hidden_dim), (output_dim,)]
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(data):
            raise ValueError(f"truncated checkpoint: {path}")
        arrays.append(
            np.frombuffer(data, dtype="<f8", count=count, offset=offset)
            .reshape(shape)
            .copy()
        )
        offset = end
    if offset != len(data):
        raise ValueError(f"trailing bytes in checkpoint: {path}")
    return MetricModel(*arrays, activation=_TAG_ACTIVATIONS[tag])


def assemble_examples(
    tweets: list[Tweet],
    records: dict[str, PhraseMatchRecord],
    provider: EmbeddingProvider,
    use_phrases: bool = True,
    normalize_config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> list[ExampleVector]:
    """Build model inputs for labeled tweets.

    With knowledge matching on, the input is the concatenation of the
    substituted-tweet embedding and both matched phrase embeddings; only
    fully matched tweets qualify. Without it, the input is the plain
    normalized-tweet embedding.
    """
    examples: list[ExampleVector] = []
    for tweet in tweets:
        if tweet.label is None:
            continue
        if use_phrases:
            record = records.get(tweet.id)
            if record is None or not record.fully_matched:
                continue
            assert record.cannabis is not None and record.depression is not None
            vec = np.concatenate(
                [
                    provider.embed(record.substituted_text),
                    provider.embed(record.cannabis.phrase),
                    provider.embed(record.depression.phrase),
                ]
            )
        else:
            text = tokenize(tweet, normalize_config).text()
            if not text:
                continue
            vec = provider.embed(text)
        examples.append(ExampleVector(tweet_id=tweet.id, input=vec, label=tweet.label))
    return examples
