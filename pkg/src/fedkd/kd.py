"""Desk-scale distillation mathematics on tiny feedforward networks.

Everything is plain numpy with hand-derived gradients so that every
training path can be checked against central finite differences:

* temperature-softened distillation: cross-entropy on the labels plus a
  temperature-squared-weighted KL term between the softened teacher and
  student predictions,
* feature-matching distillation (simKD style): squared distance between
  teacher features and a linear projection of student features, with the
  teacher's linear classifier reused at inference time,
* FedSGD: full-batch client gradients aggregated size-weighted, which
  makes one federated round exactly equal to a centralized step.

Data is synthetic Gaussian class blobs; Non-IID clients get disjoint
label subsets.  Networks are a 1-2 layer tanh encoder plus one linear
classifier layer.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

VARIANTS = ("hard", "kd", "simkd")


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class BlobSpec:
    """Parameters of the synthetic Gaussian-blob generator."""

    num_classes: int = 4
    num_features: int = 8
    center_scale: float = 3.0
    noise: float = 1.5
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BlobSpec":
        return cls(**json.loads(text))


@dataclass
class ToyDataset:
    inputs: np.ndarray      # (samples, features)
    labels: np.ndarray      # (samples,) int class indices
    num_classes: int

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.inputs.ndim != 2 or len(self.inputs) == 0:
            raise ValueError("ToyDataset.inputs must be a non-empty (n, features) array")
        if self.labels.shape != (len(self.inputs),):
            raise ValueError("ToyDataset.labels must have one entry per sample")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("ToyDataset.labels must lie in [0, num_classes)")

    def __len__(self) -> int:
        return len(self.inputs)

    def restrict_labels(self, labels) -> "ToyDataset":
        """The slice whose labels fall in the given set (class count kept)."""
        mask = np.isin(self.labels, list(labels))
        if not mask.any():
            raise ValueError(f"no samples with labels {sorted(labels)}")
        return ToyDataset(self.inputs[mask], self.labels[mask], self.num_classes)


def blob_centers(spec: BlobSpec) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return spec.center_scale * rng.normal(size=(spec.num_classes, spec.num_features))


def make_train_test(spec: BlobSpec, train_per_class: int,
                    test_per_class: int) -> tuple[ToyDataset, ToyDataset]:
    """Two independent draws around the same class centers."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    centers = spec.center_scale * rng.normal(size=(spec.num_classes, spec.num_features))

    def draw(per_class: int) -> ToyDataset:
        xs, ys = [], []
        for c in range(spec.num_classes):
            xs.append(centers[c] + spec.noise * rng.normal(size=(per_class, spec.num_features)))
            ys.append(np.full(per_class, c))
        perm = rng.permutation(per_class * spec.num_classes)
        return ToyDataset(np.concatenate(xs)[perm], np.concatenate(ys)[perm],
                          spec.num_classes)

    return draw(train_per_class), draw(test_per_class)


def split_iid(ds: ToyDataset, n_parts: int, rng: np.random.Generator) -> list[ToyDataset]:
    """Random equal-size shards of the same distribution."""
    perm = rng.permutation(len(ds))
    return [ToyDataset(ds.inputs[idx], ds.labels[idx], ds.num_classes)
            for idx in np.array_split(perm, n_parts)]


def split_by_label(ds: ToyDataset, label_groups) -> list[ToyDataset]:
    """Disjoint-label (Non-IID) shards; each keeps the global class count."""
    return [ds.restrict_labels(group) for group in label_groups]


# ---------------------------------------------------------------------------
# networks


@dataclass(frozen=True)
class NetArch:
    hidden: tuple[int, ...] = (16,)
    feature_dim: int = 8


@dataclass
class NetParams:
    """tanh encoder (1-2 hidden layers) plus one linear classifier layer."""

    weights: tuple     # encoder weight matrices, shapes chaining input -> feature
    biases: tuple
    w_out: np.ndarray  # (feature_dim, num_classes)
    b_out: np.ndarray

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("encoder needs matching non-empty weight/bias tuples")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"encoder layer {i} does not chain: "
                                 f"{self.weights[i - 1].shape} -> {self.weights[i].shape}")
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[1],):
                raise ValueError("bias shape must match layer width")
        if self.w_out.shape[0] != self.weights[-1].shape[1]:
            raise ValueError("classifier input must equal encoder output width")
        if self.b_out.shape != (self.w_out.shape[1],):
            raise ValueError("classifier bias shape mismatch")
        for arr in self.arrays():
            if not np.all(np.isfinite(arr)):
                raise ValueError("network parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def num_classes(self) -> int:
        return self.w_out.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases, self.w_out, self.b_out]

    def copy(self) -> "NetParams":
        return NetParams(tuple(w.copy() for w in self.weights),
                         tuple(b.copy() for b in self.biases),
                         self.w_out.copy(), self.b_out.copy())

    def to_json(self) -> str:
        payload = {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "w_out": self.w_out.tolist(),
            "b_out": self.b_out.tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NetParams":
        payload = json.loads(text)
        return cls(tuple(np.asarray(w, dtype=float) for w in payload["weights"]),
                   tuple(np.asarray(b, dtype=float) for b in payload["biases"]),
                   np.asarray(payload["w_out"], dtype=float),
                   np.asarray(payload["b_out"], dtype=float))


@dataclass
class NetGrads:
    """Same layout as NetParams, holding gradients (no invariants)."""

    weights: tuple
    biases: tuple
    w_out: np.ndarray
    b_out: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases, self.w_out, self.b_out]


@dataclass
class Projector:
    """Bias-free linear map from student to teacher feature space."""

    w: np.ndarray

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 2:
            raise ValueError("Projector.w must be a 2-d matrix")

    @classmethod
    def identity(cls, dim: int) -> "Projector":
        return cls(np.eye(dim))

    def __call__(self, f_s: np.ndarray) -> np.ndarray:
        return np.asarray(f_s, dtype=float) @ self.w


@dataclass(frozen=True)
class LossSpec:
    variant: str = "hard"
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def init_net(arch: NetArch, in_dim: int, num_classes: int,
             rng: np.random.Generator) -> NetParams:
    """Gaussian init scaled by 1/sqrt(fan_in)."""
    dims = [in_dim, *arch.hidden, arch.feature_dim]
    weights, biases = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(size=(a, b)) / np.sqrt(a))
        biases.append(np.zeros(b))
    w_out = rng.normal(size=(arch.feature_dim, num_classes)) / np.sqrt(arch.feature_dim)
    return NetParams(tuple(weights), tuple(biases), w_out, np.zeros(num_classes))


def _forward(p: NetParams, x: np.ndarray):
    """Layer outputs for backprop; hs[0] is the input batch."""
    hs = [x]
    for w, b in zip(p.weights, p.biases):
        hs.append(np.tanh(hs[-1] @ w + b))
    logits = hs[-1] @ p.w_out + p.b_out
    return hs, logits


def net_eval(p: NetParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic forward pass; returns (features, logits)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != p.in_dim:
        raise ValueError(f"input width {x.shape[1]} does not match network input {p.in_dim}")
    hs, logits = _forward(p, x)
    return hs[-1], logits


def _backprop(p: NetParams, hs, dlogits=None, dfeatures=None) -> NetGrads:
    """Gradients for a batch given the upstream gradient at the logits
    (classifier path) or directly at the features (encoder-only path)."""
    if dlogits is not None:
        gw_out = hs[-1].T @ dlogits
        gb_out = dlogits.sum(axis=0)
        dh = dlogits @ p.w_out.T
    else:
        gw_out = np.zeros_like(p.w_out)
        gb_out = np.zeros_like(p.b_out)
        dh = dfeatures
    gws, gbs = [], []
    for layer in reversed(range(len(p.weights))):
        dz = dh * (1.0 - hs[layer + 1] ** 2)   # tanh'
        gws.append(hs[layer].T @ dz)
        gbs.append(dz.sum(axis=0))
        dh = dz @ p.weights[layer].T
    return NetGrads(tuple(reversed(gws)), tuple(reversed(gbs)), gw_out, gb_out)


# ---------------------------------------------------------------------------
# losses


def softened_probs(logits, temperature: float) -> np.ndarray:
    """Softmax of logits / T, log-sum-exp stabilized."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    z = np.atleast_2d(np.asarray(logits, dtype=float)) / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs if np.ndim(logits) == 2 else probs[0]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def kl_divergence(p, q) -> np.ndarray | float:
    """KL(p || q) in nats over the last axis, with 0 * log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    terms = np.where(p > 0, p * (np.log(np.where(p > 0, p, 1.0))
                                 - np.log(np.where(p > 0, q, 1.0))), 0.0)
    return terms.sum(axis=-1)


def kd_loss(student_logits, teacher_logits, labels,
            temperature: float) -> tuple[float, np.ndarray]:
    """Distillation loss and its exact gradient w.r.t. the student logits.

    loss = CE(student probs, labels)
         + T^2 * KL(teacher softened || student softened)

    with both softened distributions taken at temperature T and the KL
    pointing from teacher to student.  Batch-mean reduction throughout.
    """
    z_s = np.atleast_2d(np.asarray(student_logits, dtype=float))
    z_t = np.atleast_2d(np.asarray(teacher_logits, dtype=float))
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    if z_s.shape != z_t.shape:
        raise ValueError(f"student/teacher logit shapes differ: {z_s.shape} vs {z_t.shape}")
    if y.shape != (z_s.shape[0],):
        raise ValueError("labels must have one entry per logit row")
    n = z_s.shape[0]
    t = temperature

    log_p_s = _log_softmax(z_s)
    hard = -log_p_s[np.arange(n), y].mean()

    log_p_st = _log_softmax(z_s / t)
    log_p_tt = _log_softmax(z_t / t)
    p_tt = np.exp(log_p_tt)
    soft = (p_tt * (log_p_tt - log_p_st)).sum(axis=1).mean()

    loss = hard + t * t * soft
    onehot = np.zeros_like(z_s)
    onehot[np.arange(n), y] = 1.0
    grad = (np.exp(log_p_s) - onehot) / n + t * (np.exp(log_p_st) - p_tt) / n
    return float(loss), (grad if np.ndim(student_logits) == 2 else grad[0])


def simkd_loss(f_t, f_s, proj: Projector) -> tuple[float, np.ndarray, np.ndarray]:
    """Feature-matching loss ||f_t - P(f_s)||^2 (batch mean) and its exact
    gradients w.r.t. the student features and the projector matrix."""
    f_t = np.atleast_2d(np.asarray(f_t, dtype=float))
    f_s = np.atleast_2d(np.asarray(f_s, dtype=float))
    if f_s.shape[1] != proj.w.shape[0]:
        raise ValueError(f"student features of width {f_s.shape[1]} do not match "
                         f"projector input {proj.w.shape[0]}")
    if f_t.shape[1] != proj.w.shape[1]:
        raise ValueError(f"teacher features of width {f_t.shape[1]} do not match "
                         f"projector output {proj.w.shape[1]}")
    n = f_s.shape[0]
    diff = f_s @ proj.w - f_t
    loss = float((diff ** 2).sum() / n)
    dpred = 2.0 * diff / n
    return loss, dpred @ proj.w.T, f_s.T @ dpred


def hard_grads(p: NetParams, ds: ToyDataset) -> tuple[float, NetGrads]:
    """Full-batch cross-entropy loss and parameter gradients."""
    hs, logits = _forward(p, ds.inputs)
    n = len(ds)
    log_p = _log_softmax(logits)
    loss = -log_p[np.arange(n), ds.labels].mean()
    onehot = np.zeros_like(logits)
    onehot[np.arange(n), ds.labels] = 1.0
    dlogits = (np.exp(log_p) - onehot) / n
    return float(loss), _backprop(p, hs, dlogits=dlogits)


def kd_grads(p: NetParams, teacher_logits: np.ndarray, ds: ToyDataset,
             temperature: float) -> tuple[float, NetGrads]:
    hs, logits = _forward(p, ds.inputs)
    loss, dlogits = kd_loss(logits, teacher_logits, ds.labels, temperature)
    return loss, _backprop(p, hs, dlogits=dlogits)


def simkd_grads(p: NetParams, proj: Projector, teacher_features: np.ndarray,
                ds: ToyDataset) -> tuple[float, NetGrads, np.ndarray]:
    """Loss plus encoder gradients (classifier untouched) and projector grad."""
    hs, _ = _forward(p, ds.inputs)
    loss, d_fs, d_proj = simkd_loss(teacher_features, hs[-1], proj)
    return loss, _backprop(p, hs, dfeatures=d_fs), d_proj


def _step(p: NetParams, g: NetGrads, lr: float) -> NetParams:
    return NetParams(
        tuple(w - lr * gw for w, gw in zip(p.weights, g.weights)),
        tuple(b - lr * gb for b, gb in zip(p.biases, g.biases)),
        p.w_out - lr * g.w_out,
        p.b_out - lr * g.b_out,
    )


# ---------------------------------------------------------------------------
# federated teacher training


def _aggregate_hard(p: NetParams, parts) -> tuple[float, NetGrads]:
    """Size-weighted mean of per-client full-batch gradients.

    Weighting by partition size makes the aggregate exactly equal the
    gradient of the mean loss on the concatenated dataset.
    """
    used = [part for part in parts if len(part) > 0]
    if len(used) < len(parts):
        logger.warning("excluding %d empty partitions from the round",
                       len(parts) - len(used))
    if not used:
        raise ValueError("all partitions are empty")
    total = sum(len(part) for part in used)
    agg = None
    loss_sum = 0.0
    for part in used:
        w = len(part) / total
        loss, g = hard_grads(p, part)
        loss_sum += w * loss
        if agg is None:
            agg = NetGrads(tuple(w * a for a in g.weights),
                           tuple(w * a for a in g.biases),
                           w * g.w_out, w * g.b_out)
        else:
            agg = NetGrads(tuple(x + w * a for x, a in zip(agg.weights, g.weights)),
                           tuple(x + w * a for x, a in zip(agg.biases, g.biases)),
                           agg.w_out + w * g.w_out, agg.b_out + w * g.b_out)
    return loss_sum, agg


def fedsgd_round(global_params: NetParams, parts, loss: LossSpec,
                 lr: float) -> NetParams:
    """One synchronous round: every client computes a full-batch gradient
    on its entire partition, gradients are averaged weighted by partition
    size, and a single step is applied to the global parameters.

    Only the plain cross-entropy variant is supported here: the
    distillation variants need a teacher, and this round is what produces
    the teacher in the first place.
    """
    if loss.variant != "hard":
        raise ValueError("fedsgd_round trains with the hard loss only; "
                         f"got variant {loss.variant!r}")
    _, agg = _aggregate_hard(global_params, parts)
    return _step(global_params, agg, lr)


def train_teacher(parts, epochs: int, lr: float, arch: NetArch = NetArch((32,), 16),
                  seed: int = 0) -> NetParams:
    """Federated full-batch training of the shared teacher network."""
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    used = [part for part in parts if len(part) > 0]
    if not used:
        raise ValueError("train_teacher needs at least one non-empty partition")
    in_dim = used[0].inputs.shape[1]
    num_classes = used[0].num_classes
    rng = np.random.Generator(np.random.PCG64(seed))
    p = init_net(arch, in_dim, num_classes, rng)
    for epoch in range(epochs):
        loss, agg = _aggregate_hard(p, used)
        if not np.isfinite(loss):
            raise RuntimeError(f"teacher training diverged at epoch {epoch}: loss={loss}"
                               f" (lr={lr}, arch={arch})")
        p = _step(p, agg, lr)
    return p


# ---------------------------------------------------------------------------
# distillation


def distill_student(teacher: NetParams, student_arch: NetArch, data: ToyDataset,
                    loss: LossSpec, epochs: int, lr: float,
                    seed: int = 0) -> tuple[NetParams, Projector | None]:
    """Full-batch gradient descent of a fresh student on its private data.

    variant "kd": the student trains its own classifier against the hard
    labels plus the teacher's softened predictions; no projector is used.
    variant "simkd": the student encoder and a linear projector regress
    the teacher's features; the student's own classifier is left at its
    initialization and inference reuses the teacher's classifier.
    """
    if loss.variant not in ("kd", "simkd"):
        raise ValueError(f"distillation variant must be 'kd' or 'simkd', got {loss.variant!r}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    rng = np.random.Generator(np.random.PCG64(seed))
    student = init_net(student_arch, data.inputs.shape[1], data.num_classes, rng)
    t_features, t_logits = net_eval(teacher, data.inputs)

    if loss.variant == "kd":
        for epoch in range(epochs):
            val, g = kd_grads(student, t_logits, data, loss.temperature)
            if not np.isfinite(val):
                raise RuntimeError(f"kd distillation diverged at epoch {epoch}: loss={val}")
            student = _step(student, g, lr)
        return student, None

    proj = Projector(rng.normal(size=(student_arch.feature_dim, teacher.feature_dim))
                     / np.sqrt(student_arch.feature_dim))
    for epoch in range(epochs):
        val, g, d_proj = simkd_grads(student, proj, t_features, data)
        if not np.isfinite(val):
            raise RuntimeError(f"simkd distillation diverged at epoch {epoch}: loss={val}")
        student = _step(student, g, lr)
        proj = Projector(proj.w - lr * d_proj)
    return student, proj


def measure_accuracy(p: NetParams, data: ToyDataset,
                     classifier_override: tuple[NetParams, Projector] | None = None) -> float:
    """Mean of indicator(argmax prediction == label).

    classifier_override = (teacher, projector) routes the student features
    through the projector and the teacher's linear classifier, the
    inference path of feature-matching distillation.
    """
    if len(data) == 0:
        raise ValueError("cannot measure accuracy on an empty dataset")
    features, logits = net_eval(p, data.inputs)
    if classifier_override is not None:
        teacher, proj = classifier_override
        logits = proj(features) @ teacher.w_out + teacher.b_out
    return float((logits.argmax(axis=1) == data.labels).mean())
