"""Hybrid quantum-classical training with shared parameters.

A pool of rotation angles (theta, one slot per qubit per layer up to the
depth limit) is shared by every candidate architecture; K independent
linear heads ("supernets") map the per-qubit <Z> vector to class logits.
Each epoch one head is picked epsilon-greedily -- uniformly at random
with probability epsilon, otherwise the head with the lowest loss -- and
a single gradient-descent step updates theta (exact parameter-shift
gradients) together with that head's weights and bias.

Pretraining samples a fresh random architecture every epoch so the pool
learns angles that work across the space; fine-tuning copies the pool,
runs a few steps for one fixed architecture, and never touches the
shared state.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import sim
from .data import Dataset, TaskSpec
from .sim import CompiledAnsatz, NoiseSpec
from .space import SearchSpaceDef, genome_to_circuit, random_genome

CHECKPOINT_FORMAT = "naqas-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Supernet:
    """One linear head: logits = weights @ z + bias."""

    weights: np.ndarray   # (n_classes, n_qubits)
    bias: np.ndarray      # (n_classes,)

    def copy(self) -> "Supernet":
        return Supernet(self.weights.copy(), self.bias.copy())


@dataclass
class SharedParameters:
    """Shared angle pool plus the K supernet heads.

    ``theta`` has one slot per (layer, qubit) up to the depth limit; an
    l-layer circuit reads the first Q*l slots.  Heads are identified by
    their list position.
    """

    theta: np.ndarray
    supernets: list[Supernet]
    epsilon: float
    eta: float

    @property
    def n_heads(self) -> int:
        return len(self.supernets)

    @property
    def n_classes(self) -> int:
        return self.supernets[0].weights.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.supernets[0].weights.shape[1]

    @property
    def max_layers(self) -> int:
        return self.theta.size // self.n_qubits

    def copy(self) -> "SharedParameters":
        return SharedParameters(self.theta.copy(),
                                [s.copy() for s in self.supernets],
                                self.epsilon, self.eta)


@dataclass(frozen=True)
class TrainerConfig:
    epsilon: float = 0.1
    eta: float = 0.05
    epochs: int = 300
    fine_tune_steps: int = 20
    head_refit_steps: int = 500
    theta_init_scale: float = 0.1
    head_init_scale: float = 0.1
    genome_sampling: str = "per_epoch"   # "per_epoch" shares across the space;
                                         # "fixed" trains one sampled ansatz

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.epochs < 0 or self.fine_tune_steps < 0 or self.head_refit_steps < 0:
            raise ValueError("step counts must be non-negative")
        if self.genome_sampling not in ("per_epoch", "fixed"):
            raise ValueError(f"unknown genome_sampling {self.genome_sampling!r}")


@dataclass
class TrainRecord:
    epoch: int
    loss: float
    head: int
    dtheta: np.ndarray    # per-slot |change| this epoch, full pool length

    @property
    def mean_dtheta(self) -> float:
        return float(self.dtheta.mean())


def init_shared_parameters(space: SearchSpaceDef, n_heads: int, n_classes: int,
                           rng: np.random.Generator,
                           config: TrainerConfig = TrainerConfig()) -> SharedParameters:
    """Fresh pool: theta and head weights/biases drawn from N(0, scale)."""
    theta = rng.normal(0.0, config.theta_init_scale, size=space.max_slots)
    heads = []
    for _ in range(n_heads):
        w = rng.normal(0.0, config.head_init_scale, size=(n_classes, space.n_qubits))
        b = rng.normal(0.0, config.head_init_scale, size=n_classes)
        heads.append(Supernet(w, b))
    return SharedParameters(theta, heads, config.epsilon, config.eta)


# ---------------------------------------------------------------------------
# loss and forward evaluation
# ---------------------------------------------------------------------------

def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    n = labels.size
    loss = -float(log_probs[np.arange(n), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


@functools.lru_cache(maxsize=128)
def _compiled_cached(genome: tuple, n_qubits: int, min_layers: int,
                     max_layers: int, noise: NoiseSpec) -> CompiledAnsatz:
    spc = SearchSpaceDef(n_qubits, min_layers, max_layers)
    return CompiledAnsatz(n_qubits, genome_to_circuit(genome, spc), noise)


def compiled_ansatz(genome: Sequence[int], space: SearchSpaceDef,
                    noise: NoiseSpec) -> CompiledAnsatz:
    return _compiled_cached(tuple(genome), space.n_qubits,
                            space.min_layers, space.max_layers, noise)


@functools.lru_cache(maxsize=64)
def _encoded_cached(xbytes: bytes, shape: tuple, n_qubits: int,
                    noise: NoiseSpec) -> np.ndarray:
    x = np.frombuffer(xbytes, dtype=float).reshape(shape)
    rho = sim.encode_states(x, n_qubits, noise)
    rho.setflags(write=False)
    return rho


def encoded_states(features: np.ndarray, n_qubits: int, noise: NoiseSpec) -> np.ndarray:
    """Noisy encoded initial states for a feature matrix, memoized."""
    features = np.ascontiguousarray(features, dtype=float)
    return _encoded_cached(features.tobytes(), features.shape, n_qubits, noise)


def circuit_expectations(genome, params: SharedParameters, features: np.ndarray,
                         noise: NoiseSpec, space: SearchSpaceDef) -> np.ndarray:
    eng = compiled_ansatz(genome, space, noise)
    rho0 = encoded_states(features, space.n_qubits, noise)
    return eng.expectations(params.theta, rho0)


def head_logits(z: np.ndarray, head: Supernet) -> np.ndarray:
    return z @ head.weights.T + head.bias


def forward(genome, params: SharedParameters, head: int, batch, noise: NoiseSpec,
            space: SearchSpaceDef):
    """Logits and cross-entropy loss of one head on a batch."""
    features, labels = batch
    if not 0 <= head < params.n_heads:
        raise ValueError(f"head {head} out of range for {params.n_heads} supernets")
    if len(features) == 0:
        raise ValueError("empty batch")
    z = circuit_expectations(genome, params, features, noise, space)
    logits = head_logits(z, params.supernets[head])
    loss, _ = softmax_cross_entropy(logits, labels)
    return logits, loss


def _losses_from_z(z: np.ndarray, labels: np.ndarray, params: SharedParameters) -> np.ndarray:
    return np.array([softmax_cross_entropy(head_logits(z, s), labels)[0]
                     for s in params.supernets])


def head_losses(genome, params: SharedParameters, batch, noise: NoiseSpec,
                space: SearchSpaceDef) -> np.ndarray:
    features, labels = batch
    z = circuit_expectations(genome, params, features, noise, space)
    return _losses_from_z(z, labels, params)


def _choose_head(losses: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(losses)))
    return int(np.argmin(losses))   # argmin keeps the smallest index on ties


def select_head(genome, params: SharedParameters, batch, noise: NoiseSpec,
                rng: np.random.Generator, space: SearchSpaceDef,
                losses: Optional[np.ndarray] = None) -> int:
    """Epsilon-greedy head choice: explore uniformly, else lowest loss."""
    if losses is None:
        losses = head_losses(genome, params, batch, noise, space)
    return _choose_head(np.asarray(losses), params.epsilon, rng)


# ---------------------------------------------------------------------------
# one training epoch and the two training drivers
# ---------------------------------------------------------------------------

def train_epoch(genome, params: SharedParameters, batch, noise: NoiseSpec,
                rng: np.random.Generator, space: SearchSpaceDef,
                epoch: int = 0, epsilon: Optional[float] = None) -> TrainRecord:
    """One epsilon-greedy gradient step, updating theta and one head in place.

    Only the slots the genome uses and the selected head move; the other
    K-1 heads are untouched.  Returns the epoch record.
    """
    features, labels = batch
    eng = compiled_ansatz(genome, space, noise)
    rho0 = encoded_states(features, space.n_qubits, noise)
    eps = params.epsilon if epsilon is None else epsilon
    picked = {}

    def loss_fn(z):
        losses = _losses_from_z(z, labels, params)
        k = _choose_head(losses, eps, rng)
        head = params.supernets[k]
        loss, dlogits = softmax_cross_entropy(head_logits(z, head), labels)
        picked.update(head=k, loss=losses[k], dlogits=dlogits, z=z)
        return loss, dlogits @ head.weights

    _, _, grad_theta = eng.value_and_grad(params.theta, rho0, loss_fn)

    k = picked["head"]
    head = params.supernets[k]
    dlogits, z = picked["dlogits"], picked["z"]
    grad_w = dlogits.T @ z
    grad_b = dlogits.sum(axis=0)

    dtheta = np.zeros_like(params.theta)
    used = grad_theta.size
    dtheta[:used] = np.abs(params.eta * grad_theta)
    params.theta[:used] -= params.eta * grad_theta
    head.weights -= params.eta * grad_w
    head.bias -= params.eta * grad_b
    return TrainRecord(epoch=epoch, loss=float(picked["loss"]), head=k, dtheta=dtheta)


def pretrain(space: SearchSpaceDef, dataset: Dataset, spec: TaskSpec,
             noise: NoiseSpec, config: TrainerConfig,
             rng: np.random.Generator):
    """Train the shared pool over randomly sampled architectures.

    Each epoch draws a fresh genome (uniform length, uniform genes) and
    runs one step on the full training split; with genome_sampling
    "fixed" a single genome is drawn up front and trained throughout,
    which is the conventional one-architecture baseline.  Returns the
    final SharedParameters and the per-epoch TrainRecord list.
    """
    params = init_shared_parameters(space, spec.n_heads, spec.n_classes, rng, config)
    batch = dataset.split("train")
    fixed = random_genome(space, rng) if config.genome_sampling == "fixed" else None
    log: list[TrainRecord] = []
    for epoch in range(config.epochs):
        genome = fixed if fixed is not None else random_genome(space, rng)
        log.append(train_epoch(genome, params, batch, noise, rng, space, epoch=epoch))
    return params, log


@dataclass
class FineTuneResult:
    theta: np.ndarray
    val_loss: float
    val_accuracy: float
    head: int
    params: SharedParameters = field(repr=False, default=None)


def evaluate_heads(genome, params: SharedParameters, batch, noise: NoiseSpec,
                   space: SearchSpaceDef):
    """Best head on a batch: (head index, its loss, its accuracy)."""
    features, labels = batch
    z = circuit_expectations(genome, params, features, noise, space)
    losses = _losses_from_z(z, labels, params)
    k = int(np.argmin(losses))
    preds = np.argmax(head_logits(z, params.supernets[k]), axis=1)
    return k, float(losses[k]), float(np.mean(preds == labels))


def evaluate_with_head(genome, params: SharedParameters, head: int, batch,
                       noise: NoiseSpec, space: SearchSpaceDef):
    """Loss and accuracy of one fixed head on a batch (no head re-selection)."""
    features, labels = batch
    z = circuit_expectations(genome, params, features, noise, space)
    logits = head_logits(z, params.supernets[head])
    loss, _ = softmax_cross_entropy(logits, labels)
    accuracy = float(np.mean(np.argmax(logits, axis=1) == labels))
    return loss, accuracy


def refit_head(head: Supernet, z: np.ndarray, labels: np.ndarray,
               lr: float = 0.5, steps: int = 500) -> Supernet:
    """Warm-started gradient descent on the convex head subproblem.

    Given fixed circuit expectations z, the cross-entropy in (W, b) is an
    ordinary multinomial logistic regression; driving it to convergence
    costs no circuit evaluations.
    """
    weights, bias = head.weights.copy(), head.bias.copy()
    for _ in range(steps):
        _, dlogits = softmax_cross_entropy(z @ weights.T + bias, labels)
        weights -= lr * (dlogits.T @ z)
        bias -= lr * dlogits.sum(axis=0)
    return Supernet(weights, bias)


def fine_tune(genome, params: SharedParameters, dataset: Dataset, spec: TaskSpec,
              noise: NoiseSpec, steps: int, rng: Optional[np.random.Generator] = None,
              space: Optional[SearchSpaceDef] = None,
              head_refit_steps: int = 500) -> FineTuneResult:
    """T gradient steps on a private copy of the pool, then validate.

    The shared pool is never mutated, and theta moves only through the T
    hybrid steps.  Because the fitness of an architecture is its loss
    under optimally tuned parameters, the classical heads are then refit
    to convergence on the training expectations (a convex subproblem the
    T joint steps barely dent).  Head selection runs greedily
    (epsilon = 0) so evaluation is deterministic; the returned loss and
    accuracy come from the best head on the validation split.
    """
    if space is None:
        space = SearchSpaceDef(spec.n_qubits, spec.min_layers, spec.max_layers)
    local = params.copy()
    batch = dataset.split("train")
    if rng is None:
        rng = np.random.default_rng(0)   # unused at epsilon=0; keeps the API uniform
    for step in range(steps):
        train_epoch(genome, local, batch, noise, rng, space, epoch=step, epsilon=0.0)
    if head_refit_steps:
        z_train = circuit_expectations(genome, local, batch[0], noise, space)
        local.supernets = [refit_head(h, z_train, batch[1], steps=head_refit_steps)
                           for h in local.supernets]
    k, val_loss, val_acc = evaluate_heads(genome, local, dataset.split("val"), noise, space)
    used = space.n_qubits * len(genome)
    return FineTuneResult(theta=local.theta[:used].copy(), val_loss=val_loss,
                          val_accuracy=val_acc, head=k, params=local)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_checkpoint(path, params: SharedParameters):
    """Versioned JSON checkpoint; byte-stable for identical parameters."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "qubits": params.n_qubits,
        "heads": params.n_heads,
        "max_layers": params.max_layers,
        "classes": params.n_classes,
        "epsilon": params.epsilon,
        "eta": params.eta,
        "theta": params.theta.tolist(),
        "supernets": [{"weights": s.weights.tolist(), "bias": s.bias.tolist()}
                      for s in params.supernets],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> SharedParameters:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    theta = np.array(payload["theta"], dtype=float)
    heads = [Supernet(np.array(s["weights"], dtype=float), np.array(s["bias"], dtype=float))
             for s in payload["supernets"]]
    params = SharedParameters(theta, heads, float(payload["epsilon"]), float(payload["eta"]))
    if (params.n_qubits, params.n_heads, params.max_layers, params.n_classes) != (
            payload["qubits"], payload["heads"], payload["max_layers"], payload["classes"]):
        raise ValueError(f"{path}: header does not match stored arrays")
    return params


def write_train_log(path, records: Sequence[TrainRecord]):
    """CSV log: epoch, loss, head, mean |dtheta|, then per-slot |dtheta|."""
    n_slots = records[0].dtheta.size if records else 0
    header = ["epoch", "loss", "head", "mean_dtheta"] + [f"dtheta_{i}" for i in range(n_slots)]
    lines = [",".join(header)]
    for rec in records:
        row = [str(rec.epoch), repr(rec.loss), str(rec.head), repr(rec.mean_dtheta)]
        row += [repr(float(v)) for v in rec.dtheta]
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
