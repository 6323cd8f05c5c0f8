"""Mini-batch Adam training loop with per-epoch history."""

from dataclasses import dataclass, field

import numpy as np

from .model import Model, compute_gradients
from .ops import softmax_cross_entropy_batch


@dataclass
class TrainConfig:
    batch_size: int = 8
    epochs: int = 30
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "train_accuracy": self.train_accuracy,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
        }


class Adam:
    """Adam optimizer over a model's parameter list."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7):
        self.params = params
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads):
        self.t += 1
        lr_t = self.lr * np.sqrt(1 - self.beta2 ** self.t) / (1 - self.beta1 ** self.t)
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= (lr_t * m / (np.sqrt(v) + self.epsilon)).astype(p.dtype)


def stratified_split(labels: np.ndarray, val_fraction: float,
                     rng: np.random.Generator):
    """Shuffled per-class split; returns (train_idx, val_idx)."""
    labels = np.asarray(labels)
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        n_val = max(1, int(round(len(members) * val_fraction)))
        val_idx.extend(members[:n_val])
        train_idx.extend(members[n_val:])
    return np.sort(np.array(train_idx)), np.sort(np.array(val_idx))


def evaluate(model: Model, x: np.ndarray, y: np.ndarray, batch_size: int = 64):
    """(mean loss, accuracy) with dropout disabled."""
    n = len(y)
    total_loss = 0.0
    correct = 0
    for start in range(0, n, batch_size):
        xb = x[start : start + batch_size]
        yb = y[start : start + batch_size]
        logits = model.forward(xb, training=False)
        loss, _ = softmax_cross_entropy_batch(logits, yb)
        total_loss += loss
        correct += int((np.argmax(logits, axis=1) == yb).sum())
    return total_loss / n, correct / n


def train(model: Model, x: np.ndarray, y: np.ndarray, config: TrainConfig,
          split: tuple[np.ndarray, np.ndarray] | None = None) -> TrainHistory:
    """Run mini-batch Adam; deterministic for a fixed config seed.

    x: (N, 600, 7) or (N, 600, 7, 1) float32, already normalized;
    y: (N,) int class indices. Both classes must be present. `split`
    overrides the internal stratified train/val split (e.g. to reuse a
    dataset manifest's assignment).
    """
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise ValueError("dataset is empty")
    if len(np.unique(y)) < 2:
        raise ValueError("training requires samples from both classes")

    rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])

    if split is None:
        train_idx, val_idx = stratified_split(y, config.validation_fraction, rng)
    else:
        train_idx, val_idx = (np.asarray(i) for i in split)

    x_train, y_train = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]
    n_train = len(train_idx)

    optimizer = Adam([p for _, _, p in model.params()],
                     learning_rate=config.learning_rate,
                     beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
    history = TrainHistory()

    for _ in range(config.epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss_sum, grads = compute_gradients(
                model, x_train[batch], y_train[batch], training=True, rng=dropout_rng
            )
            scale = 1.0 / len(batch)
            optimizer.step([g * scale for g in grads])

        train_loss, train_acc = evaluate(model, x_train, y_train)
        val_loss, val_acc = evaluate(model, x_val, y_val)
        history.train_loss.append(train_loss)
        history.train_accuracy.append(train_acc)
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)

    return history
