"""Layer-wise tree network with exact analytic gradients.

Each tree level i in 1..h applies one two-layer perceptron to the sum of
child vectors; the readout concatenates per-level pools (including the raw
leaf features at level 0); a linear softmax head predicts the class. All
math is float64 numpy, fully seeded, single-threaded.
"""
from __future__ import annotations

import copy
import json
import math
import random
from dataclasses import dataclass, field, asdict

import numpy as np

from .entropy import CodingTree, TreeStructureError


@dataclass
class TrainConfig:
    height: int = 2
    hidden: int = 96
    pool: str = "mean"
    lr: float = 1e-3
    dropout: float = 0.5
    batch: int = 4
    seed: int = 0
    max_epochs: int = 200
    patience: int = 10

    def __post_init__(self):
        if not (2 <= self.height <= 12):
            raise ValueError(f"height must be in [2, 12], got {self.height}")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.pool not in ("sum", "mean"):
            raise ValueError(f"pool must be 'sum' or 'mean', got {self.pool!r}")


class TreeModel:
    """Per-level MLP parameters plus the linear classifier head."""

    def __init__(self, input_dim: int, hidden: int, height: int, n_classes: int,
                 seed: int = 0, pool: str = "mean", dropout: float = 0.0):
        self.input_dim = input_dim
        self.hidden = hidden
        self.height = height
        self.n_classes = n_classes
        self.pool = pool
        self.dropout = dropout
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        for i in range(1, height + 1):
            d_in = input_dim if i == 1 else hidden
            self.params[f"mlp{i}.W1"] = _init(rng, d_in, hidden)
            self.params[f"mlp{i}.b1"] = np.zeros(hidden)
            self.params[f"mlp{i}.W2"] = _init(rng, hidden, hidden)
            self.params[f"mlp{i}.b2"] = np.zeros(hidden)
        d_readout = input_dim + height * hidden
        self.params["cls.W"] = _init(rng, d_readout, n_classes)
        self.params["cls.b"] = np.zeros(n_classes)
        self._dropout_rng = np.random.default_rng((seed, 0xD0))

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def config_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden": self.hidden,
                "height": self.height, "n_classes": self.n_classes,
                "pool": self.pool, "dropout": self.dropout, "seed": self.seed}


def _init(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    scale = 1.0 / math.sqrt(d_in)
    return rng.uniform(-scale, scale, size=(d_in, d_out))


def count_params(model: TreeModel) -> int:
    return sum(int(np.prod(v.shape)) for v in model.params.values())


def count_params_formula(input_dim: int, hidden: int, height: int, n_classes: int) -> int:
    first = input_dim * hidden + hidden + hidden * hidden + hidden
    rest = (height - 1) * 2 * (hidden * hidden + hidden)
    head = (input_dim + height * hidden) * n_classes + n_classes
    return first + rest + head


def _level_layout(tree: CodingTree) -> list[list]:
    """Per level, nodes sorted by id; checks alignment."""
    levels = []
    for lvl in range(tree.height + 1):
        nodes = tree.level_nodes(lvl)
        if not nodes:
            raise TreeStructureError(f"no nodes at level {lvl}; tree not aligned")
        levels.append(nodes)
    if sum(len(l) for l in levels) != len(tree.nodes):
        raise TreeStructureError("tree has nodes outside levels 0..height")
    return levels


def forward(model: TreeModel, tree: CodingTree, x0: np.ndarray,
            train_mode: bool = False) -> tuple[np.ndarray, np.ndarray, dict]:
    """Returns (class distribution, readout, cache for backward)."""
    if tree.height != model.height:
        raise TreeStructureError(
            f"tree height {tree.height} != model height {model.height}")
    levels = _level_layout(tree)
    leaves = levels[0]
    if x0.shape[0] != len(leaves):
        raise ValueError(f"feature rows {x0.shape[0]} != leaf count {len(leaves)}")
    if x0.shape[1] != model.input_dim:
        raise ValueError(f"feature dim {x0.shape[1]} != model input dim {model.input_dim}")

    # vectors at level 0 are the raw leaf features, ordered by node id
    reps = [np.asarray([x0[n.leaf_token] for n in leaves])]
    index_at = [{n.id: k for k, n in enumerate(leaves)}]
    cache = {"levels": levels, "S": [None], "z1": [None], "a1": [None],
             "z2": [None], "mask": [None], "index_at": index_at}

    p = model.dropout if train_mode else 0.0
    for i in range(1, model.height + 1):
        nodes = levels[i]
        prev_idx = index_at[i - 1]
        S = np.zeros((len(nodes), reps[i - 1].shape[1]))
        for k, node in enumerate(nodes):
            for c in node.children:
                S[k] += reps[i - 1][prev_idx[c]]
        z1 = S @ model.params[f"mlp{i}.W1"] + model.params[f"mlp{i}.b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ model.params[f"mlp{i}.W2"] + model.params[f"mlp{i}.b2"]
        if p > 0.0:
            mask = (model._dropout_rng.random(z2.shape) >= p).astype(np.float64)
            out = z2 * mask / (1.0 - p)
        else:
            mask = None
            out = z2
        reps.append(out)
        index_at.append({n.id: k for k, n in enumerate(nodes)})
        cache["S"].append(S)
        cache["z1"].append(z1)
        cache["a1"].append(a1)
        cache["z2"].append(z2)
        cache["mask"].append(mask)

    pooled = []
    for i, rep in enumerate(reps):
        pooled.append(rep.sum(axis=0) if model.pool == "sum" else rep.mean(axis=0))
    x_t = np.concatenate(pooled)
    logits = x_t @ model.params["cls.W"] + model.params["cls.b"]
    y = _softmax(logits)
    cache.update({"reps": reps, "x_t": x_t, "y": y, "p": p, "model": model})
    return y, x_t, cache


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


LOSS_FLOOR = 1e-12


def loss(y: np.ndarray, gold: int) -> float:
    """Cross-entropy against the one-hot gold label, natural log."""
    return -math.log(max(float(y[gold]), LOSS_FLOOR))


def backward(cache: dict, gold: int) -> dict[str, np.ndarray]:
    """Exact gradients of loss(forward(...)) for every parameter tensor."""
    model: TreeModel = cache["model"]
    levels = cache["levels"]
    reps = cache["reps"]
    index_at = cache["index_at"]
    grads = model.zero_grads()

    dlogits = cache["y"].copy()
    dlogits[gold] -= 1.0
    grads["cls.W"] = np.outer(cache["x_t"], dlogits)
    grads["cls.b"] = dlogits
    dxt = model.params["cls.W"] @ dlogits

    # split the readout gradient back into per-level pool segments
    seg_grad = []
    offset = 0
    for rep in reps:
        d = rep.shape[1]
        seg_grad.append(dxt[offset:offset + d])
        offset += d

    node_grads = []
    for i, rep in enumerate(reps):
        k = rep.shape[0]
        g = np.tile(seg_grad[i], (k, 1))
        if model.pool == "mean":
            g = g / k
        node_grads.append(g)

    p = cache["p"]
    for i in range(model.height, 0, -1):
        G = node_grads[i]
        if cache["mask"][i] is not None:
            G = G * cache["mask"][i] / (1.0 - p)
        a1, z1, S = cache["a1"][i], cache["z1"][i], cache["S"][i]
        grads[f"mlp{i}.W2"] += a1.T @ G
        grads[f"mlp{i}.b2"] += G.sum(axis=0)
        da1 = G @ model.params[f"mlp{i}.W2"].T
        dz1 = da1 * (z1 > 0)
        grads[f"mlp{i}.W1"] += S.T @ dz1
        grads[f"mlp{i}.b1"] += dz1.sum(axis=0)
        dS = dz1 @ model.params[f"mlp{i}.W1"].T
        prev_idx = index_at[i - 1]
        for k, node in enumerate(levels[i]):
            for c in node.children:
                node_grads[i - 1][prev_idx[c]] += dS[k]
    return grads


def forward_flops(tree: CodingTree, input_dim: int, hidden: int,
                  n_classes: int) -> int:
    """Analytic multiply-add count of one document forward pass."""
    total = 0
    for lvl in range(1, tree.height + 1):
        n_nodes = len(tree.level_nodes(lvl))
        d_in = input_dim if lvl == 1 else hidden
        total += n_nodes * (d_in * hidden + hidden * hidden)
    total += (input_dim + tree.height * hidden) * n_classes
    return total


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k in sorted(params):
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1 ** self.t)
            v_hat = self.v[k] / (1 - b2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    model: TreeModel
    history: list[dict] = field(default_factory=list)
    best_val_acc: float = 0.0
    best_epoch: int = -1


def evaluate(model: TreeModel, dataset: list[tuple]) -> float:
    """Accuracy of argmax predictions over (tree, features, label) triples."""
    if not dataset:
        raise ValueError("empty evaluation set")
    hits = 0
    for tree, x0, label in dataset:
        y, _, _ = forward(model, tree, x0, train_mode=False)
        hits += int(np.argmax(y)) == label
    return hits / len(dataset)


def train(model: TreeModel, dataset: list[tuple], config: TrainConfig) -> TrainResult:
    """Seeded 9:1 train/validation split, Adam minibatches, early stopping on
    best validation accuracy; returns the best-validation checkpoint."""
    if not dataset:
        raise ValueError("empty training set")
    rng = random.Random(config.seed)
    order = list(range(len(dataset)))
    rng.shuffle(order)
    n_val = max(1, round(len(dataset) / 10)) if len(dataset) > 1 else 0
    val_idx, train_idx = order[:n_val], order[n_val:]
    if not train_idx:
        raise ValueError("training split is empty")
    val_set = [dataset[i] for i in val_idx]
    optimizer = Adam(model.params, lr=config.lr)

    best = TrainResult(model=model)
    best_params = None
    stale = 0
    for epoch in range(config.max_epochs):
        rng.shuffle(train_idx)
        epoch_loss = 0.0
        n_seen = 0
        for start in range(0, len(train_idx), config.batch):
            batch = train_idx[start:start + config.batch]
            grads = model.zero_grads()
            for i in batch:
                tree, x0, label = dataset[i]
                y, _, cache = forward(model, tree, x0, train_mode=True)
                epoch_loss += loss(y, label)
                g = backward(cache, label)
                for k in grads:
                    grads[k] += g[k]
            for k in grads:
                grads[k] /= len(batch)
            optimizer.step(model.params, grads)
            n_seen += len(batch)
        train_loss = epoch_loss / n_seen
        val_acc = evaluate(model, val_set) if val_set else evaluate(
            model, [dataset[i] for i in train_idx])
        best.history.append({"epoch": epoch, "train_loss": train_loss,
                             "val_acc": val_acc})
        improved = val_acc > best.best_val_acc or best_params is None
        if improved or val_acc == best.best_val_acc:
            # ties keep the later, longer-trained parameters
            best.best_val_acc = val_acc
            best.best_epoch = epoch
            best_params = copy.deepcopy(model.params)
        if improved:
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    model.params = best_params
    best.model = model
    return best


# -- checkpoints --------------------------------------------------------------

def save_checkpoint(model: TreeModel, path, config: TrainConfig | None = None) -> None:
    meta = {"model": model.config_dict(),
            "train_config": asdict(config) if config else None}
    np.savez(path, __meta__=json.dumps(meta), **model.params)


def load_checkpoint(path) -> tuple[TreeModel, dict]:
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["__meta__"]))
    mc = meta["model"]
    model = TreeModel(input_dim=mc["input_dim"], hidden=mc["hidden"],
                      height=mc["height"], n_classes=mc["n_classes"],
                      seed=mc["seed"], pool=mc["pool"], dropout=mc["dropout"])
    for k in model.params:
        model.params[k] = data[k]
    return model, meta
