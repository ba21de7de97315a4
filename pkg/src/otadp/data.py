"""Synthetic client datasets and partitioning.

Samples come from a fixed random linear teacher: ``x ~ N(0, I)`` and the label
is the arg-max of ``W x + b``.  In ``label_shard`` mode every client only sees
a random subset of the classes, which gives the statistical heterogeneity of
a per-writer character split without downloading anything.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidInput
from .model import ClientRecord
from .rng import stream

MODES = ("iid", "label_shard")


@dataclass(frozen=True)
class Teacher:
    W: np.ndarray
    b: np.ndarray

    @classmethod
    def from_seed(cls, feat_dim: int, classes: int, seed: int) -> "Teacher":
        rng = stream(seed, "teacher")
        W = rng.normal(size=(classes, feat_dim))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        return cls(W, rng.normal(0.0, 0.1, classes))

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        x = rng.normal(size=(n, self.W.shape[1]))
        return x, (x @ self.W.T + self.b).argmax(axis=1)


def _check(K, n_range, classes, mode, shards_per_client):
    if K < 1:
        raise ConfigError("K must be >= 1")
    if classes < 2:
        raise ConfigError("need at least two classes")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not 1 <= shards_per_client <= classes:
        raise ConfigError(f"shards_per_client={shards_per_client} infeasible with {classes} classes")
    lo, hi = n_range
    if not 1 <= lo <= hi:
        raise ConfigError(f"invalid sample-count range {n_range}")


def _assign(K, n_range, classes, mode, shards_per_client, rng):
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=K)
    if mode == "iid":
        allowed = [np.arange(classes)] * K
    else:
        allowed = [np.sort(rng.choice(classes, shards_per_client, replace=False)) for _ in range(K)]
    return sizes, allowed


def _records(parts: list[tuple[np.ndarray, np.ndarray]], allowed) -> list[ClientRecord]:
    total = sum(len(y) for _, y in parts)
    return [ClientRecord(id=i, x=x, y=y, p=len(y) / total, meta={"classes": allowed[i].tolist()})
            for i, (x, y) in enumerate(parts)]


def gen_synthetic(K: int, n_range: tuple[int, int] = (100, 300), feat_dim: int = 64,
                  classes: int = 10, mode: str = "label_shard", shards_per_client: int = 5,
                  seed: int = 0) -> list[ClientRecord]:
    _check(K, n_range, classes, mode, shards_per_client)
    teacher = Teacher.from_seed(feat_dim, classes, seed)
    sizes, allowed = _assign(K, n_range, classes, mode, shards_per_client, stream(seed, "partition"))
    parts = []
    for i, (n, keep) in enumerate(zip(sizes, allowed)):
        rng = stream(seed, "samples", i)
        xs, ys, have = [], [], 0
        for _ in range(1000):
            x, y = teacher.sample(max(4 * int(n), 64), rng)
            mask = np.isin(y, keep)
            xs.append(x[mask])
            ys.append(y[mask])
            have += int(mask.sum())
            if have >= n:
                break
        else:
            raise ConfigError(f"teacher rarely emits classes {keep.tolist()}; cannot fill client {i}")
        parts.append((np.concatenate(xs)[:n], np.concatenate(ys)[:n]))
    return _records(parts, allowed)


def partition_table(features: np.ndarray, labels: np.ndarray, K: int, mode: str = "label_shard",
                    shards_per_client: int = 5, n_range: tuple[int, int] | None = None,
                    seed: int = 0) -> list[ClientRecord]:
    """Split an imported table into clients without reusing any row."""
    labels = np.asarray(labels, dtype=np.intp)
    classes = int(labels.max()) + 1
    if n_range is None:
        per = len(labels) // K
        n_range = (max(1, per // 2), max(1, per))
    _check(K, n_range, classes, mode, shards_per_client)
    rng = stream(seed, "partition")
    sizes, allowed = _assign(K, n_range, classes, mode, shards_per_client, rng)
    pools = {c: list(rng.permutation(np.flatnonzero(labels == c))) for c in range(classes)}
    parts = []
    for i, (n, keep) in enumerate(zip(sizes, allowed)):
        candidates = np.concatenate([np.asarray(pools[c], dtype=np.intp) for c in keep])
        if len(candidates) < n:
            raise ConfigError(f"table has too few rows of classes {keep.tolist()} for client {i}")
        take = rng.choice(candidates, size=int(n), replace=False)
        taken = set(take.tolist())
        for c in keep:
            pools[c] = [j for j in pools[c] if j not in taken]
        take.sort()
        parts.append((np.asarray(features[take], dtype=np.float64), labels[take]))
    return _records(parts, allowed)


def _allocate(counts: np.ndarray, total: int) -> np.ndarray:
    """Split ``total`` across classes proportionally (largest remainder)."""
    share = counts * (total / counts.sum())
    out = np.floor(share).astype(int)
    order = np.argsort(-(share - out), kind="stable")
    out[order[:total - out.sum()]] += 1
    return out


def train_test_split(records: Sequence[ClientRecord], test_frac: float = 0.2, seed: int = 0
                     ) -> tuple[list[ClientRecord], tuple[np.ndarray, np.ndarray]]:
    """Per-client, per-class split; the held-out rows form one global test set.

    Client weights are recomputed from the remaining training counts.
    """
    if not 0 < test_frac < 1:
        raise ConfigError("test_frac must lie in (0, 1)")
    kept, test_x, test_y = [], [], []
    for r in records:
        rng = stream(seed, "split", r.id)
        classes, counts = np.unique(r.y, return_counts=True)
        test_idx = []
        for c, k in zip(classes, _allocate(counts, int(round(test_frac * len(r.y))))):
            test_idx.extend(rng.permutation(np.flatnonzero(r.y == c))[:k].tolist())
        is_test = np.zeros(len(r.y), dtype=bool)
        is_test[test_idx] = True
        if is_test.all():
            raise ConfigError(f"client {r.id} has no training samples left after the split")
        kept.append((r, np.flatnonzero(~is_test)))
        test_x.append(r.x[is_test])
        test_y.append(r.y[is_test])
    total = sum(len(idx) for _, idx in kept)
    train = [ClientRecord(id=r.id, x=r.x[idx], y=r.y[idx], p=len(idx) / total, power=r.power,
                          kappa=r.kappa, meta={**r.meta, "train_index": idx})
             for r, idx in kept]
    return train, (np.concatenate(test_x), np.concatenate(test_y))


def load_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``label,f1,...,fn`` rows; a non-numeric first row is taken as a header."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if k == 0:
                    continue
                raise InvalidInput(f"{path}: non-numeric value in row {k + 1}")
            rows.append(values)
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInput(f"{path}: rows have differing column counts")
    arr = np.array(rows, dtype=np.float64)
    labels = arr[:, 0]
    if np.any(labels != np.round(labels)) or labels.min() < 0:
        raise InvalidInput(f"{path}: labels must be nonnegative integers")
    return arr[:, 1:], labels.astype(np.intp)
