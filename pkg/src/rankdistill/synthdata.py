"""Synthetic multi-label tasks with deliberately insufficient labels.

Answers are grouped into semantic clusters and each instance's feature
vector is a noisy cluster prototype, so label correlations are learnable
from data. The evaluator knows the full positive set, but train instances
reveal exactly one positive; val/test instances reveal everything.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError
from .numerics import RngState

__all__ = [
    "TaskSpec",
    "Instance",
    "Dataset",
    "generate",
    "hidden_positive_rate",
    "save_dataset",
    "load_dataset",
]

DATASET_FORMAT = "rankdistill-dataset"
DATASET_VERSION = 1

# RNG stream owned by data generation (training streams live in harness).
DATA_STREAM = 101


@dataclass(frozen=True)
class TaskSpec:
    """Declarative description of one synthetic insufficient-label task."""

    num_answers: int = 50
    feature_dim: int = 32
    num_clusters: int = 10
    positives_per_instance: tuple[int, int] = (1, 5)
    label_noise: float = 0.0
    feature_noise: float = 1.5
    train_size: int = 2000
    val_size: int = 500
    test_size: int = 500
    graded_relevance: bool = False
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.positives_per_instance
        if not 1 <= lo <= hi <= self.num_answers:
            raise ArgumentError(
                f"positives_per_instance range {self.positives_per_instance} "
                f"invalid for {self.num_answers} answers"
            )
        if self.num_clusters < 1 or self.num_clusters > self.num_answers:
            raise ArgumentError(
                f"num_clusters {self.num_clusters} must be in [1, {self.num_answers}]"
            )
        if not 0.0 <= self.label_noise < 1.0:
            raise ArgumentError(f"label_noise must be in [0, 1), got {self.label_noise}")
        if self.feature_noise < 0:
            raise ArgumentError("feature_noise must be non-negative")
        if min(self.train_size, self.val_size, self.test_size) < 1:
            raise ArgumentError("all split sizes must be positive")


@dataclass
class Instance:
    """One sample: features, ground-truth positives, and the labels training sees."""

    features: np.ndarray
    full_positives: frozenset[int]
    revealed_positives: frozenset[int]
    annotation_counts: dict[int, int] | None = None

    def __post_init__(self):
        if not self.revealed_positives:
            raise ArgumentError("revealed_positives must be non-empty")
        if not self.revealed_positives <= self.full_positives:
            raise ArgumentError("revealed_positives must be a subset of full_positives")

    @property
    def hidden_positives(self) -> frozenset[int]:
        return self.full_positives - self.revealed_positives


@dataclass
class Dataset:
    instances: list[Instance]
    split: str
    task: TaskSpec

    def __len__(self) -> int:
        return len(self.instances)

    def feature_matrix(self) -> np.ndarray:
        return np.stack([inst.features for inst in self.instances])


def answer_clusters(task: TaskSpec) -> list[np.ndarray]:
    """Partition of answer ids into contiguous, near-equal clusters."""
    return np.array_split(np.arange(task.num_answers), task.num_clusters)


def _make_instance(
    task: TaskSpec,
    prototypes: np.ndarray,
    clusters: list[np.ndarray],
    rng: RngState,
    reveal_all: bool,
) -> Instance:
    gen = rng.gen
    c = int(gen.integers(task.num_clusters))
    members = clusters[c]
    lo, hi = task.positives_per_instance
    size = min(int(gen.integers(lo, hi + 1)), members.size)
    full = set(int(a) for a in gen.choice(members, size=size, replace=False))
    features = prototypes[c] + task.feature_noise * gen.normal(size=task.feature_dim)
    if reveal_all:
        revealed = set(full)
    elif task.label_noise > 0.0 and gen.random() < task.label_noise:
        # Annotation error: the single revealed label is an arbitrary wrong
        # answer. It joins full_positives so training labels stay a subset,
        # but eval splits (reveal_all) are never noised.
        outside = np.setdiff1d(np.arange(task.num_answers), sorted(full))
        spurious = int(gen.choice(outside))
        full.add(spurious)
        revealed = {spurious}
    else:
        revealed = {int(gen.choice(sorted(full)))}
    counts = None
    if task.graded_relevance:
        counts = {a: int(gen.integers(1, 6)) for a in sorted(full)}
    return Instance(features, frozenset(full), frozenset(revealed), counts)


def generate(task: TaskSpec, rng: RngState | None = None):
    """Build (train, val, test) datasets; identical TaskSpec => identical data."""
    if rng is None:
        rng = RngState(task.seed, DATA_STREAM)
    prototypes = rng.gen.normal(size=(task.num_clusters, task.feature_dim))
    clusters = answer_clusters(task)
    splits = []
    for split, size, reveal_all in (
        ("train", task.train_size, False),
        ("val", task.val_size, True),
        ("test", task.test_size, True),
    ):
        instances = [
            _make_instance(task, prototypes, clusters, rng, reveal_all)
            for _ in range(size)
        ]
        splits.append(Dataset(instances, split, task))
    return tuple(splits)


def hidden_positive_rate(dataset: Dataset) -> float:
    """Mean fraction of each instance's positives hidden from training."""
    if not dataset.instances:
        raise DimensionError("dataset is empty")
    fractions = [
        len(inst.hidden_positives) / len(inst.full_positives)
        for inst in dataset.instances
    ]
    return float(np.mean(fractions))


def save_dataset(dataset: Dataset, path) -> None:
    """Line-delimited JSON: one header record, then one record per instance."""
    task_doc = asdict(dataset.task)
    task_doc["positives_per_instance"] = list(task_doc["positives_per_instance"])
    header = {
        "record": "task",
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "split": dataset.split,
        "task": task_doc,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for inst in dataset.instances:
            rec = {
                "record": "instance",
                "features": inst.features.tolist(),
                "full_positives": sorted(inst.full_positives),
                "revealed_positives": sorted(inst.revealed_positives),
            }
            if inst.annotation_counts is not None:
                rec["annotation_counts"] = {
                    str(k): v for k, v in sorted(inst.annotation_counts.items())
                }
            fh.write(json.dumps(rec) + "\n")


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("record") != "task" or header.get("format") != DATASET_FORMAT:
            raise ArgumentError(f"not a dataset file: {path}")
        if header.get("version") != DATASET_VERSION:
            raise ArgumentError(f"unsupported dataset version {header.get('version')}")
        task_doc = dict(header["task"])
        task_doc["positives_per_instance"] = tuple(task_doc["positives_per_instance"])
        task = TaskSpec(**task_doc)
        instances = []
        for line in fh:
            rec = json.loads(line)
            counts = rec.get("annotation_counts")
            instances.append(
                Instance(
                    np.asarray(rec["features"], dtype=np.float64),
                    frozenset(rec["full_positives"]),
                    frozenset(rec["revealed_positives"]),
                    {int(k): v for k, v in counts.items()} if counts else None,
                )
            )
    return Dataset(instances, header["split"], task)
