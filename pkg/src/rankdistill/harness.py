"""Two-stage experiment driver.

Trains a teacher on revealed labels, snapshots its rankings (plus
uncertainties and soft margins for the pairwise scheme), distills a student
under the chosen scheme, evaluates on the full positive sets, and persists
reproducible run records.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .baselines import pseudo_labels, smooth_labels, smoothed_cross_entropy, vanilla_kd_loss
from .distill import LossValue, RankedList, classification_loss, combined_loss, teacher_ranking
from .errors import ArgumentError, ConfigError, ConvergenceError, DomainError, TrainingError
from .listwise import LOSS_TAGS, LambdaWeighting, SamplingPlan, listwise_rank_loss
from .metrics import EvalResult, evaluate
from .model import (
    ModelGradient,
    ScoreModel,
    backward_batch,
    forward_batch,
    init_model,
    mc_dropout_scores,
    model_checksum,
    sgd_step,
)
from .numerics import RngState
from .pairwise import (
    MarginScalingMatrix,
    SoftMarginSet,
    default_smoothing,
    pairwise_margin_loss,
    pairwise_uncertainty,
    sinkhorn_margins,
    soft_margins,
)
from .synthdata import Dataset, TaskSpec, generate

__all__ = [
    "ModelConfig",
    "StageConfig",
    "PairwiseConfig",
    "ListwiseConfig",
    "BaselineConfig",
    "ExperimentConfig",
    "PhaseRecord",
    "RunRecord",
    "TeacherSnapshot",
    "SweepCell",
    "config_from_dict",
    "config_to_dict",
    "config_checksum",
    "train_teacher",
    "snapshot_teacher",
    "distill_student",
    "run_experiment",
    "run_sweep",
    "write_run_outputs",
]

SCHEMES = ("cls-only", "radi-p", "radi-l", "label-smoothing", "pseudo-labeling", "vanilla-kd")
STUDENT_INITS = ("scratch", "from-teacher", "individual")
MARGIN_MODES = ("sinkhorn", "uniform", "random", "reciprocal")

# Distillation coefficient defaults per scheme (sweep set {0.1, 1, 10, 100, 1000}).
ALPHA_DEFAULTS = {"radi-p": 100.0, "radi-l": 10.0, "vanilla-kd": 1.0}

SNAPSHOT_FORMAT = "rankdistill-snapshot"
SNAPSHOT_VERSION = 1

# Fixed stream ids partitioning the per-seed Philox key space.
STREAM_TEACHER_INIT = 11
STREAM_TEACHER_BATCH = 12
STREAM_STUDENT_INIT = 13
STREAM_STUDENT_BATCH = 14
STREAM_LISTWISE = 15
STREAM_MC_BASE = 1 << 32
STREAM_MARGIN_BASE = 2 << 32


@dataclass
class ModelConfig:
    hidden_sizes: tuple[int, ...] = (64, 64)
    dropout_rate: float = 0.1


@dataclass
class StageConfig:
    epochs: int = 30
    lr: float = 1e-2
    clip_norm: float = 0.1
    batch_size: int = 32
    momentum: float = 0.0
    warmup_frac: float = 0.1

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.lr <= 0 or self.clip_norm <= 0 or self.batch_size < 1:
            raise ConfigError("lr, clip_norm and batch_size must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")
        if not 0.0 <= self.warmup_frac <= 1.0:
            raise ConfigError("warmup_frac must be in [0, 1]")


@dataclass
class PairwiseConfig:
    base_margin: float = 1.0
    smoothing: float | None = None  # None: smoothing_factor x median uncertainty
    smoothing_factor: float = 0.1
    mc_passes: int = 10
    truncate: int = 50
    rescale: bool = True
    margin_mode: str = "sinkhorn"
    tol: float = 1e-8
    max_iters: int = 10_000

    def __post_init__(self):
        if self.margin_mode not in MARGIN_MODES:
            raise ConfigError(f"unknown margin_mode {self.margin_mode!r}")
        if self.mc_passes < 2:
            raise ConfigError("mc_passes must be >= 2")
        if self.base_margin <= 0:
            raise ConfigError("base_margin must be positive")


@dataclass
class ListwiseConfig:
    hot_size: int = 10
    cold_size: int = 5
    scheme: str = "zipf"
    smoothing: float = 1.0
    with_replacement: bool = False
    loss_tag: str = "listnet"
    beta: float = 1.0
    lambda_variant: str = "ndcg2pp"
    lambda_sigma: float = 1.0
    lambda_mu: float = 5.0

    def __post_init__(self):
        if self.loss_tag not in LOSS_TAGS:
            raise ConfigError(f"unknown loss_tag {self.loss_tag!r}")
        self.plan()  # validates scheme/smoothing eagerly
        self.weighting()

    def plan(self) -> SamplingPlan:
        return SamplingPlan(
            hot_size=self.hot_size,
            cold_size=self.cold_size,
            scheme=self.scheme,
            smoothing=self.smoothing,
            with_replacement=self.with_replacement,
        )

    def weighting(self) -> LambdaWeighting:
        return LambdaWeighting(
            variant=self.lambda_variant, sigma=self.lambda_sigma, mu=self.lambda_mu
        )


@dataclass
class BaselineConfig:
    sigma: float = 0.1
    pseudo_k: int = 3
    kd_temperature: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.sigma < 1.0:
            raise ConfigError("sigma must be in [0, 1)")
        if self.pseudo_k < 0:
            raise ConfigError("pseudo_k must be non-negative")
        if self.kd_temperature <= 0:
            raise ConfigError("kd_temperature must be positive")


@dataclass
class ExperimentConfig:
    """Full declarative description of one two-stage run."""

    task: TaskSpec = field(default_factory=TaskSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    teacher: StageConfig = field(default_factory=StageConfig)
    student: StageConfig = field(default_factory=StageConfig)
    scheme: str = "radi-l"
    alpha_rank: float | None = None
    pairwise: PairwiseConfig = field(default_factory=PairwiseConfig)
    listwise: ListwiseConfig = field(default_factory=ListwiseConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    student_init: str = "individual"
    seed: int = 0
    eval_k: int = 5

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.student_init not in STUDENT_INITS:
            raise ConfigError(f"unknown student_init {self.student_init!r}")
        if self.eval_k < 1:
            raise ConfigError("eval_k must be >= 1")
        if self.alpha_rank is None:
            self.alpha_rank = ALPHA_DEFAULTS.get(self.scheme, 0.0)
        if self.alpha_rank < 0:
            raise ConfigError("alpha_rank must be non-negative")


_SECTIONS: dict[str, type] = {
    "task": TaskSpec,
    "model": ModelConfig,
    "teacher": StageConfig,
    "student": StageConfig,
    "pairwise": PairwiseConfig,
    "listwise": ListwiseConfig,
    "baseline": BaselineConfig,
}
_TUPLE_FIELDS = {"positives_per_instance", "hidden_sizes"}


def _build_section(cls: type, doc: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)} in {path}")
    kwargs = {
        k: tuple(v) if k in _TUPLE_FIELDS and v is not None else v
        for k, v in doc.items()
    }
    try:
        return cls(**kwargs)
    except ArgumentError as exc:
        raise ConfigError(f"invalid {path}: {exc}") from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from plain JSON data, rejecting unknown fields."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    top_known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - top_known
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be an object")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-JSON form of the resolved config (tuples become lists)."""
    return json.loads(json.dumps(asdict(config)))


def config_checksum(config: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class PhaseRecord:
    """Per-epoch trace of one training phase."""

    train_losses: list[float] = field(default_factory=list)
    val_results: list[EvalResult] = field(default_factory=list)
    best_epoch: int = 0


@dataclass
class RunRecord:
    config_checksum: str
    teacher: PhaseRecord
    student: PhaseRecord
    test_result: EvalResult | None
    hidden_recovery: float
    sinkhorn_fallbacks: int
    wall_clock_seconds: float
    version: str = __version__


@dataclass
class TeacherSnapshot:
    """Frozen teacher outputs the student trains against."""

    teacher: ScoreModel
    teacher_checksum: str
    rankings: list[RankedList]
    margins: list[SoftMarginSet] | None
    sinkhorn_fallbacks: int = 0


@dataclass
class SweepCell:
    axis: str
    value: Any
    record: RunRecord | None
    error: str | None = None


def _model_sizes(config: ExperimentConfig) -> list[int]:
    return [config.task.feature_dim, *config.model.hidden_sizes, config.task.num_answers]


def _zero_like(model: ScoreModel) -> ModelGradient:
    return ModelGradient(
        [np.zeros_like(w) for w in model.layer_weights],
        [np.zeros_like(b) for b in model.layer_biases],
    )


def _train(
    model: ScoreModel,
    train: Dataset,
    val: Dataset,
    stage: StageConfig,
    loss_fn: Callable[[int, np.ndarray], LossValue],
    batch_rng: RngState,
    eval_k: int,
) -> tuple[ScoreModel, PhaseRecord]:
    """Mini-batch SGD with linear warmup; returns the best-val-Acc@1 checkpoint."""
    record = PhaseRecord()
    if stage.epochs == 0:
        return model, record
    features = train.feature_matrix()
    n = len(train)
    steps_per_epoch = (n + stage.batch_size - 1) // stage.batch_size
    warmup_steps = int(stage.warmup_frac * stage.epochs * steps_per_epoch)
    velocity = _zero_like(model) if stage.momentum > 0 else None
    best_model, best_acc, best_epoch = model, -1.0, 0
    step = 0
    for epoch in range(1, stage.epochs + 1):
        order = batch_rng.gen.permutation(n)
        epoch_loss = 0.0
        try:
            for start in range(0, n, stage.batch_size):
                idxs = order[start : start + stage.batch_size]
                scores = forward_batch(model, features[idxs])
                upstream = np.empty_like(scores)
                for row, i in enumerate(idxs):
                    loss = loss_fn(int(i), scores[row])
                    epoch_loss += loss.value
                    upstream[row] = loss.gradient_wrt_scores
                grad = backward_batch(model, features[idxs], upstream / idxs.size)
                if velocity is not None:
                    velocity = ModelGradient(
                        [stage.momentum * v + g for v, g in zip(velocity.weights, grad.weights)],
                        [stage.momentum * v + g for v, g in zip(velocity.biases, grad.biases)],
                    )
                    grad = velocity
                step += 1
                lr = stage.lr * (step / warmup_steps if step <= warmup_steps else 1.0)
                model = sgd_step(model, grad, lr, stage.clip_norm)
        except (DomainError, TrainingError) as exc:
            raise TrainingError(f"diverged at epoch {epoch}: {exc}", epoch=epoch) from exc
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        record.train_losses.append(mean_loss)
        val_result = evaluate(model, val, eval_k)
        record.val_results.append(val_result)
        if val_result.acc_at_1 > best_acc:
            best_model, best_acc, best_epoch = model, val_result.acc_at_1, epoch
    record.best_epoch = best_epoch
    return best_model, record


def _cls_only_run(
    config: ExperimentConfig,
    data: tuple[Dataset, Dataset, Dataset],
    seed: int,
    stage: StageConfig,
) -> tuple[ScoreModel, PhaseRecord]:
    """Classification-only training from a fresh init under the given seed."""
    train, val, _ = data
    model = init_model(
        _model_sizes(config), config.model.dropout_rate, RngState(seed, STREAM_TEACHER_INIT)
    )
    revealed = [inst.revealed_positives for inst in train.instances]

    def loss_fn(idx: int, scores: np.ndarray) -> LossValue:
        return classification_loss(scores, revealed[idx])

    return _train(
        model, train, val, stage, loss_fn, RngState(seed, STREAM_TEACHER_BATCH), config.eval_k
    )


def train_teacher(
    config: ExperimentConfig, data: tuple[Dataset, Dataset, Dataset] | None = None
) -> tuple[ScoreModel, RunRecord]:
    """Stage one: minimize the classification loss on revealed labels."""
    start = time.perf_counter()
    if data is None:
        data = generate(config.task)
    teacher, phase = _cls_only_run(config, data, config.seed, config.teacher)
    test_result = evaluate(teacher, data[2], config.eval_k) if phase.val_results else None
    record = RunRecord(
        config_checksum=config_checksum(config),
        teacher=phase,
        student=PhaseRecord(),
        test_result=test_result,
        hidden_recovery=_hidden_recovery(teacher, data[0], config.eval_k),
        sinkhorn_fallbacks=0,
        wall_clock_seconds=time.perf_counter() - start,
    )
    return teacher, record


def _uniform_plan(k: int) -> np.ndarray:
    plan = np.full((k, k), 1.0 / (k * (k - 1)))
    np.fill_diagonal(plan, 0.0)
    return plan


def _instance_margins(
    teacher: ScoreModel,
    features: np.ndarray,
    config: ExperimentConfig,
    instance_idx: int,
) -> tuple[SoftMarginSet, bool]:
    """Soft margins for one train instance; returns (margins, used_fallback)."""
    pw = config.pairwise
    k = min(pw.truncate, config.task.num_answers)
    passes = mc_dropout_scores(
        teacher,
        features,
        pw.mc_passes,
        RngState(config.seed, STREAM_MC_BASE + instance_idx),
    )
    uncertainty = pairwise_uncertainty(passes, k)
    fallback = False
    if pw.margin_mode == "uniform":
        matrix = np.full((k, k), 1.0)
        np.fill_diagonal(matrix, 0.0)
        scaling = MarginScalingMatrix(matrix, uncertainty.answer_ids, rescaled=True)
    elif pw.margin_mode == "random":
        gen = RngState(config.seed, STREAM_MARGIN_BASE + instance_idx).gen
        matrix = gen.random((k, k))
        np.fill_diagonal(matrix, 0.0)
        scaling = MarginScalingMatrix(matrix, uncertainty.answer_ids, rescaled=True)
    elif pw.margin_mode == "reciprocal":
        u = uncertainty.matrix
        off = ~np.eye(k, dtype=bool)
        inv = np.zeros_like(u)
        inv[off] = 1.0 / (u[off] + 1e-12)
        inv[off] /= inv[off].mean()  # mean off-diagonal weight 1, like rescaled plans
        scaling = MarginScalingMatrix(inv, uncertainty.answer_ids, rescaled=True)
    else:
        smoothing = (
            pw.smoothing
            if pw.smoothing is not None
            else default_smoothing(uncertainty, pw.smoothing_factor)
        )
        try:
            scaling = sinkhorn_margins(uncertainty, smoothing, pw.tol, pw.max_iters)
        except ConvergenceError:
            scaling = MarginScalingMatrix(
                _uniform_plan(k), uncertainty.answer_ids, rescaled=False
            )
            fallback = True
    return soft_margins(scaling, pw.base_margin, pw.rescale), fallback


def _needs_margins(config: ExperimentConfig) -> bool:
    return config.scheme == "radi-p"


def snapshot_teacher(
    teacher: ScoreModel,
    dataset: Dataset,
    config: ExperimentConfig,
    cache_path: str | Path | None = None,
) -> TeacherSnapshot:
    """Freeze per-instance teacher rankings (and soft margins for radi-p).

    With ``cache_path`` the snapshot round-trips through a versioned ``.npz``
    keyed by the teacher checksum; a matching cache is read back instead of
    recomputed.
    """
    checksum = model_checksum(teacher)
    if cache_path is not None:
        cached = _load_snapshot(cache_path, teacher, checksum, config)
        if cached is not None:
            return cached
    scores = forward_batch(teacher, dataset.feature_matrix())
    rankings = [teacher_ranking(row) for row in scores]
    margins = None
    fallbacks = 0
    if _needs_margins(config):
        margins = []
        for i, inst in enumerate(dataset.instances):
            mset, fell_back = _instance_margins(teacher, inst.features, config, i)
            margins.append(mset)
            fallbacks += int(fell_back)
    snapshot = TeacherSnapshot(teacher, checksum, rankings, margins, fallbacks)
    if cache_path is not None:
        _save_snapshot(cache_path, snapshot, config)
    return snapshot


def _pairwise_key(config: ExperimentConfig) -> dict:
    doc = asdict(config.pairwise)
    doc["seed"] = config.seed
    return doc


def _save_snapshot(path, snapshot: TeacherSnapshot, config: ExperimentConfig) -> None:
    meta = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "teacher_checksum": snapshot.teacher_checksum,
        "has_margins": snapshot.margins is not None,
        "sinkhorn_fallbacks": snapshot.sinkhorn_fallbacks,
        "pairwise": _pairwise_key(config) if snapshot.margins is not None else None,
        "base_margins": [m.base_margin for m in snapshot.margins] if snapshot.margins else None,
    }
    arrays = {
        "meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
        "permutations": np.stack([r.permutation for r in snapshot.rankings]),
        "teacher_scores": np.stack([r.teacher_scores for r in snapshot.rankings]),
    }
    if snapshot.margins is not None:
        arrays["margin_matrices"] = np.stack([m.margins for m in snapshot.margins])
        arrays["margin_ids"] = np.stack([m.answer_ids for m in snapshot.margins])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def _load_snapshot(
    path, teacher: ScoreModel, checksum: str, config: ExperimentConfig
) -> TeacherSnapshot | None:
    path = Path(path)
    if not path.exists():
        return None
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format") != SNAPSHOT_FORMAT or meta.get("version") != SNAPSHOT_VERSION:
            return None
        if meta["teacher_checksum"] != checksum:
            return None
        needs = _needs_margins(config)
        if needs and (not meta["has_margins"] or meta["pairwise"] != _pairwise_key(config)):
            return None
        rankings = [
            RankedList(perm, ts)
            for perm, ts in zip(data["permutations"], data["teacher_scores"])
        ]
        margins = None
        if needs:
            margins = [
                SoftMarginSet(mat, ids, base)
                for mat, ids, base in zip(
                    data["margin_matrices"], data["margin_ids"], meta["base_margins"]
                )
            ]
        return TeacherSnapshot(
            teacher, checksum, rankings, margins, meta["sinkhorn_fallbacks"]
        )


def _student_loss_fn(
    config: ExperimentConfig,
    snapshot: TeacherSnapshot,
    train: Dataset,
) -> Callable[[int, np.ndarray], LossValue]:
    """Per-instance loss closure for the configured scheme."""
    revealed = [inst.revealed_positives for inst in train.instances]
    scheme = config.scheme
    alpha = float(config.alpha_rank)

    if scheme == "cls-only":
        return lambda idx, scores: classification_loss(scores, revealed[idx])

    if scheme == "label-smoothing":
        n = config.task.num_answers
        targets = [
            smooth_labels(labels, n, config.baseline.sigma) for labels in revealed
        ]
        return lambda idx, scores: smoothed_cross_entropy(scores, targets[idx])

    if scheme == "pseudo-labeling":
        unions = [
            pseudo_labels(snapshot.rankings[i], revealed[i], config.baseline.pseudo_k).labels
            for i in range(len(train))
        ]
        return lambda idx, scores: classification_loss(scores, unions[idx])

    if scheme == "vanilla-kd":
        temperature = config.baseline.kd_temperature

        def kd_fn(idx: int, scores: np.ndarray) -> LossValue:
            cls = classification_loss(scores, revealed[idx])
            rank = vanilla_kd_loss(
                scores, snapshot.rankings[idx].teacher_scores, temperature
            )
            return combined_loss(cls, rank, alpha)

        return kd_fn

    if scheme == "radi-p":
        margins = snapshot.margins
        if margins is None:
            raise ArgumentError("radi-p needs a snapshot computed with margins")

        def pairwise_fn(idx: int, scores: np.ndarray) -> LossValue:
            cls = classification_loss(scores, revealed[idx])
            rank = pairwise_margin_loss(scores, snapshot.rankings[idx], margins[idx])
            return combined_loss(cls, rank, alpha)

        return pairwise_fn

    # radi-l: fresh sublist each optimization step from a dedicated stream.
    plan = config.listwise.plan()
    weighting = config.listwise.weighting()
    beta = config.listwise.beta
    tag = config.listwise.loss_tag
    listwise_rng = RngState(config.seed, STREAM_LISTWISE)

    def listwise_fn(idx: int, scores: np.ndarray) -> LossValue:
        cls = classification_loss(scores, revealed[idx])
        rank = listwise_rank_loss(
            scores,
            snapshot.rankings[idx].teacher_scores,
            snapshot.rankings[idx],
            plan,
            tag,
            listwise_rng,
            beta=beta,
            weighting=weighting,
        )
        return combined_loss(cls, rank, alpha)

    return listwise_fn


def _init_student(
    config: ExperimentConfig,
    snapshot: TeacherSnapshot,
    data: tuple[Dataset, Dataset, Dataset],
) -> ScoreModel:
    if config.student_init == "from-teacher":
        t = snapshot.teacher
        return ScoreModel(
            [w.copy() for w in t.layer_weights],
            [b.copy() for b in t.layer_biases],
            t.dropout_rate,
            t.hidden_activation,
        )
    if config.student_init == "individual":
        # Same recipe as the teacher, different seed, then distillation on top.
        pretrained, _ = _cls_only_run(config, data, config.seed + 1, config.teacher)
        return pretrained
    return init_model(
        _model_sizes(config), config.model.dropout_rate, RngState(config.seed, STREAM_STUDENT_INIT)
    )


def _hidden_recovery(model: ScoreModel, train: Dataset, k: int) -> float:
    """Mean fraction of hidden train positives ranked inside the top-k."""
    scores = forward_batch(model, train.feature_matrix())
    fractions = []
    for row, inst in zip(scores, train.instances):
        hidden = inst.hidden_positives
        if not hidden:
            continue
        top = set(int(a) for a in np.argsort(-row, kind="stable")[:k])
        fractions.append(len(top & hidden) / len(hidden))
    return float(np.mean(fractions)) if fractions else 0.0


def distill_student(
    snapshot: TeacherSnapshot,
    config: ExperimentConfig,
    data: tuple[Dataset, Dataset, Dataset] | None = None,
) -> tuple[ScoreModel, RunRecord]:
    """Stage two: train the student against the frozen teacher snapshot."""
    start = time.perf_counter()
    if data is None:
        data = generate(config.task)
    train, val, test = data
    student = _init_student(config, snapshot, data)
    loss_fn = _student_loss_fn(config, snapshot, train)
    student, phase = _train(
        student,
        train,
        val,
        config.student,
        loss_fn,
        RngState(config.seed, STREAM_STUDENT_BATCH),
        config.eval_k,
    )
    record = RunRecord(
        config_checksum=config_checksum(config),
        teacher=PhaseRecord(),
        student=phase,
        test_result=evaluate(student, test, config.eval_k),
        hidden_recovery=_hidden_recovery(student, train, config.eval_k),
        sinkhorn_fallbacks=snapshot.sinkhorn_fallbacks,
        wall_clock_seconds=time.perf_counter() - start,
    )
    return student, record


def run_experiment(
    config: ExperimentConfig,
    outdir: str | Path | None = None,
    data: tuple[Dataset, Dataset, Dataset] | None = None,
    snapshot: TeacherSnapshot | None = None,
) -> RunRecord:
    """teacher -> snapshot -> distill -> evaluate, with optional artifacts.

    When ``outdir`` is given, writes ``run.json``, ``metrics.csv`` and the
    resolved ``config.json`` (plus the snapshot cache for radi-p).
    """
    start = time.perf_counter()
    if data is None:
        data = generate(config.task)
    if snapshot is None:
        teacher, teacher_record = train_teacher(config, data)
        cache = Path(outdir, "snapshot.npz") if outdir is not None else None
        snapshot = snapshot_teacher(teacher, data[0], config, cache_path=cache)
        teacher_phase = teacher_record.teacher
    else:
        teacher_phase = PhaseRecord()
    student, student_record = distill_student(snapshot, config, data)
    record = RunRecord(
        config_checksum=config_checksum(config),
        teacher=teacher_phase,
        student=student_record.student,
        test_result=student_record.test_result,
        hidden_recovery=student_record.hidden_recovery,
        sinkhorn_fallbacks=snapshot.sinkhorn_fallbacks,
        wall_clock_seconds=time.perf_counter() - start,
    )
    if outdir is not None:
        write_run_outputs(Path(outdir), config, record)
    return record


def _axis_root(axis: str) -> str:
    return axis.split(".", 1)[0]


def _set_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    doc = config_to_dict(config)
    parts = axis.split(".")
    node = doc
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown sweep axis {axis!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    node[parts[-1]] = value
    return config_from_dict(doc)


def run_sweep(
    config: ExperimentConfig,
    axis: str,
    values: list,
    outdir: str | Path | None = None,
) -> list[SweepCell]:
    """Run one experiment per axis value; failed cells do not abort the sweep.

    The teacher (and its data) is trained once and shared across cells when
    the axis cannot affect it; margin snapshots are still rebuilt per cell
    when the pairwise section or the scheme changes.
    """
    cells: list[SweepCell] = []
    shared: dict[str, Any] = {}
    reuse_teacher = _axis_root(axis) not in ("task", "model", "teacher", "seed")
    for i, value in enumerate(values):
        cell_dir = Path(outdir, f"cell-{i:03d}") if outdir is not None else None
        try:
            cell_config = _set_axis(config, axis, value)
            if reuse_teacher:
                if "data" not in shared:
                    shared["data"] = generate(cell_config.task)
                    shared["teacher"], shared["teacher_record"] = train_teacher(
                        cell_config, shared["data"]
                    )
                snapshot = snapshot_teacher(
                    shared["teacher"], shared["data"][0], cell_config
                )
                record = run_experiment(
                    cell_config, data=shared["data"], snapshot=snapshot
                )
                record.teacher = shared["teacher_record"].teacher
                if cell_dir is not None:
                    write_run_outputs(cell_dir, cell_config, record)
            else:
                record = run_experiment(cell_config, outdir=cell_dir)
            cells.append(SweepCell(axis, value, record))
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            cells.append(SweepCell(axis, value, None, error=f"{type(exc).__name__}: {exc}"))
    if outdir is not None:
        summary = [
            {
                "axis": c.axis,
                "value": c.value,
                "error": c.error,
                "test_result": asdict(c.record.test_result)
                if c.record and c.record.test_result
                else None,
            }
            for c in cells
        ]
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "sweep.json").write_text(json.dumps(summary, indent=2))
    return cells


def record_to_dict(record: RunRecord) -> dict:
    return asdict(record)


def write_run_outputs(outdir: Path, config: ExperimentConfig, record: RunRecord) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(json.dumps(config_to_dict(config), indent=2))
    (outdir / "run.json").write_text(json.dumps(record_to_dict(record), indent=2))
    with open(outdir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "acc1", "hit5", "ndcg5"])
        for phase, split in ((record.teacher, "teacher-val"), (record.student, "student-val")):
            for epoch, res in enumerate(phase.val_results, start=1):
                writer.writerow(
                    [epoch, split, repr(res.acc_at_1), repr(res.hit_at_k), repr(res.ndcg_at_k)]
                )
        if record.test_result is not None:
            res = record.test_result
            writer.writerow(
                [
                    len(record.student.val_results),
                    "test",
                    repr(res.acc_at_1),
                    repr(res.hit_at_k),
                    repr(res.ndcg_at_k),
                ]
            )
