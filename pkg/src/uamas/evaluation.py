"""k-fold training/evaluation and certainty-conditioned accuracy metrics."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bnn import ModelBundle, make_task_net, predict_batch
from .dataset import CHANNEL_ORDER, Cycle, Task, class_index, task_specs_from_cycles
from .errors import EmptyRecords, InvalidK, LengthMismatch
from .features import extract_from_matrix, extract_many, fit_normalizer, normalize
from .training import REFERENCE_THRESHOLD, TrainConfig, train

DEFAULT_K = 5
DEFAULT_MC_SAMPLES = 50


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]  # cycle index -> fold id
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) != fold)


def make_folds(
    n: int, k: int, seed: int, stratify_labels: Sequence[int] | None = None
) -> FoldPlan:
    """Shuffled disjoint partition into k folds with sizes differing by <= 1.

    With ``stratify_labels`` the split additionally keeps per-class counts
    balanced across folds (within one element per class) — a sensitivity
    knob, not the default protocol.
    """
    if k < 2 or k > n:
        raise InvalidK(f"k={k} invalid for n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    assignments = np.empty(n, dtype=np.int64)
    if stratify_labels is None:
        order = rng.permutation(n)
        for fold, chunk in enumerate(np.array_split(order, k)):
            assignments[chunk] = fold
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n,):
            raise InvalidK(f"stratify_labels must have length {n}")
        # Round-robin through per-class shuffled indices: class proportions
        # and fold sizes both stay within one element.
        order = np.concatenate(
            [rng.permutation(np.flatnonzero(labels == value))
             for value in np.unique(labels)]
        )
        for i, idx in enumerate(order):
            assignments[idx] = i % k
    return FoldPlan(k=k, assignments=tuple(int(a) for a in assignments), seed=seed)


def f1_score(y_true: Sequence[int], y_pred: Sequence[int], num_classes: int) -> float:
    """Macro F1; classes absent from both truth and prediction are excluded."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise LengthMismatch(f"length mismatch: {t.shape} vs {p.shape}")
    scores = []
    for c in range(num_classes):
        tp = int(np.sum((p == c) & (t == c)))
        fp = int(np.sum((p == c) & (t != c)))
        fn = int(np.sum((p != c) & (t == c)))
        if tp + fp + fn == 0:
            continue  # class never occurs on either side
        scores.append(2 * tp / (2 * tp + fp + fn))
    return float(np.mean(scores)) if scores else 0.0


@dataclass(frozen=True)
class EvalRecord:
    task: Task
    fold: int
    cycle_index: int
    true_class: int
    modal_class: int
    certainty: float
    certain: bool  # certainty >= threshold (inclusive)

    @property
    def correct(self) -> bool:
        return self.true_class == self.modal_class


@dataclass(frozen=True)
class ConditionalAccuracy:
    """P(correct | certain) and P(correct | uncertain) as fractions in [0, 1].

    A branch with zero support is reported as None, never NaN.
    """

    p_certain: float | None
    p_uncertain: float | None
    n_certain: int
    n_uncertain: int


def conditional_accuracy(
    records: Sequence[EvalRecord], threshold: float = REFERENCE_THRESHOLD
) -> ConditionalAccuracy:
    if not records:
        raise EmptyRecords("no evaluation records")
    certain = [r for r in records if r.certainty >= threshold]
    uncertain = [r for r in records if r.certainty < threshold]
    p_c = sum(r.correct for r in certain) / len(certain) if certain else None
    p_u = sum(r.correct for r in uncertain) / len(uncertain) if uncertain else None
    return ConditionalAccuracy(
        p_certain=p_c,
        p_uncertain=p_u,
        n_certain=len(certain),
        n_uncertain=len(uncertain),
    )


@dataclass
class TaskReport:
    """Across-fold aggregate for one task; probabilities in percent."""

    task: Task
    f1_mean: float
    f1_std: float
    pac_mean: float | None  # P(accurate | certain), percent
    pac_std: float | None
    pau_mean: float | None  # P(accurate | uncertain), percent
    pau_std: float | None
    n_certain: int
    n_uncertain: int
    threshold: float
    mc_samples: int
    seed: int
    k: int
    epochs: int
    learning_rate: float
    reference_protocol: bool
    per_fold_f1: list[float] = field(default_factory=list)

    def ordering_holds(self) -> bool | None:
        """P(acc|certain) > P(acc|uncertain); None when a branch is empty."""
        if self.pac_mean is None or self.pau_mean is None:
            return None
        return self.pac_mean > self.pau_mean

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "f1_mean": self.f1_mean,
            "f1_std": self.f1_std,
            "pac_mean": self.pac_mean,
            "pac_std": self.pac_std,
            "pau_mean": self.pau_mean,
            "pau_std": self.pau_std,
            "n_certain": self.n_certain,
            "n_uncertain": self.n_uncertain,
            "threshold": self.threshold,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "k": self.k,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "reference_protocol": self.reference_protocol,
            "per_fold_f1": self.per_fold_f1,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskReport":
        d = dict(d)
        d["task"] = Task(d["task"])
        return cls(**d)


ProgressCallback = Callable[[dict], None]


def run_experiment(
    cycles: Sequence[Cycle],
    task: Task,
    config: TrainConfig,
    fold_plan: FoldPlan | None = None,
    T: int = DEFAULT_MC_SAMPLES,
    threshold: float = REFERENCE_THRESHOLD,
    features: np.ndarray | None = None,
    progress: ProgressCallback | None = None,
) -> tuple[TaskReport, list[EvalRecord]]:
    """Full protocol for one task: per fold, fit normalizer on the training
    split, train a net, MC-predict the held-out split, then aggregate F1 and
    conditional accuracies across folds. Deterministic given the seeds.
    """
    spec = task_specs_from_cycles(cycles)[task]
    if fold_plan is None:
        fold_plan = make_folds(len(cycles), DEFAULT_K, config.seed)
    if features is None:
        features = extract_many(cycles)
    labels = np.array([class_index(spec, c.labels[task]) for c in cycles])

    records: list[EvalRecord] = []
    fold_f1: list[float] = []
    fold_pac: list[float] = []
    fold_pau: list[float] = []
    for fold in range(fold_plan.k):
        train_idx = fold_plan.train_indices(fold)
        test_idx = fold_plan.fold_indices(fold)
        normalizer = fit_normalizer(features[train_idx], fitted_on=f"fold{fold}")
        X_train = normalize(normalizer, features[train_idx])
        X_test = normalize(normalizer, features[test_idx])

        init_rng = np.random.default_rng(np.random.SeedSequence((config.seed, fold, 0)))
        net = make_task_net(spec, init_rng, num_features=features.shape[1])
        fold_config = config.with_seed(_fold_seed(config.seed, fold, 1))
        result = train(net, X_train, labels[train_idx], fold_config, progress=progress)

        predict_rng = np.random.default_rng(np.random.SeedSequence((config.seed, fold, 2)))
        preds = predict_batch(result.net, X_test, T=T, rng=predict_rng)
        fold_records = [
            EvalRecord(
                task=task,
                fold=fold,
                cycle_index=int(ci),
                true_class=int(labels[ci]),
                modal_class=p.modal_class,
                certainty=p.certainty,
                certain=p.certainty >= threshold,
            )
            for ci, p in zip(test_idx, preds)
        ]
        records.extend(fold_records)
        fold_f1.append(
            f1_score(labels[test_idx], [p.modal_class for p in preds], spec.num_classes)
        )
        acc = conditional_accuracy(fold_records, threshold)
        if acc.p_certain is not None:
            fold_pac.append(acc.p_certain * 100.0)
        if acc.p_uncertain is not None:
            fold_pau.append(acc.p_uncertain * 100.0)
        if progress is not None:
            progress({"fold": fold, "folds": fold_plan.k, "f1": fold_f1[-1]})

    overall = conditional_accuracy(records, threshold)
    report = TaskReport(
        task=task,
        f1_mean=float(np.mean(fold_f1)),
        f1_std=float(np.std(fold_f1)),
        pac_mean=_mean_or_none(fold_pac),
        pac_std=_std_or_none(fold_pac),
        pau_mean=_mean_or_none(fold_pau),
        pau_std=_std_or_none(fold_pau),
        n_certain=overall.n_certain,
        n_uncertain=overall.n_uncertain,
        threshold=threshold,
        mc_samples=T,
        seed=config.seed,
        k=fold_plan.k,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        reference_protocol=config.is_reference_protocol()
        and fold_plan.k == DEFAULT_K
        and T == DEFAULT_MC_SAMPLES
        and threshold == REFERENCE_THRESHOLD,
        per_fold_f1=fold_f1,
    )
    return report, records


def _fold_seed(seed: int, fold: int, stream: int) -> int:
    # Stable scalar seed derived from (seed, fold, stream) for TrainConfig.
    return int(np.random.SeedSequence((seed, fold, stream)).generate_state(1)[0])


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _std_or_none(values: list[float]) -> float | None:
    return float(np.std(values)) if values else None


def train_full_model(
    cycles: Sequence[Cycle],
    task: Task,
    config: TrainConfig,
    features: np.ndarray | None = None,
    progress: ProgressCallback | None = None,
) -> ModelBundle:
    """Train one deployable model on all cycles (no held-out split)."""
    spec = task_specs_from_cycles(cycles)[task]
    if features is None:
        features = extract_many(cycles)
    labels = np.array([class_index(spec, c.labels[task]) for c in cycles])
    normalizer = fit_normalizer(features, fitted_on="all")
    X = normalize(normalizer, features)
    init_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0)))
    net = make_task_net(spec, init_rng, num_features=features.shape[1])
    result = train(net, X, labels, config, progress=progress)
    return ModelBundle(net=result.net, normalizer=normalizer, train_seed=config.seed)


def paired_zeroing_experiment(
    bundle: ModelBundle,
    cycles: Sequence[Cycle],
    channel: str,
    T: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cycle certainties with and without one channel zeroed.

    Both arms share the same MC weight draws (same rng seed) so the
    comparison is paired. Returns (baseline, zeroed) certainty arrays.
    """
    if channel not in CHANNEL_ORDER:
        raise LengthMismatch(f"unknown channel {channel!r}")
    idx = CHANNEL_ORDER.index(channel)
    base_rows, zero_rows = [], []
    for cycle in cycles:
        matrix = cycle.channel_matrix()
        base_rows.append(extract_from_matrix(matrix))
        zeroed = matrix.copy()
        zeroed[idx] = 0.0
        zero_rows.append(extract_from_matrix(zeroed))
    X_base = normalize(bundle.normalizer, np.stack(base_rows))
    X_zero = normalize(bundle.normalizer, np.stack(zero_rows))
    rng_seed = np.random.SeedSequence((seed, idx))
    preds_base = predict_batch(bundle.net, X_base, T, np.random.default_rng(rng_seed))
    preds_zero = predict_batch(bundle.net, X_zero, T, np.random.default_rng(rng_seed))
    return (
        np.array([p.certainty for p in preds_base]),
        np.array([p.certainty for p in preds_zero]),
    )


# -- report files ---------------------------------------------------------------

REPORT_COLUMNS = (
    "task",
    "f1_mean",
    "f1_std",
    "pac_mean",
    "pac_std",
    "pau_mean",
    "pau_std",
    "n_certain",
    "n_uncertain",
    "threshold",
    "mc_samples",
    "seed",
    "k",
    "epochs",
    "learning_rate",
    "reference_protocol",
)


def reports_to_json(reports: Sequence[TaskReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def reports_from_json(text: str) -> list[TaskReport]:
    return [TaskReport.from_dict(d) for d in json.loads(text)]


def reports_to_csv(reports: Sequence[TaskReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        row = r.to_dict()
        writer.writerow(["" if row[c] is None else row[c] for c in REPORT_COLUMNS])
    return buf.getvalue()


def write_reports(reports: Sequence[TaskReport], out_dir: Path | str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "task_reports.json"
    csv_path = out / "task_reports.csv"
    json_path.write_text(reports_to_json(reports))
    csv_path.write_text(reports_to_csv(reports))
    return json_path, csv_path
