"""Stratified cross-validation, the user-by-algorithm grid, and reports."""

from __future__ import annotations

import json
import warnings as _warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Union

import numpy as np

from .dataset import Dataset, DatasetSizeWarning, benchmark_size_note
from .models import ClassifierSpec, fit_arrays, spec_from_dict, spec_to_dict
from .seeding import stable_seed

REPORT_SCHEMA = "tunebench.report/1"


class CrossValidationError(RuntimeError):
    """A fit or predict failure, annotated with the fold it happened in."""

    def __init__(self, fold: int, message: str):
        super().__init__(f"fold {fold}: {message}")
        self.fold = fold


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.array(self.assignment) == fold)


def stratified_folds(labels, k: int, seed: int) -> FoldPlan:
    """Assign instances to k folds, balancing every class to within one.

    Within each class (ascending class order) the indices are shuffled by
    one seeded generator and dealt round-robin to folds 0..k-1.
    """
    labels = np.asarray(labels).ravel()
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    assignment = np.full(len(labels), -1, dtype=np.int64)
    rng = np.random.default_rng(seed)
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ValueError(
                f"class {cls} has {len(members)} instances, fewer than k={k}"
            )
        shuffled = rng.permutation(members)
        for pos, inst in enumerate(shuffled):
            assignment[inst] = pos % k
    return FoldPlan(k=k, assignment=tuple(int(a) for a in assignment), seed=seed)


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions).ravel()
    labels = np.asarray(labels).ravel()
    if predictions.shape != labels.shape:
        raise ValueError(
            f"length mismatch: {predictions.shape[0]} predictions vs {labels.shape[0]} labels"
        )
    if predictions.size == 0:
        raise ValueError("cannot compute accuracy of an empty prediction set")
    return float(np.mean(predictions == labels))


@dataclass(frozen=True)
class CvResult:
    dataset: str
    algorithm: str
    spec: ClassifierSpec
    seed: int
    fold_accuracies: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))


@dataclass(frozen=True)
class CellFailure:
    error: str


Cell = Union[CvResult, CellFailure]


def _standardizer(X_train):
    mu = X_train.mean(axis=0)
    sigma = X_train.std(axis=0)
    sigma = np.where(sigma > 0.0, sigma, 1.0)
    return lambda X: (X - mu) / sigma


def cross_validate(
    spec: ClassifierSpec,
    dataset: Dataset,
    k: int = 10,
    seed: int = 42,
    standardize: bool = False,
    plan: Optional[FoldPlan] = None,
) -> CvResult:
    """Mean test accuracy over k stratified folds.

    Each fold's model gets its own seed derived from (seed, dataset name,
    algorithm, fold), so results do not depend on evaluation order or
    scheduling.
    """
    X, y = dataset.to_arrays()
    if plan is None:
        plan = stratified_folds(y, k, seed)
    elif len(plan.assignment) != len(y):
        raise ValueError("fold plan does not match dataset size")

    assignment = np.array(plan.assignment)
    fold_accuracies = []
    for fold in range(plan.k):
        test = assignment == fold
        X_train, y_train = X[~test], y[~test]
        X_test, y_test = X[test], y[test]
        if standardize:
            transform = _standardizer(X_train)
            X_train, X_test = transform(X_train), transform(X_test)
        fold_seed = stable_seed(seed, dataset.name, spec.algorithm, fold)
        try:
            model = fit_arrays(spec, X_train, y_train, seed=fold_seed)
            predictions = [model.predict_one(x).label for x in X_test]
        except ValueError as exc:
            raise CrossValidationError(fold, str(exc)) from exc
        fold_accuracies.append(accuracy(predictions, y_test))

    return CvResult(
        dataset=dataset.name,
        algorithm=spec.algorithm,
        spec=spec,
        seed=seed,
        fold_accuracies=tuple(fold_accuracies),
    )


@dataclass(frozen=True)
class BenchmarkGrid:
    """CvResults (or per-cell failures) indexed by dataset and algorithm."""

    dataset_names: tuple[str, ...]
    algorithms: tuple[str, ...]
    cells: dict[tuple[str, str], Cell]
    k: int
    seed: int
    standardize: bool = False

    def _cell_means(self, keys) -> Optional[float]:
        values = [
            self.cells[key].mean for key in keys if isinstance(self.cells[key], CvResult)
        ]
        return float(np.mean(values)) if values else None

    def row_mean(self, dataset: str) -> Optional[float]:
        return self._cell_means((dataset, a) for a in self.algorithms)

    def column_mean(self, algorithm: str) -> Optional[float]:
        return self._cell_means((d, algorithm) for d in self.dataset_names)

    def overall_mean(self) -> Optional[float]:
        return self._cell_means(
            (d, a) for d in self.dataset_names for a in self.algorithms
        )

    def all_failed(self) -> bool:
        return all(isinstance(cell, CellFailure) for cell in self.cells.values())


def run_benchmark(
    specs,
    datasets,
    k: int = 10,
    seed: int = 42,
    standardize: bool = False,
) -> BenchmarkGrid:
    """One CvResult per (dataset, spec); failures stay in their cell."""
    specs = list(specs)
    datasets = list(datasets)
    if not specs or not datasets:
        raise ValueError("at least one spec and one dataset required")
    algorithms = tuple(s.algorithm for s in specs)
    if len(set(algorithms)) != len(algorithms):
        raise ValueError("duplicate algorithm in benchmark specs")
    names = tuple(d.name for d in datasets)
    if any(not n for n in names):
        raise ValueError("dataset names must be non-empty")
    if len(set(names)) != len(names):
        raise ValueError("duplicate dataset name in benchmark")

    cells: dict[tuple[str, str], Cell] = {}
    for ds in datasets:
        note = benchmark_size_note(ds)
        if note:
            _warnings.warn(note, DatasetSizeWarning)
        for spec in specs:
            try:
                cells[(ds.name, spec.algorithm)] = cross_validate(
                    spec, ds, k=k, seed=seed, standardize=standardize
                )
            except (ValueError, CrossValidationError) as exc:
                cells[(ds.name, spec.algorithm)] = CellFailure(str(exc))
    return BenchmarkGrid(
        dataset_names=names,
        algorithms=algorithms,
        cells=cells,
        k=k,
        seed=seed,
        standardize=standardize,
    )


def format_percent(fraction: Optional[float]) -> str:
    """Whole-percent display with decimal half-up rounding: 0.835 -> '84%'."""
    if fraction is None:
        return "ERR"
    percent = (Decimal(str(fraction)) * 100).quantize(Decimal("1"), rounding=ROUND_HALF_UP)
    return f"{percent}%"


def _cell_display(cell: Cell) -> str:
    if isinstance(cell, CellFailure):
        return "ERR"
    return format_percent(cell.mean)


def _render_markdown(grid: BenchmarkGrid) -> str:
    header = ["algorithm", *grid.dataset_names, "mean"]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join([" --- "] * len(header)) + "|"]
    for algo in grid.algorithms:
        row = [algo]
        row.extend(_cell_display(grid.cells[(ds, algo)]) for ds in grid.dataset_names)
        row.append(format_percent(grid.column_mean(algo)))
        lines.append("| " + " | ".join(row) + " |")
    footer = ["mean"]
    footer.extend(format_percent(grid.row_mean(ds)) for ds in grid.dataset_names)
    footer.append(format_percent(grid.overall_mean()))
    lines.append("| " + " | ".join(footer) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(grid: BenchmarkGrid) -> str:
    lines = [",".join(["algorithm", *grid.dataset_names, "mean"])]
    for algo in grid.algorithms:
        row = [algo]
        row.extend(_cell_display(grid.cells[(ds, algo)]) for ds in grid.dataset_names)
        row.append(format_percent(grid.column_mean(algo)))
        lines.append(",".join(row))
    footer = ["mean"]
    footer.extend(format_percent(grid.row_mean(ds)) for ds in grid.dataset_names)
    footer.append(format_percent(grid.overall_mean()))
    lines.append(",".join(footer))
    return "\n".join(lines) + "\n"


def _render_json(grid: BenchmarkGrid) -> str:
    cells = {}
    for ds in grid.dataset_names:
        cells[ds] = {}
        for algo in grid.algorithms:
            cell = grid.cells[(ds, algo)]
            if isinstance(cell, CellFailure):
                cells[ds][algo] = {"error": cell.error}
            else:
                cells[ds][algo] = {
                    "spec": spec_to_dict(cell.spec),
                    "fold_accuracies": list(cell.fold_accuracies),
                    "mean": cell.mean,
                }
    doc = {
        "schema": REPORT_SCHEMA,
        "k": grid.k,
        "seed": grid.seed,
        "standardize": grid.standardize,
        "datasets": list(grid.dataset_names),
        "algorithms": list(grid.algorithms),
        "cells": cells,
        "row_means": {ds: grid.row_mean(ds) for ds in grid.dataset_names},
        "column_means": {a: grid.column_mean(a) for a in grid.algorithms},
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render_report(grid: BenchmarkGrid, format: str = "markdown") -> str:
    """Deterministic report text; markdown and csv show whole percents,
    json keeps the raw fractions and per-fold vectors."""
    if format == "markdown":
        return _render_markdown(grid)
    if format == "csv":
        return _render_csv(grid)
    if format == "json":
        return _render_json(grid)
    raise ValueError(f"unknown report format {format!r}")


def grid_from_json(text: str) -> BenchmarkGrid:
    doc = json.loads(text)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    cells: dict[tuple[str, str], Cell] = {}
    for ds in doc["datasets"]:
        for algo in doc["algorithms"]:
            raw = doc["cells"][ds][algo]
            if "error" in raw:
                cells[(ds, algo)] = CellFailure(raw["error"])
            else:
                cells[(ds, algo)] = CvResult(
                    dataset=ds,
                    algorithm=algo,
                    spec=spec_from_dict(raw["spec"]),
                    seed=int(doc["seed"]),
                    fold_accuracies=tuple(raw["fold_accuracies"]),
                )
    return BenchmarkGrid(
        dataset_names=tuple(doc["datasets"]),
        algorithms=tuple(doc["algorithms"]),
        cells=cells,
        k=int(doc["k"]),
        seed=int(doc["seed"]),
        standardize=bool(doc.get("standardize", False)),
    )
