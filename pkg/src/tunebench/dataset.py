"""Audio-feature schema, validation, canonical CSV I/O, and per-class summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Attribute order is fixed everywhere: CSV columns, feature matrices and
# summary tables all use this order.
FEATURE_NAMES = (
    "danceability",
    "energy",
    "key",
    "loudness",
    "mode",
    "speechiness",
    "acousticness",
    "instrumentalness",
    "liveness",
    "valence",
    "tempo",
    "time_signature",
)

UNIT_INTERVAL_FEATURES = (
    "danceability",
    "energy",
    "speechiness",
    "acousticness",
    "instrumentalness",
    "liveness",
    "valence",
)

INTEGER_FEATURES = ("key", "mode", "time_signature")

CSV_HEADER = "id," + ",".join(FEATURE_NAMES) + ",liked"

# Soft expectations only; breaches warn but never reject.
LOUDNESS_TYPICAL_RANGE = (-60.0, 0.0)
TEMPO_TYPICAL_MAX = 250.0


class DatasetSizeWarning(UserWarning):
    """Dataset size falls outside the usual 100-150 track benchmarking range."""


@dataclass(frozen=True)
class AudioFeatures:
    """The 12 per-track numeric descriptors pulled from the audio-features API."""

    danceability: float
    energy: float
    key: int
    loudness: float
    mode: int
    speechiness: float
    acousticness: float
    instrumentalness: float
    liveness: float
    valence: float
    tempo: float
    time_signature: int

    def as_vector(self) -> np.ndarray:
        return np.array([float(getattr(self, name)) for name in FEATURE_NAMES])

    @classmethod
    def from_vector(cls, vec) -> "AudioFeatures":
        values = {}
        for name, value in zip(FEATURE_NAMES, vec):
            values[name] = int(value) if name in INTEGER_FEATURES else float(value)
        return cls(**values)


@dataclass(frozen=True)
class Track:
    """An unlabeled track: identifier plus its audio features."""

    id: str
    features: AudioFeatures


@dataclass(frozen=True)
class TrackInstance:
    """A labeled track; liked is 1 for liked, 0 for disliked."""

    id: str
    features: AudioFeatures
    liked: int

    def __post_init__(self):
        if not self.id:
            raise ValueError("track id must be non-empty")
        if self.liked not in (0, 1):
            raise ValueError(f"liked must be 0 or 1, got {self.liked!r}")


@dataclass(frozen=True)
class Dataset:
    """An ordered, labeled collection of tracks for one user."""

    name: str
    instances: tuple[TrackInstance, ...]

    def __len__(self) -> int:
        return len(self.instances)

    def class_counts(self) -> tuple[int, int]:
        liked = sum(inst.liked for inst in self.instances)
        return len(self.instances) - liked, liked

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix (n x 12, FEATURE_NAMES column order) and 0/1 label vector."""
        if not self.instances:
            return np.empty((0, len(FEATURE_NAMES))), np.empty(0, dtype=np.int64)
        X = np.stack([inst.features.as_vector() for inst in self.instances])
        y = np.array([inst.liked for inst in self.instances], dtype=np.int64)
        return X, y


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def status(self) -> str:
        if self.violations:
            return "violations"
        if self.warnings:
            return "warnings"
        return "ok"

    @property
    def ok(self) -> bool:
        return not self.violations and not self.warnings


@dataclass(frozen=True)
class FeatureSummary:
    """Per-class attribute means, counts, and which class has the higher mean."""

    liked_means: dict[str, float]
    disliked_means: dict[str, float]
    liked_count: int
    disliked_count: int

    def higher_class(self, name: str) -> str:
        liked, disliked = self.liked_means[name], self.disliked_means[name]
        if liked > disliked:
            return "liked"
        if disliked > liked:
            return "disliked"
        return "tie"


def validate_features(f: AudioFeatures) -> ValidationReport:
    """Check one feature record, reporting hard violations and soft warnings.

    Hard violations: NaN/infinite values, unit-interval breaches, illegal
    mode/key/time_signature, negative tempo. Loudness outside its typical
    -60..0 dB window and implausible tempo only warn.
    """
    violations: list[str] = []
    warnings_: list[str] = []

    for name in FEATURE_NAMES:
        value = float(getattr(f, name))
        if not math.isfinite(value):
            violations.append(f"{name} must be finite, got {value!r}")

    def finite(name):
        return math.isfinite(float(getattr(f, name)))

    for name in UNIT_INTERVAL_FEATURES:
        value = float(getattr(f, name))
        if finite(name) and not 0.0 <= value <= 1.0:
            violations.append(f"{name} must lie in [0, 1], got {value}")

    if f.mode not in (0, 1):
        violations.append(f"mode must be 0 or 1, got {f.mode}")
    if not (isinstance(f.key, int) and -1 <= f.key <= 11):
        violations.append(f"key must be an integer in -1..11, got {f.key}")
    if not (isinstance(f.time_signature, int) and 0 <= f.time_signature <= 7):
        violations.append(f"time_signature must be an integer in 0..7, got {f.time_signature}")

    if finite("tempo"):
        if f.tempo < 0:
            violations.append(f"tempo must be non-negative, got {f.tempo}")
        elif f.tempo == 0 or f.tempo > TEMPO_TYPICAL_MAX:
            warnings_.append(f"tempo {f.tempo} outside typical range (0, {TEMPO_TYPICAL_MAX}]")
    if finite("loudness"):
        low, high = LOUDNESS_TYPICAL_RANGE
        if not low <= f.loudness <= high:
            warnings_.append(f"loudness {f.loudness} outside typical range {low}..{high} dB")

    return ValidationReport(tuple(violations), tuple(warnings_))


def _parse_cell(raw: str, column: str, row: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"row {row}, column {column!r}: not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"row {row}, column {column!r}: non-finite value {raw!r}")
    return value


def parse_dataset(text: str, name: str) -> Dataset:
    """Parse canonical CSV content into a Dataset.

    The header must match CSV_HEADER exactly. Data rows are numbered from 1
    in error messages. Every row must pass validate_features without a hard
    violation; soft warnings are allowed through.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValueError("empty input: missing header line")
    if lines[0] != CSV_HEADER:
        raise ValueError(f"header mismatch: expected {CSV_HEADER!r}, got {lines[0]!r}")

    instances = []
    for row, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != len(FEATURE_NAMES) + 2:
            raise ValueError(
                f"row {row}: expected {len(FEATURE_NAMES) + 2} columns, got {len(cells)}"
            )
        track_id = cells[0]
        if not track_id:
            raise ValueError(f"row {row}, column 'id': empty track id")

        values = {}
        for column, raw in zip(FEATURE_NAMES, cells[1:-1]):
            value = _parse_cell(raw, column, row)
            if column in INTEGER_FEATURES:
                if not value.is_integer():
                    raise ValueError(f"row {row}, column {column!r}: expected integer, got {raw}")
                value = int(value)
            values[column] = value

        liked = _parse_cell(cells[-1], "liked", row)
        if liked not in (0.0, 1.0):
            raise ValueError(f"row {row}, column 'liked': must be 0 or 1, got {cells[-1]}")

        features = AudioFeatures(**values)
        report = validate_features(features)
        if report.violations:
            raise ValueError(f"row {row}: {report.violations[0]}")
        instances.append(TrackInstance(track_id, features, int(liked)))

    return Dataset(name, tuple(instances))


def _format_value(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_dataset(d: Dataset) -> str:
    """Render a Dataset as canonical CSV bytes-for-bytes deterministically.

    Floats use repr (shortest round-trip decimal); integer attributes are
    written bare. parse_dataset(write_dataset(d)) == d.
    """
    lines = [CSV_HEADER]
    for inst in d.instances:
        if "," in inst.id:
            raise ValueError(f"track id may not contain a comma: {inst.id!r}")
        cells = [inst.id]
        cells.extend(_format_value(getattr(inst.features, name)) for name in FEATURE_NAMES)
        cells.append(str(inst.liked))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def merge_labeled(liked: list[Track], disliked: list[Track], name: str) -> Dataset:
    """Combine a liked and a disliked track collection into one labeled dataset.

    Liked tracks come first with label 1, then disliked tracks with label 0,
    both in their input order.
    """
    if not liked:
        raise ValueError("liked track collection is empty")
    if not disliked:
        raise ValueError("disliked track collection is empty")
    instances = [TrackInstance(t.id, t.features, 1) for t in liked]
    instances.extend(TrackInstance(t.id, t.features, 0) for t in disliked)
    return Dataset(name, tuple(instances))


def summarize(d: Dataset) -> FeatureSummary:
    """Arithmetic per-class mean of every attribute, plus per-class counts."""
    disliked_n, liked_n = d.class_counts()
    if liked_n == 0 or disliked_n == 0:
        raise ValueError(f"dataset {d.name!r}: both classes required to summarize")
    X, y = d.to_arrays()
    liked_means = X[y == 1].mean(axis=0)
    disliked_means = X[y == 0].mean(axis=0)
    return FeatureSummary(
        liked_means=dict(zip(FEATURE_NAMES, liked_means.tolist())),
        disliked_means=dict(zip(FEATURE_NAMES, disliked_means.tolist())),
        liked_count=liked_n,
        disliked_count=disliked_n,
    )


def benchmark_size_note(d: Dataset) -> str | None:
    """Message when the dataset size is outside the usual benchmarking range."""
    if not 100 <= len(d) <= 150:
        return (
            f"dataset {d.name!r} has {len(d)} instances; "
            "benchmarks are calibrated for 100-150"
        )
    return None
