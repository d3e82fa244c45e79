"""Datasets, seeded randomness, synthetic generation, CSV ingestion, splitting."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataError, MissingColumnError, SchemaError, ValidationError

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic pseudo-random stream keyed by an integer seed.

    Two streams built from the same seed (and derivation path) produce
    identical sample sequences within one build.  ``derive`` creates an
    independent child stream from extra integer keys, so consumers such
    as per-tree training do not depend on draw order elsewhere.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = tuple(int(k) for k in _path)
        entropy = [self.seed & _MASK64] + [k & _MASK64 for k in self._path]
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def derive(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self._path + tuple(int(k) for k in keys))

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n, size=None, replace=True):
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self._path})"


@dataclass(frozen=True)
class Dataset:
    """Immutable sample container: feature matrix, target vector, column labels."""

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str = "target"

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        target = np.ascontiguousarray(np.asarray(self.target, dtype=np.float64))
        if features.ndim != 2:
            raise ValidationError(f"features must be a 2-D matrix, got ndim={features.ndim}")
        if target.ndim != 1:
            raise ValidationError(f"target must be a 1-D vector, got ndim={target.ndim}")
        if features.shape[0] != target.shape[0]:
            raise ValidationError(
                f"row count mismatch: {features.shape[0]} feature rows vs {target.shape[0]} targets"
            )
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != features.shape[1]:
            raise ValidationError(
                f"feature_names has {len(names)} entries for {features.shape[1]} feature columns"
            )
        if features.size and not np.isfinite(features).all():
            raise ValidationError("features contain NaN or infinite values")
        if target.size and not np.isfinite(target).all():
            raise ValidationError("target contains NaN or infinite values")
        features.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """New Dataset containing the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.target[idx], self.feature_names, self.target_name)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset: linear target plus hidden noise addends."""

    coefficients: tuple[float, ...]
    noise_terms: int = 0
    n_points: int = 1
    feature_mu: float = 0.0
    feature_sigma: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs:
            raise ValidationError("coefficients: must be non-empty")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValidationError("coefficients: must all be finite")
        if int(self.noise_terms) < 0:
            raise ValidationError(f"noise_terms: must be >= 0, got {self.noise_terms}")
        if int(self.n_points) < 1:
            raise ValidationError(f"n_points: must be >= 1, got {self.n_points}")
        if not (self.feature_sigma > 0):
            raise ValidationError(f"feature_sigma: must be > 0, got {self.feature_sigma}")
        object.__setattr__(self, "noise_terms", int(self.noise_terms))
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "feature_mu", float(self.feature_mu))
        object.__setattr__(self, "feature_sigma", float(self.feature_sigma))


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions plus the seed of the assignment permutation."""

    train_fraction: float
    validation_fraction: float
    test_fraction: float
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_fraction, self.validation_fraction, self.test_fraction)
        for name, f in zip(("train_fraction", "validation_fraction", "test_fraction"), fracs):
            if not (0.0 <= f <= 1.0):
                raise ValidationError(f"{name}: must lie in [0, 1], got {f}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValidationError(f"fractions must sum to 1, got {sum(fracs)!r}")
        if not self.train_fraction > 0:
            raise ValidationError("train_fraction: must be > 0")
        if not self.test_fraction > 0:
            raise ValidationError("test_fraction: must be > 0")


def spreadsheet_names(n: int) -> tuple[str, ...]:
    """A, B, ..., Z, AA, AB, ... — default synthetic feature column labels."""
    names = []
    for i in range(n):
        label = ""
        k = i
        while True:
            label = chr(ord("A") + k % 26) + label
            k = k // 26 - 1
            if k < 0:
                break
        names.append(label)
    return tuple(names)


def generate_synthetic(spec: SyntheticSpec, seed: int) -> Dataset:
    """Draw a synthetic dataset: standard-normal features, linear target, hidden noise.

    target[i] = sum_j coefficients[j] * features[i, j] + sum of ``noise_terms``
    independent standard-normal addends.  Deterministic in ``seed``.
    """
    rng = RngStream(seed)
    n, p = spec.n_points, len(spec.coefficients)
    features = rng.normal(spec.feature_mu, spec.feature_sigma, (n, p))
    target = features @ np.asarray(spec.coefficients)
    if spec.noise_terms:
        target = target + rng.normal(0.0, 1.0, (n, spec.noise_terms)).sum(axis=1)
    return Dataset(features, target, spreadsheet_names(p))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partition row indices 0..n-1 by a seeded uniform permutation.

    Validation and test sizes are floor(fraction * n); the remainder row(s)
    go to the training partition.
    """
    if n < 1:
        raise EmptyDataError("cannot split an empty dataset")
    n_val = int(math.floor(spec.validation_fraction * n + 1e-9))
    n_test = int(math.floor(spec.test_fraction * n + 1e-9))
    n_train = n - n_val - n_test
    for name, frac, size in (
        ("train", spec.train_fraction, n_train),
        ("validation", spec.validation_fraction, n_val),
        ("test", spec.test_fraction, n_test),
    ):
        if frac > 0 and size == 0:
            raise ValidationError(
                f"{name} partition would receive zero rows (n={n}, fraction={frac})"
            )
    perm = RngStream(spec.seed).permutation(n)
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def split_dataset(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Split rows into disjoint train/validation/test Datasets.

    The validation Dataset has zero rows when validation_fraction is 0.
    """
    train_idx, val_idx, test_idx = split_indices(data.n_rows, spec)
    return data.subset(train_idx), data.subset(val_idx), data.subset(test_idx)


def _parse_numeric(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, target_column: str, categorical_columns=()) -> Dataset:
    """Load a headered CSV into a Dataset.

    Numeric columns parse as floats; each categorical column expands into
    one 0/1 indicator column per observed level, named ``col=level``. Rows
    with missing or unparseable cells are dropped (counted in a warning).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyDataError(f"{path}: file has no header row")
    header, data_rows = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names in header")
    if target_column not in header:
        raise MissingColumnError(f"{path}: target column {target_column!r} not in header {header}")
    categorical = [str(c) for c in categorical_columns]
    for c in categorical:
        if c not in header:
            raise MissingColumnError(f"{path}: categorical column {c!r} not in header")
    if target_column in categorical:
        raise ValidationError(f"target column {target_column!r} cannot be categorical")

    target_pos = header.index(target_column)
    cat_pos = {header.index(c) for c in categorical}
    numeric_pos = [i for i in range(len(header)) if i != target_pos and i not in cat_pos]

    kept: list[list] = []
    dropped = 0
    for row in data_rows:
        if len(row) != len(header):
            dropped += 1
            continue
        parsed = list(row)
        ok = True
        for i in numeric_pos + [target_pos]:
            v = _parse_numeric(row[i])
            if v is None:
                ok = False
                break
            parsed[i] = v
        if ok:
            for i in cat_pos:
                if row[i] == "":
                    ok = False
                    break
        if ok:
            kept.append(parsed)
        else:
            dropped += 1
    if dropped:
        log.warning("%s: dropped %d of %d rows with missing or unparseable cells",
                    path, dropped, len(data_rows))
    if not kept:
        raise EmptyDataError(f"{path}: no rows survived parsing")

    levels = {i: sorted({row[i] for row in kept}) for i in cat_pos}
    feature_names: list[str] = []
    columns: list[np.ndarray] = []
    for i, name in enumerate(header):
        if i == target_pos:
            continue
        if i in cat_pos:
            raw = [row[i] for row in kept]
            for level in levels[i]:
                feature_names.append(f"{name}={level}")
                columns.append(np.asarray([1.0 if v == level else 0.0 for v in raw]))
        else:
            feature_names.append(name)
            columns.append(np.asarray([row[i] for row in kept], dtype=np.float64))
    features = np.column_stack(columns) if columns else np.empty((len(kept), 0))
    target = np.asarray([row[target_pos] for row in kept], dtype=np.float64)
    return Dataset(features, target, tuple(feature_names), target_column)


def format_float(v: float) -> str:
    """Shortest decimal string that round-trips the float (stable across runs)."""
    return repr(float(v))


def save_dataset_csv(data: Dataset, path) -> None:
    """Write feature columns (in order) followed by the target column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + [data.target_name])
        for i in range(data.n_rows):
            writer.writerow([format_float(v) for v in data.features[i]]
                            + [format_float(data.target[i])])
