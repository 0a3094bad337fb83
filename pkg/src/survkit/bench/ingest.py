"""Delimited-file ingestion and preprocessing.

A :class:`DatasetManifest` names the file, the time and event columns,
and which columns are categorical or dropped.  Ingestion parses the
file, drops rows with missing values (with a count warning), one-hot
encodes categoricals (first level dropped), and validates the result.

Standardization is deliberately separate: by default the benchmark
standardizes with train-split statistics only, to avoid leaking the
validation distribution into the fit.  A compatibility mode that
standardizes on the full dataset at ingest time is available via
``standardize="full"``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..core import AllCensored, Dataset, SurvKitError


class MissingColumn(SurvKitError):
    """A manifest column is absent from the file."""


class ParseFailure(SurvKitError):
    """The file could not be parsed as delimited text."""


@dataclass
class DatasetManifest:
    name: str
    path: str
    time_column: str
    event_column: str
    categorical_columns: tuple = ()
    drop_columns: tuple = ()
    event_true_values: tuple = (1, "1", True, "true", "True", "yes")
    delimiter: str = ","

    @classmethod
    def from_file(cls, path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text())
        doc.setdefault("name", Path(path).stem)
        for key in ("categorical_columns", "drop_columns",
                    "event_true_values"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "time_column": self.time_column,
            "event_column": self.event_column,
            "categorical_columns": list(self.categorical_columns),
            "drop_columns": list(self.drop_columns),
            "event_true_values": [str(v) for v in self.event_true_values],
            "delimiter": self.delimiter,
        }


def ingest(manifest: DatasetManifest, standardize: str = "none") -> Dataset:
    """Read and preprocess one dataset.

    Parameters
    ----------
    standardize : {"none", "full"}
        "none" leaves covariates raw (the benchmark standardizes per
        split); "full" standardizes on the complete file.
    """
    try:
        frame = pd.read_csv(manifest.path, sep=manifest.delimiter)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseFailure(f"{manifest.path}: {exc}") from exc

    for col in (manifest.time_column, manifest.event_column):
        if col not in frame.columns:
            raise MissingColumn(f"{manifest.name}: column {col!r} not found")
    frame = frame.drop(columns=list(manifest.drop_columns), errors="ignore")

    n_before = len(frame)
    frame = frame.dropna()
    dropped = n_before - len(frame)
    if dropped:
        warnings.warn(f"{manifest.name}: dropped {dropped} rows with "
                      f"missing values", stacklevel=2)
    if len(frame) == 0:
        raise ParseFailure(f"{manifest.name}: no complete rows")

    times = pd.to_numeric(frame[manifest.time_column], errors="coerce")
    if times.isna().any():
        raise ParseFailure(f"{manifest.name}: non-numeric time values")
    truthy = {str(v) for v in manifest.event_true_values}
    events = frame[manifest.event_column].map(lambda v: str(v) in truthy)

    covs = frame.drop(columns=[manifest.time_column, manifest.event_column])
    cat_cols = [c for c in manifest.categorical_columns if c in covs.columns]
    # also treat any remaining non-numeric column as categorical
    for col in covs.columns:
        if col not in cat_cols and not pd.api.types.is_numeric_dtype(covs[col]):
            cat_cols.append(col)
    if cat_cols:
        covs = pd.get_dummies(covs, columns=cat_cols, drop_first=True)
    X = covs.to_numpy(dtype=float)

    if standardize == "full":
        X = Standardizer.fit_matrix(X).transform_matrix(X)
    elif standardize != "none":
        raise SurvKitError(f"unknown standardize mode {standardize!r}")

    if not events.any():
        raise AllCensored(f"{manifest.name}: every row is censored")
    return Dataset(X, times.to_numpy(dtype=float), events.to_numpy(),
                   tuple(covs.columns))


@dataclass
class Standardizer:
    """Zero-mean unit-variance scaling fit on one dataset, applied to
    others.  Constant columns are left unscaled."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, dataset: Dataset) -> "Standardizer":
        return cls.fit_matrix(dataset.covariates)

    @classmethod
    def fit_matrix(cls, X) -> "Standardizer":
        mean = X.mean(axis=0) if X.shape[1] else np.zeros(0)
        std = X.std(axis=0) if X.shape[1] else np.zeros(0)
        scale = np.where(std > 0, std, 1.0)
        return cls(mean, scale)

    def transform_matrix(self, X) -> np.ndarray:
        return (X - self.mean) / self.scale

    def transform(self, dataset: Dataset) -> Dataset:
        return Dataset(self.transform_matrix(dataset.covariates),
                       dataset.times, dataset.events, dataset.feature_names)


def write_dataset_csv(dataset: Dataset, path, time_column: str = "time",
                      event_column: str = "event"):
    """Write a dataset as delimited text (used for synthetic stand-ins)."""
    frame = pd.DataFrame(dataset.covariates, columns=dataset.feature_names)
    frame[time_column] = dataset.times
    frame[event_column] = dataset.events.astype(int)
    frame.to_csv(path, index=False)
