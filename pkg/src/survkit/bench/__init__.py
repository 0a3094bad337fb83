"""Dataset ingestion, the split protocol, randomized search, and the
benchmark runner with its report emitters."""

from .ingest import (DatasetManifest, MissingColumn, ParseFailure,
                     Standardizer, ingest, write_dataset_csv)
from .report import IoFailure, emit_report, report_json
from .runner import DEFAULT_MODELS, BenchConfig, run_benchmark
from .search import ParamRange, SearchSpace, default_search_spaces, random_search
from .splits import TooSmall, split, stratified_folds

__all__ = [
    "DatasetManifest", "MissingColumn", "ParseFailure", "Standardizer",
    "ingest", "write_dataset_csv", "IoFailure", "emit_report", "report_json",
    "DEFAULT_MODELS", "BenchConfig", "run_benchmark", "ParamRange",
    "SearchSpace", "default_search_spaces", "random_search", "TooSmall",
    "split", "stratified_folds",
]
