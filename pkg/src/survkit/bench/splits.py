"""Event-stratified train/validation partitioning."""

from __future__ import annotations

import numpy as np

from ..core import Dataset, SurvKitError


class TooSmall(SurvKitError):
    """A split side would hold fewer than two events."""


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((int(seed), 0x5917))))


def split(dataset: Dataset, fraction: float, seed: int):
    """Disjoint covering split, stratified on the event indicator.

    Event and censored subjects are partitioned separately so both
    sides keep the parent's censoring rate (within rounding, well
    inside +/- 2 points for realistic sizes).  Deterministic per seed.

    Returns ``(train, validation)``.

    Raises
    ------
    TooSmall
        When either side would receive fewer than 2 events.
    """
    if not 0.0 < fraction < 1.0:
        raise SurvKitError(f"fraction must lie in (0, 1), got {fraction}")
    rng = _rng(seed)
    train_idx, val_idx = [], []
    for mask in (dataset.events, ~dataset.events):
        group = np.flatnonzero(mask)
        if group.size == 0:
            continue
        perm = rng.permutation(group)
        k = int(round(fraction * group.size))
        train_idx.append(perm[:k])
        val_idx.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_idx))
    val_idx = np.sort(np.concatenate(val_idx))
    if (dataset.events[train_idx].sum() < 2
            or dataset.events[val_idx].sum() < 2):
        raise TooSmall("a split side would hold fewer than 2 events")
    return dataset.subset(train_idx), dataset.subset(val_idx)


def stratified_folds(dataset: Dataset, n_folds: int, seed: int):
    """Event-stratified fold index arrays covering the dataset."""
    if n_folds < 2:
        raise SurvKitError("need at least 2 folds")
    rng = _rng(seed)
    folds = [[] for _ in range(n_folds)]
    for mask in (dataset.events, ~dataset.events):
        group = np.flatnonzero(mask)
        perm = rng.permutation(group)
        for i, idx in enumerate(perm):
            folds[i % n_folds].append(idx)
    return [np.sort(np.asarray(f, dtype=int)) for f in folds]
