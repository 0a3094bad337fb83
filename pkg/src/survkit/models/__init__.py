"""Six survival predictors behind one contract.

Every fitter takes ``(Dataset, config)`` and returns a
:class:`~survkit.models.base.FittedModel` with ``predict_survival`` and
``predict_risk``.  ``fit_model`` dispatches by kind; ``model_from_dict``
rebuilds a fitted model from its JSON document.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Dataset, SurvKitError
from .aalen import AalenConfig, AalenModel, SingularDesign, fit_aalen
from .base import FittedModel, NonConvergence, nelson_aalen
from .cox import CoxConfig, CoxModel, SeparationDetected, fit_cox
from .deepsurv import DeepSurvConfig, DeepSurvModel, NonFiniteLoss, fit_deepsurv
from .gbc import DegenerateSplitWarning, GbcConfig, GbcModel, fit_gbc
from .rsf import RsfConfig, RsfModel, fit_rsf
from .weibull_aft import (NonPositiveTime, WeibullAftConfig, WeibullAftModel,
                          fit_weibull_aft)

REGISTRY = {
    "cox": (fit_cox, CoxConfig, CoxModel),
    "gbc": (fit_gbc, GbcConfig, GbcModel),
    "rsf": (fit_rsf, RsfConfig, RsfModel),
    "weibull_aft": (fit_weibull_aft, WeibullAftConfig, WeibullAftModel),
    "aalen": (fit_aalen, AalenConfig, AalenModel),
    "deepsurv": (fit_deepsurv, DeepSurvConfig, DeepSurvModel),
}

MODEL_KINDS = tuple(REGISTRY)


@dataclass
class ModelSpec:
    """A model kind plus configuration overrides, e.g. for benchmarks."""

    kind: str
    config: dict = field(default_factory=dict)
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.kind

    def build_config(self):
        if self.kind not in REGISTRY:
            raise SurvKitError(f"unknown model kind {self.kind!r}")
        cls = REGISTRY[self.kind][1]
        cfg = cls(**{k: _coerce(v) for k, v in self.config.items()})
        cfg.validate()
        return cfg


def _coerce(value):
    return tuple(value) if isinstance(value, list) else value


def fit_model(kind: str, dataset: Dataset, config=None) -> FittedModel:
    """Fit a model by kind.  ``config`` may be the kind's config
    dataclass, a plain dict, or None for defaults."""
    if kind not in REGISTRY:
        raise SurvKitError(f"unknown model kind {kind!r}")
    fit, config_cls, _ = REGISTRY[kind]
    if config is None:
        config = config_cls()
    elif isinstance(config, dict):
        config = config_cls(**{k: _coerce(v) for k, v in config.items()})
    return fit(dataset, config)


def model_from_dict(doc: dict) -> FittedModel:
    """Rebuild a fitted model from the document ``to_dict`` produced."""
    kind = doc.get("kind")
    if kind not in REGISTRY:
        raise SurvKitError(f"unknown model kind {kind!r}")
    return REGISTRY[kind][2].from_dict(doc)


__all__ = [
    "FittedModel", "ModelSpec", "MODEL_KINDS", "REGISTRY",
    "fit_model", "model_from_dict", "nelson_aalen",
    "fit_cox", "CoxConfig", "CoxModel", "SeparationDetected",
    "fit_gbc", "GbcConfig", "GbcModel", "DegenerateSplitWarning",
    "fit_rsf", "RsfConfig", "RsfModel",
    "fit_weibull_aft", "WeibullAftConfig", "WeibullAftModel",
    "NonPositiveTime",
    "fit_aalen", "AalenConfig", "AalenModel", "SingularDesign",
    "fit_deepsurv", "DeepSurvConfig", "DeepSurvModel", "NonFiniteLoss",
    "NonConvergence",
]
