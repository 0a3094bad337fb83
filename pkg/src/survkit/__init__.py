"""survkit: right-censored time-to-event prediction and evaluation.

Six survival predictors behind one fit/predict contract, censoring-aware
scores (concordance index and IPCW Brier scores), a convex ensemble
trained by exponentiated gradient descent on the integrated Brier
score, synthetic data generators, and a benchmark CLI.
"""

from .core import (AllCensored, Dataset, DimensionMismatch, NegativeTime,
                   NonFiniteValue, Subject, SurvKitError, SurvivalCurve,
                   restricted_mean, risk_set, survival_at, survival_before,
                   validate_dataset)
from .scoring import (CensoringEstimate, NoEligiblePairs,
                      ZeroCensoringProbability, brier_score,
                      concordance_index, default_horizon, eligible_pairs,
                      integrated_brier_score, km_censoring, km_survival)
from .ensemble import (ComponentPredictions, DivergedObjective,
                       EnsembleConfig, EnsembleModel, EnsembleWeights,
                       GridMismatch, NonFiniteGradient, component_predictions,
                       eg_step, ensemble_ibs, fit_ensemble, fit_ensemble_cv,
                       ibs_gradient, predict_ensemble)
from .simulate import (GeneratorSpec, InsufficientFeatures, ScenarioResult,
                       ScenarioSpec, gen_aft_style, gen_cox_style,
                       gen_multimode_weibull, generate, run_scenario)
from . import models
from . import bench

__version__ = "0.1.0"
