"""Synthetic right-censored data generators and sweep scenarios.

Three generators cover the usual modeling regimes:

* ``cox_style`` draws event times from a proportional-hazards model with
  a fixed baseline (Weibull by default, or a two-power "bathtub" mix for
  deliberately non-Weibull hazards) via the inverse cumulative hazard.
* ``aft_style`` draws Weibull times whose scale is covariate-dependent,
  i.e. an accelerated failure time model.
* ``multimode_weibull`` mixes three failure modes (infant defects with a
  steeply decreasing hazard, mid-life failures, and wear-out) modeled as
  Weibull draws with shapes 0.003, 3 and 6; the observed event is the
  first mode to fire.

All generators finish with independent uniform censoring whose interval
length is calibrated by bisection so the realized censoring fraction
matches ``censor_target`` in expectation.

``run_scenario`` sweeps one axis (sample count, feature count, or
censoring rate), refitting models on fresh train/test splits per
replication.  Per-replication seeds derive from
``SeedSequence((seed, grid_index, replication))``, so results are a
pure function of the declared specs.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, SurvKitError
from .models import ModelSpec, fit_model
from .scoring import (concordance_index, default_horizon,
                      integrated_brier_score, km_censoring)


class InsufficientFeatures(SurvKitError):
    """The multimode generator needs at least one feature per family."""


GENERATOR_KINDS = ("cox_style", "aft_style", "multimode_weibull")


@dataclass
class GeneratorSpec:
    kind: str
    n: int = 1000
    d: int = 12
    censor_target: float = 0.5
    seed: int = 0
    truth: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in GENERATOR_KINDS:
            raise SurvKitError(f"unknown generator kind {self.kind!r}")
        if self.n < 2 or self.d < 0:
            raise SurvKitError("need n >= 2 and d >= 0")
        if not 0 <= self.censor_target < 1:
            raise SurvKitError("censor_target must lie in [0, 1)")


def _rng(spec: GeneratorSpec) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((int(spec.seed), 0xD47A))))


def _calibrated_uniform_censoring(event_times, censor_target, rng):
    """Censor with C ~ U(0, b), b found by bisection so the expected
    censored fraction E[min(T/b, 1)] hits the target (30 iterations)."""
    n = event_times.shape[0]
    if censor_target <= 0:
        return event_times.copy(), np.ones(n, dtype=bool), np.inf

    def frac(b):
        return float(np.mean(np.minimum(event_times / b, 1.0)))

    hi = float(np.max(event_times))
    for _ in range(200):
        if frac(hi) <= censor_target:
            break
        hi *= 2.0
    lo = hi * 1e-12
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if frac(mid) > censor_target:
            lo = mid
        else:
            hi = mid
    b = 0.5 * (lo + hi)
    censor_times = rng.uniform(0.0, b, size=n)
    events = event_times <= censor_times
    observed = np.minimum(event_times, censor_times)
    return observed, events, b


def _weibull_cumhaz_inverse(v, shape, scale):
    return scale * np.power(v, 1.0 / shape)


def _bathtub_cumhaz_inverse(v, w_infant=0.3, k_infant=0.08, k_wear=1.8):
    """Invert the bathtub baseline H0(t) = w t^k_infant + t^k_wear by
    bisection (80 steps).

    The first term is an infant-defect spike (steeply decreasing
    hazard), the second wear-out; the combination is deliberately far
    from any single Weibull.
    """
    hi = np.power(np.maximum(v, 1e-300), 1.0 / k_wear) + 1.0
    lo = np.zeros_like(v)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        too_low = w_infant * mid ** k_infant + mid ** k_wear < v
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    out = 0.5 * (lo + hi)
    # keep times strictly positive for log-time likelihoods downstream
    return np.maximum(out, 1e-300)


def gen_cox_style(spec: GeneratorSpec):
    """Proportional hazards data: h(t|x) = h0(t) exp(beta' x).

    Covariates are standard normal.  Event times invert the cumulative
    hazard at an Exp(1) draw.  Returns ``(dataset, truth)`` where truth
    records beta and the baseline.
    """
    spec.validate()
    rng = _rng(spec)
    # beta is drawn before the covariates so a given seed fixes the truth
    # regardless of n; truth.beta pins it, truth.beta_scale its spread
    scale_b = float(spec.truth.get("beta_scale", 0.5))
    beta = np.asarray(spec.truth.get("beta",
                                     rng.normal(0.0, scale_b, size=spec.d)),
                      dtype=float)
    X = rng.standard_normal((spec.n, spec.d))
    baseline = spec.truth.get("baseline", "weibull")
    shape = float(spec.truth.get("baseline_shape", 1.5))
    scale = float(spec.truth.get("baseline_scale", 1.0))

    eta = X @ beta
    v = rng.exponential(size=spec.n) * np.exp(-eta)
    if baseline == "weibull":
        event_times = _weibull_cumhaz_inverse(v, shape, scale)
    elif baseline == "bathtub":
        event_times = _bathtub_cumhaz_inverse(v)
    else:
        raise SurvKitError(f"unknown baseline {baseline!r}")
    observed, events, b = _calibrated_uniform_censoring(
        event_times, spec.censor_target, rng)
    truth = {"kind": "cox_style", "beta": beta.tolist(),
             "baseline": baseline, "baseline_shape": shape,
             "baseline_scale": scale, "censor_interval": b}
    return Dataset(X, observed, events), truth


def gen_aft_style(spec: GeneratorSpec):
    """Weibull accelerated failure time data.

    T ~ Weibull with scale exp(beta0 + beta' x) and a fixed shape
    (default 2): T = scale * E^(1/shape) for E ~ Exp(1).
    """
    spec.validate()
    rng = _rng(spec)
    scale_b = float(spec.truth.get("beta_scale", 0.5))
    beta = np.asarray(spec.truth.get("beta",
                                     rng.normal(0.0, scale_b, size=spec.d)),
                      dtype=float)
    X = rng.standard_normal((spec.n, spec.d))
    beta0 = float(spec.truth.get("beta0", 0.0))
    shape = float(spec.truth.get("shape", 2.0))

    scale = np.exp(beta0 + X @ beta)
    event_times = scale * np.power(rng.exponential(size=spec.n), 1.0 / shape)
    observed, events, b = _calibrated_uniform_censoring(
        event_times, spec.censor_target, rng)
    truth = {"kind": "aft_style", "beta0": beta0, "beta": beta.tolist(),
             "shape": shape, "censor_interval": b}
    return Dataset(X, observed, events), truth


# Weibull shapes of the three failure modes: an infant-defect mode with
# steeply decreasing hazard and two wear modes with increasing hazard.
_MODE_SHAPES = (0.003, 3.0, 6.0)
# A log-scale near 990 puts the infant mode's failure probability inside
# the unit time window at roughly 5%; the wear modes live near t ~ 1.
_MODE_BASE_LOG_SCALES = (990.0, 0.0, 0.5)


def gen_multimode_weibull(spec: GeneratorSpec):
    """Competing-mode data in the style of fleet failure simulations.

    Features cycle through three families: normal N(1, 0.3), uniform
    U(0, 1), and a 3-level categorical coded 0/1/2.  Each failure mode's
    log-scale is a linear function of a disjoint third of the features
    (contiguous blocks), with coefficients drawn once per dataset from
    N(0, 0.5).  One time is sampled per mode in log space (the infant
    mode's times overflow otherwise) and the earliest mode wins; uniform
    censoring is calibrated afterwards.
    """
    spec.validate()
    if spec.d < 3:
        raise InsufficientFeatures(
            f"need at least 3 features (one per family), got {spec.d}")
    rng = _rng(spec)
    n, d = spec.n, spec.d

    blocks = np.array_split(np.arange(d), 3)
    coeffs = spec.truth.get("mode_coefficients")
    if coeffs is None:
        coeffs = [rng.normal(0.0, 0.5, size=len(b)) for b in blocks]
    else:
        coeffs = [np.asarray(c, dtype=float) for c in coeffs]

    X = np.empty((n, d))
    for j in range(d):
        fam = j % 3
        if fam == 0:
            X[:, j] = rng.normal(1.0, 0.3, size=n)
        elif fam == 1:
            X[:, j] = rng.uniform(0.0, 1.0, size=n)
        else:
            X[:, j] = rng.integers(0, 3, size=n).astype(float)

    log_time = np.full(n, np.inf)
    for mode in range(3):
        log_scale = _MODE_BASE_LOG_SCALES[mode] + X[:, blocks[mode]] @ coeffs[mode]
        log_e = np.log(rng.exponential(size=n))
        log_time = np.minimum(log_time,
                              log_scale + log_e / _MODE_SHAPES[mode])
    event_times = np.exp(log_time)

    observed, events, b = _calibrated_uniform_censoring(
        event_times, spec.censor_target, rng)
    truth = {"kind": "multimode_weibull",
             "mode_shapes": list(_MODE_SHAPES),
             "mode_base_log_scales": list(_MODE_BASE_LOG_SCALES),
             "mode_coefficients": [c.tolist() for c in coeffs],
             "blocks": [blk.tolist() for blk in blocks],
             "censor_interval": b}
    return Dataset(X, observed, events), truth


_GENERATORS = {
    "cox_style": gen_cox_style,
    "aft_style": gen_aft_style,
    "multimode_weibull": gen_multimode_weibull,
}


def generate(spec: GeneratorSpec):
    """Dispatch on ``spec.kind``."""
    return _GENERATORS[spec.kind](spec)


# ---------------------------------------------------------------------------
# sweep scenarios
# ---------------------------------------------------------------------------

SCENARIO_AXES = ("samples", "features", "censorship")


@dataclass
class ScenarioSpec:
    axis: str
    grid: tuple
    fixed: dict = field(default_factory=dict)
    replications: int = 100
    metrics: tuple = ("concordance", "ibs")
    train_fraction: float = 0.8

    def validate(self):
        if self.axis not in SCENARIO_AXES:
            raise SurvKitError(f"unknown axis {self.axis!r}")
        if len(self.grid) == 0 or list(self.grid) != sorted(self.grid):
            raise SurvKitError("grid must be nonempty and sorted")
        if self.replications < 1:
            raise SurvKitError("replications must be >= 1")
        bad = set(self.metrics) - {"concordance", "ibs"}
        if bad:
            raise SurvKitError(f"unknown metrics {bad}")


@dataclass
class ScenarioResult:
    scenario: ScenarioSpec
    generator: GeneratorSpec
    model_names: tuple
    values: dict  # (grid_value, model, metric) -> list of floats
    failures: list  # (grid_value, replication, model, message)

    def mean(self, grid_value, model, metric) -> float:
        return float(np.mean(self.values[(grid_value, model, metric)]))

    def sd(self, grid_value, model, metric) -> float:
        vals = self.values[(grid_value, model, metric)]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def count(self, grid_value, model, metric) -> int:
        return len(self.values[(grid_value, model, metric)])

    def to_rows(self):
        """Long-format rows: one per (grid point, model, metric)."""
        rows = []
        for g in self.scenario.grid:
            for m in self.model_names:
                for metric in self.scenario.metrics:
                    key = (g, m, metric)
                    if key not in self.values or not self.values[key]:
                        continue
                    rows.append({
                        "axis": self.scenario.axis,
                        "grid_value": g,
                        "model": m,
                        "metric": metric,
                        "mean": self.mean(g, m, metric),
                        "sd": self.sd(g, m, metric),
                        "replications": self.count(g, m, metric),
                    })
        return rows


def _replication_seed(base_seed, replication) -> int:
    # shared across grid points: replication r sees the same coefficient
    # draw at every grid value, so grid effects are paired comparisons
    ss = np.random.SeedSequence((int(base_seed), int(replication)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _spec_at(generator: GeneratorSpec, scenario: ScenarioSpec, grid_value,
             seed) -> GeneratorSpec:
    fixed = dict(scenario.fixed)
    n = int(fixed.get("samples", generator.n))
    d = int(fixed.get("features", generator.d))
    censor = float(fixed.get("censorship", generator.censor_target))
    if scenario.axis == "samples":
        n = int(grid_value)
    elif scenario.axis == "features":
        d = int(grid_value)
    else:
        censor = float(grid_value)
    return GeneratorSpec(kind=generator.kind, n=n, d=d, censor_target=censor,
                         seed=seed, truth=dict(generator.truth))


def _run_replication(args):
    generator, scenario, models, grid_index, rep = args
    from .bench.splits import split

    grid_value = scenario.grid[grid_index]
    seed = _replication_seed(generator.seed, rep)
    spec = _spec_at(generator, scenario, grid_value, seed)
    out = {}
    failures = []
    try:
        dataset, _ = generate(spec)
        train, test = split(dataset, scenario.train_fraction, seed=seed + 1)
        censor = km_censoring(test)
        tau = default_horizon(test)
    except SurvKitError as exc:
        failures.append((grid_value, rep, "*", str(exc)))
        return grid_index, rep, out, failures
    for ms in models:
        try:
            model = fit_model(ms.kind, train, ms.build_config())
            scores = {}
            if "concordance" in scenario.metrics:
                risks = model.predict_risk_many(test.covariates)
                scores["concordance"] = concordance_index(risks, test)
            if "ibs" in scenario.metrics:
                curves = model.predict_curves(test)
                scores["ibs"] = integrated_brier_score(curves, test, tau,
                                                       censor)
            out[ms.name] = scores
        except SurvKitError as exc:
            failures.append((grid_value, rep, ms.name, str(exc)))
    return grid_index, rep, out, failures


def run_scenario(scenario: ScenarioSpec, generator: GeneratorSpec, models,
                 workers: int = 1) -> ScenarioResult:
    """Sweep one axis, refitting every model per replication.

    A replication whose generation or split fails is recorded under
    ``failures`` and excluded from the averages, with a warning; it is
    never silently averaged.
    """
    scenario.validate()
    generator.validate()
    models = [m if isinstance(m, ModelSpec) else ModelSpec(m) for m in models]
    tasks = [(generator, scenario, models, gi, rep)
             for gi in range(len(scenario.grid))
             for rep in range(scenario.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_replication, tasks, chunksize=1))
    else:
        raw = [_run_replication(t) for t in tasks]
    raw.sort(key=lambda r: (r[0], r[1]))  # deterministic reduction order

    values = {}
    failures = []
    for gi, rep, out, fails in raw:
        g = scenario.grid[gi]
        for name, scores in out.items():
            for metric, value in scores.items():
                values.setdefault((g, name, metric), []).append(value)
        failures.extend(fails)
    for g, rep, name, message in failures:
        warnings.warn(f"replication {rep} at {scenario.axis}={g} "
                      f"failed for {name}: {message}", stacklevel=2)
    return ScenarioResult(scenario, generator,
                          tuple(m.name for m in models), values, failures)
