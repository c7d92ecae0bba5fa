"""Synthetic age-curve panels and the Monte Carlo method-comparison study.

Three data-generating scenarios share a truncated-polynomial mean curve and
per-player random effects; they differ in the treatment effect (constant,
linear in age, nonlinear) and, in scenario 3, an observed covariate whose
coefficient depends on treatment.  The study harness fits all six
meta-learner/base-learner combinations on replicated draws and scores each
against the known effect curve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import NUMERIC, Dataset
from .errors import ConfigError
from .inference import curve_mse
from .learners import RfHyperparams, RegressorSpec
from .basis import SplineSpec
from .meta import ACTE, CurveEstimate, MetaSpec, acte, fit_meta

#: the six method labels, in canonical table order.
METHODS = ("s.ols", "t.ols", "x.ols", "s.rf", "t.rf", "x.rf")


@dataclass(frozen=True)
class ScenarioSpec:
    """Full parameterization of one synthetic data-generating process."""

    scenario: int = 1
    n_players: int = 500
    age_min: int = 18
    age_max: int = 40
    a_peak: float = 25.0
    omega: float = 0.0
    beta1: float = -1.0 / 9.0
    beta2: float = -6.0 / 1000.0
    beta3: float = 45.0 / 10000.0
    sigma_b: float = 0.02
    sigma_eps: float = 1.0
    sigma_gamma: float = 0.4
    treat_prob: float = 0.151
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in (1, 2, 3):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.n_players < 1:
            raise ConfigError("n_players must be >= 1")
        if self.age_min > self.age_max:
            raise ConfigError("age_min must be <= age_max")
        if not 0.0 <= self.treat_prob <= 1.0:
            raise ConfigError("treat_prob must be in [0, 1]")

    @property
    def age_grid(self) -> np.ndarray:
        return np.arange(self.age_min, self.age_max + 1, dtype=np.int64)


def true_tau(a, spec: ScenarioSpec):
    """The scenario's treatment-effect curve, exact."""
    a = np.asarray(a, dtype=np.float64)
    if spec.scenario == 1:
        out = np.full_like(a, 2.0)
    elif spec.scenario == 2:
        out = 0.1 * (a - spec.age_min)
    else:
        d = a - spec.a_peak
        out = (
            2.0 * (a - 16.0)
            + 0.0005 * (a > 20.0) * d**3
            - 0.0005 * (a > spec.a_peak) * d**4
        )
    return float(out) if out.ndim == 0 else out


def true_tau_curve(spec: ScenarioSpec) -> CurveEstimate:
    grid = spec.age_grid
    return CurveEstimate(grid, true_tau(grid, spec), ACTE)


def mean_performance(a, w, spec: ScenarioSpec):
    """Average outcome at age ``a`` under arm ``w`` (random effects average out)."""
    a = np.asarray(a, dtype=np.float64)
    d = a - spec.a_peak
    post = d > 0.0
    g = spec.omega + spec.beta1 * d**2 + spec.beta2 * post * d**2 + spec.beta3 * post * d**3
    out = g + true_tau(a, spec) * w
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SyntheticPanel:
    """A generated dataset plus its hidden potential outcomes."""

    spec: ScenarioSpec
    dataset: Dataset
    y0: np.ndarray
    y1: np.ndarray


def generate(spec: ScenarioSpec) -> SyntheticPanel:
    """Draw one panel: per-player effects, per-record treatment and noise.

    Both potential outcomes share the record's noise draw, so the observed
    outcome always equals the potential outcome of the assigned arm.
    """
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, spec.scenario)))
    n_p = spec.n_players
    grid = spec.age_grid
    n_ages = len(grid)
    n = n_p * n_ages

    gamma = rng.normal(0.0, spec.sigma_gamma, n_p)
    slope = rng.normal(0.0, spec.sigma_b, n_p)
    x = rng.uniform(-1.0, 1.0, n_p)
    w = (rng.random(n) < spec.treat_prob).astype(np.int64)
    eps = rng.normal(0.0, spec.sigma_eps, n)

    ages = np.tile(grid, n_p)
    player_idx = np.repeat(np.arange(n_p), n_ages)
    a = ages.astype(np.float64)
    d = a - spec.a_peak
    post = d > 0.0

    def potential(arm: np.ndarray) -> np.ndarray:
        g = (
            spec.omega
            + spec.beta1 * d**2
            + spec.beta2 * post * d**2
            + spec.beta3 * post * d**3
            + true_tau(a, spec) * arm
        )
        f = gamma[player_idx] + slope[player_idx] * post * d**2
        if spec.scenario == 3:
            f = f + (2.0 + 3.0 * arm) * x[player_idx]
        return g + f + eps

    y0 = potential(np.zeros(n))
    y1 = potential(np.ones(n))
    y_obs = np.where(w == 1, y1, y0)

    schema = ((("x", NUMERIC),) if spec.scenario == 3 else ())
    covariates = {"x": x[player_idx]} if spec.scenario == 3 else {}
    ds = Dataset.build(
        np.array([f"p{i:05d}" for i in player_idx], dtype=object),
        np.full(n, np.datetime64("2000-01-01"), dtype="datetime64[D]"),
        ages,
        y_obs,
        "performance",
        schema,
        covariates,
        treatment=w,
    )
    return SyntheticPanel(spec=spec, dataset=ds, y0=y0, y1=y1)


def method_meta_spec(
    label: str,
    a_peak: float = 25.0,
    rf: RfHyperparams | None = None,
    include_intercept: bool = False,
) -> MetaSpec:
    """MetaSpec for one of the six canonical method labels (e.g. 't.rf').

    The study default is the intercept-free spline design of the
    method-comparison setup; applied pipelines pass include_intercept=True.
    """
    try:
        learner, base = label.split(".")
    except ValueError:
        raise ConfigError(f"malformed method label {label!r}") from None
    if learner not in ("s", "t", "x") or base not in ("ols", "rf"):
        raise ConfigError(f"unknown method label {label!r}")
    if base == "ols":
        base_spec = RegressorSpec.ols(
            SplineSpec(a_peak=a_peak, include_intercept=include_intercept)
        )
    else:
        base_spec = RegressorSpec.honest_rf(rf or RfHyperparams())
    return MetaSpec(learner=learner, base_control=base_spec)


@dataclass(frozen=True)
class SimResult:
    """Aggregated Monte Carlo study output (Table-1 analogue plus per-age curves)."""

    scenarios: tuple
    methods: tuple
    replications: int
    seed: int
    mse: dict  # (scenario, method) -> float
    per_age_mse: dict  # (scenario, method) -> np.ndarray
    per_age_mean_tau: dict  # (scenario, method) -> np.ndarray
    age_grids: dict  # scenario -> np.ndarray

    def table_csv(self) -> str:
        header = "model," + ",".join(f"simulation{s}" for s in self.scenarios)
        lines = [header]
        for method in self.methods:
            cells = [repr(self.mse[(s, method)]) for s in self.scenarios]
            lines.append(method + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def per_age_csv(self, scenario: int) -> str:
        header = "age," + ",".join(self.methods)
        lines = [header]
        grid = self.age_grids[scenario]
        for i, age in enumerate(grid):
            cells = [repr(float(self.per_age_mse[(scenario, m)][i])) for m in self.methods]
            lines.append(f"{int(age)}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def _derived_u64(*entropy) -> int:
    return int(np.random.SeedSequence(tuple(entropy)).generate_state(1, np.uint64)[0])


def run_study(
    specs,
    methods=METHODS,
    replications: int = 20,
    seed: int = 0,
    rf: RfHyperparams | None = None,
) -> SimResult:
    """Generate, fit, and score every (scenario, method, replication) cell.

    Within a replication all methods see the same dataset; fit randomness
    (forest seeds) is derived from (seed, scenario, method, replication) so
    any execution order reproduces the same numbers.
    """
    if replications < 1:
        raise ConfigError("replications must be >= 1")
    specs = list(specs)
    methods = tuple(methods)
    rf = rf or RfHyperparams()
    sq_sum = {}
    tau_sum = {}
    age_grids = {}
    for spec in specs:
        grid = spec.age_grid
        age_grids[spec.scenario] = grid
        truth = true_tau_curve(spec)
        base_specs = {m: method_meta_spec(m, spec.a_peak, rf) for m in methods}
        for m in methods:
            sq_sum[(spec.scenario, m)] = np.zeros(len(grid))
            tau_sum[(spec.scenario, m)] = np.zeros(len(grid))
        for rep in range(replications):
            data_seed = _derived_u64(seed, spec.scenario, rep)
            panel = generate(replace(spec, seed=data_seed))
            for mi, m in enumerate(methods):
                fit_seq = np.random.SeedSequence((seed, spec.scenario, mi, rep))
                s0, s1, s2 = (int(v) for v in fit_seq.generate_state(3, np.uint64))
                model = fit_meta(panel.dataset, base_specs[m].with_seeds(s0, s1, s2))
                curve = acte(model, panel.dataset, grid)
                _, per_age = curve_mse(curve, truth)
                sq_sum[(spec.scenario, m)] += per_age
                tau_sum[(spec.scenario, m)] += curve.values
    per_age_mse = {k: v / replications for k, v in sq_sum.items()}
    per_age_mean = {k: v / replications for k, v in tau_sum.items()}
    mse = {k: float(v.mean()) for k, v in per_age_mse.items()}
    return SimResult(
        scenarios=tuple(s.scenario for s in specs),
        methods=methods,
        replications=replications,
        seed=seed,
        mse=mse,
        per_age_mse=per_age_mse,
        per_age_mean_tau=per_age_mean,
        age_grids=age_grids,
    )
