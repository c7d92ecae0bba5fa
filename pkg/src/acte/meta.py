"""S-, T-, and X-learners over the base regressors, and age-indexed curves.

The age-conditioned expectation function (ACEF) averages a fitted outcome
model over the empirical covariate distribution with the age (and, for the
S-learner, the treatment flag) overridden; the age-conditioned treatment
effect (ACTE) is the treated-minus-control difference of those curves, or
the propensity-weighted combination of the X-learner's two imputed-effect
regressions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import learners
from .basis import truncated_basis
from .dataset import Dataset, FixedEffectsEncoding, encode_fixed_effects
from .errors import (
    ConfigError,
    DegenerateArmError,
    DomainError,
    InsufficientDataError,
    PropensityMissingAgeError,
    SchemaError,
)
from .learners import (
    OLS_SPLINE,
    DesignMatrix,
    FittedOutcomeModel,
    RegressorSpec,
)

S_LEARNER = "s"
T_LEARNER = "t"
X_LEARNER = "x"

EMPIRICAL_BY_AGE = "empirical_by_age"
CONSTANT = "constant"

ACEF_CONTROL = "ACEF_control"
ACEF_TREATED = "ACEF_treated"
ACTE = "ACTE"

FLAG_EXTRAPOLATED = "extrapolated"
FLAG_NO_CONTROL = "no_control_rows"
FLAG_NO_TREATED = "no_treated_rows"
FLAG_POINT_OUTSIDE_BAND = "point_outside_band"

#: cap on per-call design-matrix cells before curve evaluation chunks by age.
_EVAL_CELL_BUDGET = 20_000_000


@dataclass(frozen=True)
class MetaSpec:
    """Meta-learner choice plus its base learner specs.

    The S-learner uses ``base_control`` alone; for T and X an omitted
    ``base_treated``/``base_effect`` defaults to ``base_control``.
    """

    learner: str
    base_control: RegressorSpec
    base_treated: RegressorSpec | None = None
    base_effect: RegressorSpec | None = None
    propensity_mode: str = EMPIRICAL_BY_AGE
    propensity_constant: float | None = None

    def __post_init__(self):
        if self.learner not in (S_LEARNER, T_LEARNER, X_LEARNER):
            raise ConfigError(f"unknown meta-learner {self.learner!r}")
        if self.learner == S_LEARNER:
            if self.base_treated is not None or self.base_effect is not None:
                raise ConfigError("the S-learner uses exactly one base spec")
        else:
            if self.base_treated is None:
                object.__setattr__(self, "base_treated", self.base_control)
            if self.learner == X_LEARNER and self.base_effect is None:
                object.__setattr__(self, "base_effect", self.base_control)
        if self.learner != X_LEARNER and self.base_effect is not None:
            raise ConfigError("base_effect only applies to the X-learner")
        if self.propensity_mode == CONSTANT:
            c = self.propensity_constant
            if c is None or not 0.0 <= c <= 1.0:
                raise ConfigError("constant propensity requires a value in [0, 1]")
        elif self.propensity_mode != EMPIRICAL_BY_AGE:
            raise ConfigError(f"unknown propensity mode {self.propensity_mode!r}")

    def with_seeds(self, seed_control: int, seed_treated: int, seed_effect: int) -> "MetaSpec":
        """Copy with forest seeds replaced (no-op for OLS bases)."""
        return MetaSpec(
            learner=self.learner,
            base_control=self.base_control.with_seed(seed_control),
            base_treated=None
            if self.learner == S_LEARNER
            else self.base_treated.with_seed(seed_treated),
            base_effect=self.base_effect.with_seed(seed_effect)
            if self.learner == X_LEARNER
            else None,
            propensity_mode=self.propensity_mode,
            propensity_constant=self.propensity_constant,
        )


@dataclass(frozen=True)
class PropensityEstimate:
    """Treated-share by age with a global fallback for unseen ages."""

    by_age: dict
    fallback: float | None = None

    def __post_init__(self):
        for age, v in self.by_age.items():
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"propensity at age {age} outside [0, 1]: {v}")
        if self.fallback is not None and not 0.0 <= self.fallback <= 1.0:
            raise DomainError(f"fallback propensity outside [0, 1]: {self.fallback}")

    def at(self, age: int) -> float:
        v = self.by_age.get(int(age))
        if v is not None:
            return v
        if self.fallback is None:
            raise PropensityMissingAgeError(f"no propensity value for age {age}")
        return self.fallback


@dataclass(frozen=True)
class CurveEstimate:
    """An age-indexed curve (ACEF or ACTE) with optional confidence bands."""

    ages: np.ndarray
    values: np.ndarray
    kind: str
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    flags: tuple = ()

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if len(ages) != len(values):
            raise SchemaError("ages and values must have equal length")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "values", values)
        for name in ("lower", "upper"):
            band = getattr(self, name)
            if band is not None:
                band = np.asarray(band, dtype=np.float64)
                if len(band) != len(ages):
                    raise SchemaError(f"{name} band length mismatch")
                object.__setattr__(self, name, band)
        if (self.lower is None) != (self.upper is None):
            raise SchemaError("lower and upper bands must come together")
        if self.lower is not None and np.any(self.lower > self.upper):
            raise DomainError("lower band exceeds upper band")
        if not self.flags:
            object.__setattr__(self, "flags", tuple(() for _ in ages))
        elif len(self.flags) != len(ages):
            raise SchemaError("flags length mismatch")

    def with_bands(self, lower, upper) -> "CurveEstimate":
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        flags = tuple(
            tuple(sorted(set(fl) | {FLAG_POINT_OUTSIDE_BAND}))
            if not lo <= v <= up
            else fl
            for fl, lo, v, up in zip(self.flags, lower, self.values, upper)
        )
        return CurveEstimate(self.ages, self.values, self.kind, lower, upper, flags)

    def to_csv_string(self) -> str:
        lines = ["age,value,lower,upper,kind,flags"]
        for i, age in enumerate(self.ages):
            lower = "" if self.lower is None else repr(float(self.lower[i]))
            upper = "" if self.upper is None else repr(float(self.upper[i]))
            flags = ";".join(self.flags[i])
            lines.append(
                f"{int(age)},{float(self.values[i])!r},{lower},{upper},{self.kind},{flags}"
            )
        return "\n".join(lines) + "\n"

    def to_json_string(self) -> str:
        payload = {
            "kind": self.kind,
            "ages": [int(a) for a in self.ages],
            "values": [float(v) for v in self.values],
            "lower": None if self.lower is None else [float(v) for v in self.lower],
            "upper": None if self.upper is None else [float(v) for v in self.upper],
            "flags": [list(f) for f in self.flags],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class _Assembler:
    """Builds the design matrix for one base learner.

    OLS gets the truncated age basis (with an intercept only when the spline
    spec asks for one); the forest gets the raw age column.  Encoded
    covariates follow, then the treatment flag when the meta-learner feeds
    treatment as a feature.
    """

    base: RegressorSpec
    encoding: FixedEffectsEncoding
    with_treatment: bool

    @property
    def columns(self) -> tuple[str, ...]:
        if self.base.kind == OLS_SPLINE:
            cols = self.base.spline.columns
        else:
            cols = ("age",)
        cols += self.encoding.columns
        if self.with_treatment:
            cols += ("treatment",)
        return cols

    def build(self, ages, cov_block: np.ndarray, treatment=None) -> DesignMatrix:
        ages = np.asarray(ages, dtype=np.float64)
        n = len(ages)
        if self.base.kind == OLS_SPLINE:
            blocks = [np.atleast_2d(truncated_basis(ages, self.base.spline))]
        else:
            blocks = [ages.reshape(n, 1)]
        blocks.append(cov_block)
        if self.with_treatment:
            if treatment is None:
                raise SchemaError("treatment column required but not supplied")
            treatment = np.broadcast_to(
                np.asarray(treatment, dtype=np.float64), (n,)
            ).reshape(n, 1)
            blocks.append(treatment)
        return DesignMatrix(np.hstack(blocks), self.columns)


@dataclass(frozen=True)
class SLearnerModel:
    spec: MetaSpec
    model: FittedOutcomeModel
    assembler: _Assembler
    age_support: tuple
    arm_ages: tuple  # (control age set, treated age set)


@dataclass(frozen=True)
class TLearnerModel:
    spec: MetaSpec
    model_control: FittedOutcomeModel
    model_treated: FittedOutcomeModel
    assembler_control: _Assembler
    assembler_treated: _Assembler
    age_support: tuple
    arm_ages: tuple


@dataclass(frozen=True)
class XLearnerModel:
    spec: MetaSpec
    model_control: FittedOutcomeModel
    model_treated: FittedOutcomeModel
    effect_on_control: FittedOutcomeModel  # fit to imputed effects of control rows
    effect_on_treated: FittedOutcomeModel  # fit to imputed effects of treated rows
    propensity: PropensityEstimate
    assembler_control: _Assembler
    assembler_treated: _Assembler
    assembler_effect: _Assembler
    age_support: tuple
    arm_ages: tuple


MetaModel = SLearnerModel | TLearnerModel | XLearnerModel


def _split_arms(ds: Dataset):
    trt = ds.require_treatment()
    control = np.flatnonzero(trt == 0)
    treated = np.flatnonzero(trt == 1)
    if len(control) == 0 or len(treated) == 0:
        raise DegenerateArmError(
            f"need both treatment arms, got {len(control)} control / {len(treated)} treated rows"
        )
    return control, treated


def _context(ds: Dataset):
    encoding = encode_fixed_effects(ds)
    cov_block = encoding.transform(ds.covariates, ds.n)
    return encoding, cov_block


def _support(ds: Dataset, control, treated):
    support = (int(ds.age.min()), int(ds.age.max()))
    arm_ages = (
        frozenset(int(a) for a in np.unique(ds.age[control])),
        frozenset(int(a) for a in np.unique(ds.age[treated])),
    )
    return support, arm_ages


def fit_s_learner(ds: Dataset, spec: MetaSpec) -> SLearnerModel:
    """Single outcome model with treatment as an ordinary feature column."""
    if spec.learner != S_LEARNER:
        raise ConfigError(f"spec.learner is {spec.learner!r}, expected 's'")
    control, treated = _split_arms(ds)
    encoding, cov_block = _context(ds)
    assembler = _Assembler(spec.base_control, encoding, with_treatment=True)
    dm = assembler.build(ds.age, cov_block, ds.treatment)
    model = learners.fit(spec.base_control, dm, ds.outcome)
    support, arm_ages = _support(ds, control, treated)
    return SLearnerModel(spec, model, assembler, support, arm_ages)


def fit_t_learner(ds: Dataset, spec: MetaSpec) -> TLearnerModel:
    """Separate outcome models for the control and treated rows."""
    if spec.learner != T_LEARNER:
        raise ConfigError(f"spec.learner is {spec.learner!r}, expected 't'")
    control, treated = _split_arms(ds)
    encoding, cov_block = _context(ds)
    asm0 = _Assembler(spec.base_control, encoding, with_treatment=False)
    asm1 = _Assembler(spec.base_treated, encoding, with_treatment=False)
    model0 = learners.fit(
        spec.base_control, asm0.build(ds.age[control], cov_block[control]), ds.outcome[control]
    )
    model1 = learners.fit(
        spec.base_treated, asm1.build(ds.age[treated], cov_block[treated]), ds.outcome[treated]
    )
    support, arm_ages = _support(ds, control, treated)
    return TLearnerModel(spec, model0, model1, asm0, asm1, support, arm_ages)


def fit_x_learner(ds: Dataset, spec: MetaSpec, e: PropensityEstimate) -> XLearnerModel:
    """Two-stage learner: impute per-row effects, regress them, blend by e(a).

    Stage one fits the two arm models exactly as the T-learner.  Stage two
    regresses the imputed effects (treated outcomes minus control-model
    predictions, and treated-model predictions minus control outcomes) on age
    and covariates; the final curve weights the control-rows regression by
    e(a) and the treated-rows regression by 1 - e(a).
    """
    if spec.learner != X_LEARNER:
        raise ConfigError(f"spec.learner is {spec.learner!r}, expected 'x'")
    control, treated = _split_arms(ds)
    encoding, cov_block = _context(ds)
    asm0 = _Assembler(spec.base_control, encoding, with_treatment=False)
    asm1 = _Assembler(spec.base_treated, encoding, with_treatment=False)
    asme = _Assembler(spec.base_effect, encoding, with_treatment=False)
    model0 = learners.fit(
        spec.base_control, asm0.build(ds.age[control], cov_block[control]), ds.outcome[control]
    )
    model1 = learners.fit(
        spec.base_treated, asm1.build(ds.age[treated], cov_block[treated]), ds.outcome[treated]
    )
    d_treated = ds.outcome[treated] - learners.predict(
        model0, asm0.build(ds.age[treated], cov_block[treated])
    )
    d_control = (
        learners.predict(model1, asm1.build(ds.age[control], cov_block[control]))
        - ds.outcome[control]
    )
    effect_treated = learners.fit(
        spec.base_effect, asme.build(ds.age[treated], cov_block[treated]), d_treated
    )
    effect_control = learners.fit(
        spec.base_effect, asme.build(ds.age[control], cov_block[control]), d_control
    )
    for age in np.unique(ds.age):
        e.at(int(age))  # raises PropensityMissingAgeError on gaps
    support, arm_ages = _support(ds, control, treated)
    return XLearnerModel(
        spec,
        model0,
        model1,
        effect_control,
        effect_treated,
        e,
        asm0,
        asm1,
        asme,
        support,
        arm_ages,
    )


def estimate_propensity(
    ds: Dataset, mode: str = EMPIRICAL_BY_AGE, constant: float | None = None
) -> PropensityEstimate:
    """e(a): the treated share at each observed age, or a constant."""
    if mode == CONSTANT:
        if constant is None or not 0.0 <= constant <= 1.0:
            raise ConfigError("constant propensity requires a value in [0, 1]")
        return PropensityEstimate(by_age={}, fallback=float(constant))
    if mode != EMPIRICAL_BY_AGE:
        raise ConfigError(f"unknown propensity mode {mode!r}")
    trt = ds.require_treatment()
    by_age = {}
    for age in np.unique(ds.age):
        rows = ds.age == age
        by_age[int(age)] = float(trt[rows].mean())
    return PropensityEstimate(by_age=by_age, fallback=float(trt.mean()))


def fit_meta(ds: Dataset, spec: MetaSpec) -> MetaModel:
    """Fit whichever meta-learner the spec names."""
    if spec.learner == S_LEARNER:
        return fit_s_learner(ds, spec)
    if spec.learner == T_LEARNER:
        return fit_t_learner(ds, spec)
    e = estimate_propensity(ds, spec.propensity_mode, spec.propensity_constant)
    return fit_x_learner(ds, spec, e)


def _unique_cov_rows(cov_block: np.ndarray):
    """Deduplicate covariate rows for curve averaging (weights = multiplicity)."""
    n = cov_block.shape[0]
    if cov_block.shape[1] == 0:
        return np.empty((1, 0)), np.array([float(n)])
    uniq, counts = np.unique(cov_block, axis=0, return_counts=True)
    return uniq, counts.astype(np.float64)


def _mean_curve(model, assembler, ages, cov_unique, weights, treatment=None) -> np.ndarray:
    """E_X of model predictions per age, age (and treatment) overridden."""
    n_u = cov_unique.shape[0]
    n_ages = len(ages)
    wsum = weights.sum()
    n_cols = len(assembler.columns)
    per_chunk = max(1, int(_EVAL_CELL_BUDGET / max(1, n_u * n_cols)))
    out = np.empty(n_ages)
    for lo in range(0, n_ages, per_chunk):
        chunk = ages[lo : lo + per_chunk]
        rep_ages = np.repeat(np.asarray(chunk, dtype=np.float64), n_u)
        tiled = np.tile(cov_unique, (len(chunk), 1))
        dm = assembler.build(rep_ages, tiled, treatment)
        preds = learners.predict(model, dm).reshape(len(chunk), n_u)
        out[lo : lo + len(chunk)] = preds @ weights / wsum
    return out


def _age_flags(model, ages, arm: int | None = None) -> tuple:
    lo, hi = model.age_support
    flags = []
    for a in ages:
        f = []
        if a < lo or a > hi:
            f.append(FLAG_EXTRAPOLATED)
        elif arm is not None and int(a) not in model.arm_ages[arm]:
            f.append(FLAG_NO_CONTROL if arm == 0 else FLAG_NO_TREATED)
        flags.append(tuple(f))
    return tuple(flags)


def acef(model: MetaModel, ds: Dataset, w: int, ages) -> CurveEstimate:
    """Age-conditioned expectation curve for arm ``w`` under S or T models.

    Ages outside the training support yield flagged (not erroring) points;
    so do ages where the T-learner's arm had no training rows.
    """
    if w not in (0, 1):
        raise DomainError(f"treatment arm must be 0 or 1, got {w!r}")
    ages = np.asarray(ages, dtype=np.int64)
    if len(ages) == 0:
        raise InsufficientDataError("ages must be nonempty")
    kind = ACEF_TREATED if w == 1 else ACEF_CONTROL
    if isinstance(model, SLearnerModel):
        cov_unique, weights = _unique_cov_rows(
            model.assembler.encoding.transform(ds.covariates, ds.n)
        )
        values = _mean_curve(
            model.model, model.assembler, ages, cov_unique, weights, treatment=float(w)
        )
        return CurveEstimate(ages, values, kind, flags=_age_flags(model, ages, arm=w))
    if isinstance(model, TLearnerModel):
        assembler = model.assembler_treated if w == 1 else model.assembler_control
        fitted = model.model_treated if w == 1 else model.model_control
        cov_unique, weights = _unique_cov_rows(
            assembler.encoding.transform(ds.covariates, ds.n)
        )
        values = _mean_curve(fitted, assembler, ages, cov_unique, weights)
        return CurveEstimate(ages, values, kind, flags=_age_flags(model, ages, arm=w))
    raise ConfigError("the X-learner does not expose per-arm expectation curves")


def acte(model: MetaModel, ds: Dataset, ages) -> CurveEstimate:
    """Age-conditioned treatment effect curve.

    S/T: pointwise difference of the two ACEF curves.  X: the
    propensity-weighted blend of the two imputed-effect regressions.
    """
    ages = np.asarray(ages, dtype=np.int64)
    if len(ages) == 0:
        raise InsufficientDataError("ages must be nonempty")
    if isinstance(model, (SLearnerModel, TLearnerModel)):
        treated = acef(model, ds, 1, ages)
        control = acef(model, ds, 0, ages)
        flags = tuple(
            tuple(sorted(set(a) | set(b))) for a, b in zip(treated.flags, control.flags)
        )
        return CurveEstimate(ages, treated.values - control.values, ACTE, flags=flags)
    cov_unique, weights = _unique_cov_rows(
        model.assembler_effect.encoding.transform(ds.covariates, ds.n)
    )
    tau_control = _mean_curve(
        model.effect_on_control, model.assembler_effect, ages, cov_unique, weights
    )
    tau_treated = _mean_curve(
        model.effect_on_treated, model.assembler_effect, ages, cov_unique, weights
    )
    e = np.array([model.propensity.at(int(a)) for a in ages])
    values = e * tau_control + (1.0 - e) * tau_treated
    flags = []
    for a, f0, f1 in zip(ages, _age_flags(model, ages, 0), _age_flags(model, ages, 1)):
        flags.append(tuple(sorted(set(f0) | set(f1))))
    return CurveEstimate(ages, values, ACTE, flags=tuple(flags))


def x_learner_component_curves(model: XLearnerModel, ds: Dataset, ages):
    """The two stage-two curves (control-rows, treated-rows) before blending."""
    ages = np.asarray(ages, dtype=np.int64)
    cov_unique, weights = _unique_cov_rows(
        model.assembler_effect.encoding.transform(ds.covariates, ds.n)
    )
    tau_control = _mean_curve(
        model.effect_on_control, model.assembler_effect, ages, cov_unique, weights
    )
    tau_treated = _mean_curve(
        model.effect_on_treated, model.assembler_effect, ages, cov_unique, weights
    )
    return tau_control, tau_treated


def smooth_curve(curve: CurveEstimate, df: int = 6) -> CurveEstimate:
    """Degree-``df`` polynomial least-squares smooth, evaluated on the same grid.

    Stands in for the GAM overlay used on raw age curves; bands are smoothed
    with the identical projection when present.
    """
    if df < 1:
        raise ConfigError("df must be >= 1")
    distinct = len(np.unique(curve.ages))
    if distinct < df + 1:
        raise InsufficientDataError(
            f"need at least {df + 1} distinct ages for a degree-{df} smooth, got {distinct}"
        )
    x = curve.ages.astype(np.float64)

    def smooth(values):
        poly = np.polynomial.Polynomial.fit(x, values, deg=df)
        return poly(x)

    lower = None if curve.lower is None else smooth(curve.lower)
    upper = None if curve.upper is None else smooth(curve.upper)
    if lower is not None:
        hi = np.maximum(lower, upper)  # projections may graze past each other
        lower = np.minimum(lower, upper)
        upper = hi
    return CurveEstimate(curve.ages, smooth(curve.values), curve.kind, lower, upper, curve.flags)


def _regressor_spec_to_dict(spec: RegressorSpec) -> dict:
    if spec.kind == OLS_SPLINE:
        return {
            "kind": spec.kind,
            "spline": {
                "a_peak": spec.spline.a_peak,
                "include_intercept": spec.spline.include_intercept,
            },
        }
    rf = spec.rf
    return {
        "kind": spec.kind,
        "rf": {
            "n_trees": rf.n_trees,
            "mtry": rf.mtry,
            "min_node_size": rf.min_node_size,
            "honesty_fraction": rf.honesty_fraction,
            "subsample_fraction": rf.subsample_fraction,
            "seed": rf.seed,
        },
    }


def _regressor_spec_from_dict(data: dict) -> RegressorSpec:
    if data["kind"] == OLS_SPLINE:
        from .basis import SplineSpec

        return RegressorSpec.ols(SplineSpec(**data["spline"]))
    from .learners import RfHyperparams

    return RegressorSpec.honest_rf(RfHyperparams(**data["rf"]))


def meta_spec_to_dict(spec: MetaSpec) -> dict:
    out = {
        "learner": spec.learner,
        "base_control": _regressor_spec_to_dict(spec.base_control),
        "propensity_mode": spec.propensity_mode,
        "propensity_constant": spec.propensity_constant,
    }
    if spec.base_treated is not None:
        out["base_treated"] = _regressor_spec_to_dict(spec.base_treated)
    if spec.base_effect is not None:
        out["base_effect"] = _regressor_spec_to_dict(spec.base_effect)
    return out


def meta_spec_from_dict(data: dict) -> MetaSpec:
    return MetaSpec(
        learner=data["learner"],
        base_control=_regressor_spec_from_dict(data["base_control"]),
        base_treated=_regressor_spec_from_dict(data["base_treated"])
        if "base_treated" in data
        else None,
        base_effect=_regressor_spec_from_dict(data["base_effect"])
        if "base_effect" in data
        else None,
        propensity_mode=data["propensity_mode"],
        propensity_constant=data["propensity_constant"],
    )


def _encoding_to_dict(enc: FixedEffectsEncoding) -> dict:
    return {
        "schema": [list(pair) for pair in enc.schema],
        "vocabulary": {k: list(v) for k, v in enc.vocabulary.items()},
        "columns": list(enc.columns),
    }


def _encoding_from_dict(data: dict) -> FixedEffectsEncoding:
    return FixedEffectsEncoding(
        schema=tuple((n, k) for n, k in data["schema"]),
        vocabulary={k: tuple(v) for k, v in data["vocabulary"].items()},
        columns=tuple(data["columns"]),
    )


def meta_model_to_dict(model: MetaModel) -> dict:
    """Serialize a fitted meta-model (round-trip stable on predictions)."""
    common = {
        "format_version": learners.SERIALIZATION_VERSION,
        "spec": meta_spec_to_dict(model.spec),
        "age_support": list(model.age_support),
        "arm_ages": [sorted(model.arm_ages[0]), sorted(model.arm_ages[1])],
    }
    if isinstance(model, SLearnerModel):
        common["learner"] = S_LEARNER
        common["encoding"] = _encoding_to_dict(model.assembler.encoding)
        common["model"] = learners.model_to_dict(model.model)
        return common
    common["encoding"] = _encoding_to_dict(model.assembler_control.encoding)
    common["model_control"] = learners.model_to_dict(model.model_control)
    common["model_treated"] = learners.model_to_dict(model.model_treated)
    if isinstance(model, TLearnerModel):
        common["learner"] = T_LEARNER
        return common
    common["learner"] = X_LEARNER
    common["effect_on_control"] = learners.model_to_dict(model.effect_on_control)
    common["effect_on_treated"] = learners.model_to_dict(model.effect_on_treated)
    common["propensity"] = {
        "by_age": {str(k): v for k, v in model.propensity.by_age.items()},
        "fallback": model.propensity.fallback,
    }
    return common


def meta_model_from_dict(data: dict) -> MetaModel:
    if data.get("format_version") != learners.SERIALIZATION_VERSION:
        raise SchemaError(f"unsupported meta-model format version {data.get('format_version')!r}")
    spec = meta_spec_from_dict(data["spec"])
    encoding = _encoding_from_dict(data["encoding"])
    support = tuple(data["age_support"])
    arm_ages = (frozenset(data["arm_ages"][0]), frozenset(data["arm_ages"][1]))
    if data["learner"] == S_LEARNER:
        return SLearnerModel(
            spec,
            learners.model_from_dict(data["model"]),
            _Assembler(spec.base_control, encoding, with_treatment=True),
            support,
            arm_ages,
        )
    model0 = learners.model_from_dict(data["model_control"])
    model1 = learners.model_from_dict(data["model_treated"])
    asm0 = _Assembler(spec.base_control, encoding, with_treatment=False)
    asm1 = _Assembler(spec.base_treated, encoding, with_treatment=False)
    if data["learner"] == T_LEARNER:
        return TLearnerModel(spec, model0, model1, asm0, asm1, support, arm_ages)
    propensity = PropensityEstimate(
        by_age={int(k): v for k, v in data["propensity"]["by_age"].items()},
        fallback=data["propensity"]["fallback"],
    )
    return XLearnerModel(
        spec,
        model0,
        model1,
        learners.model_from_dict(data["effect_on_control"]),
        learners.model_from_dict(data["effect_on_treated"]),
        propensity,
        asm0,
        asm1,
        _Assembler(spec.base_effect, encoding, with_treatment=False),
        support,
        arm_ages,
    )
