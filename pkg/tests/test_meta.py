import numpy as np
import pytest

from acte.basis import SplineSpec
from acte.errors import (
    ConfigError,
    DegenerateArmError,
    DomainError,
    InsufficientDataError,
    PropensityMissingAgeError,
    SchemaError,
)
from acte.learners import RegressorSpec, RfHyperparams
from acte.meta import (
    ACEF_CONTROL,
    ACTE,
    CurveEstimate,
    MetaSpec,
    PropensityEstimate,
    acef,
    acte,
    estimate_propensity,
    fit_meta,
    fit_s_learner,
    fit_t_learner,
    fit_x_learner,
    meta_model_from_dict,
    meta_model_to_dict,
    smooth_curve,
    x_learner_component_curves,
)
from acte.simlab import ScenarioSpec, generate

from conftest import make_dataset


def ols_spec(intercept=True, peak=25.0):
    return RegressorSpec.ols(SplineSpec(a_peak=peak, include_intercept=intercept))


def rf_spec(**kw):
    kw.setdefault("n_trees", 40)
    kw.setdefault("seed", 5)
    return RegressorSpec.honest_rf(RfHyperparams(**kw))


def four_age_dataset(rng, n=120):
    """Covariate-free panel over four distinct ages (the OLS basis with an
    intercept is full-rank there, so per-age means are exactly recoverable)."""
    ages = rng.choice([21, 23, 27, 30], size=n)
    trt = (rng.random(n) < 0.4).astype(int)
    y = rng.normal(0, 1, n) + 0.3 * ages + 1.5 * trt
    return make_dataset(ages=ages, outcomes=y, treatment=trt)


class TestPropensity:
    def test_empirical_by_age_four_decimals(self):
        # 9616 treated of 11331 rows at one age -> 0.8486
        n1, n0 = 9616, 11331 - 9616
        ds = make_dataset(
            ages=[25] * (n1 + n0) + [26],
            outcomes=[0.0] * (n1 + n0 + 1),
            treatment=[1] * n1 + [0] * n0 + [0],
        )
        e = estimate_propensity(ds)
        assert round(e.at(25), 4) == 0.8486

    def test_all_treated_age_gives_one(self):
        ds = make_dataset(ages=[30, 30, 31], outcomes=[0.0] * 3, treatment=[1, 1, 0])
        assert estimate_propensity(ds).at(30) == 1.0

    def test_constant_mode(self):
        ds = make_dataset(ages=[25], outcomes=[0.0], treatment=[1])
        e = estimate_propensity(ds, mode="constant", constant=0.151)
        assert e.at(25) == 0.151
        assert e.at(99) == 0.151  # fallback everywhere

    def test_fallback_covers_unseen_age(self):
        ds = make_dataset(ages=[25, 25], outcomes=[0.0, 0.0], treatment=[1, 0])
        e = estimate_propensity(ds)
        assert e.at(31) == 0.5  # global treated fraction

    def test_missing_age_without_fallback(self):
        e = PropensityEstimate(by_age={25: 0.5}, fallback=None)
        with pytest.raises(PropensityMissingAgeError):
            e.at(26)

    def test_range_validation(self):
        with pytest.raises(DomainError):
            PropensityEstimate(by_age={25: 1.5})


class TestSLearner:
    def test_constant_outcome_gives_zero_effect(self):
        rng = np.random.default_rng(0)
        ages = rng.choice([20, 23, 26, 29, 33], size=60)
        trt = (rng.random(60) < 0.5).astype(int)
        ds = make_dataset(ages=ages, outcomes=np.full(60, 3.25), treatment=trt)
        grid = np.arange(20, 34)
        for base in (ols_spec(intercept=True), rf_spec()):
            model = fit_s_learner(ds, MetaSpec("s", base))
            curve = acte(model, ds, grid)
            assert np.all(np.abs(curve.values) < 1e-9)

    def test_degenerate_arm_rejected(self):
        ds = make_dataset(ages=[25, 26], outcomes=[1.0, 2.0], treatment=[1, 1])
        with pytest.raises(DegenerateArmError):
            fit_s_learner(ds, MetaSpec("s", ols_spec()))

    def test_spec_shape_validation(self):
        with pytest.raises(ConfigError):
            MetaSpec("s", ols_spec(), base_treated=ols_spec())
        with pytest.raises(ConfigError):
            MetaSpec("t", ols_spec(), base_effect=ols_spec())
        with pytest.raises(ConfigError):
            MetaSpec("q", ols_spec())


class TestTLearner:
    def test_separable_constants(self):
        rng = np.random.default_rng(1)
        ages = rng.choice([21, 24, 27, 30], size=80)
        trt = (rng.random(80) < 0.5).astype(int)
        y = np.where(trt == 1, 2.0, 0.0)
        ds = make_dataset(ages=ages, outcomes=y, treatment=trt)
        grid = np.arange(21, 31)
        for base in (ols_spec(intercept=True), rf_spec()):
            curve = acte(fit_t_learner(ds, MetaSpec("t", base)), ds, grid)
            assert np.allclose(curve.values, 2.0, atol=1e-9)

    def test_matches_per_age_group_means(self):
        # brute-force oracle: treated mean minus control mean at each age
        rng = np.random.default_rng(2)
        ds = four_age_dataset(rng)
        model = fit_t_learner(ds, MetaSpec("t", ols_spec(intercept=True)))
        grid = np.array([21, 23, 27, 30])
        curve = acte(model, ds, grid)
        for i, a in enumerate(grid):
            at_age = ds.age == a
            oracle = ds.outcome[at_age & (ds.treatment == 1)].mean() - ds.outcome[
                at_age & (ds.treatment == 0)
            ].mean()
            assert abs(curve.values[i] - oracle) < 1e-8

    def test_label_swap_negates_curve_exactly(self):
        rng = np.random.default_rng(3)
        ds = four_age_dataset(rng)
        swapped = make_dataset(
            ages=ds.age, outcomes=ds.outcome, treatment=1 - ds.treatment
        )
        grid = np.array([21, 23, 27, 30])
        for base in (ols_spec(intercept=True), rf_spec()):
            spec = MetaSpec("t", base)
            original = acte(fit_t_learner(ds, spec), ds, grid)
            flipped = acte(fit_t_learner(swapped, spec), swapped, grid)
            assert np.array_equal(flipped.values, -original.values)

    def test_acte_is_acef_difference_exactly(self):
        rng = np.random.default_rng(4)
        ds = four_age_dataset(rng)
        model = fit_t_learner(ds, MetaSpec("t", rf_spec()))
        grid = np.array([21, 23, 27, 30])
        diff = acef(model, ds, 1, grid).values - acef(model, ds, 0, grid).values
        assert np.array_equal(acte(model, ds, grid).values, diff)

    def test_missing_arm_age_flagged(self):
        ds = make_dataset(
            ages=[25, 25, 26, 26, 27],
            outcomes=[1.0, 2.0, 1.5, 2.5, 3.0],
            treatment=[0, 1, 0, 1, 0],  # no treated rows at 27
        )
        model = fit_t_learner(ds, MetaSpec("t", rf_spec()))
        curve = acte(model, ds, [25, 26, 27, 40])
        assert curve.flags[0] == ()
        assert "no_treated_rows" in curve.flags[2]
        assert "extrapolated" in curve.flags[3]


class TestXLearner:
    def _panel(self, seed=5, scenario=3):
        return generate(ScenarioSpec(scenario=scenario, n_players=60, seed=seed)).dataset

    def test_propensity_endpoints(self):
        ds = self._panel()
        grid = np.arange(18, 41)
        base = ols_spec(intercept=True)
        for const, pick in ((1.0, 0), (0.0, 1)):
            spec = MetaSpec(
                "x", base, propensity_mode="constant", propensity_constant=const
            )
            model = fit_meta(ds, spec)
            curve = acte(model, ds, grid)
            components = x_learner_component_curves(model, ds, grid)
            assert np.allclose(curve.values, components[pick], atol=1e-12)

    def test_blend_is_convex_combination(self):
        ds = self._panel(seed=6)
        grid = np.arange(18, 41)
        model = fit_meta(ds, MetaSpec("x", rf_spec()))
        curve = acte(model, ds, grid)
        tau0, tau1 = x_learner_component_curves(model, ds, grid)
        lo = np.minimum(tau0, tau1) - 1e-12
        hi = np.maximum(tau0, tau1) + 1e-12
        assert np.all(curve.values >= lo) and np.all(curve.values <= hi)

    def test_zero_noise_constant_data_gives_zero_imputed_effects(self):
        rng = np.random.default_rng(7)
        ages = rng.choice([22, 25, 28, 31], size=50)
        trt = (rng.random(50) < 0.5).astype(int)
        ds = make_dataset(ages=ages, outcomes=np.full(50, 1.5), treatment=trt)
        e = estimate_propensity(ds)
        model = fit_x_learner(ds, MetaSpec("x", ols_spec(intercept=True)), e)
        grid = np.array([22, 25, 28, 31])
        tau0, tau1 = x_learner_component_curves(model, ds, grid)
        assert np.all(np.abs(tau0) < 1e-9)
        assert np.all(np.abs(tau1) < 1e-9)
        assert np.all(np.abs(acte(model, ds, grid).values) < 1e-9)

    def test_x_ols_equals_t_ols(self):
        # with a shared span the stage-2 refits reproduce the arm-model
        # difference, so the blend is the T-learner curve for any e(a)
        ds = self._panel(seed=8)
        grid = np.arange(18, 41)
        base = ols_spec(intercept=False)
        t_curve = acte(fit_meta(ds, MetaSpec("t", base)), ds, grid)
        x_curve = acte(fit_meta(ds, MetaSpec("x", base)), ds, grid)
        assert np.allclose(t_curve.values, x_curve.values, atol=1e-6)

    def test_acef_not_defined_for_x(self):
        ds = self._panel(seed=9)
        model = fit_meta(ds, MetaSpec("x", ols_spec()))
        with pytest.raises(ConfigError):
            acef(model, ds, 1, [25])

    def test_propensity_gap_detected_at_fit(self):
        ds = self._panel(seed=10)
        e = PropensityEstimate(by_age={18: 0.5}, fallback=None)
        with pytest.raises(PropensityMissingAgeError):
            fit_x_learner(ds, MetaSpec("x", ols_spec()), e)


class TestCurves:
    def test_single_age_dataset_acef_is_mean_prediction(self):
        rng = np.random.default_rng(11)
        y = rng.normal(0, 1, 40)
        trt = np.array([0, 1] * 20)
        ds = make_dataset(ages=[25] * 40, outcomes=y, treatment=trt)
        model = fit_t_learner(ds, MetaSpec("t", rf_spec()))
        curve = acef(model, ds, 1, [25])
        # brute force: average the arm model's prediction over every record
        from acte import learners

        dm = model.assembler_treated.build(
            np.full(ds.n, 25.0), np.empty((ds.n, 0)), None
        )
        oracle = float(learners.predict(model.model_treated, dm).mean())
        assert abs(curve.values[0] - oracle) < 1e-12

    def test_outcome_shift_leaves_ols_acte_unchanged(self):
        rng = np.random.default_rng(12)
        ds = four_age_dataset(rng)
        shifted = make_dataset(ages=ds.age, outcomes=ds.outcome + 7.5, treatment=ds.treatment)
        grid = np.array([21, 23, 27, 30])
        spec = MetaSpec("t", ols_spec(intercept=True))
        a = acte(fit_meta(ds, spec), ds, grid)
        b = acte(fit_meta(shifted, spec), shifted, grid)
        assert np.allclose(a.values, b.values, atol=1e-8)

    def test_outcome_shift_preserves_rf_split_structure(self):
        rng = np.random.default_rng(13)
        ds = four_age_dataset(rng)
        shifted = make_dataset(ages=ds.age, outcomes=ds.outcome + 100.0, treatment=ds.treatment)
        spec = MetaSpec("t", rf_spec())
        m0 = fit_meta(ds, spec)
        m1 = fit_meta(shifted, spec)
        for arm_model0, arm_model1 in (
            (m0.model_control, m1.model_control),
            (m0.model_treated, m1.model_treated),
        ):
            assert np.array_equal(arm_model0.forest.feature, arm_model1.forest.feature)
            assert np.array_equal(arm_model0.forest.threshold, arm_model1.forest.threshold)
        grid = np.array([21, 23, 27, 30])
        a = acte(m0, ds, grid)
        b = acte(m1, shifted, grid)
        assert np.allclose(a.values, b.values, atol=1e-9)

    def test_extrapolation_flagged_not_error(self):
        rng = np.random.default_rng(14)
        ds = four_age_dataset(rng)
        model = fit_s_learner(ds, MetaSpec("s", ols_spec(intercept=True)))
        curve = acef(model, ds, 0, [15, 23, 45])
        assert "extrapolated" in curve.flags[0]
        assert curve.flags[1] == ()
        assert "extrapolated" in curve.flags[2]
        assert curve.kind == ACEF_CONTROL

    def test_curve_validation(self):
        with pytest.raises(SchemaError):
            CurveEstimate(np.array([25, 26]), np.array([1.0]), ACTE)
        with pytest.raises(DomainError):
            CurveEstimate(
                np.array([25]), np.array([1.0]), ACTE,
                lower=np.array([2.0]), upper=np.array([0.0]),
            )
        with pytest.raises(SchemaError):
            CurveEstimate(np.array([25]), np.array([1.0]), ACTE, lower=np.array([0.0]))

    def test_curve_serialization_stable(self):
        curve = CurveEstimate(
            np.array([25, 26]),
            np.array([1.5, 2.5]),
            ACTE,
            lower=np.array([1.0, 2.0]),
            upper=np.array([2.0, 3.0]),
            flags=((), ("extrapolated",)),
        )
        csv_text = curve.to_csv_string()
        assert csv_text.splitlines()[0] == "age,value,lower,upper,kind,flags"
        assert csv_text.splitlines()[2] == "26,2.5,2.0,3.0,ACTE,extrapolated"
        assert curve.to_csv_string() == csv_text
        assert curve.to_json_string() == curve.to_json_string()

    def test_point_outside_band_flagged(self):
        curve = CurveEstimate(np.array([25]), np.array([5.0]), ACTE)
        banded = curve.with_bands(np.array([1.0]), np.array([2.0]))
        assert "point_outside_band" in banded.flags[0]


class TestSmoothing:
    def test_flat_curve_reproduced(self):
        ages = np.arange(18, 41)
        curve = CurveEstimate(ages, np.full(len(ages), 2.0), ACTE)
        smoothed = smooth_curve(curve, df=6)
        assert np.allclose(smoothed.values, 2.0, atol=1e-9)

    def test_degree_three_polynomial_reproduced(self):
        ages = np.arange(18, 41)
        a = ages.astype(float)
        values = 0.5 - 0.2 * a + 0.01 * a**2 - 0.0002 * a**3
        smoothed = smooth_curve(CurveEstimate(ages, values, ACTE), df=6)
        assert np.allclose(smoothed.values, values, atol=1e-8)

    def test_bands_smoothed_alongside(self):
        ages = np.arange(18, 41)
        values = np.linspace(0.0, 2.0, len(ages))
        curve = CurveEstimate(ages, values, ACTE, lower=values - 1.0, upper=values + 1.0)
        smoothed = smooth_curve(curve, df=6)
        assert np.allclose(smoothed.lower, smoothed.values - 1.0, atol=1e-8)
        assert np.allclose(smoothed.upper, smoothed.values + 1.0, atol=1e-8)

    def test_too_few_distinct_ages(self):
        ages = np.array([20, 21, 22, 23, 24])
        with pytest.raises(InsufficientDataError):
            smooth_curve(CurveEstimate(ages, np.zeros(5), ACTE), df=6)


class TestSerialization:
    @pytest.mark.parametrize("learner", ["s", "t", "x"])
    def test_meta_model_round_trip(self, learner):
        ds = generate(ScenarioSpec(scenario=3, n_players=40, seed=15)).dataset
        spec = MetaSpec(learner, rf_spec(n_trees=8) if learner != "s" else rf_spec(n_trees=8))
        model = fit_meta(ds, spec)
        grid = np.arange(18, 41)
        back = meta_model_from_dict(meta_model_to_dict(model))
        assert np.array_equal(acte(model, ds, grid).values, acte(back, ds, grid).values)

    def test_numeric_covariate_round_trip_through_json(self):
        import json

        ds = generate(ScenarioSpec(scenario=3, n_players=30, seed=16)).dataset
        model = fit_meta(ds, MetaSpec("t", ols_spec(intercept=True)))
        payload = json.loads(json.dumps(meta_model_to_dict(model)))
        back = meta_model_from_dict(payload)
        grid = np.arange(18, 41)
        assert np.allclose(
            acte(model, ds, grid).values, acte(back, ds, grid).values, atol=0
        )
