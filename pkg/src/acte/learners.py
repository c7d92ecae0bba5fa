"""Base outcome regressors: least squares and an honest random forest.

Both learners consume a ready-made design matrix (see ``acte.meta`` for how
age splines, fixed effects, and the treatment flag are assembled) and produce
a :class:`FittedOutcomeModel` whose predictions are deterministic given the
fit seed.  Fitted models remember the column layout they were trained on and
refuse mismatched inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _forest
from .basis import SplineSpec
from .errors import ConfigError, DomainError, InsufficientDataError, SchemaError
from .parallel import thread_map

OLS_SPLINE = "ols_spline"
HONEST_RF = "honest_rf"

SERIALIZATION_VERSION = 1


@dataclass(frozen=True)
class RfHyperparams:
    """Honest forest settings.

    ``mtry=None`` means ceil(p/3) features per split, chosen at fit time.
    Each tree draws disjoint structure/estimation pools (a random
    ``honesty_fraction`` split of the rows) and then resamples within each
    pool with replacement.
    """

    n_trees: int = 500
    mtry: int | None = None
    min_node_size: int = 5
    honesty_fraction: float = 0.5
    subsample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be >= 1")
        if not 0.0 < self.honesty_fraction < 1.0:
            raise ConfigError("honesty_fraction must be in (0, 1)")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ConfigError("subsample_fraction must be in (0, 1]")


@dataclass(frozen=True)
class RegressorSpec:
    """Which base learner to use, with its learner-specific settings."""

    kind: str
    spline: SplineSpec | None = None
    rf: RfHyperparams | None = None

    def __post_init__(self):
        if self.kind == OLS_SPLINE:
            if self.spline is None or self.rf is not None:
                raise ConfigError("ols_spline spec needs spline settings only")
        elif self.kind == HONEST_RF:
            if self.rf is None or self.spline is not None:
                raise ConfigError("honest_rf spec needs rf settings only")
        else:
            raise ConfigError(f"unknown learner kind {self.kind!r}")

    @staticmethod
    def ols(spline: SplineSpec | None = None) -> "RegressorSpec":
        return RegressorSpec(OLS_SPLINE, spline=spline or SplineSpec())

    @staticmethod
    def honest_rf(rf: RfHyperparams | None = None) -> "RegressorSpec":
        return RegressorSpec(HONEST_RF, rf=rf or RfHyperparams())

    def with_seed(self, seed: int) -> "RegressorSpec":
        if self.kind != HONEST_RF:
            return self
        return RegressorSpec(HONEST_RF, rf=_replace_seed(self.rf, seed))


def _replace_seed(rf: RfHyperparams, seed: int) -> RfHyperparams:
    return RfHyperparams(
        n_trees=rf.n_trees,
        mtry=rf.mtry,
        min_node_size=rf.min_node_size,
        honesty_fraction=rf.honesty_fraction,
        subsample_fraction=rf.subsample_fraction,
        seed=int(seed),
    )


@dataclass(frozen=True)
class DesignMatrix:
    """A float matrix plus its column names (the model's schema fingerprint)."""

    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise SchemaError(
                f"design matrix shape {v.shape} does not match {len(self.columns)} columns"
            )
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TreeView:
    """Structural view of one fitted tree (used by honesty checks and tests)."""

    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    structure_ids: np.ndarray  # training-row draws used to choose splits
    estimation_ids: np.ndarray  # training-row draws used for leaf means


@dataclass(frozen=True)
class _Forest:
    hyper: RfHyperparams
    mtry: int
    offsets: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    structure_ids: list = field(repr=False, default_factory=list)
    estimation_ids: list = field(repr=False, default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1

    def tree(self, t: int) -> TreeView:
        lo, hi = self.offsets[t], self.offsets[t + 1]
        return TreeView(
            feature=self.feature[lo:hi],
            threshold=self.threshold[lo:hi],
            left=self.left[lo:hi],
            right=self.right[lo:hi],
            value=self.value[lo:hi],
            structure_ids=self.structure_ids[t],
            estimation_ids=self.estimation_ids[t],
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        _forest.forest_predict(
            self.offsets,
            self.feature,
            self.threshold,
            self.left,
            self.right,
            self.value,
            np.ascontiguousarray(X, dtype=np.float64),
            out,
        )
        return out


@dataclass(frozen=True)
class FittedOutcomeModel:
    """A trained base learner bound to the column layout it was trained on."""

    spec: RegressorSpec
    columns: tuple[str, ...]
    coefficients: np.ndarray | None = None
    forest: _Forest | None = None

    def predict(self, features: DesignMatrix) -> np.ndarray:
        return predict(self, features)


def fit(spec: RegressorSpec, features: DesignMatrix, targets) -> FittedOutcomeModel:
    """Train the base learner given by ``spec`` on a design matrix.

    Least squares uses the minimum-norm solution, so exactly collinear
    columns (routine with fixed-effect dummies) are handled without error.
    """
    y = np.asarray(targets, dtype=np.float64)
    X = features.values
    if X.shape[0] != y.shape[0]:
        raise SchemaError(f"{X.shape[0]} feature rows vs {y.shape[0]} targets")
    if X.shape[0] < 2:
        raise InsufficientDataError("need at least 2 rows to fit")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise DomainError("features and targets must be finite")
    if spec.kind == OLS_SPLINE:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return FittedOutcomeModel(spec=spec, columns=features.columns, coefficients=coef)
    return FittedOutcomeModel(
        spec=spec, columns=features.columns, forest=_fit_forest(X, y, spec.rf)
    )


def predict(model: FittedOutcomeModel, features: DesignMatrix) -> np.ndarray:
    """Predict outcomes; rejects inputs whose column layout differs from training."""
    if features.columns != model.columns:
        raise SchemaError(
            f"feature columns {features.columns} do not match "
            f"training columns {model.columns}"
        )
    if model.coefficients is not None:
        return features.values @ model.coefficients
    return model.forest.predict(features.values)


def _fit_forest(X: np.ndarray, y: np.ndarray, hyper: RfHyperparams) -> _Forest:
    n, p = X.shape
    if p < 1:
        raise InsufficientDataError("forest needs at least one feature")
    mtry = hyper.mtry if hyper.mtry is not None else -(p // -3)
    mtry = min(mtry, p)
    X = np.ascontiguousarray(X)
    y_centered = y - float(np.mean(y))  # scoring only; leaf means use raw targets
    seeds = np.random.SeedSequence(hyper.seed).spawn(hyper.n_trees)

    def build(t):
        rng = np.random.default_rng(seeds[t])
        perm = rng.permutation(n)
        cut = min(max(int(round(n * hyper.honesty_fraction)), 1), n - 1)
        struct_pool, est_pool = perm[:cut], perm[cut:]
        n_s = max(1, int(round(len(struct_pool) * hyper.subsample_fraction)))
        n_e = max(1, int(round(len(est_pool) * hyper.subsample_fraction)))
        struct_ids = struct_pool[rng.integers(0, len(struct_pool), n_s)]
        est_ids = est_pool[rng.integers(0, len(est_pool), n_e)]
        rand = rng.random((mtry + 4) * (2 * n_s // hyper.min_node_size + 16) + 64)
        cap = 2 * n_s + 2
        feat = np.empty(cap, dtype=np.int64)
        thr = np.zeros(cap, dtype=np.float64)
        left = np.zeros(cap, dtype=np.int64)
        right = np.zeros(cap, dtype=np.int64)
        value = np.empty(cap, dtype=np.float64)
        est_count = np.empty(cap, dtype=np.int64)
        n_nodes = _forest.build_tree(
            X[struct_ids],
            y_centered[struct_ids],
            X[est_ids],
            y[est_ids],
            hyper.min_node_size,
            mtry,
            rand,
            feat,
            thr,
            left,
            right,
            value,
            est_count,
        )
        sl = slice(0, n_nodes)
        return (
            feat[sl].copy(),
            thr[sl].copy(),
            left[sl].copy(),
            right[sl].copy(),
            value[sl].copy(),
            struct_ids,
            est_ids,
        )

    parts = thread_map(build, range(hyper.n_trees))
    sizes = [len(part[0]) for part in parts]
    offsets = np.zeros(hyper.n_trees + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    return _Forest(
        hyper=hyper,
        mtry=mtry,
        offsets=offsets,
        feature=np.concatenate([part[0] for part in parts]),
        threshold=np.concatenate([part[1] for part in parts]),
        left=np.concatenate([part[2] for part in parts]),
        right=np.concatenate([part[3] for part in parts]),
        value=np.concatenate([part[4] for part in parts]),
        structure_ids=[part[5] for part in parts],
        estimation_ids=[part[6] for part in parts],
    )


def assert_honest(model: FittedOutcomeModel) -> None:
    """Raise if any tree's structure and estimation row sets overlap."""
    if model.forest is None:
        raise ConfigError("honesty applies to forest models only")
    for t in range(model.forest.n_trees):
        tree = model.forest.tree(t)
        overlap = np.intersect1d(tree.structure_ids, tree.estimation_ids)
        if overlap.size:
            raise AssertionError(
                f"tree {t}: structure and estimation sets share rows {overlap[:5]}"
            )


def model_to_dict(model: FittedOutcomeModel) -> dict:
    """JSON-ready representation; round-trips exactly through model_from_dict."""
    spec = model.spec
    out = {
        "format_version": SERIALIZATION_VERSION,
        "kind": spec.kind,
        "columns": list(model.columns),
    }
    if spec.kind == OLS_SPLINE:
        out["spline"] = {
            "a_peak": spec.spline.a_peak,
            "include_intercept": spec.spline.include_intercept,
        }
        out["coefficients"] = [_f(c) for c in model.coefficients]
        return out
    rf = spec.rf
    out["rf"] = {
        "n_trees": rf.n_trees,
        "mtry": rf.mtry,
        "min_node_size": rf.min_node_size,
        "honesty_fraction": rf.honesty_fraction,
        "subsample_fraction": rf.subsample_fraction,
        "seed": rf.seed,
    }
    forest = model.forest
    out["forest"] = {
        "mtry": forest.mtry,
        "offsets": forest.offsets.tolist(),
        "feature": forest.feature.tolist(),
        "threshold": [_f(v) for v in forest.threshold],
        "left": forest.left.tolist(),
        "right": forest.right.tolist(),
        "value": [_f(v) for v in forest.value],
        "structure_ids": [ids.tolist() for ids in forest.structure_ids],
        "estimation_ids": [ids.tolist() for ids in forest.estimation_ids],
    }
    return out


def model_from_dict(data: dict) -> FittedOutcomeModel:
    version = data.get("format_version")
    if version != SERIALIZATION_VERSION:
        raise SchemaError(f"unsupported model format version {version!r}")
    columns = tuple(data["columns"])
    if data["kind"] == OLS_SPLINE:
        spline = SplineSpec(
            a_peak=data["spline"]["a_peak"],
            include_intercept=data["spline"]["include_intercept"],
        )
        return FittedOutcomeModel(
            spec=RegressorSpec.ols(spline),
            columns=columns,
            coefficients=np.asarray(data["coefficients"], dtype=np.float64),
        )
    if data["kind"] != HONEST_RF:
        raise SchemaError(f"unknown serialized learner kind {data['kind']!r}")
    rf = RfHyperparams(**data["rf"])
    fr = data["forest"]
    forest = _Forest(
        hyper=rf,
        mtry=fr["mtry"],
        offsets=np.asarray(fr["offsets"], dtype=np.int64),
        feature=np.asarray(fr["feature"], dtype=np.int64),
        threshold=np.asarray(fr["threshold"], dtype=np.float64),
        left=np.asarray(fr["left"], dtype=np.int64),
        right=np.asarray(fr["right"], dtype=np.int64),
        value=np.asarray(fr["value"], dtype=np.float64),
        structure_ids=[np.asarray(ids, dtype=np.int64) for ids in fr["structure_ids"]],
        estimation_ids=[np.asarray(ids, dtype=np.int64) for ids in fr["estimation_ids"]],
    )
    return FittedOutcomeModel(
        spec=RegressorSpec.honest_rf(rf), columns=columns, forest=forest
    )


def _f(v) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise DomainError("non-finite value in serialized model")
    return v
