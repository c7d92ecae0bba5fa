"""Percentile-bootstrap confidence bands and curve MSE evaluation.

Each replicate refits the full meta-learner on a with-replacement resample
and re-evaluates the effect curve; bands are empirical quantiles of the
per-age replicate estimates, paired with the full-sample point estimate.
Replicates derive their RNG streams from (seed, replicate index), so
parallel and serial runs produce identical bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import AlignmentError, ConfigError, ReplicateFailureError
from .meta import CurveEstimate, MetaSpec, S_LEARNER, acte, fit_meta
from .parallel import thread_map

RESAMPLE_ROW = "row"
RESAMPLE_PLAYER = "player"

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, band level (alpha=0.10 gives 90% bands), resampling unit."""

    B: int = 200
    alpha: float = 0.10
    resample_unit: str = RESAMPLE_ROW
    seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ConfigError("B must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        if self.resample_unit not in (RESAMPLE_ROW, RESAMPLE_PLAYER):
            raise ConfigError(f"unknown resample unit {self.resample_unit!r}")


def _derived_spec(meta_spec: MetaSpec, seed_seq) -> MetaSpec:
    s0, s1, s2 = (int(v) for v in seed_seq.generate_state(3, np.uint64))
    return meta_spec.with_seeds(s0, s1, s2)


def _player_groups(ds: Dataset):
    players, inverse = np.unique(ds.player_id.astype(str), return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(players) + 1))
    groups = [order[bounds[i] : bounds[i + 1]] for i in range(len(players))]
    return players, groups


def replicate_curve_samples(
    ds: Dataset, meta_spec: MetaSpec, ages, cfg: BootstrapConfig
) -> np.ndarray:
    """The B x n_ages matrix of per-replicate effect-curve estimates.

    A resample that lost a treatment arm (or, for T/X fits, left an arm with
    a single row) is redrawn, up to 100 attempts per replicate.
    """
    ages = np.asarray(ages, dtype=np.int64)
    trt = ds.require_treatment()
    n = ds.n
    min_arm = 1 if meta_spec.learner == S_LEARNER else 2
    if cfg.resample_unit == RESAMPLE_PLAYER:
        players, groups = _player_groups(ds)

    def one_replicate(b: int) -> np.ndarray:
        root = np.random.SeedSequence((cfg.seed, b))
        draw_seq, model_seq = root.spawn(2)
        rng = np.random.default_rng(draw_seq)
        for _ in range(_MAX_REDRAWS):
            if cfg.resample_unit == RESAMPLE_ROW:
                idx = rng.integers(0, n, n)
            else:
                chosen = rng.integers(0, len(players), len(players))
                idx = np.concatenate([groups[c] for c in chosen])
            counts = np.bincount(trt[idx], minlength=2)
            if counts[0] >= min_arm and counts[1] >= min_arm:
                sub = ds.take(idx)
                model = fit_meta(sub, _derived_spec(meta_spec, model_seq))
                return acte(model, sub, ages).values
        raise ReplicateFailureError(
            f"replicate {b}: no resample with both arms after {_MAX_REDRAWS} attempts"
        )

    rows = thread_map(one_replicate, range(cfg.B))
    return np.vstack(rows)


def percentile_bands(samples: np.ndarray, alpha: float):
    """(alpha/2, 1 - alpha/2) quantiles per age, linearly interpolated."""
    lower = np.quantile(samples, alpha / 2.0, axis=0, method="linear")
    upper = np.quantile(samples, 1.0 - alpha / 2.0, axis=0, method="linear")
    return lower, upper


def bootstrap_curve(
    ds: Dataset, meta_spec: MetaSpec, ages, cfg: BootstrapConfig
) -> CurveEstimate:
    """Effect curve from the full sample, banded by bootstrap quantiles."""
    ages = np.asarray(ages, dtype=np.int64)
    point = acte(fit_meta(ds, meta_spec), ds, ages)
    samples = replicate_curve_samples(ds, meta_spec, ages, cfg)
    lower, upper = percentile_bands(samples, cfg.alpha)
    return point.with_bands(lower, upper)


def curve_mse(estimated: CurveEstimate, truth: CurveEstimate):
    """(mean squared error over ages, per-age squared errors)."""
    if not np.array_equal(estimated.ages, truth.ages):
        raise AlignmentError("curves are on different age grids")
    per_age = (estimated.values - truth.values) ** 2
    return float(per_age.mean()), per_age
