import datetime as dt

import numpy as np
import pytest

from acte.dataset import CATEGORICAL, NUMERIC, Dataset


def make_dataset(
    ages,
    outcomes,
    treatment=None,
    player_ids=None,
    covariates=None,
    schema=(),
    **optional,
):
    """Small hand-rolled Dataset for unit tests."""
    n = len(ages)
    if player_ids is None:
        player_ids = [f"p{i}" for i in range(n)]
    dates = [dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(n)]
    if treatment is not None:
        optional["treatment"] = np.asarray(treatment, dtype=np.int64)
    return Dataset.build(
        np.array(player_ids, dtype=object),
        np.array(dates, dtype="datetime64[D]"),
        np.asarray(ages, dtype=np.int64),
        np.asarray(outcomes, dtype=np.float64),
        "outcome",
        tuple(schema),
        covariates or {},
        **optional,
    )


@pytest.fixture
def team_dataset():
    """Six rows, one categorical covariate with levels A < B < C."""
    return make_dataset(
        ages=[24, 25, 26, 27, 28, 29],
        outcomes=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        treatment=[0, 1, 0, 1, 0, 1],
        covariates={"team": np.array(["A", "B", "C", "A", "B", "C"], dtype=object)},
        schema=(("team", CATEGORICAL),),
    )


__all__ = ["make_dataset", "CATEGORICAL", "NUMERIC"]
