"""Game-level panel data model, CSV ingestion, and preprocessing rules.

The preprocessing pipeline turns raw box-score rows into analysis rows:
rest treatment derived from the gap to the previous game, a minutes floor
on the previous game, an age window, and optional per-100-possession
normalization of outcome columns.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ChronologyError,
    DomainError,
    EmptyInputError,
    EncodingError,
    ParseError,
    SchemaError,
)

CATEGORICAL = "categorical"
NUMERIC = "numeric"

#: columns every ingestible CSV must carry (plus the outcome column).
REQUIRED_COLUMNS = ("player_id", "game_date", "age")
#: optional columns recognized by the ingester.
OPTIONAL_COLUMNS = ("prev_game_date", "prev_game_minutes", "possessions", "treatment")

Schema = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class GameRecord:
    """One unit-observation: a single player-game."""

    player_id: str
    game_date: dt.date
    age: int
    treatment: int | None
    covariates: dict
    outcome: float
    possessions: float | None = None
    prev_game_date: dt.date | None = None
    prev_game_minutes: float | None = None


@dataclass(frozen=True)
class PreprocessConfig:
    """Filter and normalization settings for raw game logs."""

    min_prev_minutes: float = 25.0
    age_min: int = 18
    age_max: int = 39
    rest_threshold_days: int = 1
    per100_stats: tuple[str, ...] = ()

    def __post_init__(self):
        if self.age_min > self.age_max:
            raise DomainError("age_min must be <= age_max")
        if self.min_prev_minutes < 0:
            raise DomainError("min_prev_minutes must be >= 0")
        if self.rest_threshold_days < 1:
            raise DomainError("rest_threshold_days must be >= 1")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Validated column-oriented collection of game records.

    Immutable after construction; all transforming operations return a new
    Dataset and leave the original untouched.
    """

    player_id: np.ndarray
    game_date: np.ndarray  # datetime64[D]; NaT not allowed
    age: np.ndarray  # int64
    outcome: np.ndarray  # float64
    outcome_name: str
    covariate_schema: Schema = ()
    covariates: dict = field(default_factory=dict)
    fe_vocabulary: dict = field(default_factory=dict)
    treatment: np.ndarray | None = None  # int64 in {0,1}
    possessions: np.ndarray | None = None  # float64, NaN = missing
    prev_game_date: np.ndarray | None = None  # datetime64[D], NaT = missing
    prev_game_minutes: np.ndarray | None = None  # float64, NaN = missing

    def __post_init__(self):
        n = len(self.player_id)
        if n < 1:
            raise EmptyInputError("a Dataset needs at least one record")
        for name, arr in self._column_items():
            if arr is not None and len(arr) != n:
                raise SchemaError(f"column {name!r} has length {len(arr)}, expected {n}")
        schema_names = [name for name, _ in self.covariate_schema]
        if sorted(schema_names) != sorted(self.covariates):
            missing = set(schema_names) - set(self.covariates)
            extra = set(self.covariates) - set(schema_names)
            raise SchemaError(
                f"covariates do not conform to schema (missing={sorted(missing)}, "
                f"extra={sorted(extra)})"
            )
        if np.any(self.age < 0):
            raise DomainError("ages must be >= 0")
        if self.treatment is not None and not np.all(np.isin(self.treatment, (0, 1))):
            raise DomainError("treatment values must be 0 or 1")
        for name, kind in self.covariate_schema:
            if kind == CATEGORICAL:
                vocab = self.fe_vocabulary.get(name)
                if vocab is None:
                    raise SchemaError(f"no vocabulary for categorical covariate {name!r}")
                observed = set(self.covariates[name].tolist())
                if not observed.issubset(vocab):
                    unseen = sorted(observed - set(vocab))
                    raise SchemaError(f"levels {unseen} of {name!r} missing from vocabulary")
        for _, arr in self._column_items():
            if arr is not None:
                _frozen(arr)

    def _column_items(self):
        items = [
            ("player_id", self.player_id),
            ("game_date", self.game_date),
            ("age", self.age),
            ("outcome", self.outcome),
            ("treatment", self.treatment),
            ("possessions", self.possessions),
            ("prev_game_date", self.prev_game_date),
            ("prev_game_minutes", self.prev_game_minutes),
        ]
        items.extend(self.covariates.items())
        return items

    @property
    def n(self) -> int:
        return len(self.player_id)

    @staticmethod
    def build(
        player_id,
        game_date,
        age,
        outcome,
        outcome_name: str,
        covariate_schema: Schema = (),
        covariates: dict | None = None,
        **optional,
    ) -> "Dataset":
        """Construct a Dataset, deriving categorical vocabularies from the data."""
        covariates = {k: np.asarray(v) for k, v in (covariates or {}).items()}
        vocab = {
            name: tuple(sorted(set(covariates[name].tolist())))
            for name, kind in covariate_schema
            if kind == CATEGORICAL and name in covariates
        }
        return Dataset(
            player_id=np.asarray(player_id, dtype=object),
            game_date=np.asarray(game_date, dtype="datetime64[D]"),
            age=np.asarray(age, dtype=np.int64),
            outcome=np.asarray(outcome, dtype=np.float64),
            outcome_name=outcome_name,
            covariate_schema=tuple(covariate_schema),
            covariates=covariates,
            fe_vocabulary=vocab,
            **optional,
        )

    def take(self, indices) -> "Dataset":
        """Row subset/resample (vocabularies rebuilt on the result)."""
        indices = np.asarray(indices)
        opt = {}
        for name in ("treatment", "possessions", "prev_game_date", "prev_game_minutes"):
            arr = getattr(self, name)
            if arr is not None:
                opt[name] = arr[indices]
        return Dataset.build(
            self.player_id[indices],
            self.game_date[indices],
            self.age[indices],
            self.outcome[indices],
            self.outcome_name,
            self.covariate_schema,
            {k: v[indices] for k, v in self.covariates.items()},
            **opt,
        )

    def record(self, i: int) -> GameRecord:
        def _date(arr):
            if arr is None or np.isnat(arr[i]):
                return None
            return arr[i].astype(dt.date)

        def _num(arr):
            if arr is None or np.isnan(arr[i]):
                return None
            return float(arr[i])

        return GameRecord(
            player_id=str(self.player_id[i]),
            game_date=self.game_date[i].astype(dt.date),
            age=int(self.age[i]),
            treatment=None if self.treatment is None else int(self.treatment[i]),
            covariates={k: v[i] for k, v in self.covariates.items()},
            outcome=float(self.outcome[i]),
            possessions=_num(self.possessions),
            prev_game_date=_date(self.prev_game_date),
            prev_game_minutes=_num(self.prev_game_minutes),
        )

    @property
    def records(self) -> list[GameRecord]:
        return [self.record(i) for i in range(self.n)]

    def require_treatment(self) -> np.ndarray:
        if self.treatment is None:
            raise SchemaError("dataset has no treatment column; run preprocess() first")
        return self.treatment


def derive_treatment(prev_game_date, game_date, threshold: int = 1) -> int:
    """Rest indicator: 0 for a back-to-back game, 1 after >= threshold rest days.

    The gap is measured in calendar days; a one-day gap is a back-to-back.
    """
    gap = _gap_days(prev_game_date, game_date)
    if gap <= 0:
        raise ChronologyError(
            f"game_date {game_date} does not follow prev_game_date {prev_game_date}"
        )
    return int(gap >= threshold + 1)


def _gap_days(prev_game_date, game_date) -> int:
    if isinstance(game_date, np.datetime64):
        return int((game_date - prev_game_date).astype("timedelta64[D]").astype(int))
    return (game_date - prev_game_date).days


def per100(stat: float, possessions: float) -> float:
    """Normalize a counting stat to a 100-possession basis."""
    if not possessions > 0:
        raise DomainError(f"possessions must be > 0, got {possessions!r}")
    return stat / possessions * 100.0


def apply_filters(ds: Dataset, cfg: PreprocessConfig) -> Dataset:
    """Keep rows inside the age window whose previous game met the minutes floor.

    The minutes condition only applies when the dataset carries a
    prev_game_minutes column; rows with a missing value there are dropped.
    """
    mask = (ds.age >= cfg.age_min) & (ds.age <= cfg.age_max)
    if ds.prev_game_minutes is not None:
        with np.errstate(invalid="ignore"):
            mask &= ds.prev_game_minutes >= cfg.min_prev_minutes
    if not mask.any():
        raise EmptyInputError("all rows removed by preprocessing filters")
    return ds.take(np.flatnonzero(mask))


def derive_prev_game_fields(ds: Dataset, minutes_column: str | None = None) -> Dataset:
    """Fill prev_game_date (and optionally prev_game_minutes) from row order.

    Rows are grouped by player and sorted by game date; each game's previous
    game is the player's latest earlier game.  First games keep a missing
    previous date and are dropped later when treatment is derived.
    """
    prev_dates = np.full(ds.n, np.datetime64("NaT"), dtype="datetime64[D]")
    prev_minutes = np.full(ds.n, np.nan)
    minutes = None
    if minutes_column is not None:
        if minutes_column not in ds.covariates:
            raise SchemaError(f"minutes column {minutes_column!r} not in covariates")
        minutes = np.asarray(ds.covariates[minutes_column], dtype=np.float64)
    order = np.lexsort((ds.game_date, ds.player_id.astype(str)))
    for k in range(1, len(order)):
        i, j = order[k - 1], order[k]
        if ds.player_id[j] != ds.player_id[i]:
            continue
        prev_dates[j] = ds.game_date[i]
        if minutes is not None:
            prev_minutes[j] = minutes[i]
    out = {"prev_game_date": prev_dates}
    if minutes is not None:
        out["prev_game_minutes"] = prev_minutes
    elif ds.prev_game_minutes is not None:
        out["prev_game_minutes"] = ds.prev_game_minutes.copy()
    if ds.treatment is not None:
        out["treatment"] = ds.treatment.copy()
    if ds.possessions is not None:
        out["possessions"] = ds.possessions.copy()
    return Dataset.build(
        ds.player_id,
        ds.game_date,
        ds.age,
        ds.outcome,
        ds.outcome_name,
        ds.covariate_schema,
        dict(ds.covariates),
        **out,
    )


def preprocess(ds: Dataset, cfg: PreprocessConfig) -> Dataset:
    """Full pipeline: derive treatment, apply filters, normalize per-100 stats.

    Rows without a previous game (missing prev_game_date) cannot define the
    rest treatment and are dropped.  An existing treatment column is kept
    as-is.
    """
    out = ds
    if out.treatment is None:
        if out.prev_game_date is None:
            raise SchemaError(
                "cannot derive treatment: no prev_game_date column "
                "(use derive_prev_game_fields first)"
            )
        has_prev = ~np.isnat(out.prev_game_date)
        if not has_prev.any():
            raise EmptyInputError("no rows with a previous game")
        out = out.take(np.flatnonzero(has_prev))
        treatment = np.empty(out.n, dtype=np.int64)
        for i in range(out.n):
            treatment[i] = derive_treatment(
                out.prev_game_date[i], out.game_date[i], cfg.rest_threshold_days
            )
        out = replace(out, treatment=_frozen(treatment))
    out = apply_filters(out, cfg)
    if cfg.per100_stats:
        if out.possessions is None:
            raise SchemaError("per-100 normalization requires a possessions column")
        poss = out.possessions
        bad = ~(poss > 0)
        if bad.any():
            raise DomainError(
                f"possessions must be > 0 for per-100 stats "
                f"(first offending row index {int(np.flatnonzero(bad)[0])})"
            )
        outcome = out.outcome
        covs = dict(out.covariates)
        for name in cfg.per100_stats:
            if name == out.outcome_name:
                outcome = outcome / poss * 100.0
            elif name in covs:
                covs[name] = np.asarray(covs[name], dtype=np.float64) / poss * 100.0
            else:
                raise SchemaError(f"per-100 column {name!r} not found in dataset")
        out = replace(out, outcome=_frozen(outcome), covariates=covs)
    return out


@dataclass(frozen=True)
class FixedEffectsEncoding:
    """One-hot layout for the categorical covariates of a dataset.

    The first vocabulary level (sorted order) of each covariate is dropped as
    the reference; numeric covariates pass through unchanged.  Column order
    follows the covariate schema and is deterministic.
    """

    schema: Schema
    vocabulary: dict
    columns: tuple[str, ...]

    def transform(self, covariates: dict, n: int) -> np.ndarray:
        """Encode covariate columns into a float design block of shape (n, k)."""
        blocks = []
        for name, kind in self.schema:
            values = covariates[name]
            if kind == NUMERIC:
                blocks.append(np.asarray(values, dtype=np.float64).reshape(n, 1))
                continue
            vocab = self.vocabulary[name]
            index = {level: i for i, level in enumerate(vocab)}
            codes = np.empty(n, dtype=np.int64)
            for i, v in enumerate(values):
                try:
                    codes[i] = index[v]
                except KeyError:
                    raise EncodingError(
                        f"unseen level {v!r} for covariate {name!r}"
                    ) from None
            block = np.zeros((n, len(vocab) - 1))
            hot = codes > 0
            block[np.flatnonzero(hot), codes[hot] - 1] = 1.0
            blocks.append(block)
        if not blocks:
            return np.empty((n, 0))
        return np.hstack(blocks)


def encode_fixed_effects(ds: Dataset) -> FixedEffectsEncoding:
    """Build the reference-dropped one-hot encoding for ``ds``'s covariates."""
    columns: list[str] = []
    for name, kind in ds.covariate_schema:
        if kind == NUMERIC:
            columns.append(name)
        else:
            columns.extend(f"{name}={level}" for level in ds.fe_vocabulary[name][1:])
    return FixedEffectsEncoding(
        schema=ds.covariate_schema,
        vocabulary={k: tuple(v) for k, v in ds.fe_vocabulary.items()},
        columns=tuple(columns),
    )


def ingest_csv(path, schema: Schema, outcome: str = "outcome") -> Dataset:
    """Read a game-log CSV into a validated Dataset.

    The header must contain player_id, game_date, age, the outcome column,
    and every schema covariate; prev_game_date, prev_game_minutes,
    possessions, and treatment are picked up when present.  Unrelated extra
    columns are ignored.  Dates are ISO-8601; row order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: empty file") from None
        for col in REQUIRED_COLUMNS + (outcome,) + tuple(n for n, _ in schema):
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        pos = {name: header.index(name) for name in header}
        optional = {name: name in pos for name in OPTIONAL_COLUMNS}

        rows = {name: [] for name in header}
        n = 0
        for row in reader:
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, got {len(row)}", reader.line_num
                )
            for name in header:
                rows[name].append(row[pos[name]])
            n += 1
        if n == 0:
            raise EmptyInputError(f"{path}: no data rows")

    line0 = 2  # first data row of a headered CSV

    def _parse(name, conv, missing_ok=False, empty=None):
        out = []
        for i, cell in enumerate(rows[name]):
            if cell == "":
                if missing_ok:
                    out.append(empty)
                    continue
                raise ParseError(f"empty cell in column {name!r}", line0 + i)
            try:
                out.append(conv(cell))
            except (ValueError, ArithmeticError):
                raise ParseError(
                    f"cannot parse {name!r} value {cell!r}", line0 + i
                ) from None
        return out

    def _treatment_cell(cell):
        v = int(cell)
        if v not in (0, 1):
            raise ValueError(cell)
        return v

    data = {
        "player_id": np.array(rows["player_id"], dtype=object),
        "game_date": np.array(_parse("game_date", dt.date.fromisoformat), dtype="datetime64[D]"),
        "age": np.array(_parse("age", int), dtype=np.int64),
        "outcome": np.array(_parse(outcome, float), dtype=np.float64),
    }
    opt = {}
    if optional["prev_game_date"]:
        vals = _parse("prev_game_date", dt.date.fromisoformat, missing_ok=True)
        opt["prev_game_date"] = np.array(
            [np.datetime64("NaT") if v is None else v for v in vals], dtype="datetime64[D]"
        )
    if optional["prev_game_minutes"]:
        opt["prev_game_minutes"] = np.array(
            _parse("prev_game_minutes", float, missing_ok=True, empty=np.nan), dtype=np.float64
        )
    if optional["possessions"]:
        opt["possessions"] = np.array(
            _parse("possessions", float, missing_ok=True, empty=np.nan), dtype=np.float64
        )
    if optional["treatment"]:
        opt["treatment"] = np.array(_parse("treatment", _treatment_cell), dtype=np.int64)

    covs = {}
    for name, kind in schema:
        if kind == NUMERIC:
            covs[name] = np.array(_parse(name, float), dtype=np.float64)
        else:
            covs[name] = np.array(_parse(name, str), dtype=object)

    return Dataset.build(
        data["player_id"],
        data["game_date"],
        data["age"],
        data["outcome"],
        outcome,
        tuple(schema),
        covs,
        **opt,
    )


def write_csv(ds: Dataset, path) -> None:
    """Write a Dataset back to CSV in the canonical column order.

    Output is deterministic and round-trips through ingest_csv (floats use
    shortest-repr formatting, which is exact).
    """

    def _fmt_date(v):
        return "" if np.isnat(v) else str(v)

    def _fmt_float(v):
        return "" if np.isnan(v) else repr(float(v))

    header = ["player_id", "game_date", "age"]
    emitters = [
        lambda i: str(ds.player_id[i]),
        lambda i: _fmt_date(ds.game_date[i]),
        lambda i: str(int(ds.age[i])),
    ]
    for name in ("prev_game_date",):
        if getattr(ds, name) is not None:
            header.append(name)
            emitters.append(lambda i, a=getattr(ds, name): _fmt_date(a[i]))
    for name in ("prev_game_minutes", "possessions"):
        if getattr(ds, name) is not None:
            header.append(name)
            emitters.append(lambda i, a=getattr(ds, name): _fmt_float(a[i]))
    if ds.treatment is not None:
        header.append("treatment")
        emitters.append(lambda i: str(int(ds.treatment[i])))
    for name, kind in ds.covariate_schema:
        header.append(name)
        arr = ds.covariates[name]
        if kind == NUMERIC:
            emitters.append(lambda i, a=arr: _fmt_float(a[i]))
        else:
            emitters.append(lambda i, a=arr: str(a[i]))
    header.append(ds.outcome_name)
    emitters.append(lambda i: _fmt_float(ds.outcome[i]))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(ds.n):
            writer.writerow([emit(i) for emit in emitters])
