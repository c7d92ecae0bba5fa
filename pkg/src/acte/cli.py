"""Command-line surface: simulate, fit, curve, report.

Every command is deterministic given its seed and config: rerunning writes
byte-identical artifacts (the report's timestamp line excepted).  On failure
a single-line diagnostic goes to stderr, partially written artifacts are
removed, and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys

import numpy as np

from . import _svg
from .dataset import CATEGORICAL, NUMERIC, PreprocessConfig, ingest_csv, preprocess
from .errors import ActeError, ConfigError, DependencyError
from .inference import BootstrapConfig, bootstrap_curve
from .learners import RfHyperparams
from .meta import (
    MetaSpec,
    acte,
    fit_meta,
    meta_model_to_dict,
    smooth_curve,
)
from .simlab import METHODS, ScenarioSpec, mean_performance, method_meta_spec, run_study

PROG = "acte"


class _Artifacts:
    """Tracks written files so a failed command leaves no partial output."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: list[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_text(self, name: str, text: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.written.append(p)
        return p

    def rollback(self):
        for p in self.written:
            try:
                os.remove(p)
            except OSError:
                pass


def _parse_ages(text: str) -> np.ndarray:
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"--ages expects A:B, got {text!r}") from None
    if lo > hi:
        raise ConfigError(f"--ages range is empty: {text!r}")
    return np.arange(lo, hi + 1, dtype=np.int64)


def _parse_scenarios(text: str) -> list[int]:
    try:
        ids = [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ConfigError(f"--scenarios expects comma-separated ids, got {text!r}") from None
    if not ids:
        raise ConfigError("--scenarios is empty")
    return ids


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise DependencyError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return cfg


def _setting(args, config: dict, name: str, default):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _preprocess_config(config: dict) -> PreprocessConfig:
    return PreprocessConfig(
        min_prev_minutes=config.get("min_prev_minutes", 25.0),
        age_min=config.get("age_min", 18),
        age_max=config.get("age_max", 39),
        rest_threshold_days=config.get("rest_threshold_days", 1),
        per100_stats=tuple(config.get("per100_stats", ())),
    )


def _schema_from_config(config: dict):
    schema = []
    for name, kind in config.get("covariates", []):
        if kind not in (CATEGORICAL, NUMERIC):
            raise ConfigError(f"covariate {name!r} has unknown kind {kind!r}")
        schema.append((name, kind))
    return tuple(schema)


def _meta_spec(args, config: dict) -> MetaSpec:
    learner = _setting(args, config, "learner", "t")
    base = _setting(args, config, "base", "ols")
    label = f"{learner}.{base}"
    if label not in METHODS:
        raise ConfigError(f"unknown learner/base combination {label!r}")
    rf = RfHyperparams(
        n_trees=int(config.get("n_trees", 500)),
        min_node_size=int(config.get("min_node_size", 5)),
        seed=int(_setting(args, config, "seed", 0)),
    )
    return method_meta_spec(
        label,
        a_peak=float(config.get("a_peak", 25.0)),
        rf=rf,
        # unlike the simulation study (which mirrors the intercept-free
        # spline of the method-comparison setup), applied fits default to a
        # level-capable design
        include_intercept=bool(config.get("include_intercept", True)),
    )


def _load_and_prepare(args, config: dict):
    input_path = _setting(args, config, "input", None)
    if not input_path:
        raise ConfigError("--input is required")
    if not os.path.exists(input_path):
        raise DependencyError(f"input file not found: {input_path}")
    outcome = _setting(args, config, "outcome", "outcome")
    ds = ingest_csv(input_path, _schema_from_config(config), outcome=outcome)
    return preprocess(ds, _preprocess_config(config))


def _metadata(command: str, settings: dict) -> str:
    return json.dumps(
        {"command": command, "settings": settings, "methods": list(METHODS)},
        indent=2,
        sort_keys=True,
    ) + "\n"


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    scenario_ids = _parse_scenarios(_setting(args, config, "scenarios", "1,2,3"))
    reps = int(_setting(args, config, "reps", 20))
    seed = int(_setting(args, config, "seed", 0))
    players = int(_setting(args, config, "players", 500))
    ages = _parse_ages(_setting(args, config, "ages", "18:40"))
    rf = RfHyperparams(
        n_trees=int(config.get("n_trees", 500)),
        min_node_size=int(config.get("min_node_size", 5)),
    )
    specs = [
        ScenarioSpec(
            scenario=sid,
            n_players=players,
            age_min=int(ages[0]),
            age_max=int(ages[-1]),
            a_peak=float(config.get("a_peak", 25.0)),
        )
        for sid in scenario_ids
    ]
    art = _Artifacts(args.output_dir)
    try:
        result = run_study(specs, METHODS, replications=reps, seed=seed, rf=rf)
        art.write_text("table1.csv", result.table_csv())
        for spec in specs:
            sid = spec.scenario
            art.write_text(f"mse_by_age_scenario{sid}.csv", result.per_age_csv(sid))
            if not args.no_plots:
                grid = result.age_grids[sid]
                art.write_text(
                    f"potential_outcomes_scenario{sid}.svg",
                    _svg.line_chart(
                        grid,
                        [
                            ("control mean", mean_performance(grid, 0, spec)),
                            ("treated mean", mean_performance(grid, 1, spec)),
                        ],
                        title=f"Scenario {sid}: potential-outcome means",
                        x_label="age",
                        y_label="outcome",
                    ),
                )
                art.write_text(
                    f"mse_by_age_scenario{sid}.svg",
                    _svg.line_chart(
                        grid,
                        [(m, result.per_age_mse[(sid, m)]) for m in METHODS],
                        title=f"Scenario {sid}: effect-curve MSE by age",
                        x_label="age",
                        y_label="MSE",
                    ),
                )
        art.write_text(
            "run_metadata.json",
            _metadata(
                "simulate",
                {
                    "scenarios": scenario_ids,
                    "reps": reps,
                    "seed": seed,
                    "players": players,
                    "ages": f"{int(ages[0])}:{int(ages[-1])}",
                    "n_trees": rf.n_trees,
                },
            ),
        )
    except BaseException:
        art.rollback()
        raise
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args.config)
    ds = _load_and_prepare(args, config)
    spec = _meta_spec(args, config)
    model = fit_meta(ds, spec)
    art = _Artifacts(args.output_dir)
    try:
        art.write_text(
            "model.json", json.dumps(meta_model_to_dict(model), indent=2, sort_keys=True) + "\n"
        )
        art.write_text(
            "run_metadata.json",
            _metadata(
                "fit",
                {
                    "input": _setting(args, config, "input", None),
                    "learner": spec.learner,
                    "base": spec.base_control.kind,
                    "seed": int(_setting(args, config, "seed", 0)),
                },
            ),
        )
    except BaseException:
        art.rollback()
        raise
    return 0


def cmd_curve(args) -> int:
    config = _load_config(args.config)
    ds = _load_and_prepare(args, config)
    spec = _meta_spec(args, config)
    ages_text = _setting(args, config, "ages", None)
    ages = (
        _parse_ages(ages_text)
        if ages_text
        else np.arange(int(ds.age.min()), int(ds.age.max()) + 1, dtype=np.int64)
    )
    boot_b = int(_setting(args, config, "boot_B", 0))
    alpha = float(_setting(args, config, "alpha", 0.10))
    seed = int(_setting(args, config, "seed", 0))
    if boot_b > 0:
        curve = bootstrap_curve(
            ds, spec, ages, BootstrapConfig(B=boot_b, alpha=alpha, seed=seed)
        )
    else:
        curve = acte(fit_meta(ds, spec), ds, ages)
    smoothed = smooth_curve(curve, df=int(config.get("smooth_df", 6)))
    art = _Artifacts(args.output_dir)
    try:
        art.write_text("curve.csv", curve.to_csv_string())
        art.write_text("curve.json", curve.to_json_string())
        art.write_text("curve_smooth.csv", smoothed.to_csv_string())
        art.write_text("curve_smooth.json", smoothed.to_json_string())
        if not args.no_plots:
            bands = [(curve.lower, curve.upper)] if curve.lower is not None else None
            art.write_text(
                "curve.svg",
                _svg.line_chart(
                    curve.ages,
                    [("effect", curve.values), ("smoothed", smoothed.values)],
                    bands=bands and bands + [None],
                    title="Age-conditioned treatment effect",
                    x_label="age",
                    y_label="effect",
                ),
            )
        art.write_text(
            "run_metadata.json",
            _metadata(
                "curve",
                {
                    "input": _setting(args, config, "input", None),
                    "learner": spec.learner,
                    "base": spec.base_control.kind,
                    "ages": f"{int(ages[0])}:{int(ages[-1])}",
                    "boot_B": boot_b,
                    "alpha": alpha,
                    "seed": seed,
                },
            ),
        )
    except BaseException:
        art.rollback()
        raise
    return 0


def _html_table(csv_text: str) -> str:
    rows = [line.split(",") for line in csv_text.strip().splitlines()]
    out = ["<table border='1' cellspacing='0' cellpadding='4'>"]
    for i, row in enumerate(rows):
        tag = "th" if i == 0 else "td"
        cells = "".join(f"<{tag}>{cell}</{tag}>" for cell in row)
        out.append(f"<tr>{cells}</tr>")
    out.append("</table>")
    return "\n".join(out)


def cmd_report(args) -> int:
    out_dir = args.output_dir
    meta_path = os.path.join(out_dir, "run_metadata.json")
    if not os.path.exists(meta_path):
        raise DependencyError(f"missing prior artifact: {meta_path}")
    with open(meta_path, encoding="utf-8") as fh:
        metadata = json.load(fh)
    sections = []
    table_path = os.path.join(out_dir, "table1.csv")
    curve_path = os.path.join(out_dir, "curve.csv")
    if metadata.get("command") == "simulate":
        if not os.path.exists(table_path):
            raise DependencyError(f"missing prior artifact: {table_path}")
        with open(table_path, encoding="utf-8") as fh:
            sections.append("<h2>Method comparison (MSE)</h2>\n" + _html_table(fh.read()))
        for name in sorted(os.listdir(out_dir)):
            if name.endswith(".svg"):
                with open(os.path.join(out_dir, name), encoding="utf-8") as fh:
                    sections.append(f"<h3>{name}</h3>\n" + fh.read())
    elif metadata.get("command") == "curve":
        if not os.path.exists(curve_path):
            raise DependencyError(f"missing prior artifact: {curve_path}")
        with open(curve_path, encoding="utf-8") as fh:
            sections.append("<h2>Effect curve</h2>\n" + _html_table(fh.read()))
        svg_path = os.path.join(out_dir, "curve.svg")
        if os.path.exists(svg_path):
            with open(svg_path, encoding="utf-8") as fh:
                sections.append(fh.read())
    else:
        raise DependencyError("missing prior artifacts: no simulate or curve outputs found")
    stamp = dt.datetime.now(dt.timezone.utc).isoformat() if not args.no_timestamp else "(omitted)"
    body = "\n".join(sections)
    html = (
        "<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
        "<title>ACTE report</title></head>\n<body>\n"
        "<h1>Age-conditioned treatment effect report</h1>\n"
        f"<p>generated-at: {stamp}</p>\n"
        f"{body}\n"
        "<h2>Run metadata</h2>\n"
        f"<pre>{json.dumps(metadata, indent=2, sort_keys=True)}</pre>\n"
        "</body></html>\n"
    )
    art = _Artifacts(out_dir)
    try:
        art.write_text("report.html", html)
    except BaseException:
        art.rollback()
        raise
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Age-conditioned treatment effect estimation and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags win over it)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output-dir", required=True)
        p.add_argument("--verbose", action="store_true", help="tracebacks on failure")

    p = sub.add_parser("simulate", help="run the Monte Carlo method-comparison study")
    common(p)
    p.add_argument("--scenarios", default=None, help="comma-separated ids, e.g. 1,2,3")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--players", type=int, default=None)
    p.add_argument("--ages", default=None, help="age grid A:B")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_simulate)

    for name, fn in (("fit", cmd_fit), ("curve", cmd_curve)):
        p = sub.add_parser(name, help=f"{name} on an ingested game-log CSV")
        common(p)
        p.add_argument("--input", default=None)
        p.add_argument("--outcome", default=None, help="outcome column name")
        p.add_argument("--learner", choices=("s", "t", "x"), default=None)
        p.add_argument("--base", choices=("ols", "rf"), default=None)
        if name == "curve":
            p.add_argument("--ages", default=None, help="age grid A:B")
            p.add_argument("--boot-B", type=int, default=None, dest="boot_B")
            p.add_argument("--alpha", type=float, default=None)
            p.add_argument("--no-plots", action="store_true")
        p.set_defaults(func=fn)

    p = sub.add_parser("report", help="render an HTML report over prior outputs")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ActeError, FileNotFoundError) as exc:
        if getattr(args, "verbose", False):
            import traceback

            traceback.print_exc()
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
