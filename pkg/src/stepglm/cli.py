"""Command-line interface: fit, simulate, bench, load.

Options come from a YAML/JSON config file and/or flags; flags win over
the STEPGLM_DB environment variable, which wins over the config file.
Exit codes: 0 ok, 1 configuration error, 2 database error,
3 statistical error.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import json
import os
import re
import sys

import yaml

from . import __version__
from .db import Database
from .errors import ConfigError, DatabaseError, StatisticalError, StepGlmError
from .figures import render_figures
from .model import Categorical, Intercept, Interaction, Numeric, make_spec, quote_ident
from .onestep import FitOptions, fit_onestep, report
from .sampler import SampleSpec
from .simbench import CategoricalDesign, SimDesign, efficiency_experiment, generate_table

_CONFIG_KEYS = {
    "database", "model", "sample", "info_source", "seed", "format",
    "compute_deviance",
}
_MODEL_KEYS = {"table", "response", "terms", "family", "link", "filter", "intercept"}
_SAMPLE_KEYS = {"exponent", "floor", "method"}

_CAT_RE = re.compile(r"^C\(\s*([^,()]+?)\s*(?:,\s*ref\s*=\s*(.+?)\s*)?\)$")


def parse_term(token: str):
    token = token.strip()
    if token == "1":
        return Intercept()
    if ":" in token and not _CAT_RE.match(token):
        parts = tuple(parse_term(t) for t in token.split(":"))
        return Interaction(parts)
    m = _CAT_RE.match(token)
    if m:
        return Categorical(m.group(1), reference=m.group(2))
    if not token:
        raise ConfigError("empty term")
    return Numeric(token)


def _split_terms(text):
    """Split on + or , but not inside C(...) parentheses."""
    tokens, buf, depth = [], [], 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        if ch in "+," and depth == 0:
            tokens.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    tokens.append("".join(buf))
    return tokens


def parse_terms(text, intercept=True):
    tokens = [t for t in _split_terms(text) if t.strip()]
    terms = [parse_term(t) for t in tokens]
    if intercept and not any(isinstance(t, Intercept) for t in terms):
        terms.insert(0, Intercept())
    return terms


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a key-value document")
    _reject_unknown(doc, _CONFIG_KEYS, "config")
    _reject_unknown(doc.get("model", {}), _MODEL_KEYS, "model")
    _reject_unknown(doc.get("sample", {}), _SAMPLE_KEYS, "sample")
    return doc


def _reject_unknown(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} section must be a mapping")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route them through the
    # config-error path (exit 1) instead
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stepglm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="one-step GLM fit against a database table")
    fit.add_argument("--config", help="YAML/JSON config file")
    fit.add_argument("--db", help="database path (overrides env and config)")
    fit.add_argument("--table")
    fit.add_argument("--response")
    fit.add_argument("--terms", help="e.g. 'power,seats,C(colour),power:seats'")
    fit.add_argument("--family")
    fit.add_argument("--link")
    fit.add_argument("--filter")
    fit.add_argument("--no-intercept", action="store_true")
    fit.add_argument("--exponent", type=float)
    fit.add_argument("--method", choices=["bernoulli", "exact"])
    fit.add_argument("--info-source", choices=["subsample", "full"])
    fit.add_argument("--seed", type=int)
    fit.add_argument("--format", choices=["text", "json", "csv"])
    fit.add_argument("--deviance", action="store_true", dest="compute_deviance")
    fit.add_argument(
        "--no-timings", action="store_true",
        help="omit wall-clock timings for byte-reproducible output",
    )

    sim = sub.add_parser("simulate", help="generate a synthetic model table")
    sim.add_argument("--db", required=True)
    sim.add_argument("--table", default="sim")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--family", default="binomial")
    sim.add_argument("--link", default="logit")
    sim.add_argument("--beta", required=True, help="comma-separated true coefficients")
    sim.add_argument("--numeric", type=int, default=3)
    sim.add_argument(
        "--categorical", action="append", default=[],
        help="name:level1,level2,... (repeatable)",
    )
    sim.add_argument("--dispersion", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)

    bench = sub.add_parser("bench", help="one-step vs full-MLE efficiency experiment")
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--replicates", type=int, default=3)
    bench.add_argument("--exponents", default="0.5556")
    bench.add_argument("--family", default="binomial")
    bench.add_argument("--link", default="logit")
    bench.add_argument("--beta", required=True)
    bench.add_argument("--numeric", type=int, default=3)
    bench.add_argument("--categorical", action="append", default=[])
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--outdir", required=True)
    bench.add_argument("--db-path", default=":memory:")
    bench.add_argument("--no-figures", action="store_true")

    load = sub.add_parser("load", help="load a CSV extract into a table")
    load.add_argument("--db", required=True)
    load.add_argument("--table", required=True)
    load.add_argument("csv", help="CSV file with a header row")
    return parser


def _db_path(args, cfg) -> str:
    path = getattr(args, "db", None) or os.environ.get("STEPGLM_DB") or cfg.get("database")
    if not path:
        raise ConfigError("no database given (--db, STEPGLM_DB, or config 'database')")
    return path


def cmd_fit(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    model = dict(cfg.get("model", {}))
    for key in ("table", "response", "terms", "family", "link", "filter"):
        val = getattr(args, key, None)
        if val is not None:
            model[key] = val
    if args.no_intercept:
        model["intercept"] = False
    for key in ("table", "response", "terms", "family", "link"):
        if not model.get(key):
            raise ConfigError(f"missing model setting {key!r}")
    terms = parse_terms(model["terms"], intercept=model.get("intercept", True))
    spec = make_spec(
        model["table"], model["response"], terms,
        model["family"], model["link"], model.get("filter"),
    )

    sample_cfg = dict(cfg.get("sample", {}))
    if args.exponent is not None:
        sample_cfg["exponent"] = args.exponent
    if args.method is not None:
        sample_cfg["method"] = args.method
    sample = SampleSpec(**sample_cfg)

    info_source = cfg.get("info_source", "scaled_subsample")
    if args.info_source:
        info_source = {"subsample": "scaled_subsample", "full": "full_data"}[
            args.info_source
        ]
    seed = args.seed if args.seed is not None else cfg.get("seed")
    opts = FitOptions(
        sample=sample,
        info_source=info_source,
        seed=seed,
        compute_deviance=args.compute_deviance or cfg.get("compute_deviance", False),
    )
    fmt = args.format or cfg.get("format", "text")

    dialect = "sample-clause" if sample.method == "exact" else "generic-random"
    with Database(_db_path(args, cfg), dialect=dialect) as db:
        result = fit_onestep(db, spec, opts)
    for w in result.warnings:
        print("warning: " + w, file=sys.stderr)
    print(report(result, format=fmt, with_timings=not args.no_timings))
    return 0


def _parse_categoricals(specs):
    out = []
    for text in specs:
        if ":" not in text:
            raise ConfigError(f"bad --categorical {text!r}; want name:l1,l2,...")
        name, levels = text.split(":", 1)
        levels = tuple(l.strip() for l in levels.split(",") if l.strip())
        if len(levels) < 2:
            raise ConfigError(f"categorical {name!r} needs at least two levels")
        out.append(CategoricalDesign(name.strip(), levels))
    return tuple(out)


def _design_from_args(args, N, table="sim") -> SimDesign:
    beta = [float(b) for b in args.beta.split(",")]
    return SimDesign(
        N=N,
        beta_true=beta,
        family=args.family,
        link=args.link,
        n_numeric=args.numeric,
        categoricals=_parse_categoricals(args.categorical),
        dispersion=getattr(args, "dispersion", 1.0),
        seed=args.seed,
        table=table,
    )


def cmd_simulate(args) -> int:
    design = _design_from_args(args, args.n, args.table)
    design.beta_vector()  # validates the length against the expansion
    with Database(args.db) as db:
        generate_table(db, design)
        n = db.execute(
            f"SELECT COUNT(*) FROM {quote_ident(args.table)}", category="count"
        ).fetchone()[0]
    print(f"wrote {n} rows to {args.table!r} in {args.db}")
    return 0


def cmd_bench(args) -> int:
    design = _design_from_args(args, args.n)
    design.beta_vector()
    exponents = [float(e) for e in args.exponents.split(",")]
    os.makedirs(args.outdir, exist_ok=True)
    report_obj = efficiency_experiment(
        design, args.replicates, exponents, db_path=args.db_path
    )
    csv_path = os.path.join(args.outdir, "replicates.csv")
    json_path = os.path.join(args.outdir, "summary.json")
    report_obj.write_csv(csv_path)
    report_obj.write_json(json_path)
    written = [csv_path, json_path]
    if not args.no_figures:
        written += render_figures(report_obj, args.outdir)
    print("\n".join(written))
    return 0


def cmd_load(args) -> int:
    try:
        fh = open(args.csv, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {args.csv!r}: {exc}") from exc
    with fh:
        reader = csv_mod.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("CSV file is empty") from None
        rows = list(reader)

    def is_num(v):
        if v == "":
            return True
        try:
            float(v)
            return True
        except ValueError:
            return False

    numeric = [all(is_num(r[i]) for r in rows if i < len(r)) for i in range(len(header))]
    with Database(args.db) as db:
        tq = quote_ident(args.table)
        cols = ", ".join(
            f"{quote_ident(h)} {'REAL' if numeric[i] else 'TEXT'}"
            for i, h in enumerate(header)
        )
        db.execute(f"DROP TABLE IF EXISTS {tq}", category="write")
        db.execute(f"CREATE TABLE {tq} ({cols})", category="write")
        conv = [
            (lambda v: None if v == "" else float(v)) if numeric[i] else
            (lambda v: v if v != "" else None)
            for i in range(len(header))
        ]
        data = [
            tuple(conv[i](r[i]) if i < len(r) else None for i in range(len(header)))
            for r in rows
        ]
        db.executemany(
            f"INSERT INTO {tq} VALUES ({', '.join('?' * len(header))})", data
        )
        db.commit()
    print(f"loaded {len(rows)} rows into {args.table!r}")
    return 0


_COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "bench": cmd_bench, "load": cmd_load}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except DatabaseError as exc:
        print(f"error: database: {exc}", file=sys.stderr)
        return 2
    except StatisticalError as exc:
        print(f"error: statistical: {exc}", file=sys.stderr)
        return 3
    except StepGlmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
