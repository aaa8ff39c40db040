"""SQLite-backed database adapter.

Wraps a sqlite3 connection with a per-category statement counter (used
to assert the single-aggregation-pass contract) and implements the four
database operations: row counting, categorical level enumeration,
subsample extraction and score-query execution.

Two dialects exist: 'generic-random' does Bernoulli sampling with a
WHERE <uniform> < k predicate, 'sample-clause' takes an exact-size
sample (emulated on SQLite by ordering on the per-row hash; engines
with a native SAMPLE clause can override the sampling SQL).
"""

from __future__ import annotations

import random as _random
import sqlite3
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DatabaseError, SampleTooSmallError, StatisticalError
from .model import (
    Categorical,
    Interaction,
    ModelSpec,
    ScoreInfo,
    SubsampleData,
    quote_ident,
)
from .sqlgen import (
    QueryPlan,
    build_count_query,
    build_levels_query,
    build_sample_query,
)

MAX_LEVELS = 1000


@dataclass(frozen=True)
class Dialect:
    """Engine-specific knobs for the sampling query."""

    name: str
    exact_sample: bool = False


GENERIC_RANDOM = Dialect("generic-random", exact_sample=False)
SAMPLE_CLAUSE = Dialect("sample-clause", exact_sample=True)

_DIALECTS = {d.name: d for d in (GENERIC_RANDOM, SAMPLE_CLAUSE)}


class Database:
    """A single-session connection; not safe to share across threads."""

    def __init__(self, path: str = ":memory:", dialect=GENERIC_RANDOM):
        if isinstance(dialect, str):
            try:
                dialect = _DIALECTS[dialect]
            except KeyError:
                raise ConfigError(f"unknown dialect {dialect!r}") from None
        self.path = path
        self.dialect = dialect
        self.counters: Counter = Counter()
        try:
            self.conn = sqlite3.connect(path)
        except sqlite3.Error as exc:
            raise DatabaseError(f"cannot open database {path!r}: {exc}") from exc
        self.conn.execute("PRAGMA synchronous = OFF")

    def execute(self, sql: str, params: Sequence = (), category: str = "other"):
        self.counters[category] += 1
        try:
            return self.conn.execute(sql, params)
        except sqlite3.Error as exc:
            raise DatabaseError(f"query failed: {exc}") from exc

    def executemany(self, sql: str, rows, category: str = "write"):
        self.counters[category] += 1
        try:
            return self.conn.executemany(sql, rows)
        except sqlite3.Error as exc:
            raise DatabaseError(f"bulk write failed: {exc}") from exc

    def commit(self):
        self.conn.commit()

    def close(self):
        self.conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def check_schema(db: Database, spec: ModelSpec) -> None:
    """Fail fast on a missing table or model column.

    SQLite silently reads unknown double-quoted identifiers as string
    literals, so a plain query would not surface a typo.
    """
    cur = db.execute(f"PRAGMA table_info({quote_ident(spec.table)})")
    present = {r[1] for r in cur.fetchall()}
    if not present:
        raise DatabaseError(f"no such table: {spec.table}")
    missing = [c for c in spec.model_columns() if c not in present]
    if missing:
        raise DatabaseError(
            f"table {spec.table!r} is missing column(s): {', '.join(missing)}"
        )


def count_rows(db: Database, spec: ModelSpec) -> int:
    """Rows satisfying the model predicate (filter + NOT NULL guards)."""
    check_schema(db, spec)
    row = db.execute(build_count_query(spec), category="count").fetchone()
    return int(row[0])


def enumerate_levels(
    db: Database, table: str, column: str, max_levels: int = MAX_LEVELS
) -> List:
    """Distinct non-null values over the full table, sorted ascending."""
    cur = db.execute(build_levels_query(table, column), category="distinct")
    levels = [r[0] for r in cur.fetchmany(max_levels + 1)]
    if len(levels) > max_levels:
        raise ConfigError(
            f"column {column!r} has more than {max_levels} distinct values; "
            "it does not look categorical"
        )
    if len(levels) < 2:
        raise ConfigError(
            f"column {column!r} has {len(levels)} level(s); no contrast possible"
        )
    return levels


def resolve_spec(db: Database, spec: ModelSpec) -> ModelSpec:
    """Fill in missing categorical level lists from the database."""

    def resolve_part(part):
        if isinstance(part, Categorical) and not part.resolved:
            levels = tuple(enumerate_levels(db, spec.table, part.column))
            ref = part.reference if part.reference is not None else levels[0]
            return Categorical(part.column, levels, ref)
        return part

    terms = []
    for term in spec.terms:
        if isinstance(term, Interaction):
            terms.append(Interaction(tuple(resolve_part(p) for p in term.parts)))
        else:
            terms.append(resolve_part(term))
    return ModelSpec(
        spec.table, spec.response, tuple(terms), spec.family, spec.link, spec.filter
    )


def sample_rows(
    db: Database,
    spec: ModelSpec,
    n_target: int,
    N: int,
    seed: Optional[int] = None,
) -> SubsampleData:
    """Materialise a random subsample's expanded design matrix in memory."""
    if not (0 < n_target <= N):
        raise ConfigError("need 0 < n_target <= N")
    if seed is None:
        seed = _random.randrange(2**31)
    k = min(1.0, n_target / N)
    exact = db.dialect.exact_sample
    sql = build_sample_query(spec, k, n_target, seed, exact)
    rows = db.execute(sql, category="sample").fetchall()
    p = spec.p
    if rows:
        arr = np.asarray(rows, dtype=float)
        x, y = arr[:, :p], arr[:, p]
    else:
        x, y = np.empty((0, p)), np.empty(0)
    m = len(rows)
    need = max(10 * p, 50)
    if m < need and m < N:
        raise SampleTooSmallError(
            f"realised subsample has {m} rows but at least {need} are needed; "
            "use a larger sampling exponent"
        )
    return SubsampleData(x, y)


def run_score_query(db: Database, plan: QueryPlan) -> ScoreInfo:
    """Execute the aggregation plan and unpack the single result row."""
    row = db.execute(plan.sql, category="aggregate").fetchone()
    if row is None or len(row) != len(plan.columns):
        raise DatabaseError("aggregation query returned an unexpected shape")
    values = dict(zip(plan.columns, row))
    p = plan.p
    u = np.array([values[f"u_{j}"] for j in range(p)], dtype=float)
    info = np.zeros((p, p))
    if plan.with_info:
        for j in range(p):
            for k in range(j, p):
                info[j, k] = info[k, j] = values[f"i_{j}_{k}"]
    n_rows = int(values["n_rows"])
    dev = float(values["deviance"])
    pearson = float(values["pearson"]) if plan.with_pearson else None
    finite = np.all(np.isfinite(u)) and np.all(np.isfinite(info)) and np.isfinite(dev)
    if not finite:
        raise StatisticalError(
            "non-finite aggregate from the score query; "
            "the linear predictor overflowed despite clamping"
        )
    return ScoreInfo(u, info, n_rows, dev, pearson)
