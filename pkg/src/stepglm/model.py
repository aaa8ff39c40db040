"""Model description: terms, parameter vectors, score accumulators.

A ModelSpec is a declarative description of a regression model over a
database table. Terms expand to design columns; each expanded column
carries both a label (for reporting) and a SQL expression (for the
sampling and aggregation queries).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError
from .families import Family, Link, SUPPORTED_PAIRS, get_family, get_link


def quote_ident(name: str) -> str:
    """Double-quote an identifier, doubling embedded quotes."""
    return '"' + str(name).replace('"', '""') + '"'


def quote_literal(value) -> str:
    """Single-quote a string literal, doubling embedded quotes."""
    if isinstance(value, (int, float)):
        return repr(value)
    return "'" + str(value).replace("'", "''") + "'"


# ---------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class Intercept:
    def columns(self):
        return ()


@dataclass(frozen=True)
class Numeric:
    column: str

    def columns(self):
        return (self.column,)


@dataclass(frozen=True)
class Categorical:
    """Categorical column expanded to indicator contrasts.

    levels is the full-table level list (enumerated from the database
    when None); the reference level is dropped from the expansion.
    """

    column: str
    levels: Optional[Tuple[str, ...]] = None
    reference: Optional[str] = None

    def columns(self):
        return (self.column,)

    @property
    def resolved(self) -> bool:
        return self.levels is not None


@dataclass(frozen=True)
class Interaction:
    parts: Tuple[Union[Numeric, Categorical], ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise ConfigError("an interaction needs at least two parts")
        for part in self.parts:
            if isinstance(part, (Intercept, Interaction)):
                raise ConfigError("interaction parts must be numeric or categorical")

    def columns(self):
        cols = []
        for part in self.parts:
            cols.extend(part.columns())
        return tuple(cols)


Term = Union[Intercept, Numeric, Categorical, Interaction]


@dataclass(frozen=True)
class ExpandedColumn:
    """One design-matrix column: report label + SQL expression."""

    label: str
    sql: str


def _expand_part(part) -> list:
    if isinstance(part, Numeric):
        return [ExpandedColumn(part.column, quote_ident(part.column))]
    if isinstance(part, Categorical):
        if not part.resolved:
            raise ConfigError(
                f"categorical levels for {part.column!r} are not resolved; "
                "enumerate them from the database first"
            )
        ref = part.reference if part.reference is not None else part.levels[0]
        if ref not in part.levels:
            raise ConfigError(
                f"reference level {ref!r} not among levels of {part.column!r}"
            )
        out = []
        for lvl in part.levels:
            if lvl == ref:
                continue
            sql = (
                f"CASE WHEN {quote_ident(part.column)} = {quote_literal(lvl)} "
                "THEN 1.0 ELSE 0.0 END"
            )
            out.append(ExpandedColumn(f"{part.column}={lvl}", sql))
        if not out:
            raise ConfigError(
                f"column {part.column!r} has a single level; no contrast possible"
            )
        return out
    raise ConfigError(f"cannot expand term part {part!r}")


# ---------------------------------------------------------------------
# ModelSpec
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    table: str
    response: str
    terms: Tuple[Term, ...]
    family: Family
    link: Link
    filter: Optional[str] = None

    def __post_init__(self):
        n_icpt = sum(isinstance(t, Intercept) for t in self.terms)
        if n_icpt > 1:
            raise ConfigError("at most one intercept term is allowed")
        if (self.family.kind, self.link.kind) not in SUPPORTED_PAIRS:
            # probit and friends need more than arithmetic + EXP in SQL
            from .errors import ExpressibilityError

            raise ExpressibilityError(
                f"{self.family.kind}-{self.link.kind} is not supported: the score "
                "must be expressible with SQL arithmetic and EXP alone"
            )

    @property
    def resolved(self) -> bool:
        return all(
            part.resolved
            for t in self.terms
            for part in (t.parts if isinstance(t, Interaction) else (t,))
            if isinstance(part, Categorical)
        )

    def expanded_columns(self) -> Tuple[ExpandedColumn, ...]:
        cols = []
        for term in self.terms:
            if isinstance(term, Intercept):
                cols.append(ExpandedColumn("(Intercept)", "1.0"))
            elif isinstance(term, Interaction):
                groups = [_expand_part(p) for p in term.parts]
                prod = groups[0]
                for grp in groups[1:]:
                    prod = [
                        ExpandedColumn(
                            f"{a.label}:{b.label}", f"({a.sql})*({b.sql})"
                        )
                        for a in prod
                        for b in grp
                    ]
                cols.extend(prod)
            else:
                cols.extend(_expand_part(term))
        labels = [c.label for c in cols]
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate design columns; check the term list")
        if not cols:
            raise ConfigError("model has no design columns")
        return tuple(cols)

    @property
    def p(self) -> int:
        return len(self.expanded_columns())

    def labels(self) -> Tuple[str, ...]:
        return tuple(c.label for c in self.expanded_columns())

    def model_columns(self) -> Tuple[str, ...]:
        """Raw table columns the model reads (response first, no dups)."""
        cols = [self.response]
        for term in self.terms:
            for c in term.columns():
                if c not in cols:
                    cols.append(c)
        return tuple(cols)


def make_spec(table, response, terms, family, link, filter=None) -> ModelSpec:
    """Convenience constructor accepting family/link by name."""
    if isinstance(family, str):
        family = get_family(family)
    if isinstance(link, str):
        link = get_link(link)
    return ModelSpec(table, response, tuple(terms), family, link, filter)


# ---------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class ParamVector:
    """Coefficient vector with term labels."""

    values: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) != len(self.labels):
            raise ConfigError("coefficient/label length mismatch")
        if not np.all(np.isfinite(values)):
            raise ConfigError("coefficients must be finite")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("coefficient labels must be unique")

    def __len__(self):
        return len(self.values)

    def replace_values(self, values) -> "ParamVector":
        return ParamVector(np.asarray(values, dtype=float), self.labels)


@dataclass
class SubsampleData:
    """In-memory design matrix and response materialised by sampling."""

    x: np.ndarray  # (n, p)
    y: np.ndarray  # (n,)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape[0] != self.y.shape[0]:
            raise ConfigError("design matrix and response row counts differ")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass
class ScoreInfo:
    """Accumulated score U, information I, row count, deviance sum."""

    u: np.ndarray
    info: np.ndarray  # full symmetric (p, p)
    n_rows: int
    deviance: float
    pearson: Optional[float] = None

    def __add__(self, other: "ScoreInfo") -> "ScoreInfo":
        pearson = None
        if self.pearson is not None and other.pearson is not None:
            pearson = self.pearson + other.pearson
        return ScoreInfo(
            self.u + other.u,
            self.info + other.info,
            self.n_rows + other.n_rows,
            self.deviance + other.deviance,
            pearson,
        )
