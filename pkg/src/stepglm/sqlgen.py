"""SQL generation for sampling and score-aggregation queries.

Everything here is pure text generation: given a model spec and a
coefficient vector, build the single aggregation SELECT that computes
the score vector (and optionally the information matrix, deviance and
Pearson sums) over every qualifying row. The only engine functions
required are EXP, LN, CASE, SUM and COUNT, plus a uniform random source
for Bernoulli sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import ExpressibilityError
from .families import ETA_CLAMP
from .model import ModelSpec, ParamVector, quote_ident


def base_predicate(spec: ModelSpec) -> str:
    """User filter plus NOT NULL guards on every model column.

    The same predicate is used for counting, sampling and aggregation so
    all three queries see exactly the same row population.
    """
    parts = []
    if spec.filter:
        parts.append(f"({spec.filter})")
    for col in spec.model_columns():
        parts.append(f"{quote_ident(col)} IS NOT NULL")
    return " AND ".join(parts)


def _eta_sql(spec: ModelSpec, beta: ParamVector) -> str:
    cols = spec.expanded_columns()
    terms = [f"({float(bj)!r})*({c.sql})" for bj, c in zip(beta.values, cols)]
    return " + ".join(terms)


def _clamped(expr: str) -> str:
    hi, lo = repr(ETA_CLAMP), repr(-ETA_CLAMP)
    return (
        f"CASE WHEN ({expr}) > {hi} THEN {hi} "
        f"WHEN ({expr}) < {lo} THEN {lo} ELSE ({expr}) END"
    )


def _mu_sql(spec: ModelSpec) -> Optional[str]:
    """μ as a function of the clamped eta column; None = no clamp needed."""
    kind = spec.link.kind
    if kind == "logit":
        return "1.0/(1.0 + EXP(-eta))"
    if kind == "log":
        return "EXP(eta)"
    return "eta"


def _weight_sql(spec: ModelSpec, phi: float) -> Tuple[str, str]:
    """(w, v) in terms of the mu / eta columns."""
    pair = (spec.family.kind, spec.link.kind)
    ph = repr(float(phi))
    if pair == ("binomial", "logit"):
        return "1.0", "mu*(1.0 - mu)"
    if pair == ("poisson", "log"):
        return "1.0", "mu"
    if pair == ("gaussian", "identity"):
        return f"1.0/({ph})", f"1.0/({ph})"
    if pair == ("gamma", "log"):
        return f"1.0/(mu*({ph}))", f"1.0/({ph})"
    raise ExpressibilityError(
        f"{pair[0]}-{pair[1]} cannot be expressed with SQL arithmetic and EXP"
    )


def _deviance_sql(spec: ModelSpec) -> str:
    kind = spec.family.kind
    if kind == "gaussian":
        return "(y - mu)*(y - mu)"
    if kind == "binomial":
        return "-2.0*(y*LN(mu) + (1.0 - y)*LN(1.0 - mu))"
    if kind == "poisson":
        return "2.0*((CASE WHEN y > 0 THEN y*LN(y/mu) ELSE 0.0 END) - (y - mu))"
    if kind == "gamma":
        return "2.0*(-LN(y/mu) + (y - mu)/mu)"
    raise ExpressibilityError(f"no deviance expression for family {kind!r}")


def _pearson_sql(spec: ModelSpec) -> str:
    v = {
        "binomial": "mu*(1.0 - mu)",
        "poisson": "mu",
        "gaussian": "1.0",
        "gamma": "mu*mu",
    }[spec.family.kind]
    return f"(y - mu)*(y - mu)/({v})"


@dataclass(frozen=True)
class QueryPlan:
    """A generated aggregation query and its output column schema."""

    sql: str
    columns: Tuple[str, ...]
    p: int
    with_info: bool
    with_pearson: bool


def build_score_query(
    spec: ModelSpec,
    beta: ParamVector,
    with_info: bool = False,
    with_pearson: bool = False,
    phi: float = 1.0,
) -> QueryPlan:
    """Single aggregation SELECT computing U(β) (and optionally I(β)).

    Output columns: u_0..u_{p-1}, then i_j_k for the upper triangle when
    with_info, then n_rows and deviance (and pearson last when
    requested). Deterministic text given (spec, beta, flags).
    """
    cols = spec.expanded_columns()
    if tuple(beta.labels) != tuple(c.label for c in cols):
        from .errors import ConfigError

        raise ConfigError("beta labels do not match the model expansion")
    p = len(cols)
    w_sql, v_sql = _weight_sql(spec, phi)

    inner_cols = [f"{quote_ident(spec.response)} AS y"]
    for j, c in enumerate(cols):
        inner_cols.append(f"{c.sql} AS x_{j}")
    inner_cols.append(f"{_eta_sql(spec, beta)} AS eta_raw")
    pred = base_predicate(spec)
    inner = (
        "SELECT " + ",\n       ".join(inner_cols)
        + f"\nFROM {quote_ident(spec.table)}"
        + (f"\nWHERE {pred}" if pred else "")
    )

    clamp = _clamped("eta_raw") if spec.link.kind != "identity" else "eta_raw"
    xs = ", ".join(f"x_{j}" for j in range(p))
    mid = f"SELECT y, {xs}, {clamp} AS eta\nFROM (\n{inner}\n)"
    mu = f"SELECT y, {xs}, eta, {_mu_sql(spec)} AS mu\nFROM (\n{mid}\n)"

    aggs = []
    names = []
    for j in range(p):
        aggs.append(f"COALESCE(SUM(x_{j}*({w_sql})*(y - mu)), 0.0) AS u_{j}")
        names.append(f"u_{j}")
    if with_info:
        for j in range(p):
            for k in range(j, p):
                aggs.append(
                    f"COALESCE(SUM(({v_sql})*x_{j}*x_{k}), 0.0) AS i_{j}_{k}"
                )
                names.append(f"i_{j}_{k}")
    aggs.append("COUNT(*) AS n_rows")
    names.append("n_rows")
    aggs.append(f"COALESCE(SUM({_deviance_sql(spec)}), 0.0) AS deviance")
    names.append("deviance")
    if with_pearson:
        aggs.append(f"COALESCE(SUM({_pearson_sql(spec)}), 0.0) AS pearson")
        names.append("pearson")

    sql = "SELECT " + ",\n       ".join(aggs) + f"\nFROM (\n{mu}\n)"
    return QueryPlan(sql, tuple(names), p, with_info, with_pearson)


# ---------------------------------------------------------------------
# Sampling and bookkeeping queries
# ---------------------------------------------------------------------

_M64 = (1 << 64) - 1


def _mix_seed(seed: int) -> int:
    """splitmix64 finaliser: consecutive user seeds must land far apart,
    otherwise the per-row hash below barely changes between seeds."""
    z = (int(seed) + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) % 4294967296


# Deterministic per-row uniform in [0, 1): two multiplicative-hash rounds
# over (rowid, mixed seed), kept within int64 range. Pure SQL arithmetic,
# so it is fast and reproducible on any engine; engines with a seedable
# random function can substitute it via the dialect.
def hash_uniform_sql(seed: int, row_key: str = "rowid") -> str:
    s = _mix_seed(seed)
    h = (
        f"(((({row_key} % 2147483647) * 2654435761 + {s}) % 4294967296)"
        f" * 48271) % 2147483647"
    )
    return f"(({h}) / 2147483647.0)"


def build_count_query(spec: ModelSpec) -> str:
    pred = base_predicate(spec)
    return (
        f"SELECT COUNT(*) FROM {quote_ident(spec.table)}"
        + (f" WHERE {pred}" if pred else "")
    )


def build_levels_query(table: str, column: str) -> str:
    q = quote_ident(column)
    return (
        f"SELECT DISTINCT {q} FROM {quote_ident(table)} "
        f"WHERE {q} IS NOT NULL ORDER BY {q}"
    )


def build_sample_query(
    spec: ModelSpec,
    k: float,
    n_target: int,
    seed: int,
    exact: bool,
    row_key: str = "rowid",
) -> str:
    """Subsample SELECT materialising the expanded design plus response.

    Bernoulli mode keeps each row independently with probability k;
    exact mode orders by the per-row hash and takes exactly n_target.
    """
    cols = spec.expanded_columns()
    select_cols = [f"{c.sql} AS x_{j}" for j, c in enumerate(cols)]
    select_cols.append(f"{quote_ident(spec.response)} AS y")
    pred = base_predicate(spec)
    u = hash_uniform_sql(seed, row_key)
    sql = (
        "SELECT " + ",\n       ".join(select_cols)
        + f"\nFROM {quote_ident(spec.table)}"
    )
    if exact:
        if pred:
            sql += f"\nWHERE {pred}"
        sql += f"\nORDER BY {u}\nLIMIT {int(n_target)}"
    else:
        clauses = [pred] if pred else []
        clauses.append(f"{u} < {float(k)!r}")
        sql += "\nWHERE " + " AND ".join(clauses)
    return sql
