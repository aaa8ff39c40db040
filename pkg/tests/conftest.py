import numpy as np
import pytest

from stepglm.db import Database
from stepglm.model import Intercept, Numeric, SubsampleData, ParamVector, make_spec


@pytest.fixture
def memdb():
    with Database() as db:
        yield db


def simple_spec(family, link, p=2, table="t", filter=None):
    """Intercept + (p-1) numeric columns c1..c{p-1}."""
    terms = [Intercept()] + [Numeric(f"c{i}") for i in range(1, p)]
    return make_spec(table, "y", terms, family, link, filter)


def random_dataset(rng, family_kind, n=200, p=3, beta_scale=0.5):
    """Design matrix with intercept plus a valid response for the family."""
    x = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    beta = beta_scale * rng.standard_normal(p)
    eta = np.clip(x @ beta, -30, 30)
    if family_kind == "binomial":
        mu = 1 / (1 + np.exp(-eta))
        y = (rng.random(n) < mu).astype(float)
    elif family_kind == "poisson":
        y = rng.poisson(np.exp(eta)).astype(float)
    elif family_kind == "gaussian":
        y = eta + rng.standard_normal(n)
    else:  # gamma
        y = rng.gamma(2.0, np.exp(eta) / 2.0)
        y = np.maximum(y, 1e-6)
    return SubsampleData(x, y), beta


def load_table(db, table, columns, rows):
    """Create a table from (name, type) pairs and insert the rows."""
    cols = ", ".join(f'"{n}" {t}' for n, t in columns)
    db.execute(f'CREATE TABLE "{table}" ({cols})', category="write")
    marks = ", ".join("?" * len(columns))
    db.executemany(f'INSERT INTO "{table}" VALUES ({marks})', rows)
    db.commit()


def labelled(values, labels=None):
    values = np.asarray(values, dtype=float)
    if labels is None:
        labels = tuple(f"b{i}" for i in range(len(values)))
    return ParamVector(values, tuple(labels))
