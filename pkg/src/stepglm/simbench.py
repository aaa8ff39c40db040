"""Synthetic data generation, an in-database full-MLE oracle, and the
one-step vs full-MLE efficiency experiment.

The experiment mirrors the published comparison layout: several seeded
realisations of the one-step estimator (both information variants)
against the full maximum likelihood estimator computed by iterated
aggregation, with MSE ratios and confidence-interval coverage against
the known truth.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace as dc_replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .db import Database, count_rows, resolve_spec, run_score_query, sample_rows
from .errors import NonConvergenceError, StepGlmError
from .glm import irls_fit
from .linalg import inverse_spd
from .model import (
    Categorical,
    Intercept,
    ModelSpec,
    Numeric,
    ParamVector,
    SubsampleData,
    make_spec,
    quote_ident,
)
from .onestep import Z_95, one_step_update
from .sampler import SampleSpec, choose_subsample_size
from .sqlgen import build_score_query

INSERT_BATCH = 10_000


@dataclass(frozen=True)
class CategoricalDesign:
    name: str
    levels: Tuple[str, ...]
    probs: Optional[Tuple[float, ...]] = None  # uniform when None


@dataclass(frozen=True)
class SimDesign:
    """Recipe for a synthetic table: standard-normal numeric predictors,
    optional categorical predictors, response drawn from the model."""

    N: int
    beta_true: Sequence[float]
    family: str = "binomial"
    link: str = "logit"
    n_numeric: int = 3
    categoricals: Tuple[CategoricalDesign, ...] = ()
    dispersion: float = 1.0
    seed: int = 0
    table: str = "sim"

    def model_spec(self) -> ModelSpec:
        terms = [Intercept()]
        terms += [Numeric(f"x{i + 1}") for i in range(self.n_numeric)]
        for cat in self.categoricals:
            terms.append(Categorical(cat.name, tuple(cat.levels), cat.levels[0]))
        return make_spec(self.table, "y", terms, self.family, self.link)

    def beta_vector(self) -> ParamVector:
        spec = self.model_spec()
        return ParamVector(np.asarray(self.beta_true, dtype=float), spec.labels())


def _expand_batch(design: SimDesign, numerics, cat_values) -> np.ndarray:
    cols = [np.ones(len(numerics))]
    cols += [numerics[:, i] for i in range(design.n_numeric)]
    for ci, cat in enumerate(design.categoricals):
        vals = cat_values[ci]
        for lvl in cat.levels[1:]:
            cols.append((vals == lvl).astype(float))
    return np.column_stack(cols)


def generate_table(db: Database, design: SimDesign) -> str:
    """Create and populate the synthetic table; deterministic under seed."""
    spec = design.model_spec()
    beta = design.beta_vector()
    link, family = spec.link, spec.family
    rng = np.random.default_rng(design.seed)

    col_defs = [f"x{i + 1} REAL" for i in range(design.n_numeric)]
    col_defs += [f"{quote_ident(c.name)} TEXT" for c in design.categoricals]
    col_defs.append("y REAL")
    tq = quote_ident(design.table)
    db.execute(f"DROP TABLE IF EXISTS {tq}", category="write")
    db.execute(f"CREATE TABLE {tq} ({', '.join(col_defs)})", category="write")
    placeholders = ", ".join("?" * (design.n_numeric + len(design.categoricals) + 1))
    insert = f"INSERT INTO {tq} VALUES ({placeholders})"

    done = 0
    while done < design.N:
        b = min(INSERT_BATCH, design.N - done)
        numerics = rng.standard_normal((b, design.n_numeric))
        cat_values = []
        for cat in design.categoricals:
            probs = cat.probs
            cat_values.append(rng.choice(np.asarray(cat.levels), size=b, p=probs))
        x = _expand_batch(design, numerics, cat_values)
        mu = link.inverse(link.clamp(x @ beta.values))
        kind = family.kind
        if kind == "binomial":
            y = (rng.random(b) < mu).astype(float)
        elif kind == "poisson":
            y = rng.poisson(mu).astype(float)
        elif kind == "gaussian":
            y = mu + np.sqrt(design.dispersion) * rng.standard_normal(b)
        else:  # gamma
            shape = 1.0 / design.dispersion
            y = rng.gamma(shape, mu * design.dispersion)
        cols = [numerics[:, i].tolist() for i in range(design.n_numeric)]
        cols += [v.tolist() for v in cat_values]
        cols.append(y.tolist())
        db.executemany(insert, list(zip(*cols)))
        done += b
    db.commit()
    return design.table


def materialize_all(db: Database, spec: ModelSpec) -> SubsampleData:
    """Pull every qualifying row into memory (small-N oracle use only)."""
    N = count_rows(db, spec)
    return sample_rows(db, spec, N, N, seed=0)


@dataclass
class OracleFit:
    beta: ParamVector
    info: np.ndarray
    iterations: int


def full_mle_oracle(
    db: Database,
    spec: ModelSpec,
    start: ParamVector,
    tol: float = 1e-8,
    max_iter: int = 25,
) -> OracleFit:
    """Full-data MLE by iterated aggregation queries (chunk-free IRLS)."""
    beta = start
    iterations = 0
    for _ in range(max_iter + 1):
        plan = build_score_query(spec, beta, with_info=True)
        si = run_score_query(db, plan)
        new = one_step_update(beta, si.u, si.info)
        step = np.max(np.abs(new.values - beta.values))
        if step < tol:
            return OracleFit(beta, si.info, iterations)
        beta = new
        iterations += 1
    raise NonConvergenceError(
        f"full-data Fisher scoring did not converge in {max_iter} iterations"
    )


# ---------------------------------------------------------------------
# Efficiency experiment
# ---------------------------------------------------------------------

ESTIMATORS = ("onestep_subsample", "onestep_full", "full_mle")


@dataclass
class ExperimentReport:
    design: SimDesign
    exponents: Tuple[float, ...]
    replicates: int
    rows: List[dict]        # one per replicate × exponent × estimator × coordinate
    failures: List[dict]
    summary: dict

    def write_csv(self, path):
        fields = [
            "replicate", "exponent", "estimator", "label", "estimate", "se",
            "error", "covered", "n", "N", "time_s",
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(self.rows)

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary, fh, indent=2)


def _fit_replicate(db, spec, beta_true, exponent, seed):
    """One replicate at one exponent: both one-step variants + full MLE."""
    N = count_rows(db, spec)
    p = spec.p
    t0 = time.perf_counter()
    n_target = choose_subsample_size(N, SampleSpec(exponent=exponent), p)
    sub = sample_rows(db, spec, n_target, N, seed=seed)
    sub_fit = irls_fit(sub, spec)
    t_sub = time.perf_counter() - t0

    t0 = time.perf_counter()
    plan = build_score_query(spec, sub_fit.beta, with_info=True)
    si = run_score_query(db, plan)
    t_agg = time.perf_counter() - t0

    phi = sub_fit.phi
    info_sub = (N / sub.n) * sub_fit.info
    out = {}
    for name, info in (("onestep_full", si.info), ("onestep_subsample", info_sub)):
        beta_hat = one_step_update(sub_fit.beta, si.u, info)
        se = np.sqrt(inverse_spd(info).diag() * phi)
        out[name] = (beta_hat, se, t_sub + t_agg)

    t0 = time.perf_counter()
    mle = full_mle_oracle(db, spec, start=out["onestep_full"][0])
    t_mle = time.perf_counter() - t0
    se_mle = np.sqrt(inverse_spd(mle.info).diag() * phi)
    out["full_mle"] = (mle.beta, se_mle, t_mle)
    return out, sub.n, N


def efficiency_experiment(
    design: SimDesign,
    replicates: int,
    exponents: Sequence[float] = (5.0 / 9.0,),
    db_path: str = ":memory:",
    progress=None,
) -> ExperimentReport:
    """Monte-Carlo comparison of the one-step variants to the full MLE."""
    beta_true = design.beta_vector()
    labels = beta_true.labels
    rows: List[dict] = []
    failures: List[dict] = []

    for r in range(replicates):
        rep_design = dc_replace(design, seed=design.seed + 1000 * r)
        with Database(db_path) as db:
            generate_table(db, rep_design)
            spec = resolve_spec(db, rep_design.model_spec())
            for e in exponents:
                try:
                    fits, n, N = _fit_replicate(
                        db, spec, beta_true, e, seed=rep_design.seed + 7
                    )
                except StepGlmError as exc:
                    failures.append(
                        {"replicate": r, "exponent": e, "error": str(exc)}
                    )
                    continue
                for est, (beta, se, t) in fits.items():
                    for j, lbl in enumerate(labels):
                        err = beta.values[j] - beta_true.values[j]
                        covered = abs(err) < Z_95 * se[j]
                        rows.append(
                            {
                                "replicate": r,
                                "exponent": e,
                                "estimator": est,
                                "label": lbl,
                                "estimate": beta.values[j],
                                "se": se[j],
                                "error": err,
                                "covered": int(covered),
                                "n": n,
                                "N": N,
                                "time_s": round(t, 4),
                            }
                        )
        if progress:
            progress(r + 1, replicates)

    summary = summarize(rows, labels, exponents, replicates, failures)
    return ExperimentReport(
        design, tuple(exponents), replicates, rows, failures, summary
    )


def summarize(rows, labels, exponents, replicates, failures) -> dict:
    """Per-exponent, per-coordinate MSE ratios, coverage and agreement."""
    by = {}
    for row in rows:
        key = (row["exponent"], row["estimator"], row["label"])
        by.setdefault(key, []).append(row)

    coords = {}
    for e in exponents:
        for lbl in labels:
            entry = {}
            mse = {}
            for est in ESTIMATORS:
                recs = by.get((e, est, lbl), [])
                if not recs:
                    continue
                errs = np.array([r["error"] for r in recs])
                mse[est] = float(np.mean(errs**2))
                entry[f"coverage_{est}"] = float(
                    np.mean([r["covered"] for r in recs])
                )
            if "full_mle" in mse and mse["full_mle"] > 0:
                for est in ("onestep_subsample", "onestep_full"):
                    if est in mse:
                        entry[f"mse_ratio_{est}"] = mse[est] / mse["full_mle"]
            entry.update({f"mse_{k}": v for k, v in mse.items()})
            # variant agreement: |sub - full| < 0.2 SE, per replicate
            sub = by.get((e, "onestep_subsample", lbl), [])
            ful = by.get((e, "onestep_full", lbl), [])
            if sub and ful:
                diffs = [
                    abs(a["estimate"] - b["estimate"]) < 0.2 * b["se"]
                    for a, b in zip(sub, ful)
                ]
                entry["variant_agreement"] = float(np.mean(diffs))
            coords[f"{e:.6g}|{lbl}"] = entry

    times = {}
    for est in ESTIMATORS:
        vals = [r["time_s"] for r in rows if r["estimator"] == est]
        if vals:
            times[est] = float(np.mean(vals))
    return {
        "replicates": replicates,
        "exponents": list(exponents),
        "labels": list(labels),
        "coordinates": coords,
        "mean_time_s": times,
        "failures": failures,
    }
