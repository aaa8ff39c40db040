"""Two-step fit: subsample MLE, then one Fisher-scoring update using a
single full-data aggregation query.

The update β̂ = β̃ + Ĩ⁻¹ U_N(β̃) is asymptotically equivalent to the full
maximum likelihood estimator whenever the subsample grows faster than
√N; Ĩ is either the full-data information I_N(β̃) or the scaled
subsample information (N/n)·I_n(β̃) (the default — it keeps the
aggregation query p(p+1)/2 columns lighter).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .db import Database, count_rows, resolve_spec, run_score_query, sample_rows
from .errors import ConfigError, StatisticalError
from .glm import irls_fit
from .linalg import SymMatrix, inverse_spd, solve_spd
from .model import ModelSpec, ParamVector
from .sampler import SampleSpec, choose_subsample_size
from .sqlgen import build_score_query

INFO_SOURCES = ("scaled_subsample", "full_data")
DISCREPANCY_SES = 5.0
Z_95 = 1.96


@dataclass(frozen=True)
class FitOptions:
    sample: SampleSpec = field(default_factory=SampleSpec)
    info_source: str = "scaled_subsample"
    seed: Optional[int] = None
    compute_deviance: bool = False

    def __post_init__(self):
        if self.info_source not in INFO_SOURCES:
            raise ConfigError(
                f"info_source must be one of {INFO_SOURCES}, got {self.info_source!r}"
            )


@dataclass
class FitResult:
    beta_tilde: ParamVector
    beta_hat: ParamVector
    covariance: SymMatrix
    std_errors: np.ndarray
    n: int
    N: int
    phi: float
    info_source: str
    deviance: Optional[float]
    warnings: List[str]
    timings_ms: dict

    def ci(self, level_z: float = Z_95):
        lo = self.beta_hat.values - level_z * self.std_errors
        hi = self.beta_hat.values + level_z * self.std_errors
        return lo, hi


def one_step_update(beta_tilde: ParamVector, u: np.ndarray, info) -> ParamVector:
    """β̂ = β̃ + info⁻¹·u."""
    u = np.asarray(u, dtype=float)
    if len(u) != len(beta_tilde):
        raise ConfigError("score length does not match coefficient length")
    return beta_tilde.replace_values(beta_tilde.values + solve_spd(info, u))


def fit_onestep(db: Database, spec: ModelSpec, opts: FitOptions = None) -> FitResult:
    """Run the full pipeline; exactly one full-data aggregation pass."""
    opts = opts or FitOptions()
    timings = {}
    warnings: List[str] = []

    t0 = time.perf_counter()
    N = count_rows(db, spec)
    spec = resolve_spec(db, spec)
    p = spec.p
    if N <= p:
        raise StatisticalError(f"only {N} usable rows for {p} parameters")
    timings["count"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    n_target = choose_subsample_size(N, opts.sample, p)
    sub = sample_rows(db, spec, n_target, N, opts.seed)
    m = sub.n
    # full-table levels absent from the subsample: fit still works, but
    # their subsample information is zero — worth flagging
    absent = [
        lbl
        for j, lbl in enumerate(spec.labels())
        if "=" in lbl and not np.any(sub.x[:, j] != 0.0)
    ]
    if absent:
        warnings.append(
            "levels absent from the subsample: " + ", ".join(sorted(absent))
        )
    timings["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sub_fit = irls_fit(sub, spec)
    beta_tilde = sub_fit.beta
    timings["subfit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with_info = opts.info_source == "full_data"
    plan = build_score_query(
        spec, beta_tilde, with_info=with_info, with_pearson=opts.compute_deviance
    )
    si = run_score_query(db, plan)
    timings["aggregate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if with_info:
        info_tilde = si.info
    else:
        info_tilde = (N / m) * sub_fit.info
    beta_hat = one_step_update(beta_tilde, si.u, info_tilde)

    phi = sub_fit.phi
    if opts.compute_deviance and spec.family.has_dispersion and si.pearson is not None:
        phi = si.pearson / (N - p)
    covariance = inverse_spd(info_tilde).scaled(phi)
    std_errors = np.sqrt(covariance.diag())

    # measure the update against the subsample estimator's own
    # uncertainty (I_n⁻¹φ): a representative subsample moves ~√p joint
    # standard errors, so 5 is a real outlier
    delta = beta_hat.values - beta_tilde.values
    maha = float(np.sqrt(delta @ (sub_fit.info @ delta) / phi))
    if maha > DISCREPANCY_SES:
        warnings.append(
            f"one-step moved {maha:.1f} joint standard errors from the "
            "subsample estimate; the subsample may be unrepresentative"
        )
    timings["update"] = time.perf_counter() - t0

    return FitResult(
        beta_tilde=beta_tilde,
        beta_hat=beta_hat,
        covariance=covariance,
        std_errors=std_errors,
        n=m,
        N=N,
        phi=phi,
        info_source=opts.info_source,
        deviance=si.deviance if opts.compute_deviance else None,
        warnings=warnings,
        timings_ms={k: v * 1000.0 for k, v in timings.items()},
    )


# ---------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------

def result_dict(result: FitResult) -> dict:
    lo, hi = result.ci()
    return {
        "coefficients": [
            {
                "label": lbl,
                "beta_tilde": bt,
                "beta_hat": bh,
                "se": se,
                "ci_low": lo_j,
                "ci_high": hi_j,
            }
            for lbl, bt, bh, se, lo_j, hi_j in zip(
                result.beta_hat.labels,
                result.beta_tilde.values.tolist(),
                result.beta_hat.values.tolist(),
                result.std_errors.tolist(),
                lo.tolist(),
                hi.tolist(),
            )
        ],
        "n": result.n,
        "N": result.N,
        "phi": result.phi,
        "info_source": result.info_source,
        "warnings": list(result.warnings),
        "timings_ms": {k: round(v, 3) for k, v in result.timings_ms.items()},
    }


def report(result: FitResult, format: str = "text", with_timings: bool = True) -> str:
    """Render a fit as a text table, JSON document, or CSV."""
    if format == "json":
        doc = result_dict(result)
        if not with_timings:
            doc.pop("timings_ms")
        return json.dumps(doc, indent=2)
    if format == "csv":
        lines = ["label,beta_tilde,beta_hat,se,ci_low,ci_high"]
        lo, hi = result.ci()
        for j, lbl in enumerate(result.beta_hat.labels):
            vals = (
                result.beta_tilde.values[j], result.beta_hat.values[j],
                result.std_errors[j], lo[j], hi[j],
            )
            lines.append(lbl + "," + ",".join(repr(float(v)) for v in vals))
        return "\n".join(lines)
    if format != "text":
        raise ConfigError(f"unknown report format {format!r}")

    lo, hi = result.ci()
    width = max(12, max(len(l) for l in result.beta_hat.labels))
    head = (
        f"{'term':<{width}} {'subsample':>12} {'estimate':>12} "
        f"{'se':>10} {'95% CI':>24}"
    )
    lines = [head, "-" * len(head)]
    for j, lbl in enumerate(result.beta_hat.labels):
        ci = f"[{lo[j]: .4g}, {hi[j]: .4g}]"
        lines.append(
            f"{lbl:<{width}} {result.beta_tilde.values[j]:>12.6g} "
            f"{result.beta_hat.values[j]:>12.6g} {result.std_errors[j]:>10.4g} "
            f"{ci:>24}"
        )
    lines.append("-" * len(head))
    lines.append(
        f"n = {result.n}   N = {result.N}   phi = {result.phi:.6g}   "
        f"info = {result.info_source}"
    )
    if result.deviance is not None:
        lines.append(f"deviance = {result.deviance:.6g}")
    if with_timings:
        t = "   ".join(f"{k} {v:.1f}ms" for k, v in result.timings_ms.items())
        lines.append("timings: " + t)
    for w in result.warnings:
        lines.append("warning: " + w)
    return "\n".join(lines)
