"""In-memory GLM score/information evaluation and Fisher-scoring solver.

This is the exact oracle for the SQL aggregation path: score_and_info on
a fully materialised table must match the database-computed aggregates.
The solver fits the subsample MLE used as the one-step starting value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    NonConvergenceError,
    SeparationError,
)
from .linalg import solve_spd
from .model import ModelSpec, ParamVector, ScoreInfo, SubsampleData

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 25
SEPARATION_BOUND = 25.0


def score_and_info(
    data: SubsampleData,
    spec: ModelSpec,
    beta: ParamVector,
    phi: float = 1.0,
    with_pearson: bool = False,
) -> ScoreInfo:
    """Exact evaluation of the score U(β) and expected information I(β).

    U = Σ xᵢ wᵢ (yᵢ − μᵢ) and I = Σ vᵢ xᵢxᵢᵀ with the standard GLM
    weights w = (dμ/dη)/(Vφ), v = (dμ/dη)²/(Vφ).
    """
    if data.p != len(beta):
        raise ConfigError(
            f"design has {data.p} columns but beta has {len(beta)}"
        )
    spec.family.validate_response(data.y)
    link, family = spec.link, spec.family
    eta = link.clamp(data.x @ beta.values)
    mu = link.inverse(eta)
    family.check_mean(mu)
    d = link.mu_eta(eta)
    denom = family.variance(mu) * phi
    w = d / denom
    v = d * d / denom
    resid = data.y - mu
    u = data.x.T @ (w * resid)
    info = (data.x * v[:, None]).T @ data.x
    dev = float(np.sum(family.deviance_units(data.y, mu)))
    pearson = None
    if with_pearson:
        pearson = float(np.sum(resid * resid / family.variance(mu)))
    return ScoreInfo(u, (info + info.T) / 2.0, data.n, dev, pearson)


def deviance(data: SubsampleData, spec: ModelSpec, beta: ParamVector) -> float:
    """Model deviance at β (φ-free)."""
    eta = spec.link.clamp(data.x @ beta.values)
    mu = spec.link.inverse(eta)
    spec.family.validate_response(data.y)
    return float(np.sum(spec.family.deviance_units(data.y, mu)))


def _default_start(data: SubsampleData, spec: ModelSpec) -> ParamVector:
    """Zero coefficients with the intercept at g(adjusted ȳ)."""
    labels = spec.labels()
    values = np.zeros(len(labels))
    if "(Intercept)" in labels:
        ybar = float(np.mean(data.y))
        if spec.family.kind == "binomial":
            ybar = (np.sum(data.y) + 0.5) / (data.n + 1.0)
        elif spec.link.kind == "log":
            ybar = max(ybar, 1e-3)
        values[labels.index("(Intercept)")] = float(spec.link.link(ybar))
    return ParamVector(values, labels)


@dataclass
class IrlsFit:
    beta: ParamVector
    info: np.ndarray  # I_n(β̃) at φ=1
    phi: float
    iterations: int
    deviance: float


def irls_fit(
    data: SubsampleData,
    spec: ModelSpec,
    start: ParamVector = None,
    tol: float = IRLS_TOL,
    max_iter: int = IRLS_MAX_ITER,
) -> IrlsFit:
    """Fisher scoring β ← β + I(β)⁻¹U(β) until the step max-norm < tol.

    Returns the subsample information at β̃ (φ=1) and the Pearson
    dispersion estimate for gaussian/gamma (1 otherwise).
    """
    p = spec.p
    if data.n <= p:
        raise ConfigError(f"need more rows ({data.n}) than parameters ({p})")
    beta = start if start is not None else _default_start(data, spec)
    iterations = 0
    converged = False
    si = None
    for _ in range(max_iter + 1):
        si = score_and_info(data, spec, beta, phi=1.0, with_pearson=True)
        step = solve_spd(si.info, si.u)
        if np.max(np.abs(step)) < tol:
            converged = True
            break
        beta = beta.replace_values(beta.values + step)
        iterations += 1
    if not converged:
        raise NonConvergenceError(
            f"Fisher scoring did not converge in {max_iter} iterations"
        )
    # fixed-point check: the score must be numerically zero at β̃
    scale = max(1.0, float(np.max(np.diag(si.info))))
    if np.max(np.abs(si.u)) >= p * tol * scale * 10.0:
        raise NonConvergenceError("score is not zero at the reported optimum")
    eta = spec.link.clamp(data.x @ beta.values)
    if spec.family.kind == "binomial" and np.max(np.abs(eta)) > SEPARATION_BOUND:
        raise SeparationError(
            "fitted linear predictor at the clamp boundary; "
            "the responses appear to be separated"
        )
    phi = 1.0
    if spec.family.has_dispersion:
        phi = si.pearson / (data.n - p)
    return IrlsFit(beta, si.info, phi, iterations, si.deviance)
