"""GLM families and link functions.

Each Link maps the mean to the linear predictor (g, g⁻¹, dμ/dη); each
Family supplies the variance function V(μ), response validation, and unit
deviance. Only pairs whose score is expressible with SQL arithmetic and
EXP are supported: binomial-logit, poisson-log, gaussian-identity,
gamma-log.

The linear predictor is clamped to ±ETA_CLAMP before exponentiation for
the logit and log links; the generated SQL applies the identical clamp so
the in-memory and in-database paths agree to tight tolerance.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .errors import ConfigError, DomainError, ResponseDomainError

# Clamp bound on eta for logit/log; perturbs mu by < 1e-12 while
# preventing overflow in EXP on both the numpy and SQL paths.
ETA_CLAMP = 30.0


# ---------------------------------------------------------------------
# Links
# ---------------------------------------------------------------------

class Link(ABC):
    """Link function g(μ) = η."""

    kind: str = ""

    @abstractmethod
    def link(self, mu):
        """g(μ) → η."""

    @abstractmethod
    def inverse(self, eta):
        """g⁻¹(η) → μ (after clamping)."""

    @abstractmethod
    def mu_eta(self, eta):
        """dμ/dη evaluated at (clamped) η; strictly positive."""

    def clamp(self, eta):
        return np.clip(eta, -ETA_CLAMP, ETA_CLAMP)

    def __repr__(self):
        return f"{type(self).__name__}()"


class LogitLink(Link):
    kind = "logit"

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.log(mu / (1.0 - mu))

    def inverse(self, eta):
        eta = self.clamp(np.asarray(eta, dtype=float))
        return 1.0 / (1.0 + np.exp(-eta))

    def mu_eta(self, eta):
        mu = self.inverse(eta)
        return mu * (1.0 - mu)


class LogLink(Link):
    kind = "log"

    def link(self, mu):
        return np.log(np.asarray(mu, dtype=float))

    def inverse(self, eta):
        return np.exp(self.clamp(np.asarray(eta, dtype=float)))

    def mu_eta(self, eta):
        return self.inverse(eta)


class IdentityLink(Link):
    kind = "identity"

    def link(self, mu):
        return np.asarray(mu, dtype=float)

    def inverse(self, eta):
        return np.asarray(eta, dtype=float)

    def mu_eta(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def clamp(self, eta):
        return np.asarray(eta, dtype=float)


# ---------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------

class Family(ABC):
    """Response distribution: variance function, deviance, validation."""

    kind: str = ""
    has_dispersion: bool = False
    canonical_link: str = ""

    @abstractmethod
    def variance(self, mu):
        """V(μ), strictly positive on the valid mean range."""

    @abstractmethod
    def validate_response(self, y) -> None:
        """Raise ResponseDomainError if y is invalid for this family."""

    @abstractmethod
    def deviance_units(self, y, mu):
        """Per-observation deviance contribution d_i ≥ 0."""

    def check_mean(self, mu) -> None:
        """Raise DomainError if μ left the valid mean range."""

    def __repr__(self):
        return f"{type(self).__name__}()"


class Binomial(Family):
    kind = "binomial"
    has_dispersion = False
    canonical_link = "logit"

    def variance(self, mu):
        return mu * (1.0 - mu)

    def validate_response(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ResponseDomainError("binomial response must be 0/1")

    def deviance_units(self, y, mu):
        # y is 0/1, so one of the two xlogy terms vanishes exactly
        y = np.asarray(y, dtype=float)
        return -2.0 * (y * np.log(mu) + (1.0 - y) * np.log1p(-mu))

    def check_mean(self, mu):
        if np.any(mu <= 0.0) or np.any(mu >= 1.0):
            raise DomainError("binomial mean left (0, 1); check the link")


class Poisson(Family):
    kind = "poisson"
    has_dispersion = False
    canonical_link = "log"

    def variance(self, mu):
        return mu

    def validate_response(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or np.any(np.abs(y - np.round(y)) > 1e-8):
            raise ResponseDomainError("poisson response must be non-negative integers")

    def deviance_units(self, y, mu):
        y = np.asarray(y, dtype=float)
        term = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
        return 2.0 * (term - (y - mu))

    def check_mean(self, mu):
        if np.any(mu <= 0.0):
            raise DomainError("poisson mean must be positive; check the link")


class Gaussian(Family):
    kind = "gaussian"
    has_dispersion = True
    canonical_link = "identity"

    def variance(self, mu):
        return np.ones_like(np.asarray(mu, dtype=float))

    def validate_response(self, y):
        if not np.all(np.isfinite(np.asarray(y, dtype=float))):
            raise ResponseDomainError("gaussian response must be finite")

    def deviance_units(self, y, mu):
        r = np.asarray(y, dtype=float) - mu
        return r * r


class Gamma(Family):
    kind = "gamma"
    has_dispersion = True
    canonical_link = "log"  # digamma-free; the true canonical (inverse) is not used

    def variance(self, mu):
        return mu * mu

    def validate_response(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ResponseDomainError("gamma response must be strictly positive")

    def deviance_units(self, y, mu):
        y = np.asarray(y, dtype=float)
        return 2.0 * (-np.log(y / mu) + (y - mu) / mu)

    def check_mean(self, mu):
        if np.any(mu <= 0.0):
            raise DomainError("gamma mean must be positive; check the link")


_FAMILIES = {f.kind: f for f in (Binomial(), Poisson(), Gaussian(), Gamma())}
_LINKS = {l.kind: l for l in (LogitLink(), LogLink(), IdentityLink())}

# Pairs whose score is SQL-expressible with arithmetic + EXP alone.
SUPPORTED_PAIRS = {
    ("binomial", "logit"),
    ("poisson", "log"),
    ("gaussian", "identity"),
    ("gamma", "log"),
}


def get_family(kind: str) -> Family:
    try:
        return _FAMILIES[kind]
    except KeyError:
        raise ConfigError(
            f"unknown family {kind!r}; supported: {sorted(_FAMILIES)}"
        ) from None


def get_link(kind: str) -> Link:
    try:
        return _LINKS[kind]
    except KeyError:
        raise ConfigError(f"unknown link {kind!r}; supported: {sorted(_LINKS)}") from None


def mean_from_eta(link: Link, eta: float) -> float:
    """μ = g⁻¹(clamp(η)) as a scalar."""
    return float(link.inverse(eta))


def score_weights(family: Family, link: Link, eta, phi: float = 1.0):
    """Score weight w and information weight v at η.

    w = (dμ/dη) / (V(μ)·φ) and v = (dμ/dη)² / (V(μ)·φ). For canonical
    pairs at φ=1, dμ/dη and V(μ) are the same float expression, so w is
    exactly 1.
    """
    if phi <= 0:
        raise ConfigError("dispersion must be positive")
    mu = link.inverse(eta)
    family.check_mean(mu)
    d = link.mu_eta(eta)
    denom = family.variance(mu) * phi
    w = d / denom
    v = d * d / denom
    if np.isscalar(eta) or np.ndim(eta) == 0:
        return float(w), float(v)
    return w, v
