"""Gaussian hypothesis pair: sensing model, log-likelihood ratios, innovations.

Observations follow y(k) = m_l + noise under hypothesis l in {0, 1}, where the
noise is zero-mean Gaussian with covariance ``cov`` shared by both hypotheses
and independent across time.  The log-likelihood ratio of a single snapshot is

    L(y) = w . (y - (m0 + m1)/2),        w = cov^{-1} (m1 - m0),

which is Gaussian under either hypothesis with variance sigma2 = (m1-m0) . w
and mean +sigma2/2 under H1, -sigma2/2 under H0.  L splits into per-sensor
terms eta_i = w_i (y_i - midpoint_i); these "innovations" are what the
distributed detector exchanges, so their joint statistics are exposed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.linalg import cho_solve

from .errors import (
    DegenerateCovariance,
    IndistinguishableHypotheses,
    ParameterError,
    ShapeError,
)

__all__ = [
    "Hypothesis",
    "GaussianHypothesisPair",
    "InnovationStats",
    "Observation",
    "build_model",
    "sample_observation",
    "sample_observations",
    "llr",
    "local_innovations",
    "innovation_stats",
]

SPD_PIVOT_RTOL = 1e-12
SYMMETRY_ATOL = 1e-12


class Hypothesis(IntEnum):
    H0 = 0
    H1 = 1


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GaussianHypothesisPair:
    """Two Gaussian measures on R^n differing only in their mean vector.

    All derived quantities are fixed at build time; arrays are read-only.
    ``noise_chol`` is the lower-triangular factor of ``cov`` used for
    sampling, ``innovation_weights`` solves cov @ w = m1 - m0.
    """

    n_sensors: int
    m0: np.ndarray
    m1: np.ndarray
    cov: np.ndarray
    noise_chol: np.ndarray
    innovation_weights: np.ndarray
    llr_mean0: float
    llr_mean1: float
    llr_variance: float

    @property
    def midpoint(self) -> np.ndarray:
        return (self.m0 + self.m1) / 2.0

    def mean(self, h: Hypothesis) -> np.ndarray:
        return self.m1 if h == Hypothesis.H1 else self.m0

    def llr_mean(self, h: Hypothesis) -> float:
        return self.llr_mean1 if h == Hypothesis.H1 else self.llr_mean0


@dataclass(frozen=True)
class InnovationStats:
    """Per-sensor innovation moments under each hypothesis.

    mean1 = -mean0 and cov does not depend on the hypothesis.  The totals
    recover the llr statistics: sum(mean1) = llr_mean1 and the grand sum of
    cov equals llr_variance.
    """

    mean0: np.ndarray
    mean1: np.ndarray
    cov: np.ndarray

    def mean(self, h: Hypothesis) -> np.ndarray:
        return self.mean1 if h == Hypothesis.H1 else self.mean0


@dataclass(frozen=True)
class Observation:
    k: int
    y: np.ndarray


def build_model(m0, m1, cov) -> GaussianHypothesisPair:
    """Validate inputs and fix every derived quantity of the pair.

    Raises ShapeError for dimension mismatches, IndistinguishableHypotheses
    when m0 == m1, DegenerateCovariance when cov is asymmetric beyond 1e-12
    or not positive definite (Cholesky failure, or any pivot below
    1e-12 times the largest diagonal entry).
    """
    m0 = np.atleast_1d(np.asarray(m0, dtype=float))
    m1 = np.atleast_1d(np.asarray(m1, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if m0.ndim != 1 or m1.ndim != 1 or cov.ndim != 2:
        raise ShapeError("m0, m1 must be vectors and cov a matrix")
    n = m0.shape[0]
    if m1.shape != (n,) or cov.shape != (n, n):
        raise ShapeError(
            f"inconsistent shapes: m0 {m0.shape}, m1 {m1.shape}, cov {cov.shape}"
        )
    if not (np.isfinite(m0).all() and np.isfinite(m1).all() and np.isfinite(cov).all()):
        raise ParameterError("model inputs must be finite")
    scale = max(1.0, float(np.abs(cov).max()))
    if float(np.abs(cov - cov.T).max()) > SYMMETRY_ATOL * scale:
        raise DegenerateCovariance("covariance is not symmetric")
    if np.array_equal(m0, m1):
        raise IndistinguishableHypotheses("m0 and m1 are identical")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("covariance is not positive definite") from exc
    pivots = np.diag(chol) ** 2
    if pivots.min() < SPD_PIVOT_RTOL * float(np.diag(cov).max()):
        raise DegenerateCovariance(
            f"covariance nearly singular: pivot {pivots.min():.3e}"
        )
    diff = m1 - m0
    weights = cho_solve((chol, True), diff)
    sigma2 = float(diff @ weights)
    return GaussianHypothesisPair(
        n_sensors=n,
        m0=_frozen(m0),
        m1=_frozen(m1),
        cov=_frozen(cov),
        noise_chol=_frozen(chol),
        innovation_weights=_frozen(weights),
        llr_mean0=-sigma2 / 2.0,
        llr_mean1=sigma2 / 2.0,
        llr_variance=sigma2,
    )


def sample_observation(
    model: GaussianHypothesisPair,
    h: Hypothesis,
    rng: np.random.Generator,
    k: int = 1,
) -> Observation:
    """Draw one snapshot y(k) = m_h + chol @ z with z standard normal."""
    z = rng.standard_normal(model.n_sensors)
    return Observation(k=k, y=model.mean(h) + model.noise_chol @ z)


def sample_observations(
    model: GaussianHypothesisPair,
    h: Hypothesis,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Draw ``size`` independent snapshots as rows of a (size, n) array."""
    z = rng.standard_normal((size, model.n_sensors))
    return model.mean(h) + z @ model.noise_chol.T


def llr(model: GaussianHypothesisPair, y: np.ndarray):
    """Log-likelihood ratio of one snapshot (or a batch on the last axis)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != model.n_sensors:
        raise ShapeError(f"observation has {y.shape[-1]} entries, expected {model.n_sensors}")
    out = (y - model.midpoint) @ model.innovation_weights
    return float(out) if out.ndim == 0 else out


def local_innovations(model: GaussianHypothesisPair, y: np.ndarray) -> np.ndarray:
    """Per-sensor innovation eta_i = w_i (y_i - midpoint_i); sums to llr."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != model.n_sensors:
        raise ShapeError(f"observation has {y.shape[-1]} entries, expected {model.n_sensors}")
    return model.innovation_weights * (y - model.midpoint)


def innovation_stats(model: GaussianHypothesisPair) -> InnovationStats:
    """Joint moments of the innovation vector under each hypothesis."""
    w = model.innovation_weights
    mean1 = w * (model.m1 - model.m0) / 2.0
    cov = np.outer(w, w) * model.cov
    return InnovationStats(mean0=_frozen(-mean1), mean1=_frozen(mean1), cov=_frozen(cov))
