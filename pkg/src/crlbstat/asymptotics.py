"""Large-n laws for the CRLB trace and the planning queries built on them.

RSS and bearing traces are approximately normal; the TOA trace is
approximately ``scale * chi2(2) + shift``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erfc, ndtri

from .crlb import RSS, TOA, Bearing, Modality
from .geometry import Annulus, Disk, GeometryModel

__all__ = [
    "UnsatisfiablePlanError",
    "AnnulusMoments",
    "NormalApprox",
    "ShiftedChiSq2",
    "ApproxDistribution",
    "annulus_moments",
    "approx_distribution",
    "approx_cdf",
    "berry_esseen_coefficient",
    "berry_esseen_envelope",
    "min_anchors",
    "coefficient_of_variation",
    "PLAN_CAP",
    "SMALL_N_WARNING",
]

PLAN_CAP = 10**6
# below this the normal law visibly under-covers the simulated distribution
SMALL_N_WARNING = 10


class UnsatisfiablePlanError(ValueError):
    def __init__(self, cap: int, message: str = ""):
        self.cap = cap
        super().__init__(message or f"no anchor count up to the cap of {cap} meets the target")


@dataclass(frozen=True)
class AnnulusMoments:
    """Moments of ``X = 1/d^2`` for d uniform-in-area on an annulus.

    Attributes:
        m1: mean of X (1/m^2).
        sigma1: standard deviation of X (1/m^2).
        nu3: third central moment of X (1/m^6).
        m2: mean of sin^2 of the difference of two uniform angles, always 0.5.
    """

    m1: float
    sigma1: float
    nu3: float
    m2: float = 0.5


# Taylor coefficients of 1/(1+t) - (log1p(t)/t)^2 around t = 0, from t^2 upward
_NARROW_VAR_SERIES = (1 / 12, -1 / 6, 43 / 180, -3 / 10, 197 / 560, -499 / 1260, 5471 / 12600, -589 / 1260)
_NARROW = 1e-2


def annulus_moments(model: Annulus) -> AnnulusMoments:
    if not isinstance(model, Annulus):
        raise ValueError("annulus moments need an Annulus model")
    r0, r = model.r_inner, model.r_outer
    a = r0 * r0
    t = (r - r0) * (r + r0) / a  # R^2/R0^2 - 1
    m1 = math.log1p(t) / (a * t)
    ex2 = 1.0 / (a * r * r)
    ex3 = (r * r + a) / (2.0 * a * a * r**4)
    if t < _NARROW:
        # E(X^2) - m1^2 cancels catastrophically on thin rings
        var = sum(c * t ** (k + 2) for k, c in enumerate(_NARROW_VAR_SERIES)) / (a * a)
    else:
        var = ex2 - m1 * m1
    sigma1 = math.sqrt(max(var, 0.0))
    nu3 = ex3 - 3.0 * m1 * ex2 + 2.0 * m1**3
    return AnnulusMoments(m1=m1, sigma1=sigma1, nu3=nu3)


@dataclass(frozen=True)
class NormalApprox:
    mean: float
    std: float

    def cdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.std
        out = 0.5 * erfc(-z / math.sqrt(2.0))
        return out if out.ndim else float(out)

    def ppf(self, q):
        return self.mean + self.std * ndtri(q)


@dataclass(frozen=True)
class ShiftedChiSq2:
    """``Tr ~ scale * chi2(2) + shift``."""

    scale: float
    shift: float

    @property
    def mean(self) -> float:
        return self.shift + 2.0 * self.scale

    @property
    def std(self) -> float:
        return 2.0 * self.scale

    def cdf(self, x):
        y = (np.asarray(x, dtype=np.float64) - self.shift) / self.scale
        out = np.where(y > 0, -np.expm1(-np.maximum(y, 0.0) / 2.0), 0.0)
        return out if out.ndim else float(out)

    def ppf(self, q):
        return self.shift - 2.0 * self.scale * np.log1p(-np.asarray(q, dtype=np.float64))


ApproxDistribution = Union[NormalApprox, ShiftedChiSq2]


def _check_pairing(modality: Modality, model: GeometryModel) -> None:
    if isinstance(modality, (RSS, Bearing)):
        if not isinstance(model, Annulus):
            raise ValueError(f"{modality.name} needs an annulus deployment model")
    elif isinstance(modality, TOA):
        if not isinstance(model, (Annulus, Disk)):
            raise ValueError("TOA needs a disk or annulus deployment model")
    else:
        raise TypeError(f"unknown modality {modality!r}")


def _normal_moments(coef: float, mom: AnnulusMoments, n):
    n = np.asarray(n, dtype=np.float64)
    m1, s1 = mom.m1, mom.sigma1
    mean = 4.0 / ((n - 1) * coef * m1) + 8.0 * s1 * s1 / (n * (n - 1) * coef * m1**3)
    std = 4.0 * s1 / (np.sqrt(n) * (n - 1) * coef * m1 * m1)
    return mean, std


def _toa_scale(sigma_tc: float, n):
    n = np.asarray(n, dtype=np.float64)
    return 2.0 * sigma_tc**2 / (n * (n - 1))


def approx_distribution(modality: Modality, model: GeometryModel, n: int) -> ApproxDistribution:
    _check_pairing(modality, model)
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if isinstance(modality, TOA):
        scale = float(_toa_scale(modality.sigma_t_times_c, n))
        return ShiftedChiSq2(scale=scale, shift=(2 * n - 2) * scale)
    mean, std = _normal_moments(modality.coefficient, annulus_moments(model), n)
    return NormalApprox(mean=float(mean), std=float(std))


def approx_cdf(dist: ApproxDistribution, x):
    return dist.cdf(x)


def berry_esseen_coefficient(model: Annulus, variant: str = "theorem") -> float:
    """Coefficient of the n^-1/2 term in the sup-distance bound.

    ``variant="theorem"`` uses ``nu3 + 2 sigma1^4 / m1``; ``"appendix"`` uses
    ``nu3 + 6 sigma1^4 / m1``. Both divide by ``6 sigma1^3``, which keeps the
    coefficient dimensionless.
    """
    k = {"theorem": 2.0, "appendix": 6.0}.get(variant)
    if k is None:
        raise ValueError(f"variant must be 'theorem' or 'appendix', got {variant!r}")
    mom = annulus_moments(model)
    return (mom.nu3 + k * mom.sigma1**4 / mom.m1) / (6.0 * mom.sigma1**3)


def berry_esseen_envelope(model: Annulus, n: int, x, variant: str = "theorem"):
    """First-order bound on ``|F_n(x) - Phi(x)|`` for the standardized RSS trace.

    The O(1/n) remainder is not included.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    x = np.asarray(x, dtype=np.float64)
    shape = (x * x - 1.0) * np.exp(-x * x / 2.0) / math.sqrt(2.0 * math.pi)
    out = np.abs(berry_esseen_coefficient(model, variant) * shape) / math.sqrt(n)
    return out if out.ndim else float(out)


def _cdf_over_n(modality: Modality, model: GeometryModel, ns: np.ndarray, threshold: float) -> np.ndarray:
    if isinstance(modality, TOA):
        scale = _toa_scale(modality.sigma_t_times_c, ns)
        y = (threshold - (2 * ns - 2) * scale) / scale
        return np.where(y > 0, -np.expm1(-np.maximum(y, 0.0) / 2.0), 0.0)
    mean, std = _normal_moments(modality.coefficient, annulus_moments(model), ns)
    return 0.5 * erfc(-(threshold - mean) / (std * math.sqrt(2.0)))


def min_anchors(
    modality: Modality,
    model: GeometryModel,
    threshold: float,
    confidence: float,
    cap: int = PLAN_CAP,
) -> tuple[int, float]:
    """Smallest n whose approximate law puts ``P(Tr <= threshold) >= confidence``.

    Every n from the modality minimum up to ``cap`` is checked; monotonicity
    in n is not assumed.

    Returns:
        ``(n, achieved_probability)``.

    Raises:
        UnsatisfiablePlanError: no n up to ``cap`` qualifies.
    """
    _check_pairing(modality, model)
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    ns = np.arange(modality.min_anchors, cap + 1, dtype=np.float64)
    probs = _cdf_over_n(modality, model, ns, threshold)
    hits = np.flatnonzero(probs >= confidence)
    if hits.size == 0:
        raise UnsatisfiablePlanError(cap)
    k = int(hits[0])
    return int(ns[k]), float(probs[k])


def coefficient_of_variation(dist: ApproxDistribution) -> float:
    if not dist.mean > 0:
        raise ValueError("coefficient of variation needs a positive mean")
    return dist.std / dist.mean
