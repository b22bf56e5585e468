"""Fisher information and CRLB trace for RSS, bearing and TOA measurements.

A singular geometry (anchors collinear with the sensor) is not an error: its
trace is reported as ``math.inf`` so that Monte Carlo code can count it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import AnchorSet, GeometryError

__all__ = [
    "SINGULAR_RTOL",
    "DegenerateGeometryError",
    "RSS",
    "Bearing",
    "TOA",
    "Modality",
    "Fim2x2",
    "fim",
    "is_singular",
    "pairwise_sin2_sum",
    "pairwise_sin2_sum_identity",
    "trace_crlb",
    "trace_via_inverse",
    "prefix_traces",
    "batch_traces",
]

SINGULAR_RTOL = 1e-12


class DegenerateGeometryError(GeometryError):
    """An anchor coincides with the sensor where the model needs d > 0."""


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class RSS:
    """Log-normal shadowing. ``b`` is the per-anchor information coefficient."""

    path_loss_exponent: float
    shadowing_sigma_db: float

    name = "rss"
    min_anchors = 3
    uses_distance = True

    def __post_init__(self):
        _positive("path_loss_exponent", self.path_loss_exponent)
        _positive("shadowing_sigma_db", self.shadowing_sigma_db)

    @property
    def b(self) -> float:
        return (10.0 * self.path_loss_exponent / (self.shadowing_sigma_db * math.log(10.0))) ** 2

    @property
    def coefficient(self) -> float:
        return self.b


@dataclass(frozen=True)
class Bearing:
    sigma_alpha: float

    name = "bearing"
    min_anchors = 2
    uses_distance = True

    def __post_init__(self):
        _positive("sigma_alpha", self.sigma_alpha)

    @property
    def coefficient(self) -> float:
        return 1.0 / self.sigma_alpha**2


@dataclass(frozen=True)
class TOA:
    """Gaussian time-of-arrival noise, expressed as a range std ``sigma_T * c``."""

    sigma_t_times_c: float

    name = "toa"
    min_anchors = 3
    uses_distance = False

    def __post_init__(self):
        _positive("sigma_t_times_c", self.sigma_t_times_c)

    @property
    def coefficient(self) -> float:
        return 1.0 / self.sigma_t_times_c**2


Modality = Union[RSS, Bearing, TOA]


@dataclass(frozen=True)
class Fim2x2:
    xx: float
    xy: float
    yy: float

    @property
    def det(self) -> float:
        return self.xx * self.yy - self.xy * self.xy

    def as_array(self) -> np.ndarray:
        return np.array([[self.xx, self.xy], [self.xy, self.yy]])


def is_singular(trace: float) -> bool:
    return math.isinf(trace)


def _weights(modality: Modality, d: np.ndarray) -> np.ndarray:
    """Per-anchor information weight: 1/d^2 for RSS/bearing, 1 for TOA."""
    if not modality.uses_distance:
        return np.ones_like(d, dtype=np.float64)
    if np.any(d == 0):
        raise DegenerateGeometryError(f"{modality.name} information is undefined for an anchor at d = 0")
    return 1.0 / (d * d)


def _check_modality(modality) -> None:
    if not isinstance(modality, (RSS, Bearing, TOA)):
        raise TypeError(f"unknown modality {modality!r}")


def fim(modality: Modality, anchors: AnchorSet) -> Fim2x2:
    _check_modality(modality)
    w = _weights(modality, anchors.d)
    c, s = np.cos(anchors.alpha), np.sin(anchors.alpha)
    k = modality.coefficient
    xy = k * float(np.sum(w * c * s))
    if isinstance(modality, Bearing):
        xy = -xy
    return Fim2x2(k * float(np.sum(w * c * c)), xy, k * float(np.sum(w * s * s)))


def pairwise_sin2_sum(w: np.ndarray, alpha: np.ndarray) -> float:
    """``sum_{i<j} w_i w_j sin^2(alpha_i - alpha_j)`` by direct O(n^2) summation."""
    i, j = np.triu_indices(len(w), k=1)
    return float(np.sum(w[i] * w[j] * np.sin(alpha[i] - alpha[j]) ** 2))


def pairwise_sin2_sum_identity(w: np.ndarray, alpha: np.ndarray) -> float:
    """Same sum in O(n) via ``sin^2(x) = (1 - cos 2x) / 2``.

    Equals ``((sum w)^2 - (sum w cos 2a)^2 - (sum w sin 2a)^2) / 4``.
    Loses relative accuracy when the result is tiny; kept as a cross-check.
    """
    sw = np.sum(w)
    sc = np.sum(w * np.cos(2 * alpha))
    ss = np.sum(w * np.sin(2 * alpha))
    return float((sw * sw - sc * sc - ss * ss) / 4.0)


def _check_count(modality: Modality, n: int) -> None:
    if n < modality.min_anchors:
        raise ValueError(f"{modality.name} needs at least {modality.min_anchors} anchors, got {n}")


def _singular_floor(w: np.ndarray) -> float:
    n = len(w)
    return SINGULAR_RTOL * n * n * float(np.max(w)) ** 2


def trace_crlb(modality: Modality, anchors: AnchorSet) -> float:
    """Closed-form trace of the CRLB matrix in m^2, ``math.inf`` if singular."""
    _check_modality(modality)
    _check_count(modality, anchors.n)
    w = _weights(modality, anchors.d)
    denom = pairwise_sin2_sum(w, anchors.alpha)
    if denom < _singular_floor(w):
        return math.inf
    return float(np.sum(w)) / (modality.coefficient * denom)


def trace_via_inverse(modality: Modality, anchors: AnchorSet) -> float:
    """Trace of the numerically inverted FIM; independent check of :func:`trace_crlb`."""
    _check_modality(modality)
    _check_count(modality, anchors.n)
    f = fim(modality, anchors)
    w = _weights(modality, anchors.d)
    if f.det <= modality.coefficient**2 * _singular_floor(w):
        return math.inf
    return float(np.trace(np.linalg.inv(f.as_array())))


def prefix_traces(modality: Modality, d: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Traces of every anchor prefix, for a batch of geometries.

    Args:
        d, alpha: arrays of shape ``(trials, n)``.

    Returns:
        Array of shape ``(trials, n)``; column ``k - 1`` holds the trace using
        the first ``k`` anchors. Columns below the modality minimum are NaN,
        singular entries are ``inf``.
    """
    _check_modality(modality)
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    alpha = np.atleast_2d(np.asarray(alpha, dtype=np.float64))
    trials, n = d.shape
    w = _weights(modality, d)
    cross = np.zeros((trials, n))
    for j in range(1, n):
        cross[:, j] = np.sum(w[:, :j] * w[:, j:j + 1] * np.sin(alpha[:, :j] - alpha[:, j:j + 1]) ** 2, axis=1)
    denom = np.cumsum(cross, axis=1)
    counts = np.arange(1, n + 1)
    floor = SINGULAR_RTOL * counts**2 * np.maximum.accumulate(w, axis=1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.cumsum(w, axis=1) / (modality.coefficient * denom)
    out[denom < floor] = np.inf
    out[:, : modality.min_anchors - 1] = np.nan
    return out


def batch_traces(modality: Modality, d: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Trace for each row of a ``(trials, n)`` batch; ``inf`` where singular."""
    d = np.atleast_2d(d)
    _check_count(modality, d.shape[1])
    return prefix_traces(modality, d, alpha)[:, -1]
