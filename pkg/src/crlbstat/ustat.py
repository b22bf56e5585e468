"""Brute-force ratio-of-U-statistics expansion used as a test oracle.

For ``X1 = 1/d^2`` and ``X2 = alpha`` the RSS trace equals
``2 / (b (n - 1)) * T_n / S_n``, where ``T_n`` is the sample mean of ``X1`` and
``S_n`` the pairwise mean of ``X1_i X1_j sin^2(X2_i - X2_j)``. The ratio is
split into a constant, an O(1/n) bias, a zero-mean U-statistic ``M_n`` and a
residual ``R_n``. Everything here is plain pairwise summation on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import AnnulusMoments
from .crlb import SINGULAR_RTOL

__all__ = [
    "SingularSampleError",
    "ExpansionParts",
    "expansion_parts",
    "expansion_parts_batch",
    "standardized_rss",
    "standardized_toa",
]


class SingularSampleError(ValueError):
    """S_n vanished, so T_n / S_n is undefined."""


@dataclass(frozen=True)
class ExpansionParts:
    t_n: float
    s_n: float
    leading: float
    bias_term: float
    m_n: float
    r_n: float

    @property
    def ratio(self) -> float:
        return self.t_n / self.s_n


def _g1(x1, mom: AnnulusMoments):
    return (mom.m1 - x1) / (2.0 * mom.m1**2 * mom.m2)


def _g2(xi, xj, sin2, mom: AnnulusMoments):
    m1, m2 = mom.m1, mom.m2
    return (
        1.0 / (m1 * m2)
        - (xi + xj) / (m1**2 * m2)
        + 2.0 * xi * xj / (m1**3 * m2)
        - xi * xj * sin2 / (m1**3 * m2**2)
    )


def expansion_parts_batch(x1: np.ndarray, x2: np.ndarray, mom: AnnulusMoments) -> dict[str, np.ndarray]:
    """Vectorized :func:`expansion_parts` over rows of ``(trials, n)`` arrays.

    Rows whose pairwise sum falls below the CRLB singularity tolerance are
    flagged in ``"singular"`` and get NaN ratio, ``m_n`` and ``r_n``.
    """
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape != x2.shape:
        raise ValueError("x1 and x2 must have the same shape")
    n = x1.shape[1]
    if n < 2:
        raise ValueError("need at least two observations")
    i, j = np.triu_indices(n, k=1)
    npairs = i.size
    xi, xj = x1[:, i], x1[:, j]
    sin2 = np.sin(x2[:, i] - x2[:, j]) ** 2
    t_n = x1.mean(axis=1)
    s_n = np.sum(xi * xj * sin2, axis=1) / npairs
    leading = 1.0 / (mom.m1 * mom.m2)
    bias = 2.0 * mom.sigma1**2 / (n * mom.m1**3 * mom.m2)
    m_n = 2.0 * _g1(x1, mom).mean(axis=1) + np.sum(_g2(xi, xj, sin2, mom), axis=1) / npairs
    singular = s_n * npairs < SINGULAR_RTOL * n * n * np.max(np.abs(x1), axis=1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(singular, np.nan, t_n / s_n)
    m_n = np.where(singular, np.nan, m_n)
    r_n = ratio - leading - bias - m_n
    return {
        "t_n": t_n,
        "s_n": s_n,
        "ratio": ratio,
        "leading": leading,
        "bias_term": bias,
        "m_n": m_n,
        "r_n": r_n,
        "singular": singular,
    }


def expansion_parts(x1, x2, moments: AnnulusMoments) -> ExpansionParts:
    """Split ``T_n / S_n`` into leading + bias + ``M_n`` + residual for one sample.

    Args:
        x1: values of ``1/d_i^2`` (or all ones for the TOA kernel).
        x2: angles in radians.
        moments: population moments used to centre the expansion.

    Raises:
        SingularSampleError: ``S_n`` is zero up to the CRLB singularity tolerance.
    """
    x1 = np.asarray(x1, dtype=np.float64).reshape(-1)
    x2 = np.asarray(x2, dtype=np.float64).reshape(-1)
    if x1.size != x2.size:
        raise ValueError("x1 and x2 must have equal length")
    parts = expansion_parts_batch(x1[None, :], x2[None, :], moments)
    if parts["singular"][0]:
        raise SingularSampleError("S_n vanishes; the sample is collinear with the sensor")
    return ExpansionParts(
        t_n=float(parts["t_n"][0]),
        s_n=float(parts["s_n"][0]),
        leading=float(parts["leading"]),
        bias_term=float(parts["bias_term"]),
        m_n=float(parts["m_n"][0]),
        r_n=float(parts["r_n"][0]),
    )


def standardized_rss(trace, n: int, b: float, moments: AnnulusMoments):
    """Affine map of the RSS trace that tends to a standard normal variable."""
    m1, s1 = moments.m1, moments.sigma1
    rn = math.sqrt(n)
    return (rn * (n - 1) * b * m1 * m1 / (4.0 * s1)) * np.asarray(trace) - rn * m1 / s1 - 2.0 * s1 / (rn * m1)


def standardized_toa(trace, n: int, sigma_t_times_c: float):
    """Affine map of the TOA trace that tends to chi-square with 2 degrees of freedom."""
    return (n * (n - 1) / (2.0 * sigma_t_times_c**2)) * np.asarray(trace) - 2 * n + 2
