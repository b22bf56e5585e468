"""Anchor geometries and the random deployment models.

The sensor sits at the origin; anchors are stored in polar form ``(d, alpha)``
with ``alpha`` in radians, normalized into ``[0, 2*pi)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .rng import anchor_uniforms

__all__ = [
    "TWO_PI",
    "GeometryError",
    "AnchorParseError",
    "AnchorSet",
    "Annulus",
    "Disk",
    "GeometryModel",
    "normalize_angle",
    "sample_anchors",
    "sample_batch",
    "pdf_distance",
    "pdf_angle",
]

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Invalid deployment model or anchor data."""


class AnchorParseError(GeometryError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def normalize_angle(alpha):
    """Map angles into [0, 2*pi). Works on scalars and arrays."""
    a = np.mod(np.asarray(alpha, dtype=np.float64), TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    a = np.where(a >= TWO_PI, 0.0, a)
    return a if a.ndim else float(a)


@dataclass(frozen=True)
class AnchorSet:
    """Polar coordinates of ``n`` anchors around a sensor at the origin."""

    d: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64).reshape(-1)
        alpha = np.array(self.alpha, dtype=np.float64).reshape(-1)
        if d.shape != alpha.shape:
            raise GeometryError("d and alpha must have the same length")
        if d.size < 1:
            raise GeometryError("an anchor set needs at least one anchor")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(alpha))):
            raise GeometryError("anchor coordinates must be finite")
        if np.any(d < 0):
            raise GeometryError("anchor distances must be non-negative")
        d.setflags(write=False)
        alpha = normalize_angle(alpha)
        alpha.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "AnchorSet":
        pairs = [tuple(p) for p in pairs]
        if any(len(p) != 2 for p in pairs):
            raise GeometryError("each anchor must be a (d, alpha) pair")
        if not pairs:
            raise GeometryError("an anchor set needs at least one anchor")
        d, alpha = zip(*pairs)
        return cls(np.array(d), np.array(alpha))

    @property
    def n(self) -> int:
        return int(self.d.size)

    def __len__(self) -> int:
        return self.n

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.d, self.alpha)]

    def rotated(self, angle: float) -> "AnchorSet":
        return AnchorSet(self.d, self.alpha + angle)

    def scaled(self, factor: float) -> "AnchorSet":
        return AnchorSet(self.d * factor, self.alpha)

    def with_anchor(self, d: float, alpha: float) -> "AnchorSet":
        return AnchorSet(np.append(self.d, d), np.append(self.alpha, alpha))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("d,alpha\n")
        for d, a in zip(self.d, self.alpha):
            out.write(f"{d:.17g},{a:.17g}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "AnchorSet":
        """Parse the ``d,alpha`` CSV format. Angles are radians."""
        rows = list(csv.reader(io.StringIO(text)))
        body = [(i, r) for i, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
        if not body:
            raise AnchorParseError("empty anchor file")
        line, header = body[0]
        if [c.strip().lower() for c in header] != ["d", "alpha"]:
            raise AnchorParseError(f"expected header 'd,alpha', got {','.join(header)!r}", line)
        d, alpha = [], []
        for line, row in body[1:]:
            if len(row) != 2:
                raise AnchorParseError(f"expected 2 fields, got {len(row)}", line)
            try:
                dv, av = float(row[0]), float(row[1])
            except ValueError:
                raise AnchorParseError(f"non-numeric field in {','.join(row)!r}", line) from None
            if not (math.isfinite(dv) and math.isfinite(av)):
                raise AnchorParseError("non-finite value", line)
            if dv < 0:
                raise AnchorParseError("negative distance", line)
            d.append(dv)
            alpha.append(av)
        if not d:
            raise AnchorParseError("no anchors after header", line)
        return cls(np.array(d), np.array(alpha))

    def to_json(self) -> str:
        return json.dumps(self.pairs())

    @classmethod
    def from_json(cls, text: str) -> "AnchorSet":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AnchorParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(data, list):
            raise AnchorParseError("expected a JSON array of [d, alpha] pairs")
        return cls.from_pairs(data)


@dataclass(frozen=True)
class Annulus:
    """Anchors uniform on the ring ``r_inner <= d <= r_outer``."""

    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (math.isfinite(self.r_inner) and math.isfinite(self.r_outer)):
            raise GeometryError("annulus radii must be finite")
        if not 0 < self.r_inner < self.r_outer:
            raise GeometryError(
                f"annulus needs 0 < r_inner < r_outer, got r_inner={self.r_inner}, r_outer={self.r_outer}"
            )

    def distance_from_uniform(self, u):
        return np.sqrt(self.r_inner**2 + u * (self.r_outer**2 - self.r_inner**2))

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.r_inner) & (x <= self.r_outer)
        out = np.where(inside, 2.0 * x / (self.r_outer**2 - self.r_inner**2), 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Disk:
    """Anchors uniform on the disk of the given radius."""

    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    def distance_from_uniform(self, u):
        return self.radius * np.sqrt(u)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= 0) & (x <= self.radius)
        out = np.where(inside, 2.0 * x / self.radius**2, 0.0)
        return out if out.ndim else float(out)


GeometryModel = Union[Annulus, Disk]


def _check_model(model) -> None:
    if not isinstance(model, (Annulus, Disk)):
        raise GeometryError(f"unknown geometry model {model!r}")


def sample_batch(model: GeometryModel, n: int, seed: int, trials) -> tuple[np.ndarray, np.ndarray]:
    """Anchor draws for many trials at once.

    Returns ``(d, alpha)`` arrays of shape ``(len(trials), n)``. Row ``k`` is
    exactly ``sample_anchors(model, n, seed, trials[k])``.
    """
    _check_model(model)
    if n < 1:
        raise GeometryError("n must be at least 1")
    u_r, u_a = anchor_uniforms(seed, trials, n)
    return model.distance_from_uniform(u_r), normalize_angle(TWO_PI * u_a)


def sample_anchors(model: GeometryModel, n: int, seed: int, trial: int = 0) -> AnchorSet:
    """Draw ``n`` independent anchors for one trial.

    Radii use inverse-transform sampling of the distance density, angles are
    uniform on [0, 2*pi). The first ``k`` anchors of a draw do not depend on
    ``n``, so a larger draw extends a smaller one.
    """
    d, alpha = sample_batch(model, n, seed, [trial])
    return AnchorSet(d[0], alpha[0])


def pdf_distance(model: GeometryModel, x):
    _check_model(model)
    return model.pdf(x)


def pdf_angle(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.where((x >= 0) & (x < TWO_PI), 1.0 / TWO_PI, 0.0)
    return out if out.ndim else float(out)
