"""Deterministic Monte Carlo trials over random anchor geometries.

Trial ``t`` always sees the anchors drawn from counter ``(seed, t)``, so
results do not depend on worker count, chunk size or evaluation order. A
sweep over several ``n`` reuses one draw of ``max(n)`` anchors per trial.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import ApproxDistribution, _check_pairing
from .crlb import Modality, prefix_traces
from .geometry import GeometryModel, sample_batch
from .rng import validate_seed

__all__ = [
    "DEFAULT_TRIALS",
    "TrialBatch",
    "Ecdf",
    "ErrorReport",
    "run_batch",
    "run_sweep",
    "ecdf",
    "ks_distance",
    "error_report",
    "block_stability",
    "density_histogram",
    "default_workers",
    "StabilityReport",
    "paired_cdf_table",
]

DEFAULT_TRIALS = 100_000
CHUNK = 20_000


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def _describe(obj) -> dict:
    return {"kind": getattr(obj, "name", type(obj).__name__.lower()), **obj.__dict__}


@dataclass
class TrialBatch:
    """Finite traces of one Monte Carlo run plus bookkeeping.

    ``samples`` and ``trial_index`` are in increasing trial order. Singular
    geometries are counted, never silently dropped.
    """

    samples: np.ndarray
    trial_index: np.ndarray
    singular_count: int
    n: int
    trials: int
    modality: Modality
    model: GeometryModel
    seed: int

    def __post_init__(self):
        if self.singular_count + len(self.samples) != self.trials:
            raise ValueError("singular and finite counts must add up to the trial count")

    @property
    def finite_count(self) -> int:
        return int(self.samples.size)

    def to_csv(self) -> str:
        """``trial,trace`` rows for every trial; singular ones carry ``SINGULAR``."""
        values = np.full(self.trials, np.inf)
        values[self.trial_index] = self.samples
        out = io.StringIO()
        out.write("trial,trace\n")
        for t, v in enumerate(values):
            out.write(f"{t},{v:.17g}\n" if math.isfinite(v) else f"{t},SINGULAR\n")
        return out.getvalue()

    def summary(self) -> dict:
        s = self.samples
        return {
            "n": self.n,
            "trials": self.trials,
            "finite": self.finite_count,
            "singular": self.singular_count,
            "seed": self.seed,
            "modality": _describe(self.modality),
            "geometry": _describe(self.model),
            "mean": float(s.mean()) if s.size else None,
            "std": float(s.std(ddof=1)) if s.size > 1 else None,
            "min": float(s.min()) if s.size else None,
            "max": float(s.max()) if s.size else None,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _chunk(args):
    modality, model, n_max, columns, seed, start, stop = args
    d, alpha = sample_batch(model, n_max, seed, np.arange(start, stop, dtype=np.uint64))
    return prefix_traces(modality, d, alpha)[:, columns]


def _evaluate(modality, model, n_values, trials, seed, workers, chunk):
    n_max = max(n_values)
    columns = [n - 1 for n in n_values]
    jobs = [
        (modality, model, n_max, columns, seed, lo, min(lo + chunk, trials))
        for lo in range(0, trials, chunk)
    ]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    return np.concatenate(parts, axis=0)


def run_sweep(
    modality: Modality,
    model: GeometryModel,
    n_values,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    workers: int = 1,
    chunk: int = CHUNK,
) -> dict[int, TrialBatch]:
    """Run the same trials at several anchor counts.

    Trial ``t`` at count ``n`` uses the first ``n`` anchors of the trial's
    draw, which is exactly what :func:`run_batch` would use.
    """
    _check_pairing(modality, model)
    seed = validate_seed(seed)
    n_values = sorted({int(n) for n in n_values})
    if not n_values:
        raise ValueError("need at least one anchor count")
    if n_values[0] < modality.min_anchors:
        raise ValueError(f"{modality.name} needs at least {modality.min_anchors} anchors, got {n_values[0]}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    table = _evaluate(modality, model, n_values, trials, seed, workers, chunk)
    out = {}
    for k, n in enumerate(n_values):
        col = table[:, k]
        finite = np.flatnonzero(np.isfinite(col))
        out[n] = TrialBatch(
            samples=col[finite].copy(),
            trial_index=finite,
            singular_count=int(trials - finite.size),
            n=n,
            trials=trials,
            modality=modality,
            model=model,
            seed=seed,
        )
    return out


def run_batch(
    modality: Modality,
    model: GeometryModel,
    n: int,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    workers: int = 1,
    chunk: int = CHUNK,
) -> TrialBatch:
    return run_sweep(modality, model, [n], trials, seed, workers, chunk)[int(n)]


class Ecdf:
    """Right-continuous empirical CDF."""

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
        if values.size == 0:
            raise ValueError("ECDF needs at least one sample")
        if not np.all(np.isfinite(values)):
            raise ValueError("ECDF samples must be finite")
        self.values = values

    def __len__(self) -> int:
        return self.values.size

    def __call__(self, x):
        out = np.searchsorted(self.values, x, side="right") / self.values.size
        return out if np.ndim(out) else float(out)

    def left_limit(self, x):
        out = np.searchsorted(self.values, x, side="left") / self.values.size
        return out if np.ndim(out) else float(out)


def ecdf(batch: TrialBatch) -> Ecdf:
    return Ecdf(batch.samples)


def ks_distance(e: Ecdf, dist: ApproxDistribution) -> float:
    """Sup-distance between an ECDF and a model CDF, checked on both step sides."""
    x = np.unique(e.values)
    f = np.asarray(dist.cdf(x))
    upper = np.abs(e(x) - f)
    lower = np.abs(e.left_limit(x) - f)
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class ErrorReport:
    """Simulated vs formula moments.

    Relative errors are ``(simulated - formula) / simulated``.
    """

    empirical_mean: float
    empirical_std: float
    formula_mean: float
    formula_std: float
    relative_error_mean: float
    relative_error_std: float
    ks_distance: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def error_report(batch: TrialBatch, dist: ApproxDistribution) -> ErrorReport:
    s = batch.samples
    if s.size < 2:
        raise ValueError("error report needs at least two finite samples")
    em, es = float(s.mean()), float(s.std(ddof=1))
    return ErrorReport(
        empirical_mean=em,
        empirical_std=es,
        formula_mean=dist.mean,
        formula_std=dist.std,
        relative_error_mean=(em - dist.mean) / em,
        relative_error_std=(es - dist.std) / es,
        ks_distance=ks_distance(Ecdf(s), dist),
    )


@dataclass(frozen=True)
class StabilityReport:
    block_means: tuple[float, ...]
    spread: float
    converged: bool


def block_stability(batch: TrialBatch, blocks: int, tolerance: float = 0.10) -> StabilityReport:
    """Compare sample means over disjoint, equal trial-index blocks.

    ``spread`` is ``(max - min) / overall mean``. A spread above ``tolerance``
    flags the mean as not converged, which is expected when it is infinite.
    """
    if blocks < 2:
        raise ValueError("need at least two blocks")
    edges = np.linspace(0, batch.trials, blocks + 1).astype(np.int64)
    which = np.searchsorted(edges, batch.trial_index, side="right") - 1
    means = []
    for k in range(blocks):
        sel = batch.samples[which == k]
        means.append(float(sel.mean()) if sel.size else math.inf)
    overall = float(batch.samples.mean())
    spread = (max(means) - min(means)) / overall
    return StabilityReport(tuple(means), spread, bool(spread < tolerance))


def density_histogram(batch: TrialBatch, upper_quantile: float = 0.995):
    """Freedman-Diaconis density histogram of the finite traces.

    The range is clipped at ``upper_quantile`` so heavy tails at small n do
    not explode the bin count; the clipped mass is excluded from the density.
    """
    s = batch.samples
    hi = float(np.quantile(s, upper_quantile))
    kept = s[s <= hi]
    density, edges = np.histogram(kept, bins="fd", range=(float(s.min()), hi))
    density = density / (s.size * np.diff(edges))
    return density, edges


def paired_cdf_table(batch: TrialBatch, dist: ApproxDistribution, points: int = 1000) -> np.ndarray:
    """Rows of ``(x, ecdf(x), formula_cdf(x))`` at evenly spaced sample quantiles."""
    e = Ecdf(batch.samples)
    idx = np.unique(np.linspace(0, len(e) - 1, min(points, len(e))).round().astype(np.int64))
    x = e.values[idx]
    return np.column_stack([x, e(x), np.asarray(dist.cdf(x))])

