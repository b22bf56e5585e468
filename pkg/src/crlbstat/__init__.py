"""CRLB performance limits for single-hop sensor localization under random anchor geometry."""

from .asymptotics import (
    AnnulusMoments,
    NormalApprox,
    ShiftedChiSq2,
    UnsatisfiablePlanError,
    annulus_moments,
    approx_cdf,
    approx_distribution,
    berry_esseen_envelope,
    coefficient_of_variation,
    min_anchors,
)
from .crlb import RSS, TOA, Bearing, DegenerateGeometryError, Fim2x2, fim, is_singular, trace_crlb, trace_via_inverse
from .geometry import AnchorSet, Annulus, Disk, GeometryError, pdf_angle, pdf_distance, sample_anchors
from .montecarlo import Ecdf, ErrorReport, TrialBatch, ecdf, error_report, ks_distance, run_batch, run_sweep
from .ustat import ExpansionParts, expansion_parts, standardized_rss, standardized_toa

__version__ = "0.1.0"
