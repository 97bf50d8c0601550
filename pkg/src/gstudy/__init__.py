"""Generalizability-theory analysis for balanced crossed and nested designs."""

__version__ = "0.1.0"

from .analysis import GStudy
from .anova import AnovaRow, AnovaTable, run_anova
from .confidence import ConfidenceInterval, confidence_intervals, normal_quantile
from .dataset import Dataset, load_table, validate_and_index
from .design import DesignSpec, Facet, VarianceComponent, enumerate_components, parse_design
from .dstudy import DStudyResult, expand_grid, run_d_study
from .reliability import FacetRole, GCoeffResult, Role, g_coeffs_table

__all__ = [
    "GStudy",
    "AnovaRow",
    "AnovaTable",
    "run_anova",
    "ConfidenceInterval",
    "confidence_intervals",
    "normal_quantile",
    "Dataset",
    "load_table",
    "validate_and_index",
    "DesignSpec",
    "Facet",
    "VarianceComponent",
    "enumerate_components",
    "parse_design",
    "DStudyResult",
    "expand_grid",
    "run_d_study",
    "FacetRole",
    "GCoeffResult",
    "Role",
    "g_coeffs_table",
]
