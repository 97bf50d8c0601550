"""One-object workflow tying the pipeline together."""

from __future__ import annotations

from typing import Mapping

from .anova import AnovaTable, run_anova
from .confidence import ConfidenceInterval, confidence_intervals
from .dataset import Dataset, load_table, validate_and_index
from .design import DesignSpec, parse_design
from .dstudy import DStudyResult, run_d_study
from .reliability import GCoeffResult, default_analyses, g_coeffs_table
from .report import build_report


class GStudy:
    """G-study on a long-format table.

    >>> rows = [{"p": p, "i": i, "y": y} for (p, i), y in
    ...         {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 5}.items()]
    >>> g = GStudy(rows, "p x i", response="y")
    >>> [round(r.e_rho2, 4) for r in g.g_coeffs()]
    [0.96, 0.8889]
    """

    def __init__(self, data, design: str | DesignSpec, response: str, roles: Mapping | None = None):
        self.design = design if isinstance(design, DesignSpec) else parse_design(design)
        if isinstance(data, Dataset):
            self.data = data
        else:
            self.data = validate_and_index(load_table(data, response), self.design, response)
        self.roles = dict(roles or {})
        self._anova: AnovaTable | None = None
        self._g: list[GCoeffResult] | None = None
        self._d: DStudyResult | None = None
        self._ci: list[list[ConfidenceInterval]] | None = None

    def calculate_anova(self) -> AnovaTable:
        if self._anova is None:
            self._anova = run_anova(self.data)
        return self._anova

    @property
    def anova(self) -> AnovaTable:
        return self.calculate_anova()

    def g_coeffs(self, object: str | None = None) -> list[GCoeffResult]:
        self._g = g_coeffs_table(self.anova, default_analyses(self.design, self.roles, object))
        return self._g

    def calculate_d_study(self, levels: Mapping, object: str | None = None) -> DStudyResult:
        self._d = run_d_study(self.anova, levels, self.roles, object)
        return self._d

    def calculate_confidence_intervals(self, alpha: float = 0.05, object: str | None = None):
        objects = [object] if object is not None else [
            next(n for n, r in a.items() if r.value == "object")
            for a in default_analyses(self.design, self.roles)
        ]
        self._ci = [confidence_intervals(self.data, self.anova, o, alpha) for o in objects]
        return self._ci

    def report(self, fmt: str = "text") -> str:
        g = self._g if self._g is not None else self.g_coeffs()
        ci = self._ci if self._ci is not None else self.calculate_confidence_intervals()
        return build_report(self.anova, g, ci, self._d, fmt=fmt)
