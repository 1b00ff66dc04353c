"""Result containers for the estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import pandas as pd
from scipy import stats

Z_95 = 1.96
RESULT_COLUMNS = ["label", "coefficient", "se", "t", "p", "ci_lo", "ci_hi", "n"]


@dataclass(frozen=True)
class EstimateResult:
    """One coefficient with its standard error.

    p-values use the normal approximation and the interval is
    ``coefficient +/- 1.96 se``.
    """

    label: str
    coefficient: float
    se: float
    n_obs: int

    @property
    def t_stat(self) -> float:
        if not self.se > 0:
            return math.nan
        return self.coefficient / self.se

    @property
    def p_value(self) -> float:
        t = self.t_stat
        return math.nan if math.isnan(t) else float(2 * stats.norm.sf(abs(t)))

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.coefficient - Z_95 * self.se, self.coefficient + Z_95 * self.se)

    @property
    def significant_5pct(self) -> bool:
        return bool(self.p_value < 0.05)

    def to_row(self) -> dict:
        lo, hi = self.ci95
        return {
            "label": self.label,
            "coefficient": self.coefficient,
            "se": self.se,
            "t": self.t_stat,
            "p": self.p_value,
            "ci_lo": lo,
            "ci_hi": hi,
            "n": self.n_obs,
        }


def results_frame(results) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in results], columns=RESULT_COLUMNS)
