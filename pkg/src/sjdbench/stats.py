"""Reliability statistics: Pearson r with significance, ICC(2,1), coefficient
of variation, and Kendall's coefficient of concordance.

The Student-t tail needed for the Pearson p-value is evaluated through the
regularized incomplete beta function, implemented here with the standard
continued-fraction expansion (modified Lentz), accurate to ~1e-14. That keeps
the statistics free of heavyweight dependencies; the test suite checks them
against independent oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ValidationError

_EPS = 1e-300


@dataclass
class TrialMatrix:
    """Complete n_subjects x k_repeats score matrix (no missing cells)."""

    values: np.ndarray
    subject_ids: list[str]
    condition_ids: list[str]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValidationError("trial matrix must be 2-D")
        n, k = v.shape
        if n < 2 or k < 2:
            raise ValidationError("need at least 2 subjects and 2 repeats")
        if not np.isfinite(v).all():
            raise ValidationError("trial matrix has missing or non-finite cells")
        if len(self.subject_ids) != n or len(self.condition_ids) != k:
            raise ValidationError("id lists must match the matrix shape")
        self.values = v

    @classmethod
    def from_values(cls, values) -> "TrialMatrix":
        v = np.asarray(values, dtype=float)
        return cls(v, [f"s{i}" for i in range(v.shape[0])],
                   [f"r{j}" for j in range(v.shape[1])])


@dataclass
class ReliabilityReport:
    icc: float
    cv_percent: float
    kcc: float
    pearson_r: float
    pearson_p: float

    def as_dict(self) -> dict:
        return {
            "icc_2_1": self.icc, "cv_percent": self.cv_percent, "kcc": self.kcc,
            "pearson_r": self.pearson_r, "pearson_p": self.pearson_p,
        }


# --- regularized incomplete beta (for the t-distribution tail) ---------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 300
    tiny = 1e-30
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, dof: float) -> float:
    """Two-tailed survival probability P(|T| >= t) for Student's t."""
    if dof <= 0:
        raise ValidationError("degrees of freedom must be positive")
    if not math.isfinite(t):
        return 0.0
    x = dof / (dof + t * t)
    return _betainc_reg(dof / 2.0, 0.5, x)


# --- the four statistics ------------------------------------------------------

def pearson(x, y) -> tuple[float, float]:
    """Sample Pearson correlation and its two-tailed p-value (t test, n-2 dof)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson needs two equal-length vectors")
    n = len(x)
    if n < 3:
        raise ValidationError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx) / (n - 1))
    sy = math.sqrt(float(dy @ dy) / (n - 1))
    if sx <= 0 or sy <= 0:
        raise DegenerateInputError("zero variance input to pearson")
    r = float(dx @ dy) / ((n - 1) * sx * sy)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return r, student_t_sf2(t, n - 2)


def icc_2_1(matrix: TrialMatrix | np.ndarray) -> float:
    """ICC(2,1): two-way random effects, absolute agreement, single measure.

    (MS_R - MS_E) / (MS_R + (k-1) MS_E + (k/n)(MS_C - MS_E)) from the two-way
    ANOVA decomposition of the subject x repeat matrix.
    """
    v = matrix.values if isinstance(matrix, TrialMatrix) else \
        TrialMatrix.from_values(matrix).values
    n, k = v.shape
    grand = v.mean()
    if np.allclose(v, grand):
        raise DegenerateInputError("zero total variance")
    row_means = v.mean(axis=1)
    col_means = v.mean(axis=0)
    ss_total = ((v - grand) ** 2).sum()
    ss_rows = k * ((row_means - grand) ** 2).sum()
    ss_cols = n * ((col_means - grand) ** 2).sum()
    ss_err = ss_total - ss_rows - ss_cols
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = ss_err / ((n - 1) * (k - 1))
    denom = ms_r + (k - 1) * ms_e + (k / n) * (ms_c - ms_e)
    if abs(denom) < 1e-12 * max(ms_r, ms_c, abs(ms_e), 1e-12):
        raise DegenerateInputError("unstable ANOVA decomposition")
    return float((ms_r - ms_e) / denom)


def cv(values) -> float:
    """Coefficient of variation: 100 * sample std / mean."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise ValidationError("cv needs a vector of at least 2 values")
    mean = float(v.mean())
    if abs(mean) < _EPS:
        raise DegenerateInputError("zero mean input to cv")
    if mean < 0:
        warnings.warn("cv of a negative-mean sample is hard to interpret",
                      stacklevel=2)
    sd = float(v.std(ddof=1))
    return 100.0 * sd / mean


def _rank_with_ties(row: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); tied values share the mean of their ranks."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row), dtype=float)
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def kendall_w(values) -> float:
    """Kendall's coefficient of concordance with the standard tie correction.

    Rows are judges, columns are the items being ranked. W = 1 iff every
    judge produces the identical, tie-free ranking; W = 0 for exactly
    balanced disagreement.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValidationError("kendall_w needs a 2-D matrix")
    m, n = v.shape
    if m < 2 or n < 2:
        raise ValidationError("kendall_w needs >= 2 judges and >= 2 items")
    if not np.isfinite(v).all():
        raise ValidationError("kendall_w input has non-finite values")

    ranks = np.vstack([_rank_with_ties(row) for row in v])
    rank_sums = ranks.sum(axis=0)
    s = float(((rank_sums - rank_sums.mean()) ** 2).sum())

    tie_corr = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        tie_corr += float((counts**3 - counts).sum())
    denom = m * m * (n**3 - n) - m * tie_corr
    if denom <= 0:
        raise DegenerateInputError("all items tied for every judge")
    return 12.0 * s / denom


def reliability_report(score_matrix: TrialMatrix, x, y,
                       ranking_matrix, cv_values) -> ReliabilityReport:
    """Convenience bundle used by the validation study."""
    r, p = pearson(x, y)
    return ReliabilityReport(
        icc=icc_2_1(score_matrix),
        cv_percent=cv(cv_values),
        kcc=kendall_w(ranking_matrix),
        pearson_r=r,
        pearson_p=p,
    )
