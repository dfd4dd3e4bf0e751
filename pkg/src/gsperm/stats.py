"""Accumulating-data estimators and the studentized two-sample statistic."""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

from .errors import DegenerateDataError, InvalidDataError, ValidationError

__all__ = [
    "StageBlock",
    "TrialData",
    "LookSummary",
    "StatisticPath",
    "look_summary",
    "statistic_path",
    "studentized",
    "welch_df",
]


def _frozen_array(values):
    arr = np.array(values, dtype=float).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StageBlock:
    """New observations from one stage: treatment and control arms."""

    treatment: np.ndarray
    control: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "treatment", _frozen_array(self.treatment))
        object.__setattr__(self, "control", _frozen_array(self.control))
        if self.treatment.size < 1 or self.control.size < 1:
            raise InvalidDataError("each arm needs at least one observation per stage")
        if not (np.all(np.isfinite(self.treatment)) and np.all(np.isfinite(self.control))):
            raise InvalidDataError("observations must be finite")

    @property
    def m(self):
        return self.treatment.size

    @property
    def n(self):
        return self.control.size

    @property
    def pooled(self):
        """Stage observations with treatment first, as permuted by stage-wise relabeling."""
        return np.concatenate([self.treatment, self.control])

    def __eq__(self, other):
        return (isinstance(other, StageBlock)
                and np.array_equal(self.treatment, other.treatment)
                and np.array_equal(self.control, other.control))


@dataclass(frozen=True, eq=False)
class TrialData:
    """Stage blocks in order of accrual.

    With ``strict=True`` every stage must share the allocation ratio
    ``m_k / n_k`` of the first stage.
    """

    stages: Tuple[StageBlock, ...]
    strict: bool = True

    def __post_init__(self):
        stages = tuple(s if isinstance(s, StageBlock) else StageBlock(*s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise InvalidDataError("trial data needs at least one stage")
        if self.strict:
            ratio = Fraction(stages[0].m, stages[0].n)
            for j, s in enumerate(stages, start=1):
                if Fraction(s.m, s.n) != ratio:
                    raise InvalidDataError(
                        f"stage {j}: m/n = {s.m}/{s.n} differs from the fixed "
                        f"allocation ratio {ratio} (m_k/n_k must be constant)"
                    )

    @classmethod
    def from_arrays(cls, treatment_blocks, control_blocks, strict=True):
        if len(treatment_blocks) != len(control_blocks):
            raise ValidationError("need the same number of treatment and control blocks")
        return cls(tuple(StageBlock(x, y) for x, y in zip(treatment_blocks, control_blocks)),
                   strict=strict)

    @property
    def n_stages(self):
        return len(self.stages)

    @property
    def gamma(self):
        return Fraction(self.stages[0].m, self.stages[0].n)

    def through(self, k):
        """Data restricted to the first ``k`` stages."""
        if not 1 <= k <= self.n_stages:
            raise ValidationError(f"look {k} outside 1..{self.n_stages}")
        return TrialData(self.stages[:k], strict=self.strict)

    def __eq__(self, other):
        return (isinstance(other, TrialData) and self.strict == other.strict
                and len(self.stages) == len(other.stages)
                and all(a == b for a, b in zip(self.stages, other.stages)))


@dataclass(frozen=True)
class LookSummary:
    """Estimator components of the studentized statistic at one look."""

    k: int
    m_cum: int
    n_cum: int
    mu1_hat: float
    mu2_hat: float
    var1_hat: float
    var2_hat: float
    S: float
    info_hat: float


@dataclass(frozen=True)
class StatisticPath:
    looks: Tuple[LookSummary, ...]

    @property
    def values(self):
        return tuple(look.S for look in self.looks)

    def __len__(self):
        return len(self.looks)


def _merge(acc, x):
    """Fold a block into running (count, mean, M2) with Chan's pairwise update."""
    count, mean, m2 = acc
    nb = x.size
    mb = float(np.mean(x))
    m2b = float(np.sum((x - mb) ** 2))
    if count == 0:
        return nb, mb, m2b
    total = count + nb
    delta = mb - mean
    mean = mean + delta * nb / total
    m2 = m2 + m2b + delta * delta * count * nb / total
    return total, mean, m2


def studentized(m, n, mean1, mean2, var1, var2):
    """Studentized mean difference for cumulative sizes ``m`` (treatment), ``n`` (control)."""
    denom_sq = (n * var1 + m * var2) / (m + n)
    diff = mean1 - mean2
    if denom_sq <= 0.0:
        raise DegenerateDataError(
            "both arm variances are zero; studentized statistic undefined",
            sign=int(np.sign(diff)),
        )
    return math.sqrt(m * n / (m + n)) * diff / math.sqrt(denom_sq)


def look_summary(data, k):
    """Estimators and studentized statistic using stages ``1..k``.

    Raises:
        ValidationError: if ``k`` is out of range or an arm has fewer than two
            cumulative observations.
        DegenerateDataError: if both cumulative arm variances are zero.
    """
    if not 1 <= k <= data.n_stages:
        raise ValidationError(f"look {k} outside 1..{data.n_stages}")
    acc1 = (0, 0.0, 0.0)
    acc2 = (0, 0.0, 0.0)
    for block in data.stages[:k]:
        acc1 = _merge(acc1, block.treatment)
        acc2 = _merge(acc2, block.control)
    m, mu1, m2_1 = acc1
    n, mu2, m2_2 = acc2
    if m < 2 or n < 2:
        raise ValidationError(f"look {k}: each arm needs at least 2 cumulative observations")
    var1 = m2_1 / (m - 1)
    var2 = m2_2 / (n - 1)
    try:
        s = studentized(m, n, mu1, mu2, var1, var2)
    except DegenerateDataError as exc:
        raise DegenerateDataError(f"look {k}: {exc}", sign=exc.sign, look=k) from None
    est_var = var1 / m + var2 / n
    return LookSummary(k=k, m_cum=m, n_cum=n, mu1_hat=mu1, mu2_hat=mu2,
                       var1_hat=var1, var2_hat=var2, S=s, info_hat=1.0 / est_var)


def statistic_path(data):
    return StatisticPath(tuple(look_summary(data, k) for k in range(1, data.n_stages + 1)))


def welch_df(summary):
    """Welch-Satterthwaite degrees of freedom for a look.

    Raises:
        ValidationError: if either cumulative count is below 2.
        DegenerateDataError: if both variances are zero.
    """
    m, n = summary.m_cum, summary.n_cum
    if m < 2 or n < 2:
        raise ValidationError("Welch df needs at least 2 observations per arm")
    a = summary.var1_hat / m
    b = summary.var2_hat / n
    if a + b <= 0.0:
        raise DegenerateDataError("both arm variances are zero; Welch df undefined",
                                  sign=int(np.sign(summary.mu1_hat - summary.mu2_hat)),
                                  look=summary.k)
    return (a + b) ** 2 / (a * a / (m - 1) + b * b / (n - 1))
