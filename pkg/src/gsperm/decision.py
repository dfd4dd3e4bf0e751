"""Look-by-look stop/continue/reject decisions."""

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from .boundaries import (NORMAL, PERMUTATION, T_APPROX, BoundarySet, CovarianceSchedule,
                         normal_boundaries, t_approx_boundaries)
from .design import ESTIMATED, TWO_SIDED, information_fractions
from .errors import ContractError, InvalidDataError, ValidationError
from .permutation import (DEFAULT_ENUMERATION_CAP, enumeration_size, permutation_boundaries,
                          tie_tolerance)
from .stats import StatisticPath, statistic_path, welch_df

__all__ = [
    "LookDecision",
    "DecisionTrace",
    "InterimState",
    "AnalysisOptions",
    "decide",
    "analyze_interim",
    "analyze",
]

FREEZE = "freeze"
FULL = "full"


@dataclass(frozen=True)
class LookDecision:
    k: int
    s: float
    c: float
    crossed: bool


@dataclass(frozen=True)
class DecisionTrace:
    """Outcome of comparing a statistic path with boundaries.

    ``looks`` stops at ``stop_stage``; later looks are never evaluated.
    """

    stop_stage: int
    rejected: bool
    looks: Tuple[LookDecision, ...]
    method: str

    def to_json(self):
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf" if v > 0 else "-inf"
            if isinstance(v, float) and math.isnan(v):
                return "nan"
            return v
        return {
            "method": self.method,
            "stop_stage": self.stop_stage,
            "rejected": self.rejected,
            "looks": [{"k": d.k, "s": enc(d.s), "c": enc(d.c), "crossed": d.crossed}
                      for d in self.looks],
        }


def decide(path, boundaries, prefix=False):
    """Apply the group sequential decision rule.

    One-sided designs cross at look k when ``S_k >= c_k``, two-sided when
    ``|S_k| >= c_k``. The first crossing stops the trial with rejection; no
    crossing through the last look accepts. A NaN statistic never crosses, and
    a statistic within rounding distance of ``c_k`` counts as a tie and crosses.

    Args:
        path: a StatisticPath or a sequence of statistic values.
        boundaries: BoundarySet of the same length.
        prefix: allow lengths to differ and evaluate only the common prefix.

    Raises:
        ContractError: on a length mismatch when ``prefix`` is false.
    """
    values = path.values if isinstance(path, StatisticPath) else tuple(float(v) for v in path)
    crit = boundaries.values
    if len(values) != len(crit):
        if not prefix:
            raise ContractError(
                f"path has {len(values)} looks but boundaries have {len(crit)}")
    n = min(len(values), len(crit))
    if n == 0:
        raise ContractError("nothing to decide: empty path or boundaries")
    two_sided = boundaries.sidedness == TWO_SIDED
    looks = []
    for k in range(n):
        s, c = values[k], crit[k]
        stat = abs(s) if two_sided else s
        crossed = (not math.isnan(stat)) and stat >= c - tie_tolerance(c)
        looks.append(LookDecision(k + 1, s, c, bool(crossed)))
        if crossed:
            return DecisionTrace(k + 1, True, tuple(looks), boundaries.method)
    return DecisionTrace(n, False, tuple(looks), boundaries.method)


@dataclass(frozen=True)
class AnalysisOptions:
    """Settings for interim analysis.

    ``exhaustive`` is ``"auto"`` (enumerate when the joint count is at most
    ``cap``), ``True`` or ``False``.
    """

    mode: str = FREEZE
    B: int = 1000
    seed: int = 0
    stream_key: Tuple[int, ...] = ()
    exhaustive: object = "auto"
    cap: int = DEFAULT_ENUMERATION_CAP
    i_max: Optional[float] = None
    check_planned: bool = True

    def __post_init__(self):
        if self.mode not in (FREEZE, FULL):
            raise ValidationError(f"unknown boundary mode {self.mode!r}")


@dataclass(frozen=True)
class InterimState:
    """Critical values fixed at earlier looks.

    ``values`` are the method's boundaries. For the t-approximation
    ``nominal`` keeps the normal boundaries the t quantiles were mapped from.
    """

    method: str
    values: Tuple[float, ...] = ()
    attained_spend: Tuple[float, ...] = ()
    nominal: Tuple[float, ...] = ()

    @property
    def looks(self):
        return len(self.values)


def _check_against_design(data, spec):
    k = data.n_stages
    if k > spec.k:
        raise InvalidDataError(f"data has {k} stages but the design has {spec.k}")
    for j, stage in enumerate(data.stages):
        if (stage.m, stage.n) != (spec.planned_m[j], spec.planned_n[j]):
            raise InvalidDataError(
                f"stage {j + 1}: observed sizes (m={stage.m}, n={stage.n}) differ from the "
                f"planned (m={spec.planned_m[j]}, n={spec.planned_n[j]})")


def _fractions(data, spec, path, options):
    k = data.n_stages
    if spec.info_mode == ESTIMATED:
        info = [look.info_hat for look in path.looks]
        return information_fractions(spec, estimated_info=info, i_max=options.i_max,
                                     n_looks=k)
    return information_fractions(spec, n_looks=k)


def _use_exhaustive(data, options):
    if options.exhaustive == "auto":
        return enumeration_size(data) <= options.cap
    return bool(options.exhaustive)


def analyze_interim(data, spec, method, state=None, options=None):
    """Boundary and decision at the latest look in ``data``.

    In freeze mode the critical values of looks ``1..k-1`` are taken from
    ``state`` and only ``c_k`` is computed; in full mode all of them are
    recomputed from the data now available. ``state`` is never modified; the
    updated state is returned.

    Returns:
        ``(trace, new_state)`` where ``trace`` covers looks ``1..k``.
    """
    options = options or AnalysisOptions()
    if method not in (NORMAL, T_APPROX, PERMUTATION):
        raise ValidationError(f"unknown method {method!r}")
    if state is None:
        state = InterimState(method)
    if state.method != method:
        raise ContractError(f"state belongs to method {state.method!r}, not {method!r}")
    if options.check_planned:
        _check_against_design(data, spec)
    k = data.n_stages
    freeze = options.mode == FREEZE
    if freeze and state.looks < k - 1:
        raise ContractError(f"freeze mode at look {k} needs boundaries for looks 1..{k - 1}")

    path = statistic_path(data)
    fractions = _fractions(data, spec, path, options)
    sf, sided = spec.spending, spec.sidedness

    if method == PERMUTATION:
        frozen = state.values[:k - 1] if freeze else ()
        res = permutation_boundaries(
            data, sf, fractions, B=options.B, sidedness=sided, frozen=frozen,
            seed=options.seed, stream_key=options.stream_key,
            exhaustive=_use_exhaustive(data, options), cap=options.cap)
        bset = res.boundaries
        new_state = InterimState(method, bset.values, bset.attained_spend)
    else:
        frozen = (state.nominal if method == T_APPROX else state.values)[:k - 1] if freeze else ()
        normal = normal_boundaries(CovarianceSchedule(fractions), sf, sided, frozen=frozen)
        if method == NORMAL:
            bset = normal
            new_state = InterimState(method, bset.values, bset.attained_spend)
        else:
            dfs = [welch_df(look) for look in path.looks]
            bset = t_approx_boundaries(normal, dfs)
            if freeze:
                values = state.values[:k - 1] + bset.values[k - 1:]
                bset = BoundarySet(values, bset.attained_spend, T_APPROX, sided)
            new_state = InterimState(method, bset.values, bset.attained_spend, normal.values)
    return decide(path, bset), new_state


def analyze(data, spec, method, options=None):
    """Run :func:`analyze_interim` look by look until stopping or the last look.

    Returns:
        ``(trace, state)`` for the final analysed look.
    """
    options = options or AnalysisOptions()
    state = None
    trace = None
    for k in range(1, data.n_stages + 1):
        trace, state = analyze_interim(data.through(k), spec, method, state, options)
        if trace.rejected:
            break
    return trace, state
