"""Stage-wise studentized permutation test.

Observations are relabeled only within the stage in which they were
collected. For each relabeling the studentized statistic is recomputed at
every look from the cumulative relabeled data, and the critical values come
from sequential order statistics of these permuted paths under the spending
function.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import rng as rngmod
from .boundaries import PERMUTATION, BoundarySet
from .design import ONE_SIDED, SIDEDNESS, TWO_SIDED, spend_increments
from .errors import (DegenerateDataError, EnumerationSizeError, ValidationError)
from .stats import StageBlock, TrialData, statistic_path

__all__ = [
    "StageAssignment",
    "ReplicateSet",
    "PermutationBoundaryResult",
    "sample_assignment",
    "permuted_data",
    "permuted_path",
    "enumeration_size",
    "enumerate_assignments",
    "permutation_replicates",
    "sequential_cutoffs",
    "permutation_boundaries",
    "mixture_variance_target",
    "tie_tolerance",
]

MONTE_CARLO = "monte-carlo"
EXHAUSTIVE = "exhaustive"
DEFAULT_ENUMERATION_CAP = 10**6

# Pooled-denominator threshold (in units of the pooled data variance) below
# which a relabeled replicate is treated as degenerate.
_DEGENERATE_TOL = 1e-12

# Permuted statistics that are mathematically equal can differ by rounding;
# values within this relative distance are treated as ties.
TIE_RTOL = 1e-9


def tie_tolerance(c):
    return TIE_RTOL * max(1.0, abs(c)) if math.isfinite(c) else 0.0


@dataclass(frozen=True, eq=False)
class StageAssignment:
    """One relabeling per stage.

    ``orders[k]`` is a permutation of the positions of stage k's pooled
    observations (treatment first, then control); its first ``m_k`` entries
    become the relabeled treatment arm.
    """

    orders: Tuple[np.ndarray, ...]

    def __post_init__(self):
        orders = []
        for order in self.orders:
            arr = np.asarray(order, dtype=np.int64)
            if not np.array_equal(np.sort(arr), np.arange(arr.size)):
                raise ValidationError("stage assignment is not a permutation of its stage")
            arr.flags.writeable = False
            orders.append(arr)
        object.__setattr__(self, "orders", tuple(orders))

    @classmethod
    def identity(cls, data):
        return cls(tuple(np.arange(s.m + s.n) for s in data.stages))

    @classmethod
    def from_treatment_sets(cls, data, treatment_sets):
        """Build from the positions sent to treatment in each stage."""
        orders = []
        for stage, chosen in zip(data.stages, treatment_sets):
            chosen = list(chosen)
            if len(chosen) != stage.m or len(set(chosen)) != stage.m:
                raise ValidationError("treatment set must have m_k distinct positions")
            rest = [i for i in range(stage.m + stage.n) if i not in set(chosen)]
            orders.append(np.array(chosen + rest))
        return cls(tuple(orders))

    def treatment_sets(self, data):
        return tuple(tuple(sorted(o[:s.m].tolist())) for o, s in zip(self.orders, data.stages))

    def __eq__(self, other):
        return (isinstance(other, StageAssignment) and len(self.orders) == len(other.orders)
                and all(np.array_equal(a, b) for a, b in zip(self.orders, other.orders)))


def sample_assignment(data, rng):
    """Independent uniform relabeling of each stage.

    Args:
        data: trial data through the current look.
        rng: a ``numpy.random.Generator``.
    """
    return StageAssignment(tuple(rng.permutation(s.m + s.n) for s in data.stages))


def permuted_data(data, assignment):
    if len(assignment.orders) < data.n_stages:
        raise ValidationError("assignment does not cover every stage")
    blocks = []
    for stage, order in zip(data.stages, assignment.orders):
        if order.size != stage.m + stage.n:
            raise ValidationError("assignment size does not match stage size")
        pooled = stage.pooled[order]
        blocks.append(StageBlock(pooled[:stage.m], pooled[stage.m:]))
    return TrialData(tuple(blocks), strict=data.strict)


def permuted_path(data, assignment):
    """Studentized statistics at looks 1..k of the relabeled data.

    Raises:
        DegenerateDataError: if a relabeled look has both arm variances zero.
    """
    return statistic_path(permuted_data(data, assignment)).values


def enumeration_size(data):
    return math.prod(math.comb(s.m + s.n, s.m) for s in data.stages)


def enumerate_assignments(data, cap=DEFAULT_ENUMERATION_CAP):
    """Yield every distinct joint arm assignment exactly once.

    Within-arm order does not affect the statistic, so each stage contributes
    its ``C(N_k, m_k)`` treatment subsets.

    Raises:
        EnumerationSizeError: if the joint count exceeds ``cap``.
    """
    total = enumeration_size(data)
    if total > cap:
        raise EnumerationSizeError(
            f"{total} joint assignments exceed the cap of {cap}; use Monte Carlo mode"
        )
    per_stage = [list(itertools.combinations(range(s.m + s.n), s.m)) for s in data.stages]
    for combo in itertools.product(*per_stage):
        yield StageAssignment.from_treatment_sets(data, combo)


@dataclass(frozen=True)
class ReplicateSet:
    """Permuted statistic paths, one row per replicate.

    ``S`` is NaN where the relabeled data are degenerate. ``var1`` and
    ``var2`` hold the relabeled arm variances on the original data scale.
    """

    S: np.ndarray
    var1: np.ndarray
    var2: np.ndarray
    mode: str

    @property
    def B(self):
        return self.S.shape[0]


def _stage_treatment_indices(data, B, seed, stream_key):
    """Monte Carlo: (B, m_k) index arrays into each stage's pooled vector."""
    out = []
    for j, s in enumerate(data.stages):
        gen = rngmod.stream(seed, rngmod.PERMUTATION, *stream_key, j)
        base = np.broadcast_to(np.arange(s.m + s.n), (B, s.m + s.n))
        perms = gen.permuted(base, axis=1)
        out.append(perms[:, :s.m])
    return out


def _exhaustive_indices(data, cap):
    total = enumeration_size(data)
    if total > cap:
        raise EnumerationSizeError(
            f"{total} joint assignments exceed the cap of {cap}; use Monte Carlo mode"
        )
    combos = [np.array(list(itertools.combinations(range(s.m + s.n), s.m)), dtype=np.int64)
              for s in data.stages]
    # Joint index in itertools.product order: last stage varies fastest.
    grids = np.indices([c.shape[0] for c in combos]).reshape(len(combos), -1)
    return [c[g] for c, g in zip(combos, grids)]


def permutation_replicates(data, B=None, seed=0, stream_key=(), exhaustive=False,
                           cap=DEFAULT_ENUMERATION_CAP):
    """Permuted statistic paths for all looks present in ``data``.

    In Monte Carlo mode stage k's relabelings come from the stream keyed by
    ``(seed, PERMUTATION, *stream_key, k)``, so row ``b`` is reproducible and
    stage ``k``'s draws do not depend on how many later stages exist. In
    exhaustive mode every joint assignment appears once.
    """
    if exhaustive:
        idx = _exhaustive_indices(data, cap)
        mode = EXHAUSTIVE
    else:
        if B is None or B < 1:
            raise ValidationError("Monte Carlo mode needs B >= 1")
        idx = _stage_treatment_indices(data, int(B), seed, stream_key)
        mode = MONTE_CARLO

    pooled_all = np.concatenate([s.pooled for s in data.stages])
    center = float(np.mean(pooled_all))
    scale = float(np.std(pooled_all))
    if scale == 0.0:
        raise DegenerateDataError("all observations are identical", sign=0)

    n_rep = idx[0].shape[0]
    k = data.n_stages
    S = np.empty((n_rep, k))
    var1 = np.empty((n_rep, k))
    var2 = np.empty((n_rep, k))
    t_sum = np.zeros(n_rep)
    t_sq = np.zeros(n_rep)
    c_sum = 0.0
    c_sq = 0.0
    m_cum = n_cum = 0
    for j, (stage, ix) in enumerate(zip(data.stages, idx)):
        z = (stage.pooled - center) / scale
        chosen = z[ix]
        tj = chosen.sum(axis=1)
        qj = (chosen * chosen).sum(axis=1)
        t_sum = t_sum + tj
        t_sq = t_sq + qj
        c_sum = c_sum + z.sum()
        c_sq = c_sq + (z * z).sum()
        m_cum += stage.m
        n_cum += stage.n
        ctrl_sum = c_sum - t_sum
        ctrl_sq = c_sq - t_sq
        mean1 = t_sum / m_cum
        mean2 = ctrl_sum / n_cum
        v1 = np.maximum(t_sq - m_cum * mean1 * mean1, 0.0) / (m_cum - 1) if m_cum > 1 else np.full(n_rep, np.nan)
        v2 = np.maximum(ctrl_sq - n_cum * mean2 * mean2, 0.0) / (n_cum - 1) if n_cum > 1 else np.full(n_rep, np.nan)
        denom_sq = (n_cum * v1 + m_cum * v2) / (m_cum + n_cum)
        with np.errstate(invalid="ignore", divide="ignore"):
            s_val = math.sqrt(m_cum * n_cum / (m_cum + n_cum)) * (mean1 - mean2) / np.sqrt(denom_sq)
        s_val = np.where(denom_sq > _DEGENERATE_TOL, s_val, np.nan)
        S[:, j] = s_val
        var1[:, j] = v1 * scale * scale
        var2[:, j] = v2 * scale * scale
    return ReplicateSet(S=S, var1=var1, var2=var2, mode=mode)


def _allowed_count(d, B):
    return max(int(math.floor(d * B + 1e-9)), 0)


def _cutoff(values, allowed):
    """Smallest observed value ``c`` with ``#(values >= c) <= allowed``, ties grouped.

    The returned value is the smallest member of its tie group, so every
    member of the group counts as reaching it.
    """
    if allowed <= 0 or values.size == 0:
        return math.inf
    v = np.sort(values)[::-1]
    if allowed >= v.size:
        return float(v[-1])
    candidate = v[allowed - 1]
    if v[allowed] < candidate - tie_tolerance(candidate):
        group = v[v >= candidate - tie_tolerance(candidate)]
        return float(group[-1])
    # Ties straddle the cut: move up to the next larger distinct value.
    larger = v[v > candidate + tie_tolerance(candidate)]
    if not larger.size:
        return math.inf
    top = larger[-1]
    return float(v[v >= top - tie_tolerance(top)][-1])


def sequential_cutoffs(S, increments, sidedness=ONE_SIDED, frozen: Sequence[float] = (),
                       B=None):
    """Sequential order-statistic critical values from replicate paths.

    Args:
        S: array (B, k) of permuted statistics; NaN marks a degenerate
            replicate, which never crosses.
        increments: per-look spend increments.
        sidedness: two-sided mode works on ``|S|``.
        frozen: critical values to reuse for the first looks.
        B: denominator for attained spend; defaults to the row count.

    Returns:
        ``(values, attained_spend, survivors_per_look)``.
    """
    S = np.asarray(S, dtype=float)
    B = S.shape[0] if B is None else B
    stat = np.abs(S) if sidedness == TWO_SIDED else S
    alive = np.ones(S.shape[0], dtype=bool)
    values, attained, survivors = [], [], []
    for j, d in enumerate(increments):
        col = stat[:, j]
        finite = alive & ~np.isnan(col)
        survivors.append(int(alive.sum()))
        if j < len(frozen):
            c = float(frozen[j])
        else:
            c = _cutoff(col[finite], _allowed_count(d, B))
        crossed = finite & (col >= c - tie_tolerance(c))
        attained.append(crossed.sum() / B)
        values.append(c)
        alive &= ~crossed
    return values, attained, survivors


@dataclass(frozen=True)
class PermutationBoundaryResult:
    boundaries: BoundarySet
    B: int
    survivors_per_look: Tuple[int, ...]
    mode: str

    def to_json(self):
        out = self.boundaries.to_json()
        out.update({"B": self.B, "mode": self.mode,
                    "survivors_per_look": list(self.survivors_per_look)})
        return out


def permutation_boundaries(data, sf, fractions, B=None, sidedness=ONE_SIDED,
                           frozen: Sequence[float] = (), seed=0, stream_key=(),
                           exhaustive=False, cap=DEFAULT_ENUMERATION_CAP, replicates=None):
    """Critical values from the stage-wise permutation distribution.

    At look j only replicates that have not crossed at an earlier look are
    eligible, and ``c_j`` is the smallest observed permuted statistic such
    that at most ``floor(B * d_j)`` of them reach it, where ``d_j`` is the
    spend increment. Ties at the cut push ``c_j`` up to the next distinct
    value; if nothing can be spent ``c_j = +inf``.

    Args:
        data: trial data through the current look.
        sf: spending function.
        fractions: information fractions for the looks in ``data``.
        B: number of Monte Carlo relabelings (ignored when exhaustive).
        sidedness: one- or two-sided.
        frozen: critical values already fixed at earlier looks.
        seed, stream_key: key of the relabeling streams.
        exhaustive: enumerate all joint assignments instead of sampling.
        cap: limit on the exhaustive enumeration size.
        replicates: precomputed :class:`ReplicateSet` to reuse.

    Raises:
        DegenerateDataError: if the observed data have zero pooled variance.
    """
    if sidedness not in SIDEDNESS:
        raise ValidationError(f"unknown sidedness {sidedness!r}")
    if len(fractions) != data.n_stages:
        raise ValidationError("need one information fraction per look")
    # Observed data must be non-degenerate at every look.
    statistic_path(data)
    if replicates is None:
        if not exhaustive and B is not None and B < 100:
            warnings.warn(f"B={B} is below 100; boundaries will be very coarse", stacklevel=2)
        replicates = permutation_replicates(data, B=B, seed=seed, stream_key=stream_key,
                                            exhaustive=exhaustive, cap=cap)
    increments = spend_increments(sf, fractions, sidedness)
    values, attained, survivors = sequential_cutoffs(
        replicates.S[:, :data.n_stages], increments, sidedness, frozen)
    bset = BoundarySet(values, attained, PERMUTATION, sidedness)
    return PermutationBoundaryResult(bset, replicates.B, tuple(survivors), replicates.mode)


def _moments(dist):
    if isinstance(dist, tuple):
        return float(dist[0]), float(dist[1])
    return float(dist.mean), float(dist.variance)


def mixture_variance_target(f1, f2, gamma):
    """Variance of the mixture ``gamma/(gamma+1) F1 + 1/(gamma+1) F2``.

    ``f1`` and ``f2`` are ``(mean, variance)`` pairs or objects exposing
    ``mean`` and ``variance``.
    """
    mu1, v1 = _moments(f1)
    mu2, v2 = _moments(f2)
    g = float(gamma)
    w1 = g / (g + 1.0)
    w2 = 1.0 / (g + 1.0)
    return w1 * v1 + w2 * v2 + w1 * w2 * (mu1 - mu2) ** 2
