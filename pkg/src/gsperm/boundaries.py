"""Critical values from the limiting multivariate normal law.

The joint law of the statistic path under the null has independent
increments, so the probability of first crossing at look k can be computed
by carrying a sub-density of the statistic over the continuation region from
look to look. Each look's critical value is found by root finding on that
crossing probability.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .design import ONE_SIDED, SIDEDNESS, TWO_SIDED, spend_increments
from .errors import DomainError, NumericalError, ValidationError
from .special import std_normal_cdf, std_normal_pdf, std_normal_sf, t_isf

__all__ = [
    "BoundarySet",
    "CovarianceSchedule",
    "normal_boundaries",
    "t_approx_boundaries",
    "crossing_probabilities",
    "subdensity",
]

NORMAL = "normal"
T_APPROX = "t-approx"
PERMUTATION = "permutation"
METHODS = (NORMAL, T_APPROX, PERMUTATION)

# Integration is truncated to [-_LIMIT, _LIMIT]; the continuation
# sub-density never exceeds the N(0, 1) density, whose mass outside is ~1e-15.
_LIMIT = 8.0
_BASE_NODES = 256
_MAX_NODES = 4096
_QUAD_TOL = 1e-7


def _encode_value(v):
    return "inf" if v == math.inf else ("-inf" if v == -math.inf else v)


def _decode_value(v):
    if isinstance(v, str):
        return float(v)
    return float(v)


@dataclass(frozen=True)
class BoundarySet:
    """Critical values ``c_1..c_K`` with the per-look crossing probability they attain.

    ``+inf`` marks a look at which nothing may be rejected.
    """

    values: Tuple[float, ...]
    attained_spend: Tuple[float, ...]
    method: str
    sidedness: str = ONE_SIDED

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "attained_spend", tuple(float(v) for v in self.attained_spend))
        if self.method not in METHODS:
            raise ValidationError(f"unknown boundary method {self.method!r}")
        if self.sidedness not in SIDEDNESS:
            raise ValidationError(f"unknown sidedness {self.sidedness!r}")
        if len(self.values) != len(self.attained_spend):
            raise ValidationError("values and attained_spend differ in length")

    def __len__(self):
        return len(self.values)

    def prefix(self, k):
        return BoundarySet(self.values[:k], self.attained_spend[:k], self.method, self.sidedness)

    def to_json(self):
        return {
            "method": self.method,
            "sidedness": self.sidedness,
            "values": [_encode_value(v) for v in self.values],
            "attained_spend": list(self.attained_spend),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(values=[_decode_value(v) for v in obj["values"]],
                   attained_spend=obj["attained_spend"],
                   method=obj["method"], sidedness=obj.get("sidedness", ONE_SIDED))


@dataclass(frozen=True)
class CovarianceSchedule:
    """Information fractions ``0 < t_1 < ... < t_k <= 1`` of the looks."""

    fractions: Tuple[float, ...]

    def __post_init__(self):
        fr = tuple(float(t) for t in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if not fr:
            raise ValidationError("schedule needs at least one look")
        if fr[0] <= 0 or fr[-1] > 1 or any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValidationError("information fractions must be strictly increasing in (0, 1]")

    @property
    def correlations(self):
        t = np.asarray(self.fractions)
        return np.sqrt(np.minimum.outer(t, t) / np.maximum.outer(t, t))


@lru_cache(maxsize=16)
def _legendre(n):
    return leggauss(n)


def _grid(lo, hi, n):
    x, w = _legendre(n)
    half = 0.5 * (hi - lo)
    return half * x + 0.5 * (hi + lo), half * w


def _region(c, two_sided):
    hi = min(c, _LIMIT)
    lo = max(-c, -_LIMIT) if two_sided else -_LIMIT
    return lo, hi


class _Recursion:
    """Sub-density of the statistic restricted to 'no crossing so far'."""

    def __init__(self, fractions, two_sided, n_nodes):
        self.t = fractions
        self.two_sided = two_sided
        self.n_nodes = n_nodes
        self.look = 0
        self.nodes = None
        self.mass_weights = None  # quadrature weight times sub-density

    def _transition(self):
        rho = math.sqrt(self.t[self.look - 1] / self.t[self.look])
        return rho, math.sqrt(1.0 - rho * rho)

    def crossing(self, c):
        """Probability of no crossing before the current look and crossing at it."""
        if c == math.inf:
            return 0.0
        if self.look == 0:
            p = std_normal_sf(c)
            return 2.0 * p if self.two_sided else p
        rho, s = self._transition()
        mean = rho * self.nodes
        p = std_normal_sf((c - mean) / s)
        if self.two_sided:
            p = p + std_normal_cdf((-c - mean) / s)
        return float(np.dot(self.mass_weights, p))

    def density_at(self, z):
        """Sub-density of the current look's statistic before truncation at ``c``."""
        z = np.asarray(z, dtype=float)
        if self.look == 0:
            return std_normal_pdf(z)
        rho, s = self._transition()
        out = np.empty(z.shape)
        flat = z.ravel()
        res = out.ravel()
        for start in range(0, flat.size, 512):
            chunk = flat[start:start + 512]
            kern = std_normal_pdf((chunk[:, None] - rho * self.nodes[None, :]) / s) / s
            res[start:start + 512] = kern @ self.mass_weights
        return res.reshape(z.shape)

    def advance(self, c):
        """Truncate at ``c`` and move to the next look."""
        lo, hi = _region(c, self.two_sided)
        if hi <= lo:
            nodes = np.zeros(0)
            weights = np.zeros(0)
        else:
            nodes, weights = _grid(lo, hi, self.n_nodes)
        g = self.density_at(nodes)
        self.nodes = nodes
        self.mass_weights = weights * g
        self.look += 1

    def continuation_mass(self):
        return float(np.sum(self.mass_weights))


def _solve_look(rec, target):
    def excess(c):
        return rec.crossing(c) - target

    lo, hi = (0.0 if rec.two_sided else -_LIMIT - 1.0), 12.0
    if excess(lo) < 0:
        raise NumericalError(
            "spend increment exceeds the remaining continuation probability",
            {"look": rec.look + 1, "target": target, "max_crossing": rec.crossing(lo)},
        )
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e3:
            raise NumericalError("could not bracket critical value",
                                 {"look": rec.look + 1, "target": target})
    try:
        return brentq(excess, lo, hi, xtol=1e-12, rtol=1e-14, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"root finding failed: {exc}",
                             {"look": rec.look + 1, "target": target}) from exc


def _run(fractions, increments, two_sided, frozen, n_nodes):
    rec = _Recursion(fractions, two_sided, n_nodes)
    values, attained = [], []
    for k, d in enumerate(increments):
        if k < len(frozen):
            c = float(frozen[k])
        elif d <= 0.0:
            c = math.inf
        else:
            c = _solve_look(rec, d)
        values.append(c)
        attained.append(rec.crossing(c))
        if k + 1 < len(increments):
            rec.advance(c)
    return values, attained


def normal_boundaries(schedule, sf, sidedness=ONE_SIDED, frozen: Sequence[float] = ()):
    """Solve the spending equations for critical values under N(0, Sigma).

    Args:
        schedule: information fractions of the looks to solve.
        sf: spending function providing the per-look spend increments.
        sidedness: one- or two-sided rejection.
        frozen: critical values already fixed for the first looks; they are
            used as given and only later looks are solved.

    Returns:
        A BoundarySet with method ``"normal"``.

    Raises:
        NumericalError: if root finding or quadrature refinement fails.
    """
    if sidedness not in SIDEDNESS:
        raise ValidationError(f"unknown sidedness {sidedness!r}")
    fractions = list(schedule.fractions)
    increments = spend_increments(sf, fractions, sidedness)
    if len(frozen) > len(fractions):
        raise ValidationError("more frozen values than looks")
    two_sided = sidedness == TWO_SIDED

    n = _BASE_NODES
    prev, prev_att = _run(fractions, increments, two_sided, frozen, n)
    while True:
        n *= 2
        cur, cur_att = _run(fractions, increments, two_sided, frozen, n)
        diffs = [abs(a - b) for a, b in zip(prev, cur) if math.isfinite(a) or math.isfinite(b)]
        if all(math.isfinite(d) for d in diffs) and max(diffs, default=0.0) < _QUAD_TOL:
            return BoundarySet(cur, cur_att, NORMAL, sidedness)
        if n >= _MAX_NODES:
            raise NumericalError("quadrature did not converge",
                                 {"nodes": n, "values": cur, "previous": prev})
        prev, prev_att = cur, cur_att


def crossing_probabilities(schedule, values, sidedness=ONE_SIDED, n_nodes=1024):
    """Per-look first-crossing probabilities of fixed critical values."""
    fractions = list(schedule.fractions)
    if len(values) != len(fractions):
        raise ValidationError("need one critical value per look")
    _, attained = _run(fractions, [0.0] * len(values), sidedness == TWO_SIDED,
                       list(values), n_nodes)
    return attained


def subdensity(schedule, values, look, z, sidedness=ONE_SIDED, n_nodes=1024):
    """Density at ``z`` of the look-``look`` statistic on 'no crossing before'.

    ``look`` is 1-based and only ``values[:look - 1]`` are used.
    """
    fractions = list(schedule.fractions)
    rec = _Recursion(fractions, sidedness == TWO_SIDED, n_nodes)
    for c in values[:look - 1]:
        rec.advance(float(c))
    return rec.density_at(z)


def t_approx_boundaries(normal, dfs):
    """Map normal critical values to t quantiles at the same nominal stage levels.

    Each ``c_k`` becomes ``G_{df_k}^{-1}(Phi(c_k))``; ``+inf`` stays ``+inf``.

    Raises:
        DomainError: if any degrees of freedom are not positive.
    """
    if len(dfs) < len(normal.values):
        raise ValidationError("need degrees of freedom for every look")
    out = []
    for c, df in zip(normal.values, dfs):
        if not df > 0:
            raise DomainError(f"degrees of freedom must be positive, got {df}")
        if math.isinf(c):
            out.append(c)
        elif math.isinf(df):
            out.append(c)
        else:
            out.append(t_isf(std_normal_sf(c), df))
    return BoundarySet(out, normal.attained_spend[:len(out)], T_APPROX, normal.sidedness)
