"""Design-time description of a two-arm group sequential trial."""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, InvalidDataError, ValidationError
from .special import std_normal_quantile, std_normal_sf

__all__ = [
    "ONE_SIDED",
    "TWO_SIDED",
    "SpendingFunction",
    "DesignSpec",
    "spend",
    "spend_increments",
    "information_fractions",
]

ONE_SIDED = "one-sided"
TWO_SIDED = "two-sided"
SIDEDNESS = (ONE_SIDED, TWO_SIDED)

POCOCK = "pocock"
OBRIEN_FLEMING = "obrien-fleming"
CUSTOM = "custom"
_KIND_ALIASES = {
    "pocock": POCOCK,
    "pocock-type": POCOCK,
    "obf": OBRIEN_FLEMING,
    "obrien-fleming": OBRIEN_FLEMING,
    "obrien-fleming-type": OBRIEN_FLEMING,
    "custom": CUSTOM,
    "custom-table": CUSTOM,
}

SAMPLE_SIZE = "sample-size"
ESTIMATED = "estimated-information"
_INFO_ALIASES = {
    "sample-size": SAMPLE_SIZE,
    "estimated": ESTIMATED,
    "estimated-information": ESTIMATED,
}


@dataclass(frozen=True)
class SpendingFunction:
    """Cumulative type I error spent as a function of information fraction.

    ``kind`` is ``"pocock"``, ``"obrien-fleming"`` or ``"custom"``. A custom
    function is a table of ``(t, f(t))`` knots, interpolated linearly; the
    knots must start at ``(0, 0)``, end at ``(1, alpha)`` and be
    non-decreasing in both coordinates.
    """

    kind: str
    alpha: float
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValidationError(f"unknown spending function kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if kind == CUSTOM:
            if not self.table:
                raise ValidationError("custom spending function needs a table")
            knots = tuple((float(t), float(f)) for t, f in self.table)
            ts = np.array([k[0] for k in knots])
            fs = np.array([k[1] for k in knots])
            if ts[0] != 0.0 or fs[0] != 0.0:
                raise ValidationError("custom spending table must start at (0, 0)")
            if ts[-1] != 1.0 or not math.isclose(fs[-1], self.alpha, rel_tol=1e-12):
                raise ValidationError("custom spending table must end at (1, alpha)")
            if np.any(np.diff(ts) <= 0) or np.any(np.diff(fs) < 0):
                raise ValidationError(
                    "custom spending table must be increasing in t and non-decreasing in f"
                )
            object.__setattr__(self, "table", knots)
        elif self.table is not None:
            raise ValidationError("only custom spending functions take a table")

    def to_json(self):
        if self.kind == CUSTOM:
            return {"kind": CUSTOM, "table": [list(k) for k in self.table]}
        return self.kind

    @classmethod
    def from_json(cls, obj, alpha):
        if isinstance(obj, str):
            return cls(obj, alpha)
        return cls(obj["kind"], alpha, tuple(tuple(k) for k in obj.get("table", ())) or None)


def spend(sf, t, sidedness=ONE_SIDED):
    """Cumulative error spent by ``sf`` at information fraction ``t``.

    Args:
        sf: the spending function.
        t: information fraction in [0, 1].
        sidedness: ``"one-sided"`` or ``"two-sided"``; only the O'Brien-Fleming
            type depends on it.

    Returns:
        A value in ``[0, sf.alpha]``, exactly ``alpha`` at ``t = 1``.

    Raises:
        DomainError: if ``t`` is outside [0, 1].
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"information fraction {t} outside [0, 1]")
    alpha = sf.alpha
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return alpha
    if sf.kind == POCOCK:
        value = alpha * math.log1p((math.e - 1.0) * t)
    elif sf.kind == OBRIEN_FLEMING:
        if sidedness == ONE_SIDED:
            z = std_normal_quantile(1.0 - alpha / 2.0)
            value = 2.0 * std_normal_sf(z / math.sqrt(t))
        elif sidedness == TWO_SIDED:
            z = std_normal_quantile(1.0 - alpha / 4.0)
            value = 4.0 * std_normal_sf(z / math.sqrt(t))
        else:
            raise ValidationError(f"unknown sidedness {sidedness!r}")
    else:
        ts, fs = zip(*sf.table)
        value = float(np.interp(t, ts, fs))
    return min(value, alpha)


def spend_increments(sf, fractions, sidedness=ONE_SIDED):
    """Per-look spend ``f(t_k) - f(t_{k-1})`` with ``t_0 = 0``."""
    cumulative = [spend(sf, t, sidedness) for t in fractions]
    return [max(c - p, 0.0) for c, p in zip(cumulative, [0.0] + cumulative[:-1])]


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value).limit_denominator(10**6)


@dataclass(frozen=True)
class DesignSpec:
    """A K-stage two-arm design with fixed allocation ratio.

    ``planned_n`` and ``planned_m`` are the per-stage control and treatment
    increments. ``info_mode`` selects how information fractions are formed:
    from planned cumulative sizes, or from estimated information relative to
    ``i_max``.
    """

    k: int
    gamma: Fraction
    alpha: float
    spending: SpendingFunction
    planned_n: Tuple[int, ...]
    planned_m: Tuple[int, ...]
    sidedness: str = ONE_SIDED
    info_mode: str = SAMPLE_SIZE
    i_max: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", _as_fraction(self.gamma))
        object.__setattr__(self, "planned_n", tuple(int(v) for v in self.planned_n))
        object.__setattr__(self, "planned_m", tuple(int(v) for v in self.planned_m))
        if isinstance(self.spending, str):
            object.__setattr__(self, "spending", SpendingFunction(self.spending, self.alpha))
        mode = _INFO_ALIASES.get(self.info_mode)
        if mode is None:
            raise ValidationError(f"unknown info_mode {self.info_mode!r}")
        object.__setattr__(self, "info_mode", mode)

        if self.k < 1:
            raise ValidationError("k must be at least 1")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if not 0.0 < self.alpha <= 0.5:
            raise ValidationError("alpha must lie in (0, 0.5]")
        if self.sidedness not in SIDEDNESS:
            raise ValidationError(f"unknown sidedness {self.sidedness!r}")
        if self.spending.alpha != self.alpha:
            raise ValidationError("spending function alpha differs from design alpha")
        if len(self.planned_n) != self.k or len(self.planned_m) != self.k:
            raise ValidationError("planned_n and planned_m need one entry per stage")
        if min(self.planned_n) < 2 or min(self.planned_m) < 2:
            raise ValidationError("planned stage sizes must be at least 2 per arm")
        for m, n in zip(self.planned_m, self.planned_n):
            if Fraction(m, n) != self.gamma:
                raise ValidationError(
                    f"stage sizes m={m}, n={n} break the fixed allocation ratio {self.gamma}"
                )
        if self.info_mode == ESTIMATED and not (self.i_max and self.i_max > 0):
            raise ValidationError("estimated-information mode needs i_max > 0")

    @classmethod
    def balanced(cls, k, n0, alpha=0.025, spending="pocock", gamma=1,
                 sidedness=ONE_SIDED, **kwargs):
        """Equal increments of ``n0`` control and ``gamma * n0`` treatment units."""
        gamma = _as_fraction(gamma)
        m0 = gamma * n0
        if m0.denominator != 1:
            raise ValidationError(f"gamma * n0 = {m0} is not an integer")
        sf = spending if isinstance(spending, SpendingFunction) else SpendingFunction(spending, alpha)
        return cls(k=k, gamma=gamma, alpha=alpha, spending=sf,
                   planned_n=(n0,) * k, planned_m=(int(m0),) * k,
                   sidedness=sidedness, **kwargs)

    @property
    def cumulative_n(self):
        return tuple(np.cumsum(self.planned_n).tolist())

    @property
    def cumulative_m(self):
        return tuple(np.cumsum(self.planned_m).tolist())

    def to_json(self):
        gamma = self.gamma
        return {
            "k": self.k,
            "gamma": int(gamma) if gamma.denominator == 1 else str(gamma),
            "alpha": self.alpha,
            "sidedness": self.sidedness,
            "spending": self.spending.to_json(),
            "planned_n": list(self.planned_n),
            "planned_m": list(self.planned_m),
            "info_mode": self.info_mode,
            "i_max": self.i_max,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            alpha = float(obj["alpha"])
            return cls(
                k=int(obj["k"]),
                gamma=obj["gamma"],
                alpha=alpha,
                sidedness=obj.get("sidedness", ONE_SIDED),
                spending=SpendingFunction.from_json(obj["spending"], alpha),
                planned_n=obj["planned_n"],
                planned_m=obj["planned_m"],
                info_mode=obj.get("info_mode", SAMPLE_SIZE),
                i_max=obj.get("i_max"),
            )
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ValidationError(f"malformed design document: {exc!r}") from exc

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_json(obj)


def information_fractions(spec, estimated_info: Optional[Sequence[float]] = None,
                          i_max: Optional[float] = None, n_looks: Optional[int] = None):
    """Information fractions for the first ``n_looks`` looks.

    In sample-size mode this is ``ñ_k / ñ_K`` from the planned sizes. In
    estimated-information mode it is ``min(I_k / I_max, 1)``. Whenever the
    final look K is among those returned its fraction is set to 1.

    Raises:
        InvalidDataError: if estimated information is not strictly
            increasing, or reaches ``I_max`` before the final look.
    """
    if spec.info_mode == SAMPLE_SIZE and estimated_info is None:
        n_looks = spec.k if n_looks is None else n_looks
        cum = np.cumsum(spec.planned_n, dtype=float)
        fractions = list(cum[:n_looks] / cum[-1])
    else:
        if estimated_info is None:
            raise ValidationError("estimated-information mode needs the information sequence")
        i_max = spec.i_max if i_max is None else i_max
        if not (i_max and i_max > 0):
            raise ValidationError("i_max must be positive")
        info = [float(v) for v in estimated_info]
        if n_looks is not None:
            info = info[:n_looks]
        if any(b <= a for a, b in zip(info, info[1:])) or (info and info[0] <= 0):
            raise InvalidDataError("estimated information must be positive and strictly increasing")
        fractions = [min(v / i_max, 1.0) for v in info]
        for j, t in enumerate(fractions[:-1]):
            if t >= 1.0 and j + 1 < spec.k:
                raise InvalidDataError(
                    f"information reached i_max at look {j + 1} before the final look"
                )
    if len(fractions) == spec.k:
        fractions[-1] = 1.0
    elif len(fractions) > spec.k:
        raise ValidationError("more looks than design stages")
    if fractions and fractions[-1] >= 1.0 and len(fractions) < spec.k:
        raise InvalidDataError(
            f"information reached i_max at look {len(fractions)} before the final look"
        )
    return fractions
