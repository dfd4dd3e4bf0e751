"""Outcome distributions for simulated trials.

Draws use open-interval uniforms from the supplied generator: normal and
Laplace variates by inverse cdf, exponential by ``-log(u)``, log-normal as
``exp`` of a normal, and Student t as a normal over the root of a scaled
chi-square.
"""

import math
import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError, ValidationError
from .special import std_normal_quantile

__all__ = ["DistSpec", "parse_dist", "draw_stage"]

_FAMILIES = {
    "normal": "normal", "n": "normal", "norm": "normal",
    "t": "t",
    "exp": "exp", "exponential": "exp",
    "laplace": "laplace",
    "lognormal": "lognormal", "lnorm": "lognormal", "log-normal": "lognormal",
}
_DEFAULTS = {
    "normal": (0.0, 1.0),      # mean, variance
    "t": None,                 # degrees of freedom required
    "exp": (1.0,),             # rate
    "laplace": (0.0, 1.0),     # location, scale
    "lognormal": (0.0, 1.0),   # log-mean, log-sd
}
_SPEC_RE = re.compile(r"^\s*([A-Za-z\-]+)\s*(?:\(([^)]*)\))?\s*(?:\+\s*([-+0-9.eE]+))?\s*$")


@dataclass(frozen=True)
class DistSpec:
    """A distribution family, its parameters and an additive shift.

    ``normal(mu, var)`` is parameterised by variance.
    """

    family: str
    params: Tuple[float, ...]
    shift: float = 0.0

    def __post_init__(self):
        fam = _FAMILIES.get(self.family.lower())
        if fam is None:
            raise ValidationError(f"unknown distribution family {self.family!r}")
        object.__setattr__(self, "family", fam)
        params = tuple(float(p) for p in self.params)
        if not params:
            if _DEFAULTS[fam] is None:
                raise ValidationError(f"{fam} needs parameters")
            params = _DEFAULTS[fam]
        object.__setattr__(self, "params", params)
        self._validate()

    def _validate(self):
        fam, p = self.family, self.params
        expected = {"normal": 2, "t": 1, "exp": 1, "laplace": 2, "lognormal": 2}[fam]
        if len(p) != expected:
            raise ValidationError(f"{fam} takes {expected} parameter(s), got {len(p)}")
        if fam == "normal" and p[1] <= 0:
            raise DomainError("normal variance must be positive")
        if fam == "t" and p[0] <= 2:
            raise DomainError("t degrees of freedom must exceed 2 for a finite variance")
        if fam == "exp" and p[0] <= 0:
            raise DomainError("exponential rate must be positive")
        if fam in ("laplace", "lognormal") and p[1] <= 0:
            raise DomainError(f"{fam} scale must be positive")

    def shifted(self, mu):
        return DistSpec(self.family, self.params, self.shift + mu)

    @property
    def mean(self):
        fam, p = self.family, self.params
        base = {
            "normal": lambda: p[0],
            "t": lambda: 0.0,
            "exp": lambda: 1.0 / p[0],
            "laplace": lambda: p[0],
            "lognormal": lambda: math.exp(p[0] + 0.5 * p[1] ** 2),
        }[fam]()
        return base + self.shift

    @property
    def variance(self):
        fam, p = self.family, self.params
        if fam == "normal":
            return p[1]
        if fam == "t":
            return p[0] / (p[0] - 2.0)
        if fam == "exp":
            return 1.0 / p[0] ** 2
        if fam == "laplace":
            return 2.0 * p[1] ** 2
        s2 = p[1] ** 2
        return math.expm1(s2) * math.exp(2.0 * p[0] + s2)

    def __str__(self):
        args = ",".join(format(v, "g") for v in self.params)
        text = f"{self.family}({args})"
        if self.shift:
            text += f"+{self.shift:g}"
        return text


def parse_dist(text):
    """Parse ``"normal(0,1)"``, ``"t(5)"``, ``"exp(1)"``, ``"laplace"``, ``"lognormal+0.5"``."""
    if isinstance(text, DistSpec):
        return text
    match = _SPEC_RE.match(str(text))
    if not match:
        raise ValidationError(f"cannot parse distribution {text!r}")
    family, args, shift = match.groups()
    params = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
    return DistSpec(family, params, float(shift) if shift else 0.0)


def _uniform_open(rng, count):
    # Generator.random is k / 2**53 on [0, 1); offsetting by half a step keeps 0 out.
    return rng.random(count) + 2.0 ** -54


def draw_stage(dist, count, rng):
    """``count`` i.i.d. draws from ``dist`` (shift included).

    Raises:
        DomainError: if the parameters are invalid.
    """
    dist = parse_dist(dist)
    if count < 0:
        raise DomainError("count must be non-negative")
    fam, p = dist.family, dist.params
    u = _uniform_open(rng, count)
    if fam == "normal":
        x = p[0] + math.sqrt(p[1]) * std_normal_quantile(u)
    elif fam == "t":
        z = std_normal_quantile(u)
        chi2 = rng.chisquare(p[0], count)
        x = z / np.sqrt(chi2 / p[0])
    elif fam == "exp":
        x = -np.log(u) / p[0]
    elif fam == "laplace":
        x = p[0] + p[1] * np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
    else:
        x = np.exp(p[0] + p[1] * std_normal_quantile(u))
    return np.asarray(x, dtype=float).reshape(count) + dist.shift
