"""Monte Carlo operating characteristics of the three sequential tests.

Every replicate's data come from streams keyed by ``(seed, replicate, stage,
arm)`` and its permutation streams from ``(seed, replicate, stage)``, so all
methods see the same data within a replicate and results do not depend on
how replicates are split across workers.
"""

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import rng as rngmod
from .boundaries import (NORMAL, PERMUTATION, T_APPROX, BoundarySet, CovarianceSchedule,
                         normal_boundaries, t_approx_boundaries)
from .decision import FREEZE, FULL, AnalysisOptions, analyze, decide
from .design import ESTIMATED, DesignSpec, information_fractions, spend_increments
from .distributions import DistSpec, draw_stage, parse_dist
from .errors import DegenerateDataError, GSPermError, ValidationError
from .permutation import permutation_replicates, sequential_cutoffs
from .stats import StageBlock, TrialData, statistic_path, welch_df

__all__ = [
    "ScenarioConfig",
    "MethodResult",
    "OperatingCharacteristics",
    "simulate_trial",
    "run_scenario",
    "sweep",
    "load_scenarios",
    "CSV_HEADER",
    "write_results_csv",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "scenario_id", "method", "n0", "k_stages", "gamma", "spending", "dist1", "dist2",
    "mu", "r_sims", "b_perms", "reject_rate", "se", "mean_stop_stage",
    "degenerate_count", "seconds",
)
ALL_METHODS = (NORMAL, T_APPROX, PERMUTATION)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario.

    The treatment arm draws from ``dist1`` shifted by ``mu``, the control arm
    from ``dist2``. Each stage adds ``n0`` control and ``gamma * n0``
    treatment observations.
    """

    design: DesignSpec
    dist1: DistSpec
    dist2: DistSpec
    n0: int
    mu: float = 0.0
    methods: Tuple[str, ...] = ALL_METHODS
    b_perms: int = 1000
    r_sims: int = 1000
    seed: int = 0
    boundary_mode: str = FULL
    scenario_id: str = "s0000"

    def __post_init__(self):
        object.__setattr__(self, "dist1", parse_dist(self.dist1))
        object.__setattr__(self, "dist2", parse_dist(self.dist2))
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValidationError(f"unknown method {m!r}")
        if self.r_sims < 100:
            raise ValidationError("r_sims must be at least 100")
        if self.boundary_mode not in (FREEZE, FULL):
            raise ValidationError(f"unknown boundary mode {self.boundary_mode!r}")
        m0 = self.design.gamma * self.n0
        if m0.denominator != 1 or m0 < 1:
            raise ValidationError(f"gamma * n0 = {m0} must be a positive integer")
        if set(self.design.planned_n) != {self.n0}:
            raise ValidationError("design stage sizes must equal n0")

    @classmethod
    def from_json(cls, obj, default_seed=0, index=0):
        """Build from a flat scenario document (see the README for keys)."""
        try:
            k = int(obj.get("k_stages", obj.get("k", 2)))
            n0 = int(obj["n0"])
            alpha = float(obj.get("alpha", 0.025))
            design = DesignSpec.balanced(
                k, n0, alpha=alpha, spending=obj.get("spending", "pocock"),
                gamma=obj.get("gamma", 1), sidedness=obj.get("sidedness", "one-sided"),
                info_mode=obj.get("info_mode", "sample-size"), i_max=obj.get("i_max"))
            return cls(
                design=design,
                dist1=obj.get("dist1", "normal(0,1)"),
                dist2=obj.get("dist2", "normal(0,1)"),
                n0=n0,
                mu=float(obj.get("mu", 0.0)),
                methods=tuple(obj.get("methods", ALL_METHODS)),
                b_perms=int(obj.get("b_perms", 1000)),
                r_sims=int(obj.get("r_sims", 1000)),
                seed=int(obj.get("seed", default_seed)),
                boundary_mode=obj.get("boundary_mode", FULL),
                scenario_id=str(obj.get("scenario_id", f"s{index:04d}")),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed scenario {index}: {exc!r}") from exc


@dataclass(frozen=True)
class MethodResult:
    reject_rate: float
    se: float
    mean_stop_stage: float
    per_look_reject: Tuple[float, ...]
    degenerate_count: int


@dataclass(frozen=True)
class OperatingCharacteristics:
    scenario: ScenarioConfig
    results: Dict[str, MethodResult]
    seconds: float
    error: Optional[str] = None


def _spending_name(sf):
    return sf.kind


def simulate_data(cfg, r):
    """Trial data of replicate ``r``."""
    d = cfg.design
    shifted = cfg.dist1.shifted(cfg.mu)
    blocks = []
    for j in range(d.k):
        x = draw_stage(shifted, d.planned_m[j], rngmod.stream(cfg.seed, rngmod.DATA, r, j, 0))
        y = draw_stage(cfg.dist2, d.planned_n[j], rngmod.stream(cfg.seed, rngmod.DATA, r, j, 1))
        blocks.append(StageBlock(x, y))
    return TrialData(tuple(blocks))


class _Cache:
    def __init__(self, cfg):
        self.cfg = cfg
        d = cfg.design
        self.fixed_fractions = None
        self.normal = None
        if d.info_mode != ESTIMATED:
            self.fixed_fractions = information_fractions(d)
            self.normal = normal_boundaries(CovarianceSchedule(self.fixed_fractions),
                                            d.spending, d.sidedness)

    def fractions(self, path):
        if self.fixed_fractions is not None:
            return self.fixed_fractions
        return information_fractions(self.cfg.design,
                                     estimated_info=[lk.info_hat for lk in path.looks])

    def normal_set(self, fractions):
        if self.normal is not None:
            return self.normal
        d = self.cfg.design
        return normal_boundaries(CovarianceSchedule(fractions), d.spending, d.sidedness)


def simulate_trial(cfg, r, cache=None):
    """Outcome of every configured method on replicate ``r``.

    Returns:
        dict mapping method to ``(rejected, stop_stage, degenerate)``.
    """
    cache = cache or _Cache(cfg)
    data = simulate_data(cfg, r)
    d = cfg.design
    out = {}
    try:
        path = statistic_path(data)
    except DegenerateDataError:
        return {m: (False, d.k, True) for m in cfg.methods}

    fractions = cache.fractions(path)
    for method in cfg.methods:
        try:
            if method == NORMAL:
                trace = decide(path, cache.normal_set(fractions))
            elif method == T_APPROX:
                dfs = [welch_df(look) for look in path.looks]
                trace = decide(path, t_approx_boundaries(cache.normal_set(fractions), dfs))
            elif cfg.boundary_mode == FULL:
                reps = permutation_replicates(data, B=cfg.b_perms, seed=cfg.seed,
                                              stream_key=(r,))
                incs = spend_increments(d.spending, fractions, d.sidedness)
                values, attained, _ = sequential_cutoffs(reps.S, incs, d.sidedness)
                trace = decide(path, BoundarySet(values, attained, PERMUTATION, d.sidedness))
            else:
                opts = AnalysisOptions(mode=FREEZE, B=cfg.b_perms, seed=cfg.seed,
                                       stream_key=(r,), exhaustive=False)
                trace, _ = analyze(data, d, PERMUTATION, opts)
            out[method] = (trace.rejected, trace.stop_stage, False)
        except DegenerateDataError:
            out[method] = (False, d.k, True)
    return out


def _run_chunk(cfg, start, stop):
    cache = _Cache(cfg)
    rows = []
    for r in range(start, stop):
        res = simulate_trial(cfg, r, cache)
        rows.append(tuple(res[m] for m in cfg.methods))
    return rows


def _chunks(total, workers):
    size = max(1, math.ceil(total / (workers * 4)))
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _collect(cfg, workers, executor=None):
    chunks = _chunks(cfg.r_sims, workers)
    if workers <= 1 and executor is None:
        parts = [_run_chunk(cfg, a, b) for a, b in chunks]
    else:
        own = executor is None
        ex = executor or ProcessPoolExecutor(max_workers=workers)
        try:
            futures = [ex.submit(_run_chunk, cfg, a, b) for a, b in chunks]
            parts = [f.result() for f in futures]
        finally:
            if own:
                ex.shutdown()
    return [row for part in parts for row in part]


def _summarise(cfg, rows):
    R = cfg.r_sims
    K = cfg.design.k
    results = {}
    for i, method in enumerate(cfg.methods):
        rejected = np.array([row[i][0] for row in rows], dtype=bool)
        stops = np.array([row[i][1] for row in rows], dtype=np.int64)
        degenerate = int(sum(row[i][2] for row in rows))
        p = float(rejected.sum()) / R
        per_look = tuple(float(np.sum(rejected & (stops == k))) / R for k in range(1, K + 1))
        results[method] = MethodResult(
            reject_rate=p,
            se=math.sqrt(p * (1.0 - p) / R),
            mean_stop_stage=float(stops.sum()) / R,
            per_look_reject=per_look,
            degenerate_count=degenerate,
        )
    return results


def run_scenario(cfg, workers=1, executor=None):
    """Estimate rejection rates of each configured method.

    Args:
        cfg: the scenario.
        workers: number of worker processes; 1 runs in-process.
        executor: optional shared process pool.

    Returns:
        OperatingCharacteristics; identical for any ``workers`` apart from
        ``seconds``.
    """
    t0 = time.perf_counter()
    rows = _collect(cfg, workers, executor)
    results = _summarise(cfg, rows)
    return OperatingCharacteristics(cfg, results, time.perf_counter() - t0)


def sweep(configs, workers=1):
    """Run every scenario; a failing scenario is recorded and the sweep continues."""
    table = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for cfg in configs:
            t0 = time.perf_counter()
            try:
                table.append(run_scenario(cfg, workers, executor))
            except GSPermError as exc:
                log.warning("scenario %s failed: %s", cfg.scenario_id, exc)
                table.append(OperatingCharacteristics(cfg, {}, time.perf_counter() - t0,
                                                      error=f"{type(exc).__name__}: {exc}"))
    finally:
        if executor is not None:
            executor.shutdown()
    return table


def _expand(doc, default_seed):
    base = dict(doc.get("defaults", {}))
    seed = int(doc.get("seed", default_seed))
    entries = [dict(base, **s) for s in doc.get("scenarios", [])]
    grid = doc.get("grid")
    if grid:
        keys = list(grid)
        for combo in itertools.product(*(grid[k] for k in keys)):
            entries.append(dict(base, **dict(zip(keys, combo))))
    return entries, seed


def load_scenarios(source, default_seed=0):
    """Scenario list from a JSON file path, a JSON string, or a parsed document.

    The document may hold ``"scenarios"`` (explicit list), ``"grid"`` (a
    mapping of keys to value lists, expanded as a cartesian product in key
    order), ``"defaults"`` merged into each entry, and a top-level ``"seed"``.
    """
    if isinstance(source, (dict, list)):
        doc = source
    else:
        text = source
        if not str(source).lstrip().startswith(("{", "[")):
            with open(source) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid scenario JSON: {exc}") from exc
    if isinstance(doc, list):
        doc = {"scenarios": doc}
    entries, seed = _expand(doc, default_seed)
    return [ScenarioConfig.from_json(e, seed, i) for i, e in enumerate(entries)]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def result_rows(table, record_time=False):
    """CSV rows (as tuples of strings) for a sweep table, in scenario then method order."""
    rows = []
    for oc in table:
        cfg = oc.scenario
        d = cfg.design
        gamma = str(d.gamma) if d.gamma.denominator != 1 else str(int(d.gamma))
        for method in cfg.methods:
            res = oc.results.get(method)
            rows.append(tuple(_fmt(v) for v in (
                cfg.scenario_id, method, cfg.n0, d.k, gamma, _spending_name(d.spending),
                str(cfg.dist1), str(cfg.dist2), float(cfg.mu), cfg.r_sims,
                cfg.b_perms if method == PERMUTATION else None,
                res.reject_rate if res else math.nan,
                res.se if res else math.nan,
                res.mean_stop_stage if res else math.nan,
                res.degenerate_count if res else None,
                float(oc.seconds) if record_time else None,
            )))
    return rows


def write_results_csv(table, fh, record_time=False):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(result_rows(table, record_time))
