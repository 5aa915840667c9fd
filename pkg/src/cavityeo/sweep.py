"""Parameter sweeps and scalar optimization over the run configuration.

A sweep varies one dotted configuration path (e.g.
``geometry.overrides.d_um``) over a linear or logarithmic range and records
one objective value per point.  Failed points are kept in the curve with
their error message rather than dropped.  Field solutions are cached by a
content hash of (geometry, resolution, materials) so converter-only
parameters re-use the physics solves.  Points may be evaluated by a small
thread pool; results are merged by index so parallel and serial runs emit
identical curves.
"""

import concurrent.futures
import copy
import math
from dataclasses import dataclass

import numpy as np

from .errors import CavityEOError, ConfigError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

OBJECTIVES = ("g0", "C0", "gamma_peak", "P_for_C1", "n_eq")


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep description."""

    parameter: str          # dotted config path
    lo: float
    hi: float
    points: int = 11
    sampling: str = "linear"   # linear | log
    objective: str = "g0"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError("sweep range must satisfy lo < hi")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if self.sampling not in ("linear", "log"):
            raise ConfigError(f"unknown sampling '{self.sampling}'")
        if self.objective not in OBJECTIVES:
            raise ConfigError(
                f"unknown objective '{self.objective}'; choose from {OBJECTIVES}"
            )

    def values(self):
        if self.sampling == "log":
            if self.lo <= 0.0:
                raise ConfigError("log sampling requires a positive range")
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    objective: float = None     # None when the point failed
    status: str = "ok"          # ok | error:<message>
    report_id: str = None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple

    @property
    def ok_points(self):
        return [p for p in self.points if p.status == "ok"]

    def best(self, maximize=None):
        pts = self.ok_points
        if not pts:
            raise CavityEOError("all sweep points failed")
        if maximize is None:
            maximize = _objective_is_maximized(self.spec.objective)
        key = (lambda p: p.objective) if maximize else (lambda p: -p.objective)
        return max(pts, key=key)


def _objective_is_maximized(objective):
    # powers and noise are minimized, coupling figures maximized
    return objective in ("g0", "C0", "gamma_peak")


def set_config_path(config, dotted, value):
    """Set a dotted path in a nested mapping; the path must already resolve."""
    node = config
    parts = dotted.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep parameter path '{dotted}' does not resolve")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"sweep parameter path '{dotted}' does not resolve")
    node[leaf] = float(value)


def extract_objective(report, objective):
    conv = report.conversion
    if objective == "g0":
        return report.coupling.g0
    if objective == "C0":
        return conv.c0
    if objective == "gamma_peak":
        return conv.gamma_peak
    if objective == "P_for_C1":
        return conv.p_c1_dual_w
    if objective == "n_eq":
        if conv.n_eq is None:
            raise CavityEOError("n_eq undefined at zero cooperativity")
        return conv.n_eq
    raise ConfigError(f"unknown objective '{objective}'")


def _evaluate_point(config, spec, value, cache):
    from . import pipeline

    cfg = copy.deepcopy(config)
    set_config_path(cfg, spec.parameter, value)
    report = pipeline.run_pipeline(cfg, solution_cache=cache)
    return extract_objective(report, spec.objective), report.report_id


def sweep(config, spec, jobs=1, cache=None):
    """Evaluate the objective on the sampled range; deterministic ordering."""
    from .pipeline import SolutionCache

    cache = cache if cache is not None else SolutionCache()
    values = spec.values()

    def run_one(v):
        try:
            obj, rid = _evaluate_point(config, spec, v, cache)
            return SweepPoint(value=float(v), objective=float(obj),
                             status="ok", report_id=rid)
        except CavityEOError as err:
            return SweepPoint(value=float(v), status=f"error: {err}")

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(run_one, values))
    else:
        points = [run_one(v) for v in values]

    result = SweepResult(spec=spec, points=tuple(points))
    if not result.ok_points:
        errors = "; ".join(p.status for p in points[:3])
        raise CavityEOError(f"all sweep points failed ({errors} ...)")
    return result


def optimize_scalar(config, spec, jobs=1, rel_tol=1e-3, max_iter=60):
    """Golden-section refinement of the best sweep sample.

    Assumes a unimodal objective over the range (asserted by use, not
    proven); when the refined optimum would be worse than the best sweep
    sample the sweep winner is returned instead.  A flat objective returns
    the range midpoint flagged "flat objective".
    """
    from .pipeline import SolutionCache

    cache = SolutionCache()
    base = sweep(config, spec, jobs=jobs, cache=cache)
    maximize = _objective_is_maximized(spec.objective)
    best_sample = base.best(maximize)

    objs = [p.objective for p in base.ok_points]
    if np.ptp(objs) <= 1e-14 * max(1.0, abs(objs[0])):
        mid = 0.5 * (spec.lo + spec.hi)
        return {
            "parameter": spec.parameter,
            "value": mid,
            "objective": objs[0],
            "status": "flat objective",
            "sweep": base,
        }

    def f(v):
        try:
            obj, _ = _evaluate_point(config, spec, v, cache)
        except CavityEOError:
            return -np.inf if maximize else np.inf
        return obj

    better = (lambda a, b: a > b) if maximize else (lambda a, b: a < b)

    # bracket around the best sample using its sweep neighbors
    ok = base.ok_points
    i = ok.index(best_sample)
    lo = ok[i - 1].value if i > 0 else best_sample.value
    hi = ok[i + 1].value if i < len(ok) - 1 else best_sample.value
    if lo == hi:
        return {
            "parameter": spec.parameter,
            "value": best_sample.value,
            "objective": best_sample.objective,
            "status": "boundary optimum",
            "sweep": base,
        }

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rel_tol * max(abs(a), abs(b), 1e-300):
            break
        if better(fc, fd):
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = c if better(fc, fd) else d
    fx = fc if better(fc, fd) else fd

    if better(best_sample.objective, fx):
        x, fx = best_sample.value, best_sample.objective
    return {
        "parameter": spec.parameter,
        "value": float(x),
        "objective": float(fx),
        "status": "ok",
        "sweep": base,
    }
