"""End-to-end checks of the inequalities and of the two counter-examples.

Each check returns a :class:`VerificationRecord` whose ``passed`` flag is
exactly ``worst_margin >= -tolerance``.  The two pipelines, :func:`run_ce1`
and :func:`run_ce2`, chain such records into a :class:`PipelineReport` and
stop at the first failing stage.
"""

import json
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .criticality import (
    CRITICAL,
    DIVERGENCE_THRESHOLD,
    SUBCRITICAL,
    PositiveSolution,
    classify,
    ground_state,
    liminf_certificate_for,
    ratio_divergence_check,
    second_solution_integrals,
    solution_residual,
    subsolution_certificate,
    wronskian,
    wronskian_constancy,
)
from .errors import CritlabError, InvalidArgumentError, NumericalError
from .limit_periodic import SIN4_MEAN, DriftField, LimitField, mean_value
from .operators import Preset, drift_gauge, gauge_transform, make_operator
from .quadrature import CumulativeIntegral, integrate_segments, unit_breakpoints
from .spectral import IVPSolution, eigenvalue_sweep, solve_ivp

MARGIN_TOL = 1e-10
MAX_N = 9
MAX_AVERAGE_K = 6
PHI_DECAY_THRESHOLD = 1e-12
W_FLOOR = 0.9
CE1_WRONSKIAN_TOL = 1e-6
AVERAGE_TOL = 1e-12

# Identities a pipeline stage can exercise; the test suite asserts that the
# two pipelines together touch all of them.
IDENTITIES = (
    "sigma-recursion",
    "drift-definition",
    "global-lower-bound",
    "ce1-gauge",
    "ce1-ground-state",
    "ratio-derivative",
    "ce2-drift-solutions",
    "ce2-gauge",
    "subsolution",
    "zero-average",
    "kn-lower",
    "kn-upper",
    "translations",
    "limit-operator",
    "limit-averages",
    "liminf-criticality",
)


@dataclass
class VerificationRecord:
    """Outcome of one check.

    ``passed`` is ``worst_margin >= -tolerance``; ``worst_location`` says
    where the smallest margin occurred.
    """

    name: str
    parameters: dict
    passed: bool
    worst_location: object
    worst_margin: float
    tolerance: float
    runtime_ms: int = 0
    details: dict = field(default_factory=dict)
    identities: List[str] = field(default_factory=list)

    def to_dict(self, runtime=False):
        out = {
            "name": self.name,
            "parameters": self.parameters,
            "pass": self.passed,
            "worst_case": {"location": self.worst_location, "margin": self.worst_margin},
            "tolerance": self.tolerance,
            "details": self.details,
            "identities": list(self.identities),
        }
        if runtime:
            out["runtime_ms"] = self.runtime_ms
        return _clean(out)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _record(name, parameters, margins, locations, tolerance, t0, details=None, identities=()):
    margins = np.asarray(margins, dtype=float)
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return VerificationRecord(
        name, parameters, bool(worst >= -tolerance), locations[i], worst, tolerance,
        int(round((time.perf_counter() - t0) * 1000)), details or {}, list(identities),
    )


def _boolean_record(name, parameters, ok, t0, details=None, identities=(), location=None):
    # margin 0 on success and -1 on failure keeps pass <=> margin >= -tolerance
    return _record(name, parameters, [0.0 if ok else -1.0], [location], 0.0, t0, details, identities)


def _check_nmax(n_max):
    if not isinstance(n_max, (int, np.integer)) or not 0 <= n_max <= MAX_N:
        raise InvalidArgumentError(f"n_max must be an integer in [0, {MAX_N}]")


class CellPerturbation:
    """``b + amount`` on the cell ``[cell, cell + 1]``, otherwise ``b``.

    A deliberately broken field for negative controls; the antiderivative
    stays in closed form.
    """

    def __init__(self, amount, cell=0, field=None):
        self.amount = float(amount)
        self.cell = float(cell)
        self.base = field if field is not None else DriftField()

    def _overlap(self, x):
        lo, hi = self.cell, self.cell + 1.0
        return np.clip(x, lo, hi) - np.clip(0.0, lo, hi)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.cell) & (x <= self.cell + 1.0)
        return np.asarray(self.base.value(x)) + self.amount * inside

    __call__ = value

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.base.antiderivative(x)) + self.amount * self._overlap(x)


def _kn_pairs(n_max):
    return [(n, k) for n in range(n_max + 1) for k in range(n + 1)]


def verify_kn_lower(n_max=8, field=None):
    """``int_{3**n - 3**k}^{3**n} b >= 0`` for all ``0 <= k <= n <= n_max``."""
    t0 = time.perf_counter()
    _check_nmax(n_max)
    f = field if field is not None else DriftField()
    pairs = _kn_pairs(n_max)
    hi = np.array([3.0**n for n, _ in pairs])
    lo = np.array([3.0**n - 3.0**k for n, k in pairs])
    ints = np.asarray(f.antiderivative(hi)) - np.asarray(f.antiderivative(lo))
    locs = [{"n": n, "k": k} for n, k in pairs]
    details = {"smallest_integrals": _smallest(ints, locs)}
    return _record("kn-lower", {"n_max": int(n_max)}, ints, locs, MARGIN_TOL, t0, details, ["kn-lower"])


def verify_kn_upper(n_max=8, field=None):
    """``int_{3**n}^{3**n + 3**k} b <= C 3**k / (n+1)**2`` with ``C = 3/8``."""
    t0 = time.perf_counter()
    _check_nmax(n_max)
    f = field if field is not None else DriftField()
    pairs = _kn_pairs(n_max)
    lo = np.array([3.0**n for n, _ in pairs])
    hi = np.array([3.0**n + 3.0**k for n, k in pairs])
    ints = np.asarray(f.antiderivative(hi)) - np.asarray(f.antiderivative(lo))
    bound = np.array([SIN4_MEAN * 3.0**k / (n + 1) ** 2 for n, k in pairs])
    margins = bound - ints
    locs = [{"n": n, "k": k} for n, k in pairs]
    details = {"C": SIN4_MEAN, "smallest_margins": _smallest(margins, locs)}
    return _record("kn-upper", {"n_max": int(n_max)}, margins, locs, MARGIN_TOL, t0, details, ["kn-upper"])


def _smallest(values, locs, count=3):
    order = np.argsort(values, kind="stable")[:count]
    return [{**locs[i], "value": float(values[i])} for i in order]


def _growth_profile(x):
    ax = np.abs(x)
    return ax / (np.log(ax) / math.log(3.0) + 1.0) ** 2


def find_K_and_verify_lower_bound(x_max=3**8, step=0.01, field=None):
    """Largest K with ``B(x) >= K |x| / (log3|x| + 1)**2 - K`` on a sample grid.

    Writing ``g(x) = |x| / (log3|x| + 1)**2`` the inequality reads
    ``B >= K (g - 1)``, so every sample with ``g > 1`` caps K at
    ``B / (g - 1)`` and every sample with ``g < 1`` and ``B < 0`` forces
    ``K >= -B / (1 - g)``.  K is the smallest cap; the record then checks
    all samples, on both signs of x, with that K.

    Returns
    -------
    K : float
        Implementation-derived constant (the inequality only asserts that
        some K > 0 exists).
    record : VerificationRecord
    """
    t0 = time.perf_counter()
    if not x_max >= 3:
        raise InvalidArgumentError("x_max must be at least 3")
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    f = field if field is not None else DriftField()
    n = int(math.floor((x_max - 1.0) / step + 1e-9)) + 1
    pos = 1.0 + step * np.arange(n)
    x = np.concatenate([-pos[::-1], pos])
    big = np.asarray(f.antiderivative(x), dtype=float)
    g = _growth_profile(x)
    above, below = g > 1.0, (g < 1.0) & (big < 0)
    cap = np.min(big[above] / (g[above] - 1.0)) if above.any() else math.inf
    floor = np.max(-big[below] / (1.0 - g[below])) if below.any() else 0.0
    K = float(cap)
    margins = big - K * (g - 1.0)
    ok_k = K > 0 and math.isfinite(K) and floor <= K
    params = {"x_max": float(x_max), "step": float(step)}
    details = {"K": K, "K_source": "implementation-derived", "K_lower_constraint": float(floor),
               "samples": int(x.size), "violations": int(np.sum(margins < -MARGIN_TOL)),
               "margin_at_1": float(margins[n])}
    if not ok_k:
        # a non-positive K would contradict the inequality; fail regardless of margins
        margins = np.minimum(margins, -1.0)
    return K, _record("global-lower-bound", params, margins, x.tolist(), MARGIN_TOL, t0, details,
                      ["global-lower-bound"])


def verify_limit_averages(k_max=4, tol=1e-6, field=None):
    """``int_{-3**k}^0 b_inf >= 0`` and ``int_0^{3**k} b_inf <= 0`` for ``k <= k_max``.

    Integrals come from adaptive Simpson on unit cells with absolute
    tolerance ``tol``; the allowed violation is ``tol`` plus the field's
    pointwise tolerance times the longest window.  The closed-form cell sums
    of the limit field are reported alongside as an independent route.
    """
    t0 = time.perf_counter()
    if not isinstance(k_max, (int, np.integer)) or not 0 <= k_max <= MAX_AVERAGE_K:
        raise InvalidArgumentError(f"k_max must be an integer in [0, {MAX_AVERAGE_K}]")
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    f = field if field is not None else LimitField(1e-9)
    field_tol = float(getattr(f, "tol", 0.0))
    allowance = tol + field_tol * 3.0**k_max
    margins, locs, rows = [], [], []
    for k in range(k_max + 1):
        r = 3.0**k
        left = unit_breakpoints(-r, 0.0)
        right = unit_breakpoints(0.0, r)
        neg = math.fsum(integrate_segments(f.value, left, tol=tol / (2 * left.size)))
        pos = math.fsum(integrate_segments(f.value, right, tol=tol / (2 * right.size)))
        margins += [neg, -pos]
        locs += [{"k": k, "side": "negative"}, {"k": k, "side": "positive"}]
        rows.append({"k": k, "int_negative": neg, "int_positive": pos,
                     "closed_negative": -float(f.antiderivative(-r)), "closed_positive": float(f.antiderivative(r))})
    params = {"k_max": int(k_max), "tol": float(tol), "field": type(f).__name__}
    return _record("limit-averages", params, margins, locs, allowance, t0, {"integrals": rows},
                   ["limit-averages", "translations"])


# -- pipelines ---------------------------------------------------------------


@dataclass
class PipelineReport:
    """Stages of one counter-example pipeline, in execution order."""

    name: str
    stages: List[VerificationRecord]
    aborted_at: Optional[str] = None
    numerical_error: bool = False

    @property
    def passed(self):
        return self.aborted_at is None and all(s.passed for s in self.stages)

    @property
    def identities(self):
        return sorted({i for s in self.stages for i in s.identities})

    def stage(self, name):
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self, runtime=False):
        return {
            "pipeline": self.name,
            "pass": self.passed,
            "aborted_at": self.aborted_at,
            "stages": [s.to_dict(runtime) for s in self.stages],
            "identities": self.identities,
        }

    def to_json(self):
        # runtimes stay out of the JSON so that reports are byte-reproducible
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def summary_table(self):
        rows = [("stage", "pass", "worst margin", "tolerance", "ms")]
        for s in self.stages:
            rows.append((s.name, "yes" if s.passed else "NO", f"{s.worst_margin:.6g}", f"{s.tolerance:.1e}",
                         str(s.runtime_ms)))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        verdict = "PASS" if self.passed else f"FAIL (stopped at {self.aborted_at})"
        return f"{self.name}: {verdict}\n" + "\n".join(lines) + "\n"


def _run_stages(name, stages):
    report = PipelineReport(name, [])
    for stage_name, fn in stages:
        t0 = time.perf_counter()
        try:
            rec = fn()
        except NumericalError as err:
            rec = _boolean_record(stage_name, {}, False, t0, {"error": str(err)})
            report.numerical_error = True
        rec.name = stage_name
        report.stages.append(rec)
        if not rec.passed:
            report.aborted_at = stage_name
            break
    return report


def _closed_form_solution(phi, x):
    return IVPSolution(x, np.asarray(phi.value(x)), np.asarray(phi.deriv(x)))


def _residual_points(count=10_000, radius=3.0**6, seed=20240611):
    return np.sort(np.random.default_rng(seed).uniform(-radius, radius, count))


def _residual_stage(preset, source_preset, gauge_sign, phi, identities):
    t0 = time.perf_counter()
    x = _residual_points()
    direct = make_operator(preset)
    gauged = gauge_transform(make_operator(source_preset), drift_gauge(gauge_sign))
    res = max(float(np.max(solution_residual(direct, phi, x))), float(np.max(solution_residual(gauged, phi, x))))
    potential_gap = float(np.max(np.abs(direct.potential(x) - gauged.potential(x))))
    details = {"max_relative_residual": res, "potential_gap": potential_gap, "points": int(x.size),
               "gauge_is_self_adjoint": gauged.self_adjoint}
    ok = gauged.self_adjoint
    margins = [1e-8 - res, 1e-12 - potential_gap, 0.0 if ok else -1.0]
    locs = ["residual", "potential", "self-adjoint"]
    return _record(f"{preset.value}-residual", {"points": int(x.size)}, margins, locs, 0.0, t0, details,
                   identities)


def _second_solution(phi, radius):
    """``phi * (1 + int_0^x 1/phi**2)``, the solution with psi(0) = 1, (psi - phi)'(0) = 1."""
    inv = CumulativeIntegral(lambda t: np.exp(-2.0 * phi.log(t)), radius)
    return lambda x: np.asarray(phi.value(x)) * (1.0 + inv(np.asarray(x, dtype=float)))


def run_ce1():
    """First counter-example: ``u'' - 2 b u'`` and its self-adjoint form.

    Stages: the ground state ``exp(-B)`` solves the self-adjoint equation;
    it decays along 3**n; Dirichlet eigenvalues decrease towards 0; the
    operator classifies as critical; the ratio of a second solution to the
    ground state runs off to -infinity; Wronskian constancy of a numerical
    pair; the global lower bound on B; and the conclusion that the only
    positive solution is not almost periodic.
    """
    phi = ground_state(Preset.CE1_SA)
    op = make_operator(Preset.CE1_SA)
    state = {}

    def decay():
        t0 = time.perf_counter()
        n = np.arange(2, 9)
        vals = np.asarray(phi.value(3.0**n))
        steps = vals[:-1] - vals[1:]
        state["phi_min"] = float(vals[-1])
        margins = list(steps) + [PHI_DECAY_THRESHOLD - vals[-1]]
        locs = [f"3^{k}->3^{k + 1}" for k in n[:-1]] + ["3^8 threshold"]
        details = {"phi_at_3n": {f"3^{k}": float(v) for k, v in zip(n, vals)}, "threshold": PHI_DECAY_THRESHOLD}
        rec = _record("ce1-decay", {"n": [2, 8]}, margins, locs, 0.0, t0, details,
                      ["sigma-recursion", "drift-definition"])
        rec.passed = rec.passed and bool(np.all(steps > 0))
        return rec

    def sweep():
        t0 = time.perf_counter()
        radii = [3.0**k for k in range(2, 6)]
        res = eigenvalue_sweep(op, radii)
        lams = res.lambdas
        margins = [lams[i] - lams[i + 1] for i in range(len(lams) - 1)] + [min(lams)]
        locs = [f"R={radii[i + 1]:g}" for i in range(len(lams) - 1)] + ["positivity"]
        details = {"radii": radii, "lambda": lams, "residual": [p.residual for p in res.points],
                   "eigenfunction_positive": all(p.positive for p in res.points)}
        rec = _record("ce1-sweep", {"radii": radii}, margins, locs, 0.0, t0, details, ["ce1-gauge"])
        rec.passed = rec.passed and min(margins) > 0 and details["eigenfunction_positive"]
        return rec

    def classification():
        t0 = time.perf_counter()
        rep = classify(op, phi, radii=[3.0**k for k in range(7)])
        state["report"] = rep
        ok = rep.classification == CRITICAL
        margins = [rep.integrals.forward[-1] - DIVERGENCE_THRESHOLD, rep.integrals.backward[-1] - DIVERGENCE_THRESHOLD]
        details = rep.to_dict()
        rec = _record("ce1-classify", {"threshold": DIVERGENCE_THRESHOLD, "R_max": 3.0**6},
                      margins if ok else [-1.0], ["forward", "backward"] if ok else ["classification"], 0.0, t0,
                      details, ["ce1-ground-state"])
        return rec

    def ratio():
        t0 = time.perf_counter()
        psi = _second_solution(phi, 3**6)
        chk = ratio_divergence_check(phi.value, psi, n_max=6, dphi=phi.deriv)
        details = {"points": chk.points, "ratios": chk.ratios, "decrements": chk.decrements,
                   "increasing": chk.increasing}
        return _record("ce1-ratio", {"n_max": 6}, [chk.decrement_floor if chk.verdict else -1.0],
                       ["decrement floor"], 0.0, t0, details, ["ratio-derivative"])

    def wronskian_stage():
        t0 = time.perf_counter()
        num = solve_ivp(op, 0.0, 0.0, 0.0, 1.0, 10.0)
        closed = _closed_form_solution(phi, num.x)
        dev = wronskian_constancy(closed, num)
        w0 = float(wronskian(closed.u[0], closed.du[0], num.u[0], num.du[0]))
        return _record("ce1-wronskian", {"interval": [0.0, 10.0]}, [CE1_WRONSKIAN_TOL - dev], ["[0, 10]"], 0.0,
                       t0, {"deviation": dev, "W0": w0}, ["ce1-ground-state"])

    def lower_bound():
        return find_K_and_verify_lower_bound()[1]

    def conclusion():
        t0 = time.perf_counter()
        rep = state["report"]
        ok = rep.classification == CRITICAL and state["phi_min"] < PHI_DECAY_THRESHOLD
        details = {"classification": rep.classification, "inf_phi_sampled": state["phi_min"],
                   "statement": "the positive solution is unique up to scaling and decays along 3^n, "
                                "so it has no positive infimum and is not almost periodic"}
        return _boolean_record("ce1-conclusion", {}, ok, t0, details, ["ce1-ground-state"])

    stages = [
        ("ce1-residual", lambda: _residual_stage(Preset.CE1_SA, Preset.CE1_DRIFT, -1.0, phi,
                                                 ["ce1-gauge", "ce1-ground-state", "drift-definition"])),
        ("ce1-decay", decay),
        ("ce1-sweep", sweep),
        ("ce1-classify", classification),
        ("ce1-ratio", ratio),
        ("ce1-wronskian", wronskian_stage),
        ("global-lower-bound", lower_bound),
        ("ce1-conclusion", conclusion),
    ]
    return _run_stages("ce1", stages)


def ce2_positive_pair(radius=81.0, h=1e-3):
    """Two positive solutions of ``u'' + 2 b u' = 0`` on ``[-radius, radius]``.

    ``u1 = 1`` and ``u2 = u + sup|u|`` where ``u`` solves the equation with
    ``u(0) = 0, u'(0) = 1`` (so ``u' = exp(-2B)``), integrated by RK4 from
    0 in both directions.  The sup over the whole line is
    ``int_{-inf}^0 exp(-2B)``, taken from the directional integral at
    radius 3**9 where it has converged.  Returns the nodes, ``u2``,
    ``u2'`` and the Wronskians of the raw pair and of the gauge-normalised
    pair ``exp(B) u1, exp(B) u2``.
    """
    sup_u = second_solution_integrals(ground_state(Preset.CE2_SA), [3.0**9]).backward[-1]
    op = make_operator(Preset.CE2_DRIFT)
    fwd = solve_ivp(op, 0.0, 0.0, 0.0, 1.0, radius, h)
    bwd = solve_ivp(op, 0.0, 0.0, 0.0, 1.0, -radius, h)
    x = np.concatenate([bwd.x[::-1], fwd.x[1:]])
    u = np.concatenate([bwd.u[::-1], fwd.u[1:]])
    du = np.concatenate([bwd.du[::-1], fwd.du[1:]])
    u2 = u + sup_u
    w_raw = wronskian(np.ones_like(x), np.zeros_like(x), u2, du)
    big = np.asarray(DriftField().antiderivative(x))
    b = np.asarray(DriftField().value(x))
    e = np.exp(big)
    # v_i = exp(B) u_i, v_i' = exp(B) (b u_i + u_i')
    w_gauge = wronskian(e, e * b, e * u2, e * (b * u2 + du))
    return x, u2, du, w_raw, w_gauge


def run_ce2():
    """Second counter-example: ``u'' + 2 b u'`` and its limit operator.

    Stages: two independent positive solutions of the drift form; the
    self-adjoint form classifies as subcritical; b has zero average;
    subsolution certificates at lambda = 0.2 and 0.1; Dirichlet eigenvalues
    stay positive and decrease towards 0; the kn inequalities; averages of
    the limit field; and the liminf certificate that makes the limit
    operator critical.
    """
    op = make_operator(Preset.CE2_SA)
    phi = ground_state(Preset.CE2_SA)
    b = DriftField()

    def pair():
        t0 = time.perf_counter()
        x, u2, du, w_raw, w_gauge = ce2_positive_pair()
        i0 = int(np.argmin(np.abs(x)))
        details = {"interval": [float(x[0]), float(x[-1])], "min_u2": float(np.min(u2)),
                   "W_raw_at_0": float(w_raw[i0]), "min_abs_W_raw": float(np.min(np.abs(w_raw))),
                   "min_abs_W_gauge": float(np.min(np.abs(w_gauge))),
                   "max_abs_W_gauge": float(np.max(np.abs(w_gauge)))}
        margins = [float(np.min(u2)), float(np.min(np.abs(w_gauge))) - W_FLOOR, abs(float(w_raw[i0])) - W_FLOOR]
        locs = ["positivity", "gauge Wronskian floor", "Wronskian at 0"]
        rec = _record("ce2-pair", {"radius": 81.0, "h": 1e-3}, margins, locs, 0.0, t0, details,
                      ["ce2-drift-solutions", "ce2-gauge"])
        rec.passed = rec.passed and details["min_u2"] > 0
        return rec

    def residual():
        return _residual_stage(Preset.CE2_SA, Preset.CE2_DRIFT, 1.0, phi, ["ce2-gauge"])

    def classification():
        t0 = time.perf_counter()
        rep = classify(op, phi)
        ok = rep.classification == SUBCRITICAL
        return _boolean_record("ce2-classify", {"threshold": DIVERGENCE_THRESHOLD}, ok, t0, rep.to_dict(),
                               ["ce2-gauge"], location=rep.classification)

    def zero_average():
        t0 = time.perf_counter()
        sym = [mean_value(b, -3.0**k, 2 * 3.0**k) for k in range(9)]
        one_sided = {f"3^{k}": mean_value(b, 0.0, 3.0**k) for k in (4, 6, 8)}
        shrinking = abs(one_sided["3^8"]) < abs(one_sided["3^6"]) < abs(one_sided["3^4"])
        margins = [AVERAGE_TOL - max(abs(v) for v in sym), 0.0 if shrinking else -1.0]
        details = {"symmetric_means": sym, "one_sided_means": one_sided}
        return _record("zero-average", {"k_max": 8}, margins, ["symmetric windows", "one-sided decay"], 0.0, t0,
                       details, ["zero-average"])

    def subsolutions():
        t0 = time.perf_counter()
        certs = [subsolution_certificate(b, 0.2, (-3.0**6, 3.0**6), 0.01),
                 subsolution_certificate(b, 0.1, (-3.0**7, 3.0**7), 0.01)]
        details = {f"lambda={c.lam:g}": {"eps": c.eps, "interval": list(c.interval), "sup_b": c.sup_b,
                                         "min_slack": c.min_slack, "argmin": c.argmin,
                                         "psi_minus": c.psi_minus, "psi_plus": c.psi_plus, "passed": c.passed}
                   for c in certs}
        margins = [min(c.min_slack, 1.0 - max(c.psi_minus, c.psi_plus)) if c.passed else -1.0 for c in certs]
        return _record("ce2-subsolution", {"lambdas": [0.2, 0.1], "step": 0.01}, margins,
                       ["lambda=0.2", "lambda=0.1"], 0.0, t0, details, ["subsolution"])

    def sweep():
        t0 = time.perf_counter()
        radii = [3.0**k for k in range(2, 6)]
        res = eigenvalue_sweep(op, radii)
        lams = res.lambdas
        margins = [lams[i] - lams[i + 1] for i in range(len(lams) - 1)] + [min(lams)]
        locs = [f"R={radii[i + 1]:g}" for i in range(len(lams) - 1)] + ["positivity"]
        details = {"radii": radii, "lambda": lams, "residual": [p.residual for p in res.points]}
        rec = _record("ce2-sweep", {"radii": radii}, margins, locs, 0.0, t0, details, ["ce2-gauge"])
        rec.passed = rec.passed and min(margins) > 0
        return rec

    def limit_stage():
        t0 = time.perf_counter()
        lim_op = make_operator(Preset.LIMIT_SA)
        phi_star = ground_state(Preset.LIMIT_SA)
        cert = liminf_certificate_for(phi_star, 6)
        rep = classify(lim_op, phi_star, liminf=cert)
        ok = cert.holds and rep.classification == CRITICAL
        details = {"liminf": {"phi_plus": cert.phi_plus, "phi_minus": cert.phi_minus, "bound": cert.bound},
                   "classification": rep.classification, "report": rep.to_dict()}
        margin = cert.bound - max(min(cert.phi_plus), min(cert.phi_minus))
        return _record("limit-critical", {"k_max": 6}, [margin if ok else -1.0], ["liminf"], 0.0, t0, details,
                       ["limit-operator", "liminf-criticality", "translations"])

    def contrast():
        t0 = time.perf_counter()
        sub = report.stage("ce2-classify").details["classification"]
        crit = report.stage("limit-critical").details["classification"]
        ok = sub == SUBCRITICAL and crit == CRITICAL
        return _boolean_record("ce2-contrast", {}, ok, t0, {"ce2-sa": sub, "limit-sa": crit},
                               ["limit-operator"])

    stages = [
        ("ce2-pair", pair),
        ("ce2-residual", residual),
        ("ce2-classify", classification),
        ("zero-average", zero_average),
        ("ce2-subsolution", subsolutions),
        ("ce2-sweep", sweep),
        ("kn-lower", lambda: verify_kn_lower(8)),
        ("kn-upper", lambda: verify_kn_upper(8)),
        ("limit-averages", lambda: verify_limit_averages(4, 1e-6)),
        ("limit-critical", limit_stage),
    ]
    report = _run_stages("ce2", stages)
    if report.passed:
        t0 = time.perf_counter()
        report.stages.append(contrast())
        report.stages[-1].runtime_ms = int(round((time.perf_counter() - t0) * 1000))
        if not report.stages[-1].passed:
            report.aborted_at = "ce2-contrast"
    return report
