"""Criticality of one-dimensional self-adjoint operators.

For ``L u = (A u')' + c u`` with a positive solution ``phi`` of ``L phi = 0``,
every other solution is ``phi * (alpha + beta * int 1/(A phi**2))``.  A second
positive solution exists exactly when ``int 1/(A phi**2)`` converges towards
at least one end, so the operator is critical when the integral diverges in
both directions and subcritical otherwise.  The classifier decides this at
finite radius with explicit thresholds and keeps an "inconclusive" outcome
for when neither verdict is reached.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import DegeneratePairError, InvalidArgumentError
from .limit_periodic import DriftField, LimitField
from .operators import Preset, make_operator
from .quadrature import integrate_intervals

SUPERCRITICAL = "supercritical"
CRITICAL = "critical"
SUBCRITICAL = "subcritical"
INCONCLUSIVE = "inconclusive"

DIVERGENCE_THRESHOLD = 1e6
CONVERGENCE_INCREMENT = 1e-9
DEFAULT_RADII = tuple(3**k for k in range(10))
INTEGRAL_REL_TOL = 1e-8
RESIDUAL_TOL = 1e-6
LIMINF_BOUND = 1.0 + 1e-9
WRONSKIAN_DEGENERATE = 1e-14


@dataclass(frozen=True)
class PositiveSolution:
    """A positive solution, optionally with exact derivatives and logarithm.

    ``log_value`` lets integrands like ``1/phi**2`` be formed as
    ``exp(-2 log phi)`` without intermediate underflow.
    """

    value: Callable
    deriv: Optional[Callable] = None
    deriv2: Optional[Callable] = None
    log_value: Optional[Callable] = None
    name: str = ""

    def __call__(self, x):
        return self.value(x)

    def log(self, x):
        if self.log_value is not None:
            return np.asarray(self.log_value(x), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.value(x), dtype=float))


def _as_solution(phi):
    return phi if isinstance(phi, PositiveSolution) else PositiveSolution(phi)


def _exp_of(log_fn, sign=1.0):
    return lambda x: np.exp(sign * log_fn(x))


def ground_state(preset, tol=1e-9):
    """The explicit positive solution of ``L phi = 0`` for a self-adjoint preset.

    ce1-sa: exp(-B); ce2-sa: exp(B); limit-sa: exp(int b_inf).
    """
    preset = Preset.parse(preset)
    if preset is Preset.CE1_SA:
        b, sign = DriftField(), -1.0
    elif preset is Preset.CE2_SA:
        b, sign = DriftField(), 1.0
    elif preset is Preset.LIMIT_SA:
        b, sign = LimitField(tol), 1.0
    else:
        raise InvalidArgumentError(f"{preset.value} has no tabulated ground state; use its self-adjoint form")

    def log_value(x):
        return sign * np.asarray(b.antiderivative(x), dtype=float)

    def value(x):
        return np.exp(log_value(x))

    def deriv(x):
        return sign * np.asarray(b.value(x)) * value(x)

    def deriv2(x):
        bx = np.asarray(b.value(x))
        return (sign * np.asarray(b.deriv(x)) + bx * bx) * value(x)

    return PositiveSolution(value, deriv, deriv2, log_value, name=f"ground-state({preset.value})")


# -- second-solution integrals ----------------------------------------------


@dataclass
class DirectionalIntegrals:
    radii: List[float]
    forward: List[float]
    backward: List[float]
    forward_overflow_at: Optional[float] = None
    backward_overflow_at: Optional[float] = None


def _directional(integrand, radii, sign, rel_tol):
    values = []
    total = 0.0
    overflow_at = None
    prev = 0.0
    for r in radii:
        if overflow_at is not None:
            values.append(math.inf)
            continue
        lo = np.arange(prev, r, 1.0)
        hi = np.minimum(lo + 1.0, r)
        with np.errstate(over="ignore", invalid="ignore"):
            pieces = integrate_intervals(integrand, sign * lo, sign * hi, tol=1e-300, rel_tol=rel_tol)
        try:
            piece_sum = math.fsum(sign * pieces)
        except (OverflowError, ValueError):
            piece_sum = math.inf
        if not math.isfinite(piece_sum):
            overflow_at = r
            values.append(math.inf)
            continue
        total += piece_sum
        if not math.isfinite(total):
            overflow_at = r
            total = math.inf
        values.append(total)
        prev = r
    return values, overflow_at


def second_solution_integrals(phi, radii=DEFAULT_RADII, diffusion=None, rel_tol=INTEGRAL_REL_TOL):
    """``int_0^R 1/(A phi**2)`` and ``int_{-R}^0 1/(A phi**2)`` for each radius.

    The integrand is assembled from ``log phi`` when available.  An integral
    that overflows is reported as ``inf`` from that radius on, with the
    radius recorded.
    """
    phi = _as_solution(phi)
    radii = [float(r) for r in radii]
    if not radii or radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidArgumentError("radii must be positive and strictly increasing")
    probe = np.linspace(-min(radii[-1], 50.0), min(radii[-1], 50.0), 1001)
    if np.any(~(np.asarray(phi.value(probe)) > 0)):
        raise InvalidArgumentError("phi must be positive")

    def integrand(x):
        with np.errstate(over="ignore"):
            val = np.exp(-2.0 * phi.log(x))
        if diffusion is not None:
            a = np.asarray(diffusion(x), dtype=float)
            if np.any(a <= 0):
                raise InvalidArgumentError("diffusion must be positive")
            val = val / a
        return val

    fwd, fwd_over = _directional(integrand, radii, 1.0, rel_tol)
    bwd, bwd_over = _directional(integrand, radii, -1.0, rel_tol)
    return DirectionalIntegrals(radii, fwd, bwd, fwd_over, bwd_over)


# -- liminf certificate -------------------------------------------------------


@dataclass
class LiminfCertificate:
    holds: bool
    k: List[int]
    phi_plus: List[float]
    phi_minus: List[float]
    bound: float


def liminf_certificate(phi_plus, phi_minus, bound=LIMINF_BOUND):
    """Finite liminf at both ends, read off samples at +3**k and -3**k.

    Holds when the smallest sample on each side is at most ``bound``; for a
    positive eigenfunction this forces criticality of ``L + lam``.
    """
    plus = [float(v) for v in phi_plus]
    minus = [float(v) for v in phi_minus]
    if not plus or not minus:
        raise InvalidArgumentError("need samples on both sides")
    if any(not v > 0 for v in plus + minus):
        raise InvalidArgumentError("samples must be positive")
    holds = min(plus) <= bound and min(minus) <= bound
    return LiminfCertificate(holds, list(range(max(len(plus), len(minus)))), plus, minus, bound)


def liminf_certificate_for(phi, k_max=6, bound=LIMINF_BOUND):
    """Sample ``phi`` (normalised to phi(0) = 1) at +-3**k, k = 0..k_max.

    The comparison with ``bound`` is made on ``log phi``; samples outside the
    float range are stored clamped to it.
    """
    phi = _as_solution(phi)
    pts = np.array([3.0**k for k in range(k_max + 1)])
    log0 = float(phi.log(np.array([0.0]))[0])
    lp = np.asarray(phi.log(pts), dtype=float) - log0
    lm = np.asarray(phi.log(-pts), dtype=float) - log0
    if np.any(np.isnan(lp)) or np.any(np.isnan(lm)) or np.any(lp == -np.inf) or np.any(lm == -np.inf):
        raise InvalidArgumentError("samples must be positive")
    lo, hi = np.finfo(float).tiny, np.finfo(float).max
    with np.errstate(over="ignore"):
        plus = np.clip(np.exp(lp), lo, hi).tolist()
        minus = np.clip(np.exp(lm), lo, hi).tolist()
    log_bound = math.log(bound)
    holds = bool(np.min(lp) <= log_bound and np.min(lm) <= log_bound)
    return LiminfCertificate(holds, list(range(k_max + 1)), plus, minus, bound)


# -- Wronskians -------------------------------------------------------------


def wronskian(u, du, v, dv, a=1.0):
    """``A (u v' - u' v)``; constant along two solutions of the same self-adjoint equation."""
    return a * (np.asarray(u) * np.asarray(dv) - np.asarray(du) * np.asarray(v))


def wronskian_constancy(first, second, interval=None, diffusion=None):
    """Max ``|W(x) - W(x0)| / |W(x0)|`` over the common nodes of two IVP solutions.

    ``x0`` is the first node inside ``interval`` (all nodes by default).
    """
    if first.x.shape != second.x.shape or np.any(first.x != second.x):
        raise InvalidArgumentError("solutions must share their nodes")
    keep = np.ones(first.x.shape, dtype=bool)
    if interval is not None:
        lo, hi = min(interval), max(interval)
        keep = (first.x >= lo) & (first.x <= hi)
        if not keep.any():
            raise InvalidArgumentError("no nodes inside the interval")
    x = first.x[keep]
    a = 1.0 if diffusion is None else np.asarray(diffusion(x), dtype=float)
    w = wronskian(first.u[keep], first.du[keep], second.u[keep], second.du[keep], a)
    if abs(w[0]) < WRONSKIAN_DEGENERATE:
        raise DegeneratePairError("solutions are proportional (zero Wronskian)")
    return float(np.max(np.abs(w - w[0])) / abs(w[0]))


@dataclass
class RatioCheck:
    verdict: bool
    increasing: bool
    points: List[float]
    ratios: List[float]
    decrements: List[float]
    decrement_floor: float


def _deriv_at_zero(fn, dfn):
    if dfn is not None:
        return float(np.asarray(dfn(np.array([0.0])))[0])
    d = 1e-4
    x = np.array([-2 * d, -d, d, 2 * d])
    y = np.asarray(fn(x), dtype=float)
    return float((y[0] - 8 * y[1] + 8 * y[2] - y[3]) / (12 * d))


def ratio_divergence_check(phi, psi, n_max=6, dphi=None, dpsi=None, grid_step=0.25):
    """Decrements of ``psi/phi`` along x_n = -3**n.

    Both functions must be normalised to 1 at 0 with ``(psi' - phi')(0) > 0``.
    Checks that the ratio is strictly increasing on a grid of
    ``[-3**n_max, 0]`` and reports ``(psi/phi)(x_{n-1}) - (psi/phi)(x_n)``;
    the verdict holds when these are bounded below by a positive constant,
    so the ratio runs off to minus infinity.
    """
    p0 = float(np.asarray(phi(np.array([0.0])))[0])
    q0 = float(np.asarray(psi(np.array([0.0])))[0])
    if abs(p0 - 1.0) > 1e-12 or abs(q0 - 1.0) > 1e-12:
        raise InvalidArgumentError("phi and psi must be normalised to 1 at 0")
    slope = _deriv_at_zero(psi, dpsi) - _deriv_at_zero(phi, dphi)
    grid = np.arange(-(3.0**n_max), 0.0 + grid_step / 2, grid_step)
    ratio = np.asarray(psi(grid), dtype=float) / np.asarray(phi(grid), dtype=float)
    if abs(slope) < WRONSKIAN_DEGENERATE and np.allclose(ratio, 1.0, rtol=0, atol=1e-12):
        raise DegeneratePairError("psi coincides with phi")
    if not slope > 0:
        raise InvalidArgumentError("need (psi' - phi')(0) > 0")
    increasing = bool(np.all(np.diff(ratio) > 0))
    pts = np.array([-(3.0**n) for n in range(n_max + 1)])
    r = np.asarray(psi(pts), dtype=float) / np.asarray(phi(pts), dtype=float)
    dec = (r[:-1] - r[1:]).tolist()
    floor = min(dec) if dec else float("nan")
    return RatioCheck(increasing and floor > 0, increasing, pts.tolist(), r.tolist(), dec, floor)


# -- subsolution certificate -----------------------------------------------


@dataclass
class SubsolutionCertificate:
    lam: float
    eps: float
    interval: tuple
    step: float
    sup_b: float
    min_slack: float
    argmin: float
    psi_minus: float
    psi_plus: float
    passed: bool
    violation_x: Optional[float] = None


def subsolution_certificate(field, lam, interval, step=0.01):
    """Check ``-L psi <= lam psi`` for ``psi = exp(int (b - gamma))`` on a grid.

    Here ``L v = v'' - (b' + b**2) v`` and ``gamma = eps tanh(x)`` with
    ``eps = lam / (2 S + 2)``, ``S`` the sampled sup of ``|b|``.  Then
    ``L psi = (gamma**2 - 2 b gamma - gamma') psi`` and the slack
    ``gamma**2 - 2 b gamma - gamma' + lam`` must be non-negative; ``psi``
    must also fall below ``psi(0) = 1`` at both ends of the interval.
    A failed certificate is returned (``passed=False``), not raised.
    """
    if not lam > 0:
        raise InvalidArgumentError("lam must be positive")
    a, b_end = interval
    n = int(round((b_end - a) / step)) + 1
    x = np.linspace(a, b_end, n)
    bx = np.asarray(field.value(x), dtype=float)
    sup_b = float(np.max(np.abs(bx)))
    eps = lam / (2.0 * sup_b + 2.0)
    gamma = eps * np.tanh(x)
    dgamma = eps * (1.0 - np.tanh(x) ** 2)
    slack = gamma * gamma - 2.0 * bx * gamma - dgamma + lam
    i = int(np.argmin(slack))
    ends = np.array([a, b_end])
    log_cosh = np.logaddexp(ends, -ends) - math.log(2.0)
    log_psi = np.asarray(field.antiderivative(ends), dtype=float) - eps * log_cosh
    psi_minus, psi_plus = (float(v) for v in np.exp(log_psi))
    ok_slack = bool(slack[i] >= 0)
    passed = ok_slack and psi_minus < 1.0 and psi_plus < 1.0
    return SubsolutionCertificate(lam, eps, (a, b_end), step, sup_b, float(slack[i]), float(x[i]),
                                  psi_minus, psi_plus, passed, None if ok_slack else float(x[i]))


# -- classification ---------------------------------------------------------


@dataclass
class CriticalityReport:
    classification: str
    lambda1_estimate: Optional[float]
    integrals: DirectionalIntegrals
    liminf: Optional[LiminfCertificate] = None
    notes: List[str] = field(default_factory=list)
    operator: str = ""
    threshold: float = DIVERGENCE_THRESHOLD
    residual: float = 0.0

    def to_dict(self):
        def num(v):
            return v if v is None or math.isfinite(v) else None

        rows = [
            {"R": r, "forward": num(f), "backward": num(b)}
            for r, f, b in zip(self.integrals.radii, self.integrals.forward, self.integrals.backward)
        ]
        lim = None
        if self.liminf is not None:
            lim = {"k": self.liminf.k, "phi_plus": self.liminf.phi_plus, "phi_minus": self.liminf.phi_minus,
                   "holds": self.liminf.holds}
        return {
            "operator": self.operator,
            "classification": self.classification,
            "lambda1_estimate": self.lambda1_estimate,
            "threshold": self.threshold,
            "integrals": rows,
            "overflow": {"forward": self.integrals.forward_overflow_at,
                         "backward": self.integrals.backward_overflow_at},
            "liminf": lim,
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def _five_point_second(fn, x, d=1e-3):
    return (-fn(x - 2 * d) + 16 * fn(x - d) - 30 * fn(x) + 16 * fn(x + d) - fn(x + 2 * d)) / (12 * d * d)


def solution_residual(op, phi, x):
    """Relative residual ``|L phi| / phi`` at ``x``."""
    phi = _as_solution(phi)
    val = np.asarray(phi.value(x), dtype=float)
    d1 = np.asarray(phi.deriv(x)) if phi.deriv is not None else (
        (phi.value(x - 2e-3) - 8 * phi.value(x - 1e-3) + 8 * phi.value(x + 1e-3) - phi.value(x + 2e-3)) / 12e-3)
    d2 = np.asarray(phi.deriv2(x)) if phi.deriv2 is not None else _five_point_second(phi.value, x)
    return np.abs(op.apply(x, val, d1, d2)) / val


def convergence_radius(values, radii, increment=CONVERGENCE_INCREMENT):
    """First radius at which the relative increment drops below ``increment``."""
    for i in range(1, len(values)):
        prev, cur = values[i - 1], values[i]
        if math.isfinite(cur) and cur > 0 and (cur - prev) / cur < increment:
            return radii[i]
    return None


def divergence_radius(values, radii, threshold):
    for r, v in zip(radii, values):
        if not math.isfinite(v) or v > threshold:
            return r
    return None


_SPOT = np.linspace(-9.4, 9.4, 95) + 0.0137


def classify(op, phi, threshold=DIVERGENCE_THRESHOLD, radii=DEFAULT_RADII, lambda1_estimate=None,
             liminf=None, increment=CONVERGENCE_INCREMENT, auto_liminf=True):
    """Classify ``op`` from a positive solution of ``op phi = 0``.

    Parameters
    ----------
    op : Operator1D
        Self-adjoint operator.
    phi : PositiveSolution or callable
        Positive solution; it is spot-checked and normalised to phi(0) = 1.
    threshold : float
        Both directional integrals above this within ``radii`` means critical.
    radii : sequence of float
        Radius budget, increasing.
    lambda1_estimate : float, optional
        Principal eigenvalue estimate from a sweep; negative means
        supercritical.
    liminf : LiminfCertificate, optional
        A holding certificate upgrades the verdict to critical.
    increment : float
        Relative increment between consecutive radii below which a
        directional integral counts as converged.
    auto_liminf : bool
        Without an explicit ``liminf``, sample the normalised ``phi`` at
        +-3**k inside the radius budget and use that certificate.
    """
    phi = _as_solution(phi)
    res = float(np.max(solution_residual(op, phi, _SPOT)))
    if not res <= RESIDUAL_TOL:
        raise InvalidArgumentError(f"phi is not a solution: relative residual {res:.3e}")
    log0 = float(phi.log(np.array([0.0]))[0])
    normalised = PositiveSolution(
        lambda x: np.exp(phi.log(x) - log0), log_value=lambda x: phi.log(x) - log0, name=phi.name
    )
    ints = second_solution_integrals(normalised, radii, diffusion=op.diffusion)
    if liminf is None and auto_liminf:
        k_max = int(math.floor(math.log(ints.radii[-1], 3) + 1e-12))
        if k_max >= 0:
            liminf = liminf_certificate_for(normalised, k_max)
    notes = [f"phi residual {res:.3e}"]
    div_f = divergence_radius(ints.forward, ints.radii, threshold)
    div_b = divergence_radius(ints.backward, ints.radii, threshold)
    conv_f = convergence_radius(ints.forward, ints.radii, increment)
    conv_b = convergence_radius(ints.backward, ints.radii, increment)
    if lambda1_estimate is not None and lambda1_estimate < 0:
        verdict = SUPERCRITICAL
        notes.append("negative principal eigenvalue estimate")
    elif div_f is not None and div_b is not None:
        verdict = CRITICAL
        notes.append(f"integrals exceed {threshold:g} at R={div_f:g} (forward) and R={div_b:g} (backward)")
    elif liminf is not None and liminf.holds:
        verdict = CRITICAL
        notes.append("finite liminf of phi at both ends")
    elif conv_f is not None and conv_b is not None and div_f is None and div_b is None:
        verdict = SUBCRITICAL
        notes.append(f"integrals converge: increments below {increment:g} from R={conv_f:g} (forward) "
                     f"and R={conv_b:g} (backward)")
    elif (conv_f is not None and div_b is not None) or (conv_b is not None and div_f is not None):
        verdict = SUBCRITICAL
        notes.append("integral converges in one direction")
    else:
        verdict = INCONCLUSIVE
        notes.append("no verdict within the radius budget")
    if liminf is not None:
        notes.append(f"liminf certificate {'holds' if liminf.holds else 'fails'}")
    return CriticalityReport(verdict, lambda1_estimate, ints, liminf, notes, op.name, threshold, res)


def classify_preset(preset, threshold=DIVERGENCE_THRESHOLD, radii=DEFAULT_RADII, tol=1e-9, k_max=6):
    """Classify a named self-adjoint preset with its explicit ground state.

    Drift-form presets are classified through their self-adjoint form.
    ``limit-sa`` also gets the liminf certificate at +-3**k, k <= k_max.
    """
    preset = Preset.parse(preset)
    notes = []
    if preset is Preset.CE1_DRIFT:
        preset, notes = Preset.CE1_SA, ["classified through the gauge-equivalent ce1-sa"]
    elif preset is Preset.CE2_DRIFT:
        preset, notes = Preset.CE2_SA, ["classified through the gauge-equivalent ce2-sa"]
    op = make_operator(preset, tol=tol)
    phi = ground_state(preset, tol=tol)
    lim = liminf_certificate_for(phi, k_max) if preset is Preset.LIMIT_SA else None
    report = classify(op, phi, threshold=threshold, radii=radii, liminf=lim, auto_liminf=False)
    report.notes = notes + report.notes
    return report


def report_dict(report):
    """Plain-dict view of any dataclass evidence record."""
    return asdict(report)
