"""Dirichlet principal eigenvalues, initial-value solves and Rayleigh quotients.

The Dirichlet problem for ``-L`` with ``L v = v'' + c v`` on [a, b] is
discretised by central second differences,

    -(v[i+1] - 2 v[i] + v[i-1]) / h**2 - c[i] v[i] = lam v[i],

with the boundary nodes eliminated.  The smallest eigenvalue of the
resulting symmetric tridiagonal matrix is found by Sturm-sequence bisection
and its eigenvector by inverse iteration.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded

from .errors import DiscretizationError, InvalidArgumentError, NumericalError, UnsupportedOperatorError

EIG_TOL = 1e-10
INVERSE_ITERATIONS = 50
# changes below this that stop shrinking are rounding noise (eps * |T| / gap)
NOISE_FLOOR = 1e-7
RESIDUAL_TOL = 1e-6
MONOTONE_SLACK = 1e-8
FINE_H = 0.005
COARSE_H = 0.02
FINE_RADIUS_LIMIT = 81
IVP_STEP = 1e-3
BLOWUP = 1e300


def max_threads():
    """Worker cap from ``CRITLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CRITLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    a: float
    b: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.b > self.a:
            raise InvalidArgumentError(f"degenerate interval [{self.a}, {self.b}]")
        if self.n_points < 3:
            raise InvalidArgumentError("a grid needs at least 3 points")

    @classmethod
    def from_step(cls, a, b, h):
        if not h > 0:
            raise InvalidArgumentError("step h must be positive")
        return cls(float(a), float(b), int(round((b - a) / h)) + 1)

    @classmethod
    def symmetric(cls, radius, h):
        return cls.from_step(-radius, radius, h)

    @property
    def h(self):
        return (self.b - self.a) / (self.n_points - 1)

    @property
    def nodes(self):
        return np.linspace(self.a, self.b, self.n_points)

    @property
    def interior(self):
        return self.nodes[1:-1]

    def refined(self):
        return Grid(self.a, self.b, 2 * self.n_points - 1)


@dataclass
class EigenResult:
    lam: float
    x: np.ndarray
    eigenfunction: np.ndarray
    residual: float
    positive: bool
    h: float
    interval: tuple
    iterations: int = 0
    bracket: tuple = ()


def _require_self_adjoint(op):
    if not op.self_adjoint:
        raise UnsupportedOperatorError(f"{op.name or 'operator'} is not self-adjoint; gauge-transform it first")
    if not op.unit_diffusion:
        raise UnsupportedOperatorError("only unit diffusion is supported")


def dirichlet_matrix(op, grid):
    """Diagonal and off-diagonal of the discretised ``-L``."""
    _require_self_adjoint(op)
    x = grid.interior
    _, _, _, c = op.coefficients(x)
    h2 = grid.h**2
    diag = 2.0 / h2 - c
    off = np.full(x.size - 1, -1.0 / h2)
    return diag, off


def sturm_count(diag, off_sq, lam):
    """Number of eigenvalues strictly below ``lam``.

    ``diag`` and ``off_sq`` are Python lists (diagonal and squared
    off-diagonal); counting the negative pivots of ``T - lam I`` in a plain
    loop is faster than numpy for this sequential recurrence.
    """
    count = 0
    q = diag[0] - lam
    if q < 0.0:
        count += 1
    for d, e2 in zip(diag[1:], off_sq):
        if q == 0.0:
            q = -1e-300
        q = d - lam - e2 / q
        if q < 0.0:
            count += 1
    return count


def smallest_eigenvalue(diag, off, tol=EIG_TOL):
    """Bisection bracket ``(lo, hi)`` of width <= tol around the smallest eigenvalue."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    n = diag.size
    absoff = np.abs(off)
    radius = np.zeros(n)
    radius[:-1] += absoff
    radius[1:] += absoff
    lo = float(np.min(diag - radius))
    # Rayleigh quotient of a positive bump is an upper bound
    v = np.sin(np.pi * (np.arange(n) + 1) / (n + 1))
    tv = diag * v
    tv[:-1] += off * v[1:]
    tv[1:] += off * v[:-1]
    hi = float(v @ tv / (v @ v))
    hi = min(hi, float(np.min(diag)))
    d_list = diag.tolist()
    e2_list = (off * off).tolist()
    if sturm_count(d_list, e2_list, hi) < 1:
        hi = hi + max(tol, 1e-12 * abs(hi))
    for _ in range(400):
        if hi - lo <= max(tol, 4 * np.finfo(float).eps * max(abs(lo), abs(hi))):
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(d_list, e2_list, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _inverse_iteration(diag, off, shift, start=None):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1, :] = diag - shift
    ab[2, :-1] = off
    v = np.ones(n) if start is None else np.asarray(start, dtype=float)
    v = v / np.max(np.abs(v))
    log = []
    for it in range(1, INVERSE_ITERATIONS + 1):
        w = solve_banded((1, 1), ab, v)
        w = w / w[np.argmax(np.abs(w))]
        change = float(np.max(np.abs(w - v)))
        log.append((it, change))
        v = w
        if change < EIG_TOL:
            return v, it, log
        if it >= 3 and change < NOISE_FLOOR and change >= 0.5 * log[-2][1]:
            log.append(("stalled-at-noise-floor", change))
            return v, it, log
    raise NumericalError("inverse iteration did not converge", log=log)


def dirichlet_principal_eigenvalue(op, grid, tol=EIG_TOL):
    """Smallest Dirichlet eigenvalue of ``-L`` on ``grid`` with its eigenvector.

    Parameters
    ----------
    op : Operator1D
        Self-adjoint operator with unit diffusion.
    grid : Grid
        Discretisation of the interval; boundary nodes carry the Dirichlet
        condition and are excluded from the unknowns.
    tol : float
        Absolute width of the final bisection bracket.

    Returns
    -------
    EigenResult
        Eigenvalue (bracket midpoint), eigenfunction on the interior nodes
        scaled to max 1, sup-norm residual of the discrete equation and the
        positivity flag.
    """
    diag, off = dirichlet_matrix(op, grid)
    lo, hi = smallest_eigenvalue(diag, off, tol)
    lam = 0.5 * (lo + hi)
    # shifting to the lower bracket end keeps T - shift positive definite
    vec, its, _ = _inverse_iteration(diag, off, lo)
    tv = diag * vec
    tv[:-1] += off * vec[1:]
    tv[1:] += off * vec[:-1]
    res = float(np.max(np.abs(tv - lam * vec)))
    positive = bool(np.all(vec > 0))
    if res > RESIDUAL_TOL:
        raise NumericalError(f"eigen-residual {res:.3e} exceeds {RESIDUAL_TOL}", log=[("residual", res)])
    return EigenResult(lam, grid.interior, vec, res, positive, grid.h, (grid.a, grid.b), its, (lo, hi))


def default_step(radius):
    return FINE_H if radius <= FINE_RADIUS_LIMIT else COARSE_H


def extrapolated_eigenvalue(op, grid, tol=EIG_TOL):
    """Richardson combination of the solves on ``grid`` and its halving.

    The scheme is second order, so ``(4 lam(h/2) - lam(h)) / 3`` removes the
    leading error term.  Returns ``(lam_extrapolated, coarse, fine)``.
    """
    coarse = dirichlet_principal_eigenvalue(op, grid, tol)
    fine = dirichlet_principal_eigenvalue(op, grid.refined(), tol)
    return (4.0 * fine.lam - coarse.lam) / 3.0, coarse, fine


@dataclass
class SweepPoint:
    radius: float
    lam: float
    residual: float
    h: float
    positive: bool
    raw: List[float] = field(default_factory=list)


@dataclass
class SweepResult:
    points: List[SweepPoint]
    extrapolated: bool

    @property
    def radii(self):
        return [p.radius for p in self.points]

    @property
    def lambdas(self):
        return [p.lam for p in self.points]

    def strictly_decreasing(self):
        lams = self.lambdas
        return all(b < a for a, b in zip(lams, lams[1:]))


def eigenvalue_sweep(op, radii, h=None, extrapolate=True, slack=MONOTONE_SLACK, tol=EIG_TOL):
    """Dirichlet principal eigenvalue on [-R, R] for each radius.

    ``h=None`` picks 0.005 up to R = 81 and 0.02 beyond.  With
    ``extrapolate`` each value is the Richardson combination of the solves at
    h and h/2, which removes the O(h**2) bias of the raw scheme; without it
    the raw central-difference eigenvalue is reported.

    Raises
    ------
    DiscretizationError
        If some value exceeds its predecessor by more than ``slack``; the
        sweep is attached as ``err.result``.
    """
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise InvalidArgumentError("radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidArgumentError("radii must be strictly increasing")
    if h is not None and not h > 0:
        raise InvalidArgumentError("h must be positive")
    _require_self_adjoint(op)

    def one(r):
        step = h if h is not None else default_step(r)
        grid = Grid.symmetric(r, step)
        if extrapolate:
            lam, coarse, fine = extrapolated_eigenvalue(op, grid, tol)
            return SweepPoint(r, lam, max(coarse.residual, fine.residual), step,
                              coarse.positive and fine.positive, [coarse.lam, fine.lam])
        res = dirichlet_principal_eigenvalue(op, grid, tol)
        return SweepPoint(r, res.lam, res.residual, step, res.positive, [res.lam])

    workers = min(max_threads(), len(radii))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, radii))
    else:
        points = [one(r) for r in radii]
    result = SweepResult(points, extrapolate)
    lams = result.lambdas
    bad = [(radii[i + 1], lams[i], lams[i + 1]) for i in range(len(lams) - 1) if lams[i + 1] > lams[i] + slack]
    if bad:
        raise DiscretizationError(
            "eigenvalues increase with the radius; use a smaller h", log=bad, result=result
        )
    return result


# -- initial-value problems -------------------------------------------------


@dataclass
class IVPSolution:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    blew_up: bool = False
    x_last: Optional[float] = None


def solve_ivp(op, lam, x0, u0, du0, x1, h=IVP_STEP):
    """Integrate ``(L + lam) u = 0`` from ``x0`` to ``x1`` with classical RK4.

    The step is ``h`` shrunk just enough to land on ``x1``.  If ``|u|``
    exceeds 1e300 the integration stops and the returned solution has
    ``blew_up=True`` with ``x_last`` the last node reached; growth of this
    kind is data for the criticality tests, not an error.
    """
    if not h > 0:
        raise InvalidArgumentError("step h must be positive")
    if x1 == x0:
        return IVPSolution(np.array([x0]), np.array([u0]), np.array([du0]), False, x0)
    n = max(1, int(math.ceil(abs(x1 - x0) / h - 1e-9)))
    step = (x1 - x0) / n
    # coefficients at nodes and midpoints: index 2i is node i, 2i+1 a midpoint
    xs = x0 + 0.5 * step * np.arange(2 * n + 1)
    a, da, d, c = op.coefficients(xs)
    # u'' = -((A' + d) u' + (c + lam) u) / A
    p = ((da + d) / a).tolist()
    q = ((c + lam) / a).tolist()
    u = np.empty(n + 1)
    v = np.empty(n + 1)
    u[0], v[0] = u0, du0
    ui, vi = float(u0), float(du0)
    half = 0.5 * step
    for i in range(n):
        j = 2 * i
        p0, q0, pm, qm, p1, q1 = p[j], q[j], p[j + 1], q[j + 1], p[j + 2], q[j + 2]
        k1u, k1v = vi, -(p0 * vi + q0 * ui)
        u2, v2 = ui + half * k1u, vi + half * k1v
        k2u, k2v = v2, -(pm * v2 + qm * u2)
        u3, v3 = ui + half * k2u, vi + half * k2v
        k3u, k3v = v3, -(pm * v3 + qm * u3)
        u4, v4 = ui + step * k3u, vi + step * k3v
        k4u, k4v = v4, -(p1 * v4 + q1 * u4)
        ui = ui + step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        vi = vi + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (abs(ui) <= BLOWUP and abs(vi) <= BLOWUP):
            return IVPSolution(xs[0 : 2 * i + 1 : 2], u[: i + 1], v[: i + 1], True, float(xs[2 * i]))
        u[i + 1], v[i + 1] = ui, vi
    return IVPSolution(xs[::2], u, v, False, float(xs[-1]))


# -- variational quotient ---------------------------------------------------


def _five_point(fn, x, delta=1e-3):
    return (fn(x - 2 * delta) - 8 * fn(x - delta) + 8 * fn(x + delta) - fn(x + 2 * delta)) / (12 * delta)


def rayleigh_quotient(op, test, interval, h, dtest=None):
    """``(int A test'**2 - c test**2) / int test**2`` by composite Simpson.

    ``test`` must vanish at both ends of ``interval``.  Without ``dtest`` the
    derivative is taken by a five-point central difference.
    """
    _require_self_adjoint(op)
    a, b = interval
    grid = Grid.from_step(a, b, h)
    n = grid.n_points if grid.n_points % 2 == 1 else grid.n_points + 1
    x = np.linspace(a, b, n)
    t = np.asarray(test(x), dtype=float)
    if abs(t[0]) > 1e-8 or abs(t[-1]) > 1e-8:
        raise InvalidArgumentError("test function must vanish at the interval ends")
    dt = np.asarray(dtest(x), dtype=float) if dtest is not None else _five_point(test, x)
    aa, _, _, c = op.coefficients(x)
    denom = simpson(t * t, x=x)
    if math.sqrt(abs(denom)) < 1e-12:
        raise InvalidArgumentError("test function is numerically zero")
    return float(simpson(aa * dt * dt - c * t * t, x=x) / denom)
