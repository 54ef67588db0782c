"""The limit-periodic drift built from the recursive step function sigma.

``sigma`` is -1 on [-1, 0) and 1 on [0, 1]; for every n >= 0 it is extended to
(3**n, 3**(n+1)] by ``sigma(x) = sigma(x - 2*3**n) + 1/(n+1)**2`` and to
[-3**(n+1), -3**n) by ``sigma(x) = sigma(x + 2*3**n) - 1/(n+1)**2``.  The
drift is ``b = sigma * sin(pi x)**4``.

A point ``x`` is handled as the exact pair ``(K, f)`` with ``K = floor(x)``
a Python integer and ``f = x - K`` in [0, 1).  The recursion only shifts
``K`` by integers, so sigma is evaluated exactly for any ``K``, including the
translated arguments ``x + 3**n`` that no longer fit in a double.  sigma is
constant on every open cell (K, K+1); at integers the half-open conventions
of the recursion are followed literally.

Cell sums obey ``S(K) = S(|K - 2*3**n|) + (K - 3**n)/(n+1)**2`` for
3**n < K <= 3**(n+1), where ``S(K)`` is the sum of sigma over the cells
0..K-1 (and ``S`` is even).  Hence ``B(K) = 3/8 * S(K)`` in O(log K).
"""

import math
import threading
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from .errors import ConvergenceError, InvalidArgumentError, TranslationRangeError
from .quadrature import ABS_TOL, adaptive_simpson

__all__ = [
    "SigmaField",
    "DriftField",
    "LimitField",
    "sigma_eval",
    "b_eval",
    "b_deriv_eval",
    "b_antiderivative",
    "translated_eval",
    "limit_field_eval",
    "mean_value",
    "almost_period_defect",
    "sin4_antiderivative",
    "SIN4_MEAN",
    "SIGMA_SUP",
    "MAX_TRANSLATION_POWER",
]

SIN4_MEAN = 0.375
SIGMA_SUP = 1.0 + math.pi**2 / 6.0
MAX_TRANSLATION_POWER = 40
# cells [-3**_TABLE_LEVEL, 3**_TABLE_LEVEL) are tabulated for vectorised use
_TABLE_LEVEL = 12


def _check_finite(x):
    if not math.isfinite(x):
        raise InvalidArgumentError(f"argument must be finite, got {x!r}")


def _floor_level(m):
    """Largest n with 3**n <= m (m >= 1)."""
    n = 0
    p = 3
    while p <= m:
        p *= 3
        n += 1
    return n


def _split(x):
    k = math.floor(x)
    return int(k), x - k


@lru_cache(maxsize=None)
def _sigma_split(k, on_integer):
    """sigma(k + f) for some f in [0, 1); only ``f == 0`` matters."""
    if k == -1:
        return -1.0
    if k == 0 or (k == 1 and on_integer):
        return 1.0
    if k > 0:
        n = _floor_level(k)
        if on_integer and 3**n == k:
            n -= 1
        return _sigma_split(k - 2 * 3**n, on_integer) + 1.0 / (n + 1) ** 2
    n = _floor_level(-k - 1)
    return _sigma_split(k + 2 * 3**n, on_integer) - 1.0 / (n + 1) ** 2


def sigma_cell(k):
    """Value of sigma on the open cell (k, k+1)."""
    return _sigma_split(int(k), False)


@lru_cache(maxsize=None)
def _cell_sum(k):
    if k < 0:
        return _cell_sum(-k)
    if k <= 1:
        return float(k)
    n = _floor_level(k - 1)
    return _cell_sum(abs(k - 2 * 3**n)) + (k - 3**n) / (n + 1) ** 2


def cell_sum(k):
    """Sum of sigma over the cells 0..k-1 (k >= 0); even in ``k``."""
    return _cell_sum(int(k))


@lru_cache(maxsize=None)
def cell_sum_exact(k):
    """Rational version of :func:`cell_sum`."""
    k = abs(int(k))
    if k <= 1:
        return Fraction(k)
    n = _floor_level(k - 1)
    return cell_sum_exact(abs(k - 2 * 3**n)) + Fraction(k - 3**n, (n + 1) ** 2)


def sin4_antiderivative(t):
    """Integral of sin(pi s)**4 from 0 to t."""
    return 3.0 * t / 8.0 - np.sin(2.0 * np.pi * t) / (4.0 * np.pi) + np.sin(4.0 * np.pi * t) / (32.0 * np.pi)


def _sin4(f):
    return np.sin(np.pi * f) ** 4


def _dsin4(f):
    s = np.sin(np.pi * f)
    return 4.0 * np.pi * s**3 * np.cos(np.pi * f)


class _Tables:
    """Lazily grown cell tables shared by the vectorised evaluators.

    Tables are only ever replaced whole under the lock, so readers always see
    a consistent (sigma, S) pair.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.level = -1
        self.sigma = None
        self.csum = None

    def ensure(self, level):
        if level <= self.level:
            return self.sigma, self.csum, self.level
        with self._lock:
            if level > self.level:
                self._build(level)
        return self.sigma, self.csum, self.level

    def _build(self, level):
        size = 3**level
        sig = np.zeros(2 * size)  # index k + size for cell k
        sig[size - 1] = -1.0
        sig[size] = 1.0
        for n in range(level):
            c = 1.0 / (n + 1) ** 2
            p = 3**n
            # positive cells k in [3**n, 3**(n+1)) from k - 2*3**n
            sig[size + p : size + 3 * p] = sig[size - p : size + p] + c
            # negative cells k in [-3**(n+1), -3**n - 1] from k + 2*3**n
            sig[size - 3 * p : size - p] = sig[size - p : size + p] - c
        csum = np.zeros(size + 1)  # S(K) for K in [0, 3**level]
        csum[1] = 1.0
        for n in range(level):
            p = 3**n
            k = np.arange(p + 1, 3 * p + 1)
            csum[k] = csum[np.abs(k - 2 * p)] + (k - p) / (n + 1) ** 2
        self.sigma, self.csum, self.level = sig, csum, level


_TABLES = _Tables()


def _level_for(kmax):
    level = 1
    while 3**level <= kmax + 1:
        level += 1
    return level


class SigmaField:
    """The step function sigma; call with a scalar or an array."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("sigma: non-finite argument")
        if x.ndim == 0:
            return sigma_eval(float(x))
        k = np.floor(x)
        on_int = k == x
        kmax = float(np.max(np.abs(k))) if k.size else 0.0
        out = np.empty_like(x)
        if kmax < 3**_TABLE_LEVEL:
            sig, _, level = _TABLES.ensure(_level_for(kmax))
            out[...] = sig[k.astype(np.int64) + 3**level]
        else:
            out.flat[:] = [sigma_cell(int(v)) for v in k.flat]
        if on_int.any():
            out[on_int] = [_sigma_split(int(v), True) for v in k[on_int]]
        return out

    @staticmethod
    def cell(k):
        return sigma_cell(k)

    @staticmethod
    def cells(kmin, kmax):
        """sigma on the cells kmin..kmax-1 as an array."""
        kmin, kmax = int(kmin), int(kmax)
        bound = max(abs(kmin), abs(kmax))
        if bound < 3**_TABLE_LEVEL:
            sig, _, level = _TABLES.ensure(_level_for(bound))
            off = 3**level
            return sig[kmin + off : kmax + off].copy()
        return np.array([sigma_cell(k) for k in range(kmin, kmax)])


class DriftField:
    """The drift b = sigma * sin(pi x)**4 with its derivative and antiderivative."""

    sigma = SigmaField()

    def __call__(self, x):
        return self.value(x)

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("drift: non-finite argument")
        k = np.floor(x)
        return x, k, x - k

    def value(self, x):
        x, k, f = self._parts(x)
        out = self.sigma(x) * _sin4(f)
        return float(out) if x.ndim == 0 else out

    def deriv(self, x):
        x, k, f = self._parts(x)
        out = self.sigma(x) * _dsin4(f)
        return float(out) if x.ndim == 0 else out

    def antiderivative(self, x):
        """B(x), the integral of b from 0 to x."""
        x, k, f = self._parts(x)
        if x.ndim == 0:
            return b_antiderivative(float(x))
        kmax = float(np.max(np.abs(k))) if k.size else 0.0
        if kmax + 1 < 3**_TABLE_LEVEL:
            sig, csum, level = _TABLES.ensure(_level_for(kmax + 1))
            ki = k.astype(np.int64)
            s = csum[np.abs(ki)]
            cell = sig[ki + 3**level]
        else:
            s = np.array([cell_sum(int(v)) for v in k.flat]).reshape(k.shape)
            cell = np.array([sigma_cell(int(v)) for v in k.flat]).reshape(k.shape)
        return SIN4_MEAN * s + cell * sin4_antiderivative(f)


def sigma_eval(x):
    """sigma(x), exact up to the rounding of the 1/(n+1)**2 increments.

    >>> sigma_eval(2.0), sigma_eval(4.0)
    (2.0, 0.25)
    """
    _check_finite(x)
    k, f = _split(x)
    return _sigma_split(k, f == 0.0)


def b_eval(x):
    """b(x) = sigma(x) sin(pi x)**4."""
    _check_finite(x)
    k, f = _split(x)
    return _sigma_split(k, f == 0.0) * math.sin(math.pi * f) ** 4


def b_deriv_eval(x):
    """b'(x) = sigma(x) 4 pi sin(pi x)**3 cos(pi x)."""
    _check_finite(x)
    k, f = _split(x)
    s = math.sin(math.pi * f)
    return _sigma_split(k, f == 0.0) * 4.0 * math.pi * s**3 * math.cos(math.pi * f)


def b_antiderivative(x):
    """B(x), the integral of b over [0, x], from the per-cell closed form.

    >>> b_antiderivative(3.0)
    1.125
    """
    _check_finite(x)
    k, f = _split(x)
    return SIN4_MEAN * cell_sum(k) + sigma_cell(k) * float(sin4_antiderivative(f))


def translated_eval(x, n):
    """b(x + 3**n), computed without rounding the shifted argument."""
    _check_finite(x)
    n = int(n)
    if n < 0:
        raise InvalidArgumentError("translation power must be a natural number")
    if n > MAX_TRANSLATION_POWER:
        raise TranslationRangeError(f"3**{n} is beyond the supported range (n <= {MAX_TRANSLATION_POWER})")
    k, f = _split(x)
    return _sigma_split(k + 3**n, f == 0.0) * math.sin(math.pi * f) ** 4


# -- the limit field -------------------------------------------------------

_LIMIT_WINDOW = 4
_LIMIT_AGREEMENT = 1e-12


def _regime_start(k):
    # beyond this n the shifted cell k + 3**n sits where the recursion acts as
    # a pure +/- 1/n**2 increment
    m = 2
    while 3 ** (m - 1) <= abs(k) + 2:
        m += 1
    return m


def _corrected(k, n):
    """Limit estimate from sigma(k + 3**n) with the analytic tail added."""
    a = sigma_cell(k + 3**n)
    tail = float(zeta(2.0, n + 1))
    if k < 0:
        return a + tail
    return a - 1.0 / (n + 1) ** 2 - tail


@lru_cache(maxsize=None)
def limit_sigma_detail(k):
    """Limit of sigma(x + 3**n) on the cell (k, k+1).

    Returns ``(value, (n_first, n_last), spread)`` where the tail-corrected
    estimates for ``n_first..n_last`` agree to ``spread``.  The shifted
    values themselves are exact; the Cauchy check guards the tail formula.
    """
    k = int(k)
    start = _regime_start(k)
    last = start + _LIMIT_WINDOW - 1
    if last > MAX_TRANSLATION_POWER:
        raise ConvergenceError(
            f"cell {k}: limit not reachable with n <= {MAX_TRANSLATION_POWER}",
            log=[("cell", k), ("needed_n", last)],
        )
    ests = [_corrected(k, n) for n in range(start, last + 1)]
    spread = max(ests) - min(ests)
    if spread > _LIMIT_AGREEMENT:
        raise ConvergenceError(
            f"cell {k}: translated values are not Cauchy (spread {spread:.3e})",
            log=list(zip(range(start, last + 1), ests)),
        )
    return ests[-1], (start, last), spread


class LimitField:
    """Uniform limit of b(x + 3**n) as n grows, with its derivative.

    The limit along the full sequence n = 0, 1, 2, ... is established per
    cell by checking that tail-corrected estimates from several consecutive
    n agree; ``tol`` is the accuracy every returned value is guaranteed to.
    """

    def __init__(self, tol=1e-9):
        if not tol > 0:
            raise InvalidArgumentError("tol must be positive")
        if tol < _LIMIT_AGREEMENT:
            raise ConvergenceError(f"tol={tol} is below the attainable accuracy {_LIMIT_AGREEMENT}")
        self.tol = tol
        self._prefix_cache = None

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("limit field: non-finite argument")
        k = np.floor(x).astype(np.int64)
        uniq, inv = np.unique(k, return_inverse=True)
        vals = np.array([limit_sigma_detail(int(u))[0] for u in uniq])
        out = vals[inv].reshape(x.shape)
        return float(out) if x.ndim == 0 else out

    def cells(self, kmin, kmax):
        return np.array([limit_sigma_detail(k)[0] for k in range(int(kmin), int(kmax))])

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.sigma(x) * _sin4(x - np.floor(x))
        return float(out) if x.ndim == 0 else out

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = self.sigma(x) * _dsin4(x - np.floor(x))
        return float(out) if x.ndim == 0 else out

    def antiderivative(self, x):
        """Integral of the limit field over [0, x], per-cell closed form."""
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        r = int(max(np.max(np.abs(k)), 0)) + 1 if k.size else 1
        if self._prefix_cache is None or self._prefix_cache[0] < r:
            sig = self.cells(-r, r)
            pos = np.concatenate([[0.0], np.cumsum(sig[r:])])
            neg = -np.concatenate([[0.0], np.cumsum(sig[:r][::-1])])
            self._prefix_cache = (r, sig, np.concatenate([neg[::-1][:-1], pos]))
        r0, sig, prefix = self._prefix_cache
        ki = k.astype(np.int64)
        out = SIN4_MEAN * prefix[ki + r0] + sig[ki + r0] * sin4_antiderivative(x - k)
        return float(out) if x.ndim == 0 else out


def limit_field_eval(x, tol):
    """Limit of b(x + 3**n), accurate to ``tol``."""
    _check_finite(x)
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    return LimitField(tol).value(x)


# -- averages and almost periods -------------------------------------------


def mean_value(field, x0, h, tol=ABS_TOL):
    """Average of ``field`` over [x0, x0 + h].

    Uses the closed-form antiderivative for :class:`DriftField` (and
    :class:`LimitField`); any other vectorised callable goes through adaptive
    Simpson with absolute tolerance ``tol``.
    """
    if h == 0:
        raise InvalidArgumentError("window length h must be non-zero")
    if isinstance(field, (DriftField, LimitField)):
        total = float(field.antiderivative(x0 + h)) - float(field.antiderivative(x0))
    else:
        total = adaptive_simpson(field, x0, x0 + h, tol=tol)
    return total / h


def almost_period_defect(field, p, window, step):
    """max |field(x + p) - field(x)| over a grid of ``window`` with spacing ``step``.

    A sampled lower bound for the sup-norm defect of the translation ``p``.
    """
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    a, b = window
    if not b > a:
        raise InvalidArgumentError("window must be non-degenerate")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    x = a + step * np.arange(n)
    return float(np.max(np.abs(np.asarray(field(x + p)) - np.asarray(field(x)))))
