"""One-dimensional elliptic operators and the named counter-example instances.

An operator acts as ``L u = (A u')' + drift * u' + c * u``.  Coefficients are
kept as vectorised callables; nothing is sampled until a solver asks for it.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError, UnsupportedOperatorError
from .limit_periodic import DriftField, LimitField

DRIFT_FORM = "drift"
SELF_ADJOINT = "self-adjoint"
ELLIPTICITY_FLOOR = 1e-12


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Operator1D:
    """``L u = (A u')' + drift u' + potential u`` on the real line.

    ``diffusion=None`` means A is identically 1, which is what every routine
    in this package assumes unless it says otherwise.
    """

    potential: Callable
    drift: Callable = _zero
    diffusion: Optional[Callable] = None
    diffusion_deriv: Optional[Callable] = None
    form: str = SELF_ADJOINT
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.form not in (DRIFT_FORM, SELF_ADJOINT):
            raise InvalidArgumentError(f"unknown operator form {self.form!r}")
        if self.diffusion is not None and self.diffusion_deriv is None:
            raise InvalidArgumentError("a non-unit diffusion needs its derivative")

    @property
    def unit_diffusion(self):
        return self.diffusion is None

    @property
    def self_adjoint(self):
        return self.form == SELF_ADJOINT

    def coefficients(self, x):
        """Return ``(A, A', drift, c)`` sampled at ``x``, checking the invariants."""
        x = np.asarray(x, dtype=float)
        if self.unit_diffusion:
            a, da = np.ones_like(x), np.zeros_like(x)
        else:
            a = np.asarray(self.diffusion(x), dtype=float)
            da = np.asarray(self.diffusion_deriv(x), dtype=float)
            if np.any(a < ELLIPTICITY_FLOOR):
                raise InvalidArgumentError("diffusion is not uniformly positive on the queried points")
        d = np.asarray(self.drift(x), dtype=float)
        if self.self_adjoint and np.any(d != 0):
            raise InvalidArgumentError(f"{self.name or 'operator'} is tagged self-adjoint but has a drift")
        c = np.asarray(self.potential(x), dtype=float)
        return a, da, d, c

    def apply(self, x, u, du, d2u):
        """``L u`` at ``x`` given samples of u, u' and u''."""
        a, da, d, c = self.coefficients(x)
        return a * d2u + (da + d) * du + c * u


@dataclass(frozen=True)
class Gauge:
    """Exponent ``G`` of the substitution ``v = exp(G) u``, with ``G'`` and ``G''``."""

    value: Callable
    deriv: Callable
    deriv2: Callable


IDENTITY_GAUGE = Gauge(_zero, _zero, _zero)


def gauge_transform(op, gauge, name=""):
    """Conjugate ``op`` by ``v = exp(G) u``.

    For ``L u = u'' + d u' + c u`` and ``g = G'`` the conjugated operator is
    ``v'' + (d - 2g) v' + (c + g**2 - g' - d g) v``.  When ``g = d/2`` the
    first-order term vanishes and the potential is ``c - g' - g**2``; the
    result is then tagged self-adjoint.
    """
    if not op.unit_diffusion:
        raise UnsupportedOperatorError("gauge transforms are implemented for unit diffusion only")

    def drift(x):
        return np.asarray(op.drift(x), dtype=float) - 2.0 * np.asarray(gauge.deriv(x), dtype=float)

    def potential(x):
        g = np.asarray(gauge.deriv(x), dtype=float)
        dg = np.asarray(gauge.deriv2(x), dtype=float)
        d = np.asarray(op.drift(x), dtype=float)
        c = np.asarray(op.potential(x), dtype=float)
        return c + g * g - dg - d * g

    probe = np.linspace(-10.37, 10.37, 2003)
    eliminated = np.all(drift(probe) == 0)
    if eliminated:
        return Operator1D(potential, name=name or f"gauge({op.name})", meta={"gauge": gauge, "source": op})
    return Operator1D(potential, drift=drift, form=DRIFT_FORM, name=name or f"gauge({op.name})",
                      meta={"gauge": gauge, "source": op})


def translate_operator(op, s):
    """The operator with every coefficient evaluated at ``x + s``."""
    s = float(s)

    def shift(fn):
        if fn is None:
            return None
        return lambda x: fn(np.asarray(x, dtype=float) + s)

    return Operator1D(
        shift(op.potential),
        drift=shift(op.drift),
        diffusion=shift(op.diffusion),
        diffusion_deriv=shift(op.diffusion_deriv),
        form=op.form,
        name=f"{op.name}(.+{s:g})",
        meta={"shift": s, "source": op},
    )


class Preset(enum.Enum):
    CE1_DRIFT = "ce1-drift"
    CE1_SA = "ce1-sa"
    CE2_DRIFT = "ce2-drift"
    CE2_SA = "ce2-sa"
    LIMIT_SA = "limit-sa"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            names = ", ".join(p.value for p in cls)
            raise InvalidArgumentError(f"unknown preset {name!r}; expected one of {names}") from None


_DRIFT = DriftField()


def drift_gauge(sign):
    """Gauge ``G = sign * B`` built on the drift field."""
    return Gauge(
        lambda x: sign * _DRIFT.antiderivative(x),
        lambda x: sign * _DRIFT.value(x),
        lambda x: sign * _DRIFT.deriv(x),
    )


def make_operator(preset, tol=1e-9):
    """Build one of the named operators.

    ``tol`` only matters for ``limit-sa``, where it is the accuracy of the
    limit field.
    """
    preset = Preset.parse(preset)
    b = _DRIFT
    if preset is Preset.CE1_DRIFT:
        return Operator1D(_zero, drift=lambda x: -2.0 * b.value(x), form=DRIFT_FORM, name=preset.value)
    if preset is Preset.CE2_DRIFT:
        return Operator1D(_zero, drift=lambda x: 2.0 * b.value(x), form=DRIFT_FORM, name=preset.value)
    if preset is Preset.CE1_SA:
        return Operator1D(lambda x: b.deriv(x) - b.value(x) ** 2, name=preset.value)
    if preset is Preset.CE2_SA:
        return Operator1D(lambda x: -(b.deriv(x) + b.value(x) ** 2), name=preset.value)
    return limit_operator(tol)


def limit_operator(tol=1e-9, preset=Preset.CE2_SA):
    """``u'' - (b_inf' + b_inf**2) u`` from the translates b(. + 3**n)."""
    if Preset.parse(preset) is not Preset.CE2_SA:
        raise UnsupportedOperatorError("the limit operator is defined for ce2-sa")
    lim = LimitField(tol)
    return Operator1D(lambda x: -(lim.deriv(x) + lim.value(x) ** 2), name=Preset.LIMIT_SA.value,
                      meta={"limit_field": lim, "tol": tol})


def residual(op, x, u, du, d2u):
    """Pointwise ``L u`` for callables ``u, du, d2u``."""
    x = np.asarray(x, dtype=float)
    return op.apply(x, u(x), du(x), d2u(x))
