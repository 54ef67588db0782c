import numpy as np
import pytest

from critlab.errors import InvalidArgumentError, UnsupportedOperatorError
from critlab.limit_periodic import DriftField, LimitField, translated_eval
from critlab.operators import (
    DRIFT_FORM,
    IDENTITY_GAUGE,
    Gauge,
    Operator1D,
    Preset,
    drift_gauge,
    gauge_transform,
    limit_operator,
    make_operator,
    translate_operator,
)
from critlab.spectral import solve_ivp

B = DriftField()
X = np.linspace(-30.3, 30.3, 4001)


def test_preset_parsing():
    assert Preset.parse("CE1-SA") is Preset.CE1_SA
    assert Preset.parse(Preset.LIMIT_SA) is Preset.LIMIT_SA
    with pytest.raises(InvalidArgumentError):
        Preset.parse("ce3")


def test_preset_coefficients():
    b, db = B.value(X), B.deriv(X)
    assert np.array_equal(make_operator("ce1-drift").drift(X), -2 * b)
    assert np.array_equal(make_operator("ce2-drift").drift(X), 2 * b)
    assert np.allclose(make_operator("ce1-sa").potential(X), db - b * b)
    assert np.allclose(make_operator("ce2-sa").potential(X), -(db + b * b))
    assert make_operator("ce1-drift").form == DRIFT_FORM
    assert make_operator("ce2-sa").self_adjoint


@pytest.mark.parametrize("source, sign, target", [("ce1-drift", -1.0, "ce1-sa"), ("ce2-drift", 1.0, "ce2-sa")])
def test_gauge_gives_self_adjoint_form(source, sign, target):
    op = gauge_transform(make_operator(source), drift_gauge(sign))
    assert op.self_adjoint
    assert np.allclose(op.potential(X), make_operator(target).potential(X), atol=1e-12, rtol=0)


def test_identity_gauge():
    lap = Operator1D(lambda x: np.zeros_like(x), name="laplacian")
    op = gauge_transform(lap, IDENTITY_GAUGE)
    assert op.self_adjoint and np.all(op.potential(X) == 0)


def test_partial_gauge_keeps_drift():
    # u'' + u' with G = x/4: drift 1/2, potential 1/16 - 1/4
    op = Operator1D(lambda x: np.zeros_like(x), drift=lambda x: np.ones_like(x), form=DRIFT_FORM)
    g = Gauge(lambda x: x / 4, lambda x: np.full_like(x, 0.25), lambda x: np.zeros_like(x))
    out = gauge_transform(op, g)
    assert out.form == DRIFT_FORM
    assert np.allclose(out.drift(X), 0.5) and np.allclose(out.potential(X), 1 / 16 - 1 / 4)


def test_gauge_round_trip_residual():
    # u solves the drift form; exp(-B) u must solve the self-adjoint form
    drift = make_operator("ce1-drift")
    sol = solve_ivp(drift, 0.0, 0.0, 1.0, 0.5, 10.0, 1e-3)
    sa = make_operator("ce1-sa")
    x = sol.x
    e = np.exp(-B.antiderivative(x))
    v = e * sol.u
    dv = e * (sol.du - B.value(x) * sol.u)
    # v'' from the drift equation u'' = 2 b u'
    d2u = 2 * B.value(x) * sol.du
    d2v = e * (d2u - 2 * B.value(x) * sol.du + (B.value(x) ** 2 - B.deriv(x)) * sol.u)
    assert np.max(np.abs(sa.apply(x, v, dv, d2v))) <= 1e-6


def test_self_adjoint_tag_is_enforced():
    op = Operator1D(lambda x: np.zeros_like(x), drift=lambda x: np.ones_like(x))
    with pytest.raises(InvalidArgumentError):
        op.coefficients(X)


def test_ellipticity_checked():
    op = Operator1D(lambda x: np.zeros_like(x), diffusion=lambda x: x, diffusion_deriv=lambda x: np.ones_like(x))
    with pytest.raises(InvalidArgumentError):
        op.coefficients(np.array([-1.0, 1.0]))
    with pytest.raises(UnsupportedOperatorError):
        gauge_transform(op, IDENTITY_GAUGE)


def test_translation():
    ce1 = make_operator("ce1-sa")
    assert np.array_equal(translate_operator(ce1, 0.0).potential(X), ce1.potential(X))
    for n in range(1, 8):
        assert translate_operator(make_operator("ce2-sa"), 3.0**n).potential(np.array([0.0]))[0] == 0.0
    periodic = Operator1D(lambda x: np.cos(2 * np.pi * x))
    assert np.allclose(translate_operator(periodic, 1.0).potential(X), periodic.potential(X), atol=1e-12)


def test_limit_operator():
    op = limit_operator(1e-9)
    assert op.name == "limit-sa"
    k = np.arange(-20.0, 21.0)
    assert np.max(np.abs(op.potential(k))) <= 1e-9
    lim = op.meta["limit_field"]
    assert op.potential(np.array([0.5]))[0] == pytest.approx(-(lim.deriv(0.5) + lim.value(0.5) ** 2))
    with pytest.raises(UnsupportedOperatorError):
        limit_operator(1e-9, preset="ce1-sa")


def test_limit_potential_against_large_translation():
    # at x = 0.5, b' vanishes; the gap to b(0.5 + 3**20)**2 is governed by the tail
    op = limit_operator(1e-9)
    direct = -(translated_eval(0.5, 20) ** 2)
    v = LimitField(1e-9).value(0.5)
    tail = abs(v - translated_eval(0.5, 20))
    assert abs(op.potential(np.array([0.5]))[0] - direct) <= tail * (2 * abs(v) + tail) + 2e-9


def test_limit_operator_tolerance_consistency(rng):
    x = rng.uniform(-50, 50, 100)
    a = limit_operator(1e-6).potential(x)
    b = limit_operator(1e-9).potential(x)
    assert np.max(np.abs(a - b)) <= 2e-6
