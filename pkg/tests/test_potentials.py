import numpy as np
import pytest

from magrobin.geometry import Annulus, Disk, SphericalCap
from magrobin.potentials import (
    ClosedCurve,
    PotentialError,
    aharonov_bohm,
    as_expr,
    chart_circle,
    custom,
    flux,
    gauge_transform,
    make_potential,
    polar_circle,
    sup_norm_dalpha,
    uniform_field,
    zero,
)
from helpers import interior_points

DISK, ANN, CAP = Disk(1), Annulus(0.5, 1), SphericalCap(np.pi / 4)


def builtins():
    return [
        (DISK, zero()),
        (DISK, uniform_field(DISK, 1.0)),
        (DISK, uniform_field(DISK, -2.5)),
        (DISK, custom("0", "x")),
        (DISK, custom([(2, 1, 1.5)], [(0, 3, -0.5), (1, 0, 2.0)])),
        (ANN, uniform_field(ANN, 0.7)),
        (ANN, aharonov_bohm(ANN, 0.3)),
        (CAP, uniform_field(CAP, 0.2)),
        (DISK, gauge_transform(uniform_field(DISK, 1), "x*y + sin(x)")),
    ]


@pytest.mark.parametrize("geometry,alpha", builtins(), ids=lambda v: repr(v))
def test_closed_form_field_matches_numeric_curl(geometry, alpha):
    p = interior_points(geometry, 100, seed=1)
    assert np.allclose(alpha.field(p), alpha.curl_fd(p), atol=1e-6)


@pytest.mark.parametrize("geometry,alpha", builtins(), ids=lambda v: repr(v))
def test_jacobian_matches_finite_differences(geometry, alpha):
    p = interior_points(geometry, 30, seed=2)
    eps = 1e-6
    fd = np.stack([(alpha(p + eps * e) - alpha(p - eps * e)) / (2 * eps) for e in np.eye(2)], axis=1)
    assert np.allclose(alpha.jacobian(p), fd, atol=1e-7)


def test_sup_norm_examples():
    assert sup_norm_dalpha(aharonov_bohm(ANN, 0.4), ANN) == 0.0
    assert sup_norm_dalpha(uniform_field(DISK, 1), DISK) == pytest.approx(1.0)
    assert sup_norm_dalpha(custom("0", "x"), DISK) == pytest.approx(1.0)
    # the uniform field is b times the area form on curved and polar charts too
    assert sup_norm_dalpha(uniform_field(CAP, 0.2), CAP) == pytest.approx(0.2)
    assert sup_norm_dalpha(uniform_field(ANN, 3.0), ANN) == pytest.approx(3.0)


def test_uniform_field_disk_components():
    a = uniform_field(DISK, 1.0)
    assert np.allclose(a([[0.4, -0.2]]), [[0.1, 0.2]])


def test_sup_norm_gauge_invariant_exactly():
    a = uniform_field(DISK, 1.3)
    assert sup_norm_dalpha(gauge_transform(a, "x**2*y"), DISK) == sup_norm_dalpha(a, DISK)


def test_gauge_examples():
    g = gauge_transform(zero(), "x")
    assert np.allclose(g([[0.2, 0.3]]), [[1.0, 0.0]]) and g.b == 0
    g = gauge_transform(uniform_field(DISK, 1), "x*y")
    assert np.allclose(g.field(interior_points(DISK)), 1.0)


def test_flux_examples():
    c = polar_circle(0.75)
    assert flux(aharonov_bohm(ANN, 0.3), c).raw == pytest.approx(2 * np.pi * 0.3, abs=1e-12)
    assert flux(aharonov_bohm(ANN, 0.3), c).normalized == pytest.approx(0.3, abs=1e-12)
    assert aharonov_bohm(ANN, 0.3).describe()["params"]["raw_flux"] == pytest.approx(2 * np.pi * 0.3)
    assert flux(uniform_field(DISK, 1.7), chart_circle(1.0)).raw == pytest.approx(1.7 * np.pi, abs=1e-12)
    exact = custom("2*x*y", "x**2")  # d(x^2 y)
    assert abs(flux(exact, chart_circle(0.6, center=(0.1, -0.2))).raw) < 1e-12


def test_flux_reparametrization_invariant():
    ab = aharonov_bohm(ANN, 0.37)
    assert flux(ab, polar_circle(0.6)).raw == pytest.approx(flux(ab, polar_circle(0.6, warp=0.4)).raw, abs=1e-10)
    uf = uniform_field(DISK, 1.0)
    a = flux(uf, chart_circle(0.8)).raw
    b = flux(uf, chart_circle(0.8, phase=1.1)).raw
    assert a == pytest.approx(b, abs=1e-10)


def test_flux_gauge_invariant_on_contractible_curve():
    uf = uniform_field(DISK, 1.0)
    c = chart_circle(0.5, center=(0.2, 0.1))
    assert flux(uf, c).raw == pytest.approx(flux(gauge_transform(uf, "exp(x)*y"), c).raw, abs=1e-11)


def test_flux_rejects_open_curve():
    open_curve = ClosedCurve(lambda t: np.stack([t, 0 * t], -1), lambda t: np.stack([1 + 0 * t, 0 * t], -1))
    with pytest.raises(PotentialError):
        flux(zero(), open_curve)


def test_make_potential_specs():
    assert make_potential({"family": "UniformField", "b": 2}, DISK).params == {"b": 2.0}
    p = make_potential({"family": "Custom", "alpha1": "0", "alpha2": "sin(theta)**2"}, CAP)
    assert np.allclose(p.field([[0.3, 0.0]]), 2 * np.sin(0.3) * np.cos(0.3))
    with pytest.raises(PotentialError):
        make_potential({"family": "AharonovBohm", "beta": 1}, DISK)
    with pytest.raises(PotentialError):
        make_potential({"family": "Nope"}, DISK)


def test_expression_names_follow_chart():
    assert as_expr("theta", ("theta", "phi")) == as_expr("x1")
    assert as_expr("theta", ("r", "theta")) == as_expr("x2")
    with pytest.raises(PotentialError):
        as_expr("x + q")
