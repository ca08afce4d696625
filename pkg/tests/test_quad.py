import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzcf import kernel
from boltzcf.errors import DomainError, QuadratureError
from boltzcf.quad import (
    EndpointBehavior,
    QuadResult,
    integrate_01,
    kernel_moment,
    sphere_integral,
    verify_reduction,
)

FOUR_PI = 4.0 * math.pi


def test_inverse_sqrt():
    res = integrate_01(lambda s: s**-0.5, EndpointBehavior(-0.5, 0.0), 1e-12)
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert res.abs_error_estimate >= 0.0


def test_beta_three_halves():
    # Beta(3/2, 3/2) = Gamma(3/2)^2 / Gamma(3) = pi/8, the Gamma-function oracle
    res = integrate_01(lambda s: s**0.5 * (1 - s) ** 0.5, EndpointBehavior(0.5, 0.5), 1e-12)
    assert res.value == pytest.approx(math.pi / 8.0, abs=1e-13)


def test_exact_cancellation_at_first_moment():
    res = integrate_01(lambda s: s + (1 - s) - 1.0, EndpointBehavior(0.0, 0.0), 1e-12)
    assert abs(res.value) < 1e-15


@pytest.mark.parametrize("p", [-0.9, -0.5, 0.0, 0.5, 2.0])
def test_graded_power_exactness(p):
    res = integrate_01(lambda s: s**p, EndpointBehavior(p, 0.0), 1e-12)
    assert res.value == pytest.approx(1.0 / (p + 1.0), abs=1e-12)


def test_behavior_validation():
    with pytest.raises(DomainError):
        EndpointBehavior(-1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_01(lambda s: s, EndpointBehavior(0.0, 0.0), 1e-1)


def test_nonconvergence_signals():
    # declared behavior lies: the integrand is far more singular than claimed
    with pytest.raises(QuadratureError):
        integrate_01(lambda s: s**-0.97, EndpointBehavior(0.0, 0.0), 1e-10)


def test_estimate_not_inflated_by_doubling():
    # push well past convergence and compare reported estimates
    coarse = integrate_01(lambda s: np.exp(s), EndpointBehavior(0.0, 0.0), 1e-3)
    fine = integrate_01(lambda s: np.exp(s), EndpointBehavior(0.0, 0.0), 1e-12)
    assert fine.nodes_used >= coarse.nodes_used
    assert fine.abs_error_estimate <= 4.0 * coarse.abs_error_estimate + 1e-15
    assert isinstance(fine, QuadResult)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-3.0, 3.0), b=st.floats(-3.0, 3.0))
def test_linearity(a, b):
    beh = EndpointBehavior(0.0, 0.0)
    fa = integrate_01(lambda s: np.sin(3 * s), beh, 1e-11).value
    fb = integrate_01(lambda s: s**2, beh, 1e-11).value
    combined = integrate_01(lambda s: a * np.sin(3 * s) + b * s**2, beh, 1e-11).value
    assert combined == pytest.approx(a * fa + b * fb, abs=1e-9 * (1 + abs(a) + abs(b)))


def test_mirror_symmetry():
    # float spacing caps achievable accuracy for integrands singular at s=1
    # (mass within one ulp of 1 is ~eps^0.6 here), hence the 1e-8 tolerance
    f = lambda s: s**-0.4 * np.cos(s)
    left = integrate_01(f, EndpointBehavior(-0.4, 0.0), 1e-8).value
    right = integrate_01(lambda s: f(1 - s), EndpointBehavior(0.0, -0.4), 1e-8).value
    assert left == pytest.approx(right, abs=2e-8)


def test_sphere_surface_area():
    val = sphere_integral(lambda u: np.ones_like(u), np.array([0.0, 0.0, 1.0]))
    assert val == pytest.approx(4.0 * math.pi, rel=1e-13)


def test_sphere_odd_integrand_vanishes():
    val = sphere_integral(lambda u: u, np.array([3.0, 4.0, 0.0]) / 5.0)
    assert abs(val) < 1e-12


def test_sphere_reduces_to_1d():
    # compensated order-1 integrand; the 1D oracle comes from integrate_01
    def g(u):
        return ((1.0 + u) / 2.0) ** 0.5 + ((1.0 - u) / 2.0) ** 0.5 - 1.0

    direction = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    sphere = sphere_integral(g, direction)
    oneD = 2.0 * math.pi * 2.0 * integrate_01(
        lambda s: (s / 2.0) ** 0.5 + (1.0 - s / 2.0) ** 0.5 - 1.0, EndpointBehavior(0.5, 0.0), 1e-12
    ).value  # two mirrored halves of (-1,1) mapped onto (0,1)
    assert sphere == pytest.approx(oneD, abs=1e-7)


def test_sphere_direction_must_be_unit():
    with pytest.raises(DomainError):
        sphere_integral(lambda u: u, np.array([1.0, 1.0, 0.0]))


def test_kernel_moment_total_mass():
    k = kernel.constant_kernel(1.0 / FOUR_PI)
    res = kernel_moment(k, lambda u, end: np.ones_like(u), 0.0, 0.0, 1e-12)
    assert res.value == pytest.approx(1.0, abs=1e-13)


def test_verify_reduction_constant_kernel(unit_mass_kernel):
    rng = np.random.Generator(np.random.Philox(3))
    dirs = rng.standard_normal((5, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    report = verify_reduction(unit_mass_kernel, 1.0, dirs, 1e-6)
    assert report.passed
    assert report.max_deviation <= 1e-6
    assert report.reduced_value == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_verify_reduction_alpha_two_vanishes(singular_kernel):
    capped = kernel.truncate(singular_kernel, 100.0)
    report = verify_reduction(capped, 2.0, [np.array([0.0, 0.0, 1.0])], 1e-8)
    assert abs(report.reduced_value) < 1e-10
    assert abs(report.sphere_values[0]) < 1e-8


def test_verify_reduction_repeat_direction_deterministic(unit_mass_kernel):
    d = np.array([0.6, 0.0, 0.8])
    report = verify_reduction(unit_mass_kernel, 1.5, [d, d], 1e-6)
    assert report.sphere_values[0] == report.sphere_values[1]


def test_verify_reduction_failure_carries_direction(unit_mass_kernel):
    with pytest.raises(AssertionError) as err:
        verify_reduction(unit_mass_kernel, 1.0, [np.array([0.0, 0.0, 1.0])], 1e-18)
    assert "direction" in str(err.value)
