import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzcf import kernel
from boltzcf.errors import DomainError

FOUR_PI = 4.0 * math.pi


def test_constant_eval():
    k = kernel.constant_kernel(1.0 / FOUR_PI)
    assert kernel.eval_B(k, 0.0) == 1.0 / FOUR_PI


def test_endpoint_power_midpoint_is_amplitude():
    k = kernel.endpoint_power_kernel(1.0, 0.25, 0.0)
    assert kernel.eval_B(k, 0.0) == 1.0


def test_cap_applies_near_endpoint():
    k = kernel.endpoint_power_kernel(1.0, 0.25, 0.0, cutoff_cap=10.0)
    # raw value (0.001)^(-5/4) * (1.999)^(-1) is far above the cap
    raw = 0.001 ** (-1.25) * 1.999**-1.0
    assert raw > 10.0
    assert kernel.eval_B(k, 0.999) == 10.0
    # below the cap the kernel is untouched
    assert kernel.eval_B(k, 0.0) == 1.0


def test_domain_checks():
    k = kernel.constant_kernel(1.0)
    with pytest.raises(DomainError):
        kernel.eval_B(k, 1.0)
    with pytest.raises(DomainError):
        kernel.eval_G(k, 0.0)
    with pytest.raises(DomainError):
        kernel.eval_G(k, 1.0)


def test_inadmissible_exponent_rejected_at_construction():
    with pytest.raises(DomainError):
        kernel.endpoint_power_kernel(1.0, 0.5, 0.0)
    with pytest.raises(DomainError):
        kernel.endpoint_power_kernel(1.0, 0.0, 0.7)
    with pytest.raises(DomainError):
        kernel.constant_kernel(-1.0)


def test_eval_G_is_literally_four_pi_B():
    k = kernel.endpoint_power_kernel(0.7, 0.2, 0.1)
    s = np.linspace(0.05, 0.95, 17)
    assert np.array_equal(kernel.eval_G(k, s), FOUR_PI * kernel.eval_B(k, 1.0 - 2.0 * s))


def test_eval_G_constant():
    c = 0.31
    k = kernel.constant_kernel(c)
    assert kernel.eval_G(k, 0.5) == FOUR_PI * c


def test_G_symmetry_swaps_exponents():
    k = kernel.endpoint_power_kernel(1.0, 0.2, 0.1)
    mirrored = kernel.endpoint_power_kernel(1.0, 0.1, 0.2)
    s = np.linspace(0.05, 0.95, 9)
    assert np.allclose(kernel.eval_G(k, s), kernel.eval_G(mirrored, 1.0 - s), rtol=1e-14)


def test_min_alpha0():
    assert kernel.min_alpha0(kernel.constant_kernel(2.0)) == 0.0
    assert kernel.min_alpha0(kernel.endpoint_power_kernel(1.0, 0.25, 0.0)) == 1.0
    assert kernel.min_alpha0(kernel.endpoint_power_kernel(1.0, 0.1, 0.0)) == pytest.approx(0.4)
    assert kernel.min_alpha0(kernel.tabulated_kernel([-0.5, 0.5], [1.0, 2.0])) == 0.0


def test_truncation_zeroes_min_alpha0():
    k = kernel.endpoint_power_kernel(1.0, 0.25, 0.1)
    assert kernel.min_alpha0(kernel.truncate(k, 5.0)) == 0.0


def test_truncate_composition_keeps_smallest_cap():
    k = kernel.constant_kernel(1.0)
    twice = kernel.truncate(kernel.truncate(k, 10.0), 3.0)
    assert twice == kernel.truncate(k, 3.0)
    # re-capping with a larger value is a no-op
    assert kernel.truncate(kernel.truncate(k, 3.0), 10.0) == kernel.truncate(k, 3.0)


def test_truncate_below_amplitude_is_pointwise_identical():
    k = kernel.constant_kernel(0.5)
    s = np.linspace(-0.99, 0.99, 101)
    assert np.array_equal(kernel.eval_B(kernel.truncate(k, 2.0), s), kernel.eval_B(k, s))


def test_eval_B_from_end_matches_direct():
    k = kernel.endpoint_power_kernel(1.3, 0.2, 0.05, cutoff_cap=40.0)
    u = np.geomspace(1e-6, 1.0, 40)
    direct_plus = kernel.eval_B(k, 1.0 - u)
    assert np.allclose(kernel.eval_B_from_end(k, u, +1), direct_plus, rtol=1e-12)
    direct_minus = kernel.eval_B(k, -(1.0 - u))
    assert np.allclose(kernel.eval_B_from_end(k, u, -1), direct_minus, rtol=1e-12)


def test_tabulated_interpolation_and_extension():
    k = kernel.tabulated_kernel([-0.5, 0.0, 0.5], [1.0, 2.0, 1.0])
    assert kernel.eval_B(k, -0.25) == pytest.approx(1.5)
    assert kernel.eval_B(k, 0.9) == 1.0  # held constant outside the samples
    with pytest.raises(DomainError):
        kernel.tabulated_kernel([0.5, -0.5], [1.0, 1.0])
    with pytest.raises(DomainError):
        kernel.tabulated_kernel([-0.5, 0.5], [1.0, -1.0])


def test_descriptor_roundtrip():
    kernels = [
        kernel.constant_kernel(0.25),
        kernel.endpoint_power_kernel(1.0, 0.25, 0.0, cutoff_cap=100.0),
        kernel.tabulated_kernel([-0.3, 0.1, 0.6], [0.5, 1.0, 0.2]),
    ]
    for k in kernels:
        assert kernel.from_descriptor(kernel.to_descriptor(k)) == k


@settings(max_examples=40, deadline=None)
@given(
    s=st.floats(-0.9999, 0.9999),
    nu_plus=st.floats(0.0, 0.49),
    cap=st.floats(0.1, 1e4),
)
def test_eval_bounded_by_cap(s, nu_plus, cap):
    k = kernel.endpoint_power_kernel(1.0, nu_plus, 0.0, cutoff_cap=cap)
    v = kernel.eval_B(k, s)
    assert 0.0 <= v <= cap
