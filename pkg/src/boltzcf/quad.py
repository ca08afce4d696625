"""Deterministic quadrature for integrands with power-law endpoint behavior.

The workhorse is a graded Gauss-Legendre rule on (0, 1): the interval is split
at 1/2 and each half is pulled back through s = u^q (mirrored on the right),
with q chosen from the declared endpoint exponent so the transformed integrand
is smooth at the endpoint.  Error certification is by node doubling with a
fixed safety factor; results are bit-stable for fixed inputs.

A product rule on the unit sphere (Gauss-Legendre in the polar cosine times a
trapezoid in azimuth) exists solely to validate the reduction of the angular
collision average to a 1D integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, QuadratureError
from .kernel import AngularKernel, eval_B, eval_B_from_end, min_alpha0, singularity_orders

__all__ = [
    "EndpointBehavior",
    "QuadResult",
    "ReductionReport",
    "integrate_01",
    "kernel_moment",
    "fixed_rule_01",
    "reduced_fixed_rule",
    "sphere_integral",
    "verify_reduction",
]

SAFETY_FACTOR = 4.0
_N_START = 16
_N_MAX = 8192


@dataclass(frozen=True)
class EndpointBehavior:
    """Declared integrand behavior: ~ s^p0 at 0 and ~ (1-s)^p1 at 1.

    Declaring a more singular (smaller) exponent than the true one is safe; it
    only buys denser grading near that endpoint.  Exponents must stay > -1.
    """

    p0: float
    p1: float

    def __post_init__(self):
        if not (self.p0 > -1.0 and self.p1 > -1.0):
            raise DomainError(f"endpoint exponents must be > -1, got {self.p0}, {self.p1}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    nodes_used: int


def _grading_exponent(p: float) -> int:
    """Power q of the substitution s = u^q: transformed integrand ~ u^(q(1+p)-1)."""
    if p >= 3.0:
        return 1
    return min(40, max(1, math.ceil(4.0 / (1.0 + p))))


@lru_cache(maxsize=256)
def _graded_nodes(q0: int, q1: int, n: int):
    """Composite rule on (0,1) graded by u^q0 at 0 and u^q1 at 1 (read-only arrays).

    Nodes are clamped one ulp inside the interval: strong grading places them
    closer to the endpoints than float spacing resolves, and a node rounded
    onto an endpoint would poison power-law integrands.  The clamp displaces
    mass only where the graded weights are already negligible.
    """
    x, w = leggauss(n)
    u = 0.5 * (x + 1.0)
    uw = 0.5 * w
    s_left = np.maximum(0.5 * u**q0, 1e-310)
    w_left = uw * (0.5 * q0) * u ** (q0 - 1)
    s_right = np.minimum(1.0 - 0.5 * u**q1, 1.0 - 2.0**-53)
    w_right = uw * (0.5 * q1) * u ** (q1 - 1)
    s = np.concatenate([s_left, s_right[::-1]])
    wt = np.concatenate([w_left, w_right[::-1]])
    s.setflags(write=False)
    wt.setflags(write=False)
    return s, wt


def fixed_rule_01(behavior: EndpointBehavior, n: int):
    """The n-point-per-half graded rule as plain (nodes, weights) arrays."""
    return _graded_nodes(_grading_exponent(behavior.p0), _grading_exponent(behavior.p1), n)


def _apply(f, s, w) -> float:
    fv = np.asarray(f(s), dtype=float)
    contrib = w * fv
    if not np.all(np.isfinite(contrib)):
        raise QuadratureError("integrand produced non-finite values at quadrature nodes")
    return float(contrib.sum())


def integrate_01(f, behavior: EndpointBehavior, rel_tol: float, atol: float = 1e-14) -> QuadResult:
    """Integrate f over (0,1); f must accept an ndarray of interior nodes.

    Certified when SAFETY_FACTOR * |I(2n) - I(n)| <= rel_tol*|I(2n)| + atol.

    Integrands singular at s = 1 are limited by float spacing: mass within
    one ulp of 1 (of order eps^(1+p1)) is closed crudely through the clamped
    edge node, so requesting rel_tol much below ~1e-9 for p1 < 0 stalls.  The
    kernel-moment routines avoid this by working in endpoint distances.
    """
    if not (1e-14 < rel_tol < 1e-2):
        raise DomainError(f"rel_tol must lie in (1e-14, 1e-2), got {rel_tol}")
    q0 = _grading_exponent(behavior.p0)
    q1 = _grading_exponent(behavior.p1)
    prev = None
    n = _N_START
    while n <= _N_MAX:
        s, w = _graded_nodes(q0, q1, n)
        cur = _apply(f, s, w)
        if prev is not None:
            est = abs(cur - prev)
            if SAFETY_FACTOR * est <= rel_tol * abs(cur) + atol:
                return QuadResult(cur, est, 2 * n)
        prev = cur
        n *= 2
    raise QuadratureError(
        "node doubling did not converge; the declared endpoint behavior is "
        f"probably wrong or the integrand is not integrable ({behavior})"
    )


def _power_branch(form, end):
    """(near, far) exponents and evaluator of the uncapped power form in the
    endpoint distance u."""
    near, far = (form.nu_plus, form.nu_minus) if end > 0 else (form.nu_minus, form.nu_plus)

    def f(u):
        return form.amplitude * u ** (-1.0 - near) * (2.0 - u) ** (-1.0 - far)

    return near, far, f


def _bisect_cap_crossing(form, end, cap, lo, hi):
    """Root of B(u) = cap on a monotone branch, bisected in log B so the
    near-endpoint blowup never overflows."""
    near, far = (form.nu_plus, form.nu_minus) if end > 0 else (form.nu_minus, form.nu_plus)

    def log_excess(u):
        return (
            math.log(form.amplitude)
            - (1.0 + near) * math.log(u)
            - (1.0 + far) * math.log(2.0 - u)
            - math.log(cap)
        )

    sign_lo = 1.0 if log_excess(lo) > 0 else -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if log_excess(mid) * sign_lo > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _half_pieces(kernel: AngularKernel, end: int):
    """Partition (0, 1] in the endpoint distance u into pieces on which
    B(end*(1-u)) is smooth, as (a, b, evaluator, singular_at_zero) tuples."""
    from .kernel import EndpointPower, Tabulated

    form = kernel.form
    cap = kernel.cutoff_cap
    if isinstance(form, EndpointPower):
        nu_near, nu_far, power = _power_branch(form, end)
        if cap is None:
            return [(0.0, 1.0, power, True)]
        # B = min(power, cap); power -> inf as u -> 0, so the piece at 0 is
        # capped.  The power branch has at most one interior minimum, so at
        # most two crossings partition (0, 1].
        lo = 1e-300
        u_min = min(1.0, 2.0 * (1.0 + nu_near) / (2.0 + nu_near + nu_far))
        capped_eval = lambda u, c=cap: np.full_like(np.asarray(u, dtype=float), c)
        if power(u_min) >= cap:
            return [(0.0, 1.0, capped_eval, False)]
        u1 = _bisect_cap_crossing(form, end, cap, lo, u_min)
        pieces = [(0.0, u1, capped_eval, False)]
        if u_min < 1.0 and power(1.0) > cap:
            u2 = _bisect_cap_crossing(form, end, cap, u_min, 1.0)
            pieces.append((u1, u2, power, False))
            pieces.append((u2, 1.0, capped_eval, False))
        else:
            pieces.append((u1, 1.0, power, False))
        return pieces

    if isinstance(form, Tabulated):
        # split at sample nodes (piecewise-linear kinks) and at exact cap
        # crossings inside segments, so every piece is smooth
        def tab(u, e=end):
            out = np.interp(float(e) * (1.0 - np.asarray(u, dtype=float)), form.nodes, form.values)
            return np.minimum(out, cap) if cap is not None else out

        s_cuts = set(form.nodes)
        if cap is not None:
            for (s0, v0), (s1, v1) in zip(
                zip(form.nodes, form.values), zip(form.nodes[1:], form.values[1:])
            ):
                if min(v0, v1) < cap < max(v0, v1):
                    s_cuts.add(s0 + (cap - v0) * (s1 - s0) / (v1 - v0))
        cuts = sorted({1.0 - float(end) * s for s in s_cuts if 0.0 < 1.0 - float(end) * s < 1.0})
        edges = [0.0] + cuts + [1.0]
        return [(a, b, tab, False) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    const = form.amplitude if cap is None else min(form.amplitude, cap)
    return [(0.0, 1.0, lambda u, c=const: np.full_like(np.asarray(u, dtype=float), c), False)]


def _b_half_integral(kernel: AngularKernel, end: int, weight_u, vanish: float,
                     rel_tol: float, atol: float) -> QuadResult:
    """integral over u in (0,1) of B(end*(1-u)) * weight_u(u), piecewise over
    the kernel's smooth pieces; the weight vanishes like u^vanish at 0."""
    pieces = _half_pieces(kernel, end)
    value = est = 0.0
    nodes = 0
    for a, b, fB, singular in pieces:
        if a == 0.0:
            p0 = _piece_zero_exponent(kernel, end, vanish, singular)
            span = b

            def f(t, span=span, fB=fB):
                u = span * t
                return span * fB(u) * weight_u(u)

            behavior = EndpointBehavior(p0, 0.0)
        elif b / a > 20.0:
            # steep power tail: geometric map makes it a smooth exponential
            L = math.log(b / a)

            def f(t, a=a, L=L, fB=fB):
                u = a * np.exp(L * t)
                return L * u * fB(u) * weight_u(u)

            behavior = EndpointBehavior(0.0, 0.0)
        else:

            def f(t, a=a, b=b, fB=fB):
                u = a + (b - a) * t
                return (b - a) * fB(u) * weight_u(u)

            behavior = EndpointBehavior(0.0, 0.0)
        res = integrate_01(f, behavior, rel_tol, atol / len(pieces))
        value += res.value
        est += res.abs_error_estimate
        nodes += res.nodes_used
    return QuadResult(value, est, nodes)


def _piece_nodes(a, b, fB, singular_p0, n):
    """Transformed nodes/weights of one smooth piece, mirroring the adaptive
    path: graded at a raw zero edge, geometric across steep tails, else affine.
    Returns (u, jacobian*B(u))."""
    x, w = leggauss(n)
    t = 0.5 * (x + 1.0)
    tw = 0.5 * w
    if a == 0.0:
        q = _grading_exponent(singular_p0)
        u = b * t**q
        jac = b * q * t ** (q - 1) * tw
    elif b / a > 20.0:
        L = math.log(b / a)
        u = a * np.exp(L * t)
        jac = L * u * tw
    else:
        u = a + (b - a) * t
        jac = (b - a) * tw
    return u, jac * fB(u)


@lru_cache(maxsize=64)
def reduced_fixed_rule(kernel: AngularKernel, vanish0: float, vanish1: float, n: int):
    """Fixed rule for integrals over (0,1) of G(s)*h(s): arrays (s, 1-s, W) with
    sum W_k h(s_k) the approximation, n points per smooth kernel piece.

    The complement 1-s is returned separately because nodes crowd the
    endpoints far below float spacing around 1.  Weights W fold in the
    reduced kernel G = 4*pi*B and all jacobians.
    """
    s_parts, sc_parts, w_parts = [], [], []
    for end, vanish in ((+1, vanish0), (-1, vanish1)):
        for a, b, fB, singular in _half_pieces(kernel, end):
            p0 = _piece_zero_exponent(kernel, end, vanish, singular)
            u, wB = _piece_nodes(a, b, fB, p0, n)
            half_s = 0.5 * u
            if end > 0:
                s_parts.append(half_s)
                sc_parts.append(1.0 - half_s)
            else:
                s_parts.append(1.0 - half_s)
                sc_parts.append(half_s)
            w_parts.append((0.5 * 4.0 * math.pi) * wB)
    s = np.concatenate(s_parts)
    sc = np.concatenate(sc_parts)
    wt = np.concatenate(w_parts)
    for arr in (s, sc, wt):
        arr.setflags(write=False)
    return s, sc, wt


def _piece_zero_exponent(kernel, end, vanish, singular):
    if not singular:
        return vanish
    nu = singularity_orders(kernel)[0 if end > 0 else 1]
    p0 = vanish - 1.0 - nu
    if p0 <= -1.0:
        raise DomainError(f"kernel-weight endpoint exponent {p0} <= -1 is not integrable")
    return p0


def kernel_moment(kernel: AngularKernel, weight_from_end, vanish_plus: float,
                  vanish_minus: float, rel_tol: float, atol: float = 1e-14) -> QuadResult:
    """2*pi * integral over (-1,1) of B(s)*w(s), split at the midpoint.

    ``weight_from_end(u, end)`` must return w at s = end*(1-u) expressed in
    the endpoint distance u (so factors like (1 -+ s)/2 = u/2 stay exact);
    ``vanish_plus``/``vanish_minus`` declare the vanishing order of w at the
    respective endpoint.  Equals the reduced-form integral of G times the
    matching weight, since G(s) = 4*pi*B(1-2s) under s = (1 -+ s')/2.
    """
    left = _b_half_integral(
        kernel, -1, lambda u: weight_from_end(u, -1), vanish_minus, rel_tol, atol / 2
    )
    right = _b_half_integral(
        kernel, +1, lambda u: weight_from_end(u, +1), vanish_plus, rel_tol, atol / 2
    )
    return QuadResult(
        2.0 * math.pi * (left.value + right.value),
        2.0 * math.pi * (left.abs_error_estimate + right.abs_error_estimate),
        left.nodes_used + right.nodes_used,
    )


def _orthonormal_frame(direction):
    d = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > 1e-12:
        raise DomainError(f"direction must be a unit vector, |d| = {norm}")
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(d)))] = 1.0
    e1 = np.cross(d, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return d, e1, e2


def sphere_integral(g, direction, node_counts=(512, 16)) -> float:
    """Integrate g(direction . sigma) over the unit sphere by a product rule.

    The dot products are computed from genuine 3D geometry, so the result
    tests the rotation-invariance reduction instead of assuming it.
    """
    n_polar, n_az = node_counts
    d, e1, e2 = _orthonormal_frame(direction)
    mu, w = leggauss(n_polar)
    phis = 2.0 * math.pi * np.arange(n_az) / n_az
    cosp, sinp = np.cos(phis), np.sin(phis)
    total = 0.0
    for mu_k, w_k in zip(mu, w):
        sin_th = math.sqrt(max(0.0, 1.0 - mu_k * mu_k))
        sigma = mu_k * d[None, :] + sin_th * (cosp[:, None] * e1[None, :] + sinp[:, None] * e2[None, :])
        u = sigma @ d
        total += w_k * (2.0 * math.pi / n_az) * float(np.sum(g(u)))
    return total


def _compensated_bracket(u, alpha):
    return ((1.0 + u) / 2.0) ** (alpha / 2.0) + ((1.0 - u) / 2.0) ** (alpha / 2.0) - 1.0


@dataclass(frozen=True)
class ReductionReport:
    max_deviation: float
    worst_direction: tuple
    sphere_values: tuple
    reduced_value: float
    tol: float
    passed: bool


def verify_reduction(kernel: AngularKernel, alpha: float, directions, tol: float,
                     node_counts=(512, 16), rel_tol: float = 1e-12) -> ReductionReport:
    """Check that the spherical collision average is direction-independent and
    equals its 1D reduced form, for the compensated moment integrand.

    Raises AssertionError carrying the worst direction when the deviation
    exceeds tol.
    """
    if kernel.cutoff_cap is None and min_alpha0(kernel) > 0.0 and alpha <= min_alpha0(kernel):
        raise DomainError("uncapped singular kernel needs alpha above its admissibility infimum")
    half = alpha / 2.0

    def g(u):
        return eval_B(kernel, u) * _compensated_bracket(u, alpha)

    def bracket_from_end(u, end):
        return (u / 2.0) ** half + np.expm1(half * np.log1p(-u / 2.0))

    reduced = kernel_moment(kernel, bracket_from_end, half, half, rel_tol).value

    sphere_vals = []
    worst = (0.0, None)
    for direction in directions:
        val = sphere_integral(g, direction, node_counts)
        sphere_vals.append(val)
        dev = abs(val - reduced)
        if worst[1] is None or dev > worst[0]:
            worst = (dev, tuple(float(c) for c in direction))
    report = ReductionReport(
        max_deviation=worst[0],
        worst_direction=worst[1],
        sphere_values=tuple(sphere_vals),
        reduced_value=reduced,
        tol=tol,
        passed=worst[0] <= tol,
    )
    if not report.passed:
        raise AssertionError(
            f"sphere/1D reduction mismatch {worst[0]:.3e} > {tol:.3e} "
            f"at direction {worst[1]}"
        )
    return report
