"""Pure-numpy evaluation backend.

Mirrors the compiled core operation for operation: quintic Hermite evaluation
of a radial profile in u = ln x, plus the two fused collision quadratures that
dominate solver runtime.  A profile is passed as the flat tuple

    (u_knots, values, d1, d2, x_min, x_max, alpha_tilde, kappa, kappa2, c3)

with d1/d2 the derivative tables from :mod:`.stencils` and (kappa, kappa2,
c3) the sub-grid power model 1 + k x^a + k2 x^2a + c3 x^3a.
"""

import numpy as np

NAME = "pure"


def _hermite5(u_knots, vals, d1, d2, uq):
    i = np.clip(np.searchsorted(u_knots, uq, side="right") - 1, 0, u_knots.size - 2)
    h = u_knots[i + 1] - u_knots[i]
    t = (uq - u_knots[i]) / h
    f0 = vals[i]
    f1 = vals[i + 1]
    m0 = d1[i] * h
    m1 = d1[i + 1] * h
    s0 = d2[i] * h * h
    s1 = d2[i + 1] * h * h
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    H0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5
    H1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5
    H2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
    H3 = 0.5 * t3 - t4 + 0.5 * t5
    H4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5
    H5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    return H0 * f0 + H1 * m0 + H2 * s0 + H3 * s1 + H4 * m1 + H5 * f1


def eval_profile(data, x):
    """Evaluate a radial profile at x >= 0 (array), clamped into [-1, 1].

    Regions: exact 1 at x = 0; the small-x power model below x_min; quintic
    Hermite in ln x on [x_min, x_max]; x marginally above x_max is treated as
    x_max (range policing happens in the caller).
    """
    u_knots, vals, d1, d2, x_min, x_max, alpha_tilde, kappa, kappa2, c3 = data
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape, dtype=float)
    model = (x > 0.0) & (x < x_min)
    if np.any(model):
        ya = x[model] ** alpha_tilde
        out[model] = 1.0 + ya * (kappa + ya * (kappa2 + ya * c3))
    interp = x >= x_min
    if np.any(interp):
        uq = np.log(np.minimum(x[interp], x_max))
        out[interp] = _hermite5(u_knots, vals, d1, d2, uq)
    return np.clip(out, -1.0, 1.0)


def collision_bracket(data, s_nodes, sc_nodes, gw, xs):
    """sum_q gw_q * [phi(s_q x) phi(sc_q x) - phi(x)] for every x in xs.

    sc holds 1 - s precomputed in a cancellation-free way (graded rules put
    nodes closer to 1 than float spacing allows to resolve by subtraction).
    """
    xs = np.asarray(xs, dtype=float)
    a = eval_profile(data, np.multiply.outer(s_nodes, xs))
    b = eval_profile(data, np.multiply.outer(sc_nodes, xs))
    phix = eval_profile(data, xs)
    return gw @ (a * b - phix[None, :])


def gain_bilinear(data_a, data_b, s_nodes, sc_nodes, gw, xs):
    """sum_q gw_q * phi_a(s_q x) phi_b(sc_q x) for every x in xs."""
    xs = np.asarray(xs, dtype=float)
    a = eval_profile(data_a, np.multiply.outer(s_nodes, xs))
    b = eval_profile(data_b, np.multiply.outer(sc_nodes, xs))
    return gw @ (a * b)
