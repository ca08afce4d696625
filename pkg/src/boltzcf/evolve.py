"""Time evolution of radial profiles under the Fourier-side collision operator.

Two independent solvers share one quadrature engine:

* the Wild series for cutoff kernels normalized to unit mass, with the a
  priori geometric coefficient bound turned into a truncation rule
  (sub-stepping with semigroup restarts once the certified window closes);
* adaptive embedded Runge-Kutta stepping of the compensated operator, which
  never forms the divergent loss term and so handles singular kernels
  directly.

Also here: cutoff continuation (evolving under an increasing sequence of
capped kernels), self-similar rescaling of trajectories, and kernel time
normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _fast
from .charfn import (
    RadialCF,
    SmallXModel,
    check_positive_definite,
    constant_one,
    dist_alpha,
    fit_small_x_model,
)
from .errors import (
    AdmissibilityError,
    CoverageError,
    DomainError,
    StepRejectedError,
    ToleranceError,
)
from .kernel import (
    AngularKernel,
    Constant,
    EndpointPower,
    Tabulated,
    is_cutoff,
    min_alpha0,
    truncate,
)
from .quad import reduced_fixed_rule
from .spectra import SpectralConstants, compute_constants, gamma_2, gamma_alpha

__all__ = [
    "RadialSolver",
    "WildState",
    "Trajectory",
    "ContinuationReport",
    "sup_grid_diff",
    "grid_norm_to_one",
    "normalize_time",
    "rescale_to_selfsim",
    "cutoff_continuation",
]

_WILD_MAX_DEPTH = 160
_CLAMP_TOL = 1e-12

# Dormand-Prince 5(4) tableau (FSAL): propagate 5th order, embed 4th.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_ERR = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def sup_grid_diff(phi: RadialCF, psi: RadialCF) -> float:
    """Plain sup over grid nodes of |phi - psi| (no metric weight)."""
    return float(np.max(np.abs(phi.values - psi.values)))


def grid_norm_to_one(phi: RadialCF, alpha: float) -> float:
    """Grid part of ||phi - 1||_alpha, without the x -> 0 limit term."""
    xs = phi.grid.positive_nodes
    return float(np.max(np.abs(phi.values[1:] - 1.0) / (2.0 * xs) ** (alpha / 2.0)))


@dataclass(frozen=True)
class Trajectory:
    times: tuple
    states: tuple
    method: str
    error_estimates: tuple
    constants: SpectralConstants
    clamp_count: int = 0

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.error_estimates):
            raise DomainError("times, states and error estimates must align")
        if self.times[0] != 0.0:
            raise DomainError("trajectories start at t = 0 with the initial datum")


@dataclass(frozen=True)
class WildState:
    """Series coefficients of the explicit cutoff solution, plus the data the
    geometric tail bound is made of."""

    coefficients: tuple
    kernel: AngularKernel
    alpha: float
    norm0: float
    gamma_ratio: float  # gain moment over (normalized) mass, >= 1

    @property
    def depth(self) -> int:
        return len(self.coefficients) - 1


@dataclass(frozen=True)
class ContinuationReport:
    caps: tuple
    successive_diffs: tuple
    final_vs_direct: float
    cauchy_decreasing: bool
    capped_finals: tuple
    direct_final: object


def _raw_profile_data(grid, values_full, alpha_tilde):
    """Backend tuple for intermediate stage vectors (no RadialCF validation;
    clamping happens inside the evaluator)."""
    model = fit_small_x_model(grid, values_full, alpha_tilde)
    d1, d2 = _fast.derivative_tables(values_full[1:], grid.log_step)
    x0 = grid.x_min
    at = alpha_tilde
    c3 = (
        values_full[1] - (1.0 + model.kappa * x0**at + model.kappa2 * x0 ** (2 * at))
    ) / x0 ** (3 * at)
    return (
        np.log(grid.positive_nodes),
        np.asarray(values_full[1:], dtype=float),
        d1,
        d2,
        grid.x_min,
        grid.x_max,
        at,
        model.kappa,
        model.kappa2,
        c3,
    )


def _finish_state(grid, values_full, alpha_tilde, provenance, clamp_counter=None):
    """Clamp-and-pin a raw value vector into a RadialCF, counting real clamps."""
    v = np.asarray(values_full, dtype=float).copy()
    v[0] = 1.0
    overshoot = np.abs(v) - 1.0
    n_clamps = int(np.count_nonzero(overshoot > _CLAMP_TOL))
    if clamp_counter is not None and n_clamps:
        clamp_counter[0] += n_clamps
    np.clip(v, -1.0, 1.0, out=v)
    return RadialCF(grid, v, fit_small_x_model(grid, v, alpha_tilde), provenance)


class RadialSolver:
    """Evolution engine for one (kernel, alpha) pair on one grid.

    The admissibility of data is pinned at construction: the small-x exponent
    of every datum must exceed a quarter of the kernel's admissibility
    infimum, which is exactly what keeps the compensated collision integrand
    integrable.
    """

    def __init__(self, kernel: AngularKernel, alpha: float, quad_rel: float = 1e-10,
                 rhs_abs_tol: float = 1e-9):
        if not (0.0 < alpha <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
        a0 = min_alpha0(kernel)
        if a0 > 0.0 and alpha <= a0:
            raise AdmissibilityError(f"alpha = {alpha} needs to exceed {a0} for this kernel")
        self.kernel = kernel
        self.alpha = float(alpha)
        self.quad_rel = float(quad_rel)
        self.rhs_abs_tol = float(rhs_abs_tol)
        self.constants = compute_constants(kernel, alpha, quad_rel)
        self._bracket_rule = None
        self._gain_rule = None

    # -- quadrature rules -------------------------------------------------

    def _check_datum(self, phi: RadialCF):
        a0 = min_alpha0(self.kernel)
        if a0 > 0.0 and 4.0 * phi.small_x.alpha_tilde <= a0:
            raise AdmissibilityError(
                f"datum small-x exponent {phi.small_x.alpha_tilde} too low for this kernel"
            )

    def _bracket_vanish(self, phi: RadialCF) -> float:
        return min(phi.small_x.alpha_tilde, 1.0)

    def _calibrate(self, build_rhs, target_abs):
        """Smallest rule meeting the absolute target, or the noise floor of the
        C^1 interpolant if that lies above it (doubling diffs stop shrinking
        geometrically there: more nodes only resample the same roughness)."""
        n = 32
        prev = None
        prev_diff = math.inf
        while n <= 4096:
            cur = build_rhs(n)
            if prev is not None:
                diff = float(np.max(np.abs(cur - prev)))
                if diff <= target_abs or (n >= 256 and diff > 0.4 * prev_diff):
                    return n
                prev_diff = diff
            prev = cur
            n *= 2
        raise ToleranceError("collision quadrature failed to settle while calibrating")

    def bracket_rule(self, phi: RadialCF):
        """Fixed compensated-collision rule, calibrated once on the first datum
        by node doubling against 0.1x the step tolerance."""
        if self._bracket_rule is None:
            v = self._bracket_vanish(phi)
            data = phi.interp_data()
            xs = phi.grid.positive_nodes

            def rhs(n):
                s, sc, w = reduced_fixed_rule(self.kernel, v, v, n)
                return _fast.collision_bracket(data, s, sc, w, xs)

            n = self._calibrate(rhs, 0.1 * self.rhs_abs_tol)
            self._bracket_rule = reduced_fixed_rule(self.kernel, v, v, n)
        return self._bracket_rule

    def gain_rule(self, phi: RadialCF):
        if not is_cutoff(self.kernel):
            raise AdmissibilityError("the gain operator alone needs a cutoff kernel")
        if self._gain_rule is None:
            data = phi.interp_data()
            xs = phi.grid.positive_nodes

            def rhs(n):
                s, sc, w = reduced_fixed_rule(self.kernel, 0.0, 0.0, n)
                return _fast.gain_bilinear(data, data, s, sc, w, xs)

            n = self._calibrate(rhs, 0.1 * self.rhs_abs_tol)
            self._gain_rule = reduced_fixed_rule(self.kernel, 0.0, 0.0, n)
        return self._gain_rule

    # -- pointwise operators ----------------------------------------------

    def gain_bilinear(self, phi: RadialCF, psi: RadialCF, x, rel_tol: float = None):
        """Gain integral int G(s) phi(sx) psi((1-s)x) ds (cutoff kernels)."""
        if not is_cutoff(self.kernel):
            raise AdmissibilityError("the gain operator alone needs a cutoff kernel")
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = self._adaptive(
            lambda n: _fast.gain_bilinear(
                phi.interp_data(), psi.interp_data(), *reduced_fixed_rule(self.kernel, 0.0, 0.0, n), xs
            ),
            rel_tol,
        )
        return out if np.ndim(x) else float(out[0])

    def collision_compensated(self, phi: RadialCF, x, rel_tol: float = None):
        """Compensated collision integral int G(s) [phi(sx)phi((1-s)x) - phi(x)] ds,
        finite for admissible (kernel, datum) pairs even without cutoff."""
        self._check_datum(phi)
        v = self._bracket_vanish(phi)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = self._adaptive(
            lambda n: _fast.collision_bracket(
                phi.interp_data(), *reduced_fixed_rule(self.kernel, v, v, n), xs
            ),
            rel_tol,
        )
        return out if np.ndim(x) else float(out[0])

    def _adaptive(self, apply_rule, rel_tol):
        """Node doubling on the fixed rule; accepts at the interpolant's own
        noise floor when that lies above the requested tolerance (the floor is
        representation error of the profile, not quadrature error)."""
        rel = self.quad_rel if rel_tol is None else float(rel_tol)
        prev = None
        prev_err = math.inf
        n = 32
        while n <= 4096:
            cur = apply_rule(n)
            if prev is not None:
                err = float(np.max(np.abs(cur - prev)))
                if 4.0 * err <= rel * max(1.0, float(np.max(np.abs(cur)))) + 1e-14:
                    return cur
                if n >= 512 and err > 0.4 * prev_err:
                    return cur
                prev_err = err
            prev = cur
            n *= 2
        raise ToleranceError("pointwise collision quadrature did not converge")

    # -- Wild series --------------------------------------------------------

    def _require_normalized_cutoff(self):
        g2 = gamma_2(self.kernel, self.quad_rel)
        if not math.isfinite(g2):
            raise AdmissibilityError("the Wild series needs a cutoff kernel")
        if abs(g2 - 1.0) > 1e-8:
            raise DomainError(
                f"the Wild series needs unit kernel mass (gamma_2 = {g2}); "
                "rescale with normalize_time first"
            )

    def wild_coefficients(self, phi0: RadialCF, depth: int) -> WildState:
        """Series coefficients up to the given depth, with the geometric bound
        on their distance to 1 asserted on the grid."""
        self._require_normalized_cutoff()
        self._check_datum(phi0)
        if depth < 0:
            raise DomainError("depth must be >= 0")
        norm0 = dist_alpha(phi0, constant_one(phi0.grid), self.alpha).value
        if not math.isfinite(norm0):
            raise AdmissibilityError("datum is not within finite distance of 1 at this order")
        ga = gamma_alpha(self.kernel, self.alpha, self.quad_rel)
        s, sc, w = self.gain_rule(phi0)
        xs = phi0.grid.positive_nodes
        at = phi0.small_x.alpha_tilde

        coeffs = [phi0]
        for n in range(1, depth + 1):
            acc = np.zeros(xs.size)
            for j in range(n):
                acc += _fast.gain_bilinear(
                    coeffs[j].interp_data(), coeffs[n - 1 - j].interp_data(), s, sc, w, xs
                )
            values = np.concatenate([[1.0], acc / n])
            cf = _finish_state(phi0.grid, values, at, "evolved")
            bound = ga**n * norm0
            seen = grid_norm_to_one(cf, self.alpha)
            if seen > bound * (1.0 + 1e-6) + 1e-9:
                raise RuntimeError(
                    f"series coefficient {n} violates its geometric bound "
                    f"({seen:.6e} > {bound:.6e}): quadrature or interpolation inaccuracy"
                )
            coeffs.append(cf)
        return WildState(tuple(coeffs), self.kernel, self.alpha, norm0, ga)

    def _wild_depth_for(self, t_step, tol_step, norm0, ga, x_max):
        r = 1.0 - math.exp(-t_step)
        q = ga * r
        if q >= 1.0:
            return None
        sup_scale = min(norm0 * (2.0 * x_max) ** (self.alpha / 2.0), 2.0)
        for n in range(1, _WILD_MAX_DEPTH + 1):
            tail = min(
                math.exp(-t_step) * norm0 * q ** (n + 1) / (1.0 - q) * (2.0 * x_max) ** (self.alpha / 2.0),
                sup_scale * r ** (n + 1),
            )
            if tail <= tol_step:
                return n, tail
        return None

    def wild_evaluate(self, phi0: RadialCF, t: float, tol: float = 1e-8):
        """Explicit series solution at time t (sup-grid tail certified <= tol).

        The certified per-step window is where the gain moment times the
        series weight stays below 1; longer horizons restart the series from
        the reached state.
        """
        if t < 0.0:
            raise DomainError("time must be >= 0")
        self._require_normalized_cutoff()
        if t == 0.0:
            return phi0, 0.0
        ga = gamma_alpha(self.kernel, self.alpha, self.quad_rel)
        # keep the per-step series weight moderate: q = ga*(1-e^-t) ~ 0.4
        t_window = -math.log(max(1.0 - 0.4 / ga, 1e-12))
        n_steps = max(1, math.ceil(t / t_window))
        t_step = t / n_steps
        tol_step = tol / n_steps
        cur = phi0
        tail_total = 0.0
        for _ in range(n_steps):
            norm_cur = dist_alpha(cur, constant_one(cur.grid), self.alpha).value
            picked = self._wild_depth_for(t_step, tol_step, norm_cur, ga, cur.grid.x_max)
            if picked is None:
                raise ToleranceError(
                    f"certified series depth not reachable below {_WILD_MAX_DEPTH} "
                    f"for step {t_step} at tolerance {tol_step}"
                )
            depth, tail = picked
            state = self.wild_coefficients(cur, depth)
            r = 1.0 - math.exp(-t_step)
            weights = math.exp(-t_step) * r ** np.arange(depth + 1)
            stacked = np.stack([c.values for c in state.coefficients], axis=0)
            values = weights @ stacked + r ** (depth + 1)
            cur = _finish_state(cur.grid, values, phi0.small_x.alpha_tilde, "evolved")
            tail_total += tail
        return cur, tail_total

    # -- embedded Runge-Kutta ----------------------------------------------

    def _rhs(self, grid, values_full, alpha_tilde, rule):
        s, sc, w = rule
        data = _raw_profile_data(grid, values_full, alpha_tilde)
        rhs_pos = _fast.collision_bracket(data, s, sc, w, grid.positive_nodes)
        return np.concatenate([[0.0], rhs_pos])

    def _attempt_step(self, grid, y, alpha_tilde, dt, tol, rule, k1=None):
        stages = [k1 if k1 is not None else self._rhs(grid, y, alpha_tilde, rule)]
        for i in range(1, 7):
            yi = y + dt * sum(a * k for a, k in zip(_DP_A[i], stages))
            stages.append(self._rhs(grid, yi, alpha_tilde, rule))
        y_new = y + dt * sum(a * k for a, k in zip(_DP_A[6], stages[:6]))
        # FSAL: stage 7 is the rhs at y_new
        err_vec = dt * sum(e * k for e, k in zip(_DP_ERR, stages))
        scale = 0.01 * tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        return y_new, stages[6], err

    def step_rk(self, phi: RadialCF, dt: float, tol: float = 1e-8) -> RadialCF:
        """One embedded step of size exactly dt; raises StepRejectedError when
        the error estimate exceeds the tolerance."""
        self._check_datum(phi)
        if dt < 0.0:
            raise DomainError("dt must be >= 0")
        if dt == 0.0:
            return phi
        rule = self.bracket_rule(phi)
        at = phi.small_x.alpha_tilde
        y_new, _, err = self._attempt_step(phi.grid, phi.values, at, dt, tol, rule)
        if err > 1.0:
            raise StepRejectedError(f"embedded error ratio {err:.3g} > 1 for dt = {dt}", err)
        return _finish_state(phi.grid, y_new, at, "evolved")

    def _integrate_rk(self, phi0, t_span, tol, clamp_counter):
        """March from t_span[0] to t_span[1]; returns (state, accumulated error)."""
        t, t_end = t_span
        grid = phi0.grid
        at = phi0.small_x.alpha_tilde
        rule = self.bracket_rule(phi0)
        y = np.array(phi0.values)
        k1 = None
        acc_err = 0.0
        dt = min(0.05, t_end - t) if t_end > t else 0.0
        while t < t_end:
            dt = min(dt, t_end - t)
            if dt < 1e-12:
                raise ToleranceError(f"step size underflow at t = {t}")
            y_new, k_last, err = self._attempt_step(grid, y, at, dt, tol, rule, k1)
            if err <= 1.0:
                t += dt
                overshoot = np.abs(y_new) - 1.0
                n_cl = int(np.count_nonzero(overshoot > _CLAMP_TOL))
                if n_cl:
                    clamp_counter[0] += n_cl
                    np.clip(y_new, -1.0, 1.0, out=y_new)
                    y_new[0] = 1.0
                    k1 = None  # stale after clamping
                else:
                    k1 = k_last
                y = y_new
                acc_err += err * tol
            else:
                k1 = None if k1 is None else k1  # keep k1: same y
            dt *= min(5.0, max(0.2, 0.9 * err ** (-0.2)))
        return _finish_state(grid, y, at, "evolved", clamp_counter), acc_err

    # -- trajectory driver ---------------------------------------------------

    def evolve(self, phi0: RadialCF, T: float, method: str, sample_times,
               tol: float = 1e-8, psd_cadence: int = 1, psd_seed: int = 0) -> Trajectory:
        """Trajectory from phi0 sampled at the requested times.

        Every sampled state is spot-checked for positive definiteness at the
        configured cadence; a failure aborts, because it means the numerics
        left the space of characteristic functions.
        """
        if method not in ("wild", "rk"):
            raise DomainError(f"unknown method {method!r}")
        samples = sorted(set(float(t) for t in sample_times) | {0.0})
        if samples[-1] > T + 1e-12:
            raise DomainError("sample times must lie within [0, T]")
        self._check_datum(phi0)
        clamp_counter = [0]
        times = [0.0]
        states = [phi0]
        errors = [0.0]
        cur = phi0
        acc = 0.0
        for t_prev, t_next in zip(samples[:-1], samples[1:]):
            span = t_next - t_prev
            if method == "wild":
                cur, tail = self.wild_evaluate(cur, span, tol * span / max(T, span))
                acc += tail
            else:
                cur, err = self._integrate_rk(cur, (t_prev, t_next), tol, clamp_counter)
                acc += err
            times.append(t_next)
            states.append(cur)
            errors.append(acc)
        for idx, state in enumerate(states):
            if psd_cadence and idx % psd_cadence == 0:
                rep = check_positive_definite(state, 48, 2, tol=1e-7, seed=psd_seed + idx)
                if not rep.passed:
                    raise RuntimeError(
                        f"state at t = {times[idx]} failed the positive-definiteness "
                        f"spot check (min eigenvalue {rep.min_eigenvalue:.3e})"
                    )
        return Trajectory(
            tuple(times), tuple(states), method, tuple(errors), self.constants,
            clamp_counter[0],
        )


def normalize_time(kernel: AngularKernel, rel_tol: float = 1e-12):
    """Rescale the kernel amplitude so its mass gamma_2 is exactly 1; returns
    (scaled kernel, scale factor) with the factor converting times back."""
    g2 = gamma_2(kernel, rel_tol)
    if not math.isfinite(g2):
        raise AdmissibilityError("cannot normalize a non-cutoff kernel (infinite mass)")
    form = kernel.form
    if isinstance(form, Constant):
        new_form = Constant(form.amplitude / g2)
    elif isinstance(form, EndpointPower):
        new_form = EndpointPower(form.amplitude / g2, form.nu_plus, form.nu_minus)
    else:
        new_form = Tabulated(form.nodes, tuple(v / g2 for v in form.values))
    cap = None if kernel.cutoff_cap is None else kernel.cutoff_cap / g2
    return AngularKernel(new_form, cap), g2


def rescale_to_selfsim(traj: Trajectory, mu: float) -> Trajectory:
    """Pass to self-similar variables: state(t) evaluated at x*exp(-2*mu*t),
    with the small-x coefficient transformed exactly by the power law."""
    new_states = []
    for t, state in zip(traj.times, traj.states):
        factor = math.exp(-2.0 * mu * t)
        if factor > 1.0 + 1e-12:
            raise CoverageError(
                f"rescaling at t = {t} needs arguments beyond the represented range"
            )
        nodes = state.grid.nodes
        values = np.empty_like(nodes)
        values[0] = 1.0
        from .charfn import eval_cf

        values[1:] = eval_cf(state, nodes[1:] * factor)
        at = state.small_x.alpha_tilde
        model = SmallXModel(
            at,
            state.small_x.kappa * factor**at,
            state.small_x.kappa2 * factor ** (2.0 * at),
        )
        new_states.append(RadialCF(state.grid, values, model, state.provenance))
    return replace(traj, states=tuple(new_states))


def cutoff_continuation(kernel: AngularKernel, phi0: RadialCF, T: float, caps,
                        alpha: float, tol: float = 1e-8) -> ContinuationReport:
    """Evolve under each capped kernel and under the singular kernel directly;
    report successive sup-grid gaps at T and the gap to the direct solution."""
    caps = tuple(float(c) for c in caps)
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise DomainError("caps must be strictly increasing")
    rhs_tol = 0.1 * tol
    finals = []
    for cap in caps:
        solver = RadialSolver(truncate(kernel, cap), alpha, rhs_abs_tol=rhs_tol)
        finals.append(solver.evolve(phi0, T, "rk", [T], tol=tol, psd_cadence=0).states[-1])
    direct_solver = RadialSolver(kernel, alpha, rhs_abs_tol=rhs_tol)
    direct = direct_solver.evolve(phi0, T, "rk", [T], tol=tol, psd_cadence=0).states[-1]
    diffs = tuple(sup_grid_diff(a, b) for a, b in zip(finals[:-1], finals[1:]))
    decreasing = all(b < a for a, b in zip(diffs, diffs[1:]))
    return ContinuationReport(
        caps=caps,
        successive_diffs=diffs,
        final_vs_direct=sup_grid_diff(finals[-1], direct),
        cauchy_decreasing=decreasing,
        capped_finals=tuple(finals),
        direct_final=direct,
    )
