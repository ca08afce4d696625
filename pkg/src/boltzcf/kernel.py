"""Angular collision kernels B(s) on (-1, 1) and their reduced form G on (0, 1).

A kernel is described by an immutable descriptor (constant amplitude, a pair
of endpoint power laws, or a table of samples) plus an optional cutoff cap
``min(B, n)``.  Kernels are values: equality, hashing and serialization go
through the descriptor, never through pointwise probing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FOUR_PI = 4.0 * math.pi

__all__ = [
    "Constant",
    "EndpointPower",
    "Tabulated",
    "AngularKernel",
    "constant_kernel",
    "endpoint_power_kernel",
    "tabulated_kernel",
    "eval_B",
    "eval_B_from_end",
    "eval_G",
    "eval_G_stable",
    "min_alpha0",
    "truncate",
    "singularity_orders",
    "is_cutoff",
    "to_descriptor",
    "from_descriptor",
]


@dataclass(frozen=True)
class Constant:
    """B(s) = amplitude."""

    amplitude: float

    def __post_init__(self):
        if not (self.amplitude > 0.0 and math.isfinite(self.amplitude)):
            raise DomainError(f"amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True)
class EndpointPower:
    """B(s) = amplitude * (1-s)^(-1-nu_plus) * (1+s)^(-1-nu_minus).

    Construction rejects max(nu_plus, nu_minus) >= 1/2: no exponent in (0, 2]
    makes such a kernel integrable against the collision weight.
    """

    amplitude: float
    nu_plus: float
    nu_minus: float

    def __post_init__(self):
        if not (self.amplitude > 0.0 and math.isfinite(self.amplitude)):
            raise DomainError(f"amplitude must be positive, got {self.amplitude}")
        if self.nu_plus < 0.0 or self.nu_minus < 0.0:
            raise DomainError("endpoint exponents must be >= 0")
        if max(self.nu_plus, self.nu_minus) >= 0.5:
            raise DomainError(
                "endpoint exponent >= 1/2 is never admissible "
                f"(nu_plus={self.nu_plus}, nu_minus={self.nu_minus})"
            )


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear kernel through sample points, held constant outside."""

    nodes: tuple
    values: tuple

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise DomainError("need >= 2 sample nodes with matching values")
        if not np.all(np.diff(nodes) > 0):
            raise DomainError("sample nodes must be strictly increasing")
        if nodes[0] <= -1.0 or nodes[-1] >= 1.0:
            raise DomainError("sample nodes must lie strictly inside (-1, 1)")
        if np.any(values < 0.0):
            raise DomainError("kernel samples must be nonnegative")
        object.__setattr__(self, "nodes", tuple(float(v) for v in nodes))
        object.__setattr__(self, "values", tuple(float(v) for v in values))


@dataclass(frozen=True)
class AngularKernel:
    form: Constant | EndpointPower | Tabulated
    cutoff_cap: float | None = None

    def __post_init__(self):
        if self.cutoff_cap is not None and not (
            self.cutoff_cap > 0.0 and math.isfinite(self.cutoff_cap)
        ):
            raise DomainError(f"cutoff cap must be positive, got {self.cutoff_cap}")


def constant_kernel(amplitude, cutoff_cap=None):
    return AngularKernel(Constant(float(amplitude)), cutoff_cap)


def endpoint_power_kernel(amplitude, nu_plus, nu_minus, cutoff_cap=None):
    return AngularKernel(
        EndpointPower(float(amplitude), float(nu_plus), float(nu_minus)), cutoff_cap
    )


def tabulated_kernel(nodes, values, cutoff_cap=None):
    return AngularKernel(Tabulated(tuple(nodes), tuple(values)), cutoff_cap)


def _raw_B(form, s):
    if isinstance(form, Constant):
        return np.full_like(s, form.amplitude)
    if isinstance(form, EndpointPower):
        return form.amplitude * (1.0 - s) ** (-1.0 - form.nu_plus) * (1.0 + s) ** (
            -1.0 - form.nu_minus
        )
    return np.interp(s, form.nodes, form.values)


def eval_B(kernel: AngularKernel, s):
    """Evaluate the (capped) kernel at deviation cosine(s), s strictly in (-1, 1)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(np.abs(s_arr) >= 1.0):
        raise DomainError("kernel argument must satisfy |s| < 1")
    out = _raw_B(kernel.form, s_arr)
    if kernel.cutoff_cap is not None:
        out = np.minimum(out, kernel.cutoff_cap)
    return out if isinstance(s, np.ndarray) else float(out)


def eval_G(kernel: AngularKernel, s):
    """Reduced kernel G(s) = 4*pi*B(1-2s) on (0, 1)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0.0) or np.any(s_arr >= 1.0):
        raise DomainError("reduced kernel argument must lie in (0, 1)")
    out = FOUR_PI * eval_B(kernel, 1.0 - 2.0 * s_arr)
    return out if isinstance(s, np.ndarray) else float(out)


def eval_B_from_end(kernel: AngularKernel, u, end: int):
    """B at s = end*(1 - u), parameterized by the distance u in (0, 2) from
    the endpoint so power-law factors stay exact where 1 - u rounds to 1.

    Quadrature rules place nodes at distances down to ~1e-300 from the
    endpoints; forming s explicitly there is catastrophic, this is not.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 2.0):
        raise DomainError("endpoint distance must lie in (0, 2)")
    form = kernel.form
    if isinstance(form, Constant):
        out = np.full_like(u_arr, form.amplitude)
    elif isinstance(form, EndpointPower):
        near, far = (form.nu_plus, form.nu_minus) if end > 0 else (form.nu_minus, form.nu_plus)
        out = form.amplitude * u_arr ** (-1.0 - near) * (2.0 - u_arr) ** (-1.0 - far)
    else:
        out = np.interp(float(end) * (1.0 - u_arr), form.nodes, form.values)
    if kernel.cutoff_cap is not None:
        out = np.minimum(out, kernel.cutoff_cap)
    return out if isinstance(u, np.ndarray) else float(out)


def eval_G_stable(kernel: AngularKernel, s):
    """G(s) = 4*pi*B(1-2s) through the endpoint-stable route; safe for
    quadrature nodes arbitrarily close to 0 or 1 (2s and 2-2s are exact)."""
    s_arr = np.asarray(s, dtype=float)
    out = FOUR_PI * eval_B_from_end(kernel, 2.0 * s_arr, +1)
    return out if isinstance(s, np.ndarray) else float(out)


def min_alpha0(kernel: AngularKernel) -> float:
    """Infimum of admissible exponents; strict inequality is required above a
    nonzero infimum (the admissibility condition is open for power kernels)."""
    if kernel.cutoff_cap is not None:
        return 0.0
    if isinstance(kernel.form, EndpointPower):
        return 4.0 * max(kernel.form.nu_plus, kernel.form.nu_minus)
    return 0.0


def truncate(kernel: AngularKernel, n) -> AngularKernel:
    """Cap the kernel at n; composing caps keeps the smallest one."""
    n = float(n)
    if not (n > 0.0 and math.isfinite(n)):
        raise DomainError(f"cap must be positive, got {n}")
    cap = n if kernel.cutoff_cap is None else min(kernel.cutoff_cap, n)
    return AngularKernel(kernel.form, cap)


def is_cutoff(kernel: AngularKernel) -> bool:
    """True when B is bounded, hence integrable on (-1, 1)."""
    return kernel.cutoff_cap is not None or not isinstance(kernel.form, EndpointPower)


def singularity_orders(kernel: AngularKernel) -> tuple:
    """(order at s=+1, order at s=-1) of the *uncapped* form.

    Capped kernels are bounded, but quadrature still grades nodes by the
    uncapped order so the steep rise and the cap kink are resolved cheaply.
    """
    if isinstance(kernel.form, EndpointPower):
        return (kernel.form.nu_plus, kernel.form.nu_minus)
    return (0.0, 0.0)


def to_descriptor(kernel: AngularKernel) -> dict:
    """JSON-ready descriptor, the canonical identity of a kernel."""
    form = kernel.form
    if isinstance(form, Constant):
        d = {"type": "constant", "amplitude": form.amplitude}
    elif isinstance(form, EndpointPower):
        d = {
            "type": "endpoint_power",
            "amplitude": form.amplitude,
            "nu_plus": form.nu_plus,
            "nu_minus": form.nu_minus,
        }
    else:
        d = {"type": "tabulated", "nodes": list(form.nodes), "values": list(form.values)}
    d["cutoff"] = kernel.cutoff_cap
    return d


def from_descriptor(d: dict) -> AngularKernel:
    kind = d.get("type")
    cap = d.get("cutoff")
    if kind == "constant":
        return constant_kernel(d["amplitude"], cap)
    if kind == "endpoint_power":
        return endpoint_power_kernel(d["amplitude"], d["nu_plus"], d["nu_minus"], cap)
    if kind == "tabulated":
        return tabulated_kernel(d["nodes"], d["values"], cap)
    raise DomainError(f"unknown kernel type {kind!r}")
