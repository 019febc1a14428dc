"""Gronwall bounds in differential and integral form, with an ODE oracle.

Both forms share the trapezoid cumulative-integral kernel of the
operators module so that bound assembly elsewhere agrees bit-for-bit on
common inputs.  A constant-coefficient fast path mirrors the specialized
closed-form expressions and is cross-checked against the general path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .operators import cumulative_trapezoid


def _as_nodes(v, nt):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(nt, float(arr)), True
    if arr.shape != (nt,):
        raise ParameterError(f"trajectory length {arr.shape} does not match nt={nt}")
    return arr, False


def gronwall_differential(u0, phi, psi, dt, nt=None):
    """Bound t -> exp(Phi(t)) (u0 + int_0^t exp(-Phi(s)) psi(s) ds).

    Valid for u with u' <= phi u + psi, phi >= 0.  phi may be a scalar
    (constant-coefficient branch) or a nodal trajectory.
    """
    if nt is None:
        nt = len(np.atleast_1d(psi))
    psi_arr, _ = _as_nodes(psi, nt)
    phi_arr, phi_const = _as_nodes(phi, nt)
    if np.any(phi_arr < 0.0):
        raise ParameterError("phi must be nonnegative on all nodes")
    t = np.arange(nt) * dt
    if phi_const:
        big_phi = phi_arr[0] * t
    else:
        big_phi = cumulative_trapezoid(phi_arr, dt)
    inner = cumulative_trapezoid(np.exp(-big_phi) * psi_arr, dt)
    return np.exp(big_phi) * (u0 + inner)


def gronwall_integral(phi, psi, dt, nt=None):
    """Bound t -> exp(Phi(t)) int_0^t exp(-Phi(s)) phi(s) psi(s) ds + psi(t).

    Valid for u with u(t) <= int_0^t phi u ds + psi(t), phi >= 0.
    """
    if nt is None:
        nt = len(np.atleast_1d(psi))
    psi_arr, _ = _as_nodes(psi, nt)
    phi_arr, phi_const = _as_nodes(phi, nt)
    if np.any(phi_arr < 0.0):
        raise ParameterError("phi must be nonnegative on all nodes")
    t = np.arange(nt) * dt
    if phi_const:
        c = phi_arr[0]
        big_phi = c * t
        inner = cumulative_trapezoid(np.exp(-big_phi) * psi_arr, dt)
        return c * np.exp(big_phi) * inner + psi_arr
    big_phi = cumulative_trapezoid(phi_arr, dt)
    inner = cumulative_trapezoid(np.exp(-big_phi) * phi_arr * psi_arr, dt)
    return np.exp(big_phi) * inner + psi_arr


@dataclass
class OracleReport:
    """Outcome of checking a Gronwall bound against a direct ODE solve."""

    passed: bool
    max_violation: float
    max_rel_gap: float
    bound: np.ndarray = field(repr=False)
    solution: np.ndarray = field(repr=False)


def _rk4(u0, rhs, times):
    u = np.empty(len(times))
    u[0] = u0
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = rhs(t, u[k])
        k2 = rhs(t + 0.5 * h, u[k] + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, u[k] + 0.5 * h * k2)
        k4 = rhs(t + h, u[k] + h * k3)
        u[k + 1] = u[k] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def gronwall_oracle_check(phi, psi, u0, T, nt, refine=8, tol=1e-6):
    """Integrate u' = phi u + psi with RK4 and compare against the bound.

    phi and psi may be callables of t or nodal arrays (linearly
    interpolated for the refined oracle grid).  The hypothesis holds with
    equality, so the bound must dominate the solution everywhere and be
    tight up to quadrature error.
    """
    dt = T / (nt - 1)
    t_nodes = np.linspace(0.0, T, nt)
    if callable(phi):
        phi_nodes = np.array([phi(t) for t in t_nodes])
        phi_fn = phi
    else:
        phi_nodes, _ = _as_nodes(phi, nt)
        phi_fn = lambda t: np.interp(t, t_nodes, phi_nodes)
    if callable(psi):
        psi_nodes = np.array([psi(t) for t in t_nodes])
        psi_fn = psi
    else:
        psi_nodes, _ = _as_nodes(psi, nt)
        psi_fn = lambda t: np.interp(t, t_nodes, psi_nodes)

    bound = gronwall_differential(u0, phi_nodes, psi_nodes, dt)
    t_fine = np.linspace(0.0, T, (nt - 1) * refine + 1)
    u_fine = _rk4(u0, lambda t, u: phi_fn(t) * u + psi_fn(t), t_fine)
    u_nodes = u_fine[::refine]

    scale = max(np.abs(u_nodes).max(), np.abs(bound).max(), 1.0)
    gap = bound - u_nodes
    max_violation = float(max(0.0, -(gap.min())))
    max_rel_gap = float(np.abs(gap).max() / scale)
    passed = max_violation <= tol * scale and max_rel_gap <= tol
    return OracleReport(passed, max_violation, max_rel_gap, bound, u_nodes)
