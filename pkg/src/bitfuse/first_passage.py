"""Two-sided first-exit numerics for drifted Brownian motion.

A sensor with constant weight x and symmetric threshold delta triggers
when its integral statistic, a Brownian motion with drift lam*x^2 and
variance rate x^2, leaves (-delta, delta).  Equivalently a standard
Brownian motion with drift mu = lam*|x| leaves (-a, a) with
a = delta/|x|.  The joint law of (exit time, exit side) has the density
pair

    p_up(t)   = exp(+lam*delta - (lam*x)^2 t / 2) * g(t; a)
    p_down(t) = exp(-lam*delta - (lam*x)^2 t / 2) * g(t; a)

where g is the driftless density of exiting at +a.  Two complementary
series for g are used: a reflection (image) series accurate for small t
and an eigenfunction series accurate for large t; truncation is chosen
from explicit tail majorants, never a fixed term count.

Every functional below is cross-checked in the test suite against an
independent Monte Carlo oracle (``simulate_exit_times``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (
    InvalidSpec,
    NonPositiveInputs,
    NonPositiveTime,
    QuadratureFailure,
    ZeroDrift,
)

__all__ = [
    "ExitProblem",
    "SeriesControl",
    "kernel_h",
    "series_g",
    "g_values",
    "joint_density",
    "exit_functionals",
    "delta_moment_asymptotics",
    "exit_time_cdf",
    "simulate_exit_times",
]


@dataclass(frozen=True)
class ExitProblem:
    """Symmetric two-sided exit problem of one sensor's statistic."""

    delta: float
    x: float
    lam: float

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidSpec("threshold delta must be positive")
        if self.x == 0:
            raise InvalidSpec("weight x must be nonzero")

    @property
    def a(self) -> float:
        """Effective barrier for the normalized driving motion."""
        return self.delta / abs(self.x)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation and quadrature tolerances."""

    abs_tol: float = 1e-12
    quad_rel_tol: float = 1e-9
    t_max: float | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.quad_rel_tol > 0):
            raise InvalidSpec("tolerances must be positive")


_DEFAULT_CONTROL = SeriesControl()
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def kernel_h(t, x):
    """Reflection kernel x / sqrt(2 pi t^3) * exp(-x^2 / (2 t)).

    Odd in x; nonnegative for x >= 0.  Vectorized in t.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise NonPositiveTime("kernel requires t > 0")
    out = x / (_SQRT_2PI * t**1.5) * np.exp(-(x * x) / (2.0 * t))
    return out if out.ndim else float(out)


def series_g(t: float, x: float, ctl: SeriesControl = _DEFAULT_CONTROL) -> float:
    """Driftless density of exiting the band (-x, x) at +x, at time t.

    For t below x^2/2 the image series sum_n h(t; (4n+1) x) is summed
    with a Gaussian-tail majorant deciding the truncation.  For larger t
    the eigenfunction series

        (pi / (4 x^2)) * sum_k (-1)^k (2k+1) exp(-(2k+1)^2 pi^2 t / (8 x^2))

    converges geometrically and avoids the catastrophic cancellation the
    image series suffers there; its terms decrease, so the value is
    manifestly nonnegative.
    """
    if not (t > 0 and x > 0):
        raise NonPositiveInputs("series requires t > 0 and x > 0")
    if t <= 0.5 * x * x:
        return _g_image(t, x, ctl.abs_tol)
    return _g_eigen(t, x, ctl.abs_tol)


def _g_image(t, x, abs_tol):
    total = kernel_h(t, x)
    n = 1
    while True:
        total += kernel_h(t, (4 * n + 1) * x) + kernel_h(t, (-4 * n + 1) * x)
        u0 = (4 * n + 3) * x
        if u0 * u0 >= t:
            # remaining |arguments| form the lattice u0, u0+2x, ...; each
            # |term| is phi(u) = u exp(-u^2/2t)/sqrt(2 pi t^3), decreasing
            # beyond sqrt(t), so the tail is at most
            # phi(u0) + (1/2x) * integral_{u0}^inf phi = phi(u0) + t*exp(-u0^2/2t)/(2x sqrt(2 pi t^3))
            tail = (u0 + t / (2.0 * x)) * math.exp(-u0 * u0 / (2.0 * t)) / (
                _SQRT_2PI * t**1.5
            )
            if tail < abs_tol:
                return total
        n += 1
        if n > 10**6:
            raise QuadratureFailure("image series did not converge")


def _g_eigen(t, x, abs_tol):
    scale = math.pi / (4.0 * x * x)
    rate = math.pi * math.pi * t / (8.0 * x * x)
    total = 0.0
    k = 0
    while True:
        m = 2 * k + 1
        term = scale * m * math.exp(-m * m * rate)
        total += term if k % 2 == 0 else -term
        # next term bounds the alternating tail
        m2 = m + 2
        if scale * m2 * math.exp(-m2 * m2 * rate) < abs_tol:
            return total
        k += 1
        if k > 10**6:
            raise QuadratureFailure("eigenfunction series did not converge")


def g_values(t, x, ctl: SeriesControl = _DEFAULT_CONTROL) -> np.ndarray:
    """Vectorized wrapper around series_g."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([series_g(float(v), x, ctl) for v in t])


def joint_density(p: ExitProblem, t, ctl: SeriesControl = _DEFAULT_CONTROL):
    """Joint density pair (p_up, p_down) of (exit time, exit side).

    Their ratio is exp(2 lam delta) identically in t.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise NonPositiveTime("densities require t > 0")
    g = g_values(t_arr, p.a, ctl)
    damp = np.exp(-0.5 * (p.lam * p.x) ** 2 * t_arr)
    up = math.exp(p.lam * p.delta) * damp * g
    dn = math.exp(-p.lam * p.delta) * damp * g
    if np.ndim(t):
        return up, dn
    return float(up[0]), float(dn[0])


def _quad_to_inf(f, rel_tol):
    val, err = integrate.quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=rel_tol, limit=400)
    if err > max(1e-9, 10 * rel_tol * abs(val)):
        raise QuadratureFailure(f"quadrature error {err:g} too large for value {val:g}")
    return val


def exit_functionals(p: ExitProblem, ctl: SeriesControl = _DEFAULT_CONTROL):
    """Exit-side probability and exit-time moments by quadrature.

    Returns (prob_up, mean_delta, var_delta).
    """
    def total(t):
        up, dn = joint_density(p, t, ctl)
        return up + dn

    def up_only(t):
        return joint_density(p, t, ctl)[0]

    prob_up = _quad_to_inf(up_only, ctl.quad_rel_tol)
    mean = _quad_to_inf(lambda t: t * total(t), ctl.quad_rel_tol)
    second = _quad_to_inf(lambda t: t * t * total(t), ctl.quad_rel_tol)
    return prob_up, mean, second - mean * mean


def delta_moment_asymptotics(p: ExitProblem):
    """Leading-order exit-time moments for a wide band.

    mean ~ delta / (|lam| x^2), variance ~ delta / (|lam|^3 x^4); both
    undefined without drift.
    """
    if p.lam == 0:
        raise ZeroDrift("leading-order moments require lam != 0")
    mean = p.delta / (abs(p.lam) * p.x**2)
    var = p.delta / (abs(p.lam) ** 3 * p.x**4)
    return mean, var


def exit_time_cdf(p: ExitProblem, ts, n_grid: int = 20001,
                  ctl: SeriesControl = _DEFAULT_CONTROL) -> np.ndarray:
    """CDF of the exit time at the requested points, by integrating the
    density pair on a dense grid (the integrand is smooth and vanishes
    superpolynomially at 0)."""
    ts = np.asarray(ts, dtype=float)
    t_hi = float(ts.max())
    grid = np.linspace(0.0, t_hi, n_grid)
    dens = np.zeros_like(grid)
    up, dn = joint_density(p, grid[1:], ctl)
    dens[1:] = up + dn
    cdf_grid = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return np.interp(ts, grid, cdf_grid)


def simulate_exit_times(p: ExitProblem, n: int, dt: float, seed,
                        bridge: bool = True):
    """Monte Carlo oracle: n independent draws of (exit time, exit side).

    Simulates the normalized motion on a grid of step dt.  With
    ``bridge`` enabled, undetected within-step excursions are recovered
    by sampling the Brownian-bridge crossing probability
    exp(-2 (a - v0)(a - v1) / dt) for each barrier, which removes the
    O(sqrt(dt)) effective-barrier bias of plain grid monitoring; the
    residual timing error is O(dt).
    """
    if not (n > 0 and dt > 0):
        raise InvalidSpec("need n > 0 and dt > 0")
    rng = np.random.default_rng(seed)
    a = p.a
    mu = p.lam * abs(p.x)
    sdt = math.sqrt(dt)

    remaining = np.arange(n)
    v = np.zeros(n)
    out_t = np.empty(n)
    out_z = np.empty(n, dtype=np.uint8)
    step = 0
    while remaining.size:
        step += 1
        z = rng.standard_normal(remaining.size)
        v_new = v + mu * dt + sdt * z
        hard_up = v_new >= a
        hard_dn = v_new <= -a
        exited = hard_up | hard_dn
        theta = np.full(remaining.size, 0.5)
        side = hard_up.astype(np.uint8)
        if np.any(hard_up):
            theta[hard_up] = (a - v[hard_up]) / (v_new[hard_up] - v[hard_up])
        if np.any(hard_dn):
            theta[hard_dn] = (-a - v[hard_dn]) / (v_new[hard_dn] - v[hard_dn])
        if bridge:
            inside = ~exited
            if np.any(inside):
                vi, vni = v[inside], v_new[inside]
                p_up = np.exp(-2.0 * (a - vi) * (a - vni) / dt)
                p_dn = np.exp(-2.0 * (a + vi) * (a + vni) / dt)
                u_up = rng.random(vi.size)
                u_dn = rng.random(vi.size)
                cross_up = u_up < p_up
                cross_dn = u_dn < p_dn
                both = cross_up & cross_dn
                # ties are vanishingly rare; attribute them to the barrier
                # with the larger crossing probability
                cross_up_final = cross_up & (~both | (p_up >= p_dn))
                cross_dn_final = cross_dn & ~cross_up_final
                idx_inside = np.flatnonzero(inside)
                bridged = idx_inside[cross_up_final | cross_dn_final]
                exited[bridged] = True
                side[idx_inside[cross_up_final]] = 1
                side[idx_inside[cross_dn_final]] = 0
        done = np.flatnonzero(exited)
        if done.size:
            out_t[remaining[done]] = (step - 1) * dt + theta[done] * dt
            out_z[remaining[done]] = side[done]
            keep = ~exited
            remaining = remaining[keep]
            v = v_new[keep]
        else:
            v = v_new
    return out_t, out_z
