"""Angular profile f(theta) of 1-homogeneous p-harmonic functions in R^3.

The profile solves the second-order equation on the sphere

    f'' + (f + cot(theta) f') (f^2 + f'^2) / (f^2 + (p-1) f'^2) + f = 0,

equivalently, in expanded (divergence) form,

    f''(f^2 + (p-1) f'^2) + f (2 f^2 + p f'^2) + cot(theta) f' (f^2 + f'^2) = 0.

The module integrates it with an adaptive embedded Runge-Kutta pair (dense
output), locates the first zero theta0 of f by bisection on the dense output,
and cross-checks through the first-order reduction w = f'/f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ._fd import derivative_on_interval
from .errors import (
    InvalidInputError,
    IntegrationFailureError,
    NoZeroError,
    SingularStateError,
)

__all__ = [
    "THETA_MIN",
    "ProfileState",
    "ProfileSolution",
    "RiccatiState",
    "legendre_rhs",
    "riccati_rhs",
    "integrate",
    "find_theta0",
    "solve_symmetric_profile",
    "p2_closed_form",
    "p2_closed_form_derivative",
]

#: polar guard: cot(theta) is singular at 0 and pi
THETA_MIN = 1e-6

_DENOM_FLOOR = 1e-14


@dataclass(frozen=True)
class ProfileState:
    """Point (theta, f, df/dtheta) on a trajectory; theta strictly inside (0, pi)."""

    theta: float
    f: float
    fdot: float


@dataclass(frozen=True)
class RiccatiState:
    """First-order reduction variable w = f'/f at angle theta (finite only where f != 0)."""

    theta: float
    w: float


def legendre_rhs(state: ProfileState | tuple, p: float) -> float:
    """f'' from the profile equation at one state.

    Raises SingularStateError when the denominator f^2 + (p-1) f'^2 falls
    below 1e-14.
    """
    theta, f, fdot = (state.theta, state.f, state.fdot) if isinstance(state, ProfileState) else state
    denom = f * f + (p - 1.0) * fdot * fdot
    if denom < _DENOM_FLOOR:
        raise SingularStateError(f"denominator {denom:.3e} below floor at theta={theta}")
    cot = math.cos(theta) / math.sin(theta)
    return -(f + cot * fdot) * (f * f + fdot * fdot) / denom - f


def riccati_rhs(state: RiccatiState | tuple, p: float) -> float:
    """dw/dtheta of the first-order reduction w = f'/f."""
    theta, w = (state.theta, state.w) if isinstance(state, RiccatiState) else state
    if not (np.isfinite(theta) and np.isfinite(w)):
        raise InvalidInputError("riccati_rhs requires finite state")
    cot = math.cos(theta) / math.sin(theta)
    return -w * w - (1.0 + w * cot) * (1.0 + w * w) / (1.0 + (p - 1.0) * w * w) - 1.0


class _ConstantDense:
    """Dense output for a zero-length integration."""

    def __init__(self, theta, y):
        self.theta = theta
        self.y = np.asarray(y, dtype=float)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty((2,) + t.shape)
        out[0] = self.y[0]
        out[1] = self.y[1]
        return out


@dataclass
class ProfileSolution:
    """Trajectory of the profile equation with dense output.

    ``thetas``/``fs``/``fdots`` are the accepted integrator steps in
    integration order.  ``theta0``/``fdot_at_theta0`` are filled once the
    zero of f has been located.
    """

    p: float
    thetas: np.ndarray
    fs: np.ndarray
    fdots: np.ndarray
    dense: Callable
    theta0: float | None = None
    fdot_at_theta0: float | None = None

    @property
    def coverage(self) -> tuple[float, float]:
        """Angular interval on which the dense output is valid."""
        return (float(min(self.thetas[0], self.thetas[-1])), float(max(self.thetas[0], self.thetas[-1])))

    def __call__(self, theta):
        """Dense (f, fdot) at angle(s) theta."""
        out = self.dense(np.asarray(theta, dtype=float))
        return out[0], out[1]

    def fdotdot(self, theta, fd_step: float = 1e-3) -> float:
        """Second derivative from a 7-point finite-difference of the dense f'."""
        lo, hi = self.coverage
        return derivative_on_interval(
            lambda t: self.dense(t)[1], float(theta), fd_step, lo, hi, npts=7
        )

    def residual(self, theta, fd_step: float = 1e-3):
        """Defect of the dense trajectory against the profile equation.

        Evaluated through the expanded form and normalized by the leading
        coefficient f^2 + (p-1) f'^2, so it measures |f''_fd - rhs| without
        amplification at large p.  f'' comes from a finite difference of the
        dense f', which keeps the check independent of the integrator's own
        interpolant derivative.
        """
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        f, fdot = self(theta)
        fdd = np.array([self.fdotdot(t, fd_step) for t in theta])
        cot = np.cos(theta) / np.sin(theta)
        lead = f**2 + (self.p - 1.0) * fdot**2
        expanded = fdd * lead + f * (2.0 * f**2 + self.p * fdot**2) + cot * fdot * (f**2 + fdot**2)
        res = np.abs(expanded) / lead
        return res if res.size > 1 else float(res[0])

    def riccati_residual(self, theta, fd_step: float = 1e-3):
        """|dw/dtheta (finite difference of w = f'/f) - riccati_rhs| along the trajectory."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        lo, hi = self.coverage

        def w_of(t):
            f, fdot = self(t)
            return fdot / f

        out = np.empty_like(theta)
        for i, t in enumerate(theta):
            wdot = derivative_on_interval(w_of, float(t), fd_step, lo, hi)
            out[i] = abs(wdot - riccati_rhs((float(t), float(w_of(np.array([t]))[0])), self.p))
        return out if out.size > 1 else float(out[0])


def _as_state(ic) -> ProfileState:
    if isinstance(ic, ProfileState):
        return ic
    theta, f, fdot = ic
    return ProfileState(float(theta), float(f), float(fdot))


def integrate(
    p: float,
    ic: ProfileState | tuple,
    theta_end: float,
    tol: float = 1e-12,
    theta_min: float = THETA_MIN,
    method: str = "RK45",
) -> ProfileSolution:
    """Integrate the profile equation from ic.theta to theta_end.

    Adaptive embedded pair with dense output; local error per step bounded by
    ``tol`` (both absolute and relative).  Direction follows
    sign(theta_end - ic.theta).  Trajectories that would need
    theta < theta_min are reported as IntegrationFailureError, never
    extrapolated.
    """
    if not p > 1.0:
        raise InvalidInputError("p must exceed 1")
    if not tol > 0.0:
        raise InvalidInputError("tol must be positive")
    ic = _as_state(ic)
    for th in (ic.theta, theta_end):
        if not (theta_min <= th <= math.pi - theta_min):
            raise InvalidInputError(
                f"theta={th} outside the guarded interval ({theta_min}, {math.pi - theta_min})"
            )

    if theta_end == ic.theta:
        y = np.array([ic.f, ic.fdot])
        return ProfileSolution(
            p=float(p),
            thetas=np.array([ic.theta]),
            fs=np.array([ic.f]),
            fdots=np.array([ic.fdot]),
            dense=_ConstantDense(ic.theta, y),
        )

    def rhs(theta, y):
        return [y[1], legendre_rhs((theta, y[0], y[1]), p)]

    sol = solve_ivp(
        rhs,
        (ic.theta, theta_end),
        [ic.f, ic.fdot],
        method=method,
        dense_output=True,
        rtol=tol,
        atol=tol,
    )
    if sol.status == -1 or (not sol.success and sol.t.size > 0):
        last = ProfileState(float(sol.t[-1]), float(sol.y[0, -1]), float(sol.y[1, -1])) if sol.t.size else ic
        raise IntegrationFailureError(f"integration stalled at theta={last.theta}", last_state=last)
    return ProfileSolution(
        p=float(p),
        thetas=sol.t.copy(),
        fs=sol.y[0].copy(),
        fdots=sol.y[1].copy(),
        dense=sol.sol,
    )


def locate_zero(sol: ProfileSolution, tol: float = 1e-12) -> ProfileSolution:
    """Bisect the dense output for the first zero of f along the trajectory.

    Returns a copy with theta0 and fdot_at_theta0 filled; the bisection runs
    to 1e-12 in theta and checks |f(theta0)| <= tol.
    """
    fs = sol.fs
    sign0 = math.copysign(1.0, fs[0])
    idx = None
    for k in range(1, fs.size):
        if math.copysign(1.0, fs[k]) != sign0 or fs[k] == 0.0:
            idx = k
            break
    if idx is None:
        raise NoZeroError("profile did not change sign along the trajectory")
    a, b = float(sol.thetas[idx - 1]), float(sol.thetas[idx])

    def f_at(t):
        return float(sol.dense(t)[0])

    fa = f_at(a)
    while abs(b - a) > 1e-12 * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        fm = f_at(mid)
        if math.copysign(1.0, fm) == math.copysign(1.0, fa):
            a, fa = mid, fm
        else:
            b = mid
    theta0 = 0.5 * (a + b)
    lo, hi = min(a, b), max(a, b)
    for _ in range(3):  # Newton polish on the dense output pushes |f| to machine level
        f0, fd0 = sol(theta0)
        if fd0 == 0.0:
            break
        step = float(f0) / float(fd0)
        cand = theta0 - step
        if not (lo - 1e-9 <= cand <= hi + 1e-9):
            break
        theta0 = cand
    f0, fd0 = sol(theta0)
    if abs(float(f0)) > tol and abs(float(f0)) > 1e-10:
        raise NoZeroError(f"bisection left |f| = {abs(float(f0)):.3e} above tolerance")
    return replace(sol, theta0=float(theta0), fdot_at_theta0=float(fd0))


def find_theta0(
    p: float,
    ic: ProfileState | tuple = (math.pi / 2.0, 1.0, 0.0),
    tol: float = 1e-12,
    integration_tol: float = 1e-12,
    theta_min: float = THETA_MIN,
) -> tuple[float, float]:
    """First zero of f below ic.theta and the slope there.

    Integrates toward the pole, detects the first sign change, then refines
    by bisection on the dense output.  Raises NoZeroError when f stays
    positive down to theta_min.
    """
    ic = _as_state(ic)
    if not ic.f > 0:
        raise InvalidInputError("find_theta0 requires ic.f > 0")
    try:
        sol = integrate(p, ic, theta_min, tol=integration_tol, theta_min=theta_min)
    except IntegrationFailureError as err:
        # a partial trajectory may still contain the zero
        raise NoZeroError(f"integration failed before a sign change: {err}") from err
    sol = locate_zero(sol, tol=tol)
    return sol.theta0, sol.fdot_at_theta0


def solve_symmetric_profile(p: float, tol: float = 1e-12, theta_min: float = THETA_MIN) -> ProfileSolution:
    """Symmetric profile f(pi/2) = 1, f'(pi/2) = 0 with its zero located.

    This is the profile generating the double cone; the reflection
    f(pi - theta) = f(theta) extends it to the full band.
    """
    sol = integrate(p, (math.pi / 2.0, 1.0, 0.0), theta_min, tol=tol, theta_min=theta_min)
    return locate_zero(sol, tol=max(1e-12, tol))


def p2_closed_form(theta):
    """Closed-form symmetric profile for p = 2: 1 - (x/2) log((1+x)/(1-x)), x = cos(theta).

    This is the sign- and constant-corrected second Legendre solution; the
    test suite pins it against the ODE by a symbolic residual check before
    it is used as an oracle.
    """
    x = np.cos(np.asarray(theta, dtype=float))
    return 1.0 - 0.5 * x * np.log((1.0 + x) / (1.0 - x))


def p2_closed_form_derivative(theta):
    """d/dtheta of the p = 2 closed form."""
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    dy_dx = -0.5 * np.log((1.0 + x) / (1.0 - x)) - x / (1.0 - x * x)
    return -np.sin(theta) * dy_dx
