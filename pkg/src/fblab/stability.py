"""Second-variation bookkeeping for the double cone.

The quadratic form tested here is, normalized by F'(1),

    bulk(psi)     = int_{u>0} F'(|grad u|^2)/F'(1) { |grad psi|^2
                        + 2 F''/F' (grad u . grad psi)^2 },
    boundary(psi) = int_Gamma H psi^2,

and a radial psi separates both into a radial quadrature times a closed or
profile-quadrature angular factor.  The module also evaluates the expansion
coefficients of F(|grad(u - eps psi)|^2), the normalized stability tensor,
and the planar logarithmic-cutoff bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .cone import DoubleConeSolution
from .energy import EnergyModel
from .errors import AccuracyError, InvalidInputError

__all__ = [
    "RadialTestFunction",
    "ExpansionCoefficients",
    "StabilityReport",
    "FlatnessCriterion",
    "expansion_coeffs",
    "diffusion_tensor",
    "second_variation_cone",
    "bernstein_ratio",
    "bernstein_flatness_criterion",
    "log_test_2d",
    "c_hat",
    "fb_normal_derivative",
    "inverse_field_fd_divergence",
]


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_prime(u):
    return 6.0 * u * (1.0 - u)


@dataclass(frozen=True)
class RadialTestFunction:
    """Radial profile psi(r) with derivative, one of four kinds.

    inverse_truncated(delta): 1/delta inside r <= delta, 1/r outside
    (continuous; psi' = 0 inside, -1/r^2 outside).

    bernstein(eps): 0 for r <= eps, r^{-1/2} core on [2 eps, 1/2], 0 beyond
    3/4, with C^1 cubic-smoothstep ramps on [eps, 2 eps] and [1/2, 3/4]; the
    support avoids the origin so the squared-mass integral grows like
    log(1/eps).

    log_cutoff(N): 1 up to e^N, 2 - log(r)/N on (e^N, e^{2N}], 0 beyond.

    zero: identically 0.
    """

    kind: str
    param: float

    @staticmethod
    def inverse_truncated(delta: float) -> "RadialTestFunction":
        if not delta > 0:
            raise InvalidInputError("delta must be positive")
        return RadialTestFunction("inverse_truncated", float(delta))

    @staticmethod
    def bernstein(eps: float) -> "RadialTestFunction":
        if not 0.0 < eps < 0.125:
            raise InvalidInputError("eps must lie in (0, 1/8)")
        return RadialTestFunction("bernstein", float(eps))

    @staticmethod
    def log_cutoff(N: float) -> "RadialTestFunction":
        if not N > 0:
            raise InvalidInputError("N must be positive")
        return RadialTestFunction("log_cutoff", float(N))

    @staticmethod
    def zero() -> "RadialTestFunction":
        return RadialTestFunction("zero", 0.0)

    def breakpoints(self) -> tuple[float, ...]:
        """Panel boundaries for adaptive quadrature (finite kinds only)."""
        if self.kind == "inverse_truncated":
            d = self.param
            return (d, max(1.0, 2.0 * d))
        if self.kind == "bernstein":
            e = self.param
            return (e, 2.0 * e, 0.5, 0.75)
        if self.kind == "zero":
            return (0.0, 1.0)
        raise InvalidInputError(f"no finite panels for kind {self.kind!r}")

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "inverse_truncated":
            d = self.param
            return np.where(r <= d, 1.0 / d, 1.0 / np.maximum(r, d))
        if self.kind == "bernstein":
            e = self.param
            out = np.zeros_like(r)
            core = (r >= 2.0 * e) & (r <= 0.5)
            out = np.where(core, r ** (-0.5), out)
            up = (r > e) & (r < 2.0 * e)
            out = np.where(up, _smoothstep((r - e) / e) * r ** (-0.5), out)
            down = (r > 0.5) & (r < 0.75)
            out = np.where(down, (1.0 - _smoothstep((r - 0.5) * 4.0)) * r ** (-0.5), out)
            return out
        if self.kind == "log_cutoff":
            N = self.param
            logr = np.log(np.maximum(r, np.finfo(float).tiny))
            out = np.where(logr <= N, 1.0, 2.0 - logr / N)
            return np.clip(out, 0.0, 1.0)
        raise InvalidInputError(f"unknown kind {self.kind!r}")

    def dpsi(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "inverse_truncated":
            d = self.param
            return np.where(r <= d, 0.0, -1.0 / np.maximum(r, d) ** 2)
        if self.kind == "bernstein":
            e = self.param
            out = np.zeros_like(r)
            core = (r >= 2.0 * e) & (r <= 0.5)
            out = np.where(core, -0.5 * r ** (-1.5), out)
            up = (r > e) & (r < 2.0 * e)
            uu = (r - e) / e
            out = np.where(
                up,
                _smoothstep_prime(uu) / e * r ** (-0.5) - 0.5 * _smoothstep(uu) * r ** (-1.5),
                out,
            )
            down = (r > 0.5) & (r < 0.75)
            vv = (r - 0.5) * 4.0
            out = np.where(
                down,
                -4.0 * _smoothstep_prime(vv) * r ** (-0.5)
                - 0.5 * (1.0 - _smoothstep(vv)) * r ** (-1.5),
                out,
            )
            return out
        if self.kind == "log_cutoff":
            N = self.param
            logr = np.log(np.maximum(r, np.finfo(float).tiny))
            mid = (logr > N) & (logr <= 2.0 * N)
            return np.where(mid, -1.0 / (N * r), 0.0)
        raise InvalidInputError(f"unknown kind {self.kind!r}")


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Quadratic expansion of F(|grad u - eps grad psi|^2) in eps."""

    A0: float
    A1: float
    A2: float


def expansion_coeffs(grad_u, grad_psi, model: EnergyModel) -> ExpansionCoefficients:
    """A0 = F(q), A1 = -2 F'(q) (du . dpsi), A2 = F'(q)|dpsi|^2 + 2 F''(q)(du . dpsi)^2."""
    du = np.asarray(grad_u, dtype=float)
    dp = np.asarray(grad_psi, dtype=float)
    q = float(du @ du)
    dot = float(du @ dp)
    f1 = float(model.F1(np.float64(q)))
    f2 = float(model.F2(np.float64(q)))
    return ExpansionCoefficients(
        A0=float(model.F(np.float64(q))),
        A1=-2.0 * f1 * dot,
        A2=f1 * float(dp @ dp) + 2.0 * f2 * dot * dot,
    )


def diffusion_tensor(grad_u, model: EnergyModel) -> np.ndarray:
    """Normalized stability tensor (F'(q)/F'(1)) [I + (2F''/F')(q) du duT].

    Symmetric positive definite whenever F' > 0 and F'' >= 0.
    """
    du = np.asarray(grad_u, dtype=float)
    q = float(du @ du)
    f1 = float(model.F1(np.float64(q)))
    f2 = float(model.F2(np.float64(q)))
    f1_at_1 = float(model.F1(np.float64(1.0)))
    n = du.size
    return (f1 / f1_at_1) * (np.eye(n) + (2.0 * f2 / f1) * np.outer(du, du))


def _quad_panels(f, panels, quad_tol, tail_to_inf=False):
    total, err = 0.0, 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        v, e = quad(f, a, b, epsabs=quad_tol, epsrel=quad_tol, limit=200)
        total += v
        err += e
    if tail_to_inf:
        v, e = quad(f, panels[-1], np.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200)
        total += v
        err += e
    if err > 100.0 * max(quad_tol, quad_tol * abs(total)) + 1e-15:
        raise AccuracyError(f"quadrature achieved {err:.3e}, requested {quad_tol:.3e}")
    return total


def _radial_integrals(psi: RadialTestFunction, quad_tol: float) -> tuple[float, float]:
    """(int psi'(r)^2 r^2 dr, boundary integral of psi^2 along the cone rays).

    For the truncated inverse profile the boundary integral runs over
    rho > delta, mirroring the exterior free-boundary evaluation that the
    closed p = 2 cancellation pins down; the two halves are equal there, so
    including the inner flat cap would double the boundary term and force
    I < 0 for every p.
    """
    if psi.kind == "zero":
        return 0.0, 0.0
    if psi.kind == "log_cutoff":
        raise InvalidInputError(
            "the logarithmic cutoff targets the planar bound; use log_test_2d"
        )
    panels = list(psi.breakpoints())
    tail = psi.kind == "inverse_truncated"
    bulk = _quad_panels(lambda r: psi.dpsi(r) ** 2 * r * r, panels, quad_tol, tail_to_inf=tail)
    bdry = _quad_panels(lambda r: psi.psi(r) ** 2, panels, quad_tol, tail_to_inf=tail)
    return bulk, bdry


def _angular_factor_power(sol: DoubleConeSolution, quad_tol: float) -> float:
    """2 pi int_band |grad u|^{p-2} [1 + (p-2) f^2/(f^2+f'^2)] sin(theta) dtheta (pure power)."""
    p = sol.p
    s2 = sol.scale * sol.scale

    def integrand(t):
        f, fd = sol.profile(t)
        f, fd = float(f), float(fd)
        q = s2 * (f * f + fd * fd)
        return q ** ((p - 2.0) / 2.0) * (1.0 + (p - 2.0) * f * f / (f * f + fd * fd)) * math.sin(t)

    half = quad(integrand, sol.theta0, math.pi / 2.0, epsabs=quad_tol, epsrel=quad_tol, limit=200)[0]
    return 4.0 * math.pi * half


def _angular_factor_general(sol: DoubleConeSolution, model: EnergyModel, quad_tol: float) -> float:
    """Same factor with |grad u|^2 routed through F' and F'' of an arbitrary model."""
    s2 = sol.scale * sol.scale
    f1_at_1 = float(model.F1(np.float64(1.0)))

    def integrand(t):
        f, fd = sol.profile(t)
        f, fd = float(f), float(fd)
        q = s2 * (f * f + fd * fd)
        f1 = float(model.F1(np.float64(q)))
        f2 = float(model.F2(np.float64(q)))
        return (f1 / f1_at_1) * (1.0 + (2.0 * f2 / f1) * s2 * f * f) * math.sin(t)

    half = quad(integrand, sol.theta0, math.pi / 2.0, epsabs=quad_tol, epsrel=quad_tol, limit=200)[0]
    return 4.0 * math.pi * half


def c_hat(model: EnergyModel, sol: DoubleConeSolution | None = None, n_samples: int = 512) -> float:
    """Ellipticity spread 1 + 2 sup F''/F'(1).

    Power laws use the closed form p - 1 (the supremum pinned at the
    free-boundary gradient); custom models sample |grad u|^2 over the band
    and need the cone solution.
    """
    if model.kind == "power":
        return float(model.p - 1.0)
    if sol is None:
        raise InvalidInputError("custom models need the cone solution to sample the band")
    thetas = np.linspace(sol.theta0, math.pi / 2.0, n_samples)
    f, fd = sol.profile(thetas)
    q = sol.scale**2 * (f * f + fd * fd)
    f2 = np.asarray(model.F2(q), dtype=float)
    return float(1.0 + 2.0 * np.max(f2) / float(model.F1(np.float64(1.0))))


@dataclass(frozen=True)
class StabilityReport:
    """Separated second-variation evaluation for one radial test function."""

    kind: str
    param: float
    bulk: float
    boundary: float
    I: float
    delta_scaled: float
    c_hat: float


def second_variation_cone(
    sol: DoubleConeSolution,
    psi: RadialTestFunction,
    quad_tol: float = 1e-10,
    model: EnergyModel | None = None,
) -> StabilityReport:
    """bulk - boundary for a radial test function on the double cone.

    bulk = [int psi'(rho)^2 rho^2 drho] x angular factor; boundary =
    4 pi cos(theta0) x boundary radial integral (both cones, H = cot(theta0)
    / rho).  For power-law models the verbatim general-F angular factor and
    the pure-power specialization are cross-checked to 1e-10.
    """
    if model is None:
        model = EnergyModel.power_law(sol.p)
    r_bulk, r_bdry = _radial_integrals(psi, quad_tol)
    if psi.kind == "zero":
        angular = 0.0
    elif model.kind == "power":
        angular = _angular_factor_power(sol, quad_tol)
        general = _angular_factor_general(sol, model, quad_tol)
        if abs(angular - general) > 1e-10 * max(1.0, abs(angular)):
            raise AccuracyError(
                f"power/general angular factors disagree: {angular!r} vs {general!r}"
            )
    else:
        angular = _angular_factor_general(sol, model, quad_tol)
    bulk = r_bulk * angular
    boundary = 4.0 * math.pi * math.cos(sol.theta0) * r_bdry
    I = bulk - boundary
    return StabilityReport(
        kind=psi.kind,
        param=psi.param,
        bulk=bulk,
        boundary=boundary,
        I=I,
        delta_scaled=psi.param * I,
        c_hat=c_hat(model, sol),
    )


def bernstein_ratio(eps: float, quad_tol: float = 1e-10) -> float:
    """[int psi'(r)^2 r^2 dr] / [int psi(r)^2 dr] for the r^{-1/2} cutoff profile.

    The core integrands satisfy psi'^2 r^2 = psi^2 / 4 pointwise, so the
    ratio approaches 1/4 as eps -> 0; at finite eps the C^1 cutoff ramps
    contribute O(1) to both integrals (the outer ramp alone adds at least 3
    to the numerator for any C^1 descent from sqrt(2) to 0 on [1/2, 3/4]),
    which dominates until log(1/eps) is far beyond double-precision reach.
    """
    if not 0.0 < eps < 0.125:
        raise InvalidInputError("eps must lie in (0, 1/8)")
    psi = RadialTestFunction.bernstein(eps)
    panels = list(psi.breakpoints())
    num = _quad_panels(lambda r: psi.dpsi(r) ** 2 * r * r, panels, quad_tol)
    den = _quad_panels(lambda r: psi.psi(r) ** 2, panels, quad_tol)
    return num / den


@dataclass(frozen=True)
class FlatnessCriterion:
    """Gauss-Bonnet side (lhs) against the ellipticity-weighted band area (rhs)."""

    lhs: float
    rhs: float
    ratio: float
    admissible: bool
    c_hat: float


def bernstein_flatness_criterion(
    sol: DoubleConeSolution, model: EnergyModel | None = None
) -> FlatnessCriterion:
    """Total geodesic curvature of the free-boundary circles vs (c_hat/4) x band area.

    Both sides carry the common factor 4 pi cos(theta0), so the ratio is
    exactly 4/c_hat; admissible means the double cone passes the stability
    bound (it does not for c_hat < 4, i.e. p < 5 for pure powers).
    """
    if model is None:
        model = EnergyModel.power_law(sol.p)
    geo = sol.geometry()
    ch = c_hat(model, sol)
    lhs = geo.total_sphere_curvature
    rhs = (ch / 4.0) * geo.band_area
    return FlatnessCriterion(
        lhs=lhs, rhs=rhs, ratio=lhs / rhs, admissible=bool(lhs <= rhs), c_hat=ch
    )


def log_test_2d(N: float, c_hat_value: float = 1.0, quad_tol: float = 1e-12) -> float:
    """c_hat x int_{R^2} |grad psi|^2 for the logarithmic cutoff: equals 2 pi c_hat / N.

    Evaluated in the log-radius variable (the profile lives on radii up to
    e^{2N}, far beyond floating-point range for large N) and cross-checked
    against the closed form.
    """
    if not N > 0:
        raise InvalidInputError("N must be positive")
    # |grad psi|^2 r dr = (1/(N r))^2 r dr = dt / N^2 under t = log r
    val, err = quad(lambda t: 1.0 / (N * N), N, 2.0 * N, epsabs=quad_tol, epsrel=quad_tol)
    out = 2.0 * math.pi * c_hat_value * val
    closed = 2.0 * math.pi * c_hat_value / N
    if abs(out - closed) > 1e-10 * max(1.0, abs(closed)):
        raise AccuracyError(f"log cutoff quadrature {out!r} disagrees with closed form {closed!r}")
    return out


def fb_normal_derivative(sol: DoubleConeSolution, psi: RadialTestFunction, rho: float) -> float:
    """Normal derivative of a radial test function on the free-boundary cone.

    -(grad u / |grad u|) . grad psi = -psi'(rho) f(theta0) / sqrt(f^2 + f'^2);
    vanishes because f(theta0) = 0.
    """
    if rho <= 0:
        raise InvalidInputError("rho must be positive")
    f0, fd0 = sol.profile(sol.theta0)
    f0, fd0 = float(f0), float(fd0)
    return -float(psi.dpsi(rho)) * f0 / math.hypot(f0, fd0)


def inverse_field_fd_divergence(sol: DoubleConeSolution, x, h: float) -> float:
    """Central-difference div(|grad u|^{p-2} grad(1/|x|)) away from the origin.

    Vanishes identically in the continuum (the weight is 0-homogeneous and
    angular while grad(1/|x|) is radial and divergence-free), so the value
    measures pure discretization error, O(h^2).
    """
    x = np.asarray(x, dtype=float)

    def field(pt):
        g = sol.grad(pt)
        mod = float(np.linalg.norm(g))
        rho = float(np.linalg.norm(pt))
        return mod ** (sol.p - 2.0) * (-pt / rho**3)

    total = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        total += (field(x + e)[i] - field(x - e)[i]) / (2.0 * h)
    return abs(total)
