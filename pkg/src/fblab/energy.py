"""Energy densities F(|grad u|^2) and the scalar constants of the gradient jump condition.

A model bundles F, F', F'' (in the variable t = |grad u|^2) together with the
area weight lambda.  The free-boundary gradient modulus lambda_star solves

    2 F'(s^2) s^2 - F(s^2) = lambda^2,

and a model is *normalized* when lambda^2 = 2 F'(1) - F(1), which places
lambda_star exactly at 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NumericalDomainError, RootNotFoundError

__all__ = [
    "EnergyModel",
    "BernoulliConstants",
    "StructuralReport",
    "check_structural",
    "lambda_star",
    "normalized_lambda_sq",
    "model_from_descriptor",
    "register_custom_model",
]

ScalarMap = Callable[[np.ndarray], np.ndarray]


def _power_map(coef: float, expo: float) -> ScalarMap:
    """c * t**e with the conventions 0**0 = 1 and 0 * t**(e<0) = 0."""

    def f(t):
        t = np.asarray(t, dtype=float)
        if coef == 0.0:
            return np.zeros_like(t)
        with np.errstate(divide="ignore"):
            return coef * t**expo

    return f


@dataclass(frozen=True)
class EnergyModel:
    """Integrand F(t) with derivatives, t = |grad u|^2, plus the area weight.

    F, F1, F2 must accept numpy arrays.  ``lam`` is the lambda of the area
    term lambda^2 |{u > 0}|.
    """

    F: ScalarMap
    F1: ScalarMap
    F2: ScalarMap
    lam: float = 1.0
    kind: str = "custom"
    p: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise InvalidInputError("lambda must be a positive real")

    @staticmethod
    def power_law(p: float, lam: float = 1.0) -> "EnergyModel":
        """F(t) = t**(p/2); requires p > 1."""
        if not p > 1.0:
            raise InvalidInputError("p must exceed 1")
        half = p / 2.0
        return EnergyModel(
            F=_power_map(1.0, half),
            F1=_power_map(half, half - 1.0),
            F2=_power_map(half * (half - 1.0), half - 2.0),
            lam=lam,
            kind="power",
            p=float(p),
        )

    @staticmethod
    def custom(F: ScalarMap, F1: ScalarMap, F2: ScalarMap, lam: float = 1.0) -> "EnergyModel":
        """Custom model; all three maps must be supplied (no automatic differentiation)."""
        return EnergyModel(F=F, F1=F1, F2=F2, lam=lam, kind="custom", p=None)

    def normalized(self) -> "EnergyModel":
        """Copy of the model with lambda^2 = 2 F'(1) - F(1), so lambda_star = 1."""
        lam_sq = normalized_lambda_sq(self)
        if lam_sq <= 0:
            raise InvalidInputError("2 F'(1) - F(1) must be positive to normalize")
        return replace(self, lam=float(np.sqrt(lam_sq)))

    @property
    def is_normalized(self) -> bool:
        lam_sq = normalized_lambda_sq(self)
        return abs(self.lam**2 - lam_sq) <= 1e-12 * max(1.0, abs(lam_sq))


@dataclass(frozen=True)
class BernoulliConstants:
    """lambda^2 together with the free-boundary gradient modulus it induces."""

    lambda_sq: float
    lambda_star: float
    normalized: bool


@dataclass(frozen=True)
class StructuralReport:
    """Ellipticity constants sampled on [0, t_max]; pure powers with p != 2 only
    satisfy the two-sided bounds on t-ranges bounded away from 0 and infinity,
    so the interval is part of the report."""

    c0: float
    C0: float
    passes: bool
    t_max: float
    n_samples: int


def check_structural(model: EnergyModel, t_max: float, n_samples: int) -> StructuralReport:
    """Sample F', F'' on [0, t_max] and report the structural-condition constants.

    c0 = min F', C0 = max of max(F'(t), F''(t)*(1+t)); passes requires c0 > 0
    and F'' >= 0 at every sample.
    """
    if not (t_max > 0):
        raise InvalidInputError("t_max must be positive")
    if n_samples < 2:
        raise InvalidInputError("n_samples must be at least 2")
    t = np.linspace(0.0, t_max, n_samples)
    f0 = np.asarray(model.F(t), dtype=float)
    f1 = np.asarray(model.F1(t), dtype=float)
    f2 = np.asarray(model.F2(t), dtype=float)
    if not (np.all(np.isfinite(f0)) and np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
        raise NumericalDomainError(
            f"non-finite F, F' or F'' value on [0, {t_max}]"
        )
    c0 = float(np.min(f1))
    C0 = float(np.max(np.maximum(f1, f2 * (1.0 + t))))
    passes = bool(c0 > 0.0 and np.all(f2 >= 0.0))
    return StructuralReport(c0=c0, C0=C0, passes=passes, t_max=float(t_max), n_samples=int(n_samples))


def normalized_lambda_sq(model: EnergyModel) -> float:
    """The lambda^2 that pins the free-boundary gradient at 1: 2 F'(1) - F(1)."""
    return float(2.0 * model.F1(np.float64(1.0)) - model.F(np.float64(1.0)))


def _bernoulli_gap(model: EnergyModel, s: float) -> float:
    """g(s) = 2 F'(s^2) s^2 - F(s^2) - lambda^2; strictly increasing for F' > 0, F'' >= 0."""
    t = s * s
    return float(2.0 * model.F1(np.float64(t)) * t - model.F(np.float64(t)) - model.lam**2)


def _bernoulli_gap_prime(model: EnergyModel, s: float) -> float:
    t = s * s
    return float(4.0 * s * t * model.F2(np.float64(t)) + 2.0 * s * model.F1(np.float64(t)))


def _bracket(model: EnergyModel) -> tuple[float, float]:
    lo, hi = 1e-8, max(10.0, 10.0 * model.lam)
    if _bernoulli_gap(model, lo) > 0.0 or _bernoulli_gap(model, hi) < 0.0:
        raise RootNotFoundError(
            f"no sign change of the Bernoulli relation on [{lo}, {hi}]"
        )
    return lo, hi


def _solve_bisection(model: EnergyModel, rel_tol: float = 1e-12) -> float:
    lo, hi = _bracket(model)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _bernoulli_gap(model, mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_newton(model: EnergyModel, rel_tol: float = 1e-12, max_iter: int = 100) -> float:
    lo, hi = _bracket(model)
    s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = _bernoulli_gap(model, s)
        if g <= 0.0:
            lo = s
        else:
            hi = s
        gp = _bernoulli_gap_prime(model, s)
        step = g / gp if gp > 0 else np.inf
        s_new = s - step
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)  # safeguarded fallback
        if abs(s_new - s) <= rel_tol * abs(s_new):
            return s_new
        s = s_new
    return s


def lambda_star(model: EnergyModel, method: str = "auto") -> BernoulliConstants:
    """Solve 2 F'(s^2) s^2 - F(s^2) = lambda^2 for the gradient modulus s.

    Power-law models use the closed form s = (lambda^2/(p-1))**(1/p); custom
    models fall back to bracketing plus safeguarded Newton (``method`` may
    force "bisect" or "newton" for cross-checking).
    """
    lam_sq = model.lam**2
    if method == "auto" and model.kind == "power":
        s = (lam_sq / (model.p - 1.0)) ** (1.0 / model.p)
    elif method in ("auto", "newton"):
        s = _solve_newton(model)
    elif method == "bisect":
        s = _solve_bisection(model)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    normalized = abs(lam_sq - normalized_lambda_sq(model)) <= 1e-12 * max(1.0, lam_sq)
    return BernoulliConstants(lambda_sq=float(lam_sq), lambda_star=float(s), normalized=normalized)


_CUSTOM_REGISTRY: dict[str, tuple[ScalarMap, ScalarMap, ScalarMap]] = {}


def register_custom_model(name: str, F: ScalarMap, F1: ScalarMap, F2: ScalarMap) -> None:
    """Make a custom model reachable from JSON descriptors under ``name``."""
    _CUSTOM_REGISTRY[name] = (F, F1, F2)


def model_from_descriptor(desc: dict) -> EnergyModel:
    """Build a model from a JSON descriptor.

    {"kind": "power", "p": 3.0, "lambda": 1.0} or
    {"kind": "custom", "name": "<registered>", "lambda": 1.0}; custom names
    must have been registered programmatically first.
    """
    if not isinstance(desc, dict):
        raise InvalidInputError("model descriptor must be a JSON object")
    known = {"kind", "p", "lambda", "name"}
    unknown = set(desc) - known
    if unknown:
        raise InvalidInputError(f"unknown model descriptor keys: {sorted(unknown)}")
    kind = desc.get("kind")
    lam = float(desc.get("lambda", 1.0))
    if kind == "power":
        if "p" not in desc:
            raise InvalidInputError("power model descriptor requires 'p'")
        return EnergyModel.power_law(float(desc["p"]), lam=lam)
    if kind == "custom":
        name = desc.get("name")
        if name not in _CUSTOM_REGISTRY:
            raise InvalidInputError(
                "custom models are rejected unless registered programmatically"
            )
        F, F1, F2 = _CUSTOM_REGISTRY[name]
        return EnergyModel.custom(F, F1, F2, lam=lam)
    raise InvalidInputError(f"unknown model kind {kind!r}")
