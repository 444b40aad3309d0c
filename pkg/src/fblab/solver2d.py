"""2-d grid minimization of the two-phase energy with Dirichlet data.

The discrete functional is a cell sum

    E(u) = sum_cells h^2 [ F(|grad u|^2_cell) + lambda^2 chi_eps(u_cell) ],

with bilinear cell gradients and chi_eps(s) = clamp(s/eps, 0, 1) during the
smoothed continuation stages (hard indicator for eps = 0 and for reporting).
Minimization is projected gradient descent (clamp to u >= 0, Dirichlet nodes
pinned) with backtracking line search, continued over a decreasing sequence
of smoothing widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyModel, lambda_star, model_from_descriptor
from .errors import InvalidInputError, StepSizeFailureError

__all__ = [
    "Grid2DState",
    "Schedule",
    "FreeBoundaryPolyline",
    "energy",
    "energy_gradient",
    "minimize",
    "extract_fb",
    "bernoulli_residual",
    "state_from_config",
]


@dataclass
class Grid2DState:
    """Nonnegative field on an (ny, nx) node grid with spacing h.

    Boundary nodes flagged in dirichlet_mask stay equal to dirichlet_values;
    u[i, j] sits at (x, y) = (j h, i h).
    """

    u: np.ndarray
    h: float
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray
    model: EnergyModel
    smoothing_eps: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.dirichlet_mask = np.asarray(self.dirichlet_mask, dtype=bool)
        self.dirichlet_values = np.asarray(self.dirichlet_values, dtype=float)
        if self.u.shape != self.dirichlet_mask.shape or self.u.shape != self.dirichlet_values.shape:
            raise InvalidInputError("u, dirichlet_mask, dirichlet_values must share a shape")
        if np.any(self.u < 0):
            raise InvalidInputError("u must be nonnegative")
        if np.any(self.dirichlet_values[self.dirichlet_mask] < 0):
            raise InvalidInputError("Dirichlet data must be nonnegative")
        self.u[self.dirichlet_mask] = self.dirichlet_values[self.dirichlet_mask]

    @property
    def ny(self) -> int:
        return self.u.shape[0]

    @property
    def nx(self) -> int:
        return self.u.shape[1]

    def copy(self) -> "Grid2DState":
        return Grid2DState(
            u=self.u.copy(),
            h=self.h,
            dirichlet_mask=self.dirichlet_mask.copy(),
            dirichlet_values=self.dirichlet_values.copy(),
            model=self.model,
            smoothing_eps=self.smoothing_eps,
        )


@dataclass(frozen=True)
class Schedule:
    """Continuation schedule: decreasing smoothing widths, per-stage iteration cap."""

    eps_sequence: tuple
    iters_per_stage: int = 500
    step0: float = 1.0
    step_min: float = 1e-14

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_sequence)
        if len(eps) == 0:
            raise InvalidInputError("eps_sequence must be nonempty")
        if any(e < 0 for e in eps):
            raise InvalidInputError("smoothing widths must be >= 0")
        if list(eps) != sorted(eps, reverse=True):
            raise InvalidInputError("eps_sequence must be decreasing")
        object.__setattr__(self, "eps_sequence", eps)


def _cell_fields(u: np.ndarray, h: float):
    u00 = u[:-1, :-1]
    u01 = u[:-1, 1:]
    u10 = u[1:, :-1]
    u11 = u[1:, 1:]
    ux = (u01 + u11 - u00 - u10) / (2.0 * h)
    uy = (u10 + u11 - u00 - u01) / (2.0 * h)
    mean = 0.25 * (u00 + u01 + u10 + u11)
    return ux, uy, mean


def _chi(mean: np.ndarray, eps: float) -> np.ndarray:
    if eps <= 0.0:
        return (mean > 0.0).astype(float)
    return np.clip(mean / eps, 0.0, 1.0)


def energy(state: Grid2DState, smoothing_eps: float | None = None) -> float:
    """Discrete two-phase energy; smoothing_eps = None evaluates the hard indicator."""
    eps = 0.0 if smoothing_eps is None else float(smoothing_eps)
    ux, uy, mean = _cell_fields(state.u, state.h)
    g = ux * ux + uy * uy
    fvals = np.asarray(state.model.F(g), dtype=float)
    lam_sq = state.model.lam**2
    return float(state.h**2 * np.sum(fvals + lam_sq * _chi(mean, eps)))


def energy_gradient(state: Grid2DState, smoothing_eps: float) -> np.ndarray:
    """Gradient of the smoothed energy wrt nodal values; zero on Dirichlet nodes."""
    h = state.h
    u = state.u
    ux, uy, mean = _cell_fields(u, h)
    g = ux * ux + uy * uy
    f1 = np.asarray(state.model.F1(g), dtype=float)
    lam_sq = state.model.lam**2
    a = h * f1 * ux  # h^2 * F'(g) * 2 ux * (1/(2h))
    b = h * f1 * uy
    eps = float(smoothing_eps)
    if eps > 0.0:
        chi_prime = ((mean > 0.0) & (mean < eps)).astype(float) / eps
    else:
        chi_prime = np.zeros_like(mean)
    c = 0.25 * h * h * lam_sq * chi_prime
    grad = np.zeros_like(u)
    grad[:-1, :-1] += -a - b + c
    grad[:-1, 1:] += a - b + c
    grad[1:, :-1] += -a + b + c
    grad[1:, 1:] += a + b + c
    grad[state.dirichlet_mask] = 0.0
    return grad


def _project(state: Grid2DState, u: np.ndarray) -> np.ndarray:
    u = np.maximum(u, 0.0)
    u[state.dirichlet_mask] = state.dirichlet_values[state.dirichlet_mask]
    return u


def minimize(state: Grid2DState, schedule: Schedule) -> Grid2DState:
    """Projected gradient descent with continuation over the smoothing widths.

    The smoothed energy decreases monotonically within each stage (asserted;
    StepSizeFailureError on violation); the returned state carries the last
    smoothing width, and callers report the hard energy via ``energy``.
    """
    out = state.copy()
    for eps in schedule.eps_sequence:
        out.smoothing_eps = eps
        e_cur = energy(out, eps)
        e_stage_start = e_cur
        step = schedule.step0
        for _ in range(schedule.iters_per_stage):
            grad = energy_gradient(out, eps)
            gnorm = float(np.max(np.abs(grad)))
            if gnorm == 0.0:
                break
            accepted = False
            while step >= schedule.step_min:
                trial = _project(out, out.u - step * grad)
                e_trial = energy(
                    Grid2DState(
                        u=trial,
                        h=out.h,
                        dirichlet_mask=out.dirichlet_mask,
                        dirichlet_values=out.dirichlet_values,
                        model=out.model,
                        smoothing_eps=eps,
                    ),
                    eps,
                )
                if e_trial < e_cur:
                    out.u = trial
                    e_cur = e_trial
                    accepted = True
                    step *= 2.0
                    break
                step *= 0.5
            if not accepted:
                break  # converged at line-search resolution
        if e_cur > e_stage_start + 1e-12:
            raise StepSizeFailureError(
                f"energy increased within a stage: {e_stage_start!r} -> {e_cur!r}"
            )
    return out


@dataclass
class FreeBoundaryPolyline:
    """Marching-squares contour of {u = threshold h} with per-sample |grad u|.

    points: list of (k, 2) arrays in physical (x, y); grad_modulus matches
    pointwise.  all_positive flags a contour-free, everywhere-positive field.
    """

    points: list
    grad_modulus: list
    level: float
    all_positive: bool = False

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def length(self) -> float:
        total = 0.0
        for poly in self.points:
            total += float(np.sum(np.linalg.norm(np.diff(poly, axis=0), axis=1)))
        return total

    def all_samples(self):
        if self.is_empty:
            return np.zeros((0, 2)), np.zeros(0)
        return np.vstack(self.points), np.concatenate(self.grad_modulus)


def _one_sided_modulus(u: np.ndarray, i: int, j: int, h: float) -> float:
    """|grad u| at a node from uphill one-sided differences (into the positive set)."""
    ny, nx = u.shape
    jl, jr = max(j - 1, 0), min(j + 1, nx - 1)
    if u[i, jl] >= u[i, jr]:
        ux = (u[i, j] - u[i, jl]) / h if jl != j else (u[i, jr] - u[i, j]) / h
    else:
        ux = (u[i, jr] - u[i, j]) / h if jr != j else (u[i, j] - u[i, jl]) / h
    il, ir = max(i - 1, 0), min(i + 1, ny - 1)
    if u[il, j] >= u[ir, j]:
        uy = (u[i, j] - u[il, j]) / h if il != i else (u[ir, j] - u[i, j]) / h
    else:
        uy = (u[ir, j] - u[i, j]) / h if ir != i else (u[i, j] - u[il, j]) / h
    return math.hypot(ux, uy)


def extract_fb(state: Grid2DState, threshold: float = 1.0) -> FreeBoundaryPolyline:
    """Marching-squares free boundary at level = threshold * h.

    Contour points sit on cell edges by linear interpolation and are chained
    into ordered polylines on the edge graph; the gradient modulus is sampled
    at the adjacent node one stencil inside {u > level}.  An everywhere-
    positive field returns an empty polyline with the all_positive flag.
    """
    u = state.u
    h = state.h
    level = threshold * h
    inside = u > level
    if inside.all():
        return FreeBoundaryPolyline([], [], level, all_positive=True)
    if not inside.any():
        return FreeBoundaryPolyline([], [], level, all_positive=False)

    ny, nx = u.shape
    # edge ids: ("h", i, j) between (i,j)-(i,j+1); ("v", i, j) between (i,j)-(i+1,j)
    segments = []
    for i in range(ny - 1):
        for j in range(nx - 1):
            vals = [u[i, j], u[i, j + 1], u[i + 1, j + 1], u[i + 1, j]]
            flags = [v > level for v in vals]
            if all(flags) or not any(flags):
                continue
            # cell edges in order: bottom (i, j)-(i, j+1), right, top, left
            edge_defs = [
                (("h", i, j), vals[0], vals[1]),
                (("v", i, j + 1), vals[1], vals[2]),
                (("h", i + 1, j), vals[3], vals[2]),
                (("v", i, j), vals[0], vals[3]),
            ]
            crossings = []
            for eid, va, vb in edge_defs:
                if (va > level) != (vb > level):
                    crossings.append(eid)
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                center = 0.25 * sum(vals)
                # pair edges so the positive phase stays connected through the cell
                if (center > level) == flags[0]:
                    segments.append((edge_defs[3][0], edge_defs[0][0]))
                    segments.append((edge_defs[1][0], edge_defs[2][0]))
                else:
                    segments.append((edge_defs[0][0], edge_defs[1][0]))
                    segments.append((edge_defs[2][0], edge_defs[3][0]))

    def edge_point(eid):
        kind, i, j = eid
        if kind == "h":
            va, vb = u[i, j], u[i, j + 1]
            t = (level - va) / (vb - va)
            return np.array([(j + t) * h, i * h])
        va, vb = u[i, j], u[i + 1, j]
        t = (level - va) / (vb - va)
        return np.array([j * h, (i + t) * h])

    def inside_node(eid):
        kind, i, j = eid
        if kind == "h":
            return (i, j) if u[i, j] > level else (i, j + 1)
        return (i, j) if u[i, j] > level else (i + 1, j)

    adjacency: dict = {}
    for a, b in segments:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)

    visited = set()
    chains = []
    # open chains first (endpoints of degree 1), then closed loops
    starts = [e for e, nb in adjacency.items() if len(nb) == 1]
    starts += [e for e in adjacency if len(adjacency[e]) > 1]
    for start in starts:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        cur = start
        while True:
            nxt = [e for e in adjacency[cur] if e not in visited]
            if not nxt:
                # close the loop when it returns to the start
                if start in adjacency[cur] and len(chain) > 2:
                    chain.append(start)
                break
            cur = nxt[0]
            visited.add(cur)
            chain.append(cur)
        if len(chain) >= 2:
            chains.append(chain)

    points, moduli = [], []
    for chain in chains:
        pts = np.array([edge_point(e) for e in chain])
        gm = np.array([_one_sided_modulus(u, *inside_node(e), h) for e in chain])
        points.append(pts)
        moduli.append(gm)
    return FreeBoundaryPolyline(points, moduli, level, all_positive=False)


def bernoulli_residual(state: Grid2DState, fb: FreeBoundaryPolyline) -> dict:
    """max and mean of | |grad u| - lambda_star | along the extracted boundary."""
    if fb.is_empty:
        raise InvalidInputError("bernoulli_residual requires a non-empty polyline")
    lam_star = lambda_star(state.model).lambda_star
    _, gm = fb.all_samples()
    res = np.abs(gm - lam_star)
    return {"max": float(res.max()), "mean": float(res.mean())}


def _dirichlet_preset(name: str, nx: int, ny: int, h: float, lam_star: float):
    """Named boundary data; returns (mask, values, initial field)."""
    x = np.arange(nx) * h
    y = np.arange(ny) * h
    X, _ = np.meshgrid(x, y, indexing="xy")
    mask = np.zeros((ny, nx), dtype=bool)
    mask[0, :] = mask[-1, :] = True
    mask[:, 0] = mask[:, -1] = True
    if name == "zero":
        full = np.zeros((ny, nx))
    elif name.startswith("constant:"):
        M = float(name.split(":", 1)[1])
        if M < 0:
            raise InvalidInputError("constant preset must be nonnegative")
        full = np.full((ny, nx), M)
    elif name.startswith("slab:"):
        a = float(name.split(":", 1)[1])
        full = lam_star * np.maximum(a - X, 0.0)
    else:
        raise InvalidInputError(f"unknown dirichlet preset {name!r}")
    values = np.where(mask, full, 0.0)
    return mask, values, full


def state_from_config(cfg: dict) -> tuple[Grid2DState, Schedule, float]:
    """Build (state, schedule, fb threshold) from a config mapping.

    Keys: nx, ny, model (descriptor), lambda_mode ("normalized" |
    "explicit"), dirichlet (named preset), schedule, threshold.  The initial
    interior field is the preset formula itself, so minimization starts from
    the injected candidate.
    """
    known = {"nx", "ny", "model", "lambda_mode", "dirichlet", "schedule", "threshold"}
    unknown = set(cfg) - known
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    try:
        nx, ny = int(cfg["nx"]), int(cfg["ny"])
        model_desc = cfg["model"]
        dirichlet = cfg["dirichlet"]
    except KeyError as err:
        raise InvalidInputError(f"config missing key {err}") from err
    if nx < 3 or ny < 3:
        raise InvalidInputError("nx and ny must be at least 3")
    model = model_from_descriptor(model_desc)
    mode = cfg.get("lambda_mode", "explicit")
    if mode == "normalized":
        model = model.normalized()
    elif mode != "explicit":
        raise InvalidInputError("lambda_mode must be 'normalized' or 'explicit'")
    h = 1.0 / (nx - 1)
    lam_star = lambda_star(model).lambda_star
    mask, values, full = _dirichlet_preset(dirichlet, nx, ny, h, lam_star)
    sched_cfg = dict(cfg.get("schedule", {}))
    unknown = set(sched_cfg) - {"eps_sequence", "iters_per_stage", "step0"}
    if unknown:
        raise InvalidInputError(f"unknown schedule keys: {sorted(unknown)}")
    eps_seq = sched_cfg.get("eps_sequence", (4.0 * h, h, 0.0))
    schedule = Schedule(
        eps_sequence=tuple(eps_seq),
        iters_per_stage=int(sched_cfg.get("iters_per_stage", 500)),
        step0=float(sched_cfg.get("step0", 1.0)),
    )
    state = Grid2DState(
        u=full,
        h=h,
        dirichlet_mask=mask,
        dirichlet_values=values,
        model=model,
        smoothing_eps=schedule.eps_sequence[0],
    )
    threshold = float(cfg.get("threshold", 1.0))
    return state, schedule, threshold
