"""Derivative-free maximization: downhill simplex and golden-section search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import NonFiniteObjective

# classical reflection, expansion, contraction, shrink coefficients
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5
_MAX_PLATEAU_GROWTH = 2.0**20


@dataclass(frozen=True)
class OptConfig:
    max_evals: int = 20000
    x_tol: float = 1e-6
    f_tol: float = 1e-8
    initial_step: Union[float, Sequence[float]] = 0.1
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass
class OptResult:
    argmax: np.ndarray
    value: float
    evals: int
    converged: bool
    # worst simplex value of f after every iteration, all runs concatenated
    worst_trace: list = field(default_factory=list, repr=False)


class _Budget(Exception):
    pass


class _Counter:
    def __init__(self, f, budget):
        self.f = f
        self.budget = budget
        self.n = 0

    def __call__(self, x):
        if self.n >= self.budget:
            raise _Budget
        self.n += 1
        v = float(self.f(x))
        # minimize the negated objective; NaN and -inf are the worst possible values
        return -v if np.isfinite(v) or v == np.inf else np.inf


def _shrink(g, pts, vals, max_halvings=64):
    """Pull every vertex halfway to the best one (``pts[0]``), in place.

    A vertex that lands above the previous worst value (possible when ``-f``
    is not convex) is halved again until it does not, so the worst value
    never increases; after ``max_halvings`` it collapses onto the best vertex.
    """
    worst = vals[-1]
    for i in range(1, pts.shape[0]):
        d = pts[i] - pts[0]
        for _ in range(max_halvings):
            d = SIGMA * d
            v = g(pts[0] + d)
            if v <= worst:
                break
        else:
            d, v = np.zeros_like(d), vals[0]
        pts[i], vals[i] = pts[0] + d, v


def _simplex_run(f, x0, fx0, step, cfg, trace, start_evals):
    """One Nelder-Mead run on ``-f``.  Returns (x, -f(x), evals, converged).

    ``start_evals`` (0 or 1) is the evaluation already spent on ``x0``.
    """
    n = x0.size
    g = _Counter(f, cfg.max_evals - start_evals)
    growth = 1.0
    seen_slope = False
    best_x, best_v = x0.copy(), -fx0

    def build(center, center_val, scale):
        pts = np.tile(center, (n + 1, 1))
        pts[1:] += np.diag(step * scale)
        vals = np.empty(n + 1)
        vals[0] = center_val
        for i in range(1, n + 1):
            vals[i] = g(pts[i])
        return pts, vals

    try:
        pts, vals = build(x0, -fx0, 1.0)
        while True:
            order = np.argsort(vals, kind="stable")
            pts, vals = pts[order], vals[order]
            best_x, best_v = pts[0].copy(), vals[0]
            trace.append(-vals[-1])
            diameter = np.max(np.linalg.norm(pts[1:] - pts[0], axis=1))
            spread = vals[-1] - vals[0]
            if diameter < cfg.x_tol and spread < cfg.f_tol:
                return best_x, best_v, g.n + start_evals, True
            flat = spread == 0 and np.all(np.isfinite(vals)) or np.all(vals == np.inf)
            if flat and not seen_slope:
                # flat from the start: shrinking cannot help, grow the simplex to look past the plateau
                growth = min(2 * growth, _MAX_PLATEAU_GROWTH)
                pts, vals = build(pts[0], vals[0], growth)
                continue
            seen_slope = True
            if flat:
                # values agree to the last bit near an optimum: only the diameter test is left
                _shrink(g, pts, vals)
                continue
            centroid = pts[:-1].mean(axis=0)
            xr = centroid + ALPHA * (centroid - pts[-1])
            fr = g(xr)
            if fr < vals[0]:
                xe = centroid + GAMMA * (xr - centroid)
                fe = g(xe)
                pts[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < vals[-2]:
                pts[-1], vals[-1] = xr, fr
                continue
            if fr < vals[-1]:
                xc = centroid + RHO * (xr - centroid)
                fc = g(xc)
                if fc <= fr:
                    pts[-1], vals[-1] = xc, fc
                    continue
            else:
                xc = centroid + RHO * (pts[-1] - centroid)
                fc = g(xc)
                if fc < vals[-1]:
                    pts[-1], vals[-1] = xc, fc
                    continue
            _shrink(g, pts, vals)
    except _Budget:
        if "vals" in locals():
            i = int(np.argmin(vals))
            if vals[i] < best_v:
                best_x, best_v = pts[i].copy(), vals[i]
        return best_x, best_v, g.n + start_evals, False


def nelder_mead_maximize(f: Callable[[np.ndarray], float], x0, cfg: OptConfig = OptConfig()) -> OptResult:
    """Maximize ``f`` with the downhill simplex method.

    The initial simplex is axis-aligned around ``x0`` with ``cfg.initial_step``.
    A run converges when the simplex diameter drops below ``x_tol`` and the
    spread of vertex values below ``f_tol``; if every vertex has exactly the
    same value the simplex is regrown instead of shrunk (a plateau carries no
    information).  A simplex that turns flat after having seen differing
    values has hit rounding level and is shrunk until the diameter test
    passes.  After each run the simplex is rebuilt at the incumbent,
    ``cfg.restarts`` times, each run with its own ``max_evals`` budget; the
    restarts stop early once a converged run no longer improves by ``f_tol``.
    """
    x0 = np.array(x0, dtype=float).ravel()
    if cfg.max_evals < x0.size + 1:
        raise ValueError("max_evals must be at least dimension + 1")
    fx0 = float(f(x0))
    if not np.isfinite(fx0):
        raise NonFiniteObjective(f"objective is {fx0} at the starting point")
    step = np.broadcast_to(np.asarray(cfg.initial_step, dtype=float), x0.shape).copy()
    x, fx = x0, fx0
    evals = 0
    trace: list = []
    converged = False
    for run in range(cfg.restarts + 1):
        xn, gn, used, converged = _simplex_run(f, x, fx, step, cfg, trace, 1 if run == 0 else 0)
        evals += used
        improved = -gn - fx
        if -gn >= fx:
            x, fx = xn, -gn
        if converged and improved < cfg.f_tol:
            break
    return OptResult(x, fx, evals, converged, trace)


_INV_PHI = (np.sqrt(5) - 1) / 2


def maximize_scalar(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section search on ``[lo, hi]``; returns the midpoint of the final bracket.

    Assumes ``f`` is unimodal on the interval.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
