"""Low-dimensional ML estimation: Gaussian-state parameters and detector quantum efficiency."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegeneratePhases, ReferenceUnidentifiable, UnphysicalParams
from .optimize import OptConfig, maximize_scalar, nelder_mead_maximize
from .povm import (
    ClickSummary,
    HomodyneData,
    gaussian_homodyne_logpdf,
    squeezed_homodyne_density,
    squeezed_reference_variance,
)
from .states import DensityMatrix, GaussianParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhotonNumbers:
    n_th: float
    n_sq: float
    n_coh: float

    @property
    def total(self) -> float:
        return self.n_th + self.n_sq + self.n_coh


@dataclass
class EfficiencyEstimate:
    eta_ml: float
    sigma: float
    n_used: int
    fisher: float = float("nan")
    flags: tuple = ()
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eta_ml": self.eta_ml,
            "sigma": self.sigma,
            "n_used": self.n_used,
            "fisher": self.fisher,
            "flags": list(self.flags),
            "details": self.details,
        }


def cramer_rao_sigma(F: float, n: int) -> float:
    """Smallest standard deviation ``1/sqrt(n F)`` an unbiased estimator can reach."""
    if not F > 0 or n < 1:
        raise ValueError("need F > 0 and n >= 1")
    return float(1 / np.sqrt(n * F))


# --- Gaussian states -----------------------------------------------------


def params_to_photon_numbers(p: GaussianParams) -> PhotonNumbers:
    if p.delta > 1 + 1e-12:
        raise UnphysicalParams(f"delta = {p.delta} > 1 means negative thermal photons")
    n_th = max(0.5 * (1 / p.delta**2 - 1), 0.0)
    n_sq = (1 + p.kappa**2) / (4 * p.kappa) - 0.5
    return PhotonNumbers(n_th, n_sq, p.a**2 + p.b**2)


def gaussian_log_likelihood(p: GaussianParams, data: HomodyneData, eta: float) -> float:
    return float(np.sum(gaussian_homodyne_logpdf(p, data.phase, eta, data.x)))


def _to_params(theta) -> GaussianParams:
    # delta = 1/sqrt(1 + u^2) keeps the state physical, kappa = e^k keeps it positive
    u, k, a, b = theta
    return GaussianParams(float(1 / np.sqrt(1 + u * u)), float(np.exp(k)), float(a), float(b))


def _moment_start(data: HomodyneData, eta: float) -> np.ndarray:
    c, s = np.cos(data.phase), np.sin(data.phase)
    design = np.column_stack([c, s])
    coef, *_ = np.linalg.lstsq(design, data.x, rcond=None)
    resid2 = (data.x - design @ coef) ** 2
    c2, s2 = np.cos(2 * data.phase), np.sin(2 * data.phase)
    vcoef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(c2), c2, s2]), resid2, rcond=None)
    total = 2 * (vcoef[0] - (1 - eta) / 4) / eta
    diff = 2 * vcoef[1] / eta
    vx = max((total + diff) / 2, 1e-3)
    vy = max((total - diff) / 2, 1e-3)
    delta = min((16 * vx * vy) ** -0.25, 1.0)
    u = np.sqrt(max(1 / delta**2 - 1, 0.0))
    return np.array([u, 0.5 * np.log(vx / vy), coef[0] / np.sqrt(eta), coef[1] / np.sqrt(eta)])


DEFAULT_GAUSSIAN_CONFIG = OptConfig(max_evals=20000, x_tol=1e-9, f_tol=1e-9, initial_step=0.05, restarts=2)


def estimate_gaussian(data: HomodyneData, eta: float, cfg: OptConfig = DEFAULT_GAUSSIAN_CONFIG):
    """ML estimate of ``(delta, kappa, a, b)`` from homodyne records at several phases.

    The simplex runs over ``(u, log kappa, a, b)`` with ``delta = 1/sqrt(1+u^2)``,
    starting from a moment fit of the phase-dependent mean and variance.
    Returns ``(GaussianParams, PhotonNumbers)``.
    """
    if len(data) == 0:
        raise ValueError("no records")
    if np.unique(np.mod(data.phase, 2 * np.pi)).size < 3:
        raise DegeneratePhases("need at least 3 distinct LO phases to identify kappa")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    res = nelder_mead_maximize(lambda th: gaussian_log_likelihood(_to_params(th), data, eta), _moment_start(data, eta), cfg)
    p = _to_params(res.argmax)
    log.info("gaussian estimate %s after %d evals (converged=%s)", p, res.evals, res.converged)
    return p, params_to_photon_numbers(p)


# --- linear detectors ----------------------------------------------------

ETA_FLOOR = 1e-6


def linear_log_likelihood(eta, x0: float, r: float, mean_x: float, mean_x2: float, n: int):
    """Exact Gaussian log-likelihood of the reference model from sufficient statistics."""
    var = squeezed_reference_variance(r, eta)
    sq = mean_x2 - 2 * eta * x0 * mean_x + (eta * x0) ** 2
    return -0.5 * n * (np.log(2 * np.pi * var) + sq / var)


def _centered_linear_log_likelihood(eta, x0, r, mean_x, var_x, n):
    # linear_log_likelihood + n/2 (log(2 pi var_x) + 1), with t = var(eta)/var_x:
    # log t + 1/t - 1 is evaluated as log1p(u) - u/(1+u), u = t - 1, which
    # stays accurate where the raw O(n) terms cancel
    var = squeezed_reference_variance(r, eta)
    u = var / var_x - 1
    return -0.5 * n * (np.log1p(u) - u / (1 + u) + (mean_x - eta * x0) ** 2 / var)


def fisher_numeric(density, eta: float, x_lo: float, x_hi: float, rel_step: float = 1e-5, n_grid: int = 20001) -> float:
    """``int (d p/d eta)^2 / p dx`` with a central difference in ``eta`` and trapezoid in ``x``."""
    h = rel_step * max(eta, 1e-3)
    x = np.linspace(x_lo, x_hi, n_grid)
    p = density(eta, x)
    dp = (density(eta + h, x) - density(eta - h, x)) / (2 * h)
    integrand = np.where(p > 0, dp**2 / np.where(p > 0, p, 1), 0.0)
    return float(np.trapezoid(integrand, x))


def linear_fisher(eta: float, x0: float, r: float) -> float:
    """Closed-form Fisher information of the reference model (mean and variance both depend on eta)."""
    var = squeezed_reference_variance(r, eta)
    return float(x0**2 / var + (1 / 16) / (2 * var**2))


def printed_closed_form_eta(x0: float, r: float, mean_x: float, mean_x2: float) -> float:
    """The closed-form linear-detector estimator as printed; kept only as a logged comparison."""
    e = np.exp(-2 * r)
    inner = 1 + 64 * x0**2 * (mean_x2 + (1 + e) * (x0 - 2 * mean_x + x0 * e) * x0)
    return float(1 + e + (1 - np.sqrt(inner)) / x0**2) if inner >= 0 else float("nan")


def estimate_eta_linear(data: HomodyneData, x0: float, r: float, n_grid: int = 64, tol: float = 1e-10) -> EfficiencyEstimate:
    """ML quantum efficiency of a linear detector from phase-0 homodyne data on a squeezed reference."""
    if x0 == 0:
        raise ReferenceUnidentifiable("x0 = 0: the mean carries no information on eta")
    n = len(data)
    if n == 0:
        raise ValueError("no records")
    m1, m2, v = float(np.mean(data.x)), float(np.mean(data.x**2)), float(np.var(data.x))

    def f(e):
        if v > 0:
            return _centered_linear_log_likelihood(e, x0, r, m1, v, n)
        return linear_log_likelihood(e, x0, r, m1, m2, n)

    grid = np.linspace(ETA_FLOOR, 1.0, n_grid)
    i = int(np.argmax(f(grid)))
    eta = maximize_scalar(f, grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)], tol)
    sd = np.sqrt(squeezed_reference_variance(r, eta))
    fisher = fisher_numeric(
        lambda e, x: squeezed_homodyne_density(x0, r, min(e, 1.0), x), min(eta, 1 - 1e-4), eta * x0 - 14 * sd, eta * x0 + 14 * sd
    )
    flags = ("boundary",) if eta > 1 - 10 * tol or eta < ETA_FLOOR + 10 * tol else ()
    printed = printed_closed_form_eta(x0, r, m1, m2)
    log.debug("linear eta: ML %.6f, printed closed form %.6f", eta, printed)
    return EfficiencyEstimate(
        float(eta),
        cramer_rao_sigma(fisher, n),
        n,
        fisher,
        flags,
        {"printed_closed_form": printed, "analytic_fisher": linear_fisher(eta, x0, r)},
    )


def naive_eta_flagged(data: HomodyneData, x0: float):
    """``(mean(x)/x0 clamped to [0, 1], clamped?)``."""
    if x0 == 0:
        raise ReferenceUnidentifiable("x0 must be non-zero")
    raw = float(np.mean(data.x)) / x0
    val = min(max(raw, 0.0), 1.0)
    return val, val != raw


def naive_eta(data: HomodyneData, x0: float) -> float:
    return naive_eta_flagged(data, x0)[0]


# --- ON/OFF detectors ----------------------------------------------------


@dataclass(frozen=True)
class CoherentReference:
    alpha: complex

    @property
    def alpha_sq(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class FockReference:
    n: int = 1


Reference = Union[CoherentReference, FockReference, DensityMatrix]


def _p0(reference: Reference, eta):
    eta = np.asarray(eta, dtype=float)
    if isinstance(reference, CoherentReference):
        return np.exp(-eta * reference.alpha_sq)
    if isinstance(reference, FockReference):
        return (1 - eta) ** reference.n
    p = np.arange(reference.dim)
    return np.sum((1 - eta[..., None]) ** p * reference.photon_distribution(), axis=-1)


def _dp0(reference: Reference, eta: float) -> float:
    if isinstance(reference, CoherentReference):
        return -reference.alpha_sq * np.exp(-eta * reference.alpha_sq)
    if isinstance(reference, FockReference):
        n = reference.n
        return -n * (1 - eta) ** (n - 1)
    p = np.arange(1, reference.dim)
    return -float(np.sum(p * (1 - eta) ** (p - 1) * reference.photon_distribution()[1:]))


def fisher_on_off(eta: float, alpha_sq: float) -> float:
    """Fisher information of a click record on a coherent reference of intensity ``alpha_sq``.

    ``F = (dP0/deta)^2 / (P0 (1 - P0)) = alpha_sq^2 / (exp(eta alpha_sq) - 1)``.
    """
    if not 0 < eta < 1 or not alpha_sq > 0:
        raise ValueError("need 0 < eta < 1 and alpha_sq > 0")
    return float(alpha_sq**2 / np.expm1(eta * alpha_sq))


def fisher_on_off_forms(eta: float, alpha_sq: float) -> dict:
    """Derived Fisher information next to its weak-field limit and the printed expression."""
    return {
        "derived": fisher_on_off(eta, alpha_sq),
        "weak_field": alpha_sq / eta,
        "printed": float(eta**2 / np.expm1(eta * alpha_sq)),
        "printed_weak_field_sigma_times_sqrt_n": float(np.sqrt(alpha_sq / eta)),
    }


def fisher_on_off_reference(reference: Reference, eta: float) -> float:
    p0 = float(_p0(reference, eta))
    if not 0 < p0 < 1:
        return float("nan")
    return float(_dp0(reference, eta) ** 2 / (p0 * (1 - p0)))


def on_off_log_likelihood(eta, s: ClickSummary, reference: Reference):
    """Click-record log-likelihood ``(N - N_c) ln P0 + N_c ln(1 - P0)`` minus its eta-independent maximum.

    With ``q = N_c/N`` and ``e = P0 - (1 - q)`` this is
    ``N [(1-q) log1p(e/(1-q)) + q log1p(-e/q)]``: the two terms are first
    order in ``e`` and cancel analytically at the maximum, so values near it
    keep full relative precision (the raw sum loses them to rounding of
    ``O(N)`` terms).  Returns ``-inf`` where a record has zero probability.
    """
    n, nc = s.n_total, s.n_clicks
    q = nc / n
    e = np.asarray(_p0(reference, eta), dtype=float) - (1 - q)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (n - nc) * np.log1p(e / (1 - q)) if nc < n else 0.0
        on = nc * np.log1p(-e / q) if nc > 0 else 0.0
    out = np.where(np.isnan(off + on), -np.inf, off + on)
    return float(out) if out.ndim == 0 else out


def _bisect_eta(reference, target, tol=1e-15):
    lo, hi = 0.0, 1.0  # P0 decreases in eta
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _p0(reference, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def estimate_eta_avalanche(s: ClickSummary, reference: Reference, method: str = "auto") -> EfficiencyEstimate:
    """ML efficiency of an ON/OFF detector, solving ``P0(eta) = 1 - N_c/N``.

    ``method="auto"`` uses the closed forms for coherent and Fock references
    and bisection otherwise; ``method="bisect"`` forces bisection.
    """
    n, nc = s.n_total, s.n_clicks
    target = 1 - nc / n
    flags = []
    if nc == 0:
        return EfficiencyEstimate(0.0, float("nan"), n, float("nan"), ("no-clicks",))
    if isinstance(reference, CoherentReference) and reference.alpha_sq == 0:
        raise ReferenceUnidentifiable("vacuum reference never clicks")
    if nc == n:
        flags.append("saturated")
        eta = 1.0
    elif method == "auto" and isinstance(reference, CoherentReference):
        eta = -np.log(target) / reference.alpha_sq
    elif method == "auto" and isinstance(reference, FockReference):
        eta = 1 - target ** (1 / reference.n)
    elif _p0(reference, 1.0) > target:
        eta = 2.0  # even a perfect detector clicks less often than observed
    else:
        eta = _bisect_eta(reference, target)
    if eta > 1:
        flags.append("clamped")
        eta = 1.0
    fisher = fisher_on_off_reference(reference, eta) if eta < 1 else float("nan")
    sigma = cramer_rao_sigma(fisher, n) if np.isfinite(fisher) and fisher > 0 else float("nan")
    details = {}
    if isinstance(reference, CoherentReference) and 0 < eta < 1:
        details = fisher_on_off_forms(eta, reference.alpha_sq)
        log.debug("on/off Fisher: derived %.6g, printed %.6g", details["derived"], details["printed"])
    return EfficiencyEstimate(float(eta), sigma, n, fisher, tuple(flags), details)
