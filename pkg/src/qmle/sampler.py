"""Seeded Monte Carlo generation of homodyne, spin-pair and ON/OFF records.

Stream-splitting rule: records are generated in consecutive blocks of
``BLOCK_SIZE``.  Block ``b`` draws from
``Generator(Philox(SeedSequence(seed, spawn_key=(b,))))`` (the ``b``-th
child of ``SeedSequence(seed).spawn``), so any block can be produced
independently and parallel generation is bit-identical to serial.
Within a block the draws are taken in a fixed order documented on each
sampler.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .povm import (
    ClickSummary,
    HomodyneData,
    SpinData,
    fock_amplitudes,
    gaussian_homodyne_moments,
    no_click_probability,
    spin_pair_kets,
    squeezed_reference_variance,
)
from .states import DensityMatrix, GaussianParams

BLOCK_SIZE = 4096
PHASE_MODES = ("uniform", "grid")


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling setup.

    ``phase_mode="uniform"`` draws every LO phase uniformly in ``[0, 2 pi)``;
    ``phase_mode="grid"`` cycles through ``n_phases`` equally spaced phases,
    record ``i`` getting ``2 pi (i mod n_phases) / n_phases``.
    """

    seed: int = 0
    n_samples: int = 1000
    eta: float = 1.0
    phase_mode: str = "uniform"
    n_phases: int = 1
    grid_step: float = 0.01
    threads: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}")
        if self.n_phases < 1:
            raise ValueError("n_phases must be >= 1")

    def describe(self) -> dict:
        return {
            "seed": self.seed,
            "n_samples": self.n_samples,
            "eta": self.eta,
            "phase_mode": self.phase_mode,
            "n_phases": self.n_phases,
            "grid_step": self.grid_step,
        }


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(n):
    return [(b, b * BLOCK_SIZE, min(n, (b + 1) * BLOCK_SIZE)) for b in range(-(-n // BLOCK_SIZE))]


def _run_blocks(fn, cfg, n=None):
    blocks = _blocks(cfg.n_samples if n is None else n)
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(lambda blk: fn(*blk), blocks))
    return [fn(*blk) for blk in blocks]


def _phases(rng, cfg, start, stop):
    if cfg.phase_mode == "uniform":
        return rng.uniform(0, 2 * np.pi, stop - start)
    return 2 * np.pi * (np.arange(start, stop) % cfg.n_phases) / cfg.n_phases


# --- homodyne ------------------------------------------------------------

_GL_T, _GL_W = np.polynomial.legendre.leggauss(8)


class QuadratureInverter:
    """Inverse CDF of the ideal quadrature distribution of ``rho`` at any LO phase.

    ``p(x, phi) = h_0(x) + 2 Re sum_{d>0} e^{i d phi} h_d(x)`` with
    ``h_d = sum_m rho_{m,m+d} <m|x><m+d|x>``.  The harmonics and their running
    integrals (8-point Gauss-Legendre per cell) are tabulated once on a
    uniform grid; a draw bisects over grid nodes and then solves the cubic
    Hermite interpolant of the CDF inside the bracketing cell.
    """

    def __init__(self, rho: DensityMatrix, step: float = 0.01):
        self.dim = rho.dim
        m = rho.matrix
        radius = np.sqrt(2 * self.dim + 1) / 2 + 4.0
        while True:
            edge = np.abs(fock_amplitudes(np.array([-radius, radius]), self.dim))
            if np.max(np.einsum("im,mn,in->i", edge, np.abs(m), edge)) < 1e-16:
                break
            radius += 0.5
        n_cells = int(np.ceil(2 * radius / step))
        self.step = 2 * radius / n_cells
        self.nodes = -radius + self.step * np.arange(n_cells + 1)
        self._diagonals = [np.diagonal(m, d).copy() for d in range(self.dim)]
        self.density_basis = self._basis(self.nodes)
        gl_x = self.nodes[:-1, None] + self.step * (_GL_T + 1) / 2
        cell = self._basis(gl_x.ravel()).reshape(n_cells, _GL_T.size, -1)
        cell = np.einsum("q,cqk->ck", _GL_W * self.step / 2, cell)
        self.cdf_basis = np.vstack([np.zeros(cell.shape[1]), np.cumsum(cell, axis=0)])

    def _basis(self, x):
        psi = fock_amplitudes(x, self.dim)
        h = [np.einsum("pm,m->p", psi * psi, self._diagonals[0].real)]
        re, im = [], []
        for d in range(1, self.dim):
            hd = np.einsum("pm,m->p", psi[:, :-d] * psi[:, d:], self._diagonals[d])
            re.append(2 * hd.real)
            im.append(-2 * hd.imag)
        return np.column_stack(h + re + im)

    def _coeffs(self, phase):
        d = np.arange(1, self.dim)
        ang = np.outer(phase, d)
        return np.hstack([np.ones((phase.size, 1)), np.cos(ang), np.sin(ang)])

    def density(self, phase, x):
        phase, x = np.broadcast_arrays(np.asarray(phase, float), np.asarray(x, float))
        return np.sum(self._basis(x.ravel()) * self._coeffs(phase.ravel()), axis=1).reshape(x.shape)

    def sample(self, phase, u):
        """Quadratures with ideal CDF value ``u`` at each ``phase``."""
        phase = np.asarray(phase, float)
        u = np.asarray(u, float)
        c = self._coeffs(phase)
        total = c @ self.cdf_basis[-1]
        target = u * total
        lo = np.zeros(phase.size, dtype=int)
        hi = np.full(phase.size, self.nodes.size - 1)
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            below = np.sum(self.cdf_basis[mid] * c, axis=1) <= target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        c0 = np.sum(self.cdf_basis[lo] * c, axis=1)
        c1 = np.sum(self.cdf_basis[hi] * c, axis=1)
        d0 = np.sum(self.density_basis[lo] * c, axis=1) * self.step
        d1 = np.sum(self.density_basis[hi] * c, axis=1) * self.step
        t = _solve_hermite_cubic(c0, c1, d0, d1, target)
        return self.nodes[lo] + t * self.step


def _solve_hermite_cubic(c0, c1, d0, d1, target, iters=50):
    """Root in [0, 1] of the cubic Hermite interpolant through (c0, d0), (c1, d1)."""

    def cubic(t):
        t2, t3 = t * t, t * t * t
        val = (2 * t3 - 3 * t2 + 1) * c0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * c1 + (t3 - t2) * d1
        der = (6 * t2 - 6 * t) * c0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * c1 + (3 * t2 - 2 * t) * d1
        return val - target, der

    a = np.zeros_like(target)
    b = np.ones_like(target)
    span = c1 - c0
    t = np.clip(np.where(span > 0, (target - c0) / np.where(span > 0, span, 1), 0.5), 0, 1)
    for _ in range(iters):
        f, df = cubic(t)
        a = np.where(f <= 0, t, a)
        b = np.where(f > 0, t, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / df
        bad = ~np.isfinite(tn) | (tn <= a) | (tn >= b)
        tn = np.where(bad, 0.5 * (a + b), tn)
        if np.max(np.abs(tn - t)) < 1e-15:
            t = tn
            break
        t = tn
    return t


def sample_homodyne(rho: DensityMatrix, cfg: SamplerConfig) -> HomodyneData:
    """Lossy homodyne records drawn from ``Tr[rho H(x; phi)]``.

    Per block the draws are: phases (uniform mode only), then uniforms for
    the ideal inverse CDF, then standard normals.  Loss is applied as
    ``x = sqrt(eta) x_ideal + sqrt((1 - eta)/4) z``, which reproduces the
    beam-splitter loss kernel exactly.
    """
    inv = QuadratureInverter(rho, cfg.grid_step)
    eta = cfg.eta

    def block(b, start, stop):
        rng = block_rng(cfg.seed, b)
        phase = _phases(rng, cfg, start, stop)
        u = rng.random(stop - start)
        z = rng.standard_normal(stop - start)
        x = np.sqrt(eta) * inv.sample(phase, u) + np.sqrt((1 - eta) / 4) * z
        return phase, x

    parts = _run_blocks(block, cfg)
    return HomodyneData(np.concatenate([p for p, _ in parts]), np.concatenate([x for _, x in parts]))


def sample_gaussian_homodyne(p: GaussianParams, cfg: SamplerConfig) -> HomodyneData:
    """Homodyne records of a Gaussian state drawn from the closed-form density.

    Per block: phases (uniform mode only), then standard normals.
    """

    def block(b, start, stop):
        rng = block_rng(cfg.seed, b)
        phase = _phases(rng, cfg, start, stop)
        z = rng.standard_normal(stop - start)
        mean, var = gaussian_homodyne_moments(p, phase, cfg.eta)
        return phase, mean + np.sqrt(var) * z

    parts = _run_blocks(block, cfg)
    return HomodyneData(np.concatenate([p for p, _ in parts]), np.concatenate([x for _, x in parts]))


def sample_squeezed_reference(x0: float, r: float, cfg: SamplerConfig) -> HomodyneData:
    """Phase-0 records of the displaced squeezed reference used for linear-detector calibration.

    Outcomes are Gaussian with mean ``eta x0`` and variance
    ``(e^{-2r} + 1 - eta)/4``.  Per block: standard normals only.
    """
    sd = np.sqrt(squeezed_reference_variance(r, cfg.eta))

    def block(b, start, stop):
        z = block_rng(cfg.seed, b).standard_normal(stop - start)
        return cfg.eta * x0 + sd * z

    x = np.concatenate(_run_blocks(block, cfg))
    return HomodyneData(np.zeros_like(x), x)


# --- spin ----------------------------------------------------------------

_SIGNS = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)


def _unit_vectors(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_spin_pair(rho: DensityMatrix, cfg: SamplerConfig) -> SpinData:
    """Spin measurements along independent uniformly random axes for A and B.

    Per block: axes for A, axes for B (normalized Gaussian triples), then one
    uniform per run selecting the sign pair from the four Born probabilities.
    The recorded directions are the axes multiplied by the outcome signs.
    """
    if rho.dim != 4:
        raise DimensionMismatch("spin-pair sampling needs a 4x4 density matrix")

    def block(b, start, stop):
        n = stop - start
        rng = block_rng(cfg.seed, b)
        na = _unit_vectors(rng, n)
        nb = _unit_vectors(rng, n)
        u = rng.random(n)
        probs = np.empty((n, 4))
        for k, (sa, sb) in enumerate(_SIGNS):
            kets = spin_pair_kets(sa * na, sb * nb)
            probs[:, k] = np.einsum("im,mn,in->i", kets.conj(), rho.matrix, kets).real
        cum = np.cumsum(np.clip(probs, 0, None), axis=1)
        k = np.minimum(np.sum(cum < (u * cum[:, -1])[:, None], axis=1), 3)
        s = _SIGNS[k]
        return s[:, :1] * na, s[:, 1:] * nb

    parts = _run_blocks(block, cfg)
    return SpinData(np.vstack([a for a, _ in parts]), np.vstack([b for _, b in parts]))


# --- ON/OFF --------------------------------------------------------------


def sample_on_off(rho: DensityMatrix, cfg: SamplerConfig, eta=None) -> ClickSummary:
    """Bernoulli click record with click probability ``1 - P0(eta)``.

    ``eta`` defaults to ``cfg.eta`` and may be 0 (blind detector).
    Per block: one uniform per trial.
    """
    eta = cfg.eta if eta is None else eta
    p_click = 1 - no_click_probability(rho, eta)

    def block(b, start, stop):
        return int(np.count_nonzero(block_rng(cfg.seed, b).random(stop - start) < p_click))

    return ClickSummary(cfg.n_samples, sum(_run_blocks(block, cfg)))
