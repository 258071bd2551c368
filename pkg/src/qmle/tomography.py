"""Maximum-likelihood density-matrix reconstruction over the ``rho = T^dag T`` parameterization."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, NonUniqueMaximum, ZeroProbabilityRecord
from .optimize import OptConfig, nelder_mead_maximize
from .povm import (
    HomodyneData,
    SpinData,
    factor_matrix,
    homodyne_expectations,
    homodyne_povm,
    spin_povm,
    spin_projector_expectations,
)
from .states import DensityMatrix, TFactor, overlap, params_to_lower, t_factor_to_density

log = logging.getLogger(__name__)

MIN_PROBABILITY = 1e-300
CLAMP_PROBABILITY = 1e-280
PEER_BAND = 0.5

Records = Union[HomodyneData, SpinData]


@dataclass
class ReconstructionReport:
    rho_ml: DensityMatrix
    log_likelihood: float
    evals: int
    converged: bool
    cutoff: int
    eta_assumed: Optional[float]
    t_params: np.ndarray = field(repr=False, default=None)
    n_records: int = 0

    def to_dict(self) -> dict:
        return {
            "rho_ml": self.rho_ml.to_dict(),
            "log_likelihood": self.log_likelihood,
            "evals": self.evals,
            "converged": self.converged,
            "cutoff": self.cutoff,
            "eta_assumed": self.eta_assumed,
            "n_records": self.n_records,
            "t_params": [float(v) for v in self.t_params] if self.t_params is not None else None,
        }


def record_probabilities(T: TFactor, data: Records, eta: Optional[float] = None) -> np.ndarray:
    """Kernel value ``Tr(T^dag T Pi_i)`` of every record, in explicitly positive form."""
    if isinstance(data, HomodyneData):
        if eta is None:
            raise ValueError("homodyne records need the detector efficiency eta")
        return homodyne_expectations(T, data, eta)
    if isinstance(data, SpinData):
        return spin_projector_expectations(T, data)
    raise TypeError(f"unsupported record type {type(data).__name__}")


def _check_probabilities(p, clamp):
    if clamp:
        return np.maximum(p, CLAMP_PROBABILITY)
    bad = np.flatnonzero(~(p >= MIN_PROBABILITY))
    if bad.size:
        raise ZeroProbabilityRecord(bad[0], p[bad[0]])
    return p


def log_likelihood_t(T: TFactor, data: Records, eta: Optional[float] = None, clamp: bool = False) -> float:
    """``sum_i ln Tr(T^dag T Pi_i) - N Tr(T^dag T)``.

    The Lagrange multiplier is fixed to the number of records, which makes
    ``Tr(T^dag T) = 1`` at the maximum.  ``T`` may be a :class:`TFactor` or
    any square matrix; only ``T^dag T`` matters.
    """
    if len(data) == 0:
        raise ValueError("no records")
    p = _check_probabilities(record_probabilities(T, data, eta), clamp)
    t = factor_matrix(T)
    return float(np.sum(np.log(p)) - len(data) * np.sum(t.real**2 + t.imag**2))


class LinearLikelihood:
    """Log-likelihood as a function of the real ``T`` parameters.

    Record probabilities are linear in ``rho``: with the POVM matrices
    precomputed, ``p = A @ features(T^dag T)`` where the features are the
    diagonal and the real/imaginary upper-triangle entries of ``rho``.  This
    is mathematically identical to the positive form used by
    :func:`log_likelihood_t` and much cheaper inside a simplex loop.
    """

    def __init__(self, povm: np.ndarray, clamp: bool = False):
        n, dim, _ = povm.shape
        self.dim = dim
        self.n = n
        self.clamp = clamp
        iu = np.triu_indices(dim, 1)
        self._iu = iu
        diag = np.real(povm[:, np.arange(dim), np.arange(dim)])
        upper = povm[:, iu[0], iu[1]]
        self.design = np.ascontiguousarray(np.hstack([diag, 2 * upper.real, 2 * upper.imag]))

    def features(self, gram):
        up = gram[self._iu]
        return np.concatenate([gram.diagonal().real, up.real, up.imag])

    def probabilities(self, gram) -> np.ndarray:
        return self.design @ self.features(gram)

    def __call__(self, params) -> float:
        t = params_to_lower(params, self.dim)
        gram = t.conj().T @ t
        p = self.probabilities(gram)
        if self.clamp:
            p = np.maximum(p, CLAMP_PROBABILITY)
        elif not p.min() >= MIN_PROBABILITY:
            # trial point assigns zero probability to some record: worst possible value
            return -np.inf
        return float(np.sum(np.log(p)) - self.n * np.trace(gram).real)


def maximally_mixed_params(dim: int) -> np.ndarray:
    return TFactor(np.eye(dim) / np.sqrt(dim)).to_params()


def _maximize(lik: LinearLikelihood, x0, cfg: OptConfig):
    if not np.isfinite(lik(x0)):
        p = lik.probabilities(params_to_lower(x0, lik.dim).conj().T @ params_to_lower(x0, lik.dim))
        i = int(np.argmin(p))
        raise ZeroProbabilityRecord(i, p[i])
    return nelder_mead_maximize(lik, x0, cfg)


def _report(res, dim, eta, n):
    rho = t_factor_to_density(TFactor.from_params(res.argmax, dim))
    return ReconstructionReport(rho, res.value, res.evals, res.converged, dim, eta, res.argmax, n)


DEFAULT_FOCK_CONFIG = OptConfig(max_evals=40_000, x_tol=1e-3, f_tol=1e-3, initial_step=0.1, restarts=2)
DEFAULT_SPIN_CONFIG = OptConfig(max_evals=40_000, x_tol=1e-6, f_tol=1e-7, initial_step=0.1, restarts=2)


def reconstruct_fock(
    data: HomodyneData,
    cutoff: int,
    eta: float,
    cfg: OptConfig = DEFAULT_FOCK_CONFIG,
    clamp: bool = False,
) -> ReconstructionReport:
    """Fock-basis ML reconstruction from lossy homodyne records.

    Starts from the maximally mixed state ``T = I/sqrt(M)`` and runs the
    downhill simplex over the ``M^2`` real parameters of ``T``.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    lik = LinearLikelihood(homodyne_povm(data, cutoff, eta), clamp)
    res = _maximize(lik, maximally_mixed_params(cutoff), cfg)
    log.info("fock reconstruction: M=%d evals=%d converged=%s L=%.6f", cutoff, res.evals, res.converged, res.value)
    return _report(res, cutoff, eta, len(data))


def reconstruct_spin(
    data: SpinData,
    cfg: OptConfig = DEFAULT_SPIN_CONFIG,
    n_starts: int = 3,
    clamp: bool = False,
) -> ReconstructionReport:
    """Two-qubit ML reconstruction from spin-pair outcomes.

    The first start is the maximally mixed state; ``n_starts - 1`` further
    starts use random ``T`` drawn from ``cfg.seed``.  The best run is
    returned.  Runs ending within ``PEER_BAND`` of the best log-likelihood
    are statistically indistinguishable; if any two of them disagree by
    more than 1e-3 in overlap the maximum is not unique and
    :class:`NonUniqueMaximum` is warned.
    """
    if len(data) == 0:
        raise ValueError("no records")
    lik = LinearLikelihood(spin_povm(data), clamp)
    rng = np.random.default_rng(cfg.seed)
    starts = [maximally_mixed_params(4)]
    for _ in range(n_starts - 1):
        t = rng.standard_normal(16) * 0.5
        t[[0, 3, 6, 9, 15]] = np.abs(t[[0, 3, 6, 9, 15]])
        g = params_to_lower(t, 4)
        starts.append(t / np.sqrt(np.trace(g.conj().T @ g).real))
    runs = [_maximize(lik, s, cfg) for s in starts]
    reports = [_report(r, 4, None, len(data)) for r in runs]
    best = max(reports, key=lambda r: r.log_likelihood)
    # runs that stalled well below the best value say nothing about uniqueness
    peers = [r for r in reports if r.log_likelihood >= best.log_likelihood - PEER_BAND]
    if len(peers) < len(reports):
        log.info("spin reconstruction: %d of %d starts stalled below the best value",
                 len(reports) - len(peers), len(reports))
    spread = max(1 - overlap(a.rho_ml, b.rho_ml) for a in peers for b in peers)
    if spread > 1e-3:
        warnings.warn(
            f"independent maximizations disagree (1 - overlap = {spread:.2e}); "
            "the measured directions do not determine the state",
            NonUniqueMaximum,
            stacklevel=2,
        )
    best.evals = sum(r.evals for r in runs)
    return best


def density_log_likelihood(rho: DensityMatrix, data: Records, eta: Optional[float] = None) -> float:
    """Data term ``sum_i ln Tr(rho Pi_i)`` for a normalized ``rho`` (no Lagrange term)."""
    if isinstance(data, HomodyneData):
        if eta is None:
            raise ValueError("homodyne records need the detector efficiency eta")
        povm = homodyne_povm(data, rho.dim, eta)
    elif isinstance(data, SpinData):
        if rho.dim != 4:
            raise DimensionMismatch("spin records need a 4x4 density matrix")
        povm = spin_povm(data)
    else:
        raise TypeError(f"unsupported record type {type(data).__name__}")
    p = np.einsum("mn,inm->i", rho.matrix, povm).real
    return float(np.sum(np.log(_check_probabilities(p, False))))
