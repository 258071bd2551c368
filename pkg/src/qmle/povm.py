"""Measurement kernels: lossy homodyne, Gaussian-state homodyne, spin projectors, ON/OFF."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DimensionMismatch
from .states import DensityMatrix, GaussianParams, TFactor


class HomodyneRecord(NamedTuple):
    phase: float
    x: float


@dataclass(frozen=True, eq=False)
class HomodyneData:
    """Column store of homodyne records (one LO phase and one outcome per run)."""

    phase: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        phase = np.array(self.phase, dtype=float).ravel()
        x = np.array(self.x, dtype=float).ravel()
        if phase.shape != x.shape:
            raise DimensionMismatch("phase and x must have equal length")
        if not (np.all(np.isfinite(phase)) and np.all(np.isfinite(x))):
            raise ValueError("homodyne records must be finite")
        phase.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_records(cls, records) -> HomodyneData:
        records = list(records)
        return cls([r.phase for r in records], [r.x for r in records])

    def __len__(self):
        return self.x.size

    def __iter__(self) -> Iterator[HomodyneRecord]:
        for p, x in zip(self.phase, self.x):
            yield HomodyneRecord(float(p), float(x))

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return HomodyneRecord(float(self.phase[i]), float(self.x[i]))
        return HomodyneData(self.phase[i], self.x[i])


class SpinOutcome(NamedTuple):
    omega_a: np.ndarray
    omega_b: np.ndarray


@dataclass(frozen=True, eq=False)
class SpinData:
    """Recorded Bloch directions for both particles, shape ``(N, 3)`` each."""

    omega_a: np.ndarray
    omega_b: np.ndarray

    def __post_init__(self):
        a = np.array(self.omega_a, dtype=float).reshape(-1, 3)
        b = np.array(self.omega_b, dtype=float).reshape(-1, 3)
        if a.shape != b.shape:
            raise DimensionMismatch("omega_a and omega_b must have equal length")
        for v in (a, b):
            if np.any(np.abs(np.linalg.norm(v, axis=1) - 1) > 1e-12):
                raise ValueError("Bloch directions must be unit vectors")
            v.setflags(write=False)
        object.__setattr__(self, "omega_a", a)
        object.__setattr__(self, "omega_b", b)

    @classmethod
    def from_records(cls, records) -> SpinData:
        records = list(records)
        return cls([r.omega_a for r in records], [r.omega_b for r in records])

    def __len__(self):
        return self.omega_a.shape[0]

    def __iter__(self) -> Iterator[SpinOutcome]:
        for a, b in zip(self.omega_a, self.omega_b):
            yield SpinOutcome(a.copy(), b.copy())

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return SpinOutcome(self.omega_a[i].copy(), self.omega_b[i].copy())
        return SpinData(self.omega_a[i], self.omega_b[i])


@dataclass(frozen=True)
class ClickSummary:
    n_total: int
    n_clicks: int

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if not 0 <= self.n_clicks <= self.n_total:
            raise ValueError("n_clicks must lie in [0, n_total]")

    @property
    def click_fraction(self) -> float:
        return self.n_clicks / self.n_total


# --- oscillator eigenfunctions --------------------------------------------


def fock_amplitudes(x, dim: int) -> np.ndarray:
    """``<n|x>`` for ``n < dim`` in the vacuum-variance-1/4 convention.

    Returns an array of shape ``x.shape + (dim,)``.  Uses the normalized
    three-term recurrence
    ``psi_{n+1} = 2 x psi_n / sqrt(n+1) - sqrt(n/(n+1)) psi_{n-1}``
    starting from ``psi_0 = (2/pi)^{1/4} exp(-x^2)``, so no factorial or
    raw Hermite polynomial is ever formed.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (dim,))
    out[..., 0] = (2 / np.pi) ** 0.25 * np.exp(-x * x)
    if dim > 1:
        out[..., 1] = 2 * x * out[..., 0]
    for n in range(1, dim - 1):
        out[..., n + 1] = (2 * x * out[..., n] - np.sqrt(n) * out[..., n - 1]) / np.sqrt(n + 1)
    return out


def fock_position_amplitude(n: int, x):
    if n < 0:
        raise ValueError("n must be non-negative")
    v = fock_amplitudes(x, n + 1)[..., n]
    return float(v) if np.ndim(v) == 0 else v


def binomial_loss_coefficient(n: int, j: int, eta: float) -> float:
    """``sqrt(C(n+j, n) eta^n (1-eta)^j)``: amplitude for losing ``j`` of ``n+j`` photons."""
    if n < 0 or j < 0:
        raise ValueError("n and j must be non-negative")
    log_b = gammaln(n + j + 1) - gammaln(n + 1) - gammaln(j + 1) + xlogy(n, eta) + xlogy(j, 1 - eta)
    return float(np.exp(0.5 * log_b))


def loss_coefficients(dim: int, eta: float) -> np.ndarray:
    """Matrix ``B[m, n] = B_{m,n}`` for ``n <= m < dim`` (zero above the diagonal)."""
    b = np.zeros((dim, dim))
    for m in range(dim):
        for n in range(m + 1):
            b[m, n] = binomial_loss_coefficient(n, m - n, eta)
    return b


def _loss_vectors(phase, x, dim, eta):
    """Vectors ``w_j`` with ``(w_j)_{n+j} = B_{n+j,n} <n|x> e^{i n phi}``, shape (dim_j, N, dim)."""
    v = fock_amplitudes(x, dim) * np.exp(1j * np.outer(phase, np.arange(dim)))
    b = loss_coefficients(dim, eta)
    w = np.zeros((dim, x.size, dim), dtype=complex)
    for j in range(dim):
        n = np.arange(dim - j)
        w[j][:, n + j] = b[n + j, n] * v[:, n]
    return w


def factor_matrix(T) -> np.ndarray:
    """Matrix of a factor: a :class:`TFactor` or any square array (the kernels only need ``T^dag T``)."""
    t = T.elements if isinstance(T, TFactor) else np.asarray(T, dtype=complex)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimensionMismatch(f"factor must be square, got shape {t.shape}")
    return t


def homodyne_expectations(T: TFactor, data: HomodyneData, eta: float, chunk: int = 8192) -> np.ndarray:
    """Vectorized ``Tr[T^dag T H(x_i; phi_i)]`` over all records.

    Each value is accumulated as the explicitly positive sum
    ``sum_k sum_j |sum_n <k|T|n+j> B_{n+j,n} <n|x> e^{i n phi}|^2``.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    t = factor_matrix(T)
    out = np.empty(len(data))
    for s in range(0, len(data), chunk):
        w = _loss_vectors(data.phase[s : s + chunk], data.x[s : s + chunk], t.shape[0], eta)
        y = w @ t.T  # y[j, i, k] = sum_m <k|T|m> (w_j)_m
        out[s : s + chunk] = np.sum(y.real**2 + y.imag**2, axis=(0, 2))
    return out


def homodyne_expectation(T: TFactor, rec: HomodyneRecord, eta: float) -> float:
    data = HomodyneData([rec.phase], [rec.x])
    return float(homodyne_expectations(T, data, eta)[0])


def homodyne_povm(data: HomodyneData, dim: int, eta: float, chunk: int = 8192) -> np.ndarray:
    """POVM matrices ``Pi_i = sum_j w_j w_j^dag`` with ``Tr[rho Pi_i]`` the outcome density."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    out = np.empty((len(data), dim, dim), dtype=complex)
    for s in range(0, len(data), chunk):
        w = _loss_vectors(data.phase[s : s + chunk], data.x[s : s + chunk], dim, eta)
        out[s : s + chunk] = np.einsum("jim,jin->imn", w, w.conj())
    return out


def homodyne_density(rho: DensityMatrix, phase, x, eta: float = 1.0) -> np.ndarray:
    """Outcome density ``Tr[rho H(x; phi)]`` evaluated on arrays of (phase, x)."""
    phase, x = np.broadcast_arrays(np.asarray(phase, float), np.asarray(x, float))
    data = HomodyneData(phase.ravel(), x.ravel())
    pi = homodyne_povm(data, rho.dim, eta)
    return np.einsum("mn,inm->i", rho.matrix, pi).real.reshape(x.shape)


# --- Gaussian closed forms -----------------------------------------------


def gaussian_homodyne_moments(p: GaussianParams, phase, eta: float):
    """Mean and variance of the homodyne outcome at LO phase ``phase`` and efficiency ``eta``.

    Loss rescales the ideal outcome by ``sqrt(eta)`` and adds vacuum noise of
    variance ``(1 - eta)/4``; in the rescaled variable ``x/sqrt(eta)`` this is
    a convolution with a Gaussian of variance ``(1 - eta)/(4 eta)``.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    c, s = np.cos(phase), np.sin(phase)
    ideal_var = (p.kappa**2 * c**2 + s**2) / (4 * p.delta**2 * p.kappa)
    mean = np.sqrt(eta) * (p.a * c + p.b * s)
    var = eta * ideal_var + (1 - eta) / 4
    return mean, var


def gaussian_homodyne_logpdf(p: GaussianParams, phase, eta: float, x) -> np.ndarray:
    mean, var = gaussian_homodyne_moments(p, phase, eta)
    return -0.5 * np.log(2 * np.pi * var) - (np.asarray(x) - mean) ** 2 / (2 * var)


def gaussian_homodyne_density(p: GaussianParams, phase, eta: float, x):
    return np.exp(gaussian_homodyne_logpdf(p, phase, eta, x))


def squeezed_reference_variance(r: float, eta) -> np.ndarray:
    return (np.exp(-2 * r) + 1 - np.asarray(eta)) / 4


def squeezed_homodyne_density(x0: float, r: float, eta: float, x):
    """Reference-state outcome density for linear-detector calibration.

    Gaussian with mean ``eta * x0`` and variance ``(e^{-2r} + 1 - eta)/4``.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    var = squeezed_reference_variance(r, eta)
    return np.exp(-((np.asarray(x) - eta * x0) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)


# --- spin ----------------------------------------------------------------


def spin_coherent_kets(omega) -> np.ndarray:
    """Qubit kets ``(cos(theta/2), e^{i phi} sin(theta/2))`` for Bloch directions, shape (N, 2)."""
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    theta = np.arccos(np.clip(omega[:, 2], -1, 1))
    phi = np.arctan2(omega[:, 1], omega[:, 0])
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)


def spin_pair_kets(omega_a, omega_b) -> np.ndarray:
    """Product kets ``|Omega_A, Omega_B>`` in the basis |00>,|01>,|10>,|11>, shape (N, 4)."""
    ka, kb = spin_coherent_kets(omega_a), spin_coherent_kets(omega_b)
    return (ka[:, :, None] * kb[:, None, :]).reshape(-1, 4)


def spin_projector_expectations(T: TFactor, data: SpinData) -> np.ndarray:
    """``sum_mu |<mu|T|Omega_A, Omega_B>|^2`` for every record."""
    t = factor_matrix(T)
    if t.shape[0] != 4:
        raise DimensionMismatch(f"spin pairs need a 4-dimensional T, got {t.shape[0]}")
    y = spin_pair_kets(data.omega_a, data.omega_b) @ t.T
    return np.sum(y.real**2 + y.imag**2, axis=1)


def spin_projector_expectation(T: TFactor, out: SpinOutcome) -> float:
    return float(spin_projector_expectations(T, SpinData([out.omega_a], [out.omega_b]))[0])


def spin_povm(data: SpinData) -> np.ndarray:
    k = spin_pair_kets(data.omega_a, data.omega_b)
    return k[:, :, None] * k[:, None, :].conj()


# --- ON/OFF --------------------------------------------------------------


def no_click_probability(rho: DensityMatrix, eta: float) -> float:
    """``P0 = sum_p (1 - eta)^p rho_pp``."""
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    p = np.arange(rho.dim)
    return float(np.clip(np.dot((1 - eta) ** p, rho.photon_distribution()), 0, 1))
