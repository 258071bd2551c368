"""Finite-dimensional quantum states, canonical constructors and comparison metrics.

Conventions: the quadrature operator is ``x_phi = (a^dag e^{i phi} + a e^{-i phi}) / 2``
so the vacuum has quadrature variance 1/4.  The squeezing operator is
``S(r) = exp[r (a^2 - a^dag^2) / 2]``; for ``r > 0`` it squeezes ``x_0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    CutoffTooSmall,
    DimensionMismatch,
    QuadratureNotConverged,
    ZeroFactor,
)

LEAKAGE_BOUND = 1e-6


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise ZeroFactor("zero state vector")
        object.__setattr__(self, "amplitudes", _frozen(amp / norm))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def mean_photon_number(self) -> float:
        return float(np.sum(np.arange(self.dim) * np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive matrix over a finite basis.

    The input is Hermitized as ``(A + A^dag) / 2`` (which makes the result
    exactly Hermitian in floating point) and divided by its trace.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {m.shape}")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if not tr > 1e-300:
            raise ZeroFactor("density matrix has non-positive trace")
        m = m / tr
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_positive(self, tol: float = 1e-10) -> bool:
        return bool(self.eigenvalues().min() >= -tol)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def photon_distribution(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.dim), self.photon_distribution()))

    def embed(self, dim: int) -> DensityMatrix:
        """Zero-pad into a larger Fock space."""
        if dim < self.dim:
            raise DimensionMismatch(f"cannot embed dim {self.dim} into {dim}")
        m = np.zeros((dim, dim), dtype=complex)
        m[: self.dim, : self.dim] = self.matrix
        return DensityMatrix(m)

    def truncate(self, dim: int) -> DensityMatrix:
        return DensityMatrix(self.matrix[:dim, :dim])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": [float(v) for v in self.matrix.real.ravel()],
            "im": [float(v) for v in self.matrix.imag.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> DensityMatrix:
        dim = int(d["dim"])
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float)
        if re.size != dim * dim or im.size != dim * dim:
            raise DimensionMismatch("re/im arrays do not match dim")
        return cls((re + 1j * im).reshape(dim, dim))


@dataclass(frozen=True, eq=False)
class TFactor:
    """Lower-triangular factor with real non-negative diagonal, ``rho = T^dag T``.

    Real parameter layout (``dim**2`` numbers), row-major over the lower
    triangle: for row ``i`` the pairs ``(re, im)`` of ``T[i, j]`` for
    ``j < i`` followed by the diagonal entry ``T[i, i]``.  The diagonal is
    taken as the absolute value of its parameter.
    """

    elements: np.ndarray

    def __post_init__(self):
        t = np.array(self.elements, dtype=complex)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionMismatch(f"T must be square, got {t.shape}")
        if np.any(np.triu(t, 1) != 0):
            raise ValueError("T must be lower triangular")
        d = t.diagonal()
        if np.any(d.imag != 0) or np.any(d.real < 0):
            raise ValueError("T diagonal must be real and non-negative")
        object.__setattr__(self, "elements", _frozen(t))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @staticmethod
    def n_params(dim: int) -> int:
        return dim * dim

    @classmethod
    def from_params(cls, params, dim: int) -> TFactor:
        return cls(params_to_lower(np.asarray(params, dtype=float), dim))

    def to_params(self) -> np.ndarray:
        rows, cols = _param_index(self.dim)
        out = np.empty(self.dim * self.dim)
        vals = self.elements[rows, cols]
        diag = rows == cols
        out[_re_slots(self.dim)] = vals.real
        out[_im_slots(self.dim)] = vals[~diag].imag
        return out

    def gram(self) -> np.ndarray:
        """Unnormalized ``T^dag T``."""
        return self.elements.conj().T @ self.elements


def _param_index(dim):
    rows, cols = [], []
    for i in range(dim):
        for j in range(i + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


_slot_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _slots(dim):
    if dim not in _slot_cache:
        re, im = [], []
        k = 0
        for i in range(dim):
            for _ in range(i):
                re.append(k)
                im.append(k + 1)
                k += 2
            re.append(k)
            k += 1
        _slot_cache[dim] = (np.array(re), np.array(im, dtype=int))
    return _slot_cache[dim]


def _re_slots(dim):
    return _slots(dim)[0]


def _im_slots(dim):
    return _slots(dim)[1]


def params_to_lower(params: np.ndarray, dim: int) -> np.ndarray:
    """Unpack a real parameter vector into the complex lower-triangular matrix."""
    if params.size != dim * dim:
        raise DimensionMismatch(f"expected {dim * dim} parameters, got {params.size}")
    rows, cols = _param_index(dim)
    re = params[_re_slots(dim)].copy()
    diag = rows == cols
    re[diag] = np.abs(re[diag])
    vals = re.astype(complex)
    vals[~diag] += 1j * params[_im_slots(dim)]
    t = np.zeros((dim, dim), dtype=complex)
    t[rows, cols] = vals
    return t


def t_factor_to_density(T: TFactor) -> DensityMatrix:
    g = T.gram()
    if np.trace(g).real < 1e-300:
        raise ZeroFactor("Tr(T^dag T) vanishes")
    return DensityMatrix(g)


def density_to_t_factor(rho: DensityMatrix) -> TFactor:
    """Lower-triangular ``T`` with ``T^dag T = rho``; works for rank-deficient rho."""
    w, v = np.linalg.eigh(rho.matrix)
    a = np.sqrt(np.clip(w, 0, None))[:, None] * v.conj().T  # a^dag a = rho
    j = np.eye(rho.dim)[::-1]
    # a J = Q R  =>  a = (Q J)(J R J) with J R J lower triangular
    _, r = np.linalg.qr(a @ j)
    t = j @ r @ j
    d = t.diagonal()
    phase = np.where(np.abs(d) > 0, np.conj(d) / np.where(d == 0, 1, np.abs(d)), 1.0)
    t = phase[:, None] * t
    t[np.diag_indices(rho.dim)] = np.abs(t.diagonal())
    return TFactor(np.tril(t))


def overlap(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Normalized overlap ``Tr[r1 r2] / sqrt(Tr[r1^2] Tr[r2^2])``."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatch(f"dims differ: {rho1.dim} vs {rho2.dim}")
    cross = np.real(np.vdot(rho1.matrix, rho2.matrix))  # Tr[r1 r2] for Hermitian r1
    return float(cross / np.sqrt(rho1.purity() * rho2.purity()))


# --- constructors --------------------------------------------------------


def _check_leakage(amp_sq_sum, what, dim, bound=LEAKAGE_BOUND):
    leak = 1.0 - amp_sq_sum
    if leak > bound:
        raise CutoffTooSmall(f"{what}: dim={dim} leaks {leak:.2e} > {bound:g}")


def coherent_state(alpha: complex, dim: int, leakage: float = LEAKAGE_BOUND) -> StateVector:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    _check_leakage(np.sum(np.abs(c) ** 2), "coherent_state", dim, leakage)
    return StateVector(c)


def squeezed_vacuum(r: float, dim: int, leakage: float = LEAKAGE_BOUND) -> StateVector:
    """``S(r)|0>`` in the Fock basis (even photon numbers only)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    c = np.zeros(dim, dtype=complex)
    c[0] = 1 / np.sqrt(np.cosh(r))
    t = -np.tanh(r)
    for n in range(2, dim, 2):
        c[n] = c[n - 2] * t * np.sqrt((n - 1) / n)
    _check_leakage(np.sum(np.abs(c) ** 2), "squeezed_vacuum", dim, leakage)
    return StateVector(c)


def fock_state(n: int, dim: int) -> StateVector:
    if not 0 <= n < dim:
        raise CutoffTooSmall(f"Fock state |{n}> does not fit in dim {dim}")
    c = np.zeros(dim)
    c[n] = 1.0
    return StateVector(c)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def squeezed_thermal_density(
    n_th: float, r: float, mu: complex, dim: int, work_dim=None, leakage: float = LEAKAGE_BOUND
) -> DensityMatrix:
    """``D(mu) S(r) nu_th S^dag(r) D^dag(mu)`` truncated to ``dim``.

    The operators are exponentiated in a larger working space (default
    ``2*dim + 40``) so truncation artifacts stay far above the kept block.
    """
    if n_th < 0:
        raise ValueError("n_th must be non-negative")
    w = work_dim or 2 * dim + 40
    a = annihilation(w)
    ad = a.conj().T
    n = np.arange(w)
    if n_th == 0:
        nu = (n == 0).astype(float)
    else:
        nu = (n_th / (n_th + 1)) ** n / (n_th + 1)
    rho = np.diag(nu).astype(complex)
    if r != 0:
        s = expm(r * (a @ a - ad @ ad) / 2)
        rho = s @ rho @ s.conj().T
    if mu != 0:
        d = expm(mu * ad - np.conj(mu) * a)
        rho = d @ rho @ d.conj().T
    block = rho[:dim, :dim]
    _check_leakage(np.trace(block).real, "squeezed_thermal_density", dim, leakage)
    return DensityMatrix(block)


def thermal_density(n_th: float, dim: int) -> DensityMatrix:
    return squeezed_thermal_density(n_th, 0.0, 0.0, dim)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim))


def singlet_density() -> DensityMatrix:
    """Projector onto ``(|01> - |10>)/sqrt(2)``; basis order |00>,|01>,|10>,|11>."""
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return StateVector(psi).density()


def werner_density(p: float) -> DensityMatrix:
    """``p * singlet + (1 - p) * I/4``."""
    if not 0 <= p <= 1:
        raise ValueError("weight must lie in [0, 1]")
    return DensityMatrix(p * singlet_density().matrix + (1 - p) * np.eye(4) / 4)


# --- Gaussian states -----------------------------------------------------


@dataclass(frozen=True)
class GaussianParams:
    """Parameters of the Gaussian Wigner function

    ``W(x, y) = (2 D^2/pi) exp{-2 D^2 [(x-a)^2/kappa + kappa (y-b)^2]}``

    with ``D = delta``.  The x-quadrature variance is ``kappa / (4 delta^2)``.
    """

    delta: float
    kappa: float
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def is_physical(self) -> bool:
        return self.delta <= 1 + 1e-12

    def covariance(self) -> np.ndarray:
        """Covariance of the (x, y) quadratures."""
        v = 1 / (4 * self.delta**2)
        return np.diag([self.kappa * v, v / self.kappa])

    def mean(self) -> np.ndarray:
        return np.array([self.a, self.b])

    @classmethod
    def from_photon_numbers(cls, n_th, n_sq, mu=0.0, anti_squeezed_x=True) -> GaussianParams:
        """Build parameters from thermal/squeezing photon numbers and displacement.

        ``kappa = e^{2 r}`` with ``sinh^2 r = n_sq``; ``anti_squeezed_x=False``
        gives ``kappa = e^{-2 r}`` instead.
        """
        r = np.arcsinh(np.sqrt(n_sq))
        kappa = np.exp(2 * r if anti_squeezed_x else -2 * r)
        return cls(float(1 / np.sqrt(2 * n_th + 1)), float(kappa), float(np.real(mu)), float(np.imag(mu)))

    def thermal_photons(self) -> float:
        return 0.5 * (1 / self.delta**2 - 1)

    def squeeze_r(self) -> float:
        """Squeezing parameter ``r`` of ``S(r)`` reproducing this state (``r = -log(kappa)/2``)."""
        return -0.5 * np.log(self.kappa)

    def to_density(self, dim: int, work_dim=None) -> DensityMatrix:
        if not self.is_physical:
            raise ValueError("delta > 1 has no density-matrix representation")
        n_th = max(self.thermal_photons(), 0.0)
        return squeezed_thermal_density(n_th, self.squeeze_r(), complex(self.a, self.b), dim, work_dim)


def gaussian_overlap(p: GaussianParams, q: GaussianParams) -> float:
    """Normalized overlap of two Gaussian states from their Wigner functions.

    Uses ``Tr[r1 r2] = pi * int W1 W2 dx dy``, a Gaussian integral in closed form.
    """
    s = p.covariance() + q.covariance()
    d = p.mean() - q.mean()
    cross = np.exp(-0.5 * d @ np.linalg.solve(s, d)) / (2 * np.sqrt(np.linalg.det(s)))
    return float(cross / np.sqrt(p.delta**2 * q.delta**2))


def squeezed_thermal_photon_distribution(n_th: float, kappa: float, n_max: int, tol: float = 1e-10) -> np.ndarray:
    """Photon-number probabilities of a squeezed thermal state by phase quadrature.

    Integrates ``[C-1]^n / C^{n+1}`` over ``phi in [0, 2 pi)`` with
    ``C = (n_th + 1/2)(sin^2(phi)/kappa + kappa cos^2(phi)) + 1/2``.  The
    integrand is smooth and periodic, so the uniform trapezoid rule is used
    and the grid is doubled until no entry moves by more than ``tol``.
    """
    if n_th < 0 or kappa <= 0:
        raise ValueError("need n_th >= 0 and kappa > 0")
    n = np.arange(n_max + 1)[:, None]

    def rule(k):
        phi = 2 * np.pi * np.arange(k) / k
        c = (n_th + 0.5) * (np.sin(phi) ** 2 / kappa + kappa * np.cos(phi) ** 2) + 0.5
        return np.mean(((c - 1) / c) ** n / c, axis=1)

    k = 64
    prev = rule(k)
    while k < 2**22:
        k *= 2
        cur = rule(k)
        if np.max(np.abs(cur - prev)) <= tol:
            return np.clip(cur, 0, None)
        prev = cur
    raise QuadratureNotConverged(f"photon distribution not stable at {k} nodes")
