import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as o
from qmle.errors import CutoffTooSmall, DimensionMismatch, QuadratureNotConverged, ZeroFactor
from qmle.states import (
    DensityMatrix,
    GaussianParams,
    StateVector,
    TFactor,
    coherent_state,
    density_to_t_factor,
    fock_state,
    gaussian_overlap,
    maximally_mixed,
    overlap,
    singlet_density,
    squeezed_thermal_density,
    squeezed_thermal_photon_distribution,
    squeezed_vacuum,
    t_factor_to_density,
    thermal_density,
    werner_density,
)

def random_t(seed, dim):
    r = np.random.default_rng(seed)
    return TFactor.from_params(r.standard_normal(dim * dim), dim)


# --- constructors ----------------------------------------------------------


def test_coherent_vacuum():
    np.testing.assert_array_equal(coherent_state(0, 4).amplitudes, [1, 0, 0, 0])


def test_coherent_amplitude_and_photon_number():
    psi = coherent_state(1, 16)
    assert psi.amplitudes[0].real == pytest.approx(o.C0_COHERENT_1, abs=1e-9)
    assert psi.mean_photon_number() == pytest.approx(1, abs=1e-4)


def test_coherent_cutoff_too_small():
    with pytest.raises(CutoffTooSmall):
        coherent_state(3, 6)


def test_coherent_phase():
    amp = coherent_state(0.5j, 12).amplitudes
    np.testing.assert_allclose(amp / np.abs(amp), 1j ** np.arange(12), atol=1e-12)


def test_squeezed_vacuum_r0_is_vacuum():
    np.testing.assert_allclose(squeezed_vacuum(0, 6).amplitudes, [1, 0, 0, 0, 0, 0])


@given(st.floats(-1.0, 1.0))
def test_squeezed_vacuum_odd_amplitudes_vanish(r):
    amp = squeezed_vacuum(r, 80).amplitudes
    assert np.all(amp[1::2] == 0)


def test_squeezed_vacuum_half_photon():
    # dim=16 leaks 3.6e-5 of the norm at this r; 30 keeps leakage below 1e-6
    psi = squeezed_vacuum(o.R_HALF_PHOTON, 30)
    assert psi.mean_photon_number() == pytest.approx(0.5, abs=1e-4)
    with pytest.raises(CutoffTooSmall):
        squeezed_vacuum(o.R_HALF_PHOTON, 16)


def test_squeezed_vacuum_reduces_x_variance():
    r = 0.4
    rho = squeezed_vacuum(r, 40).density().matrix
    _, m2, _, _ = o.quadrature_moments(rho, 0.0)
    assert m2 == pytest.approx(np.exp(-2 * r) / 4, rel=1e-8)


def test_squeezed_matches_operator_construction():
    r = 0.5
    a = squeezed_vacuum(r, 40).density()
    b = squeezed_thermal_density(0, r, 0, 40)
    np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-12)


def test_squeezed_thermal_vacuum():
    rho = squeezed_thermal_density(0, 0, 0, 5)
    expected = np.zeros((5, 5))
    expected[0, 0] = 1
    np.testing.assert_allclose(rho.matrix, expected, atol=1e-14)


def test_squeezed_thermal_displacement_equals_coherent():
    rho = squeezed_thermal_density(0, 0, 1.0, 20)
    np.testing.assert_allclose(rho.matrix, coherent_state(1, 20).density().matrix, atol=1e-12)


def test_thermal_geometric():
    n_th = 0.5
    rho = squeezed_thermal_density(n_th, 0, 0, 48)
    n = np.arange(48)
    np.testing.assert_allclose(rho.photon_distribution(), n_th**n / (n_th + 1) ** (n + 1), atol=1e-12)
    np.testing.assert_allclose(thermal_density(n_th, 48).matrix, rho.matrix)


def test_constructors_unit_trace():
    states = [
        coherent_state(0.7 - 0.3j, 20).density(),
        squeezed_vacuum(0.3, 30).density(),
        squeezed_thermal_density(0.4, 0.2, 0.3 + 0.1j, 40),
        fock_state(3, 6).density(),
        singlet_density(),
        werner_density(0.3),
        maximally_mixed(5),
    ]
    for rho in states:
        assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-12)
        assert rho.is_positive()
    for psi in (coherent_state(1, 16), squeezed_vacuum(0.5, 40), fock_state(2, 4)):
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1, abs=1e-12)


def test_leakage_bound_is_configurable():
    with pytest.raises(CutoffTooSmall):
        coherent_state(1, 8)
    assert coherent_state(1, 8, leakage=1e-4).dim == 8


def test_singlet():
    rho = singlet_density().matrix
    np.testing.assert_allclose(rho.diagonal().real, [0, 0.5, 0.5, 0])
    assert rho[1, 2].real == pytest.approx(-0.5)
    assert singlet_density().purity() == pytest.approx(1)


# --- DensityMatrix -----------------------------------------------------------


def test_density_hermitian_exactly(rng):
    raw = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = DensityMatrix(raw @ raw.conj().T + 0.01 * raw)
    assert np.array_equal(rho.matrix, rho.matrix.conj().T)
    assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-12)


def test_density_json_round_trip(rng):
    rho = DensityMatrix(o.random_density(rng, 5))
    back = DensityMatrix.from_dict(json.loads(json.dumps(rho.to_dict())))
    assert np.array_equal(back.matrix, rho.matrix)
    d = rho.to_dict()
    assert set(d) == {"dim", "re", "im"}
    assert len(d["re"]) == 25


def test_embed_and_truncate(rng):
    rho = DensityMatrix(o.random_density(rng, 3))
    big = rho.embed(6)
    assert big.dim == 6
    np.testing.assert_allclose(big.matrix[:3, :3], rho.matrix)
    np.testing.assert_allclose(big.truncate(3).matrix, rho.matrix)


# --- TFactor ---------------------------------------------------------------


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_tfactor_layout(dim, seed):
    params = np.random.default_rng(seed).standard_normal(dim * dim)
    t = TFactor.from_params(params, dim)
    assert TFactor.n_params(dim) == dim * dim
    assert np.all(np.triu(t.elements, 1) == 0)
    assert np.all(t.elements.diagonal().imag == 0)
    assert np.all(t.elements.diagonal().real >= 0)
    back = t.to_params()
    fixed = params.copy()
    # diagonal slots hold |param|
    diag_slots = np.cumsum([2 * i + 1 for i in range(dim)]) - 1
    fixed[diag_slots] = np.abs(fixed[diag_slots])
    np.testing.assert_array_equal(back, fixed)


def test_tfactor_parameter_order():
    # row 0: T00; row 1: re T10, im T10, T11; row 2: re/im T20, re/im T21, T22
    p = np.arange(1.0, 10.0)
    t = TFactor.from_params(p, 3).elements
    assert t[0, 0] == 1
    assert t[1, 0] == 2 + 3j and t[1, 1] == 4
    assert t[2, 0] == 5 + 6j and t[2, 1] == 7 + 8j and t[2, 2] == 9


def test_tfactor_rejects_bad_input():
    with pytest.raises(ValueError):
        TFactor(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        TFactor(np.array([[-1, 0], [0, 1]]))
    with pytest.raises(DimensionMismatch):
        TFactor.from_params(np.ones(5), 2)


def test_identity_factor_is_maximally_mixed():
    rho = t_factor_to_density(TFactor(np.eye(5) / np.sqrt(5)))
    np.testing.assert_allclose(rho.matrix, np.eye(5) / 5, atol=1e-15)


def test_hand_multiplied_factor():
    rho = t_factor_to_density(TFactor(np.array([[1, 0], [1, 1]])))
    np.testing.assert_allclose(rho.matrix, np.array([[2, 1], [1, 1]]) / 3, atol=1e-15)


def test_zero_factor():
    with pytest.raises(ZeroFactor):
        t_factor_to_density(TFactor(np.zeros((3, 3))))


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_factor_output_is_valid_density(dim, seed):
    rho = t_factor_to_density(random_t(seed, dim))
    assert np.array_equal(rho.matrix, rho.matrix.conj().T)
    assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-12)
    assert rho.eigenvalues().min() >= -1e-10


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_unitary_invariance_of_factor(dim, seed):
    r = np.random.default_rng(seed)
    t = random_t(seed, dim)
    ut = o.random_unitary(r, dim) @ t.elements
    assert overlap(DensityMatrix(ut.conj().T @ ut), t_factor_to_density(t)) == pytest.approx(1, abs=1e-10)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_density_to_factor_round_trip(dim, rank, seed):
    rank = min(rank, dim)
    rho = DensityMatrix(o.random_density(np.random.default_rng(seed), dim, rank))
    t = density_to_t_factor(rho)
    np.testing.assert_allclose(t.gram(), rho.matrix, atol=1e-10)


# --- overlap ---------------------------------------------------------------


def test_overlap_examples():
    rho = coherent_state(0.5, 12).density()
    assert overlap(rho, rho) == pytest.approx(1, abs=1e-14)
    assert overlap(fock_state(0, 3).density(), fock_state(1, 3).density()) == 0
    assert overlap(fock_state(0, 2).density(), maximally_mixed(2)) == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    with pytest.raises(DimensionMismatch):
        overlap(maximally_mixed(2), maximally_mixed(3))


@given(st.integers(0, 2**31))
def test_overlap_complex_pure_states(seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal(4) + 1j * r.standard_normal(4)
    b = r.standard_normal(4) + 1j * r.standard_normal(4)
    pa, pb = StateVector(a), StateVector(b)
    expected = abs(np.vdot(pa.amplitudes, pb.amplitudes)) ** 2
    assert overlap(pa.density(), pb.density()) == pytest.approx(expected, abs=1e-12)
    assert overlap(pa.density(), pa.density()) == pytest.approx(1, abs=1e-12)


@given(st.integers(0, 2**31), st.floats(1e-3, 0.5))
def test_overlap_symmetric_and_below_one(seed, eps):
    r = np.random.default_rng(seed)
    a = DensityMatrix(o.random_density(r, 4))
    b = DensityMatrix(o.random_density(r, 4))
    assert overlap(a, b) == pytest.approx(overlap(b, a), abs=1e-14)
    assert 0 <= overlap(a, b) <= 1 + 1e-12
    m = a.matrix.copy()
    m[0, 0] += eps
    assert overlap(a, DensityMatrix(m)) < 1


# --- Gaussian states -------------------------------------------------------


def test_gaussian_params_validation():
    with pytest.raises(ValueError):
        GaussianParams(0, 1)
    with pytest.raises(ValueError):
        GaussianParams(1, -1)
    assert not GaussianParams(1.2, 1).is_physical


def test_gaussian_params_map_to_operator_state():
    # moments of the operator construction reproduce the Wigner-function moments
    p = GaussianParams.from_photon_numbers(0.3, 0.5, 0.4 + 0.2j)
    rho = p.to_density(90).matrix
    for phase in (0.0, 0.7, 2.1):
        m1, m2, _, _ = o.quadrature_moments(rho, phase)
        c, s = np.cos(phase), np.sin(phase)
        assert m1 == pytest.approx(p.a * c + p.b * s, abs=1e-10)
        var = (p.kappa**2 * c**2 + s**2) / (4 * p.delta**2 * p.kappa)
        assert m2 - m1**2 == pytest.approx(var, abs=1e-10)


def test_gaussian_overlap_matches_density_overlap():
    p = GaussianParams.from_photon_numbers(0.2, 0.3, 0.3)
    q = GaussianParams.from_photon_numbers(0.25, 0.2, 0.35 - 0.1j)
    d = 70
    assert gaussian_overlap(p, q) == pytest.approx(overlap(p.to_density(d), q.to_density(d)), abs=1e-9)
    assert gaussian_overlap(p, p) == pytest.approx(1, abs=1e-14)


# --- photon-number distribution --------------------------------------------


def test_photon_distribution_vacuum():
    p = squeezed_thermal_photon_distribution(0, 1, 5)
    np.testing.assert_allclose(p, [1, 0, 0, 0, 0, 0], atol=1e-15)


def test_photon_distribution_thermal():
    n = np.arange(20)
    p = squeezed_thermal_photon_distribution(0.5, 1, 19)
    np.testing.assert_allclose(p, 0.5**n / 1.5 ** (n + 1), atol=1e-14)


def test_photon_distribution_matches_operator_diagonal():
    kappa = np.exp(2 * np.arcsinh(np.sqrt(3)))
    p = squeezed_thermal_photon_distribution(0.1, kappa, 40)
    # operator construction needs dim ~140 before its truncation error drops below 1e-8
    diag = GaussianParams.from_photon_numbers(0.1, 3).to_density(140).photon_distribution()[:41]
    np.testing.assert_allclose(p, diag, atol=1e-8)


@pytest.mark.parametrize("n_th,kappa", [(0.0, 0.5), (0.2, 2.0), (1.0, 1.5), (0.5, 0.3)])
def test_photon_distribution_grid(n_th, kappa):
    p = squeezed_thermal_photon_distribution(n_th, kappa, 12)
    r = -0.5 * np.log(kappa)
    diag = squeezed_thermal_density(n_th, r, 0, 90).photon_distribution()[:13]
    np.testing.assert_allclose(p, diag, atol=1e-8)
    quad = [o.photon_distribution_quad(n_th, kappa, n) for n in range(13)]
    np.testing.assert_allclose(p, quad, atol=1e-10)
    assert np.all(p >= 0) and p.sum() <= 1 + 1e-9


def test_photon_distribution_not_converged():
    with pytest.raises(QuadratureNotConverged):
        squeezed_thermal_photon_distribution(0.3, 1e-7, 2, tol=1e-300)
