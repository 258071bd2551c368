import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

import oracles as o
from qmle.errors import DimensionMismatch
from qmle.povm import (
    ClickSummary,
    HomodyneData,
    HomodyneRecord,
    SpinData,
    SpinOutcome,
    binomial_loss_coefficient,
    fock_amplitudes,
    fock_position_amplitude,
    gaussian_homodyne_density,
    gaussian_homodyne_moments,
    homodyne_density,
    homodyne_expectation,
    homodyne_expectations,
    homodyne_povm,
    no_click_probability,
    spin_coherent_kets,
    spin_projector_expectation,
    spin_projector_expectations,
    squeezed_homodyne_density,
)
from qmle.states import (
    DensityMatrix,
    GaussianParams,
    TFactor,
    coherent_state,
    density_to_t_factor,
    fock_state,
    maximally_mixed,
    singlet_density,
)

X = np.linspace(-8, 8, 16001)


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def random_factor(seed, dim):
    return TFactor.from_params(np.random.default_rng(seed).standard_normal(dim * dim), dim)


# --- wavefunctions -----------------------------------------------------------


def test_vacuum_wavefunction_normalized_with_quarter_variance():
    p = fock_position_amplitude(0, X) ** 2
    assert integrate.trapezoid(p, X) == pytest.approx(1, abs=1e-12)
    assert integrate.trapezoid(p * X**2, X) == pytest.approx(0.25, abs=1e-12)


@given(st.integers(0, 40), st.floats(-6, 6))
def test_wavefunction_parity(n, x):
    assert fock_position_amplitude(n, -x) == pytest.approx((-1) ** n * fock_position_amplitude(n, x), abs=1e-13)


def test_orthonormality():
    psi = fock_amplitudes(X, 21)
    gram = integrate.trapezoid(psi[:, :, None] * psi[:, None, :], X, axis=0)
    np.testing.assert_allclose(gram, np.eye(21), atol=1e-8)


def test_wavefunction_matches_hermite_polynomials():
    x = np.linspace(-4, 4, 81)
    psi = fock_amplitudes(x, 25)
    for n in range(25):
        np.testing.assert_allclose(psi[:, n], o.hermite_function(n, x), atol=1e-11)


def test_wavefunction_no_overflow_at_high_n():
    psi = fock_amplitudes(np.linspace(-20, 20, 401), 300)
    assert np.all(np.isfinite(psi))
    assert np.max(np.abs(psi)) < 2


# --- loss coefficients -----------------------------------------------------


def test_loss_coefficients():
    assert binomial_loss_coefficient(3, 0, 1.0) == 1
    assert binomial_loss_coefficient(3, 2, 1.0) == 0
    assert binomial_loss_coefficient(5, 0, 0.6) == pytest.approx(0.6**2.5, rel=1e-14)
    assert binomial_loss_coefficient(1, 1, 0.8) == pytest.approx(o.LOSS_B_1_1_08, rel=1e-14)
    # large arguments stay finite through log-gamma
    assert np.isfinite(binomial_loss_coefficient(400, 300, 0.5))


# --- homodyne kernel ---------------------------------------------------------


def test_vacuum_kernel_lossless():
    t = TFactor(np.diag([1.0, 0, 0]))
    for x in (-0.7, 0.0, 0.3, 1.1):
        rec = HomodyneRecord(0.4, x)
        assert homodyne_expectation(t, rec, 1.0) == pytest.approx(fock_position_amplitude(0, x) ** 2, rel=1e-13)


@pytest.mark.parametrize("eta", [1.0, 0.7, 0.3])
@pytest.mark.parametrize("phase", [0.0, 1.3, 4.0])
def test_kernel_completeness(eta, phase):
    t = random_factor(7, 5)
    data = HomodyneData(np.full(X.size, phase), X)
    total = integrate.trapezoid(homodyne_expectations(t, data, eta), X)
    assert total == pytest.approx(np.trace(t.gram()).real, rel=1e-6)


def test_kernel_matches_gaussian_closed_form_coherent():
    alpha = 1.0
    t = density_to_t_factor(coherent_state(alpha, 16).density())
    p = GaussianParams(1, 1, alpha, 0)
    x = np.linspace(-5, 5, 401)
    for phase in np.linspace(0, 2 * np.pi, 7):
        got = homodyne_expectations(t, HomodyneData(np.full(x.size, phase), x), 0.8)
        np.testing.assert_allclose(got, gaussian_homodyne_density(p, phase, 0.8, x), atol=1e-6)


def test_kernel_matches_gaussian_closed_form_squeezed_thermal():
    p = GaussianParams.from_photon_numbers(0.3, 0.3, 0.4 + 0.2j)
    rho = p.to_density(70)
    x = np.linspace(-5, 5, 201)
    for phase in (0.0, 0.9, 2.5):
        got = homodyne_density(rho, phase, x, 0.7)
        np.testing.assert_allclose(got, gaussian_homodyne_density(p, phase, 0.7, x), atol=1e-6)


def test_kernel_matches_kraus_and_convolution_oracles(rng):
    rho = o.random_density(rng, 5)
    x = np.linspace(-3, 3, 61)
    for phase in (0.0, 1.1, 5.0):
        got = homodyne_density(DensityMatrix(rho), phase, x, 0.65)
        np.testing.assert_allclose(got, o.ideal_density(o.lossy_density_kraus(rho, 0.65), phase, x), atol=1e-12)
        np.testing.assert_allclose(got, o.lossy_density_convolution(rho, phase, x, 0.65), atol=1e-10)


def test_kernel_phase_convention_matches_quadrature_operator(rng):
    rho = o.random_density(rng, 4)
    for phase in (0.3, 2.0):
        p = homodyne_density(DensityMatrix(rho), phase, X, 1.0)
        moments = [integrate.trapezoid(p * X**k, X) for k in (1, 2, 3, 4)]
        np.testing.assert_allclose(moments, o.quadrature_moments(rho, phase), atol=1e-9)


def test_positive_sum_equals_povm_trace():
    t = random_factor(3, 4)
    r = np.random.default_rng(3)
    data = HomodyneData(r.uniform(0, 2 * np.pi, 50), r.normal(0, 1, 50))
    povm = homodyne_povm(data, 4, 0.75)
    via_povm = np.einsum("mn,inm->i", t.gram(), povm).real
    np.testing.assert_allclose(homodyne_expectations(t, data, 0.75), via_povm, rtol=1e-12)
    # POVM elements are Hermitian and positive
    assert np.allclose(povm, np.conj(np.swapaxes(povm, 1, 2)))
    assert np.linalg.eigvalsh(povm).min() > -1e-14


@given(st.integers(0, 2**31), st.floats(0.01, 1.0), st.floats(-6, 6), st.floats(0, 2 * np.pi))
def test_kernel_non_negative(seed, eta, x, phase):
    t = random_factor(seed, 4)
    assert homodyne_expectation(t, HomodyneRecord(phase, x), eta) >= 0


@given(st.integers(0, 2**31), st.floats(0.05, 1.0), st.floats(-4, 4), st.floats(0, 2 * np.pi))
def test_kernel_phase_periodic(seed, eta, x, phase):
    # phi and phi + 2 pi agree up to the rounding of phi + 2 pi itself
    t = random_factor(seed, 4)
    a = homodyne_expectation(t, HomodyneRecord(phase, x), eta)
    b = homodyne_expectation(t, HomodyneRecord(phase + 2 * np.pi, x), eta)
    assert b == pytest.approx(a, rel=1e-11, abs=1e-300)


def test_eta_validation():
    t = random_factor(0, 2)
    with pytest.raises(ValueError):
        homodyne_expectation(t, HomodyneRecord(0, 0), 0.0)
    with pytest.raises(ValueError):
        homodyne_expectation(t, HomodyneRecord(0, 0), 1.2)


# --- Gaussian closed forms -------------------------------------------------


def test_gaussian_vacuum_density():
    p = GaussianParams(1, 1)
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(gaussian_homodyne_density(p, 0.4, 1.0, x), np.sqrt(2 / np.pi) * np.exp(-2 * x**2), rtol=1e-14)


@pytest.mark.parametrize("phase", [0.0, 0.8, 2.0, 4.5])
def test_gaussian_mean_and_normalization(phase):
    p = GaussianParams(0.8, 1.7, 0.6, -0.4)
    dens = gaussian_homodyne_density(p, phase, 1.0, X)
    assert integrate.trapezoid(dens, X) == pytest.approx(1, abs=1e-12)
    mean = integrate.trapezoid(X * dens, X)
    assert mean == pytest.approx(p.a * np.cos(phase) + p.b * np.sin(phase), abs=1e-12)


def test_gaussian_lossy_is_convolution_in_rescaled_variable():
    # y = x / sqrt(eta) has the ideal density convolved with N(0, (1-eta)/(4 eta))
    p = GaussianParams(0.9, 0.6, 0.3, 0.2)
    eta, phase = 0.8, 1.0
    m1, v1 = gaussian_homodyne_moments(p, phase, 1.0)
    m, v = gaussian_homodyne_moments(p, phase, eta)
    assert m / np.sqrt(eta) == pytest.approx(m1)
    assert v / eta == pytest.approx(v1 + (1 - eta) / (4 * eta))


def test_squeezed_reference_density():
    dens = squeezed_homodyne_density(1.5, 0.0, 1.0, X)
    assert integrate.trapezoid(X * dens, X) == pytest.approx(1.5, abs=1e-10)
    assert integrate.trapezoid((X - 1.5) ** 2 * dens, X) == pytest.approx(0.25, abs=1e-10)
    for eta in (0.2, 0.55, 0.9):
        d = squeezed_homodyne_density(1.0, 0.7, eta, X)
        assert integrate.trapezoid(X * d, X) == pytest.approx(eta, abs=1e-10)
    d = squeezed_homodyne_density(0.0, 1.0, 0.8, X)
    var = integrate.trapezoid(X**2 * d, X)
    assert var == pytest.approx(o.REF_VAR_08_R1, abs=1e-10)


# --- spin kernel -------------------------------------------------------------


def test_spin_kets_are_bloch_eigenvectors(rng):
    for _ in range(10):
        n = unit(rng.standard_normal(3))
        k = spin_coherent_kets(n)[0]
        ref = o.bloch_ket(n)
        assert abs(np.vdot(ref, k)) == pytest.approx(1, abs=1e-12)


def test_spin_singlet_examples(rng):
    t = density_to_t_factor(singlet_density())
    for _ in range(5):
        n = unit(rng.standard_normal(3))
        assert spin_projector_expectation(t, SpinOutcome(n, n)) == pytest.approx(0, abs=1e-15)
        assert spin_projector_expectation(t, SpinOutcome(n, -n)) == pytest.approx(0.5, abs=1e-14)


def test_spin_mixed_is_isotropic(rng):
    t = density_to_t_factor(maximally_mixed(4))
    a = np.array([unit(v) for v in rng.standard_normal((20, 3))])
    b = np.array([unit(v) for v in rng.standard_normal((20, 3))])
    np.testing.assert_allclose(spin_projector_expectations(t, SpinData(a, b)), 0.25, atol=1e-14)


def test_spin_completeness(rng):
    t = TFactor.from_params(rng.standard_normal(16), 4)
    a, b = unit(rng.standard_normal(3)), unit(rng.standard_normal(3))
    total = sum(spin_projector_expectation(t, SpinOutcome(sa * a, sb * b)) for sa in (1, -1) for sb in (1, -1))
    assert total == pytest.approx(np.trace(t.gram()).real, rel=1e-12)


def test_spin_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        spin_projector_expectation(TFactor(np.eye(3)), SpinOutcome([0, 0, 1], [0, 0, 1]))


# --- ON/OFF ------------------------------------------------------------------


def test_no_click_probability():
    rho = coherent_state(1.2, 24).density()
    assert no_click_probability(rho, 0.0) == pytest.approx(1)
    assert no_click_probability(fock_state(1, 3).density(), 0.3) == pytest.approx(0.7)
    for eta in (0.1, 0.5, 0.9):
        assert no_click_probability(rho, eta) == pytest.approx(np.exp(-eta * 1.44), abs=1e-6)
    with pytest.raises(ValueError):
        no_click_probability(rho, 1.5)


# --- record types ------------------------------------------------------------


def test_record_validation():
    with pytest.raises(ValueError):
        HomodyneData([0.0, np.nan], [0.0, 1.0])
    with pytest.raises(ValueError):
        SpinData([[1.0, 0, 0]], [[1.0, 1.0, 0]])
    with pytest.raises(ValueError):
        ClickSummary(10, 11)
    with pytest.raises(ValueError):
        ClickSummary(0, 0)
    d = HomodyneData.from_records([HomodyneRecord(0.1, 0.2), HomodyneRecord(0.3, 0.4)])
    assert len(d) == 2 and d[1] == HomodyneRecord(0.3, 0.4)
    assert list(d) == [HomodyneRecord(0.1, 0.2), HomodyneRecord(0.3, 0.4)]
    assert ClickSummary(10, 4).click_fraction == 0.4
