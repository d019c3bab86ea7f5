"""Tests for the exactly solvable two-oscillator closed forms."""

import numpy as np
import pytest

from zenopure.engine import (
    DensityMatrix,
    ProbeState,
    build_projected_propagator,
    fidelity,
    run_purification,
    survival_probability,
    trace_distance,
)
from zenopure.linalg import dominant_eigenpair, unitary_exponential
from zenopure.oscillator import (
    ClosedFormCoefficients,
    CutoffTooSmall,
    DegenerateInterval,
    OscillatorParams,
    ZeroFrequency,
    build_hamiltonian,
    closed_form_propagator,
    closed_form_rho,
    coefficients,
    coherent_state,
    destroy,
    eigenvector_u_n,
    factorized_propagator,
    lambda_n,
    thermal_state,
    tuned_tau,
)

SQRT3 = np.sqrt(3.0)

REFERENCE = OscillatorParams(
    big_omega=1.0, omega=1.0, g=0.2, alpha=0.5, beta=1.0, tau=2 * np.pi / 1.2
)


def literal_lambda0(c: ClosedFormCoefficients, alpha: complex) -> complex:
    """Textbook exponent 1 - e^B - A^2/(1 - e^{-C}), evaluated as written.

    Algebraically identical to the factored exponent used in production but
    numerically independent of it (different cancellation pattern), so it
    serves as an oracle away from the intervals where it loses digits.
    """
    w = 1.0 - c.exp_b - c.a_coef ** 2 / (1.0 - c.exp_neg_c)
    return np.exp(-abs(alpha) ** 2 * w)


# ------------------------------------------------------------ parameters


def test_params_validation():
    with pytest.raises(ValueError):
        OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=0.0, tau=1.0)
    with pytest.raises(ValueError):
        OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=-1.0)
    with pytest.raises(ValueError):
        OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=1.0, n_max_a=0)
    with pytest.raises(CutoffTooSmall):
        OscillatorParams(1.0, 1.0, 0.2, alpha=2.0, beta=1.0, tau=1.0, n_max_b=10)
    # a number-state probe is exactly representable at any cutoff
    OscillatorParams(1.0, 1.0, 0.2, alpha=0.0, beta=1.0, tau=1.0, n_max_a=2, n_max_b=2)


def test_destroy():
    b = destroy(3)
    expected = np.array([[0, 1, 0], [0, 0, np.sqrt(2)], [0, 0, 0]], dtype=complex)
    np.testing.assert_allclose(b, expected, atol=1e-15)
    with pytest.raises(ValueError):
        destroy(0)


# ---------------------------------------------------------- coefficients


def test_coefficients_reference_values():
    # On resonance with g = 0.2 and tau = 2 pi / 1.2: delta tau = pi / 3,
    # so Z = 1/2, E = e^{i pi / 3}, and every coefficient is elementary.
    c = coefficients(REFERENCE)
    assert c.delta == pytest.approx(0.2, abs=1e-15)
    assert c.big_omega_plus == pytest.approx(1.2, abs=1e-14)
    assert c.big_omega_minus == pytest.approx(0.8, abs=1e-14)
    assert c.a_coef == pytest.approx(SQRT3, abs=1e-12)
    assert c.exp_b == pytest.approx(1 + 1j * SQRT3, abs=1e-12)
    assert c.exp_c == pytest.approx(0.25 + 0.25j * SQRT3, abs=1e-12)
    assert (1 - c.exp_neg_c) == pytest.approx(1j * SQRT3, abs=1e-12)
    assert c.abs_exp_c == pytest.approx(0.5, abs=1e-12)
    assert c.alpha_tilde == pytest.approx(-0.5j, abs=1e-12)
    assert c.lambda0 == pytest.approx(1.0, abs=1e-12)


def test_coefficients_decoupled():
    # g = 0 decouples the modes: A = 0 and e^C is the bare phase e^{-i omega tau}.
    p = OscillatorParams(2.0, 1.0, 0.0, 0.5, beta=1.0, tau=1.0)
    c = coefficients(p)
    assert c.delta == pytest.approx(0.5, abs=1e-15)
    assert c.a_coef == pytest.approx(0.0, abs=1e-15)
    assert c.exp_c == pytest.approx(np.exp(-1j), abs=1e-14)
    assert c.abs_exp_c == pytest.approx(1.0, abs=1e-14)
    # the probe dephases alone: lambda0 = exp(-|alpha|^2 (1 - e^{-i Omega tau}))
    expected = np.exp(-0.25 * (1 - np.exp(-2j)))
    assert c.lambda0 == pytest.approx(expected, abs=1e-12)


def test_coefficients_small_interval_limit():
    p = OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=1e-4 / 0.2)
    c = coefficients(p)
    assert abs(c.a_coef) < 2e-4
    assert abs(c.exp_b - 1) < 1e-3
    assert abs(c.exp_c - 1) < 1e-3
    assert abs(c.abs_exp_c - 1) < 1e-8
    assert abs(c.lambda0 - 1) < 1e-3


def test_coefficients_degenerate_interval():
    with pytest.raises(DegenerateInterval):
        coefficients(OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=0.0))
    with pytest.raises(DegenerateInterval):
        # delta tau = pi exactly
        coefficients(OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=np.pi / 0.2))
    with pytest.raises(DegenerateInterval):
        # g = 0 on resonance: delta = 0 at any interval
        coefficients(OscillatorParams(1.0, 1.0, 0.0, 0.5, beta=1.0, tau=1.3))


def test_coefficients_identity_grid():
    # Sweep generic parameter combinations and hold the public identities:
    # e^C e^{-C} = 1, |e^C| matches its trigonometric form, and the literal
    # textbook eigenvalue matches the production one.
    checked = 0
    for g in (0.15, 0.7):
        for d_om in (0.0, 0.6):
            for tau in (0.4, 1.1, 2.3):
                for alpha in (0.5, 0.3 - 0.2j):
                    p = OscillatorParams(
                        1.0 + d_om / 2, 1.0 - d_om / 2, g, alpha, beta=1.0, tau=tau
                    )
                    try:
                        c = coefficients(p)
                    except DegenerateInterval:
                        continue
                    assert abs(c.exp_c * c.exp_neg_c - 1) <= 1e-12
                    assert abs(abs(c.exp_c) - c.abs_exp_c) <= 1e-12
                    assert abs(c.exp_b * c.exp_c
                               - np.exp(-1j * (p.big_omega + p.omega) * tau)) <= 1e-12
                    assert abs(literal_lambda0(c, alpha) - c.lambda0) <= 1e-8
                    assert abs(c.lambda0) <= 1.0 + 1e-12
                    checked += 1
    assert checked >= 20


def test_lambda_n_geometric():
    c = coefficients(REFERENCE)
    assert lambda_n(c, 0) == c.lambda0
    assert lambda_n(c, 3) == pytest.approx(c.lambda0 * c.exp_c ** 3, abs=1e-14)
    assert abs(lambda_n(c, 5)) == pytest.approx(0.5 ** 5, abs=1e-12)
    with pytest.raises(ValueError):
        lambda_n(c, -1)


# ---------------------------------------------------------- eigenvectors


def test_eigenvector_ground_is_coherent():
    c = coefficients(REFERENCE)
    u0 = eigenvector_u_n(c, 0, 30)
    target = coherent_state(-0.5j, 30)
    overlap = abs(np.vdot(target, u0))
    assert overlap >= 1 - 1e-8


def test_eigenvector_residuals_against_engine():
    sys_ = build_hamiltonian(REFERENCE)
    phi = ProbeState(coherent_state(REFERENCE.alpha, REFERENCE.n_max_a))
    v = build_projected_propagator(sys_, phi, REFERENCE.tau).matrix
    c = coefficients(REFERENCE)
    for n in range(4):
        u = eigenvector_u_n(c, n, 30)
        lam = lambda_n(c, n)
        residual = np.linalg.norm(v @ u - lam * u) / abs(lam)
        assert residual <= 1e-5


def test_eigenvector_decoupled_is_fock():
    p = OscillatorParams(2.0, 1.0, 0.0, 0.5, beta=1.0, tau=1.0)
    c = coefficients(p)
    vec = eigenvector_u_n(c, 2, 6)
    expected = np.zeros(6)
    expected[2] = 1.0
    np.testing.assert_allclose(vec, expected, atol=1e-15)


def test_eigenvector_errors():
    c = coefficients(REFERENCE)
    with pytest.raises(ValueError):
        eigenvector_u_n(c, -1, 30)
    with pytest.raises(ValueError):
        eigenvector_u_n(c, 30, 30)
    with pytest.raises(CutoffTooSmall):
        eigenvector_u_n(c, 0, 2)


# ----------------------------------------------------------- hamiltonian


def test_hamiltonian_is_hermitian_and_coupled():
    sys_ = build_hamiltonian(
        OscillatorParams(1.3, 0.9, 0.25, 0.0, beta=1.0, tau=1.0, n_max_a=5, n_max_b=4)
    )
    h = sys_.hamiltonian
    np.testing.assert_allclose(h, h.conj().T, atol=1e-15)
    assert sys_.dim_a == 5 and sys_.dim_b == 4


def test_hamiltonian_decoupled_is_diagonal():
    sys_ = build_hamiltonian(
        OscillatorParams(2.0, 1.0, 0.0, 0.0, beta=1.0, tau=1.0, n_max_a=3, n_max_b=3)
    )
    h = sys_.hamiltonian
    np.testing.assert_allclose(h, np.diag(np.diag(h)), atol=1e-15)
    np.testing.assert_allclose(
        np.diag(h).real, [2 * a + b for a in range(3) for b in range(3)], atol=1e-14
    )


def test_hamiltonian_two_level_spectrum():
    # One excitation splits into omega +- g on resonance.
    p = OscillatorParams(1.0, 1.0, 0.2, 0.0, beta=1.0, tau=1.0, n_max_a=2, n_max_b=2)
    eigenvalues = np.linalg.eigvalsh(build_hamiltonian(p).hamiltonian)
    np.testing.assert_allclose(eigenvalues, [0.0, 0.8, 1.2, 2.0], atol=1e-12)


# ---------------------------------------------------------------- states


def test_coherent_state_basics():
    np.testing.assert_allclose(coherent_state(0.0, 4), [1, 0, 0, 0], atol=1e-15)
    amps = coherent_state(0.5, 30)
    norm2 = float(np.sum(np.abs(amps) ** 2))
    assert norm2 >= 1 - 1e-10
    mean_photon = float(np.sum(np.arange(30) * np.abs(amps) ** 2))
    assert mean_photon == pytest.approx(0.25, abs=1e-9)
    phased = coherent_state(0.5j, 30)
    assert phased[1] == pytest.approx(amps[1] * 1j, abs=1e-15)


def test_coherent_state_cutoff_guard():
    with pytest.raises(CutoffTooSmall):
        coherent_state(3.0, 10)
    with pytest.raises(ValueError):
        coherent_state(0.5, 0)


def test_thermal_state_populations():
    rho = thermal_state(1.0, 1.0, 30)
    assert float(np.trace(rho.matrix).real) == pytest.approx(1.0, abs=1e-12)
    assert rho.matrix[0, 0].real == pytest.approx(1 - np.exp(-1), abs=1e-9)
    cold = thermal_state(100.0, 1.0, 30)
    assert cold.matrix[0, 0].real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        thermal_state(-1.0, 1.0, 30)
    with pytest.raises(ValueError):
        thermal_state(1.0, 1.0, 0)


# ---------------------------------------------------------- trajectories


def test_closed_form_rho_starts_thermal():
    form = closed_form_rho(REFERENCE, 0)
    assert form.displacement_argument == pytest.approx(0.0, abs=1e-15)
    assert form.gauge_norm == pytest.approx(1 - np.exp(-1), abs=1e-12)
    thermal = thermal_state(1.0, 1.0, REFERENCE.n_max_b)
    assert trace_distance(form.state, thermal) <= 1e-12


def test_closed_form_rho_converges_to_coherent_target():
    form = closed_form_rho(REFERENCE, 10)
    target = coherent_state(-0.5j, REFERENCE.n_max_b)
    assert 1 - fidelity(form.state, target) <= 1e-3
    late = closed_form_rho(REFERENCE, 20)
    assert late.displacement_argument == pytest.approx(-0.5j, abs=1e-4)
    assert late.gauge_norm == pytest.approx(1.0, abs=1e-5)


def test_closed_form_rho_matches_engine_off_tuning():
    p = OscillatorParams(1.1, 0.9, 0.15, 0.4, beta=1.2, tau=0.7)
    sys_ = build_hamiltonian(p)
    phi = ProbeState(coherent_state(p.alpha, p.n_max_a))
    v = build_projected_propagator(sys_, phi, p.tau)
    rho0 = thermal_state(p.beta, p.omega, p.n_max_b)
    traj = run_purification(rho0, v, 3)
    for step in traj.steps:
        form = closed_form_rho(p, step.n)
        assert trace_distance(step.state, form.state) <= 1e-6


def test_closed_form_rho_validation():
    with pytest.raises(ValueError):
        closed_form_rho(REFERENCE, -1)


# ----------------------------------------------------------- propagators


def test_closed_form_propagator_decoupled_diagonal():
    p = OscillatorParams(2.0, 1.0, 0.0, 0.5, beta=1.0, tau=1.0, n_max_a=30, n_max_b=12)
    c = coefficients(p)
    w = closed_form_propagator(p)
    np.testing.assert_allclose(
        w, np.diag(c.lambda0 * c.exp_c ** np.arange(12)), atol=1e-14
    )
    sys_ = build_hamiltonian(p)
    phi = ProbeState(coherent_state(p.alpha, p.n_max_a))
    v = build_projected_propagator(sys_, phi, p.tau)
    np.testing.assert_allclose(v.matrix, w, atol=1e-8)


def test_factorized_propagator_zero_time():
    p = OscillatorParams(1.0, 1.0, 0.2, 0.0, beta=1.0, tau=0.0, n_max_a=4, n_max_b=4)
    np.testing.assert_allclose(factorized_propagator(p), np.eye(16), atol=1e-15)


def test_factorized_propagator_decoupled():
    p = OscillatorParams(2.0, 1.0, 0.0, 0.5, beta=1.0, tau=1.0, n_max_a=6, n_max_b=6)
    c = coefficients(p)
    expected = np.kron(
        np.diag(c.exp_b ** np.arange(6)), np.diag(c.exp_c ** np.arange(6))
    )
    np.testing.assert_allclose(factorized_propagator(p), expected, atol=1e-13)


def test_factorized_propagator_interior_block():
    p = OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=2 * np.pi / 1.2,
                         n_max_a=16, n_max_b=16)
    direct = unitary_exponential(build_hamiltonian(p).hamiltonian, p.tau)
    factored = factorized_propagator(p)
    idx = [a * 16 + b for a in range(6) for b in range(6)]
    block = np.abs(direct[np.ix_(idx, idx)] - factored[np.ix_(idx, idx)]).max()
    assert block <= 1e-6


# --------------------------------------------------------------- tunings


def test_tuned_tau_values():
    assert tuned_tau(REFERENCE, 1, "plus") == pytest.approx(2 * np.pi / 1.2, abs=1e-14)
    assert tuned_tau(REFERENCE, 1, "minus") == pytest.approx(2 * np.pi / 0.8, abs=1e-14)
    assert tuned_tau(REFERENCE, 2, "plus") == pytest.approx(
        2 * tuned_tau(REFERENCE, 1, "plus"), abs=1e-13
    )


def test_tuned_tau_restores_unit_eigenvalue():
    # minus branch with m = 2 lands exactly on delta tau = pi, which is the
    # degenerate interval, so it is excluded here.
    for branch, m in (("plus", 1), ("plus", 2), ("minus", 1)):
        tau = tuned_tau(REFERENCE, m, branch)
        p = OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=tau)
        c = coefficients(p)
        assert abs(abs(c.lambda0) - 1.0) <= 1e-9


def test_tuned_tau_errors():
    with pytest.raises(ValueError):
        tuned_tau(REFERENCE, 0, "plus")
    with pytest.raises(ValueError):
        tuned_tau(REFERENCE, 1, "both")
    strong = OscillatorParams(1.0, 1.0, 1.0, 0.5, beta=1.0, tau=1.0)
    with pytest.raises(ZeroFrequency):
        tuned_tau(strong, 1, "minus")


# ------------------------------------------------------------ truncation


def test_cutoff_convergence():
    # Doubling headroom over the reference cutoff moves nothing by more
    # than 1e-6: the truncation at 30 is already converged.
    results = {}
    for cutoff in (30, 40):
        p = OscillatorParams(1.0, 1.0, 0.2, 0.5, beta=1.0, tau=2 * np.pi / 1.2,
                             n_max_a=cutoff, n_max_b=cutoff)
        sys_ = build_hamiltonian(p)
        phi = ProbeState(coherent_state(p.alpha, cutoff))
        v = build_projected_propagator(sys_, phi, p.tau)
        rho0 = thermal_state(p.beta, p.omega, cutoff)
        pair = dominant_eigenpair(v.matrix)
        target = coherent_state(-0.5j, cutoff)
        traj = run_purification(rho0, v, 10, target=target)
        results[cutoff] = (
            pair.value,
            traj.steps[10].fidelity,
            survival_probability(rho0, v, 10),
        )
    for a, b in zip(results[30], results[40]):
        assert abs(a - b) <= 1e-6
