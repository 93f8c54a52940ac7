import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm_lab.counting import simulate_counts
from sfwm_lab.entanglement import (
    CHSH_IDLER_DEG,
    CHSH_SIGNAL_DEG,
    TOMOGRAPHY_SETTINGS,
    SagnacParams,
    TwoQubitState,
    bell_phi_plus,
    chsh,
    chsh_from_lists,
    coincidence_probability,
    correlator,
    fidelity,
    fringe_visibility,
    ideal_counts,
    load_tomography_counts,
    random_state,
    sagnac_state,
    subtract_accidentals,
    tomography_linear,
    visibility_closed_form,
)
from sfwm_lab.errors import DataError, InvalidParameterError, InvalidSettingsError, InvalidStateError, ParseError

HH = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
MIXED = np.eye(4, dtype=complex) / 4


def werner(p):
    return sagnac_state(SagnacParams(noise=p))


# ------------------------------------------------------------ states


def test_sagnac_examples():
    rho = bell_phi_plus().rho
    assert np.allclose(np.diag(rho).real, [0.5, 0, 0, 0.5])
    assert rho[0, 3] == pytest.approx(0.5) and rho[3, 0] == pytest.approx(0.5)
    assert np.allclose(sagnac_state(SagnacParams(eta=0.0)).rho, HH)
    assert np.allclose(sagnac_state(SagnacParams(noise=1.0)).rho, MIXED)


@given(st.floats(0.0, 50.0), st.floats(-10.0, 10.0), st.floats(0.0, 1.0))
def test_sagnac_always_valid(eta, delta, p):
    TwoQubitState(sagnac_state(SagnacParams(eta, delta, p)).rho)


def test_state_validation():
    with pytest.raises(InvalidStateError):
        TwoQubitState(np.eye(3))
    with pytest.raises(InvalidStateError):
        TwoQubitState(np.eye(4))
    with pytest.raises(InvalidStateError):
        TwoQubitState(np.diag([1.5, -0.5, 0, 0]))
    bad = MIXED.copy()
    bad[0, 1] = 0.1
    with pytest.raises(InvalidStateError):
        TwoQubitState(bad)
    with pytest.raises(InvalidParameterError):
        SagnacParams(eta=-1.0)
    with pytest.raises(InvalidParameterError):
        SagnacParams(noise=1.5)


def test_state_json_round_trip():
    s = sagnac_state(SagnacParams(0.8, 0.3, 0.1))
    assert np.array_equal(TwoQubitState.from_dict(s.to_dict()).rho, s.rho)


# ------------------------------------------------------------ fringes


def test_coincidence_examples():
    phi = bell_phi_plus()
    assert coincidence_probability(phi, 0.0, 0.0) == pytest.approx(0.5)
    assert coincidence_probability(phi, 0.0, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert coincidence_probability(phi, math.pi / 4, math.pi / 4) == pytest.approx(0.5)


def test_ideal_visibility():
    phi = bell_phi_plus()
    assert fringe_visibility(phi, "H") == pytest.approx(1.0, abs=1e-12)
    assert fringe_visibility(phi, "D") == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        fringe_visibility(phi, "R")


def test_white_noise_visibility():
    p = 1 - 0.933
    state = werner(p)
    assert fringe_visibility(state, "D") == pytest.approx(0.933, abs=1e-9)
    assert visibility_closed_form(state, "D") == pytest.approx(0.933, abs=1e-12)


def test_product_state_visibility():
    # the D-analyzed |HH> fringe is (1/2) cos^2 of the idler angle
    assert fringe_visibility(HH, "H") == pytest.approx(1.0, abs=1e-12)
    assert fringe_visibility(HH, "D") == pytest.approx(1.0, abs=1e-12)
    assert coincidence_probability(HH, math.pi / 4, 0.0) == pytest.approx(0.5)
    assert coincidence_probability(HH, math.pi / 4, math.pi / 2) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(0.0, 1.0), st.sampled_from(["H", "D"]))
def test_fringe_sweep_matches_closed_form(p, basis):
    state = werner(p)
    assert fringe_visibility(state, basis) == pytest.approx(1 - p, abs=1e-9)
    assert fringe_visibility(state, basis) == pytest.approx(visibility_closed_form(state, basis), abs=1e-9)


@settings(max_examples=40)
@given(st.floats(0.0, 1.0), st.floats(0.0, 3.0), st.floats(-math.pi, math.pi), st.sampled_from(["H", "D"]))
def test_fringe_sweep_close_for_any_sagnac_state(p, eta, delta, basis):
    # extrema may fall between the half-degree samples
    state = sagnac_state(SagnacParams(eta, delta, p))
    step = 2 * math.pi / 720
    assert fringe_visibility(state, basis) == pytest.approx(visibility_closed_form(state, basis), abs=step**2)


# ------------------------------------------------------------ CHSH


def test_chsh_reference_values():
    assert chsh_from_lists(bell_phi_plus()) == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert chsh_from_lists(HH) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert chsh_from_lists(werner(1 - 0.933)) == pytest.approx(2.639, abs=5e-4)
    assert CHSH_SIGNAL_DEG == (-22.5, 67.5, 22.5, 112.5)
    assert CHSH_IDLER_DEG == (-45.0, 45.0, 0.0, 90.0)


def test_chsh_affine_in_noise():
    for p in np.linspace(0.0, 1.0, 5):
        assert chsh_from_lists(werner(p)) == pytest.approx(2 * math.sqrt(2) * (1 - p), abs=1e-9)


def test_chsh_list_validation():
    with pytest.raises(InvalidParameterError):
        chsh_from_lists(HH, (0, 45, 22.5, 112.5))
    with pytest.raises(InvalidParameterError):
        chsh_from_lists(HH, (0, 90, 22.5))


def test_product_correlator():
    for a, b in ((0.1, 0.7), (1.0, -0.3)):
        assert correlator(HH, a, b) == pytest.approx(math.cos(2 * a) * math.cos(2 * b), abs=1e-12)


@settings(max_examples=40)
@given(st.integers(0, 10_000), *[st.floats(-math.pi, math.pi)] * 5)
def test_chsh_symmetries(seed, a, a2, b, b2, phase):
    rng = np.random.default_rng(seed)
    rho = random_state(rng).rho
    s = chsh(rho, a, a2, b, b2)
    # swapping the signal settings is compensated by flipping one idler analyzer
    assert chsh(rho, a2, a, b, b2 + math.pi / 2) == pytest.approx(s, abs=1e-12)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    pure = np.outer(psi, psi.conj())
    turned = np.exp(1j * phase) * psi
    assert chsh(np.outer(turned, turned.conj()), a, a2, b, b2) == pytest.approx(chsh(pure, a, a2, b, b2), abs=1e-12)


# ------------------------------------------------------------ fidelity


def test_fidelity_identities():
    phi = bell_phi_plus()
    assert fidelity(phi, phi) == pytest.approx(1.0, abs=1e-10)
    assert fidelity(phi, MIXED) == pytest.approx(0.25, abs=1e-10)
    assert fidelity(phi, HH) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(InvalidStateError):
        fidelity(np.diag([2.0, -1.0, 0, 0]), phi)


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_fidelity_symmetry_and_identity(seed, r1, r2):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, r1), random_state(rng, r2)
    assert abs(fidelity(a, b) - fidelity(b, a)) < 1e-10
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-8)
    dist = 0.5 * np.abs(np.linalg.eigvalsh(a.rho - b.rho)).sum()
    if dist > 1e-8:
        assert fidelity(a, b) < 1.0


# ------------------------------------------------------------ tomography


def test_tomography_bell_round_trip():
    rec = tomography_linear(ideal_counts(bell_phi_plus(), total=1e4))
    assert np.max(np.abs(rec.rho - bell_phi_plus().rho)) < 1e-6


def test_tomography_random_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        state = random_state(rng)
        rec = tomography_linear(ideal_counts(state, total=3.0))
        assert np.max(np.abs(rec.rho - state.rho)) < 1e-6


def test_tomography_with_poisson_counts():
    phi = bell_phi_plus()
    means = ideal_counts(phi, total=1e5)
    draws = simulate_counts({s: m for s, m in zip(TOMOGRAPHY_SETTINGS, means)}, 1.0, seed=12)
    rec = tomography_linear([draws[s] for s in TOMOGRAPHY_SETTINGS])
    assert fidelity(rec, phi) >= 0.99


def test_tomography_errors():
    with pytest.raises(InvalidSettingsError):
        tomography_linear(np.ones(16), ["HH"] * 16)
    with pytest.raises(InvalidSettingsError):
        tomography_linear(np.ones(4))
    with pytest.raises(InvalidSettingsError):
        tomography_linear(np.ones(16), ["HX"] + TOMOGRAPHY_SETTINGS[1:])
    with pytest.raises(DataError):
        tomography_linear(-np.ones(16))


def test_accidental_subtraction():
    assert np.array_equal(subtract_accidentals([5.0, 1.0], [2.0, 3.0]), [3.0, 0.0])


def test_load_counts(tmp_path):
    path = tmp_path / "tomo.csv"
    counts = ideal_counts(bell_phi_plus(), total=1000.0)
    path.write_text("setting_s,setting_i,counts\n" + "".join(
        f"{s[0]},{s[1]},{c}\n" for s, c in zip(TOMOGRAPHY_SETTINGS, counts)))
    settings_read, read = load_tomography_counts(path)
    assert settings_read == TOMOGRAPHY_SETTINGS
    assert np.allclose(read, counts)
    path.write_text("H,Q,3\n")
    with pytest.raises(ParseError):
        load_tomography_counts(path)
    path.write_text("H,V\n")
    with pytest.raises(ParseError):
        load_tomography_counts(path)
