import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invariant_lab.exceptions import (
    ConsistencyError,
    DimensionMismatchError,
    UnbiasedPairViolation,
    UndefinedWeakValueError,
    VanishingPostSelectionError,
    ValidationError,
)
from invariant_lab.invariants import (
    anomaly_check,
    bargmann,
    extended_kd,
    extended_kd_bargmann_form,
    kd_distribution,
    kd_value,
    otoc,
    otoc_coarse,
    otoc_direct,
    otoc_quasiprobability,
    overlap,
    ps_qfi,
    psqfi_kd_table,
    reconstruct_from_kd,
    univariate_traces,
    weak_value,
)
from invariant_lab.states import (
    PVM,
    DensityMatrix,
    OrthonormalBasis,
    PureState,
    random_ginibre_density,
    random_hermitian,
    random_pure_state,
    random_unitary,
)

from .oracles import otoc_loops, psqfi_finite_difference

SQ3 = np.sqrt(3.0)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def ket(*a):
    return PureState.from_unnormalized(np.asarray(a, dtype=complex))


# ---------------------------------------------------------------- bargmann


def test_single_state_trace():
    assert bargmann([random_ginibre_density(3, seed=1)]).value == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_pair_vanishes():
    assert abs(bargmann([ket(1, 0), ket(0, 1)]).value) < 1e-15


def test_three_eighths_triple():
    v = bargmann([ket(1, 0), ket(1, SQ3), ket(SQ3, 1)]).value
    assert abs(v - 3 / 8) < 1e-12


def test_one_plus_i_over_four():
    v = bargmann([ket(1, 0), ket(1, 1), ket(1, 1j)]).value
    assert abs(v - (1 + 1j) / 4) < 1e-12


def test_opposite_sign_triples_with_equal_overlaps():
    neg = [ket(1, 0), ket(1, SQ3), ket(1, -SQ3)]
    pos = [ket(1, 0, 0), ket(1, SQ3, 0), ket(3, SQ3, np.sqrt(24))]
    assert abs(bargmann(neg).value + 1 / 8) < 1e-12
    assert abs(bargmann(pos).value - 1 / 8) < 1e-12
    for t in (neg, pos):
        for a, b in ((0, 1), (1, 2), (0, 2)):
            assert abs(overlap(t[a], t[b]) - 0.25) < 1e-12


def test_labels_carried():
    assert bargmann([ket(1, 0)] * 2, labels=["a", "b"]).argument_labels == ("a", "b")


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        bargmann([ket(1, 0), ket(1, 0, 0)])


def test_empty_rejected():
    with pytest.raises(ValidationError):
        bargmann([])


def test_univariate_traces():
    t = univariate_traces(DensityMatrix(np.diag([0.5, 0.25, 0.25])), 3)
    assert np.allclose(t, [1.0, 0.375, 0.15625], atol=1e-14)


def _random_states(rng, n, d):
    out = []
    for _ in range(n):
        if rng.random() < 0.5:
            out.append(random_pure_state(d, rng))
        else:
            out.append(random_ginibre_density(d, seed=rng))
    return out


@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_cyclic_and_reversal_symmetry(d, n, seed):
    rng = np.random.default_rng(seed)
    s = _random_states(rng, n, d)
    v = bargmann(s).value
    assert abs(bargmann(s[1:] + s[:1]).value - v) < 1e-12
    assert abs(bargmann(s[::-1]).value - np.conj(v)) < 1e-12


@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_unitary_invariance_and_modulus(d, n, seed):
    rng = np.random.default_rng(seed)
    pure = [random_pure_state(d, rng) for _ in range(n)]
    u = random_unitary(d, rng)
    v = bargmann(pure).value
    rotated = [PureState(u @ p.amplitudes) for p in pure]
    assert abs(bargmann(rotated).value - v) < 1e-12
    assert abs(v) <= 1 + 1e-12


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_order_two_real_and_bounded(d, seed):
    rng = np.random.default_rng(seed)
    a, b = _random_states(rng, 2, d)
    v = bargmann([a, b]).value
    assert abs(v.imag) < 1e-12
    assert -1e-12 <= v.real <= 1 + 1e-12


@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_commuting_diagonal_states_give_probabilities(d, n, seed):
    rng = np.random.default_rng(seed)
    states = [np.diag(rng.dirichlet(np.ones(d))) for _ in range(n)]
    v = bargmann(states).value
    assert abs(v.imag) < 1e-12 and -1e-12 <= v.real <= 1 + 1e-12


# ---------------------------------------------------------------- KD


def test_kd_value_is_delta3():
    rho = random_ginibre_density(3, seed=4)
    i, f = random_pure_state(3, 5), random_pure_state(3, 6)
    assert abs(kd_value(rho, i, f) - bargmann([i, rho, f]).value) < 1e-14


def test_kd_grid_matches_pointwise_oracle():
    rho = random_ginibre_density(3, seed=8)
    bi, bf = OrthonormalBasis.computational(3), OrthonormalBasis.fourier(3)
    grid = kd_distribution(rho, bi, bf)
    for a in range(3):
        for b in range(3):
            expect = kd_value(rho, bi.vectors[a], bf.vectors[b])
            assert abs(grid.values[a, b] - expect) < 1e-14


def test_kd_marginals():
    rho = random_ginibre_density(4, seed=9)
    bi, bf = OrthonormalBasis.computational(4), OrthonormalBasis.from_columns(random_unitary(4, 1))
    g = kd_distribution(rho, bi, bf).values
    assert abs(g.sum() - 1) < 1e-12
    assert np.allclose(g.sum(axis=1), np.diag(rho.matrix), atol=1e-12)


def test_kd_qubit_maximally_mixed_example():
    g = kd_distribution(np.eye(2) / 2, OrthonormalBasis.computational(2), OrthonormalBasis.fourier(2))
    assert np.allclose(g.values, 0.25, atol=1e-14)


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_kd_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_ginibre_density(d, seed=rng)
    bi = OrthonormalBasis.computational(d)
    bf = OrthonormalBasis.from_columns(random_unitary(d, rng))
    back = reconstruct_from_kd(kd_distribution(rho, bi, bf))
    assert 0.5 * np.abs(np.linalg.eigvalsh(back.matrix - rho.matrix)).sum() < 1e-9


def test_kd_reconstruction_rejects_orthogonal_pair():
    b = OrthonormalBasis.computational(2)
    with pytest.raises(UnbiasedPairViolation) as exc:
        reconstruct_from_kd(kd_distribution(np.eye(2) / 2, b, b))
    assert exc.value.i == 0 and exc.value.f == 1


def test_extended_kd_routes_and_marginal():
    rho = random_ginibre_density(3, seed=2)
    p1 = PVM.from_basis(OrthonormalBasis.computational(3))
    p2 = PVM.from_basis(OrthonormalBasis.fourier(3))
    total = sum(extended_kd(rho, [p1, p2], [a, b]) for a in range(3) for b in range(3))
    assert abs(total - 1) < 1e-12
    direct = extended_kd(rho, [p1, p2], [1, 2])
    assert abs(direct - extended_kd_bargmann_form(rho, [p1.projectors[1], p2.projectors[2]])) < 1e-12


def test_extended_kd_bad_outcome():
    p = PVM.from_basis(OrthonormalBasis.computational(2))
    with pytest.raises(ValidationError):
        extended_kd(np.eye(2) / 2, [p], [2])


# ---------------------------------------------------------------- weak values


def test_sigma_x_weak_value_for_literal_pre_and_post():
    # pre |1>, post |y+>: <y+|X|1>/<y+|1> = 1 / (-i) = +i
    r = weak_value(X, ket(0, 1), ket(1, 1j))
    assert abs(r.value - 1j) < 1e-12
    assert anomaly_check(r, X) == "anomalous-imaginary"


def test_sigma_x_weak_value_with_roles_swapped():
    r = weak_value(X, ket(1, 1j), ket(0, 1))
    assert abs(r.value + 1j) < 1e-12


def test_weak_value_invariant_decomposition():
    r = weak_value(X, ket(0, 1), ket(1, 1j))
    recon = sum(a * t for a, t in r.numerator_terms.items()) / r.denominator
    assert abs(recon - r.value) < 1e-12
    assert abs(r.denominator - 0.5) < 1e-12


def test_weak_value_eigenstate_is_eigenvalue():
    psi = ket(1, 0)
    r = weak_value(Z, psi, random_pure_state(2, 3))
    assert abs(r.value - 1) < 1e-12
    assert anomaly_check(r, Z) == "classical"


def test_weak_value_anomalous_real():
    # near-orthogonal real pre/post amplify past the spectrum
    t = 0.1
    r = weak_value(Z, ket(np.cos(np.pi / 4 + t), np.sin(np.pi / 4 + t)), ket(1, -1))
    assert r.value.imag == pytest.approx(0, abs=1e-12)
    assert abs(r.value.real) > 1
    assert anomaly_check(r, Z) == "anomalous-real"


def test_weak_value_orthogonal_raises():
    with pytest.raises(UndefinedWeakValueError):
        weak_value(X, ket(1, 0), ket(0, 1))


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_weak_value_matches_direct_formula(d, seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(d, rng)
    psi, phi = random_pure_state(d, rng), random_pure_state(d, rng)
    amp = np.vdot(phi.amplitudes, psi.amplitudes)
    if abs(amp) ** 2 < 1e-6:
        return
    direct = np.vdot(phi.amplitudes, a @ psi.amplitudes) / amp
    assert abs(weak_value(a, psi, phi).value - direct) < 1e-8 * max(1, abs(direct))


# ---------------------------------------------------------------- ps-QFI


def test_psqfi_unpostselected_is_four_variance():
    psi = random_pure_state(3, 1)
    g = random_hermitian(3, 2)
    mean = np.vdot(psi.amplitudes, g @ psi.amplitudes).real
    var = np.vdot(psi.amplitudes, g @ g @ psi.amplitudes).real - mean**2
    assert abs(ps_qfi(psi, g, np.eye(3), 0.4) - 4 * var) < 1e-10


def test_psqfi_qubit_example():
    # |+>, generator Z/2, no post-selection: 4 Var(Z/2) = 1
    assert abs(ps_qfi(ket(1, 1), Z / 2, np.eye(2), 0.0) - 1.0) < 1e-12


def test_psqfi_vanishing_postselection():
    with pytest.raises(VanishingPostSelectionError):
        ps_qfi(ket(1, 0), Z, np.diag([0, 1]), 0.3)


def test_psqfi_table_marginal_is_probability():
    psi, g = random_pure_state(3, 4), random_hermitian(3, 5)
    f = ket(1, 1, 1)
    t = psqfi_kd_table(psi, g, f, 0.2)
    diag = t.values.sum()
    assert abs(diag - t.probability) < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_psqfi_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    d = 2 + seed % 2
    psi, g = random_pure_state(d, rng), random_hermitian(d, rng)
    f = random_pure_state(d, rng)
    proj = np.outer(f.amplitudes, f.amplitudes.conj())
    if seed % 3 == 0:
        proj = np.eye(d) - proj  # higher-rank post-selection
    theta = float(rng.uniform(0, np.pi))
    oracle = psqfi_finite_difference(psi.amplitudes, g, proj, theta)
    assert abs(ps_qfi(psi, g, proj, theta) - oracle) < 1e-6 * max(1, abs(oracle))


# ---------------------------------------------------------------- OTOC


def test_otoc_identity_dynamics_commuting():
    # U = I with W = V = Z gives Tr(Z Z Z Z rho) = 1
    assert abs(otoc(np.eye(2) / 2, Z, Z, np.eye(2)) - 1) < 1e-14


def test_otoc_anticommuting_pair():
    # W = Z, V = X, U = I: Tr(Z X Z X rho) = -1
    assert abs(otoc(np.eye(2) / 2, Z, X, np.eye(2)) + 1) < 1e-14


@pytest.mark.parametrize("seed", range(5))
def test_otoc_three_routes(seed):
    rng = np.random.default_rng(seed)
    rho = random_ginibre_density(3, seed=rng).matrix
    W, V, U = random_hermitian(3, rng), random_hermitian(3, rng), random_unitary(3, rng)
    direct = otoc_direct(rho, W, V, U)
    assert abs(otoc_coarse(rho, W, V, U) - direct) < 1e-10
    assert abs(otoc_quasiprobability(rho, W, V, U).weighted_sum() - direct) < 1e-10
    assert abs(otoc_loops(rho, W, V, U) - direct) < 1e-10


def test_otoc_quasiprobability_sums_to_one():
    rng = np.random.default_rng(1)
    rho = random_ginibre_density(3, seed=rng)
    q = otoc_quasiprobability(rho, random_hermitian(3, rng), random_hermitian(3, rng), random_unitary(3, rng))
    assert abs(q.values.sum() - 1) < 1e-12


def test_otoc_rejects_non_unitary():
    with pytest.raises(ValidationError):
        otoc(np.eye(2) / 2, Z, X, 2 * np.eye(2))


def test_overlap_is_real():
    assert isinstance(overlap(ket(1, 1j), ket(1, 0)), float)


def test_consistency_error_type():
    assert issubclass(ConsistencyError, Exception)
