import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invariant_lab.exceptions import NumericalFailureError, ValidationError
from invariant_lab.spectrum import (
    NOISE_COLUMNS,
    CharPoly,
    largest_eigenvalue_truncated,
    newton_coefficients,
    noise_study,
    poly_roots,
    spectrum_from_traces,
)
from invariant_lab.states import random_ginibre_density


def power_sums(evals, d=None):
    evals = np.asarray(evals, dtype=float)
    return [float(np.sum(evals**n)) for n in range(1, (d or len(evals)) + 1)]


def ginibre_evals(d, rng):
    return np.linalg.eigvalsh(random_ginibre_density(d, seed=rng).matrix)[::-1]


def test_pure_qubit_polynomial():
    assert newton_coefficients([1, 1]).coefficients == (1.0, -1.0, 0.0)


def test_mixed_qubit_polynomial():
    assert newton_coefficients([1, 0.5]).coefficients == (1.0, -1.0, 0.25)


def test_diag_three_polynomial():
    c = newton_coefficients(power_sums([0.5, 0.3, 0.2])).coefficients
    assert np.allclose(c, [1, -1, 0.31, -0.03], atol=1e-14)


def test_newton_against_numpy_poly():
    evals = ginibre_evals(6, np.random.default_rng(1))
    assert np.allclose(newton_coefficients(power_sums(evals)).coefficients, np.poly(evals), atol=1e-12)


def test_trace_sanity_check():
    with pytest.raises(ValidationError):
        newton_coefficients([1.5, 1.0])
    with pytest.raises(ValidationError):
        newton_coefficients([])


def test_charpoly_must_be_monic():
    with pytest.raises(ValidationError):
        CharPoly((2.0, 1.0))


def test_roots_small_cases():
    assert sorted(poly_roots(CharPoly((1, -1, 0))).real) == pytest.approx([0, 1], abs=1e-14)
    assert poly_roots(CharPoly((1, -1, 0.25))).real == pytest.approx([0.5, 0.5], abs=1e-7)
    r = poly_roots(newton_coefficients(power_sums([0.5, 0.3, 0.2])))
    assert sorted(r.real) == pytest.approx([0.2, 0.3, 0.5], abs=1e-10)


def test_root_failure_reports_partial(monkeypatch):
    import invariant_lab.spectrum as sp

    monkeypatch.setattr(sp.np.linalg, "eigvals", lambda m: np.array([0.9, 0.1 + 0j]))
    with pytest.raises(NumericalFailureError) as exc:
        sp.poly_roots(CharPoly((1, -1, 0.25)))
    assert exc.value.partial is not None


def test_maximally_mixed_four():
    est = spectrum_from_traces([1, 0.25, 1 / 16, 1 / 64])
    assert est.eigenvalues == pytest.approx([0.25] * 4, abs=1e-4)


def test_pure_state_five():
    est = spectrum_from_traces([1.0] * 5)
    assert est.eigenvalues == pytest.approx([1, 0, 0, 0, 0], abs=1e-8)


@pytest.mark.parametrize("d", [2, 4, 6, 8])
def test_ginibre_round_trip(d):
    rng = np.random.default_rng(d)
    for _ in range(100):
        evals = ginibre_evals(d, rng)
        est = spectrum_from_traces(power_sums(evals))
        assert np.max(np.abs(np.array(est.eigenvalues) - evals)) < 1e-8
        # Vieta: product of roots equals the determinant
        assert abs(np.prod(est.eigenvalues) - np.prod(evals)) < 1e-8


def test_imaginary_parts_reported_at_large_dim():
    rng = np.random.default_rng(0)
    worst = max(max(spectrum_from_traces(power_sums(ginibre_evals(16, rng))).discarded_imag) for _ in range(50))
    assert worst > 1e-8


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_eigenvalue_sum_is_one(d, seed):
    est = spectrum_from_traces(power_sums(ginibre_evals(d, np.random.default_rng(seed))))
    assert abs(sum(est.eigenvalues) - 1) < 1e-9
    assert list(est.eigenvalues) == sorted(est.eigenvalues, reverse=True)


def _truncated_oracle(evals, k):
    """Exact rational coefficients, then the top root of the truncated polynomial."""
    ev = [Fraction(x).limit_denominator(10**6) for x in evals]
    m = len(ev) - k
    p = [sum(x**n for x in ev) for n in range(1, m + 1)]
    e = [Fraction(1)]
    for j in range(1, m + 1):
        e.append(sum((-1) ** (i - 1) * e[j - i] * p[i - 1] for i in range(1, j + 1)) / j)
    coeffs = [float((-1) ** j * e[j]) for j in range(m + 1)]
    return float(np.max(np.roots(coeffs).real))


def test_truncation_example_exact_value():
    # lambda^2 - lambda + 0.23 from Tr rho = 1, Tr rho^2 = 0.54
    expect = 0.5 + math.sqrt(0.02)
    assert _truncated_oracle([0.7, 0.2, 0.1], 1) == pytest.approx(expect, abs=1e-15)
    got = largest_eigenvalue_truncated(power_sums([0.7, 0.2, 0.1]), 3, 1)
    assert abs(got - expect) < 1e-12


def test_truncation_k_zero_is_full_spectrum():
    evals = ginibre_evals(5, np.random.default_rng(3))
    p = power_sums(evals)
    assert abs(largest_eigenvalue_truncated(p, 5, 0) - spectrum_from_traces(p).eigenvalues[0]) < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_truncation_matches_rational_oracle(k):
    rng = np.random.default_rng(k)
    for _ in range(20):
        evals = np.round(ginibre_evals(6, rng), 6)
        evals[0] += 1 - evals.sum()
        got = largest_eigenvalue_truncated(power_sums(evals), 6, k)
        assert abs(got - _truncated_oracle(evals, k)) < 1e-9


def test_truncation_range():
    with pytest.raises(ValidationError):
        largest_eigenvalue_truncated([1, 0.5, 0.3], 3, 2)
    with pytest.raises(ValidationError):
        largest_eigenvalue_truncated([1], 3, 0)


def test_noise_study_zero_noise():
    rows = noise_study([3, 9], [0.0], n_states=30, n_noisy=5, seed=1)
    for r in rows:
        assert r.rmse_real_full < 1e-8 and r.rmse_largest < 1e-8


def test_noise_study_monotone_and_deterministic():
    rows = noise_study([2, 4], [1e-5, 1e-3], n_states=40, n_noisy=20, seed=5)
    again = noise_study([2, 4], [1e-5, 1e-3], n_states=40, n_noisy=20, seed=5)
    assert rows == again
    by = {(r.dim, r.epsilon): r for r in rows}
    for d in (2, 4):
        assert by[d, 1e-3].rmse_real_full >= by[d, 1e-5].rmse_real_full


def test_noise_study_thread_count_invariant():
    a = noise_study([4], [1e-4], n_states=24, n_noisy=10, seed=3, n_workers=1)
    b = noise_study([4], [1e-4], n_states=24, n_noisy=10, seed=3, n_workers=4)
    assert abs(a[0].rmse_real_full - b[0].rmse_real_full) <= 1e-12


def test_noise_columns():
    assert NOISE_COLUMNS[:2] == ("dim", "epsilon")


def test_noise_study_validation():
    with pytest.raises(ValidationError):
        noise_study([1], [0.1], n_states=1, n_noisy=1)
    with pytest.raises(ValidationError):
        noise_study([2], [0.1], n_states=0, n_noisy=1)
