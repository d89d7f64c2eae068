import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invariant_lab.exceptions import ValidationError
from invariant_lab.invariants import bargmann, kd_distribution, overlap
from invariant_lab.nonclassicality import (
    REGION_LABELS,
    OverlapTriple,
    classify_invariant,
    convex_body_check,
    lemma3_converse_verify,
    lemma3_verify,
    lemma4_margin,
    overlap_inequalities,
    random_mixed_qubit_overlaps,
    random_pure_overlaps,
    real_triple,
    real_triple_delta3,
    real_triple_h,
    rebit_region_grid,
    rebit_triple,
    support_uncertainty,
)
from invariant_lab.states import OrthonormalBasis, PureState, random_pure_state

SQ3 = np.sqrt(3.0)


def ket(*a):
    return PureState.from_unnormalized(np.asarray(a, dtype=complex))


def test_five_quarters_example():
    r = overlap_inequalities(OverlapTriple(0.25, 0.75, 0.75))
    assert r.inequality_lhs[2] == pytest.approx(1.25, abs=1e-12)
    assert r.violated == (False, False, True)


def test_zero_and_one_triples():
    assert not any(overlap_inequalities(OverlapTriple(0, 0, 0)).violated)
    r = overlap_inequalities(OverlapTriple(1, 1, 1))
    assert r.inequality_lhs == (1.0, 1.0, 1.0) and not any(r.violated)


def test_overlap_triple_range():
    with pytest.raises(ValidationError):
        OverlapTriple(1.1, 0, 0)


def test_convex_body_examples():
    assert convex_body_check(OverlapTriple(1, 1, 1)) == (pytest.approx(1.0), True)
    lhs, ok = convex_body_check(OverlapTriple(0.5, 0.5, 0.5))
    assert lhs == pytest.approx(1.5 - 2 * 0.5**1.5, abs=1e-15) and ok


def test_convex_body_random_pure_qutrits():
    ov = random_pure_overlaps(10_000, 3, seed=4)
    for row in ov[:2000]:
        assert convex_body_check(OverlapTriple(*row))[1]


def test_classification_examples():
    assert classify_invariant((1 + 1j) / 4) == "imaginary"
    assert classify_invariant(-1 / 8) == "negative"
    assert classify_invariant(3 / 8) == "positive"
    assert classify_invariant(1e-13) == "zero"


def test_report_carries_classification():
    assert overlap_inequalities(OverlapTriple(0.25, 0.25, 0.25), -1 / 8).classification == "negative"


def test_support_uncertainty_qubit_examples():
    z, x = OrthonormalBasis.computational(2), OrthonormalBasis.fourier(2)
    r = support_uncertainty(ket(1, 0), z, x)
    assert (r.n_I, r.n_F, r.mub_classical, r.sum_condition) == (1, 2, True, False)
    r = support_uncertainty(ket(1, 1), z, x)
    assert (r.n_I, r.n_F, r.mub_classical) == (2, 1, True)


def test_support_uncertainty_non_mub_not_applicable():
    z = OrthonormalBasis.computational(2)
    assert support_uncertainty(ket(1, 0), z, z).mub_classical is None


def test_support_sum_condition_forces_nonclassical_kd():
    z, f = OrthonormalBasis.computational(4), OrthonormalBasis.fourier(4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        psi = random_pure_state(4, rng)
        r = support_uncertainty(psi, z, f)
        assert r.sum_condition
        g = kd_distribution(psi, z, f).values
        assert np.any(np.abs(g.imag) > 1e-10) or np.any(g.real < -1e-10) or np.any(g.real > 1 + 1e-10)


def test_commuting_triples_obey_polytope():
    rng = np.random.default_rng(1)
    for _ in range(500):
        d = int(rng.integers(2, 6))
        s = [np.diag(rng.dirichlet(np.ones(d))) for _ in range(3)]
        t = OverlapTriple(overlap(s[0], s[1]), overlap(s[0], s[2]), overlap(s[1], s[2]))
        assert max(overlap_inequalities(t).inequality_lhs) <= 1 + 1e-10
        v = bargmann(s).value
        assert abs(v.imag) < 1e-12 and -1e-12 <= v.real <= 1 + 1e-12


def test_impossibility_witness_pairs():
    # overlaps 1/2: complex qubit triple vs real qutrit triple
    q = [ket(1, 0), ket(1, 1), ket(1, 1j)]
    c1 = 1 - 1 / np.sqrt(2)
    r = [ket(1, 0, 0), ket(1, 1, 0), PureState([1 / np.sqrt(2), c1, np.sqrt(0.5 - c1**2)])]
    for t in (q, r):
        assert np.allclose(OverlapTriple.from_states(*t).as_array(), 0.5, atol=1e-12)
    assert abs(bargmann(q).value.imag) > 0.1
    assert abs(bargmann(r).value.imag) < 1e-15
    # (|0>+|1>, |1>+|2>, |0>+|2>)/sqrt2 has amplitude overlaps 1/2, squared overlaps 1/4
    lit = [ket(1, 1, 0), ket(0, 1, 1), ket(1, 0, 1)]
    assert np.allclose(OverlapTriple.from_states(*lit).as_array(), 0.25, atol=1e-12)
    neg = [ket(1, 0, 0), ket(1, SQ3, 0), ket(1, -SQ3, 0)]
    pos = [ket(1, 0, 0), ket(1, SQ3, 0), ket(3, SQ3, np.sqrt(24))]
    for t, sign in ((neg, -1), (pos, 1)):
        assert np.allclose(OverlapTriple.from_states(*t).as_array(), 0.25, atol=1e-12)
        assert abs(bargmann(t).value - sign / 8) < 1e-12


def test_real_triple_examples():
    t = real_triple(0.3, 0.0, 0.0)
    assert (t.h1, t.h2, t.h3, t.delta3) == pytest.approx((1, 1, 1, 1))
    assert real_triple(np.pi / 2, np.pi / 4, np.pi / 4).delta3 == pytest.approx(0.5, abs=1e-15)


@given(st.floats(0, 2 * np.pi), st.floats(0, np.pi), st.floats(0, np.pi))
def test_real_triple_internal_consistency(a, b, g):
    t = real_triple(a, b, g)
    o = OverlapTriple.from_states(*t.states)
    d12, d13, d23 = o.d12, o.d13, o.d23
    assert abs(t.h1 - (-d12 + d13 + d23)) < 1e-12
    assert abs(t.h2 - (d12 - d13 + d23)) < 1e-12
    assert abs(t.h3 - (d12 + d13 - d23)) < 1e-12
    assert abs(t.delta3 - bargmann(t.states).value) < 1e-12


def test_rebit_examples():
    r = rebit_triple(0.7, 0.7)
    assert r.overlaps.d23 == pytest.approx(1.0)
    assert r.delta3 == pytest.approx(np.cos(0.7) ** 2)
    r = rebit_triple(2 * np.pi / 3, np.pi / 3)
    assert r.delta3 == pytest.approx(-0.125, abs=1e-15)
    assert r.region == "negative"


def test_rebit_grid_one_witness_per_interior_point():
    _, _, labels = rebit_region_grid(60)
    flat = set(labels.ravel())
    assert flat <= set(REGION_LABELS) | {"boundary"}
    assert "multiple" not in flat and "none" not in flat
    for lab in REGION_LABELS:
        assert lab in flat


def test_real_triple_containment_at_alpha_011():
    g = np.linspace(0, np.pi, 120)
    b, c = np.meshgrid(g, g, indexing="ij")
    _, _, h3 = real_triple_h(0.11, b, c)
    d3 = real_triple_delta3(0.11, b, c)
    region = h3 > 1 + 1e-10
    assert region.any()
    assert np.all(d3[region] > 0)


def test_lemma3_small():
    r = lemma3_verify(5000, dims=(2, 3), seed=1)
    assert r.total == 0 and r.violating[2] > 0


def test_lemma3_needs_real_amplitudes():
    assert lemma3_verify(5000, dims=(2,), seed=1, complex_amplitudes=True).total > 0


def test_lemma3_converse_small():
    bad, eligible = lemma3_converse_verify(5000, seed=2)
    assert bad == 0 and eligible > 0


def test_lemma4_margin():
    v, margin, n = lemma4_margin(60)
    assert v == 0 and margin > 0 and n > 0


def test_mixed_qubit_overlaps_convex_body():
    for row in random_mixed_qubit_overlaps(2000, seed=3):
        assert convex_body_check(OverlapTriple(*row))[1]
