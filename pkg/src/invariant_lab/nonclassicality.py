"""Witnesses of set coherence built from overlaps and third-order invariants.

Three states that are simultaneously diagonalizable have overlaps obeying
``d_ab + d_ac - d_bc <= 1`` for every relabeling, and a real, non-negative
``Delta_3``. Violating either test certifies that the states are not
simultaneously diagonalizable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ValidationError
from .states import OrthonormalBasis, PureState, SeedLike, check_same_dim, make_rng, spawn_rngs

VIOLATION_TOL = 1e-10
BOUNDARY_TOL = 1e-9

#: sign patterns applied to (d12, d13, d23)
SIGN_PATTERNS = ((1, 1, -1), (1, -1, 1), (-1, 1, 1))


@dataclass(frozen=True)
class OverlapTriple:
    d12: float
    d13: float
    d23: float

    def __post_init__(self):
        for name in ("d12", "d13", "d23"):
            v = float(getattr(self, name))
            if not (-1e-12 <= v <= 1.0 + 1e-12):
                raise ValidationError(f"{name} = {v!r} outside [0, 1]")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.d12, self.d13, self.d23])

    @classmethod
    def from_states(cls, a: PureState, b: PureState, c: PureState) -> "OverlapTriple":
        check_same_dim(a, b, c)
        x, y, z = a.amplitudes, b.amplitudes, c.amplitudes
        return cls(abs(np.vdot(x, y)) ** 2, abs(np.vdot(x, z)) ** 2, abs(np.vdot(y, z)) ** 2)


@dataclass(frozen=True)
class WitnessReport:
    inequality_lhs: tuple
    violated: tuple
    convex_body_lhs: float
    classification: str | None = None


def _overlap_lhs(d: np.ndarray) -> np.ndarray:
    return np.asarray(SIGN_PATTERNS, dtype=float) @ d


def overlap_inequalities(t: OverlapTriple, delta3: complex | None = None) -> WitnessReport:
    """LHS of the three overlap inequalities for patterns ``(+,+,-)``, ``(+,-,+)``, ``(-,+,+)``."""
    lhs = _overlap_lhs(t.as_array())
    cb, _ = convex_body_check(t)
    cls = classify_invariant(delta3) if delta3 is not None else None
    return WitnessReport(
        tuple(float(x) for x in lhs),
        tuple(bool(x > 1.0 + VIOLATION_TOL) for x in lhs),
        cb,
        cls,
    )


def convex_body_check(t: OverlapTriple) -> tuple[float, bool]:
    """``d12 + d13 + d23 - 2 sqrt(d12 d13 d23) <= 1``, satisfied by every quantum triple."""
    d = np.clip(t.as_array(), 0.0, None)
    lhs = float(np.sum(d) - 2.0 * np.sqrt(np.prod(d)))
    return lhs, lhs <= 1.0 + VIOLATION_TOL


def classify_invariant(delta: complex, tol: float = 1e-10) -> str:
    """``imaginary`` if ``|Im| > tol``, else ``positive``, ``negative`` or ``zero``."""
    delta = complex(delta)
    if abs(delta.imag) > tol:
        return "imaginary"
    if delta.real > tol:
        return "positive"
    if delta.real < -tol:
        return "negative"
    return "zero"


@dataclass(frozen=True)
class SupportReport:
    n_I: int
    n_F: int
    sum_condition: bool
    mub_classical: bool | None


def support_uncertainty(
    psi: PureState, basis_I: OrthonormalBasis, basis_F: OrthonormalBasis, zero_tol: float = 1e-10
) -> SupportReport:
    """Support sizes of ``psi`` in two bases.

    ``sum_condition`` is ``n_I + n_F > d + 1``, which forces a KD value that
    is negative or non-real. For mutually unbiased bases ``mub_classical``
    reports ``n_I * n_F == d``, the condition for a classical KD
    distribution; it is ``None`` when the bases are not mutually unbiased.
    """
    check_same_dim(psi, basis_I.vectors[0], basis_F.vectors[0])
    d = psi.dim
    n_i = int(np.sum(np.abs(basis_I.matrix().conj().T @ psi.amplitudes) ** 2 > zero_tol))
    n_f = int(np.sum(np.abs(basis_F.matrix().conj().T @ psi.amplitudes) ** 2 > zero_tol))
    cross = np.abs(basis_I.matrix().conj().T @ basis_F.matrix()) ** 2
    mub = bool(np.all(np.abs(cross - 1.0 / d) <= 1e-9))
    return SupportReport(n_i, n_f, n_i + n_f > d + 1, (n_i * n_f == d) if mub else None)


# --------------------------------------------------------------------------
# real-amplitude parametrizations
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RealTriple:
    states: tuple
    h1: float
    h2: float
    h3: float
    delta3: float


def real_triple_delta3(alpha, beta, gamma):
    """``cos^2 b cos^2 g + sin(2b) sin(2g) sin(a) / 4`` (broadcasts)."""
    return np.cos(beta) ** 2 * np.cos(gamma) ** 2 + 0.25 * np.sin(2 * beta) * np.sin(
        2 * gamma
    ) * np.sin(alpha)


def real_triple_h(alpha, beta, gamma):
    """``(h1, h2, h3)`` of the parametrized triple (broadcasts)."""
    d12 = np.cos(beta) ** 2
    d13 = np.cos(gamma) ** 2
    d23 = (np.cos(beta) * np.cos(gamma) + np.sin(beta) * np.sin(gamma) * np.sin(alpha)) ** 2
    return -d12 + d13 + d23, d12 - d13 + d23, d12 + d13 - d23


def real_triple(alpha: float, beta: float, gamma: float) -> RealTriple:
    """Three real qutrit states ``|0>``, ``cos b|0> + sin b|1>`` and
    ``cos g|0> + sin g sin a|1> + sin g cos a|2>``.

    ``h1 = -d12 + d13 + d23``, ``h2 = d12 - d13 + d23``,
    ``h3 = d12 + d13 - d23``.
    """
    psi1 = PureState([1.0, 0.0, 0.0])
    psi2 = PureState([np.cos(beta), np.sin(beta), 0.0])
    psi3 = PureState(
        [np.cos(gamma), np.sin(gamma) * np.sin(alpha), np.sin(gamma) * np.cos(alpha)]
    )
    h1, h2, h3 = (float(x) for x in real_triple_h(alpha, beta, gamma))
    return RealTriple((psi1, psi2, psi3), h1, h2, h3, float(real_triple_delta3(alpha, beta, gamma)))


REGION_LABELS = ("overlap(+,+,-)", "overlap(+,-,+)", "overlap(-,+,+)", "negative")


@dataclass(frozen=True)
class RebitTriple:
    overlaps: OverlapTriple
    delta3: float
    fired: tuple
    region: str


def _rebit_arrays(theta, phi):
    d12 = np.cos(theta) ** 2
    d13 = np.cos(phi) ** 2
    d23 = np.cos(theta - phi) ** 2
    delta3 = np.cos(theta) * np.cos(theta - phi) * np.cos(phi)
    lhs = np.stack(
        [d12 + d13 - d23, d12 - d13 + d23, -d12 + d13 + d23], axis=-1
    )
    return d12, d13, d23, delta3, lhs


def rebit_triple(theta: float, phi: float) -> RebitTriple:
    """Rebit triple ``|0>``, ``cos t|0> + sin t|1>``, ``cos p|0> + sin p|1>``.

    ``region`` names the witness that fires: one of the overlap patterns or
    ``negative`` for ``Delta_3 < 0``. Points within 1e-9 of any witness
    threshold are labelled ``boundary``; if none fires the label is ``none``.
    """
    d12, d13, d23, delta3, lhs = _rebit_arrays(theta, phi)
    fired = tuple(bool(x > 1.0 + VIOLATION_TOL) for x in lhs) + (bool(delta3 < -VIOLATION_TOL),)
    near = np.any(np.abs(lhs - 1.0) < BOUNDARY_TOL) or abs(delta3) < BOUNDARY_TOL
    if near:
        region = "boundary"
    elif sum(fired) == 1:
        region = REGION_LABELS[fired.index(True)]
    elif sum(fired) == 0:
        region = "none"
    else:
        region = "multiple"
    return RebitTriple(OverlapTriple(d12, d13, d23), float(delta3), fired, region)


def rebit_region_grid(n: int = 200) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(theta, phi, labels)`` on an ``n x n`` grid over ``[0, pi]^2``."""
    th = np.linspace(0.0, np.pi, n)
    t, p = np.meshgrid(th, th, indexing="ij")
    labels = np.empty(t.shape, dtype=object)
    for idx in np.ndindex(t.shape):
        labels[idx] = rebit_triple(t[idx], p[idx]).region
    return t, p, labels


# --------------------------------------------------------------------------
# Monte Carlo verification of the real-triple lemma
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Lemma3Report:
    """Counterexample counts keyed by dimension."""

    counterexamples: dict
    samples: int
    violating: dict

    @property
    def total(self) -> int:
        return int(sum(self.counterexamples.values()))


def _sample_triples(rng, n, d, complex_amplitudes):
    v = rng.standard_normal((n, 3, d))
    if complex_amplitudes:
        v = v + 1j * rng.standard_normal((n, 3, d))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _triple_quantities(v):
    g12 = np.einsum("nd,nd->n", v[:, 0].conj(), v[:, 1])
    g23 = np.einsum("nd,nd->n", v[:, 1].conj(), v[:, 2])
    g31 = np.einsum("nd,nd->n", v[:, 2].conj(), v[:, 0])
    d = np.stack([np.abs(g12) ** 2, np.abs(g31) ** 2, np.abs(g23) ** 2], axis=-1)
    return d, g12 * g23 * g31


def lemma3_verify(
    n_samples: int, dims: Sequence[int] = (2, 3, 5), seed: SeedLike = 0, complex_amplitudes: bool = False
) -> Lemma3Report:
    """Count triples that violate an overlap inequality without a positive real ``Delta_3``.

    Triples are drawn uniformly on the real (or, with
    ``complex_amplitudes``, complex) unit sphere. A sample is a
    counterexample when some LHS exceeds ``1 + 1e-10`` while ``Delta_3`` is
    not real and greater than 1e-12. For real amplitudes this reduces to
    ``Delta_3 <= 1e-12``.
    """
    counts, violating = {}, {}
    for d, rng in zip(dims, spawn_rngs(seed, len(dims))):
        v = _sample_triples(rng, n_samples, int(d), complex_amplitudes)
        ov, delta3 = _triple_quantities(v)
        viol = np.any(_overlap_lhs(ov.T).T > 1.0 + VIOLATION_TOL, axis=-1)
        positive_real = (np.abs(delta3.imag) <= 1e-12) & (delta3.real > 1e-12)
        counts[int(d)] = int(np.sum(viol & ~positive_real))
        violating[int(d)] = int(np.sum(viol))
    return Lemma3Report(counts, n_samples, violating)


def lemma3_converse_verify(n_samples: int, seed: SeedLike = 0) -> tuple[int, int]:
    """Qubit converse: strictly satisfied inequalities imply ``Delta_3 < 0``.

    Returns ``(counterexamples, eligible)`` where eligible samples have all
    LHS below ``1 - 1e-9`` and every overlap above 1e-9.
    """
    v = _sample_triples(make_rng(seed), n_samples, 2, False)
    ov, delta3 = _triple_quantities(v)
    lhs = _overlap_lhs(ov.T).T
    eligible = np.all(lhs < 1.0 - BOUNDARY_TOL, axis=-1) & np.all(ov > BOUNDARY_TOL, axis=-1)
    bad = eligible & ~(delta3.real < 0)
    return int(np.sum(bad)), int(np.sum(eligible))


def lemma4_margin(n_grid: int = 200) -> tuple[int, float, int]:
    """Grid check of the auxiliary trigonometric implication.

    Over ``(alpha, beta, gamma)`` in ``[0, pi]^3`` (points where ``sin a``,
    ``cos b`` or ``cos g`` vanish are skipped), wherever
    ``sin^2 b sin^2 g (1 + sin^2 a) < -sin(2b) sin(2g) sin(a) / 2`` holds the
    conclusion ``tan b tan g > -1 / sin a`` is tested.

    Returns
    -------
    violations : int
    min_margin : float
        Smallest ``tan b tan g + 1 / sin a`` over points meeting the premise.
    n_premise : int
    """
    g = np.linspace(0.0, np.pi, n_grid)
    a, b, c = np.meshgrid(g, g, g, indexing="ij")
    sa, cb, cg = np.sin(a), np.cos(b), np.cos(c)
    ok = (np.abs(sa) > 1e-6) & (np.abs(cb) > 1e-6) & (np.abs(cg) > 1e-6)
    premise = np.sin(b) ** 2 * np.sin(c) ** 2 * (1 + sa**2) < -0.5 * np.sin(2 * b) * np.sin(2 * c) * sa
    premise &= ok
    margin = np.tan(b) * np.tan(c) + 1.0 / np.where(ok, sa, 1.0)
    m = margin[premise]
    return int(np.sum(m <= 0)), float(m.min()) if m.size else float("inf"), int(m.size)


def random_mixed_qubit_overlaps(n: int, seed: SeedLike = 0) -> np.ndarray:
    """Overlap triples ``(d12, d13, d23)`` of random mixed qubit triplets.

    Bloch vectors are uniform in the unit ball; ``Tr(rho sigma) = (1 + r.s) / 2``.
    """
    rng = make_rng(seed)
    u = rng.standard_normal((n, 3, 3))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    r = u * rng.random((n, 3, 1)) ** (1.0 / 3.0)
    dot = lambda x, y: np.einsum("nk,nk->n", x, y)
    return np.stack(
        [(1 + dot(r[:, 0], r[:, 1])) / 2, (1 + dot(r[:, 0], r[:, 2])) / 2, (1 + dot(r[:, 1], r[:, 2])) / 2],
        axis=-1,
    )


def random_pure_overlaps(n: int, dim: int, seed: SeedLike = 0) -> np.ndarray:
    ov, _ = _triple_quantities(_sample_triples(make_rng(seed), n, dim, True))
    return ov
