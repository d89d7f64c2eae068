"""Exact Bargmann invariants and the quantities built from them.

Everything here is computed analytically with dense linear algebra and
serves as the reference that the circuit simulator is checked against.
Pure states enter as rank-one projectors, so every function accepts
``PureState``, ``DensityMatrix`` or raw arrays interchangeably.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (
    ConsistencyError,
    UnbiasedPairViolation,
    UndefinedWeakValueError,
    ValidationError,
    VanishingPostSelectionError,
)
from .states import (
    PVM,
    DensityMatrix,
    Observable,
    OrthonormalBasis,
    PureState,
    as_operator,
    check_same_dim,
    spectral_decompose,
)

REAL_RESIDUE_TOL = 1e-9
WEAK_VALUE_MIN_OVERLAP = 1e-12
UNBIASED_MIN = 1e-9


@dataclass(frozen=True)
class BargmannValue:
    """An ``n``-th order invariant ``Tr(rho_1 ... rho_n)``."""

    order: int
    value: complex
    argument_labels: tuple = ()

    def __complex__(self):
        return complex(self.value)


def as_observable(a) -> Observable:
    return a if isinstance(a, Observable) else spectral_decompose(a)


def _real_or_raise(z: complex, what: str, tol: float = REAL_RESIDUE_TOL) -> float:
    if abs(z.imag) >= tol:
        raise ConsistencyError(f"{what} has imaginary residue {z.imag:.3e}")
    return float(z.real)


def bargmann(states: Sequence, labels: Sequence | None = None) -> BargmannValue:
    """Bargmann invariant of an ordered list of states.

    Parameters
    ----------
    states : sequence
        ``PureState``, ``DensityMatrix``, ket vectors or square matrices, all
        of the same dimension.
    labels : sequence, optional
        Names carried through to the result.

    Returns
    -------
    BargmannValue
        ``Tr(rho_1 rho_2 ... rho_n)`` from sequential matrix products.
    """
    states = list(states)
    if not states:
        raise ValidationError("bargmann needs at least one state")
    check_same_dim(*states)
    prod = as_operator(states[0])
    for s in states[1:]:
        prod = prod @ as_operator(s)
    labels = tuple(labels) if labels is not None else tuple(range(1, len(states) + 1))
    return BargmannValue(len(states), complex(np.trace(prod)), labels)


def overlap(a, b) -> float:
    """Second-order invariant ``Tr(rho sigma)``; real by construction."""
    check_same_dim(a, b)
    z = complex(np.vdot(as_operator(a).conj().T, as_operator(b)))
    if abs(z.imag) >= 1e-12:
        raise ConsistencyError(f"overlap has imaginary residue {z.imag:.3e}")
    return float(z.real)


def univariate_traces(rho, max_n: int) -> list[float]:
    """Power sums ``[Tr rho, Tr rho^2, ..., Tr rho^max_n]``."""
    if max_n < 1:
        raise ValidationError("max_n must be >= 1")
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(as_operator(rho))
    m = rho.matrix
    out, power = [], np.eye(m.shape[0], dtype=np.complex128)
    for _ in range(max_n):
        power = power @ m
        out.append(_real_or_raise(complex(np.trace(power)), "univariate trace"))
    return out


# --------------------------------------------------------------------------
# Kirkwood-Dirac distributions
# --------------------------------------------------------------------------


def kd_value(rho, i: PureState, f: PureState) -> complex:
    """``<f|i><i|rho|f>``, the invariant ``Delta_3(|i><i|, rho, |f><f|)``."""
    check_same_dim(rho, i, f)
    r = as_operator(rho)
    a_i, a_f = i.amplitudes, f.amplitudes
    return complex(np.vdot(a_f, a_i) * (a_i.conj() @ r @ a_f))


@dataclass(frozen=True, eq=False)
class KDGrid:
    """KD quasiprobabilities ``values[i, f]`` over two bases."""

    values: np.ndarray
    basis_I: OrthonormalBasis
    basis_F: OrthonormalBasis

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def kd_distribution(rho, basis_I: OrthonormalBasis, basis_F: OrthonormalBasis) -> KDGrid:
    check_same_dim(rho, basis_I.vectors[0], basis_F.vectors[0])
    r = as_operator(rho)
    ci, cf = basis_I.matrix(), basis_F.matrix()
    values = (ci.conj().T @ r @ cf) * (ci.conj().T @ cf).conj()
    values.setflags(write=False)
    return KDGrid(values, basis_I, basis_F)


def reconstruct_operator_from_kd(grid: KDGrid) -> np.ndarray:
    """``sum_{i,f} |i><f| xi(i,f) / <f|i>`` without validating the result.

    The divisor is ``<f|i>``, the overlap factor inside ``xi``; dividing by
    ``<i|f>`` instead only inverts the map when every overlap is real.
    """
    ci, cf = grid.basis_I.matrix(), grid.basis_F.matrix()
    inner = ci.conj().T @ cf
    bad = np.argwhere(np.abs(inner) <= UNBIASED_MIN)
    if bad.size:
        i, f = (int(x) for x in bad[0])
        raise UnbiasedPairViolation(i, f, float(abs(inner[i, f])))
    return ci @ (grid.values / inner.conj()) @ cf.conj().T


def reconstruct_from_kd(grid: KDGrid) -> DensityMatrix:
    """Invert the KD map; requires ``|<i|f>| > 1e-9`` for every pair."""
    m = reconstruct_operator_from_kd(grid)
    return DensityMatrix(0.5 * (m + m.conj().T))


def extended_kd_bargmann_form(rho, projectors: Sequence[np.ndarray]) -> complex:
    """``Delta_{n+1}(rho, P1/Tr P1, ...) * prod Tr P`` for the given projectors."""
    traces = [float(np.trace(p).real) for p in projectors]
    normalized = [p / t for p, t in zip(projectors, traces)]
    return complex(bargmann([rho, *normalized]).value) * float(np.prod(traces))


def extended_kd(rho, pvms: Sequence[PVM], outcomes: Sequence[int]) -> complex:
    """Extended KD value ``Tr(P^1_{k1} ... P^n_{kn} rho)``.

    The direct trace is cross-checked against its Bargmann form within 1e-10.
    """
    if len(pvms) != len(outcomes):
        raise ValidationError("need one outcome index per PVM")
    check_same_dim(rho, *[p.projectors[0] for p in pvms])
    chosen = []
    for n, (pvm, k) in enumerate(zip(pvms, outcomes)):
        if not 0 <= k < len(pvm):
            raise ValidationError(f"outcome {k} out of range for PVM {n} ({len(pvm)} outcomes)")
        chosen.append(pvm.projectors[k])
    prod = np.eye(chosen[0].shape[0], dtype=np.complex128)
    for p in chosen:
        prod = prod @ p
    direct = complex(np.trace(prod @ as_operator(rho)))
    other = extended_kd_bargmann_form(rho, chosen)
    if abs(direct - other) > 1e-10:
        raise ConsistencyError(f"extended KD routes disagree: {direct} vs {other}")
    return direct


# --------------------------------------------------------------------------
# weak values
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakValueResult:
    """Weak value with its invariant decomposition.

    ``numerator_terms`` maps each distinct eigenvalue ``a`` to the sum of
    ``Delta_3(phi, a_k, psi)`` over an orthonormal basis ``a_k`` of the
    eigenspace.
    """

    value: complex
    numerator_terms: dict = field(default_factory=dict)
    denominator: float = 1.0


def weak_value(A, pre: PureState, post: PureState) -> WeakValueResult:
    """Weak value ``<phi|A|psi> / <phi|psi>`` for pre-selection ``psi``."""
    A = as_observable(A)
    check_same_dim(A.matrix, pre, post)
    psi, phi = pre.amplitudes, post.amplitudes
    amp = np.vdot(phi, psi)
    delta2 = float(abs(amp) ** 2)
    if delta2 <= WEAK_VALUE_MIN_OVERLAP:
        raise UndefinedWeakValueError(
            f"undefined weak value: |<phi|psi>|^2 = {delta2:.3e} <= {WEAK_VALUE_MIN_OVERLAP}"
        )
    value = complex(np.vdot(phi, A.matrix @ psi) / amp)
    terms = {}
    for a, basis in zip(A.eigenvalues, A.eigenbases):
        # Delta_3(phi, a_k, psi) = <phi|a_k><a_k|psi><psi|phi>
        t = np.sum((phi.conj() @ basis) * (basis.conj().T @ psi)) * np.conj(amp)
        terms[a] = complex(t)
    recon = sum(a * t for a, t in terms.items())
    if abs(value * delta2 - recon) > 1e-10:
        raise ConsistencyError("weak value routes disagree")
    return WeakValueResult(value, terms, delta2)


def anomaly_check(result: WeakValueResult, A, tol: float = 1e-10) -> str:
    """Label a weak value ``classical``, ``anomalous-real`` or ``anomalous-imaginary``.

    A value is anomalous-imaginary when ``|Im| > tol`` and anomalous-real when
    its real part lies outside ``[min Spec A - tol, max Spec A + tol]``.
    """
    A = as_observable(A)
    v = complex(result.value)
    if abs(v.imag) > tol:
        return "anomalous-imaginary"
    if v.real > max(A.eigenvalues) + tol or v.real < min(A.eigenvalues) - tol:
        return "anomalous-real"
    return "classical"


# --------------------------------------------------------------------------
# post-selected quantum Fisher information
# --------------------------------------------------------------------------


def evolve_generator(generator, theta: float) -> np.ndarray:
    """``exp(-i theta I)`` from the eigendecomposition of ``I``."""
    cols, vals = as_observable(generator).eigen_columns()
    return (cols * np.exp(-1j * theta * vals)) @ cols.conj().T


def _projector_range(projector) -> np.ndarray:
    if isinstance(projector, PureState):
        return projector.amplitudes[:, None]
    p = np.asarray(projector, dtype=np.complex128)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError("post-selection projector must be a square matrix")
    if np.max(np.abs(p - p.conj().T)) > 1e-10 or np.max(np.abs(p @ p - p)) > 1e-10:
        raise ValidationError("post-selection operator is not an orthogonal projector")
    w, v = np.linalg.eigh(p)
    return v[:, w > 0.5]


@dataclass(frozen=True, eq=False)
class PostSelectedKD:
    """Extended KD table ``xi[i, i', f] = <i|rho_theta|i'><i'|f><f|i>``.

    ``i`` and ``i'`` run over the eigenbasis of the generator (eigenvalues in
    ``generator_values``), ``f`` over an orthonormal basis of the range of the
    post-selection projector.
    """

    values: np.ndarray
    generator_values: np.ndarray
    probability: float


def psqfi_kd_table(psi: PureState, generator, post_projector, theta: float) -> PostSelectedKD:
    cols, lam = as_observable(generator).eigen_columns()
    check_same_dim(psi, cols)
    fb = _projector_range(post_projector)
    psi_t = evolve_generator(generator, theta) @ psi.amplitudes
    c = cols.conj().T @ psi_t  # <i|psi_theta>
    r = np.outer(c, c.conj())  # <i|rho_theta|i'>
    g = cols.conj().T @ fb  # <i|f>
    xi = r[:, :, None] * g[None, :, :] * g.conj()[:, None, :]
    p = float(np.sum(np.abs(fb.conj().T @ psi_t) ** 2))
    return PostSelectedKD(xi, lam, p)


def ps_qfi(psi: PureState, generator, post_projector, theta: float) -> float:
    """Fisher information of the post-selected state, from extended KD values.

    ``4 sum lam_i lam_i' xi / p - 4 |sum lam_i xi / p|^2`` with
    ``p = Tr(F rho_theta)``.
    """
    table = psqfi_kd_table(psi, generator, post_projector, theta)
    p = table.probability
    if p <= 1e-10:
        raise VanishingPostSelectionError(f"post-selection probability {p:.3e} <= 1e-10")
    lam = table.generator_values
    xi = table.values
    second = np.einsum("i,ijf->", lam, xi) / p
    first = np.einsum("i,j,ijf->", lam, lam, xi) / p
    q = 4.0 * first - 4.0 * abs(second) ** 2
    return _real_or_raise(complex(q), "ps-QFI")


# --------------------------------------------------------------------------
# out-of-time-ordered correlators
# --------------------------------------------------------------------------


def _check_unitary(U) -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValidationError("U must be a square matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise ValidationError("U is not unitary within 1e-10")
    return U


def otoc_direct(rho, W, V, U) -> complex:
    W, V = as_observable(W), as_observable(V)
    U = _check_unitary(U)
    wt = U.conj().T @ W.matrix @ U
    return complex(np.trace(wt.conj().T @ V.matrix.conj().T @ wt @ V.matrix @ as_operator(rho)))


def otoc_coarse(rho, W, V, U) -> complex:
    """Eigenvalue-weighted sum of fifth-order traces over eigenprojectors."""
    W, V = as_observable(W), as_observable(V)
    U = _check_unitary(U)
    r = as_operator(rho)
    pw = [U.conj().T @ p @ U for p in W.projectors]
    total = 0j
    for v1, p1 in V.spectral:
        a = p1 @ r
        for w2, q2 in zip(W.eigenvalues, pw):
            b = q2 @ a
            for v2, p2 in V.spectral:
                c = p2 @ b
                for w3, q3 in zip(W.eigenvalues, pw):
                    total += v1 * w2 * np.conj(v2) * np.conj(w3) * np.trace(q3 @ c)
    return complex(total)


@dataclass(frozen=True, eq=False)
class OTOCQuasiprobability:
    """Fine-grained table ``values[v1, w2, v2, w3]`` over eigenvectors.

    ``v_eigs`` and ``w_eigs`` give the eigenvalue attached to each index.
    """

    values: np.ndarray
    v_eigs: np.ndarray
    w_eigs: np.ndarray

    def weighted_sum(self) -> complex:
        v, w = self.v_eigs, self.w_eigs
        return complex(np.einsum("a,b,c,d,abcd->", v, w, v.conj(), w.conj(), self.values))


def otoc_quasiprobability(rho, W, V, U) -> OTOCQuasiprobability:
    """``<w3|U|v2><v2|U^dag|w2><w2|U|v1><v1|rho U^dag|w3>`` for all index tuples.

    Each entry is the fifth-order invariant
    ``Delta_5(|w3>, U|v2>, |w2>, U|v1>, U rho U^dag)``.
    """
    W, V = as_observable(W), as_observable(V)
    U = _check_unitary(U)
    cw, lw = W.eigen_columns()
    cv, lv = V.eigen_columns()
    m = cw.conj().T @ U @ cv  # m[w, v] = <w|U|v>
    r = cv.conj().T @ as_operator(rho) @ U.conj().T @ cw  # r[v1, w3]
    vals = np.einsum("dc,bc,ba,ad->abcd", m, m.conj(), m, r)
    return OTOCQuasiprobability(vals, lv.astype(complex), lw.astype(complex))


def otoc(rho, W, V, U) -> complex:
    """``Tr(W(t)^dag V^dag W(t) V rho)`` with ``W(t) = U^dag W U``.

    Evaluated by the direct trace and by the coarse-grained sum over
    eigenprojectors; the two must agree within 1e-10 (relative to the
    operator-norm scale of ``W`` and ``V``).
    """
    check_same_dim(rho, np.asarray(U))
    direct = otoc_direct(rho, W, V, U)
    coarse = otoc_coarse(rho, W, V, U)
    W, V = as_observable(W), as_observable(V)
    scale = max(1.0, max(abs(x) for x in W.eigenvalues) ** 2 * max(abs(x) for x in V.eigenvalues) ** 2)
    if abs(direct - coarse) > 1e-10 * scale:
        raise ConsistencyError(f"OTOC routes disagree: {direct} vs {coarse}")
    return direct


__all__ = [
    "BargmannValue",
    "KDGrid",
    "OTOCQuasiprobability",
    "PostSelectedKD",
    "WeakValueResult",
    "anomaly_check",
    "bargmann",
    "evolve_generator",
    "extended_kd",
    "extended_kd_bargmann_form",
    "kd_distribution",
    "kd_value",
    "otoc",
    "otoc_coarse",
    "otoc_direct",
    "otoc_quasiprobability",
    "overlap",
    "ps_qfi",
    "psqfi_kd_table",
    "reconstruct_from_kd",
    "reconstruct_operator_from_kd",
    "univariate_traces",
    "weak_value",
]
