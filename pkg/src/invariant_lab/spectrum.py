"""Spectrum estimation from power sums ``Tr(rho^n)``.

The Newton identities turn power sums into the coefficients of the
characteristic polynomial, whose roots are found as eigenvalues of the
companion matrix. ``noise_study`` repeats this with Gaussian-perturbed
traces to measure how trace noise propagates into the spectrum.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import NumericalFailureError, ValidationError
from .states import SeedLike, random_ginibre_density, spawn_rngs

ROOT_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial, coefficients in descending powers."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if len(c) < 2 or c[0] != 1.0:
            raise ValidationError("CharPoly must be monic with degree >= 1")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polyval(np.asarray(self.coefficients), x)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Real parts of the roots, descending, with each root's ``|Im|``."""

    eigenvalues: tuple
    discarded_imag: tuple


def _elementary_symmetric(p: np.ndarray) -> np.ndarray:
    """``e_0 .. e_m`` along the last axis from power sums ``p_1 .. p_m``."""
    m = p.shape[-1]
    e = np.zeros(p.shape[:-1] + (m + 1,), dtype=float)
    e[..., 0] = 1.0
    for k in range(1, m + 1):
        acc = np.zeros(p.shape[:-1])
        for j in range(1, k + 1):
            acc = acc + (-1) ** (j - 1) * e[..., k - j] * p[..., j - 1]
        e[..., k] = acc / k
    return e


def _coefficients(p: np.ndarray) -> np.ndarray:
    e = _elementary_symmetric(p)
    signs = (-1.0) ** np.arange(e.shape[-1])
    return e * signs


def _check_power_sums(power_sums) -> np.ndarray:
    p = np.asarray(power_sums, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("power sums must be a non-empty list")
    if abs(p[0] - 1.0) > 0.1:
        raise ValidationError(f"Tr(rho) = {p[0]!r} is not within 0.1 of 1")
    return p


def newton_coefficients(power_sums: Sequence[float]) -> CharPoly:
    """Characteristic polynomial from ``[Tr rho, Tr rho^2, ..., Tr rho^d]``.

    Uses ``k e_k = sum_{j=1}^k (-1)^(j-1) e_{k-j} p_j`` and
    ``c_k = (-1)^k e_k``.
    """
    return CharPoly(tuple(_coefficients(_check_power_sums(power_sums))))


def _companion(c: np.ndarray) -> np.ndarray:
    """Companion matrices for monic coefficient rows ``c`` (batched)."""
    d = c.shape[-1] - 1
    m = np.zeros(c.shape[:-1] + (d, d))
    m[..., 0, :] = -c[..., 1:]
    if d > 1:
        idx = np.arange(d - 1)
        m[..., idx + 1, idx] = 1.0
    return m


def poly_roots(poly: CharPoly) -> np.ndarray:
    """Roots of a monic polynomial via companion-matrix eigenvalues.

    Each root ``r`` must satisfy ``|p(r)| <= 1e-12 * sum_k |c_k| |r|^(d-k)``,
    the scale of rounding error in evaluating ``p`` at ``r``.
    """
    c = np.asarray(poly.coefficients)
    roots = np.linalg.eigvals(_companion(c))
    powers = np.abs(roots)[:, None] ** np.arange(poly.degree, -1, -1)
    scale = powers @ np.abs(c)
    residual = np.abs(np.polyval(c, roots))
    if np.any(residual > ROOT_RESIDUAL_TOL * np.maximum(scale, 1.0)):
        worst = float(np.max(residual / np.maximum(scale, 1.0)))
        raise NumericalFailureError(f"root residual {worst:.3e} exceeds tolerance", partial=roots)
    return roots


def _sorted_estimate(roots: np.ndarray) -> SpectrumEstimate:
    order = np.argsort(-roots.real, kind="stable")
    r = roots[order]
    return SpectrumEstimate(tuple(float(x) for x in r.real), tuple(float(abs(x)) for x in r.imag))


def spectrum_from_traces(power_sums: Sequence[float]) -> SpectrumEstimate:
    """Eigenvalue estimates (real parts, descending) from power sums."""
    return _sorted_estimate(poly_roots(newton_coefficients(power_sums)))


def largest_eigenvalue_truncated(power_sums: Sequence[float], d: int, k: int) -> float:
    """Largest root of the characteristic polynomial truncated to degree ``d - k``.

    Only ``Tr rho .. Tr rho^(d-k)`` are used. The retained polynomial is
    ``sum_{j=0}^{d-k} c_j lambda^(d-k-j)``. When the top roots form a
    complex pair the largest real part is returned.
    """
    if not 0 <= k <= d - 2:
        raise ValidationError(f"need 0 <= k <= d-2, got k={k}, d={d}")
    p = _check_power_sums(power_sums)
    m = d - k
    if p.size < m:
        raise ValidationError(f"need {m} power sums, got {p.size}")
    poly = CharPoly(tuple(_coefficients(p[:m])))
    return float(np.max(poly_roots(poly).real))


# --------------------------------------------------------------------------
# noise study
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseStudyRow:
    dim: int
    epsilon: float
    rmse_real_full: float
    rmse_imag_full: float
    rmse_largest: float
    n_states: int
    n_noisy: int
    seed: object


NOISE_COLUMNS = (
    "dim",
    "epsilon",
    "rmse_real_full",
    "rmse_imag_full",
    "rmse_largest",
    "n_states",
    "n_noisy",
    "seed",
)


def _batched_spectra(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary root parts (sorted by real part, descending)."""
    roots = np.linalg.eigvals(_companion(_coefficients(p)))
    order = np.argsort(-roots.real, axis=-1, kind="stable")
    roots = np.take_along_axis(roots, order, axis=-1)
    return roots.real, roots.imag


def _state_errors(dim, epsilons, n_noisy, rank, rng):
    """Per-state (full, imag, largest) RMSE for every epsilon.

    The same standard-normal draws are scaled by each epsilon, so the
    comparison across noise levels uses common random numbers.
    """
    rho = random_ginibre_density(dim, rank, rng)
    evals = np.linalg.eigvalsh(rho.matrix)
    exact = np.array([np.sum(evals**n) for n in range(1, dim + 1)])
    ref_re, _ = _batched_spectra(exact[None, :])
    z = rng.standard_normal((n_noisy, dim - 1))
    out = np.empty((len(epsilons), 3))
    for j, eps in enumerate(epsilons):
        p = np.repeat(exact[None, :], n_noisy, axis=0)
        p[:, 1:] += eps * z
        re, im = _batched_spectra(p)
        err = re - ref_re
        out[j, 0] = math.sqrt(float(np.mean(err**2)))
        out[j, 1] = math.sqrt(float(np.mean(im**2)))
        out[j, 2] = math.sqrt(float(np.mean(err[:, 0] ** 2)))
    return out


def resolve_workers(n_workers: int | None) -> int:
    """Worker count from the argument, else ``INVARIANT_LAB_THREADS``, else 1."""
    if n_workers is None:
        n_workers = int(os.environ.get("INVARIANT_LAB_THREADS", "1") or 1)
    return max(1, int(n_workers))


def noise_study(
    dims: Sequence[int],
    epsilons: Sequence[float],
    n_states: int = 500,
    n_noisy: int = 200,
    seed: SeedLike = 0,
    rank: int | None = None,
    n_workers: int | None = None,
) -> list[NoiseStudyRow]:
    """RMSE of trace-based spectrum estimates under Gaussian trace noise.

    For each Ginibre state the exact traces of orders ``2..d`` receive
    i.i.d. ``Normal(0, epsilon^2)`` noise (``Tr rho`` stays 1). Errors are
    measured against the noiseless-trace prediction. Per state the squared
    errors are pooled over all eigenvalues and ``n_noisy`` draws; the
    square roots are then averaged over states.

    Parameters
    ----------
    rank : int, optional
        Ginibre rank, full by default.
    n_workers : int, optional
        Thread count; falls back to ``INVARIANT_LAB_THREADS``. Results do not
        depend on it because every state owns a spawned RNG stream.

    Returns
    -------
    list of NoiseStudyRow
        One row per ``(dim, epsilon)``, dims outer.
    """
    if n_states < 1 or n_noisy < 1:
        raise ValidationError("n_states and n_noisy must be >= 1")
    dims = [int(d) for d in dims]
    if any(d < 2 for d in dims):
        raise ValidationError("noise study needs dims >= 2")
    epsilons = [float(e) for e in epsilons]
    workers = resolve_workers(n_workers)
    dim_streams = spawn_rngs(seed, len(dims))
    rows = []
    for dim, stream in zip(dims, dim_streams):
        state_rngs = stream.spawn(n_states)

        def task(r, dim=dim):
            return _state_errors(dim, epsilons, n_noisy, rank, r)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_state = list(pool.map(task, state_rngs))
        else:
            per_state = [task(r) for r in state_rngs]
        stacked = np.stack(per_state)  # (n_states, n_eps, 3)
        for j, eps in enumerate(epsilons):
            means = [math.fsum(stacked[:, j, q]) / n_states for q in range(3)]
            rows.append(NoiseStudyRow(dim, eps, *means, n_states, n_noisy, seed))
    return rows
