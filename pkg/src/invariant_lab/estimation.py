"""Shot budgets and estimators for weak values and spectra.

Two ways of learning ``Re A_w`` are compared. The cycle-test scheme
estimates ``Delta_3(phi, a, psi)`` and ``Delta_2(phi, psi)`` on separate
circuits and takes their ratio. The weak-measurement baseline couples a
Gaussian pointer to the system and post-selects. Planned shot counts follow
Hoeffding's inequality for the cycle test and the Gaussian tail for the
pointer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erfcinv

from .circuits import build_cycle_test, build_weak_value_circuits, simulate_exact
from .exceptions import NoDataError, PostSelectionStarvedError, ValidationError
from .invariants import as_observable, weak_value
from .spectrum import SpectrumEstimate, spectrum_from_traces
from .states import DensityMatrix, PureState, SeedLike, make_rng, spawn_rngs


# --------------------------------------------------------------------------
# Hoeffding planning
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HoeffdingPlan:
    epsilon: float
    delta: float
    samples: int


def hoeffding_samples(epsilon: float, delta: float) -> int:
    """``ceil(2 ln(2/delta) / epsilon^2)`` shots for a +-1 bounded estimator."""
    if not 0.0 < epsilon <= 2.0:
        raise ValidationError(f"epsilon must lie in (0, 2], got {epsilon!r}")
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta!r}")
    return max(1, math.ceil(2.0 * math.log(2.0 / delta) / epsilon**2))


def hoeffding_plan(epsilon: float, delta: float) -> HoeffdingPlan:
    return HoeffdingPlan(epsilon, delta, hoeffding_samples(epsilon, delta))


@dataclass(frozen=True)
class SpectrumSamplingPlan:
    """Shots for estimating ``Tr rho^n``, ``n = 2..d``, each to accuracy ``epsilon``."""

    dim: int
    epsilon: float
    delta: float
    orders: tuple
    per_trace_shots: int
    total_copies: int
    total_measurements: int


def spectrum_sampling_plan(d: int, epsilon: float, delta: float) -> SpectrumSamplingPlan:
    """Union bound over ``d - 1`` traces; an order-``n`` cycle test uses ``n`` copies."""
    if d < 2:
        raise ValidationError("spectrum sampling needs d >= 2")
    shots = hoeffding_samples(epsilon, delta / (d - 1))
    orders = tuple(range(2, d + 1))
    return SpectrumSamplingPlan(
        d, epsilon, delta, orders, shots, sum(n * shots for n in orders), (d - 1) * shots
    )


# --------------------------------------------------------------------------
# weak values from cycle tests
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakValueProbabilities:
    """Exact ancilla ``p0`` for every circuit of the cycle-test weak-value scheme.

    ``terms`` holds ``(a, p0_re, p0_im)`` for each basis vector of each
    eigenspace with nonzero eigenvalue; ``p0_swap`` belongs to the SWAP test
    on ``(phi, psi)``.
    """

    terms: tuple
    p0_swap: float


def weak_value_cycle_probabilities(psi: PureState, phi: PureState, A) -> WeakValueProbabilities:
    A = as_observable(A)
    dim = psi.dim
    num_re, swap = build_weak_value_circuits(dim, 0)
    num_im, _ = build_weak_value_circuits(dim, 1)
    terms = []
    for a, basis in zip(A.eigenvalues, A.eigenbases):
        if a == 0.0:
            continue
        for k in range(basis.shape[1]):
            ak = PureState(basis[:, k])
            inputs = [phi, ak, psi]
            terms.append((a, simulate_exact(num_re, inputs)[0], simulate_exact(num_im, inputs)[0]))
    return WeakValueProbabilities(tuple(terms), simulate_exact(swap, [phi, psi])[0])


def _frequencies(rng, shots, p, size):
    if shots == 0:
        return np.full(size, p)
    return rng.binomial(shots, p, size=size) / shots


def sample_weak_value_cycle(
    probs: WeakValueProbabilities, n3: int, n2: int, seed: SeedLike, trials: int | None = None
):
    """Shot-sampled weak-value estimate(s) from precomputed probabilities.

    ``n3`` shots go to each of the Re and Im runs of every numerator term and
    ``n2`` to the SWAP test; ``0`` selects the exact (infinite-shot) value.
    With ``trials`` an array of independent estimates is returned and
    starved trials (denominator estimate <= 0) are ``nan``.
    """
    if n3 < 0 or n2 < 0:
        raise ValidationError("shot counts must be >= 0")
    size = 1 if trials is None else int(trials)
    streams = spawn_rngs(seed, 2 * len(probs.terms) + 1)
    num = np.zeros(size, dtype=complex)
    for k, (a, p_re, p_im) in enumerate(probs.terms):
        re = 2.0 * _frequencies(streams[2 * k], n3, p_re, size) - 1.0
        im = 1.0 - 2.0 * _frequencies(streams[2 * k + 1], n3, p_im, size)
        num += a * (re + 1j * im)
    den = 2.0 * _frequencies(streams[-1], n2, probs.p0_swap, size) - 1.0
    if trials is None:
        if den[0] <= 0:
            raise PostSelectionStarvedError(
                f"post-selection starved: SWAP-test overlap estimate {den[0]:.3e} <= 0"
            )
        return complex(num[0] / den[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / den, np.nan + 0j)


def estimate_weak_value_cycle(psi: PureState, phi: PureState, A, n3: int, n2: int, seed: SeedLike) -> complex:
    """Cycle-test estimate of the weak value ``<phi|A|psi> / <phi|psi>``.

    The numerator ``sum_a a Delta_3(phi, a, psi)`` is built from cycle-test
    runs on ``(phi, a_k, psi)`` for each eigenvector ``a_k`` (``n3`` shots
    for Re and for Im), the denominator from ``n2`` SWAP-test shots.

    Raises
    ------
    PostSelectionStarvedError
        If the denominator estimate is not positive.
    """
    d2 = abs(np.vdot(phi.amplitudes, psi.amplitudes)) ** 2
    if d2 <= 1e-12:
        raise ValidationError(f"Delta_2 = {d2:.3e} too small for a weak value")
    probs = weak_value_cycle_probabilities(psi, phi, A)
    return sample_weak_value_cycle(probs, n3, n2, seed)


# --------------------------------------------------------------------------
# weak measurement baseline
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PointerModel:
    """Gaussian pointer with coupling ``gamma`` and spread ``sigma``."""

    coupling: float
    pointer_std: float

    def __post_init__(self):
        if self.coupling <= 0 or self.pointer_std <= 0:
            raise ValidationError("coupling and pointer_std must be positive")

    def check_weak_regime(self, aw: complex) -> None:
        if self.pointer_std < 10.0 * self.coupling * abs(aw):
            raise ValidationError(
                f"weak regime violated: sigma={self.pointer_std} < 10 * gamma * |A_w| "
                f"= {10.0 * self.coupling * abs(aw):.3g}"
            )


def _weak_measurement_draws(rng, aw_re, d2, pointer, n, size):
    n_success = rng.binomial(n, d2, size=size)
    # the mean of k i.i.d. Normal(mu, sigma^2) draws is Normal(mu, sigma^2 / k)
    safe = np.maximum(n_success, 1)
    mean = rng.normal(pointer.coupling * aw_re, pointer.pointer_std / np.sqrt(safe))
    return mean / pointer.coupling, n_success


def simulate_weak_measurement(
    psi: PureState, phi: PureState, A, pointer: PointerModel, N: int, seed: SeedLike
) -> tuple[float, int]:
    """Weak-measurement estimate of ``Re A_w`` from ``N`` pre-selected systems.

    ``N_success ~ Binomial(N, Delta_2)`` runs survive post-selection; their
    pointer readings are ``Normal(gamma Re A_w, sigma^2)`` and the estimate
    is the sample mean over ``gamma``. The sample mean is drawn directly from
    its exact normal distribution.

    Raises
    ------
    NoDataError
        If no run survives post-selection.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    wv = weak_value(A, psi, phi)
    pointer.check_weak_regime(wv.value)
    est, ns = _weak_measurement_draws(make_rng(seed), wv.value.real, wv.denominator, pointer, N, 1)
    if ns[0] == 0:
        raise NoDataError("no post-selected runs: N_success = 0")
    return float(est[0]), int(ns[0])


# --------------------------------------------------------------------------
# scheme comparison
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeakValueInstance:
    psi: PureState
    phi: PureState
    A: object

    @property
    def delta2(self) -> float:
        return float(abs(np.vdot(self.phi.amplitudes, self.psi.amplitudes)) ** 2)


def fixed_weak_value_instance(delta2: float) -> WeakValueInstance:
    """Qutrit family with ``Delta_2 = delta2`` and ``A_w = 1`` for ``A = |0><0|``.

    ``psi = sqrt(x)|0> + sqrt(1-x)|1>``, ``phi = sqrt(x)|0> + sqrt(1-x)|2>``
    with ``x = sqrt(delta2)``.
    """
    if not 0.0 < delta2 <= 1.0:
        raise ValidationError("delta2 must lie in (0, 1]")
    x = math.sqrt(delta2)
    psi = PureState([math.sqrt(x), math.sqrt(1.0 - x), 0.0])
    phi = PureState([math.sqrt(x), 0.0, math.sqrt(1.0 - x)])
    return WeakValueInstance(psi, phi, np.diag([1.0, 0.0, 0.0]))


def planned_cycle_shots(instance: WeakValueInstance, epsilon: float, delta: float) -> tuple[int, int]:
    """``(shots per part, number of parts)`` so that ``|est - A_w| <= epsilon`` w.p. ``1 - delta``.

    With every part accurate to ``e`` the ratio error is at most
    ``(K e + |A_w| e) / (Delta_2 - e)`` with ``K = sqrt(2) sum |a_k|``;
    solving for ``e`` and union-bounding over parts gives the count.
    """
    A = as_observable(instance.A)
    wv = weak_value(A, instance.psi, instance.phi)
    mult = [(a, b.shape[1]) for a, b in zip(A.eigenvalues, A.eigenbases) if a != 0.0]
    k = math.sqrt(2.0) * sum(abs(a) * m for a, m in mult)
    parts = 2 * sum(m for _, m in mult) + 1
    e = epsilon * wv.denominator / (k + abs(wv.value) + epsilon)
    return hoeffding_samples(min(e, 2.0), delta / parts), parts


def planned_weak_shots(instance: WeakValueInstance, epsilon: float, delta: float, pointer: PointerModel) -> int:
    """``N`` with ``P(|est - Re A_w| > epsilon) = delta`` for the Gaussian pointer.

    ``N_success = 2 sigma^2 erfcinv(delta)^2 / (epsilon gamma)^2``, divided by
    ``Delta_2`` for post-selection losses.
    """
    ns = 2.0 * (pointer.pointer_std * erfcinv(delta) / (epsilon * pointer.coupling)) ** 2
    return max(1, math.ceil(ns / instance.delta2))


@dataclass(frozen=True)
class ComplexityRow:
    scheme: str
    delta2: float
    epsilon: float
    shots: int
    mean_abs_error: float
    stderr: float
    seed: object


COMPLEXITY_COLUMNS = ("scheme", "delta2", "epsilon", "shots", "mean_abs_error", "stderr", "seed")


@dataclass(frozen=True)
class ComplexityReport:
    """Rows per (scheme, Delta_2, epsilon) and fitted error-vs-Delta_2 exponents."""

    rows: tuple
    exponents: dict = field(default_factory=dict)

    def exponent_ratio(self) -> float:
        return self.exponents["cycle"] / self.exponents["weak"]


def _abs_error_stats(errors: np.ndarray) -> tuple[float, float, int]:
    e = np.abs(errors[np.isfinite(errors)])
    if e.size == 0:
        return float("nan"), float("nan"), 0
    sd = float(np.std(e, ddof=1)) if e.size > 1 else 0.0
    return float(np.mean(e)), sd / math.sqrt(e.size), int(e.size)


def cycle_trial_errors(instance, n3, n2, trials, seed) -> np.ndarray:
    """Errors of ``Re`` estimates over independent trials (``nan`` if starved)."""
    probs = weak_value_cycle_probabilities(instance.psi, instance.phi, instance.A)
    target = weak_value(instance.A, instance.psi, instance.phi).value.real
    est = sample_weak_value_cycle(probs, n3, n2, seed, trials=trials)
    return est.real - target


def weak_trial_errors(instance, pointer, N, trials, seed) -> np.ndarray:
    wv = weak_value(instance.A, instance.psi, instance.phi)
    pointer.check_weak_regime(wv.value)
    est, ns = _weak_measurement_draws(make_rng(seed), wv.value.real, wv.denominator, pointer, N, trials)
    return np.where(ns > 0, est - wv.value.real, np.nan)


def fit_exponent(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def error_scaling(
    instances: Sequence[WeakValueInstance],
    shots: int,
    trials: int,
    seed: SeedLike,
    pointer: PointerModel | None = None,
    split: str = "equal",
    weight_c: float = 1.0,
) -> dict:
    """Mean absolute ``Re`` error of each scheme at a fixed budget, and fitted exponents.

    ``split="equal"`` gives every cycle-test part ``shots`` runs;
    ``split="weighted"`` keeps the same total for one numerator part plus the
    denominator but sets ``N2 = N3 / Delta_2**weight_c``. The weak scheme
    receives ``shots`` pre-selected systems.
    """
    pointer = pointer or PointerModel(0.01, 1.0)
    d2s, cyc, weak = [], [], []
    streams = spawn_rngs(seed, 2 * len(instances))
    for j, inst in enumerate(instances):
        d2 = inst.delta2
        if split == "equal":
            n3 = n2 = shots
        elif split == "weighted":
            total = 2 * shots
            n3 = max(1, round(total / (1.0 + d2**-weight_c)))
            n2 = max(1, total - n3)
        else:
            raise ValidationError(f"unknown split {split!r}")
        c = _abs_error_stats(cycle_trial_errors(inst, n3, n2, trials, streams[2 * j]))[0]
        w = _abs_error_stats(weak_trial_errors(inst, pointer, shots, trials, streams[2 * j + 1]))[0]
        d2s.append(d2)
        cyc.append(c)
        weak.append(w)
    return {
        "delta2": d2s,
        "cycle_error": cyc,
        "weak_error": weak,
        "cycle": fit_exponent(d2s, cyc),
        "weak": fit_exponent(d2s, weak),
    }


def compare_sample_complexity(
    instances: Sequence[WeakValueInstance],
    epsilons: Sequence[float],
    seed: SeedLike,
    delta: float = 0.05,
    trials: int = 200,
    pointer: PointerModel | None = None,
    fixed_shots: int = 10**6,
) -> ComplexityReport:
    """Compare the cycle-test and weak-measurement schemes.

    For each instance and target ``epsilon`` both planned shot totals are
    reported with the empirical mean absolute ``Re`` error at those shots.
    The error-vs-``Delta_2`` exponents are fitted at ``fixed_shots`` when
    the instances span at least two overlaps.
    """
    pointer = pointer or PointerModel(0.01, 1.0)
    seed_tag = seed if isinstance(seed, (int, np.integer)) else None
    streams = spawn_rngs(seed, 2 * len(instances) * len(epsilons) + 1)
    rows, s = [], 0
    for inst in instances:
        for eps in epsilons:
            n_part, parts = planned_cycle_shots(inst, eps, delta)
            m, se, _ = _abs_error_stats(cycle_trial_errors(inst, n_part, n_part, trials, streams[s]))
            rows.append(ComplexityRow("cycle", inst.delta2, eps, n_part * parts, m, se, seed_tag))
            n_weak = planned_weak_shots(inst, eps, delta, pointer)
            m, se, _ = _abs_error_stats(weak_trial_errors(inst, pointer, n_weak, trials, streams[s + 1]))
            rows.append(ComplexityRow("weak", inst.delta2, eps, n_weak, m, se, seed_tag))
            s += 2
    exponents = {}
    if len({round(i.delta2, 12) for i in instances}) >= 2:
        fit = error_scaling(instances, fixed_shots, trials, streams[-1], pointer)
        exponents = {"cycle": fit["cycle"], "weak": fit["weak"]}
    return ComplexityReport(tuple(rows), exponents)


# --------------------------------------------------------------------------
# spectrum from shot-estimated traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ShotSpectrumResult:
    estimate: SpectrumEstimate
    power_sums: tuple
    plan: SpectrumSamplingPlan


def cycle_trace_probabilities(rho: DensityMatrix) -> list[float]:
    """Exact ``p0`` of the order-``n`` cycle test on ``n`` copies of ``rho``, ``n = 2..d``."""
    d = rho.dim
    return [simulate_exact(build_cycle_test(n, d, 0), [rho] * n)[0] for n in range(2, d + 1)]


def estimate_spectrum_from_shots(
    rho: DensityMatrix, epsilon: float, delta: float, seed: SeedLike, p0s: Sequence[float] | None = None
) -> ShotSpectrumResult:
    """Estimate ``Tr rho^n`` with planned cycle-test shots and recover the spectrum.

    ``Tr rho`` is fixed to 1; each higher trace is ``2 count0 / shots - 1``.
    Pass ``p0s`` from ``cycle_trace_probabilities`` to reuse the exact
    simulation across repetitions.
    """
    plan = spectrum_sampling_plan(rho.dim, epsilon, delta)
    if p0s is None:
        p0s = cycle_trace_probabilities(rho)
    rngs = spawn_rngs(seed, len(p0s))
    p = [1.0] + [
        2.0 * r.binomial(plan.per_trace_shots, p0) / plan.per_trace_shots - 1.0
        for r, p0 in zip(rngs, p0s)
    ]
    return ShotSpectrumResult(spectrum_from_traces(p), tuple(p), plan)


def propagated_eigenvalue_bound(eigenvalues: Sequence[float], epsilon: float) -> np.ndarray:
    """First-order bound on each eigenvalue error when every ``Tr rho^n`` (n >= 2) is off by at most ``epsilon``.

    With ``dp_n = sum_j n lambda_j^(n-1) dlambda_j`` the Jacobian is inverted
    and ``|dlambda_i| <= epsilon sum_{n>=2} |J^-1_{i n}|``. Degenerate
    spectra give an infinite bound.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    d = lam.size
    n = np.arange(1, d + 1)[:, None]
    jac = n * lam[None, :] ** (n - 1)
    try:
        inv = np.linalg.inv(jac)
    except np.linalg.LinAlgError:
        return np.full(d, np.inf)
    return epsilon * np.sum(np.abs(inv[:, 1:]), axis=1)
