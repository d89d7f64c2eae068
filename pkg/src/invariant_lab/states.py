"""States, observables, measurements and random ensembles.

Every type here is an immutable dataclass that validates itself on
construction. Arrays are stored as read-only ``complex128`` copies so that
instances can be shared freely between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .exceptions import DimensionMismatchError, StateFormatError, ValidationError

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
PROJECTOR_TOL = 1e-10
DEGENERACY_GAP = 1e-9


# --------------------------------------------------------------------------
# random number streams
# --------------------------------------------------------------------------


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a ``numpy.random.Generator`` for an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed: SeedLike, n: int) -> list[np.random.Generator]:
    """Split ``seed`` into ``n`` statistically independent generators.

    The result depends only on ``seed`` and ``n``, never on the order in
    which the streams are later consumed.
    """
    if isinstance(seed, np.random.Generator):
        return list(seed.spawn(n))
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seed.spawn(n)]


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# core types
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes; must satisfy ``sum |a|^2 = 1`` within 1e-12.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise ValidationError("PureState amplitudes must be a non-empty vector")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("PureState amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"PureState not normalized: norm^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, vector) -> "PureState":
        v = np.asarray(vector, dtype=np.complex128)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(v / n)

    @classmethod
    def basis(cls, dim: int, k: int) -> "PureState":
        v = np.zeros(dim, dtype=np.complex128)
        v[k] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValidationError("DensityMatrix must be a non-empty square matrix")
        if not np.all(np.isfinite(m)):
            raise ValidationError("DensityMatrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("DensityMatrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValidationError(f"DensityMatrix trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -PSD_TOL:
            raise ValidationError(f"DensityMatrix has negative eigenvalue {lo!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def _check_projector_set(projectors, dim, name):
    # Hermitian idempotents that sum to the identity are automatically
    # mutually orthogonal, so k products suffice instead of k^2.
    total = np.zeros((dim, dim), dtype=np.complex128)
    for j, pj in enumerate(projectors):
        if pj.shape != (dim, dim):
            raise DimensionMismatchError(f"{name} projector {j} has shape {pj.shape}")
        if np.max(np.abs(pj - pj.conj().T)) > PROJECTOR_TOL:
            raise ValidationError(f"{name} projector {j} is not Hermitian")
        if np.max(np.abs(pj @ pj - pj)) > PROJECTOR_TOL:
            raise ValidationError(f"{name} projector {j} is not idempotent")
        total += pj
    if np.max(np.abs(total - np.eye(dim))) > PROJECTOR_TOL:
        raise ValidationError(f"{name} projectors do not sum to the identity")


@dataclass(frozen=True, eq=False)
class PVM:
    """Projection-valued measure: orthogonal projectors summing to identity."""

    projectors: tuple

    def __post_init__(self):
        ps = tuple(_frozen(p) for p in self.projectors)
        if not ps:
            raise ValidationError("PVM needs at least one projector")
        _check_projector_set(ps, ps[0].shape[0], "PVM")
        object.__setattr__(self, "projectors", ps)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self):
        return len(self.projectors)

    @classmethod
    def from_basis(cls, basis: "OrthonormalBasis") -> "PVM":
        return cls(tuple(v.projector() for v in basis.vectors))


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Ordered orthonormal basis of ``C^dim``."""

    vectors: tuple

    def __post_init__(self):
        vecs = tuple(v if isinstance(v, PureState) else PureState(v) for v in self.vectors)
        if not vecs:
            raise ValidationError("basis must contain at least one vector")
        dim = vecs[0].dim
        if len(vecs) != dim or any(v.dim != dim for v in vecs):
            raise DimensionMismatchError("basis must contain exactly dim vectors of size dim")
        m = np.column_stack([v.amplitudes for v in vecs])
        if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > NORM_TOL:
            raise ValidationError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def matrix(self) -> np.ndarray:
        """Columns are the basis vectors."""
        return np.column_stack([v.amplitudes for v in self.vectors])

    @classmethod
    def from_columns(cls, columns) -> "OrthonormalBasis":
        columns = np.asarray(columns, dtype=np.complex128)
        return cls(tuple(PureState(columns[:, k]) for k in range(columns.shape[1])))

    @classmethod
    def computational(cls, dim: int) -> "OrthonormalBasis":
        return cls.from_columns(np.eye(dim))

    @classmethod
    def fourier(cls, dim: int) -> "OrthonormalBasis":
        j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
        f = np.exp(2j * np.pi * j * k / dim) / np.sqrt(dim)
        return cls.from_columns(f)


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator with its spectral decomposition.

    Attributes
    ----------
    matrix : ndarray
        The operator.
    eigenvalues : tuple of float
        Distinct eigenvalues, sorted descending.
    projectors : tuple of ndarray
        Eigenprojector for each entry of ``eigenvalues``.
    eigenbases : tuple of ndarray
        For each eigenvalue a ``dim x multiplicity`` matrix whose columns are
        an orthonormal basis of the projector's range.
    """

    matrix: np.ndarray
    eigenvalues: tuple
    projectors: tuple
    eigenbases: tuple = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        projs = tuple(_frozen(p) for p in self.projectors)
        bases = tuple(_frozen(b) for b in self.eigenbases)
        vals = tuple(float(a) for a in self.eigenvalues)
        dim = m.shape[0]
        if len(vals) != len(projs) or len(vals) != len(bases):
            raise ValidationError("eigenvalue/projector count mismatch")
        _check_projector_set(projs, dim, "Observable")
        recon = sum(a * p for a, p in zip(vals, projs))
        if np.max(np.abs(recon - m)) > PROJECTOR_TOL * max(1.0, np.max(np.abs(vals))):
            raise ValidationError("Observable matrix differs from sum a * P_a")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "eigenbases", bases)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectral(self) -> list:
        return list(zip(self.eigenvalues, self.projectors))

    def eigen_columns(self) -> tuple[np.ndarray, np.ndarray]:
        """Full eigenvector matrix and matching per-column eigenvalues."""
        cols = np.concatenate(self.eigenbases, axis=1)
        vals = np.concatenate(
            [np.full(b.shape[1], a) for a, b in zip(self.eigenvalues, self.eigenbases)]
        )
        return cols, vals


def spectral_decompose(matrix) -> Observable:
    """Diagonalize a Hermitian matrix, merging eigenvalues closer than 1e-9.

    Parameters
    ----------
    matrix : array_like
        Square matrix, Hermitian within 1e-10.

    Returns
    -------
    Observable
        Distinct eigenvalues sorted descending with their projectors. The
        eigenvalue reported for a merged group is the mean of its members.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError("spectral_decompose needs a non-empty square matrix")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValidationError("spectral_decompose input is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w, v = w[::-1], v[:, ::-1]
    groups = [[0]]
    for k in range(1, len(w)):
        if w[groups[-1][-1]] - w[k] < DEGENERACY_GAP:
            groups[-1].append(k)
        else:
            groups.append([k])
    vals, projs, bases = [], [], []
    for g in groups:
        b = v[:, g]
        vals.append(float(np.mean(w[g])))
        projs.append(b @ b.conj().T)
        bases.append(b)
    return Observable(m, tuple(vals), tuple(projs), tuple(bases))


# --------------------------------------------------------------------------
# random ensembles
# --------------------------------------------------------------------------


def random_pure_state(dim: int, seed: SeedLike = None) -> PureState:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    rng = make_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v))


def random_ginibre_density(dim: int, rank: int | None = None, seed: SeedLike = None) -> DensityMatrix:
    """Ginibre random density matrix ``G G^dag / Tr(G G^dag)``.

    ``G`` is a ``dim x rank`` standard complex Gaussian matrix; ``rank``
    defaults to ``dim``.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValidationError(f"rank must satisfy 1 <= rank <= dim, got {rank}")
    rng = make_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(dim: int, seed: SeedLike = None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = make_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, seed: SeedLike = None) -> np.ndarray:
    rng = make_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


def as_operator(state) -> np.ndarray:
    """Matrix form of a PureState, DensityMatrix, ket vector or square array."""
    if isinstance(state, PureState):
        return state.projector()
    if isinstance(state, DensityMatrix):
        return state.matrix
    a = np.asarray(state, dtype=np.complex128)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    if a.ndim == 2 and a.shape[0] == a.shape[1]:
        return a
    raise ValidationError(f"cannot interpret array of shape {a.shape} as a state")


def state_dim(state) -> int:
    if isinstance(state, (PureState, DensityMatrix)):
        return state.dim
    return np.asarray(state).shape[0]


def check_same_dim(*states) -> int:
    dims = {state_dim(s) for s in states}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


# --------------------------------------------------------------------------
# JSON interchange
# --------------------------------------------------------------------------


def _parse_real_array(obj, key, source, ndim):
    if key not in obj:
        raise StateFormatError(f"missing field '{key}'", source, key)
    try:
        arr = np.asarray(obj[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise StateFormatError(f"non-numeric entries ({exc})", source, key) from None
    if arr.ndim != ndim:
        raise StateFormatError(f"expected a {ndim}-d array, got {arr.ndim}-d", source, key)
    return arr


def matrix_from_json(obj, source=None) -> np.ndarray:
    """Parse ``{"re": [[...]], "im": [[...]]}`` into a complex matrix."""
    if not isinstance(obj, dict):
        raise StateFormatError("expected a JSON object", source)
    re = _parse_real_array(obj, "re", source, 2)
    im = _parse_real_array(obj, "im", source, 2) if "im" in obj else np.zeros_like(re)
    if re.shape != im.shape:
        raise StateFormatError(f"shape {im.shape} differs from re {re.shape}", source, "im")
    return re + 1j * im


def state_from_json(obj, source=None):
    """Parse a vector (PureState) or matrix (DensityMatrix) JSON object."""
    if not isinstance(obj, dict):
        raise StateFormatError("expected a JSON object", source)
    if "re" not in obj:
        raise StateFormatError("missing field 're'", source, "re")
    is_matrix = isinstance(obj["re"], list) and obj["re"] and isinstance(obj["re"][0], list)
    if is_matrix:
        m = matrix_from_json(obj, source)
        try:
            return DensityMatrix(m)
        except ValidationError as exc:
            raise StateFormatError(str(exc), source, "re/im") from None
    re = _parse_real_array(obj, "re", source, 1)
    im = _parse_real_array(obj, "im", source, 1) if "im" in obj else np.zeros_like(re)
    if re.shape != im.shape:
        raise StateFormatError(f"length {im.size} differs from re {re.size}", source, "im")
    if "dim" in obj and obj["dim"] != re.size:
        raise StateFormatError(f"dim {obj['dim']} but {re.size} amplitudes", source, "dim")
    try:
        return PureState(re + 1j * im)
    except ValidationError as exc:
        raise StateFormatError(str(exc), source, "re/im") from None


def state_to_json(state) -> dict:
    if isinstance(state, PureState):
        a = state.amplitudes
        return {"dim": state.dim, "re": a.real.tolist(), "im": a.imag.tolist()}
    m = as_operator(state)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise StateFormatError(f"cannot read file ({exc.strerror})", str(path)) from None
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"invalid JSON ({exc.msg} at line {exc.lineno})", str(path)) from None


def load_state(path):
    """Load and validate a state JSON file."""
    return state_from_json(_read_json(path), source=str(path))


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(_read_json(path), source=str(path))


def dump_state(state, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(state), sort_keys=True))


def states_from(items: Sequence) -> list:
    """Coerce raw vectors/matrices to PureState/DensityMatrix instances."""
    out = []
    for s in items:
        if isinstance(s, (PureState, DensityMatrix)):
            out.append(s)
        else:
            a = np.asarray(s, dtype=np.complex128)
            out.append(PureState(a) if a.ndim == 1 else DensityMatrix(a))
    return out
