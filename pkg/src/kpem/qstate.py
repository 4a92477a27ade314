"""Labeled qudit systems, pure state vectors, reduced density matrices.

Index convention (bit-exact contract): party 0 is the most significant
digit of the row-major mixed-radix index into the amplitude vector, so for
qubits ABC the basis state |100> sits at index 4.

All tolerance constants live here.  The purity threshold is shared with
the factorization search so that "this marginal is pure" means the same
thing everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .partitions import Partition

NORM_TOL = 1e-12          # state vector norm
HERM_TOL = 1e-12          # elementwise hermiticity of density matrices
TRACE_TOL = 1e-12         # |tr(rho) - 1|
EIG_FLOOR = -1e-10        # eigenvalues below this are a contract failure
SPECTRUM_SUM_TOL = 1e-10  # clipped spectrum must sum to 1 within this
PURITY_TOL = 1e-9         # tr(rho^2) >= 1 - PURITY_TOL counts as pure
FIDELITY_TOL = 1e-8       # product reconstruction in factorize
DIM_CAP = 2 ** 14         # total Hilbert dimension guard
PARTY_CAP = 12            # party count guard


class NumericalContractError(Exception):
    """A numerical invariant (norm, hermiticity, positivity, fidelity) failed."""


@dataclass(frozen=True)
class SystemLayout:
    """Ordered parties, each a (label, local dimension) pair."""

    parties: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        labels = [lab for lab, _ in self.parties]
        if not labels:
            raise ValueError("layout needs at least one party")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate party labels: {labels}")
        for lab, d in self.parties:
            if not isinstance(d, int) or d < 2:
                raise ValueError(f"party {lab!r} has invalid dimension {d!r}")

    @classmethod
    def of(cls, labels: Sequence[str], dims: Sequence[int]) -> "SystemLayout":
        if len(labels) != len(dims):
            raise ValueError("labels and dims differ in length")
        return cls(tuple(zip(labels, (int(d) for d in dims))))

    @classmethod
    def qubits(cls, labels: Sequence[str]) -> "SystemLayout":
        return cls.of(labels, [2] * len(labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.parties)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.parties)

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index_of(self, label: str) -> int:
        for i, (lab, _) in enumerate(self.parties):
            if lab == label:
                return i
        raise KeyError(label)

    def sub_layout(self, indices: Sequence[int]) -> "SystemLayout":
        """Layout of a party subset, original order kept."""
        idx = sorted(indices)
        _check_party_indices(idx, self.num_parties)
        return SystemLayout(tuple(self.parties[i] for i in idx))


def _check_party_indices(indices: Sequence[int], n: int) -> None:
    if len(indices) == 0:
        raise ValueError("empty party subset")
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate party indices: {indices}")
    if not all(0 <= i < n for i in indices):
        raise ValueError(f"party index out of range for n={n}: {indices}")


def check_size_caps(layout: SystemLayout, unsafe_large: bool = False) -> None:
    """Guard against accidental exponential blowup; lift with unsafe_large."""
    if unsafe_large:
        return
    if layout.total_dim > DIM_CAP:
        raise ValueError(
            f"total dimension {layout.total_dim} exceeds cap {DIM_CAP}; "
            "pass unsafe_large=True to override"
        )
    if layout.num_parties > PARTY_CAP:
        raise ValueError(
            f"{layout.num_parties} parties exceeds cap {PARTY_CAP}; "
            "pass unsafe_large=True to override"
        )


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over a layout."""

    layout: SystemLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.shape != (self.layout.total_dim,):
            raise ValueError(
                f"amplitude length {amp.size} != total dimension {self.layout.total_dim}"
            )
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalContractError(f"state norm {norm} deviates from 1")
        amp = amp.copy()
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def num_parties(self) -> int:
        return self.layout.num_parties

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per party (read-only view)."""
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian trace-one matrix over a layout."""

    layout: SystemLayout
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} != ({d}, {d})")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERM_TOL:
            raise NumericalContractError(f"hermiticity defect {herm}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericalContractError(f"trace {tr} deviates from 1")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


# --- state specifications ----------------------------------------------------


@dataclass(frozen=True)
class GhzFactor:
    """(1/sqrt d) sum_j |j...j> on len(labels) parties of dimension dim."""

    labels: tuple[str, ...]
    dim: int = 2


@dataclass(frozen=True)
class WFactor:
    """(1/sqrt n) sum_i |0..1_i..0> on qubits."""

    labels: tuple[str, ...]


@dataclass(frozen=True)
class MaxEntFactor:
    """(1/sqrt d) sum_j |jj> on exactly two parties of dimension dim."""

    labels: tuple[str, ...]
    dim: int = 2


@dataclass(frozen=True)
class AmplitudesFactor:
    """Explicit amplitude vector over the listed parties."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]
    amplitudes: tuple[complex, ...]


StateFactor = Union[GhzFactor, WFactor, MaxEntFactor, AmplitudesFactor]


@dataclass(frozen=True)
class StateSpec:
    """A tensor product of named factors; the build ground truth."""

    factors: tuple[StateFactor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("spec needs at least one factor")
        seen: set[str] = set()
        for f in self.factors:
            if not f.labels:
                raise ValueError(f"factor without labels: {f!r}")
            for lab in f.labels:
                if lab in seen:
                    raise ValueError(f"label {lab!r} used by more than one factor")
                seen.add(lab)
            _validate_factor(f)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for f in self.factors for lab in f.labels)

    @property
    def factor_sizes(self) -> tuple[int, ...]:
        return tuple(len(f.labels) for f in self.factors)


def _validate_factor(f: StateFactor) -> None:
    if isinstance(f, (GhzFactor, MaxEntFactor)) and f.dim < 2:
        raise ValueError(f"local dimension must be >= 2, got {f.dim}")
    if isinstance(f, MaxEntFactor) and len(f.labels) != 2:
        raise ValueError("maxent factor takes exactly two parties")
    if isinstance(f, AmplitudesFactor):
        if len(f.dims) != len(f.labels):
            raise ValueError("dims and labels differ in length")
        if any(d < 2 for d in f.dims):
            raise ValueError(f"local dimension must be >= 2, got {f.dims}")
        if len(f.amplitudes) != math.prod(f.dims):
            raise ValueError("amplitude length does not match dims")
        if np.linalg.norm(np.asarray(f.amplitudes)) == 0.0:
            raise ValueError("zero amplitude vector")


def _factor_dims_vector(f: StateFactor) -> tuple[tuple[int, ...], np.ndarray]:
    if isinstance(f, GhzFactor):
        n, d = len(f.labels), f.dim
        v = np.zeros(d ** n, dtype=np.complex128)
        step = (d ** n - 1) // (d - 1)  # index of |j...j> is j * (1 + d + ... )
        v[np.arange(d) * step] = 1.0 / math.sqrt(d)
        return (d,) * n, v
    if isinstance(f, WFactor):
        n = len(f.labels)
        v = np.zeros(2 ** n, dtype=np.complex128)
        v[[2 ** (n - 1 - i) for i in range(n)]] = 1.0 / math.sqrt(n)
        return (2,) * n, v
    if isinstance(f, MaxEntFactor):
        d = f.dim
        v = np.zeros(d * d, dtype=np.complex128)
        v[np.arange(d) * (d + 1)] = 1.0 / math.sqrt(d)
        return (d, d), v
    if isinstance(f, AmplitudesFactor):
        v = np.asarray(f.amplitudes, dtype=np.complex128)
        return f.dims, v / np.linalg.norm(v)
    raise TypeError(f"unknown factor: {f!r}")


def build_state(spec: StateSpec, unsafe_large: bool = False) -> PureState:
    """Materialize a StateSpec as a PureState in the listed party order."""
    labels: list[str] = []
    dims: list[int] = []
    vec = np.ones(1, dtype=np.complex128)
    for f in spec.factors:
        fdims, fvec = _factor_dims_vector(f)
        labels.extend(f.labels)
        dims.extend(fdims)
        vec = np.kron(vec, fvec)
    layout = SystemLayout.of(labels, dims)
    check_size_caps(layout, unsafe_large)
    vec /= np.linalg.norm(vec)
    return PureState(layout, vec)


# --- dictionary form of a StateSpec (used by the CLI state files and by
# --- audit witness records; keys: kind, labels, dim, dims, re, im) -----------


_FACTOR_KEYS = {
    "ghz": {"kind", "labels", "dim"},
    "w": {"kind", "labels"},
    "maxent": {"kind", "labels", "dim"},
    "amplitudes": {"kind", "labels", "dims", "re", "im"},
}


def factor_to_dict(f: StateFactor) -> dict:
    if isinstance(f, GhzFactor):
        return {"kind": "ghz", "labels": list(f.labels), "dim": f.dim}
    if isinstance(f, WFactor):
        return {"kind": "w", "labels": list(f.labels)}
    if isinstance(f, MaxEntFactor):
        return {"kind": "maxent", "labels": list(f.labels), "dim": f.dim}
    if isinstance(f, AmplitudesFactor):
        return {
            "kind": "amplitudes",
            "labels": list(f.labels),
            "dims": list(f.dims),
            "re": [float(a.real) for a in f.amplitudes],
            "im": [float(a.imag) for a in f.amplitudes],
        }
    raise TypeError(f"unknown factor: {f!r}")


def factor_from_dict(obj: dict, where: str = "factor") -> StateFactor:
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected an object, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind not in _FACTOR_KEYS:
        raise ValueError(f"{where}: unknown kind {kind!r}")
    unknown = set(obj) - _FACTOR_KEYS[kind]
    if unknown:
        raise ValueError(f"{where}: unknown field(s) {sorted(unknown)} for kind {kind!r}")
    labels = obj.get("labels")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ValueError(f"{where}: 'labels' must be a list of strings")
    labels = tuple(labels)
    if kind == "ghz":
        return GhzFactor(labels, int(obj.get("dim", 2)))
    if kind == "w":
        return WFactor(labels)
    if kind == "maxent":
        return MaxEntFactor(labels, int(obj.get("dim", 2)))
    for key in ("dims", "re", "im"):
        if key not in obj or not isinstance(obj[key], list):
            raise ValueError(f"{where}: amplitudes factor needs list field {key!r}")
    if len(obj["re"]) != len(obj["im"]):
        raise ValueError(f"{where}: 're' and 'im' differ in length")
    amps = tuple(complex(r, i) for r, i in zip(obj["re"], obj["im"]))
    return AmplitudesFactor(labels, tuple(int(d) for d in obj["dims"]), amps)


def spec_to_dict(spec: StateSpec) -> dict:
    return {"factors": [factor_to_dict(f) for f in spec.factors]}


def spec_from_dict(obj: dict) -> StateSpec:
    if not isinstance(obj, dict):
        raise ValueError(f"state document: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - {"factors"}
    if unknown:
        raise ValueError(f"state document: unknown field(s) {sorted(unknown)}")
    factors = obj.get("factors")
    if not isinstance(factors, list) or not factors:
        raise ValueError("state document: 'factors' must be a nonempty array")
    return StateSpec(tuple(
        factor_from_dict(f, where=f"factors[{i}]") for i, f in enumerate(factors)
    ))


# --- random states -----------------------------------------------------------


def haar_state(layout: SystemLayout, rng: np.random.Generator) -> PureState:
    z = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return PureState(layout, z / np.linalg.norm(z))


def random_pure(layout: SystemLayout, seed: int, unsafe_large: bool = False) -> PureState:
    """Haar-distributed pure state, deterministic for a given seed."""
    check_size_caps(layout, unsafe_large)
    return haar_state(layout, np.random.default_rng(seed))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with the usual phase fix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


# --- party-wise operations ---------------------------------------------------


def permute_parties(state: PureState, perm: Sequence[int]) -> PureState:
    """Party i of the output is party perm[i] of the input."""
    n = state.num_parties
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of range({n}): {perm}")
    parties = tuple(state.layout.parties[p] for p in perm)
    amp = state.tensor().transpose(perm).reshape(-1)
    return PureState(SystemLayout(parties), amp)


def regroup(state: PureState, partition: Partition) -> PureState:
    """Merge each partition block into a single composite party.

    Blocks keep canonical order (by smallest member); within a block the
    original party order is kept, so amplitudes are a pure re-indexing.
    """
    n = state.num_parties
    if partition.parties != tuple(range(n)):
        raise ValueError("partition must cover all parties of the state")
    labels = state.layout.labels
    dims = state.layout.dims
    parties = tuple(
        ("".join(labels[i] for i in block), math.prod(dims[i] for i in block))
        for block in partition.blocks
    )
    axes = [i for block in partition.blocks for i in block]
    amp = state.tensor().transpose(axes).reshape(-1)
    return PureState(SystemLayout(parties), amp)


def apply_local_unitary(state: PureState, party: int, u: np.ndarray) -> PureState:
    d = state.layout.dims[party]
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (d, d):
        raise ValueError(f"unitary shape {u.shape} != ({d}, {d})")
    t = np.tensordot(u, state.tensor(), axes=([1], [party]))
    t = np.moveaxis(t, 0, party)
    return PureState(state.layout, t.reshape(-1))


def _split_matrix(state: PureState, keep: Sequence[int]) -> np.ndarray:
    """Reshape amplitudes to (dim of kept parties, dim of the rest)."""
    n = state.num_parties
    keep = sorted(keep)
    _check_party_indices(keep, n)
    rest = [i for i in range(n) if i not in set(keep)]
    dims = state.layout.dims
    dk = math.prod(dims[i] for i in keep)
    return state.tensor().transpose(keep + rest).reshape(dk, -1)


def reduced_density(state: PureState, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace onto the kept parties (ascending original order)."""
    m = _split_matrix(state, keep)
    rho = m @ m.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(state.layout.sub_layout(sorted(keep)), rho)


def clip_spectrum(raw: np.ndarray) -> np.ndarray:
    """Descending eigenvalues, clipped into [0, 1] and renormalized.

    Raises if a value sits below the -1e-10 floor or if the sum strays
    from 1 by more than 1e-10 before renormalization.
    """
    lam = np.sort(np.real(np.asarray(raw)))[::-1]
    if lam.size and lam[-1] < EIG_FLOOR:
        raise NumericalContractError(f"eigenvalue {lam[-1]} below floor {EIG_FLOOR}")
    lam = np.clip(lam, 0.0, 1.0)
    total = float(lam.sum())
    if abs(total - 1.0) > SPECTRUM_SUM_TOL:
        raise NumericalContractError(f"spectrum sums to {total}")
    return lam / total


def spectrum(dm: DensityMatrix) -> np.ndarray:
    """Clipped eigenvalue spectrum of a density matrix, descending."""
    return clip_spectrum(np.linalg.eigvalsh(dm.matrix))


def marginal_spectrum(state: PureState, keep: Sequence[int]) -> np.ndarray:
    """Spectrum of the reduced state on `keep`, via SVD of the split vector.

    Same contract as spectrum(reduced_density(...)) but without forming
    the density matrix; the two routes agree within tolerance and are
    cross-checked in the tests.
    """
    m = _split_matrix(state, keep)
    if m.shape[0] > m.shape[1]:
        m = m.T  # singular values are side-independent; keep SVD small
    lam = np.linalg.svd(m, compute_uv=False) ** 2
    full = np.zeros(math.prod(state.layout.dims[i] for i in sorted(keep)))
    full[: lam.size] = lam
    return clip_spectrum(full)


def purity(dm: DensityMatrix) -> float:
    return float(np.real(np.sum(dm.matrix * dm.matrix.conj().T)))


def marginal_purity(state: PureState, keep: Sequence[int]) -> float:
    """tr(rho_keep^2) straight from the split vector."""
    m = _split_matrix(state, keep)
    if m.shape[0] > m.shape[1]:
        m = m.T
    g = m @ m.conj().T
    return float(np.real(np.sum(g * g.conj())))


def is_pure(dm: DensityMatrix) -> bool:
    return purity(dm) >= 1.0 - PURITY_TOL


def overlap_fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2; ignores global phase by construction."""
    if a.layout.dims != b.layout.dims:
        raise ValueError("layout mismatch")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate a vector's global phase so its first nonzero entry is real > 0."""
    idx = np.flatnonzero(np.abs(vec) > 1e-12)
    if idx.size == 0:
        raise ValueError("zero vector")
    z = vec[idx[0]]
    return vec * (abs(z) / z)
