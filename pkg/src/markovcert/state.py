"""Dense multipartite states: layouts, regions, partial traces and distances.

Sites carry global integer indices. A full state on ``N`` sites holds sites
``0..N-1``; a reduced density matrix holds the subset it was reduced to, so
regions are always expressed in global site indices no matter which
marginal an operation receives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    CapacityError,
    CompositionError,
    DegenerateInputError,
    DomainError,
    RegionError,
    ShapeError,
    ValidationError,
)

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-8
EIG_ZERO = 1e-12
MAX_DIM = 2**14


@dataclass(frozen=True)
class Tolerances:
    herm: float = TOL_HERM
    trace: float = TOL_TRACE
    psd: float = TOL_PSD


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class SystemLayout:
    """Ordered local factors ``(label, dim)``."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims):
            raise ValidationError("labels and dims differ in length")
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate site labels in {labels}")
        if any(d < 1 for d in dims):
            raise ValidationError(f"site dimensions must be positive, got {dims}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_dims(cls, dims: Sequence[int], labels: Sequence[str] | None = None, sites=None):
        if labels is None:
            idx = range(len(dims)) if sites is None else sites
            labels = [f"s{i}" for i in idx]
        return cls(tuple(labels), tuple(dims))

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def restrict(self, positions: Sequence[int]) -> "SystemLayout":
        return SystemLayout(
            tuple(self.labels[p] for p in positions), tuple(self.dims[p] for p in positions)
        )

    def concat(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.labels + other.labels, self.dims + other.dims)


@dataclass(frozen=True)
class Region:
    """Strictly increasing, duplicate-free set of global site indices."""

    sites: tuple[int, ...] = field(default=())

    def __post_init__(self):
        raw = [int(s) for s in self.sites]
        if any(s < 0 for s in raw):
            raise RegionError(f"negative site index in {raw}")
        if len(set(raw)) != len(raw):
            raise RegionError(f"duplicate site index in {raw}")
        object.__setattr__(self, "sites", tuple(sorted(raw)))

    def __iter__(self):
        return iter(self.sites)

    def __len__(self):
        return len(self.sites)

    def __contains__(self, s):
        return s in self.sites

    def __repr__(self):
        return f"Region({list(self.sites)})"

    def union(self, *others) -> "Region":
        out = set(self.sites)
        for o in others:
            out |= set(as_region(o).sites)
        return Region(tuple(out))

    def difference(self, other) -> "Region":
        other = set(as_region(other).sites)
        return Region(tuple(s for s in self.sites if s not in other))

    def intersection(self, other) -> "Region":
        other = set(as_region(other).sites)
        return Region(tuple(s for s in self.sites if s in other))

    def complement(self, universe) -> "Region":
        if isinstance(universe, int):
            universe = Region(tuple(range(universe)))
        return as_region(universe).difference(self)

    def isdisjoint(self, other) -> bool:
        return set(self.sites).isdisjoint(as_region(other).sites)

    def issubset(self, other) -> bool:
        return set(self.sites) <= set(as_region(other).sites)


def as_region(x) -> Region:
    if isinstance(x, Region):
        return x
    if x is None:
        return Region()
    if isinstance(x, (int, np.integer)):
        return Region((int(x),))
    return Region(tuple(x))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


def check_density_matrix(m: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> None:
    """Raise ValidationError unless ``m`` is Hermitian, unit trace and PSD within tol."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"density matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("density matrix has non-finite entries")
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > tol.herm:
        raise ValidationError(f"matrix not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol.trace:
        raise ValidationError(f"trace {tr.real:.12g} deviates from 1")
    lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    if lam_min < -tol.psd:
        raise ValidationError(f"matrix not PSD (minimum eigenvalue {lam_min:.3e})")


class DensityMatrix:
    """Immutable density operator on the sites listed in ``sites``.

    ``layout`` lists the local factors in the same order as ``sites``
    (ascending global index).
    """

    __slots__ = ("data", "layout", "sites")

    def __init__(self, data, layout=None, sites=None, *, check=True, tol: Tolerances = DEFAULT_TOL):
        data = _readonly(data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {data.shape}")
        if layout is None:
            layout = _qubit_layout_for(data.shape[0], sites)
        elif not isinstance(layout, SystemLayout):
            layout = SystemLayout.from_dims(layout, sites=sites)
        if sites is None:
            sites = Region(tuple(range(layout.n_sites)))
        sites = as_region(sites)
        if len(sites) != layout.n_sites:
            raise ShapeError(f"{len(sites)} site indices for {layout.n_sites} layout factors")
        if layout.total_dim != data.shape[0]:
            raise ShapeError(f"layout dimension {layout.total_dim} != matrix size {data.shape[0]}")
        if check:
            check_density_matrix(data, tol)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "sites", sites)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        return f"DensityMatrix(sites={list(self.sites)}, dims={list(self.dims)})"

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def on(self, sites) -> "DensityMatrix":
        """Same matrix relabelled onto other global sites (kept in ascending order)."""
        sites = as_region(sites)
        layout = SystemLayout(
            tuple(f"s{s}" for s in sites) if _default_labels(self) else self.layout.labels,
            self.layout.dims,
        )
        return DensityMatrix(self.data, layout, sites, check=False)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: SystemLayout
    sites: Region

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        amps.flags.writeable = False
        layout = self.layout
        if not isinstance(layout, SystemLayout):
            layout = SystemLayout.from_dims(layout)
        sites = self.sites
        sites = Region(tuple(range(layout.n_sites))) if sites is None else as_region(sites)
        if layout.total_dim != amps.size:
            raise ShapeError(f"layout dimension {layout.total_dim} != {amps.size} amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"state vector norm {norm:.12g} deviates from 1")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "sites", sites)

    @property
    def dims(self):
        return self.layout.dims


def _default_labels(rho) -> bool:
    return all(lab == f"s{s}" for lab, s in zip(rho.layout.labels, rho.sites))


def _qubit_layout_for(dim: int, sites=None) -> SystemLayout:
    n = int(round(np.log2(dim))) if dim > 0 else 0
    if 2**n != dim:
        raise ShapeError(f"cannot infer qubit layout for dimension {dim}; pass dims")
    if sites is not None:
        return SystemLayout.from_dims([2] * n, sites=as_region(sites))
    return SystemLayout.from_dims([2] * n)


def _positions(state, region: Region) -> list[int]:
    index = {s: p for p, s in enumerate(state.sites)}
    missing = [s for s in region if s not in index]
    if missing:
        raise RegionError(f"sites {missing} not in state sites {list(state.sites)}")
    return [index[s] for s in region]


def partial_trace(state: DensityMatrix, keep, *, max_dim: int = MAX_DIM, backend=None) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (global site indices)."""
    keep = as_region(keep)
    pos = _positions(state, keep)
    if state.dim > max_dim:
        raise CapacityError(f"dimension {state.dim} exceeds configured maximum {max_dim}")
    if len(pos) == state.layout.n_sites:
        return state
    out = kernels.ptrace(state.data, state.dims, pos, backend=backend)
    return DensityMatrix(out, state.layout.restrict(pos), keep, check=False)


def ptrace_operator(op: np.ndarray, dims: Sequence[int], keep_positions: Sequence[int], backend=None) -> np.ndarray:
    """Partial trace of an arbitrary (not necessarily Hermitian) operator."""
    return kernels.ptrace(op, dims, keep_positions, hermitian=False, backend=backend)


def permute_operator(op: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``i`` is old factor ``order[i]``."""
    idx = kernels.mixed_radix_offsets(dims, order)
    return op[np.ix_(idx, idx)]


def embed_operator(op: np.ndarray, op_sites, full_sites, full_dims: Sequence[int]) -> np.ndarray:
    """Extend ``op`` on ``op_sites`` by the identity to ``full_sites`` (both ascending)."""
    op_sites = as_region(op_sites)
    full_sites = as_region(full_sites)
    if not op_sites.issubset(full_sites):
        raise RegionError(f"{op_sites} not contained in {full_sites}")
    pos = {s: p for p, s in enumerate(full_sites)}
    rest = [s for s in full_sites if s not in op_sites]
    rest_dim = int(np.prod([full_dims[pos[s]] for s in rest], dtype=np.int64)) if rest else 1
    big = np.kron(op, np.eye(rest_dim))
    stacked = list(op_sites) + rest
    stacked_dims = [full_dims[pos[s]] for s in stacked]
    where = {s: i for i, s in enumerate(stacked)}
    return permute_operator(big, stacked_dims, [where[s] for s in full_sites])


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Trace norm ``sum |lambda_i|`` of ``a - b``; lies in [0, 2]."""
    if a.sites != b.sites or a.dims != b.dims:
        raise ShapeError(
            f"layout mismatch: sites {list(a.sites)}/{list(b.sites)}, dims {a.dims}/{b.dims}"
        )
    # fixed operand orientation makes the result exactly symmetric
    if a.data.tobytes() > b.data.tobytes():
        a, b = b, a
    diff = a.data - b.data
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def trace_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if np.allclose(m, m.conj().T, atol=1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def tensor_product(a, b, *, max_dim: int = MAX_DIM):
    """Kronecker product of two states on disjoint sites.

    Works for two DensityMatrix or two StateVector operands. Factors of the
    result are sorted by global site index.
    """
    if not a.sites.isdisjoint(b.sites):
        raise CompositionError(
            f"overlapping sites {sorted(set(a.sites) & set(b.sites))}; relabel with .on()"
        )
    layout = a.layout.concat(b.layout)
    if layout.total_dim > max_dim:
        raise CapacityError(f"dimension {layout.total_dim} exceeds configured maximum {max_dim}")
    stacked = list(a.sites) + list(b.sites)
    order = sorted(range(len(stacked)), key=lambda i: stacked[i])
    new_layout = layout.restrict(order)
    new_sites = Region(tuple(stacked))
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        v = np.kron(a.amplitudes, b.amplitudes)
        idx = kernels.mixed_radix_offsets(layout.dims, order)
        return StateVector(v[idx], new_layout, new_sites)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        m = permute_operator(np.kron(a.data, b.data), layout.dims, order)
        return DensityMatrix(m, new_layout, new_sites, check=False)
    raise TypeError("tensor_product needs two DensityMatrix or two StateVector operands")


def random_mixed_state(layout, rank: int, seed=None, sites=None) -> DensityMatrix:
    """Ginibre-induced state ``G G^dag / Tr(G G^dag)`` with ``G`` of shape dim x rank."""
    if not isinstance(layout, SystemLayout):
        layout = SystemLayout.from_dims(layout, sites=sites)
    dim = layout.total_dim
    if rank < 1 or rank > dim:
        raise DomainError(f"rank must lie in [1, {dim}], got {rank}")
    if dim > MAX_DIM:
        raise CapacityError(f"dimension {dim} exceeds configured maximum {MAX_DIM}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix(0.5 * (m + m.conj().T), layout, sites, check=False)


def random_pure_vector(layout, seed=None, sites=None) -> StateVector:
    if not isinstance(layout, SystemLayout):
        layout = SystemLayout.from_dims(layout, sites=sites)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return StateVector(v / np.linalg.norm(v), layout, sites)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def project_to_density(m, layout=None, sites=None) -> DensityMatrix:
    """Hermitize, clip negative eigenvalues and renormalize to unit trace.

    Accepts a DensityMatrix (layout kept) or a square array.
    """
    if isinstance(m, DensityMatrix):
        layout = m.layout if layout is None else layout
        sites = m.sites if sites is None else sites
        m = m.data
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    h = 0.5 * (m + m.conj().T)
    lam, vec = np.linalg.eigh(h)
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    if total <= EIG_ZERO:
        raise DegenerateInputError("matrix has no positive part to renormalize")
    out = (vec * (lam / total)) @ vec.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), layout, sites, check=False)


def _simplex_projection(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(v) + 1)
    r = np.nonzero(u - (css - 1.0) / idx > 0)[0][-1]
    return np.clip(v - (css[r] - 1.0) / (r + 1), 0.0, None)


def nearest_density(m, layout=None, sites=None) -> DensityMatrix:
    """Frobenius-nearest unit-trace PSD matrix (eigenvalues projected onto the simplex)."""
    if isinstance(m, DensityMatrix):
        layout = m.layout if layout is None else layout
        sites = m.sites if sites is None else sites
        m = m.data
    m = np.asarray(m, dtype=np.complex128)
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    out = (vec * _simplex_projection(lam)) @ vec.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), layout, sites, check=False)


def ghz_state(n_qubits: int, sites=None) -> StateVector:
    if n_qubits < 2:
        raise DomainError("GHZ state needs at least 2 qubits")
    v = np.zeros(2**n_qubits, dtype=np.complex128)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return StateVector(v, SystemLayout.from_dims([2] * n_qubits, sites=sites), sites)


def bell_pair(sites=None) -> StateVector:
    return ghz_state(2, sites)


def basis_vector(dims: Sequence[int], digits: Sequence[int], sites=None) -> StateVector:
    layout = SystemLayout.from_dims(dims, sites=sites)
    v = np.zeros(layout.total_dim, dtype=np.complex128)
    idx = 0
    for d, x in zip(dims, digits):
        idx = idx * d + x
    v[idx] = 1.0
    return StateVector(v, layout, sites)


def to_density(v: StateVector) -> DensityMatrix:
    a = v.amplitudes
    return DensityMatrix(np.outer(a, a.conj()), v.layout, v.sites, check=False)


def maximally_mixed(dims: Sequence[int], sites=None) -> DensityMatrix:
    layout = SystemLayout.from_dims(dims, sites=sites)
    d = layout.total_dim
    return DensityMatrix(np.eye(d) / d, layout, sites, check=False)


def rank(state, tol: float = EIG_ZERO) -> int:
    m = state.data if isinstance(state, DensityMatrix) else np.asarray(state)
    return int(np.sum(np.linalg.eigvalsh(m) > tol))


def mix(states: Iterable[DensityMatrix], weights: Iterable[float]) -> DensityMatrix:
    states = list(states)
    weights = np.asarray(list(weights), dtype=float)
    if len(states) != len(weights) or not states:
        raise ShapeError("need one weight per state")
    ref = states[0]
    for s in states[1:]:
        if s.sites != ref.sites or s.dims != ref.dims:
            raise ShapeError("cannot mix states on different layouts")
    m = sum(w * s.data for w, s in zip(weights, states))
    return DensityMatrix(m / weights.sum(), ref.layout, ref.sites, check=False)


def depolarize(state: DensityMatrix, p: float) -> DensityMatrix:
    """Global depolarizing channel ``(1-p) rho + p I/d``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"depolarizing strength must lie in [0, 1], got {p}")
    d = state.dim
    return DensityMatrix((1 - p) * state.data + p * np.eye(d) / d, state.layout, state.sites, check=False)
