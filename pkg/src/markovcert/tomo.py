"""Simulated local tomography, verification verdicts and a consistent-state search.

Each region is estimated from Pauli-basis measurements: every qubit is
measured in X, Y or Z (``3**n`` settings, shots split evenly), the Pauli
expectations are inverted linearly and the estimate is projected back to
a density matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CoverageError, DomainError, SchemeError
from .markov import CertificateReport, ShieldPlan, assign_rdms, certificate
from .state import (
    DensityMatrix,
    Region,
    SystemLayout,
    as_region,
    embed_operator,
    nearest_density,
    partial_trace,
    project_to_density,
    trace_distance,
)

SCHEMES = ("pauli",)
MAX_SEARCH_DIM = 2**10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
# rows are the eigenvectors (+1 then -1) of each measured Pauli
_BASIS_CHANGE = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
    "Z": np.eye(2, dtype=complex),
}


@dataclass(frozen=True)
class MeasurementPlan:
    regions: tuple[Region, ...]
    shots: int
    scheme: str = "pauli"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(as_region(r) for r in self.regions))
        if self.shots < 1:
            raise DomainError(f"shots must be positive, got {self.shots}")
        if self.scheme not in SCHEMES:
            raise SchemeError(f"unknown measurement scheme {self.scheme!r}")

    @classmethod
    def for_plan(cls, plan: ShieldPlan, shots: int, seed: int = 0, scheme: str = "pauli"):
        """One region per site: the certificate support ``k + M_k + M_k'``."""
        return cls(tuple(plan.support(k) for k in plan.ordering), shots, scheme, seed)

    def to_dict(self):
        return {
            "regions": [list(r.sites) for r in self.regions],
            "shots": self.shots,
            "scheme": self.scheme,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(tuple(d["regions"]), int(d["shots"]), d.get("scheme", "pauli"), int(d.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed measurement plan: {exc}") from exc


def region_rng(seed: int, region) -> np.random.Generator:
    """Per-region stream derived from the global seed and the region's sites."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(as_region(region).sites)))


def _settings(n: int):
    return list(itertools.product("XYZ", repeat=n))


def _kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def setting_probabilities(rdm: np.ndarray, setting: Sequence[str]) -> np.ndarray:
    """Outcome distribution (row-major over qubits, bit 0 = eigenvalue +1)."""
    u = _kron_all([_BASIS_CHANGE[s] for s in setting])
    p = np.real(np.einsum("ij,jk,ik->i", u, rdm, u.conj()))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _parity_signs(n: int) -> np.ndarray:
    # signs[o, i] = (-1)^(bit i of outcome o)
    o = np.arange(2**n)
    bits = (o[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1 - 2 * bits


def linear_inversion(counts: Mapping[tuple, np.ndarray], n: int) -> np.ndarray:
    """Pauli-expansion estimate from per-setting outcome counts (not yet projected)."""
    signs = _parity_signs(n)
    est = np.zeros((2**n, 2**n), dtype=complex)
    for paulis in itertools.product("IXYZ", repeat=n):
        active = [i for i, p in enumerate(paulis) if p != "I"]
        num = 0.0
        den = 0.0
        for setting, c in counts.items():
            if all(setting[i] == paulis[i] for i in active):
                sgn = np.prod(signs[:, active], axis=1) if active else np.ones(2**n)
                num += float(np.dot(c, sgn))
                den += float(np.sum(c))
        if den == 0:
            raise SchemeError(f"no shots informative for Pauli {''.join(paulis)}")
        est += (num / den) * _kron_all([_PAULI[p] for p in paulis])
    return est / 2**n


def simulate_counts(rdm: np.ndarray, n: int, shots: int | None, rng) -> dict[tuple, np.ndarray]:
    settings = _settings(n)
    out = {}
    if shots is None:
        for s in settings:
            out[s] = setting_probabilities(rdm, s)
        return out
    if shots < len(settings):
        raise SchemeError(f"{shots} shots cannot cover {len(settings)} Pauli settings")
    base, extra = divmod(shots, len(settings))
    for i, s in enumerate(settings):
        n_s = base + (1 if i < extra else 0)
        out[s] = rng.multinomial(n_s, setting_probabilities(rdm, s)).astype(float)
    return out


def simulate_region_tomography(
    true_state: DensityMatrix, region, shots: int | None, scheme: str = "pauli", seed: int = 0
) -> DensityMatrix:
    """Shot-noise estimate of the reduced state on ``region``.

    ``shots=None`` injects the exact outcome frequencies.
    """
    if scheme not in SCHEMES:
        raise SchemeError(f"unknown measurement scheme {scheme!r}")
    region = as_region(region)
    rdm = partial_trace(true_state, region)
    if any(d != 2 for d in rdm.dims):
        raise SchemeError(f"Pauli scheme needs qubit sites, region dims are {rdm.dims}")
    n = len(region)
    counts = simulate_counts(rdm.data, n, shots, region_rng(seed, region))
    return project_to_density(linear_inversion(counts, n), rdm.layout, rdm.sites)


def simulate(true_state: DensityMatrix, mplan: MeasurementPlan) -> dict[Region, DensityMatrix]:
    return {
        r: simulate_region_tomography(true_state, r, mplan.shots, mplan.scheme, mplan.seed)
        for r in mplan.regions
    }


def epsilon_against_target(estimated: DensityMatrix, target_rdm: DensityMatrix) -> float:
    return trace_distance(estimated, target_rdm)


@dataclass
class VerificationVerdict:
    epsilons: dict[int, float]
    certificate: CertificateReport | None
    certified: bool
    reason: str = ""

    @property
    def bound(self) -> float | None:
        return None if self.certificate is None else self.certificate.bound

    @property
    def verdict(self) -> str:
        if self.certified:
            return f"certified-close({self.certificate.capped_bound:.6g})"
        return f"not-certified({self.reason})"

    def to_dict(self):
        return {
            "epsilons": [{"site": k, "epsilon": v} for k, v in self.epsilons.items()],
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "bound": self.bound,
            "certified": self.certified,
            "verdict": self.verdict,
            "reason": self.reason,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def verify(measured_rdms, target_state_rdms, plan: ShieldPlan, dims=None) -> VerificationVerdict:
    """Certificate terms from the target's exact marginals, corrections from measured epsilons.

    ``target_state_rdms`` may also be the full target DensityMatrix.
    """
    if isinstance(target_state_rdms, DensityMatrix):
        target_state_rdms = {k: partial_trace(target_state_rdms, plan.support(k)) for k in plan.ordering}
    measured = assign_rdms(measured_rdms, plan, "measured")
    target = assign_rdms(target_state_rdms, plan, "target")
    eps = {k: epsilon_against_target(measured[k], target[k]) for k in plan.ordering}
    if plan.remainder:
        return VerificationVerdict(eps, None, False, f"planner remainder {list(plan.remainder)} not shielded")
    too_far = {k: e for k, e in eps.items() if e > 1.0}
    if too_far:
        return VerificationVerdict(eps, None, False, f"epsilon above 1 at sites {sorted(too_far)}")
    report = certificate(target, plan, eps, dims)
    if report.bound >= 2.0:
        return VerificationVerdict(eps, report, False, f"bound {report.bound:.6g} >= 2")
    return VerificationVerdict(eps, report, True)


@dataclass
class ConsistencyResult:
    converged: bool
    state: DensityMatrix
    residuals: dict[tuple, float]
    iterations: int
    history: list[float] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _residuals(x: DensityMatrix, rdms) -> dict[tuple, float]:
    return {tuple(r.sites): trace_distance(partial_trace(x, r.sites), r) for r in rdms}


def find_consistent_state(
    rdms: Sequence[DensityMatrix] | Mapping,
    layout: SystemLayout,
    max_iters: int = 2000,
    tol: float = 1e-6,
    sites=None,
) -> ConsistencyResult:
    """Heuristic alternating-projection search for a global state with given marginals.

    Each sweep applies, region by region, the affine correction
    ``X += (tau_R - Tr_{not R} X) (x) I / d_{not R}`` followed by the
    Frobenius projection onto density matrices (:func:`nearest_density`).
    Deciding consistency is hard in general, so failure is reported as data
    (best iterate and residuals), not raised.
    """
    if isinstance(rdms, Mapping):
        rdms = list(rdms.values())
    if not isinstance(layout, SystemLayout):
        layout = SystemLayout.from_dims(layout, sites=sites)
    if layout.total_dim > MAX_SEARCH_DIM:
        raise DomainError(f"consistent-state search is capped at dimension {MAX_SEARCH_DIM}")
    full = Region(tuple(range(layout.n_sites))) if sites is None else as_region(sites)
    for r in rdms:
        if not r.sites.issubset(full):
            raise CoverageError(f"RDM on {list(r.sites)} outside layout sites {list(full.sites)}")
    d = layout.total_dim
    x = DensityMatrix(np.eye(d) / d, layout, full, check=False)
    best, best_res = x, _residuals(x, rdms)
    history = [max(best_res.values(), default=0.0)]
    it = 0
    for it in range(1, max_iters + 1):
        for r in rdms:
            rest_dim = d // r.dim
            delta = r.data - partial_trace(x, r.sites).data
            m = x.data + embed_operator(delta, r.sites, full, layout.dims) / rest_dim
            x = nearest_density(m, layout, full)
        res = _residuals(x, rdms)
        worst = max(res.values(), default=0.0)
        history.append(worst)
        if worst < max(best_res.values(), default=0.0):
            best, best_res = x, res
        if worst <= tol:
            return ConsistencyResult(True, x, res, it, history)
    return ConsistencyResult(False, best, best_res, it, history)
