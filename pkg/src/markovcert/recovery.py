"""Petz recovery and sequential reconstruction from overlapping marginals."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConsistencyError, CoverageError, DegenerateInputError, RecoveryError, RegionError, ValidationError
from .markov import MARGINAL_TOL, ShieldPlan, _require_valid, certificate
from .state import (
    TOL_PSD,
    DensityMatrix,
    Region,
    SystemLayout,
    as_region,
    embed_operator,
    partial_trace,
    project_to_density,
    trace_distance,
    trace_norm,
)

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
BORDERLINE_TOL = 1e-12
MAX_REPAIR = 1e-4
OVERLAP_TOL = 1e-6


def _psd_eigh(m, tol=TOL_PSD):
    m = m.data if isinstance(m, DensityMatrix) else np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    h = 0.5 * (m + m.conj().T)
    if np.max(np.abs(m - h), initial=0.0) > 1e-9:
        raise ValidationError("matrix is not Hermitian")
    lam, vec = np.linalg.eigh(h)
    if lam.size and lam[0] < -tol:
        raise ValidationError(f"matrix not PSD (minimum eigenvalue {lam[0]:.3e})")
    return lam, vec


def matrix_sqrt(m) -> np.ndarray:
    lam, vec = _psd_eigh(m)
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def pinv_sqrt(m, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``m^(-1/2)`` on the support of ``m``, zero elsewhere."""
    lam, vec = _psd_eigh(m)
    border = (lam > BORDERLINE_TOL) & (lam <= rank_tol)
    if np.any(border):
        log.warning("eigenvalues %s between %.0e and %.0e treated as zero", lam[border], BORDERLINE_TOL, rank_tol)
    inv = np.zeros_like(lam)
    keep = lam > rank_tol
    inv[keep] = lam[keep] ** -0.5
    return (vec * inv) @ vec.conj().T


def support_projector(m, rank_tol: float = RANK_TOL) -> np.ndarray:
    lam, vec = _psd_eigh(m)
    v = vec[:, lam > rank_tol]
    return v @ v.conj().T


def _joint_layout(*states: DensityMatrix) -> tuple[Region, SystemLayout]:
    info = {}
    for st in states:
        for s, lab, d in zip(st.sites, st.layout.labels, st.dims):
            if s in info and info[s][1] != d:
                raise ValidationError(f"site {s} has dimension {info[s][1]} and {d}")
            info.setdefault(s, (lab, d))
    sites = Region(tuple(info))
    return sites, SystemLayout(tuple(info[s][0] for s in sites), tuple(info[s][1] for s in sites))


def _petz(rho_ab: DensityMatrix, rho_bc: DensityMatrix, a: Region, b: Region, c: Region, tol=MARGINAL_TOL):
    """Petz composition plus the trace-norm size of the PSD repair."""
    for x, y in ((a, b), (a, c), (b, c)):
        if not x.isdisjoint(y):
            raise RegionError(f"regions {x} and {y} overlap")
    if rho_ab.sites != a.union(b):
        raise RegionError(f"rho_ab lives on {list(rho_ab.sites)}, expected {list(a.union(b).sites)}")
    if rho_bc.sites != b.union(c):
        raise RegionError(f"rho_bc lives on {list(rho_bc.sites)}, expected {list(b.union(c).sites)}")
    rho_b = partial_trace(rho_ab, b)
    d_b = trace_distance(rho_b, partial_trace(rho_bc, b))
    if d_b > tol:
        raise ConsistencyError(f"B marginals differ by {d_b:.3e} (> {tol:g})", {tuple(b.sites): d_b})
    inv = pinv_sqrt(rho_b.data)
    if not np.any(inv):
        raise DegenerateInputError("rho_B has no support above the rank cutoff")
    full, layout = _joint_layout(rho_ab, rho_bc)
    dims = layout.dims
    ab_dims = rho_ab.dims
    k_ab = matrix_sqrt(rho_ab.data) @ embed_operator(inv, b, rho_ab.sites, ab_dims)
    k_full = embed_operator(k_ab, rho_ab.sites, full, dims)
    raw = k_full @ embed_operator(rho_bc.data, rho_bc.sites, full, dims) @ k_full.conj().T
    raw = 0.5 * (raw + raw.conj().T)
    fixed = project_to_density(raw, layout, full)
    repair = trace_norm(raw - fixed.data)
    log.debug("petz repair magnitude %.3e", repair)
    return fixed, repair


def petz_recover(rho_ab: DensityMatrix, rho_bc: DensityMatrix, a, b, c) -> DensityMatrix:
    """``rho_AB^(1/2) rho_B^(-1/2) rho_BC rho_B^(-1/2) rho_AB^(1/2)`` on A B C.

    ``rho_B`` is taken from ``rho_ab``; the result is passed through
    :func:`project_to_density` and the repair size is logged.
    """
    out, repair = _petz(rho_ab, rho_bc, as_region(a), as_region(b), as_region(c))
    log.info("petz_recover repair magnitude %.3e", repair)
    return out


def _extend(prefix: DensityMatrix, local_rdm: DensityMatrix, k: int, m_k):
    k_reg = Region((k,))
    m_k = as_region(m_k)
    if k in prefix.sites:
        raise RegionError(f"site {k} already in prefix {list(prefix.sites)}")
    if not m_k.issubset(prefix.sites):
        raise RegionError(f"shield {m_k} not inside prefix {list(prefix.sites)}")
    local = partial_trace(local_rdm, m_k.union(k_reg))
    a = Region(tuple(prefix.sites)).difference(m_k)
    return _petz(prefix, local, a, m_k, k_reg)


def petz_extend(prefix_state: DensityMatrix, local_rdm: DensityMatrix, k: int, m_k) -> DensityMatrix:
    """One recursion step: grow ``prefix_state`` by site ``k`` shielded by ``m_k``."""
    out, repair = _extend(prefix_state, local_rdm, k, m_k)
    log.info("petz_extend site %d repair magnitude %.3e", k, repair)
    return out


@dataclass
class ReconstructionStep:
    site: int
    region: Region
    s_k: float | None
    repair: float
    reference_distance: float | None = None

    def to_dict(self):
        return {
            "site": self.site,
            "region": list(self.region.sites),
            "s_k": self.s_k,
            "repair": self.repair,
            "reference_distance": self.reference_distance,
        }


@dataclass
class ReconstructionTrace:
    steps: list[ReconstructionStep]
    state: DensityMatrix
    final_distance: float | None = None
    certificate_bound: float | None = None
    within_bound: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "steps": [s.to_dict() for s in self.steps],
            "final_sites": list(self.state.sites),
            "final_distance": self.final_distance,
            "certificate_bound": self.certificate_bound,
            "within_bound": self.within_bound,
            "notes": self.notes,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _check_overlaps(rdms: Mapping[int, DensityMatrix], tol: float) -> None:
    keys = list(rdms)
    bad = {}
    for i, ki in enumerate(keys):
        for kj in keys[i + 1:]:
            common = rdms[ki].sites.intersection(rdms[kj].sites)
            if not common.sites:
                continue
            d = trace_distance(partial_trace(rdms[ki], common), partial_trace(rdms[kj], common))
            if d > tol:
                bad[(ki, kj)] = d
    if bad:
        raise ConsistencyError(f"overlapping RDMs disagree beyond {tol:g}: {bad}", bad)


def reconstruct(
    rdms: Mapping[int, DensityMatrix],
    plan: ShieldPlan,
    reference: DensityMatrix | None = None,
    max_repair: float = MAX_REPAIR,
) -> ReconstructionTrace:
    """Fold :func:`petz_extend` along the plan ordering.

    ``rdms[k]`` must cover ``k + M_k``; when every entry also covers
    ``M_k'`` the certificate bound from the same marginals is reported and,
    given a reference state, compared against the final distance.
    """
    _require_valid(plan)
    missing = [k for k in plan.ordering if k not in rdms]
    if missing:
        raise CoverageError(f"no reduced density matrix for sites {missing}")
    for k in plan.ordering:
        need = plan.shield(k).m.union((k,))
        if not need.issubset(rdms[k].sites):
            raise CoverageError(f"RDM for site {k} does not cover {list(need.sites)}")
    _check_overlaps(rdms, OVERLAP_TOL)

    full_cover = all(plan.support(k).issubset(rdms[k].sites) for k in plan.ordering)
    cert = certificate(rdms, plan) if full_cover else None
    s_vals = {t.site: t.value for t in cert.terms} if cert else {}

    def ref_dist(st):
        if reference is None:
            return None
        return trace_distance(st, partial_trace(reference, st.sites))

    first = plan.ordering[0]
    state = partial_trace(rdms[first], (first,))
    steps = [ReconstructionStep(first, state.sites, s_vals.get(first), 0.0, ref_dist(state))]
    for i, k in enumerate(plan.ordering[1:], start=1):
        try:
            state, repair = _extend(state, rdms[k], k, plan.shield(k).m)
        except ConsistencyError as exc:
            raise ConsistencyError(f"step {i} (site {k}): {exc}", exc.distances) from exc
        if repair > max_repair:
            raise RecoveryError(
                f"step {i} (site {k}): PSD repair {repair:.3e} exceeds {max_repair:g}; "
                "marginals are far from a Markov chain",
                {(k,): repair},
            )
        steps.append(ReconstructionStep(k, state.sites, s_vals.get(k), repair, ref_dist(state)))

    trace = ReconstructionTrace(steps, state)
    trace.final_distance = steps[-1].reference_distance
    if cert is not None:
        trace.certificate_bound = cert.bound
        if trace.final_distance is not None:
            trace.within_bound = trace.final_distance <= cert.bound + 1e-9
    else:
        trace.notes.append("RDMs do not cover forward shields; certificate not evaluated")
    return trace
