"""Markov entropy decomposition and locally checkable trace-distance bounds.

A :class:`ShieldPlan` fixes a site ordering and, for every site ``k``, a
shield ``M_k`` drawn from earlier sites and a forward shield ``M_k'`` drawn
from later sites. :func:`certificate` turns the local reduced density
matrices on ``k + M_k + M_k'`` into an upper bound on ``|rho - sigma|_1``
that holds for every pair of states sharing those marginals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

from .entropy import (
    NEG_TOL,
    binary_entropy,
    cmi,
    conditional_entropy,
    entropy,
    _EntropyMemo,
)
from .errors import ConsistencyError, CoverageError, DomainError, PlanError, ShapeError
from .state import DensityMatrix, Region, as_region, partial_trace, trace_distance

MARGINAL_TOL = 1e-8
SQRT8 = 2.0**1.5


@dataclass(frozen=True)
class Shield:
    site: int
    m: Region = Region()
    m_prime: Region = Region()

    def __post_init__(self):
        object.__setattr__(self, "site", int(self.site))
        object.__setattr__(self, "m", as_region(self.m))
        object.__setattr__(self, "m_prime", as_region(self.m_prime))

    @property
    def support(self) -> Region:
        return Region((self.site,)).union(self.m, self.m_prime)


@dataclass(frozen=True)
class ShieldPlan:
    """Site ordering plus per-site backward/forward shields.

    ``remainder`` lists sites a planner could not shield topologically; it
    is reported, never silently certified.
    """

    ordering: tuple[int, ...]
    shields: tuple[Shield, ...]
    remainder: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(int(k) for k in self.ordering))
        object.__setattr__(self, "shields", tuple(self.shields))
        object.__setattr__(self, "remainder", tuple(int(k) for k in self.remainder))

    @classmethod
    def build(cls, ordering, m=None, m_prime=None, remainder=()):
        """Convenience constructor from ``{site: sites}`` maps (missing means empty)."""
        m = m or {}
        m_prime = m_prime or {}
        shields = tuple(Shield(k, m.get(k, ()), m_prime.get(k, ())) for k in ordering)
        return cls(tuple(ordering), shields, tuple(remainder))

    @classmethod
    def chain(cls, n: int, forward: bool = True):
        """Line plan ``M_k = {k-1}``, ``M_k' = {k+1}`` (forward shields optional)."""
        m = {k: (k - 1,) for k in range(1, n)}
        mp = {k: (k + 1,) for k in range(n - 1)} if forward else {}
        return cls.build(range(n), m, mp)

    def shield(self, k: int) -> Shield:
        for s in self.shields:
            if s.site == k:
                return s
        return Shield(k)

    def support(self, k: int) -> Region:
        return self.shield(k).support

    @property
    def sites(self) -> Region:
        return Region(self.ordering)

    def to_dict(self) -> dict:
        out = {
            "ordering": list(self.ordering),
            "shields": [
                {"site": s.site, "m": list(s.m.sites), "m_prime": list(s.m_prime.sites)}
                for s in self.shields
            ],
        }
        if self.remainder:
            out["remainder"] = list(self.remainder)
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "ShieldPlan":
        try:
            ordering = [int(k) for k in d["ordering"]]
            shields = [Shield(s["site"], s.get("m", ()), s.get("m_prime", ())) for s in d.get("shields", [])]
        except (KeyError, TypeError) as exc:
            raise PlanError(f"malformed plan: {exc}") from exc
        have = {s.site for s in shields}
        shields += [Shield(k) for k in ordering if k not in have]
        return cls(tuple(ordering), tuple(shields), tuple(d.get("remainder", ())))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def plan_violations(plan: ShieldPlan) -> list[str]:
    """Every breach of ``M_k`` within earlier sites and ``M_k'`` within later sites."""
    out = []
    order = list(plan.ordering)
    if len(set(order)) != len(order):
        out.append(f"ordering repeats sites: {order}")
        return out
    rank = {k: i for i, k in enumerate(order)}
    seen = set()
    for s in plan.shields:
        if s.site not in rank:
            out.append(f"shield for site {s.site} which is not in the ordering")
            continue
        if s.site in seen:
            out.append(f"site {s.site} has more than one shield entry")
        seen.add(s.site)
        i = rank[s.site]
        if s.site in s.m or s.site in s.m_prime:
            out.append(f"site {s.site}: shield contains the site itself")
        bad_m = [x for x in s.m if x not in rank or rank[x] >= i]
        if bad_m:
            out.append(f"site {s.site}: M_k contains {bad_m} not preceding it")
        bad_mp = [x for x in s.m_prime if x not in rank or rank[x] <= i]
        if bad_mp:
            out.append(f"site {s.site}: M_k' contains {bad_mp} not following it")
    return out


def _require_valid(plan: ShieldPlan, sites: Region | None = None) -> None:
    bad = plan_violations(plan)
    if sites is not None and set(plan.ordering) != set(sites.sites):
        bad.append(f"plan covers sites {sorted(plan.ordering)}, state has {list(sites.sites)}")
    if bad:
        raise PlanError("invalid shield plan: " + "; ".join(bad), bad)


def markov_entropy(state: DensityMatrix, plan: ShieldPlan) -> float:
    """``S_M = sum_k S(k | M_k)``."""
    _require_valid(plan, state.sites)
    S = _EntropyMemo(state)
    total = 0.0
    for k in plan.ordering:
        m = plan.shield(k).m
        total += S(m.union((k,))) - S(m)
    return total


def med_gap(state: DensityMatrix, plan: ShieldPlan) -> float:
    """Markov entropy minus the global entropy."""
    return markov_entropy(state, plan) - entropy(state)


def local_rdms(state: DensityMatrix, plan: ShieldPlan) -> dict[int, DensityMatrix]:
    """Reduced states on ``k + M_k + M_k'`` for every site, keyed by ``k``."""
    _require_valid(plan, state.sites)
    return {k: partial_trace(state, plan.support(k)) for k in plan.ordering}


class SiteTerm(NamedTuple):
    site: int
    backward: float  # S(k | M_k)
    forward: float  # S(k | M_k')

    @property
    def value(self) -> float:
        return self.backward + self.forward


def _site_term(rdm: DensityMatrix, shield: Shield) -> SiteTerm:
    k = Region((shield.site,))
    return SiteTerm(
        shield.site,
        conditional_entropy(rdm, k, shield.m),
        conditional_entropy(rdm, k, shield.m_prime),
    )


def _lookup_rdm(rdms: Mapping[int, DensityMatrix], plan: ShieldPlan, k: int) -> DensityMatrix:
    if k not in rdms:
        raise CoverageError(f"no reduced density matrix supplied for site {k}")
    rdm = rdms[k]
    need = plan.support(k)
    if not need.issubset(rdm.sites):
        raise PlanError(
            f"RDM for site {k} covers {list(rdm.sites)}, plan needs {list(need.sites)}"
        )
    return partial_trace(rdm, need)


def site_terms(rdms: Mapping[int, DensityMatrix], plan: ShieldPlan) -> list[SiteTerm]:
    """Per-site ``s_k`` from local reduced states only."""
    _require_valid(plan)
    return [_site_term(_lookup_rdm(rdms, plan, k), plan.shield(k)) for k in plan.ordering]


def assign_rdms(rdms, plan: ShieldPlan, what: str = "", need_forward: bool = True) -> dict[int, DensityMatrix]:
    """Match a bundle of reduced states to plan sites.

    ``rdms`` may be keyed by site, keyed by region, or a plain list. Each
    site gets the smallest state covering ``k + M_k + M_k'`` (or only
    ``k + M_k`` when ``need_forward`` is false), reduced to that support.
    """
    pool = list(rdms.values()) if isinstance(rdms, Mapping) else list(rdms)
    keyed = rdms if isinstance(rdms, Mapping) else {}
    out = {}
    for k in plan.ordering:
        full = plan.support(k)
        need = full if need_forward else plan.shield(k).m.union((k,))
        cand = keyed.get(k) if k in keyed else None
        if cand is None or not need.issubset(cand.sites):
            covering = [r for r in pool if need.issubset(r.sites)]
            if not covering:
                label = f"{what} " if what else ""
                raise CoverageError(f"no {label}RDM covers site {k} support {list(need.sites)}")
            wide = [r for r in covering if full.issubset(r.sites)]
            cand = min(wide or covering, key=lambda r: r.dim)
        out[k] = partial_trace(cand, full if full.issubset(cand.sites) else need)
    return out


def med_gap_upper_bound(state: DensityMatrix, plan: ShieldPlan) -> float:
    """``sum_k S(k|M_k) + S(k|M_k')``, evaluated on the local marginals."""
    return sum(t.value for t in site_terms(local_rdms(state, plan), plan))


@dataclass
class CertificateReport:
    terms: list[SiteTerm]
    corrections: dict[int, float]
    epsilons: dict[int, float]
    dims: dict[int, int]
    term_sum: float
    correction_sum: float
    radicand: float
    clamped: bool
    bound: float
    negative_terms: list[int] = field(default_factory=list)

    @property
    def capped_bound(self) -> float:
        return min(self.bound, 2.0)

    @property
    def nontrivial(self) -> bool:
        return self.bound < 2.0

    def to_dict(self) -> dict:
        return {
            "terms": [
                {
                    "site": t.site,
                    "s_k": t.value,
                    "s_k_backward": t.backward,
                    "s_k_forward": t.forward,
                    "epsilon": self.epsilons[t.site],
                    "dim": self.dims[t.site],
                    "correction": self.corrections[t.site],
                }
                for t in self.terms
            ],
            "term_sum": self.term_sum,
            "correction_sum": self.correction_sum,
            "radicand": self.radicand,
            "radicand_clamped": self.clamped,
            "negative_terms": self.negative_terms,
            "bound": self.bound,
            "bound_capped": self.capped_bound,
            "nontrivial": self.nontrivial,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _per_site(value, plan: ShieldPlan, name: str, default) -> dict:
    if value is None:
        return {k: default(k) for k in plan.ordering}
    if isinstance(value, Mapping):
        missing = [k for k in plan.ordering if k not in value]
        if missing:
            raise CoverageError(f"{name} missing for sites {missing}")
        return {k: value[k] for k in plan.ordering}
    if isinstance(value, (int, float)):
        return {k: value for k in plan.ordering}
    value = list(value)
    if len(value) != len(plan.ordering):
        raise ShapeError(f"{len(value)} {name} for {len(plan.ordering)} sites")
    return dict(zip(plan.ordering, value))


def certificate(
    local_rdms: Mapping[int, DensityMatrix],
    plan: ShieldPlan,
    epsilons=None,
    dims=None,
) -> CertificateReport:
    """Trace-distance bound from local reduced states.

    ``bound = 2^(3/2) * sqrt(max(sum_k s_k + correction, 0))`` where the
    correction is ``sum_k 4 eps_k ln d_k + 2 H(eps_k)``. ``epsilons`` and
    ``dims`` may be scalars, per-site sequences (plan order) or maps; the
    site dimensions default to those found in the RDMs.
    """
    terms = site_terms(local_rdms, plan)

    def site_dim(k):
        rdm = local_rdms[k]
        return rdm.dims[list(rdm.sites).index(k)]

    eps = _per_site(epsilons, plan, "epsilons", lambda k: 0.0)
    dk = _per_site(dims, plan, "dims", site_dim)
    corrections = {}
    for k in plan.ordering:
        e = float(eps[k])
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"epsilon for site {k} must lie in [0, 1], got {e}")
        corrections[k] = 4.0 * e * math.log(dk[k]) + 2.0 * binary_entropy(e)
    term_sum = sum(t.value for t in terms)
    corr_sum = sum(corrections.values())
    radicand = term_sum + corr_sum
    return CertificateReport(
        terms=terms,
        corrections=corrections,
        epsilons={k: float(v) for k, v in eps.items()},
        dims={k: int(v) for k, v in dk.items()},
        term_sum=term_sum,
        correction_sum=corr_sum,
        radicand=radicand,
        clamped=radicand < 0,
        bound=SQRT8 * math.sqrt(max(radicand, 0.0)),
        negative_terms=[t.site for t in terms if t.value < 0],
    )


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _marginal_distances(rho, sigma, regions) -> dict:
    return {
        tuple(r.sites): trace_distance(partial_trace(rho, r), partial_trace(sigma, r)) for r in regions
    }


def tripartite_distance_bound(rho: DensityMatrix, sigma: DensityMatrix, a, b, c, tol: float = MARGINAL_TOL) -> BoundCheck:
    """``|rho - sigma|_1^2 / 4 <= I(A:C|B)_rho + I(A:C|B)_sigma`` for equal AB and BC marginals."""
    a, b, c = (as_region(x) for x in (a, b, c))
    abc = a.union(b, c)
    rho, sigma = partial_trace(rho, abc), partial_trace(sigma, abc)
    dist = _marginal_distances(rho, sigma, [a.union(b), b.union(c)])
    bad = {r: d for r, d in dist.items() if d > tol}
    if bad:
        raise ConsistencyError(f"marginals differ beyond {tol:g}: {bad}", bad)
    lhs = 0.25 * trace_distance(rho, sigma) ** 2
    rhs = cmi(rho, a, b, c) + cmi(sigma, a, b, c)
    return BoundCheck(lhs, rhs, lhs <= rhs + NEG_TOL)


def shielded_distance_bound(rho: DensityMatrix, sigma: DensityMatrix, plan: ShieldPlan, tol: float = MARGINAL_TOL) -> BoundCheck:
    """``|rho - sigma|_1^2 / 4 <= gap(rho) + gap(sigma)`` for equal ``k + M_k`` marginals."""
    _require_valid(plan, rho.sites)
    regions = [plan.shield(k).m.union((k,)) for k in plan.ordering]
    dist = _marginal_distances(rho, sigma, regions)
    bad = {r: d for r, d in dist.items() if d > tol}
    if bad:
        raise ConsistencyError(f"per-site marginals differ beyond {tol:g}: {bad}", bad)
    lhs = 0.25 * trace_distance(rho, sigma) ** 2
    rhs = med_gap(rho, plan) + med_gap(sigma, plan)
    return BoundCheck(lhs, rhs, lhs <= rhs + NEG_TOL)


def chain_rule_check(state: DensityMatrix, ordering: Sequence[int]) -> float:
    """``|S(rho) - sum_k S(k | earlier sites)|``; zero up to rounding."""
    ordering = list(ordering)
    if sorted(ordering) != list(state.sites):
        raise PlanError(f"ordering {ordering} is not a permutation of {list(state.sites)}")
    S = _EntropyMemo(state)
    total = 0.0
    prefix = Region()
    for k in ordering:
        total += S(prefix.union((k,))) - S(prefix)
        prefix = prefix.union((k,))
    return abs(entropy(state) - total)
