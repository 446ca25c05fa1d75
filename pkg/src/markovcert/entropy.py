"""Von Neumann entropy calculus in nats.

Conditional entropies, (conditional) mutual information, the strong
subadditivity / weak monotonicity quantities, binary entropy, the
continuity correction for epsilon-close marginals, and the strengthened
concavity gap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, RegionError
from .state import (
    EIG_ZERO,
    DensityMatrix,
    Region,
    as_region,
    check_density_matrix,
    mix,
    partial_trace,
    trace_distance,
)

NEG_TOL = 1e-9


def entropy_of_spectrum(lam) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > EIG_ZERO]
    return float(-np.sum(lam * np.log(lam)))


def entropy(state) -> float:
    """``-Tr rho ln rho`` in nats; eigenvalues below 1e-12 contribute nothing."""
    if isinstance(state, DensityMatrix):
        m = state.data
    else:
        m = np.asarray(state, dtype=np.complex128)
        check_density_matrix(m)
    return entropy_of_spectrum(np.linalg.eigvalsh(m))


class _EntropyMemo:
    """Region -> entropy cache confined to one call."""

    def __init__(self, state: DensityMatrix):
        self.state = state
        self._cache: dict[Region, float] = {}

    def __call__(self, region) -> float:
        region = as_region(region)
        if not region.sites:
            return 0.0
        if region not in self._cache:
            self._cache[region] = entropy(partial_trace(self.state, region))
        return self._cache[region]

    @property
    def regions(self):
        return dict(self._cache)


def _disjoint(*regions) -> list[Region]:
    regs = [as_region(r) for r in regions]
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            if not regs[i].isdisjoint(regs[j]):
                raise RegionError(f"regions {regs[i]} and {regs[j]} overlap")
    return regs


def _conditional(S, a: Region, b: Region) -> float:
    return S(a.union(b)) - S(b)


def conditional_entropy(state: DensityMatrix, a, b) -> float:
    """``S(a|b) = S(ab) - S(b)``; an empty ``b`` gives ``S(a)``."""
    a, b = _disjoint(a, b)
    return _conditional(_EntropyMemo(state), a, b)


def mutual_information(state: DensityMatrix, a, b) -> float:
    a, b = _disjoint(a, b)
    S = _EntropyMemo(state)
    return S(a) + S(b) - S(a.union(b))


def cmi(state: DensityMatrix, a, b, c) -> float:
    """Conditional mutual information ``I(a:c|b) = S(a|b) - S(a|bc)``."""
    a, b, c = _disjoint(a, b, c)
    S = _EntropyMemo(state)
    return _conditional(S, a, b) - _conditional(S, a, b.union(c))


def weak_monotonicity(state: DensityMatrix, a, b, c) -> float:
    """``S(a|b) + S(a|c)``, nonnegative for every state."""
    a, b, c = _disjoint(a, b, c)
    S = _EntropyMemo(state)
    return _conditional(S, a, b) + _conditional(S, a, c)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1 - x) * math.log(1 - x)


def continuity_correction(epsilons: Sequence[float], dims: Sequence[int]) -> float:
    """``sum_k 4 eps_k ln d_k + 2 H(eps_k)``.

    The binary-entropy term is charged once per site.
    """
    epsilons = list(epsilons)
    dims = list(dims)
    if len(epsilons) != len(dims):
        raise DomainError(f"{len(epsilons)} epsilons for {len(dims)} dimensions")
    total = 0.0
    for eps, d in zip(epsilons, dims):
        if d < 1:
            raise DomainError(f"site dimension must be positive, got {d}")
        total += 4.0 * eps * math.log(d) + 2.0 * binary_entropy(eps)
    return total


def uniform_continuity_correction(epsilon: float, dims: Sequence[int]) -> float:
    return continuity_correction([epsilon] * len(dims), dims)


def concavity_gap(rho: DensityMatrix, sigma: DensityMatrix, c: float) -> float:
    """``S(c rho + (1-c) sigma) - c S(rho) - (1-c) S(sigma)``.

    Bounded below by ``c(1-c)/2 * |rho - sigma|_1^2``.
    """
    if not 0.0 < c < 1.0:
        raise DomainError(f"mixing weight must lie in (0, 1), got {c}")
    mixed = mix([rho, sigma], [c, 1 - c])
    return entropy(mixed) - c * entropy(rho) - (1 - c) * entropy(sigma)


def concavity_lower_bound(rho: DensityMatrix, sigma: DensityMatrix, c: float) -> float:
    return 0.5 * c * (1 - c) * trace_distance(rho, sigma) ** 2


@dataclass
class EntropyReport:
    regions: dict[Region, float] = field(default_factory=dict)
    quantities: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "regions": [
                {"sites": list(r.sites), "entropy_nats": v}
                for r, v in sorted(self.regions.items(), key=lambda kv: (len(kv[0]), kv[0].sites))
            ],
            "quantities": self.quantities,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


_NONNEGATIVE = {"cmi", "wm", "mi"}


def entropy_report(state: DensityMatrix, regions=(), quantities=()) -> EntropyReport:
    """Evaluate region entropies and derived quantities with a shared memo.

    ``quantities`` holds tuples ``(kind, a, b[, c])`` with kind one of
    ``"cond"`` (S(a|b)), ``"mi"``, ``"cmi"`` (I(a:c|b)) or ``"wm"``
    (S(a|b) + S(a|c)). Nonnegative quantities are clamped at 0 when the
    raw value lies within -1e-9; the raw value is kept alongside.
    """
    S = _EntropyMemo(state)
    for r in regions:
        S(r)
    out = []
    for q in quantities:
        kind, *args = q
        regs = _disjoint(*args)
        if kind == "cond":
            a, b = regs
            raw = _conditional(S, a, b)
        elif kind == "mi":
            a, b = regs
            raw = S(a) + S(b) - S(a.union(b))
        elif kind == "cmi":
            a, b, c = regs
            raw = _conditional(S, a, b) - _conditional(S, a, b.union(c))
        elif kind == "wm":
            a, b, c = regs
            raw = _conditional(S, a, b) + _conditional(S, a, c)
        else:
            raise DomainError(f"unknown quantity kind {kind!r}")
        entry = {"kind": kind}
        for name, r in zip("abc", regs):
            entry[name] = list(r.sites)
        value = raw
        if kind in _NONNEGATIVE and -NEG_TOL <= raw < 0:
            value = 0.0
        entry["value"] = value
        entry["raw"] = raw
        out.append(entry)
    return EntropyReport(S.regions, out)
