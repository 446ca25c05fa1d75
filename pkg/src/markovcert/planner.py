"""Square-lattice geometry, the perimeter-law entropy model and shield planning.

Cells are indexed row-major, ``index = y * width + x``. On open grids the
outer edge of the lattice is not part of any region's boundary: only edges
between a region cell and a complement cell count.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import DomainError, GeometryError, PlanError, RegionError
from .markov import SQRT8, Shield, ShieldPlan, plan_violations

_EDGE_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_KING_STEPS = tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy)


@dataclass(frozen=True)
class GridLayout:
    width: int
    height: int
    periodic: bool = False

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def index(self, x: int, y: int) -> int:
        return y * self.width + x

    def coords(self, i: int) -> tuple[int, int]:
        return i % self.width, i // self.width

    def step(self, i: int, dx: int, dy: int) -> int | None:
        x, y = self.coords(i)
        x, y = x + dx, y + dy
        if self.periodic:
            return self.index(x % self.width, y % self.height)
        if 0 <= x < self.width and 0 <= y < self.height:
            return self.index(x, y)
        return None

    def neighbours(self, i: int, steps=_EDGE_STEPS) -> list[int]:
        out = []
        for dx, dy in steps:
            j = self.step(i, dx, dy)
            if j is not None and j != i and j not in out:
                out.append(j)
        return out

    def ball(self, i: int, radius: int) -> list[int]:
        """Chebyshev ball of ``radius`` around ``i``, excluding ``i``."""
        out = set()
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                j = self.step(i, dx, dy)
                if j is not None:
                    out.add(j)
        out.discard(i)
        return sorted(out)

    def to_dict(self):
        return {"width": self.width, "height": self.height, "periodic": self.periodic}


@dataclass(frozen=True)
class EntropyModel:
    """``S(A) = alpha * perimeter - gamma * boundary components`` with a slack per region."""

    alpha: float
    gamma: float
    slack: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "gamma", "slack"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class GridRegion:
    cells: frozenset[int]

    def __init__(self, cells: Iterable[int]):
        object.__setattr__(self, "cells", frozenset(int(c) for c in cells))

    def __iter__(self):
        return iter(sorted(self.cells))

    def __len__(self):
        return len(self.cells)

    def metrics(self, grid: GridLayout) -> "BoundaryMetrics":
        return boundary_metrics(self, grid)


def _cells(region) -> frozenset[int]:
    return region.cells if isinstance(region, GridRegion) else frozenset(int(c) for c in region)


class BoundaryMetrics(NamedTuple):
    length: int
    components: int
    holes: int


def _flood(cells: frozenset[int], grid: GridLayout, steps) -> list[frozenset[int]]:
    left = set(cells)
    comps = []
    while left:
        seed = left.pop()
        comp = {seed}
        queue = deque([seed])
        while queue:
            c = queue.popleft()
            for j in grid.neighbours(c, steps):
                if j in left:
                    left.remove(j)
                    comp.add(j)
                    queue.append(j)
        comps.append(frozenset(comp))
    return comps


def _on_border(i: int, grid: GridLayout) -> bool:
    x, y = grid.coords(i)
    return x in (0, grid.width - 1) or y in (0, grid.height - 1)


def _boundary_segments(cells: frozenset[int], grid: GridLayout) -> set[tuple]:
    """Unit edges between a region cell and a complement cell.

    ``("v", vx, y)`` is the vertical edge on lattice line ``vx`` next to row
    ``y``; ``("h", x, vy)`` the horizontal edge on line ``vy`` below column ``x``.
    """
    w, h = grid.width, grid.height
    segs = set()
    for c in cells:
        x, y = grid.coords(c)
        for dx, dy in _EDGE_STEPS:
            j = grid.step(c, dx, dy)
            if j is None or j in cells:
                continue
            if dx:
                segs.add(("v", (x + max(dx, 0)) % w, y))
            else:
                segs.add(("h", x, (y + max(dy, 0)) % h))
    return segs


def _count_curves(cells: frozenset[int], grid: GridLayout, segs: set[tuple]) -> int:
    """Connected boundary curves, joining segments that meet at a lattice vertex.

    Where four segments meet (diagonal region cells) each region cell keeps
    its own corner, consistent with edge-connected regions.
    """
    parent = {s: s for s in segs}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    def union(a, b):
        if a in parent and b in parent:
            parent[find(a)] = find(b)

    w, h = grid.width, grid.height
    if grid.periodic:
        vertices = ((vx, vy) for vx in range(w) for vy in range(h))
    else:
        vertices = ((vx, vy) for vx in range(1, w) for vy in range(1, h))
    for vx, vy in vertices:
        top = ("v", vx, (vy - 1) % h)
        bottom = ("v", vx, vy % h)
        left = ("h", (vx - 1) % w, vy)
        right = ("h", vx % w, vy)
        present = [s for s in (top, bottom, left, right) if s in parent]
        if len(present) == 2:
            union(*present)
        elif len(present) == 4:
            tl = grid.index((vx - 1) % w, (vy - 1) % h) in cells
            if tl:
                union(top, left)
                union(bottom, right)
            else:
                union(top, right)
                union(bottom, left)
    return len({find(s) for s in parent})


def boundary_metrics(region, grid: GridLayout) -> BoundaryMetrics:
    """Perimeter, number of boundary curves and number of holes.

    Curves are traced along the boundary edges; on open grids a curve may
    end at the lattice edge. Complement components use corner connectivity,
    and a hole is one cut off from the lattice border (on a torus: every
    complement component beyond the first).
    """
    cells = _cells(region)
    if not cells:
        raise DomainError("empty region has no boundary")
    bad = [c for c in cells if not 0 <= c < grid.n_sites]
    if bad:
        raise RegionError(f"cells {sorted(bad)} outside the {grid.width}x{grid.height} grid")
    segs = _boundary_segments(cells, grid)
    complement = frozenset(range(grid.n_sites)) - cells
    comp_out = _flood(complement, grid, _KING_STEPS)
    if grid.periodic:
        holes = max(len(comp_out) - 1, 0)
    else:
        holes = sum(1 for comp in comp_out if not any(_on_border(c, grid) for c in comp))
    return BoundaryMetrics(len(segs), _count_curves(cells, grid, segs), holes)


def model_entropy(region, model: EntropyModel, grid: GridLayout) -> float:
    m = boundary_metrics(region, grid)
    return model.alpha * m.length - model.gamma * m.components


class ModelValue(NamedTuple):
    value: float
    slack_width: float


def _cond_delta(k: int, shield: frozenset[int], grid) -> tuple[int, int]:
    """Integer (perimeter, components) change of conditioning ``k`` on ``shield``."""
    single = boundary_metrics({k}, grid)
    if not shield:
        return single.length, single.components
    joint = boundary_metrics(shield | {k}, grid)
    alone = boundary_metrics(shield, grid)
    return joint.length - alone.length, joint.components - alone.components


def model_shield_score(k: int, m, m_prime, model: EntropyModel, grid: GridLayout) -> ModelValue:
    """Model value of ``S(k|M_k) + S(k|M_k')``.

    Perimeter and component counts are combined as integers first, so
    topologically balanced shields score exactly zero.
    """
    m, mp = _cells(m), _cells(m_prime)
    if k in m or k in mp:
        raise RegionError(f"shield contains site {k}")
    if m & mp:
        raise RegionError(f"shields overlap on {sorted(m & mp)}")
    dl1, dc1 = _cond_delta(k, m, grid)
    dl2, dc2 = _cond_delta(k, mp, grid)
    return ModelValue(model.alpha * (dl1 + dl2) - model.gamma * (dc1 + dc2), 4 * model.slack)


def _check_radius(grid: GridLayout, radius: int) -> None:
    if radius < 1:
        raise GeometryError(f"neighbourhood radius must be positive, got {radius}")
    span = 2 * radius + 1
    long_axes = [n for n in (grid.width, grid.height) if n > 1]
    if not long_axes or any(n < span for n in long_axes):
        raise GeometryError(
            f"radius {radius} needs every non-trivial grid axis >= {span}, "
            f"got {grid.width}x{grid.height}"
        )


def sweep_order(grid: GridLayout, order: str = "row") -> list[int]:
    """Row-major sweep, or ``"snake"`` to reverse every other row."""
    if order not in ("row", "snake"):
        raise DomainError(f"unknown sweep order {order!r}")
    out = []
    for y in range(grid.height):
        xs = range(grid.width)
        if order == "snake" and y % 2:
            xs = reversed(xs)
        out.extend(grid.index(x, y) for x in xs)
    return out


def _unshieldable(plan: ShieldPlan, grid: GridLayout) -> list[int]:
    # generic positive alpha/gamma: a site is shieldable when its score is <= 0
    probe = EntropyModel(1.0, math.sqrt(2.0), 0.0)
    out = []
    for s in plan.shields:
        if model_shield_score(s.site, s.m, s.m_prime, probe, grid).value > 1e-9:
            out.append(s.site)
    return out


def plan_from_ordering(grid: GridLayout, ordering: Sequence[int], neighborhood_radius: int = 1) -> ShieldPlan:
    """Split each site's neighbourhood into visited (``M_k``) and unvisited (``M_k'``) cells."""
    _check_radius(grid, neighborhood_radius)
    ordering = [int(k) for k in ordering]
    if sorted(ordering) != list(range(grid.n_sites)):
        raise GeometryError("ordering must be a permutation of the grid cells")
    rank = {k: i for i, k in enumerate(ordering)}
    shields = []
    for k in ordering:
        ball = grid.ball(k, neighborhood_radius)
        shields.append(
            Shield(k, [j for j in ball if rank[j] < rank[k]], [j for j in ball if rank[j] > rank[k]])
        )
    plan = ShieldPlan(tuple(ordering), tuple(shields))
    remainder = _unshieldable(plan, grid) if grid.periodic else []
    return ShieldPlan(plan.ordering, plan.shields, tuple(remainder))


def generate_plan(grid: GridLayout, neighborhood_radius: int = 1, order: str = "row") -> ShieldPlan:
    """Sweep plan for ``grid``.

    On a periodic grid the sweep cannot close topologically; sites whose
    shields fail are listed in ``plan.remainder`` instead of being certified.
    """
    return plan_from_ordering(grid, sweep_order(grid, order), neighborhood_radius)


def validate_plan(plan: ShieldPlan, grid: GridLayout | None = None) -> list[str]:
    """Constraint violations of ``plan``; empty when valid."""
    out = plan_violations(plan)
    if grid is not None:
        outside = sorted(
            {k for k in plan.ordering if not 0 <= k < grid.n_sites}
            | {j for s in plan.shields for j in (*s.m, *s.m_prime) if not 0 <= j < grid.n_sites}
        )
        if outside:
            out.append(f"sites {outside} outside the {grid.width}x{grid.height} grid")
    return out


def site_scores(plan: ShieldPlan, model: EntropyModel, grid: GridLayout) -> dict[int, ModelValue]:
    return {s.site: model_shield_score(s.site, s.m, s.m_prime, model, grid) for s in plan.shields}


def predict_bound(plan: ShieldPlan, model: EntropyModel, grid: GridLayout) -> ModelValue:
    """Certificate value with model scores in place of measured conditional entropies.

    ``slack_width`` is the distance from the value to the upper edge of the
    interval obtained by adding every score's slack.
    """
    bad = validate_plan(plan, grid)
    if bad:
        raise PlanError("invalid shield plan: " + "; ".join(bad), bad)
    scores = site_scores(plan, model, grid).values()
    total = math.fsum(s.value for s in scores)
    width = sum(s.slack_width for s in scores)
    value = SQRT8 * math.sqrt(max(total, 0.0))
    upper = SQRT8 * math.sqrt(max(total + width, 0.0))
    return ModelValue(value, upper - value)


def load_grid_model(d: dict) -> tuple[GridLayout, EntropyModel]:
    try:
        grid = GridLayout(int(d["width"]), int(d["height"]), bool(d.get("periodic", False)))
        model = EntropyModel(float(d.get("alpha", 0.0)), float(d.get("gamma", 0.0)), float(d.get("slack", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (GeometryError, DomainError)):
            raise
        raise DomainError(f"malformed grid/model description: {exc}") from exc
    return grid, model


def plan_report(plan: ShieldPlan, model: EntropyModel, grid: GridLayout) -> dict:
    scores = site_scores(plan, model, grid)
    pred = predict_bound(plan, model, grid)
    return {
        "plan": plan.to_dict(),
        "grid": grid.to_dict(),
        "model": {"alpha": model.alpha, "gamma": model.gamma, "slack": model.slack},
        "site_scores": [{"site": k, "score": v.value, "slack_width": v.slack_width} for k, v in scores.items()],
        "predicted_bound": pred.value,
        "predicted_bound_slack": pred.slack_width,
        "remainder": list(plan.remainder),
        "assumptions": ["gamma multiplies the number of boundary components"],
    }
