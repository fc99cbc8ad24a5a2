"""Proximal normal cone queries.

The central objects are the proximal normal inequality
``<zeta, x - a> <= sigma * ||x - a||^2`` over the set, its tangent-sphere
realization (the open ball of radius rho tangent at the base point along the
direction misses the set), the largest realizing radius, its cap by a
boundary radius field, directional distances along rays, and deterministic
sampling of the unit normal cone at a boundary point.

Realization at radius rho is equivalent to the proximal inequality with
``sigma = 1/(2 rho)``; emptiness of the tangent ball is decided through the
analytic distance function, which is far better conditioned than probing the
inequality itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import INF, GeometryError, as_vec, ensure_ext_real, ext_min, norm, normalized, unit, unit_direction_grid
from .sets import ClosedSetDesc

# Smallest sphere radius at which cone membership is probed.
RHO_MIN = 1e-6

# Default direction sweep densities per ambient dimension.
DENSITY_2D = 720
DENSITY_3D = 2000

# rho_max defaults to this multiple of the scene diameter; realization at
# rho_max is reported as +inf (a finite test cannot certify an unbounded
# claim, so the cap and the protocol are part of every report).
RHO_MAX_FACTOR = 1e3

_BISECT_REL_TOL = 1e-9


class NotRealizedError(ValueError):
    """The direction is not realized even at the smallest probed radius."""


def default_density(dim: int) -> int:
    return DENSITY_2D if dim == 2 else DENSITY_3D


def default_rho_max(desc: ClosedSetDesc) -> float:
    return RHO_MAX_FACTOR * desc.diameter


# ---------------------------------------------------------------------------
# Radius fields
# ---------------------------------------------------------------------------

_EXPR_NAMES = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "sqrt": math.sqrt,
    "exp": math.exp, "log": math.log, "abs": abs, "min": min, "max": max,
    "atan2": math.atan2, "hypot": math.hypot, "floor": math.floor,
    "ceil": math.ceil, "pi": math.pi, "e": math.e, "inf": INF,
}


def _compile_rule(source: str):
    import ast

    tree = ast.parse(source, mode="eval")
    allowed = (
        ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
        ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod,
        ast.USub, ast.UAdd, ast.Compare, ast.Lt, ast.Gt, ast.LtE, ast.GtE,
        ast.IfExp, ast.Tuple,
    )
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise GeometryError(f"unsupported syntax in radius rule {source!r}")
        if isinstance(node, ast.Name) and node.id not in ("x", "y", "z", *_EXPR_NAMES):
            raise GeometryError(f"unknown name {node.id!r} in radius rule {source!r}")
        if isinstance(node, ast.Call) and (
            not isinstance(node.func, ast.Name) or node.func.id not in _EXPR_NAMES
        ):
            raise GeometryError(f"unsupported call in radius rule {source!r}")
    return compile(tree, "<radius-rule>", "eval")


@dataclass
class RadiusRule:
    """Constant or coordinate-expression rule for one boundary component."""

    source: str
    constant: float | None = None
    code: object = None

    @staticmethod
    def parse(source) -> "RadiusRule":
        if isinstance(source, (int, float)):
            return RadiusRule(repr(source), constant=ensure_ext_real(float(source), "radius"))
        text = str(source).strip()
        try:
            value = float(text)
        except ValueError:
            return RadiusRule(text, code=_compile_rule(text))
        return RadiusRule(text, constant=ensure_ext_real(value, "radius"))

    def value_at(self, p: np.ndarray) -> float:
        if self.constant is not None:
            return self.constant
        env = {"x": float(p[0]), "y": float(p[1])}
        if p.shape[0] > 2:
            env["z"] = float(p[2])
        value = float(eval(self.code, {"__builtins__": {}}, {**_EXPR_NAMES, **env}))
        if not value > 0.0:
            raise GeometryError(f"radius rule {self.source!r} produced {value!r} at {p.tolist()}")
        return value


@dataclass
class RadiusField:
    """Boundary radius field: one rule per labeled component, values in (0, inf].

    Continuity within each component is the scene author's declaration; it is
    spot-checked by ``validate_continuity`` against a declared Lipschitz bound.
    """

    rules: dict[str, RadiusRule]
    lipschitz: float | None = None

    @staticmethod
    def constant(desc: ClosedSetDesc, value: float) -> "RadiusField":
        rule = RadiusRule.parse(value)
        return RadiusField({leaf.label: rule for leaf in desc.leaves}, lipschitz=0.0)

    @staticmethod
    def from_sources(sources: dict[str, object], lipschitz: float | None = None) -> "RadiusField":
        return RadiusField({k: RadiusRule.parse(v) for k, v in sources.items()}, lipschitz)

    def covers(self, desc: ClosedSetDesc) -> list[str]:
        return [leaf.label for leaf in desc.leaves if leaf.label not in self.rules]

    def value(self, p, labels) -> float:
        """Radius at a boundary point carrying one or more component labels.

        A point on several components takes the smallest applicable value.
        """
        p = np.asarray(p, dtype=float)
        if isinstance(labels, str):
            labels = (labels,)
        known = [lab for lab in labels if lab in self.rules]
        if not known:
            raise GeometryError(f"no radius rule covers labels {tuple(labels)!r}")
        value = min(self.rules[lab].value_at(p) for lab in known)
        if not value > 0.0:
            raise GeometryError(f"radius must be positive, got {value!r} at {p.tolist()}")
        return value

    def validate_continuity(self, desc: ClosedSetDesc, pairs: int = 1000, tol: float = 1e-9, seed: int = 0) -> bool:
        """Sampled Lipschitz audit |r(p)-r(q)| <= L ||p-q|| + tol per component."""
        if self.lipschitz is None:
            return True
        rng = np.random.default_rng(seed)
        samples = desc.sample_boundary(max(64, pairs // 4), seed=seed)
        by_label: dict[str, list[np.ndarray]] = {}
        for p, lab in samples:
            by_label.setdefault(lab, []).append(p)
        checked = 0
        for lab, pts in by_label.items():
            if lab not in self.rules or len(pts) < 2:
                continue
            pts_arr = np.asarray(pts)
            while checked < pairs:
                i, j = rng.integers(len(pts), size=2)
                if i == j:
                    continue
                p, q = pts_arr[i], pts_arr[j]
                rp, rq = self.rules[lab].value_at(p), self.rules[lab].value_at(q)
                if math.isinf(rp) or math.isinf(rq):
                    if rp != rq:
                        return False
                elif abs(rp - rq) > self.lipschitz * norm(p - q) + tol:
                    return False
                checked += 1
            checked = 0
        return True


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------


@dataclass
class NormalCheck:
    """Outcome of a proximal-normal-inequality probe; falsy when violated."""

    ok: bool
    certificate: np.ndarray | None = None
    worst_slack: float = INF

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class RealizationCheck:
    """Outcome of a tangent-ball emptiness test.

    ``margin`` is distance(set, tangent center) - rho; exact tangency gives 0.
    ``marginal`` flags margins inside the unreliable band (within ball_tol of
    the decision threshold) for reporting purposes.
    """

    ok: bool
    margin: float
    marginal: bool

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class ProxNormal:
    """A unit proximal normal with its realization radius."""

    base: np.ndarray
    direction: np.ndarray
    realization: float


# ---------------------------------------------------------------------------
# Core predicates
# ---------------------------------------------------------------------------


def realization_margins(desc: ClosedSetDesc, a: np.ndarray, dirs: np.ndarray, rhos) -> np.ndarray:
    """distance(set, a + rho*dir) - rho for each direction (vectorized)."""
    rhos = np.broadcast_to(np.asarray(rhos, dtype=float), (dirs.shape[0],))
    centers = a[None, :] + rhos[:, None] * dirs
    return desc.distance_many(centers) - rhos


def is_realized_by_sphere(desc: ClosedSetDesc, a, zeta, rho: float, tol: float | None = None) -> RealizationCheck:
    """Whether the open ball of radius rho tangent at a along zeta misses the set.

    Decided by distance(set, a + rho*zeta) >= rho - tol.  The margin is never
    positive for a genuine boundary point (the base point itself sits at
    distance exactly rho from the center), so the test is a tangency test.
    """
    a = as_vec(a, dim=desc.dim)
    zeta = unit(zeta)
    rho = float(rho)
    if not (rho > 0.0 and math.isfinite(rho)):
        raise GeometryError(f"sphere radius must be positive and finite, got {rho!r}")
    tol = desc.realize_tol if tol is None else tol
    margin = float(realization_margins(desc, a, zeta[None, :], rho)[0])
    ok = margin >= -tol
    marginal = (not ok) and margin >= -desc.ball_tol
    return RealizationCheck(ok, margin, marginal)


def is_proximal_normal(
    desc: ClosedSetDesc,
    a,
    zeta,
    sigma: float,
    probes: int = 512,
    seed: int = 0,
    include_local: bool = True,
) -> NormalCheck:
    """Probe the proximal normal inequality over set points.

    Probes combine boundary samples, grid-oracle points of the set, and
    geometrically shrinking local boundary draws around the base point (the
    inequality only bites at quadratic scale near the base).  A failure
    carries the violating set point as certificate.
    """
    a = as_vec(a, dim=desc.dim)
    if not desc.on_boundary(a):
        raise GeometryError(f"point {a.tolist()} is not on the set boundary")
    zeta = unit(zeta)
    sigma = float(sigma)
    if sigma < 0.0:
        raise GeometryError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    pools = [np.asarray([p for p, _ in desc.sample_boundary(max(8, probes // 2), seed=seed)])]
    pools.append(desc.oracle.probe_points(probes, rng))
    if include_local:
        # The inequality only bites at quadratic scale near the base point,
        # so probe geometrically shrinking neighborhoods: parametric boundary
        # neighbors from the leaves owning a (exact even on thin components)
        # plus rejection draws for full-dimensional parts.
        local = []
        owners = [
            leaf
            for leaf in desc.leaves
            if bool(leaf.contains_many(a[None, :], desc.cluster_tol)[0])
            and float(leaf.boundary_distance_many(a[None, :])[0]) <= desc.cluster_tol
        ]
        for k in range(2, 46):
            scale = desc.diameter * 2.0**-k
            for leaf in owners:
                nearby = leaf.local_boundary_points(a, scale)
                if nearby is not None and len(nearby):
                    keep = desc.contains_many(nearby)
                    local.extend(nearby[keep])
            if k <= 40:
                raw = rng.normal(size=(8, desc.dim))
                cand = a + scale * raw / np.linalg.norm(raw, axis=1, keepdims=True)
                keep = desc.contains_many(cand)
                local.extend(cand[keep])
        if local:
            pools.append(np.asarray(local))
    pts = np.concatenate(pools, axis=0)
    w = pts - a
    lhs = w @ zeta
    rhs = sigma * np.sum(w * w, axis=1)
    slack = rhs - lhs
    tol = desc.realize_tol
    worst = int(np.argmin(slack))
    if slack[worst] < -tol:
        return NormalCheck(False, pts[worst].copy(), float(slack[worst]))
    return NormalCheck(True, None, float(slack[worst]))


def realization_radius(
    desc: ClosedSetDesc,
    a,
    zeta,
    rho_max: float | None = None,
    rho_min: float = RHO_MIN,
) -> float:
    """Largest rho at which the direction is realized by a rho-sphere.

    Bisection over [rho_min, rho_max] using the monotonicity of realization
    (realized at rho implies realized at every smaller radius).  Realization
    at rho_max itself reports +inf under the documented cap protocol; convex
    sets short-circuit to exact +inf.  Raises NotRealizedError when even the
    rho_min sphere meets the set.
    """
    a = as_vec(a, dim=desc.dim)
    zeta = unit(zeta)
    rho_max = default_rho_max(desc) if rho_max is None else float(rho_max)
    if not is_realized_by_sphere(desc, a, zeta, rho_min):
        raise NotRealizedError(
            f"direction {zeta.tolist()} at {a.tolist()} is not realized at rho={rho_min}"
        )
    if desc.is_convex():
        return INF
    if is_realized_by_sphere(desc, a, zeta, rho_max):
        return INF
    lo, hi = rho_min, rho_max
    tol = _BISECT_REL_TOL * rho_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_realized_by_sphere(desc, a, zeta, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def capped_realization_radius(
    desc: ClosedSetDesc,
    radius_field: RadiusField,
    a,
    zeta,
    labels=None,
    rho_max: float | None = None,
) -> float:
    """Realization radius capped by the boundary radius field at the base.

    Equals the raw realization radius whenever the field is +inf there.
    """
    a = as_vec(a, dim=desc.dim)
    labels = desc.boundary_labels_at(a) if labels is None else labels
    cap = radius_field.value(a, labels)
    return ext_min(realization_radius(desc, a, zeta, rho_max=rho_max), cap)


def directional_distance(desc: ClosedSetDesc, x, zeta, t_max: float) -> float:
    """First hitting parameter min{t in [0, t_max] : x + t*zeta in the set}.

    Computed from exact ray-membership intervals (closed-form per leaf), so
    thin components are hit exactly; +inf when the ray misses within t_max.
    """
    x = as_vec(x, dim=desc.dim)
    zeta = unit(zeta)
    if not t_max > 0.0:
        raise GeometryError("t_max must be positive")
    spans = desc.ray_membership_intervals(x, zeta)
    t = spans.first_point_at_or_after(0.0)
    return t if t <= t_max else INF


def directional_distance_marched(
    desc: ClosedSetDesc, x, zeta, t_max: float, step: float | None = None, polish_tol: float = 1e-9
) -> float:
    """March-and-bisect reference for full-dimensional sets (test oracle).

    Steps along the ray at the grid resolution, then bisects the membership
    flip and polishes to polish_tol.  Thin components can slip between the
    steps, which is why the interval route above is the primary path.
    """
    x = as_vec(x, dim=desc.dim)
    zeta = unit(zeta)
    step = desc.oracle.h if step is None else step
    if desc.contains(x):
        return 0.0
    ts = np.arange(0.0, t_max + step, step)
    pts = x[None, :] + ts[:, None] * zeta[None, :]
    hits = desc.contains_many(pts)
    idx = np.nonzero(hits)[0]
    if idx.size == 0:
        return INF
    hi = float(ts[idx[0]])
    lo = float(ts[idx[0] - 1]) if idx[0] > 0 else 0.0
    while hi - lo > polish_tol:
        mid = 0.5 * (lo + hi)
        if desc.contains(x + mid * zeta):
            hi = mid
        else:
            lo = mid
    return hi


def first_boundary_return(desc: ClosedSetDesc, a, zeta, t_floor: float | None = None) -> float:
    """First positive parameter at which the ray from a meets the set again.

    The base point is itself on the boundary; its degenerate touch at t=0 is
    discarded via t_floor.  Rays that slide inside the set through the floor
    report the floor itself (callers then skip the direction).
    """
    a = as_vec(a, dim=desc.dim)
    zeta = unit(zeta)
    t_floor = max(1e-12, desc.membership_tol) if t_floor is None else t_floor
    spans = desc.ray_membership_intervals(a, zeta)
    return spans.first_entry_after(t_floor)


def cone_filter_tol(desc: ClosedSetDesc, density: int, rho_test: float) -> float:
    """Emptiness tolerance for cone membership probes at tiny radius.

    Must sit far below the margin ~ rho * (grid step)^2 / 2 that separates a
    true cone direction from its angular neighbors, and far above float
    noise of the distance evaluation.
    """
    theta = 2.0 * math.pi / max(density, 8)
    separation = 0.25 * rho_test * theta * theta
    noise_floor = 5e-14 * max(1.0, desc.diameter)
    return max(noise_floor, min(desc.realize_tol, separation))


def _margin_noise_floor(desc: ClosedSetDesc) -> float:
    return 5e-14 * max(1.0, desc.diameter)


def _tangent_basis(direction: np.ndarray) -> list[np.ndarray]:
    d = direction
    if d.shape[0] == 2:
        return [np.array([-d[1], d[0]])]
    pivot = np.zeros(3)
    pivot[int(np.argmin(np.abs(d)))] = 1.0
    u = normalized(np.cross(d, pivot))
    v = np.cross(d, u)
    return [u, v]


def _refine_direction(desc: ClosedSetDesc, a, dir0: np.ndarray, rho: float, span: float) -> np.ndarray:
    """Rotate a near-cone direction to the local maximum of the tangency margin.

    A true normal has margin exactly zero; a grid neighbor that leaked
    through the filter tolerance climbs back onto the exact direction, after
    which deduplication removes it.  Golden-section over the rotation angle,
    one tangent axis at a time.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0

    def margin_of(d):
        return float(realization_margins(desc, a, d[None, :], rho)[0])

    best = dir0
    for axis in _tangent_basis(dir0):
        lo, hi = -span, span
        for _ in range(40):
            m1 = hi - inv_phi * (hi - lo)
            m2 = lo + inv_phi * (hi - lo)
            d1 = normalized(math.cos(m1) * best + math.sin(m1) * axis)
            d2 = normalized(math.cos(m2) * best + math.sin(m2) * axis)
            if margin_of(d1) >= margin_of(d2):
                hi = m2
            else:
                lo = m1
        angle = 0.5 * (lo + hi)
        best = normalized(math.cos(angle) * best + math.sin(angle) * axis)
    return best


def sample_unit_normals(
    desc: ClosedSetDesc,
    a,
    density: int | None = None,
    rho_max: float | None = None,
    extra_directions=None,
    with_realizations: bool = True,
    rho_min: float = RHO_MIN,
) -> list[ProxNormal]:
    """Sampled unit proximal normal cone at a boundary point.

    Sweeps a deterministic direction grid augmented with the analytic normal
    candidates of the leaves owning the point, keeps directions whose
    rho_min tangent sphere misses the set (the proximal inequality at
    sigma = 1/(2 rho_min)), and attaches realization radii.  May be empty:
    the cone can be trivial, and every verdict downstream is explicitly "at
    tested density".
    """
    a = as_vec(a, dim=desc.dim)
    if not desc.on_boundary(a):
        raise GeometryError(f"point {a.tolist()} is not on the set boundary")
    density = default_density(desc.dim) if density is None else density
    rho_max = default_rho_max(desc) if rho_max is None else float(rho_max)
    dirs = [unit_direction_grid(desc.dim, density)]
    for leaf in desc.leaves:
        P = a[None, :]
        if bool(leaf.contains_many(P, desc.cluster_tol)[0]) and float(
            leaf.boundary_distance_many(P)[0]
        ) <= desc.cluster_tol:
            cand = leaf.normal_directions(a)
            if cand:
                dirs.append(np.asarray(cand))
    if extra_directions is not None and len(extra_directions):
        dirs.append(np.asarray([normalized(d) for d in extra_directions]))
    all_dirs = np.concatenate(dirs, axis=0)
    # Deduplicate (grid may repeat analytic candidates exactly).
    _, keep = np.unique(np.round(all_dirs, 9), axis=0, return_index=True)
    all_dirs = all_dirs[np.sort(keep)]
    tol = cone_filter_tol(desc, density, rho_min)
    margins = realization_margins(desc, a, all_dirs, rho_min)
    passed = margins >= -tol
    # Directions inside the tolerance shadow (realized only up to tol, not up
    # to float noise) are angular neighbors of a true normal; refine them to
    # the local margin maximum so duplicates collapse onto the exact one.
    noise = _margin_noise_floor(desc)
    theta = 2.0 * math.pi / density
    refined = []
    for d, m, ok in zip(all_dirs, margins, passed):
        if not ok:
            continue
        was_refined = False
        if m < -noise:
            d = _refine_direction(desc, a, d, rho_min, span=theta)
            m = float(realization_margins(desc, a, d[None, :], rho_min)[0])
            if m < -noise:
                continue
            was_refined = True
        refined.append((was_refined, m, d))
    if not refined:
        return []
    # Angular dedupe with exact (unrefined) directions taking precedence:
    # refinements that stalled in float noise a hair away from an exact
    # normal collapse onto it rather than displacing it.  Exact directions
    # are already distinct, so only refined ones need the merge test.
    merge_cos = math.cos(2e-4)
    exact = [d for flag, _, d in refined if not flag]
    stalled = [(m, d) for flag, m, d in refined if flag]
    kept = list(exact)
    if stalled:
        for _, d in sorted(stalled, key=lambda t: (-t[0], tuple(t[1]))):
            if not kept or float(np.max(np.asarray(kept) @ d)) < merge_cos:
                kept.append(d)
    cone = np.asarray(kept)
    if not with_realizations:
        return [ProxNormal(a.copy(), d.copy(), math.nan) for d in cone]
    reals = _batch_realizations(desc, a, cone, rho_min, rho_max)
    return [ProxNormal(a.copy(), d.copy(), float(r)) for d, r in zip(cone, reals)]


def _batch_realizations(desc, a, dirs, rho_min, rho_max) -> np.ndarray:
    if desc.is_convex():
        return np.full(dirs.shape[0], INF)
    tol = desc.realize_tol
    at_cap = realization_margins(desc, a, dirs, rho_max) >= -tol
    out = np.full(dirs.shape[0], INF)
    todo = ~at_cap
    if not np.any(todo):
        return out
    lo = np.full(int(todo.sum()), rho_min)
    hi = np.full(int(todo.sum()), rho_max)
    sub = dirs[todo]
    width_tol = _BISECT_REL_TOL * rho_max
    while float(np.max(hi - lo)) > width_tol:
        mid = 0.5 * (lo + hi)
        ok = realization_margins(desc, a, sub, mid) >= -tol
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    out[todo] = 0.5 * (lo + hi)
    return out


def best_normal(normals: list[ProxNormal], reference=None) -> ProxNormal | None:
    """The sampled normal with maximal realization; ties break toward the
    smallest angle against the reference direction, then lexicographically."""
    if not normals:
        return None

    def key(pn: ProxNormal):
        angle_key = 0.0
        if reference is not None:
            angle_key = -float(np.dot(pn.direction, reference))
        return (-pn.realization, angle_key, tuple(pn.direction))

    return sorted(normals, key=key)[0]
