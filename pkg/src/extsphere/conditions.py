"""Checkers for the variable-radius exterior sphere condition.

The extended condition asks, at every boundary point a with boundary radius
r(a): if a lies on the boundary of the interior, SOME unit proximal normal
must be realized by an r(a)-sphere; at every other boundary point, EVERY
unit proximal normal must be.  An infinite r(a) is tested at the rho_max cap
and reported under the documented +inf protocol.

Every verdict is "at tested samples and density": the checkers are
falsifiers that attach certificates, not provers.  Reports embed the seed
and sample counts so reruns reproduce them bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import INF, GeometryError, as_tuple, as_vec, ext_min, norm, normalized
from .proximal import (
    RHO_MIN,
    RadiusField,
    default_density,
    default_rho_max,
    is_proximal_normal,
    realization_margins,
    sample_unit_normals,
)
from .sets import ClosedSetDesc

BDRY_INT = "bdry-int"
NOT_BDRY_INT = "not-bdry-int"
UNCLASSIFIED = "unclassified"


def cover_radius(desc: ClosedSetDesc, radius_field: RadiusField, x) -> float:
    """Guaranteed witness-ball radius at an exterior point: half the smallest
    boundary radius among its projections (+inf halves to +inf).

    The minimum is attained because projections are finitely clustered.
    """
    x = as_vec(x, dim=desc.dim)
    if desc.contains(x):
        raise GeometryError(f"point {x.tolist()} lies in the set; exterior point required")
    proj = desc.project(x)
    values = [radius_field.value(p, labels) for p, labels in zip(proj.points, proj.labels)]
    out = INF
    for v in values:
        out = ext_min(out, v / 2.0 if math.isfinite(v) else INF)
    return out


def attaining_projection(desc: ClosedSetDesc, radius_field: RadiusField, x):
    """The projection point attaining the cover radius (lexicographic tie-break)."""
    x = as_vec(x, dim=desc.dim)
    proj = desc.project(x)
    scored = []
    for p, labels in zip(proj.points, proj.labels):
        v = radius_field.value(p, labels)
        half = v / 2.0 if math.isfinite(v) else INF
        scored.append((half, tuple(p), p, labels))
    scored.sort(key=lambda t: (t[0], t[1]))
    _, _, p, labels = scored[0]
    return p, labels, proj


# ---------------------------------------------------------------------------
# Report records
# ---------------------------------------------------------------------------


@dataclass
class ViolationCertificate:
    point: tuple
    direction: tuple
    realization: float
    required: float
    margin: float
    kind: str = "realization-deficit"


@dataclass
class BoundarySampleRecord:
    point: tuple
    label: str
    classification: str
    quantifier: str
    normals_tested: int
    required: float
    realizations: tuple
    ok: bool
    marginal: bool
    certificate: ViolationCertificate | None = None
    note: str = ""


@dataclass
class ConditionReport:
    verdict: str  # holds | fails | marginal | vacuous
    records: list
    seed: int
    boundary_samples: int
    density: int
    rho_max: float
    notes: list = field(default_factory=list)

    def violations(self):
        return [rec for rec in self.records if rec.certificate is not None]

    def counts(self):
        out = {"total": len(self.records), "violations": 0, "marginal": 0, "unclassified": 0}
        for rec in self.records:
            if rec.certificate is not None:
                out["violations"] += 1
            elif rec.marginal:
                out["marginal"] += 1
            if rec.classification == UNCLASSIFIED:
                out["unclassified"] += 1
        return out


# ---------------------------------------------------------------------------
# The main checker
# ---------------------------------------------------------------------------


def check_extended_condition(
    desc: ClosedSetDesc,
    radius_field: RadiusField,
    boundary_samples: int = 200,
    density: int | None = None,
    seed: int = 0,
    rho_max: float | None = None,
    force_forall: bool = False,
    classification_override=None,
) -> ConditionReport:
    """Sampled check of the extended exterior sphere condition.

    Boundary-of-interior points use the EXISTS quantifier over the sampled
    normal cone, all other boundary points the FORALL quantifier; a
    classification override hook exists for quantifier tests.  FORALL
    violations are confirmed against the proximal normal inequality before
    they enter the report, so sampling artifacts near the cone boundary
    cannot masquerade as certificates.
    """
    density = default_density(desc.dim) if density is None else density
    rho_max = default_rho_max(desc) if rho_max is None else float(rho_max)
    missing = radius_field.covers(desc)
    if missing:
        raise GeometryError(f"radius field does not cover components {missing}")
    samples = desc.sample_boundary(boundary_samples, seed=seed)
    records: list[BoundarySampleRecord] = []
    notes: list[str] = []
    any_violation = False
    any_marginal = False
    for a, label in samples:
        required = radius_field.value(a, (label,))
        if classification_override is not None:
            classification = classification_override(a, label)
        else:
            try:
                classification = BDRY_INT if desc.in_boundary_of_interior(a) else NOT_BDRY_INT
            except GeometryError:
                records.append(
                    BoundarySampleRecord(
                        as_tuple(a), label, UNCLASSIFIED, "-", 0, required, (), False, False,
                        note="classification failed; sample excluded",
                    )
                )
                continue
        quantifier = "forall" if (force_forall or classification == NOT_BDRY_INT) else "exists"
        rec = _check_sample(
            desc, a, label, classification, quantifier, required, density, rho_max, seed
        )
        records.append(rec)
        any_violation |= rec.certificate is not None
        any_marginal |= rec.marginal
    if not records:
        verdict = "vacuous"
    elif any_violation:
        verdict = "fails"
    elif any_marginal:
        verdict = "marginal"
    else:
        verdict = "holds"
    return ConditionReport(verdict, records, seed, boundary_samples, density, rho_max, notes)


def _check_sample(desc, a, label, classification, quantifier, required, density, rho_max, seed):
    normals = sample_unit_normals(desc, a, density=density, rho_max=rho_max)
    if not normals:
        if quantifier == "exists":
            cert = ViolationCertificate(as_tuple(a), (), 0.0, required, -INF, kind="no-normal-found")
            return BoundarySampleRecord(
                as_tuple(a), label, classification, quantifier, 0, required, (), False, False, cert,
                note="no unit normal found at tested density",
            )
        return BoundarySampleRecord(
            as_tuple(a), label, classification, quantifier, 0, required, (), True, False,
            note="empty sampled cone; forall holds vacuously",
        )
    dirs = np.asarray([n.direction for n in normals])
    rho_test = min(required, rho_max) if math.isfinite(required) else rho_max
    margins = realization_margins(desc, a, dirs, rho_test)
    ok_mask = margins >= -desc.realize_tol
    marginal_mask = (~ok_mask) & (margins >= -desc.ball_tol)
    reals = tuple(round(n.realization, 12) for n in normals)

    if quantifier == "exists":
        if bool(np.any(ok_mask)):
            return BoundarySampleRecord(
                as_tuple(a), label, classification, quantifier, len(normals), required, reals,
                True, False,
            )
        if bool(np.any(marginal_mask)):
            return BoundarySampleRecord(
                as_tuple(a), label, classification, quantifier, len(normals), required, reals,
                False, True, note="best realization within the marginal band",
            )
        best = int(np.argmax(margins))
        cert = ViolationCertificate(
            as_tuple(a), as_tuple(dirs[best]), normals[best].realization, required, float(margins[best])
        )
        return BoundarySampleRecord(
            as_tuple(a), label, classification, quantifier, len(normals), required, reals,
            False, False, cert,
        )

    # forall
    bad = np.nonzero(~ok_mask & ~marginal_mask)[0]
    for idx in bad:
        zeta = dirs[idx]
        claimed = normals[idx].realization
        sigma = 1.0 / (2.0 * max(claimed if math.isfinite(claimed) else rho_max, RHO_MIN))
        if is_proximal_normal(desc, a, zeta, sigma, seed=seed):
            cert = ViolationCertificate(
                as_tuple(a), as_tuple(zeta), claimed, required, float(margins[idx])
            )
            return BoundarySampleRecord(
                as_tuple(a), label, classification, quantifier, len(normals), required, reals,
                False, False, cert,
            )
    if bool(np.any(marginal_mask)):
        return BoundarySampleRecord(
            as_tuple(a), label, classification, quantifier, len(normals), required, reals,
            False, True, note="some realization within the marginal band",
        )
    note = "" if bad.size == 0 else "unconfirmed sampling artifacts dropped"
    return BoundarySampleRecord(
        as_tuple(a), label, classification, quantifier, len(normals), required, reals,
        True, False, note=note,
    )


def check_condition_on_interior_closure(
    desc: ClosedSetDesc,
    radius_field: RadiusField,
    boundary_samples: int = 200,
    density: int | None = None,
    seed: int = 0,
    rho_max: float | None = None,
) -> ConditionReport:
    """Classical (FORALL-form) exterior sphere check on cl(int A).

    The regularization is computed per primitive in the CSG tree; an empty
    interior yields a vacuous report.
    """
    reg = desc.closure_of_interior()
    if reg is None:
        return ConditionReport(
            "vacuous", [], seed, 0, density or default_density(desc.dim),
            rho_max or default_rho_max(desc), ["interior is empty"],
        )
    return check_extended_condition(
        reg, radius_field, boundary_samples, density, seed, rho_max, force_forall=True
    )


# ---------------------------------------------------------------------------
# Lower semicontinuity audit of the cover radius
# ---------------------------------------------------------------------------


@dataclass
class LscRecord:
    target: tuple
    direction: tuple
    value_at_target: float
    liminf_estimate: float
    lsc_ok: bool
    discontinuous: bool


@dataclass
class LscReport:
    verdict: str
    records: list
    tol: float
    seed: int

    def discontinuities(self):
        return [rec for rec in self.records if rec.discontinuous]


def audit_lower_semicontinuity(
    desc: ClosedSetDesc,
    radius_field: RadiusField,
    rays=None,
    random_rays: int = 20,
    steps: int = 20,
    seed: int = 0,
    tol: float | None = None,
) -> LscReport:
    """Sampled lower-semicontinuity audit of the cover radius.

    Sequences approach each target along declared rays plus random ones; the
    liminf estimate (tail minimum) must not undercut the value at the target
    by more than the tolerance.  Genuine jumps (limit different from the
    value while lsc holds) are flagged as discontinuities, not failures.
    """
    tol = 1e-6 * desc.diameter if tol is None else tol
    rng = np.random.default_rng(seed)
    ray_list = [(as_vec(p, dim=desc.dim), normalized(v)) for p, v in (rays or [])]
    if random_rays:
        pool = desc.sample_exterior(random_rays, seed=seed + 1)
        for x in pool:
            raw = rng.normal(size=desc.dim)
            ray_list.append((x, normalized(raw)))
    records = []
    ok_all = True
    for target, v in ray_list:
        if desc.contains(target):
            continue
        value = cover_radius(desc, radius_field, target)
        clearance = desc.distance(target)
        s0 = max(min(0.2 * desc.diameter, 0.9 * clearance), 1e-9)
        tail: list[float] = []
        for k in range(steps):
            s = s0 * 2.0**-k
            if s < 4.0 * desc.cluster_tol:
                # Below the projection clustering resolution the sequence is
                # indistinguishable from its limit.
                break
            p = target + s * v
            if desc.contains(p):
                continue
            tail.append(cover_radius(desc, radius_field, p))
        if len(tail) < 4:
            continue
        # The estimator bias is proportional to the approach scale, so only
        # the closest resolvable samples enter the liminf.
        liminf = min(tail[-3:])
        if math.isinf(value):
            lsc_ok = all(math.isinf(t) for t in tail)
            jump = not lsc_ok
        else:
            lsc_ok = liminf >= value - tol
            limit_est = tail[-1]
            jump = math.isinf(limit_est) or abs(limit_est - value) > tol
        ok_all &= lsc_ok
        records.append(
            LscRecord(as_tuple(target), as_tuple(v), value, liminf, lsc_ok, jump and lsc_ok)
        )
    return LscReport("holds" if ok_all else "fails", records, tol, seed)


# ---------------------------------------------------------------------------
# Union-of-balls verification
# ---------------------------------------------------------------------------


@dataclass
class CoverViolation:
    point: tuple
    kind: str
    detail: str


@dataclass
class CoverReport:
    verdict: str
    checked: int
    violations: list
    tol: float
    seed: int
    delta_list: tuple


def verify_union_of_balls(
    desc: ClosedSetDesc,
    rho_fn,
    witness_fn,
    samples: int = 200,
    delta_list=(1.0, 10.0, 100.0),
    seed: int = 0,
    tol: float | None = None,
) -> CoverReport:
    """Check the union-of-closed-balls property of the complement by sampling.

    Finite cover radius: the witness ball must contain the sample and keep
    its full radius away from the set.  Infinite cover radius: the witness
    direction must admit the tangent family of closed delta-balls for every
    requested delta.
    """
    tol = desc.ball_tol if tol is None else tol
    pts = desc.sample_exterior(samples, seed=seed)
    violations: list[CoverViolation] = []
    for x in pts:
        try:
            rho = rho_fn(x)
        except Exception as exc:  # noqa: BLE001 - diagnostics over crashes
            violations.append(CoverViolation(as_tuple(x), "radius-error", str(exc)))
            continue
        try:
            witness = witness_fn(x)
        except Exception as exc:  # noqa: BLE001
            violations.append(CoverViolation(as_tuple(x), "witness-error", str(exc)))
            continue
        if getattr(witness, "ok", True) is False:
            violations.append(
                CoverViolation(as_tuple(x), "witness-failed", getattr(witness, "note", ""))
            )
            continue
        if math.isfinite(rho):
            center = np.asarray(witness.ball.center, dtype=float)
            gap = norm(x - center)
            clearance = desc.distance(center)
            if gap > rho + tol:
                violations.append(
                    CoverViolation(as_tuple(x), "not-covered", f"|x-y|={gap:.9g} > rho={rho:.9g}")
                )
            elif clearance < rho - tol:
                violations.append(
                    CoverViolation(
                        as_tuple(x), "ball-meets-set", f"distance={clearance:.9g} < rho={rho:.9g}"
                    )
                )
        else:
            u = np.asarray(witness.direction, dtype=float)
            for delta in delta_list:
                clearance = desc.distance(x + delta * u)
                if clearance < delta - tol:
                    violations.append(
                        CoverViolation(
                            as_tuple(x),
                            "delta-ball-meets-set",
                            f"delta={delta:.9g} distance={clearance:.9g}",
                        )
                    )
                    break
    verdict = "holds" if not violations else "fails"
    return CoverReport(verdict, len(pts), violations, tol, seed, tuple(delta_list))
