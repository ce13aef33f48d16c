"""Piecewise-linear planar paths with tangential endpoints.

A path is a polyline from one puncture to another.  The parameterization is
pinned so that gamma(t) = z_i + v_i*t near t=0 and gamma(t) = z_j + v_j*(1-t)
near t=1 (the crossing-line constructions depend on these exact linear
charts); the interior runs at a single uniform speed.  Analysis extracts
transverse self-intersections with signs, the rotation number, and the
line data used by the two-point holonomy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ConfigError, GeometryError

PARALLEL_TOL = 1e-12
VERTEX_TOL = 1e-9          # relative: crossing this close to a segment end is degenerate
LEG_BOUNDARY_TOL = 1e-9    # crossing parameter must sit strictly inside a constant-velocity leg
REVERSAL_TOL = 1e-9


@dataclass(frozen=True)
class TangentialPoint:
    """Puncture index (0-based) together with a nonzero tangent vector."""

    index: int
    v: complex

    def __post_init__(self):
        if self.v == 0:
            raise ConfigError("tangent vector must be nonzero")


@dataclass(frozen=True)
class PathSpec:
    punctures: tuple
    start: TangentialPoint
    end: TangentialPoint
    waypoints: tuple

    def __init__(self, punctures, start, end, waypoints=()):
        object.__setattr__(self, "punctures", tuple(complex(p) for p in punctures))
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)
        object.__setattr__(self, "waypoints", tuple(complex(w) for w in waypoints))
        n = len(self.punctures)
        for k, p in enumerate(self.punctures):
            for q in self.punctures[k + 1:]:
                if p == q:
                    raise ConfigError("punctures must be distinct")
        if not (0 <= start.index < n and 0 <= end.index < n):
            raise ConfigError("tangential point index out of range")

    def vertices(self):
        return [self.punctures[self.start.index], *self.waypoints, self.punctures[self.end.index]]


@dataclass(frozen=True)
class Leg:
    """Constant-velocity piece: gamma(t) = z0 + velocity*(t - t0) on [t0, t1]."""

    t0: float
    t1: float
    z0: complex
    z1: complex

    @property
    def velocity(self) -> complex:
        return (self.z1 - self.z0) / (self.t1 - self.t0)

    def point(self, t: float) -> complex:
        return self.z0 + (self.z1 - self.z0) * ((t - self.t0) / (self.t1 - self.t0))


@dataclass
class Crossing:
    t: float
    s: float
    a: complex
    eps: int
    u: complex
    theta: float

    @property
    def sigma_slope(self) -> float:
        """Slope of the line s = 1 + slope*t joining (0,1) to (t_l, s_l)."""
        return (self.s - 1.0) / self.t


def _turn_angle(d_from: complex, d_to: complex) -> float:
    ang = cmath.phase(d_to / d_from)
    if abs(abs(ang) - math.pi) < REVERSAL_TOL:
        raise GeometryError("path reverses direction at a vertex (turning angle of +-pi)")
    return ang


def _segment_data(vertices):
    segs = []
    for a, b in zip(vertices, vertices[1:]):
        d = b - a
        if abs(d) == 0:
            raise GeometryError("consecutive vertices coincide")
        segs.append((a, b, d, abs(d)))
    return segs


class AnalyzedPath:
    """Path with pinned parameterization, crossing list, and rotation data."""

    def __init__(self, spec, legs, crossings, rot, scale):
        self.spec = spec
        self.legs = legs
        self.crossings = crossings
        self.rot = rot
        self.scale = scale

    @property
    def vratio(self) -> float:
        return abs(self.spec.end.v) / abs(self.spec.start.v)

    def point(self, t: float) -> complex:
        return self._leg_at(t).point(t)

    def velocity(self, t: float) -> complex:
        return self._leg_at(t).velocity

    def _leg_at(self, t: float) -> Leg:
        if not 0.0 <= t <= 1.0:
            raise ConfigError("parameter outside [0,1]")
        for leg in self.legs:
            if t <= leg.t1 or leg is self.legs[-1]:
                return leg
        return self.legs[-1]

    def legs_between(self, ta: float, tb: float):
        """Constant-velocity pieces covering [ta, tb], cut at the ends."""
        if not (0.0 <= ta < tb <= 1.0):
            raise ConfigError("need 0 <= ta < tb <= 1")
        out = []
        for leg in self.legs:
            lo, hi = max(ta, leg.t0), min(tb, leg.t1)
            if hi - lo > 1e-15:
                out.append(Leg(lo, hi, leg.point(lo), leg.point(hi)))
        return out


def rotation_number(spec: PathSpec) -> float:
    """Accumulated turning of the tangent in whole turns (Whitney style)."""
    verts = spec.vertices()
    segs = _segment_data(verts)
    _check_tangency(spec, segs)
    total = 0.0
    for (a, b, d1, _), (_, _, d2, _) in zip(segs, segs[1:]):
        total += _turn_angle(d1, d2)
    rot = total / (2.0 * math.pi)
    phi_i = cmath.phase(spec.start.v)
    phi_j = cmath.phase(spec.end.v)
    frac = rot - 0.5 - (phi_j - phi_i) / (2.0 * math.pi)
    if abs(frac - round(frac)) > 1e-9:
        raise GeometryError("rotation number violates the half-integer congruence")
    return rot


def vratio(spec: PathSpec) -> float:
    return abs(spec.end.v) / abs(spec.start.v)


def _check_tangency(spec, segs):
    vi, vj = spec.start.v, spec.end.v
    d_first = segs[0][2] / segs[0][3]
    d_last = segs[-1][2] / segs[-1][3]
    if abs(d_first - vi / abs(vi)) > 1e-9:
        raise GeometryError("start tangent vector must point along the first segment")
    if abs(d_last + vj / abs(vj)) > 1e-9:
        raise GeometryError("end tangent vector must point backward along the last segment")


def _check_puncture_clearance(spec, segs):
    for k, (a, b, d, length) in enumerate(segs):
        for idx, p in enumerate(spec.punctures):
            aa, bb = a, b
            # the designated endpoints may (must) touch their own puncture
            if k == 0 and idx == spec.start.index:
                aa = a + 0.05 * d
            if k == len(segs) - 1 and idx == spec.end.index:
                bb = b - 0.05 * d
            if _point_segment_distance(p, aa, bb) < 1e-9 * max(1.0, length):
                raise GeometryError("path passes through puncture %d" % idx)


def _point_segment_distance(p, a, b):
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(p - a)
    alpha = ((p - a).real * d.real + (p - a).imag * d.imag) / L2
    alpha = min(1.0, max(0.0, alpha))
    return abs(a + alpha * d - p)


def _cross2(u: complex, v: complex) -> float:
    return u.real * v.imag - u.imag * v.real


def _collinear_overlap(a1, b1, a2, b2, d1):
    """Both segments on one line: do they overlap in more than a point?"""
    e = d1 / abs(d1)
    proj = lambda z: ((z - a1) / e).real
    lo1, hi1 = sorted((proj(a1), proj(b1)))
    lo2, hi2 = sorted((proj(a2), proj(b2)))
    return min(hi1, hi2) - max(lo1, lo2) > 1e-12


def _find_arc_crossings(segs, cumlen, tangential_ok):
    """All transverse interior intersections, as (arc1, arc2, point) triples.

    With tangential_ok, parallel overlaps and endpoint touches are skipped
    instead of raising; callers that only need holonomy (which never looks at
    crossings) use this for retrace-style loops and compositions.
    """
    hits = []
    n = len(segs)
    for k1 in range(n):
        a1, b1, d1, l1 = segs[k1]
        for k2 in range(k1 + 1, n):
            a2, b2, d2, l2 = segs[k2]
            det = _cross2(d1, d2)
            if abs(det) <= PARALLEL_TOL * l1 * l2:
                # parallel: transverse crossing impossible; overlap is tangential contact
                if abs(_cross2(d1, a2 - a1)) <= PARALLEL_TOL * l1 * max(l2, abs(a2 - a1) + 1):
                    if _collinear_overlap(a1, b1, a2, b2, d1) and not tangential_ok:
                        raise GeometryError(
                            "collinear overlapping segments (tangential contact): "
                            "perturb the path by a small regular homotopy"
                        )
                continue
            rhs = a2 - a1
            alpha = _cross2(rhs, d2) / det
            beta = _cross2(rhs, d1) / det
            if not (-VERTEX_TOL <= alpha <= 1 + VERTEX_TOL and -VERTEX_TOL <= beta <= 1 + VERTEX_TOL):
                continue
            near_vertex = min(alpha, 1 - alpha) < VERTEX_TOL or min(beta, 1 - beta) < VERTEX_TOL
            if near_vertex:
                if k2 == k1 + 1 and alpha > 1 - VERTEX_TOL and beta < VERTEX_TOL:
                    continue  # shared vertex of consecutive segments
                if tangential_ok:
                    continue
                raise GeometryError(
                    "self-intersection at or extremely near a polyline vertex: "
                    "perturb the path by a small regular homotopy"
                )
            hits.append((cumlen[k1] + alpha * l1, cumlen[k2] + beta * l2, a1 + alpha * d1))
    return hits


def _build_legs(spec, segs, pin_scale=1.0):
    """Pinned-speed parameterization; returns legs plus the arc->time map."""
    vi, vj = spec.start.v, spec.end.v
    lengths = [s[3] for s in segs]
    total = sum(lengths)
    p1 = min(lengths[0] / 3.0, abs(vi) / 4.0) * pin_scale
    pM = min(lengths[-1] / 3.0, abs(vj) / 4.0) * pin_scale
    d1 = p1 / abs(vi)
    dM = pM / abs(vj)
    mid_len = total - p1 - pM
    c = mid_len / (1.0 - d1 - dM)

    # arc breakpoints and their times
    arcs = [0.0, p1]
    times = [0.0, d1]
    cum = p1
    t = d1
    pieces = []  # (arc_len, speed)
    if len(segs) == 1:
        pieces.append(lengths[0] - p1 - pM)
    else:
        pieces.append(lengths[0] - p1)
        pieces.extend(lengths[1:-1])
        pieces.append(lengths[-1] - pM)
    for L in pieces:
        cum += L
        t += L / c
        arcs.append(cum)
        times.append(t)
    arcs.append(total)
    times.append(1.0)

    # positions along the polyline at each arc breakpoint
    def pos(arc):
        k = 0
        acc = 0.0
        while k < len(segs) - 1 and arc > acc + lengths[k] + 1e-15:
            acc += lengths[k]
            k += 1
        a, b, d, L = segs[k]
        return a + d * ((arc - acc) / L)

    legs = []
    for (a0, a1), (t0, t1) in zip(zip(arcs, arcs[1:]), zip(times, times[1:])):
        if a1 - a0 <= 1e-15:
            continue
        legs.append(Leg(t0, t1, pos(a0), pos(a1)))
    return legs, arcs, times


def _arc_to_time(arc, arcs, times):
    for (a0, a1), (t0, t1) in zip(zip(arcs, arcs[1:]), zip(times, times[1:])):
        if arc <= a1 + 1e-15:
            return t0 + (t1 - t0) * (arc - a0) / (a1 - a0)
    return times[-1]


def analyze(spec: PathSpec, min_endpoint_sep: float = 1e-3, min_theta_sep: float = 1e-3,
            tangential_ok: bool = False) -> AnalyzedPath:
    """Validate geometry, pin the parameterization, extract crossings."""
    verts = spec.vertices()
    segs = _segment_data(verts)
    _check_tangency(spec, segs)
    _check_puncture_clearance(spec, segs)
    rot = rotation_number(spec)
    scale = sum(s[3] for s in segs)

    cumlen = [0.0]
    for s in segs:
        cumlen.append(cumlen[-1] + s[3])
    hits = _find_arc_crossings(segs, cumlen, tangential_ok)

    legs = arcs = times = None
    for pin_scale in (1.0, 0.93, 0.87, 0.79, 0.71):
        legs, arcs, times = _build_legs(spec, segs, pin_scale)
        boundaries = [leg.t0 for leg in legs] + [1.0]
        ok = True
        for arc1, arc2, _ in hits:
            for arc in (arc1, arc2):
                tt = _arc_to_time(arc, arcs, times)
                if any(abs(tt - b) < LEG_BOUNDARY_TOL for b in boundaries):
                    ok = False
        if ok:
            break
    if legs is None:
        raise GeometryError("could not place crossings inside constant-velocity pieces")

    crossings = []
    for arc1, arc2, point in hits:
        t = _arc_to_time(arc1, arcs, times)
        s = _arc_to_time(arc2, arcs, times)
        if t > s:
            t, s = s, t
        if (t < min_endpoint_sep or 1.0 - s < min_endpoint_sep) and not tangential_ok:
            raise GeometryError(
                "crossing too close to a tangential endpoint (parameter separation %g)" % min_endpoint_sep
            )
        vel_t = next(l for l in legs if l.t0 - 1e-15 <= t <= l.t1 + 1e-15 and l.t1 - l.t0 > 0).velocity
        vel_s = next(l for l in legs if l.t0 - 1e-15 <= s <= l.t1 + 1e-15 and l.t1 - l.t0 > 0).velocity
        im = (vel_s / vel_t).imag
        if im == 0:
            raise GeometryError("non-transverse self-intersection (parallel tangents)")
        eps = 1 if im > 0 else -1
        slope = (s - 1.0) / t
        u = vel_s * slope - vel_t
        theta = math.atan2(s - 1.0, t)
        crossings.append(Crossing(t=t, s=s, a=point, eps=eps, u=u, theta=theta))

    crossings.sort(key=lambda c: c.theta)
    if not tangential_ok:
        for c1, c2 in zip(crossings, crossings[1:]):
            if c2.theta - c1.theta < min_theta_sep:
                raise GeometryError(
                    "two crossings nearly collinear with the (t,s)=(0,1) corner; "
                    "perturb the path by a small regular homotopy "
                    "(suggested: move an interior waypoint by ~%.0e of the path scale)" % (1e-2 * scale)
                )
    return AnalyzedPath(spec, legs, crossings, rot, scale)


def compose(g1: PathSpec, g2: PathSpec, arc_points: int = 12) -> PathSpec:
    """Concatenate composable paths, inserting a clockwise half-turn detour
    beside the shared marked point.  Requires matching tangent vectors at the
    junction (composition in the regular groupoid)."""
    if g1.punctures != g2.punctures:
        raise ConfigError("paths live on different puncture sets")
    if g1.end.index != g2.start.index:
        raise GeometryError("end puncture of the first path must equal start puncture of the second")
    v = g1.end.v
    if abs(v - g2.start.v) > 1e-12 * abs(v):
        raise GeometryError("junction tangent vectors must coincide")
    zc = g1.punctures[g1.end.index]
    vhat = v / abs(v)

    w2 = list(g2.waypoints)
    # make sure the offset first waypoint is followed by an on-path vertex
    if not w2:
        w2 = [(zc + g2.punctures[g2.end.index]) / 2.0]
    if len(w2) == 1:
        w2.append((w2[0] + g2.punctures[g2.end.index]) / 2.0)

    prev = g1.waypoints[-1] if g1.waypoints else g1.punctures[g1.start.index]
    l_last1 = abs(zc - prev)
    l_first2 = abs(w2[0] - zc)
    clear = min(
        (abs(p - zc) for k, p in enumerate(g1.punctures) if k != g1.end.index),
        default=l_last1,
    )
    r = 0.25 * min(l_last1, l_first2, clear)
    rho = 0.1 * r

    A = zc + r * vhat
    center = A + 1j * rho * vhat
    phi = cmath.phase(vhat)
    arc = []
    for k in range(arc_points + 1):
        psi = (phi - math.pi / 2.0) - math.pi * k / arc_points
        arc.append(center + rho * cmath.exp(1j * psi))
    # arc[0] == A, arc[-1] == A + 2i*rho*vhat up to rounding; use exact anchors
    arc[0] = A
    arc[-1] = A + 2j * rho * vhat

    offset_w2 = w2[0] + 2j * rho * vhat
    waypoints = list(g1.waypoints) + arc + [offset_w2] + w2[1:]
    return PathSpec(g1.punctures, g1.start, g2.end, waypoints)


# ---- JSON interface ---------------------------------------------------------

def path_to_json(spec: PathSpec) -> dict:
    return {
        "punctures": [[p.real, p.imag] for p in spec.punctures],
        "start": {"index": spec.start.index, "v": [spec.start.v.real, spec.start.v.imag]},
        "end": {"index": spec.end.index, "v": [spec.end.v.real, spec.end.v.imag]},
        "waypoints": [[w.real, w.imag] for w in spec.waypoints],
    }


def path_from_json(obj: dict) -> PathSpec:
    try:
        punctures = [complex(p[0], p[1]) for p in obj["punctures"]]
        start = TangentialPoint(int(obj["start"]["index"]), complex(obj["start"]["v"][0], obj["start"]["v"][1]))
        end = TangentialPoint(int(obj["end"]["index"]), complex(obj["end"]["v"][0], obj["end"]["v"][1]))
        waypoints = [complex(w[0], w[1]) for w in obj.get("waypoints", [])]
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise ConfigError("malformed path JSON: %s" % e) from None
    return PathSpec(punctures, start, end, waypoints)
