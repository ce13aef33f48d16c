import math

import numpy as np
import pytest

from conftest import (
    ccw_loop_spec,
    figure_eight_spec,
    random_path_spec,
    straight_spec,
    two_crossing_spec,
)
from kzhol.errors import ConfigError, GeometryError
from kzhol.paths import (
    Crossing,
    PathSpec,
    TangentialPoint,
    analyze,
    compose,
    path_from_json,
    path_to_json,
    rotation_number,
    vratio,
)


# ---------------------------------------------------------------------------
# independent crossing oracle: same problem, different formulation (matrix
# solve on the affine system instead of cross-product ratios)
# ---------------------------------------------------------------------------

def oracle_crossings(vertices):
    out = []
    segs = list(zip(vertices, vertices[1:]))
    for k1 in range(len(segs)):
        for k2 in range(k1 + 1, len(segs)):
            (a1, b1), (a2, b2) = segs[k1], segs[k2]
            d1, d2 = b1 - a1, b2 - a2
            M = np.array([[d1.real, -d2.real], [d1.imag, -d2.imag]])
            if abs(np.linalg.det(M)) < 1e-12 * abs(d1) * abs(d2):
                continue
            rhs = np.array([(a2 - a1).real, (a2 - a1).imag])
            al, be = np.linalg.solve(M, rhs)
            if 1e-9 < al < 1 - 1e-9 and 1e-9 < be < 1 - 1e-9:
                out.append((k1, al, k2, be, a1 + al * d1))
    return out


def test_straight_path_no_crossings():
    ap = analyze(straight_spec())
    assert ap.crossings == []
    assert abs(ap.rot) <= 1e-12
    assert abs(ap.vratio - 1.0) <= 1e-12


def test_figure_eight_against_oracle():
    spec = figure_eight_spec()
    ap = analyze(spec)
    ora = oracle_crossings(spec.vertices())
    assert len(ap.crossings) == len(ora) == 1
    c = ap.crossings[0]
    assert abs(c.a - ora[0][4]) <= 1e-12
    assert abs(ap.point(c.t) - ap.point(c.s)) <= 1e-12
    assert c.eps == 1
    # sign formula: eps = sign Im(velocity(s)/velocity(t))
    assert c.eps == (1 if (ap.velocity(c.s) / ap.velocity(c.t)).imag > 0 else -1)
    # u_l = d/dt (gamma(sigma(t)) - gamma(t)) at t_l, via finite differences
    h = 1e-7
    sig = lambda t: 1.0 + c.sigma_slope * t

    def diff(t):
        return ap.point(sig(t)) - ap.point(t)

    u_fd = (diff(c.t + h) - diff(c.t - h)) / (2 * h)
    assert abs(u_fd - c.u) <= 1e-5 * abs(c.u)


def test_random_polylines_match_oracle():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(40):
        spec = random_path_spec(rng, [0.0, 1.0], 0, 1, n_wp=5)
        try:
            ap = analyze(spec)
        except GeometryError:
            continue
        ora = oracle_crossings(spec.vertices())
        assert len(ap.crossings) == len(ora)
        got = sorted((c.a for c in ap.crossings), key=lambda z: (z.real, z.imag))
        want = sorted((o[4] for o in ora), key=lambda z: (z.real, z.imag))
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-9
        checked += 1
    assert checked >= 10


def test_figure_eight_sign_example():
    # crossing branches with directions +1 (horizontal) and +i (vertical):
    # eps = sign Im(i/1) = +1
    wps = [1.0, 1.25 - 0.5j, 0.75 - 0.25j, 0.75 + 0.5j, 1.5 + 0.5j]
    spec = PathSpec([0.0, 2.0],
                    TangentialPoint(0, 1.0),
                    TangentialPoint(1, wps[-1] - 2.0),
                    wps)
    ap = analyze(spec)
    assert len(ap.crossings) == 1
    c = ap.crossings[0]
    assert abs(c.a - 0.75) <= 1e-12
    assert c.eps == 1
    assert abs(ap.velocity(c.t).imag) <= 1e-12      # horizontal first branch
    assert abs(ap.velocity(c.s).real) <= 1e-12      # vertical second branch


def test_sigma_line_arithmetic():
    c = Crossing(t=0.3, s=0.8, a=0j, eps=1, u=1.0, theta=math.atan2(-0.2, 0.3))
    assert abs(c.sigma_slope - (-2.0 / 3.0)) <= 1e-15


def test_rotation_congruence_and_invariances():
    rng = np.random.default_rng(4)
    for _ in range(20):
        spec = random_path_spec(rng, [0.0, 1.0], 0, 1, n_wp=4)
        rot = rotation_number(spec)
        phi_i = math.atan2(spec.start.v.imag, spec.start.v.real)
        phi_j = math.atan2(spec.end.v.imag, spec.end.v.real)
        frac = rot - 0.5 - (phi_j - phi_i) / (2 * math.pi)
        assert abs(frac - round(frac)) <= 1e-9
    # refinement invariance: insert a collinear midpoint
    spec = figure_eight_spec()
    ap = analyze(spec)
    wps = list(spec.waypoints)
    mid = 0.5 * (wps[1] + wps[2])
    refined = PathSpec(spec.punctures, spec.start, spec.end, wps[:2] + [mid] + wps[2:])
    ar = analyze(refined)
    assert abs(ar.rot - ap.rot) <= 1e-9
    assert len(ar.crossings) == len(ap.crossings)
    assert ar.crossings[0].eps == ap.crossings[0].eps
    assert abs(ar.crossings[0].a - ap.crossings[0].a) <= 1e-9
    # small waypoint perturbation that does not change the crossing pattern
    wps2 = list(spec.waypoints)
    wps2[1] += 0.003 - 0.002j
    ap2 = analyze(PathSpec(spec.punctures, spec.start, spec.end, wps2))
    assert abs(ap2.rot - ap.rot) <= 1e-9


def test_crossings_sorted_and_separated():
    ap = analyze(two_crossing_spec())
    assert len(ap.crossings) == 2
    assert ap.crossings[0].theta < ap.crossings[1].theta
    with pytest.raises(GeometryError, match="collinear with the"):
        analyze(two_crossing_spec(), min_theta_sep=10.0)
    with pytest.raises(GeometryError, match="too close to a tangential endpoint"):
        analyze(two_crossing_spec(), min_endpoint_sep=0.5)


def test_geometry_errors():
    # segment passing exactly through an earlier vertex
    wps = [0.3 + 0.3j, 0.8 + 0.2j, 0.1 + 0.5j, 0.5 + 0.1j]
    with pytest.raises(GeometryError, match="vertex"):
        analyze(PathSpec([0.0, 1.0], TangentialPoint(0, wps[0]),
                         TangentialPoint(1, wps[-1] - 1.0), wps))
    # reversal at a vertex
    with pytest.raises(GeometryError, match="reverses"):
        rotation_number(PathSpec([0.0, 1.0], TangentialPoint(0, 1.0),
                                 TangentialPoint(1, 1.0), [0.5, 0.25, 0.5 + 0.0j, 1.5]))
    # tangent vector not aligned with the first segment
    with pytest.raises(GeometryError, match="start tangent"):
        analyze(PathSpec([0.0, 1.0], TangentialPoint(0, 1j), TangentialPoint(1, -1.0), [0.5]))
    # collinear overlap is an error unless tangential contacts are allowed
    loop = ccw_loop_spec()
    with pytest.raises(GeometryError):
        analyze(loop)
    assert analyze(loop, tangential_ok=True).crossings == []
    # path through a puncture
    with pytest.raises(GeometryError, match="puncture"):
        analyze(PathSpec([0.0, 1.0, 0.5], TangentialPoint(0, 1j),
                         TangentialPoint(1, 1j), [1j, 0.5 + 1j, 0.5 - 0.0j, 1 - 1j, 1 + 1j]))


def test_loop_rotation():
    ap = analyze(ccw_loop_spec(), tangential_ok=True)
    # tangent phases are equal, so rot is a half-integer
    assert abs(ap.rot - round(ap.rot - 0.5) - 0.5) <= 1e-12


def test_compose_rotation_bookkeeping():
    rng = np.random.default_rng(5)
    from conftest import random_composable_pair

    for _ in range(5):
        g1, g2 = random_composable_pair(rng)
        comp = compose(g1, g2)
        r1, r2 = rotation_number(g1), rotation_number(g2)
        rc = rotation_number(comp)
        assert abs(rc - (r1 + r2 - 0.5)) <= 1e-9
    with pytest.raises(GeometryError, match="tangent vectors"):
        compose(g1, PathSpec(g2.punctures, TangentialPoint(1, g1.end.v * 1.5), g2.end, g2.waypoints))
    with pytest.raises(GeometryError, match="puncture"):
        compose(g1, PathSpec(g1.punctures, TangentialPoint(0, 1.0), TangentialPoint(1, -1.0), [0.3 + 0.4j]))


def test_vratio_and_json_roundtrip():
    spec = figure_eight_spec()
    assert abs(vratio(spec) - 1.1 / 0.9) <= 1e-12
    back = path_from_json(path_to_json(spec))
    assert back.punctures == spec.punctures
    assert back.waypoints == spec.waypoints
    assert back.start == spec.start and back.end == spec.end
    with pytest.raises(ConfigError):
        path_from_json({"punctures": [[0, 0]]})
