"""Shared test geometry and helpers."""

import pytest

from kzhol.errors import GeometryError
from kzhol.holonomy import EngineConfig
from kzhol.paths import PathSpec, TangentialPoint, analyze


def straight_spec():
    """The droit chemin between punctures 0 and 1 (the associator path)."""
    return PathSpec([0.0, 1.0], TangentialPoint(0, 1.0), TangentialPoint(1, -1.0), [])


def figure_eight_spec():
    """One transverse crossing (eps = +1), rot != 0, |v_j| != |v_i|."""
    wps = [0.4 + 0.35j, 0.75 + 0.45j, 0.7 - 0.25j, 0.25 - 0.15j, 0.3 + 0.55j, 1.3 + 0.8j]
    vi, vj = wps[0], wps[-1] - 1.0
    return PathSpec([0.0, 1.0],
                    TangentialPoint(0, vi / abs(vi) * 0.9),
                    TangentialPoint(1, vj / abs(vj) * 1.1),
                    wps)


def figure_eight_b_spec():
    """A second one-crossing path with different geometry and eps = -1."""
    wps = [0.35 - 0.4j, 0.8 - 0.5j, 0.75 + 0.3j, 0.2 + 0.2j, 0.32 - 0.6j, 1.25 - 0.85j]
    vi, vj = wps[0], wps[-1] - 1.0
    return PathSpec([0.0, 1.0],
                    TangentialPoint(0, vi / abs(vi) * 1.2),
                    TangentialPoint(1, vj / abs(vj) * 0.7),
                    wps)


def two_crossing_spec():
    wps = [0.3315 + 0.7989j, 0.4732 + 0.8389j, 1.6435 + 0.0236j,
           1.1617 - 0.3425j, 0.0413 + 1.0888j, -0.0524 - 0.4049j]
    vi, vj = wps[0], wps[-1] - 1.0
    return PathSpec([0.0, 1.0],
                    TangentialPoint(0, vi / abs(vi)),
                    TangentialPoint(1, vj / abs(vj)),
                    wps)


def ccw_loop_spec():
    """Counter-clockwise loop at a single puncture with v_i = v_j = 1;
    the end ray retraces the start ray (tangential contact)."""
    wps = [1.0, 1 + 1.2j, -1 + 1.2j, -1 - 1.2j, 1 - 1.2j, 0.45]
    return PathSpec([0.0], TangentialPoint(0, 1.0), TangentialPoint(0, 1.0), wps)


def random_path_spec(rng, punctures, i, j, n_wp=4, v_start=None, box=1.6, clearance=0.18):
    """Random polyline from puncture i to puncture j; retries internally until
    the geometry passes analysis (tangential contacts allowed)."""
    punctures = [complex(p) for p in punctures]
    zi, zj = punctures[i], punctures[j]
    for _ in range(300):
        wps = []
        if v_start is not None:
            wps.append(zi + v_start / abs(v_start) * float(rng.uniform(0.25, 0.6)))
        for _ in range(n_wp):
            w = complex(rng.uniform(-box, box), rng.uniform(-box, box))
            wps.append(w)
        if any(min(abs(w - p) for p in punctures) < clearance for w in wps):
            continue
        if any(abs(a - b) < 0.05 for a, b in zip(wps, wps[1:])):
            continue
        vi = v_start if v_start is not None else (wps[0] - zi) * float(rng.uniform(0.5, 1.5))
        vj = (wps[-1] - zj) * float(rng.uniform(0.5, 1.5))
        try:
            spec = PathSpec(punctures, TangentialPoint(i, vi), TangentialPoint(j, vj), wps)
            analyze(spec, tangential_ok=True)
            return spec
        except GeometryError:
            continue
    raise RuntimeError("could not generate a valid random path")


def random_composable_pair(rng, punctures=(0.0, 1.0)):
    """Two paths with matching junction tangential point (z_1, v)."""
    g1 = random_path_spec(rng, punctures, 0, 1, n_wp=3)
    g2 = random_path_spec(rng, punctures, 1, 0, n_wp=3, v_start=g1.end.v)
    return g1, g2


@pytest.fixture(scope="session")
def cfg3():
    return EngineConfig(degree=3)
