"""Two-moving-point holonomy along the crossing lines.

For a self-intersection gamma(t_l) = gamma(s_l) the relevant curve is the
pullback lambda(t) = (gamma(t), gamma(sigma_l(t))), sigma_l(t) = 1 + slope*t,
running from the corner (t,s) = (0,1) to the crossing.  Both endpoints are
regular singular points of the pulled-back connection: the corner carries the
combined residue of the two tangential charts and the crossing carries the
diagonal generator.  The conjugating factor C_l is the ratio of the two
normalized Frobenius solutions continued along the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dkalgebra import DKAlgebra
from .errors import ConfigError, GeometryError
from .holonomy import (
    TWO_PI_I,
    EngineConfig,
    FrobeniusSolution,
    TransportLeg,
    TransportTerm,
    transport,
)
from .paths import AnalyzedPath
from .series import TruncatedSeries


@dataclass(frozen=True)
class PairConnection:
    """A_{z,w} over t_{n+2}: one letter per (puncture, moving point) pair plus
    the diagonal letter t[z,w]."""

    punctures: tuple
    alg: DKAlgebra
    z_gens: tuple
    w_gens: tuple
    zw_gen: int


def pair_connection(punctures) -> PairConnection:
    punctures = tuple(complex(p) for p in punctures)
    n = len(punctures)
    alg = DKAlgebra([str(k) for k in range(1, n + 1)] + ["z", "w"])
    z_gens = tuple(alg.gen_id(str(k), "z") for k in range(1, n + 1))
    w_gens = tuple(alg.gen_id(str(k), "w") for k in range(1, n + 1))
    return PairConnection(punctures, alg, z_gens, w_gens, alg.gen_id("z", "w"))


@dataclass
class LineProblem:
    """Geometry of one crossing line, in the pinned path parameterization."""

    conn: PairConnection
    path: AnalyzedPath
    index: int  # crossing index, 0-based

    def __post_init__(self):
        spec = self.path.spec
        if spec.start.index == spec.end.index:
            raise GeometryError(
                "crossing-line analysis requires distinct start and end punctures "
                "(the corner normalization uses their commuting residues)"
            )
        if not 0 <= self.index < len(self.path.crossings):
            raise ConfigError("crossing index out of range")
        self.crossing = self.path.crossings[self.index]
        self.slope = self.crossing.sigma_slope  # (s_l - 1)/t_l < 0

    def sigma(self, t: float) -> float:
        return 1.0 + self.slope * t

    def transport_legs(self, t_from: float, t_to: float):
        """Pullback-connection legs on [t_from, t_to] subset (0, t_l)."""
        conn, path = self.conn, self.path
        slope = self.slope
        cuts = {t_from, t_to}
        for leg in path.legs:
            for b in (leg.t0, leg.t1):
                if t_from < b < t_to:
                    cuts.add(b)
                pre = (b - 1.0) / slope  # sigma(pre) == b
                if t_from < pre < t_to:
                    cuts.add(pre)
        cuts = sorted(cuts)
        legs = []
        for a, b in zip(cuts, cuts[1:]):
            mid = 0.5 * (a + b)
            z0, vz = path.point(a), path.velocity(mid)
            w0, vw = path.point(self.sigma(a)), path.velocity(self.sigma(mid)) * slope
            terms = [
                TransportTerm(conn.z_gens[k], z0 - conn.punctures[k], vz)
                for k in range(len(conn.punctures))
            ]
            terms += [
                TransportTerm(conn.w_gens[k], w0 - conn.punctures[k], vw)
                for k in range(len(conn.punctures))
            ]
            terms.append(TransportTerm(conn.zw_gen, w0 - z0, vw - vz))
            legs.append(TransportLeg(a, b, tuple(terms)))
        return legs


def corner_solution(problem: LineProblem, degree: int) -> FrobeniusSolution:
    """Frobenius solution at t=0 matching the corner-normalized two-point
    solution on the line: h(t) t^{(t_iz + t_wj)/2 pi i} ((1-s_l)/t_l)^{t_wj/2 pi i}."""
    conn, path = problem.conn, problem.path
    spec = path.spec
    i, j = spec.start.index, spec.end.index
    vi = spec.start.v
    vw = -problem.slope * spec.end.v  # d/dt gamma(sigma(t)) at t=0
    zi, zj = conn.punctures[i], conn.punctures[j]
    cat = conn.alg.cat

    pairs = []  # analytic letters as (gen, c, e): Taylor of e/(2 pi i (c + e t))
    for k in range(len(conn.punctures)):
        if k != i:
            pairs.append((conn.z_gens[k], zi - conn.punctures[k], vi))
        if k != j:
            pairs.append((conn.w_gens[k], zj - conn.punctures[k], vw))
    pairs.append((conn.zw_gen, zj - zi, vw - vi))

    def coeff(m):
        out = []
        for g, c, e in pairs:
            out.append((g, (e / (TWO_PI_I * c)) * (-e / c) ** m))
        return out

    radius = min(abs(c / e) for _, c, e in pairs if e != 0)
    chart = min(path.legs[0].t1, (1.0 - path.legs[-1].t0) / (-problem.slope))
    radius = min(radius, chart)

    residue = TruncatedSeries(cat, degree, {
        (conn.z_gens[i],): 1.0 / TWO_PI_I,
        (conn.w_gens[j],): 1.0 / TWO_PI_I,
    })
    scale = -problem.slope  # (1 - s_l)/t_l > 0
    right = TruncatedSeries(cat, degree, {
        (conn.w_gens[j],): math.log(scale) / TWO_PI_I,
    }).exp()
    return FrobeniusSolution(cat, degree, residue, coeff, radius, right_factor=right)


def crossing_solution(problem: LineProblem, side: str, degree: int) -> FrobeniusSolution:
    """Frobenius solution at the crossing, in tau = t_l - t, with leading factor
    ((w-z)/(-u_l))^{t_zw/2 pi i} = tau^{t_zw/2 pi i} and the half-shift
    exp(+eps t_zw/2) (side='up') or exp(-eps t_zw/2) (side='down')."""
    if side not in ("up", "down"):
        raise ConfigError("side must be 'up' or 'down'")
    conn, path, cr = problem.conn, problem.path, problem.crossing
    cat = conn.alg.cat
    vz = path.velocity(cr.t)
    vw = path.velocity(cr.s) * problem.slope
    pairs = []
    for k in range(len(conn.punctures)):
        pairs.append((conn.z_gens[k], cr.a - conn.punctures[k], -vz))
        pairs.append((conn.w_gens[k], cr.a - conn.punctures[k], -vw))
    # diagonal letter: w - z = -u_l tau exactly on the linear charts: pure pole

    def coeff(m):
        out = []
        for g, c, e in pairs:
            out.append((g, (e / (TWO_PI_I * c)) * (-e / c) ** m))
        return out

    radius = min(abs(c / e) for _, c, e in pairs if e != 0)
    leg_t = path._leg_at(cr.t)
    leg_s = path._leg_at(cr.s)
    chart = min(cr.t - leg_t.t0, (leg_s.t1 - cr.s) / (-problem.slope))
    radius = min(radius, chart)

    residue = TruncatedSeries(cat, degree, {(conn.zw_gen,): 1.0 / TWO_PI_I})
    shift = 0.5 * cr.eps if side == "up" else -0.5 * cr.eps
    right = TruncatedSeries(cat, degree, {(conn.zw_gen,): shift}).exp()
    return FrobeniusSolution(cat, degree, residue, coeff, radius, right_factor=right)


def compute_Cl(conn: PairConnection, path: AnalyzedPath, index: int, cfg: EngineConfig) -> TruncatedSeries:
    """C_l = Psi_{a_l,d}^{-1} Psi_{5,l}: corner solution transported along the
    line, matched against the down-shifted crossing solution."""
    problem = LineProblem(conn, path, index)
    cr = problem.crossing
    D = cfg.degree
    corner = corner_solution(problem, D)
    cross = crossing_solution(problem, "down", D)
    delta0 = min(cfg.line_offset_frac * cr.t, cfg.eval_radius_fraction * corner.radius)
    delta1 = min(cfg.line_offset_frac * cr.t, cfg.eval_radius_fraction * cross.radius)
    start = corner.evaluate(delta0, cfg)
    legs = problem.transport_legs(delta0, cr.t - delta1)
    v5 = transport(conn.alg.cat, D, legs, start, cfg)
    down = cross.evaluate(delta1, cfg)
    return down.inverse() * v5


def crossing_factor(conn: PairConnection, C: TruncatedSeries, eps: int) -> TruncatedSeries:
    """C^{-1} exp(-eps t_zw) C."""
    expo = TruncatedSeries(C.cat, C.degree, {(conn.zw_gen,): -float(eps)}).exp()
    return C.inverse() * expo * C
