"""Regularized holonomy engine for the one-moving-point KZ connection.

Local solutions at tangential base points come from the Frobenius recursion
f_k = (k - ad_R)^{-1} g_{k-1} at the regular singular point (the inverse is a
finite Neumann sum because ad_R raises word degree).  Transport solves the
degree-graded hierarchy d/dt Psi^(d) = A(t) Psi^(d-1) panel by panel, with the
connection coefficients interpolated by Chebyshev polynomials per panel so the
iterated integrals reduce to exact polynomial antiderivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import ConfigError, NumericsError
from .paths import AnalyzedPath, Leg, TangentialPoint
from .series import GeneratorCatalogue, TruncatedSeries

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class EngineConfig:
    degree: int = 3                  # series truncation D
    expansion_order: int = 12        # initial local expansion order K
    max_expansion_order: int = 200
    quad_order: int = 16             # interpolation points per transport panel
    max_panel_frac: float = 0.05     # panel length cap, fraction of total parameter length
    panel_safety: float = 0.5        # panel length <= safety * distance to nearest pole
    eval_radius_fraction: float = 0.2
    local_tol: float = 1e-11         # tail target for local expansions
    line_offset_frac: float = 1e-2   # delta_0, delta_1 offsets on crossing lines
    tolerance: float = 1e-6          # pass/fail threshold for reports

    def __post_init__(self):
        if self.degree < 0 or self.expansion_order < 1 or self.quad_order < 4:
            raise ConfigError("degree, expansion_order, quad_order out of range")
        if not 0 < self.eval_radius_fraction <= 0.5:
            raise ConfigError("eval_radius_fraction must be in (0, 0.5]")
        for name in ("max_panel_frac", "panel_safety", "local_tol", "line_offset_frac", "tolerance"):
            if getattr(self, name) <= 0:
                raise ConfigError("%s must be positive" % name)

    def config_key(self) -> dict:
        return {
            "degree": self.degree,
            "expansion_order": self.expansion_order,
            "quad_order": self.quad_order,
            "max_panel_frac": self.max_panel_frac,
            "panel_safety": self.panel_safety,
            "eval_radius_fraction": self.eval_radius_fraction,
            "local_tol": self.local_tol,
            "line_offset_frac": self.line_offset_frac,
        }


@dataclass(frozen=True)
class PointConnection:
    """A = (1/2 pi i) sum_k g_k dlog(z - z_k), letters g_k in a free alphabet."""

    punctures: tuple
    cat: GeneratorCatalogue
    gens: tuple  # generator id per puncture

    def __post_init__(self):
        if len(set(self.gens)) != len(self.gens):
            raise ConfigError("generator assignment must be injective")
        if len(self.gens) != len(self.punctures):
            raise ConfigError("one generator per puncture required")


def free_connection(punctures, cat: GeneratorCatalogue | None = None, point: str = "z") -> PointConnection:
    from .dkalgebra import moving_point_catalogue

    punctures = tuple(complex(p) for p in punctures)
    if cat is None:
        cat = moving_point_catalogue(len(punctures), point)
    return PointConnection(punctures, cat, tuple(range(len(punctures))))


# ---------------------------------------------------------------------------
# Frobenius solutions at regular singular points
# ---------------------------------------------------------------------------

class FrobeniusSolution:
    """Solution f(x) * exp(R log x) * M of d Psi/dx = (R/x + B(x)) Psi.

    R is a degree-1 element (residue already divided by 2 pi i); B is analytic
    at x = 0 with Taylor coefficients B_m = sum_g coeff * (left mult by g).
    M is an optional constant right factor fixed by asymptotic matching.
    """

    def __init__(self, cat, degree, residue: TruncatedSeries, analytic_coeff, radius: float,
                 right_factor: TruncatedSeries | None = None):
        self.cat = cat
        self.degree = degree
        self.residue = residue
        self._coeff = analytic_coeff       # m -> list[(gen_id, complex)]
        self.radius = radius
        self.right_factor = right_factor
        self.f = [TruncatedSeries.unit(cat, degree)]

    def _inv_k_minus_ad(self, k: int, x: TruncatedSeries) -> TruncatedSeries:
        acc = TruncatedSeries.zero(self.cat, self.degree)
        term = x.scaled(1.0 / k)
        R = self.residue
        while term.terms:
            acc = acc + term
            term = (R * term - term * R).scaled(1.0 / k)
        return acc

    def extend(self, order: int):
        while len(self.f) <= order:
            k = len(self.f)
            rhs = TruncatedSeries.zero(self.cat, self.degree)
            for m in range(k):
                fk = self.f[k - 1 - m]
                for g, c in self._coeff(m):
                    rhs = rhs + fk.left_mul_gen(g, c)
            self.f.append(self._inv_k_minus_ad(k, rhs))

    def evaluate(self, x: float, cfg: EngineConfig) -> TruncatedSeries:
        """Value on the outgoing ray (x real, 0 < x < radius; log branch real)."""
        if not 0 < x < self.radius:
            raise NumericsError("evaluation point %g outside convergence radius %g" % (x, self.radius))
        self.extend(cfg.expansion_order)
        K = cfg.expansion_order
        while True:
            tail = max(self.f[K].max_abs() * x ** K, self.f[K - 1].max_abs() * x ** (K - 1))
            if tail < cfg.local_tol:
                break
            if K >= cfg.max_expansion_order:
                raise NumericsError(
                    "local expansion did not reach %.1e at x=%g (K=%d, tail ~ %.1e); "
                    "reduce eval_radius_fraction" % (cfg.local_tol, x, K, tail)
                )
            K += 10
            self.extend(K)
        F = TruncatedSeries.zero(self.cat, self.degree)
        for k in range(K, -1, -1):
            F = F + self.f[k].scaled(x ** k)
        out = F * self.residue.scaled(math.log(x)).exp()
        if self.right_factor is not None:
            out = out * self.right_factor
        return out


def local_solution(conn: PointConnection, base: TangentialPoint, degree: int) -> FrobeniusSolution:
    """Tangential solution f(w) w^{g_i/2 pi i} in the chart w = (z - z_i)/v_i."""
    i, v = base.index, base.v
    if not 0 <= i < len(conn.punctures):
        raise ConfigError("base puncture not in connection")
    zi = conn.punctures[i]
    others = [(conn.gens[j], conn.punctures[j]) for j in range(len(conn.punctures)) if j != i]

    def coeff(m):
        out = []
        for g, zj in others:
            # Taylor of v/(2 pi i (z_i + v w - z_j)) around w = 0
            base_c = v / (TWO_PI_I * (zi - zj))
            out.append((g, base_c * (-v / (zi - zj)) ** m))
        return out

    radius = min((abs(zj - zi) for _, zj in others), default=math.inf) / abs(v)
    residue = TruncatedSeries(conn.cat, degree, {(conn.gens[i],): 1.0 / TWO_PI_I})
    return FrobeniusSolution(conn.cat, degree, residue, coeff, radius)


def evaluate_local(sol: FrobeniusSolution, w: float, cfg: EngineConfig) -> TruncatedSeries:
    return sol.evaluate(w, cfg)


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportTerm:
    gen: int
    p0: complex  # log argument at leg start
    dp: complex  # its t-derivative


@dataclass(frozen=True)
class TransportLeg:
    t0: float
    t1: float
    terms: tuple


def point_connection_legs(conn: PointConnection, legs) -> list:
    out = []
    for leg in legs:
        vel = leg.velocity
        terms = tuple(
            TransportTerm(conn.gens[k], leg.z0 - conn.punctures[k], vel)
            for k in range(len(conn.punctures))
        )
        out.append(TransportLeg(leg.t0, leg.t1, terms))
    return out


def _pole_distance(leg: TransportLeg, a: float, b: float) -> float:
    dist = math.inf
    for term in leg.terms:
        if term.dp == 0:
            continue
        pole = leg.t0 - term.p0 / term.dp
        x, y = pole.real, pole.imag
        if a <= x <= b:
            d = abs(y)
        else:
            d = min(abs(pole - a), abs(pole - b))
        dist = min(dist, d)
    return dist


def _panels(leg: TransportLeg, max_len: float, cfg: EngineConfig, floor: float):
    out = []
    stack = [(leg.t0, leg.t1)]
    while stack:
        a, b = stack.pop()
        if b - a <= floor:
            raise NumericsError("panel refinement collapsed; path passes too close to a singularity")
        dist = _pole_distance(leg, a, b)
        if (b - a) > max_len or (b - a) > cfg.panel_safety * dist:
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
        else:
            out.append((a, b))
    out.sort()
    return out


def _transport_panel(cat, degree, leg: TransportLeg, a: float, b: float,
                     val: TruncatedSeries, cfg: EngineConfig) -> TruncatedSeries:
    Q = cfg.quad_order
    xs = cheb.chebpts1(Q)
    jac = 0.5 * (b - a)
    ts = 0.5 * (a + b) + jac * xs
    letters = []
    for term in leg.terms:
        if term.dp == 0:
            continue
        q = term.p0 + term.dp * (ts - leg.t0)
        vals = jac * term.dp / (TWO_PI_I * q)
        letters.append((term.gen, cheb.chebfit(xs, vals, Q - 1)))
    polys = {w: np.array([c], dtype=np.complex128) for w, c in val.terms.items()}
    for d in range(1, degree + 1):
        acc = {}
        for w, p in polys.items():
            if len(w) != d - 1:
                continue
            for g, ac in letters:
                integ = cheb.chebint(cheb.chebmul(ac, p), lbnd=-1)
                key = (g,) + w
                acc[key] = cheb.chebadd(acc[key], integ) if key in acc else integ
        for key, q in acc.items():
            polys[key] = cheb.chebadd(polys[key], q) if key in polys else q
    out = {}
    for w, p in polys.items():
        c = complex(cheb.chebval(1.0, p))
        if c != 0:
            out[w] = c
    return TruncatedSeries(cat, degree, out)


def transport(cat: GeneratorCatalogue, degree: int, legs, start: TruncatedSeries,
              cfg: EngineConfig) -> TruncatedSeries:
    """Parallel transport of `start` along the given connection legs."""
    if start.cat != cat or start.degree != degree:
        raise ConfigError("start value over wrong catalogue or degree")
    total = sum(l.t1 - l.t0 for l in legs)
    if total <= 0:
        return start
    max_len = cfg.max_panel_frac * total
    floor = 1e-13 * total
    val = start
    for leg in legs:
        for a, b in _panels(leg, max_len, cfg, floor):
            val = _transport_panel(cat, degree, leg, a, b, val, cfg)
    return val


# ---------------------------------------------------------------------------
# Regularized holonomies
# ---------------------------------------------------------------------------

def _start_eval_point(sol: FrobeniusSolution, pinned_span: float, cfg: EngineConfig) -> float:
    w = cfg.eval_radius_fraction * sol.radius
    if not math.isfinite(w):
        w = 0.9 * pinned_span
    return min(w, 0.9 * pinned_span)


def hol_reg(conn: PointConnection, path: AnalyzedPath, cfg: EngineConfig) -> TruncatedSeries:
    """Hol^reg between the two tangential endpoints of an analyzed path."""
    spec = path.spec
    if spec.punctures != conn.punctures:
        raise ConfigError("path and connection have different punctures")
    D = cfg.degree
    sol_i = local_solution(conn, spec.start, D)
    sol_j = local_solution(conn, spec.end, D)
    w0 = _start_eval_point(sol_i, path.legs[0].t1, cfg)
    w1 = _start_eval_point(sol_j, 1.0 - path.legs[-1].t0, cfg)
    start_val = sol_i.evaluate(w0, cfg)
    legs = point_connection_legs(conn, path.legs_between(w0, 1.0 - w1))
    moved = transport(conn.cat, D, legs, start_val, cfg)
    end_val = sol_j.evaluate(w1, cfg)
    return end_val.inverse() * moved


def hol_to_interior(conn: PointConnection, path: AnalyzedPath, t_stop: float,
                    cfg: EngineConfig) -> TruncatedSeries:
    """Hol^reg from the tangential start to the regular point gamma(t_stop)."""
    spec = path.spec
    D = cfg.degree
    if not 0.0 < t_stop <= 1.0:
        raise ConfigError("t_stop must lie in (0, 1]")
    sol_i = local_solution(conn, spec.start, D)
    w0 = min(_start_eval_point(sol_i, path.legs[0].t1, cfg), 0.5 * t_stop)
    start_val = sol_i.evaluate(w0, cfg)
    legs = point_connection_legs(conn, path.legs_between(w0, t_stop))
    return transport(conn.cat, D, legs, start_val, cfg)


def hol_from_end_to_interior(conn: PointConnection, path: AnalyzedPath, s_stop: float,
                             cfg: EngineConfig) -> TruncatedSeries:
    """Hol^reg of the reversed tail: from the tangential end point back to gamma(s_stop)."""
    spec = path.spec
    D = cfg.degree
    if not 0.0 <= s_stop < 1.0:
        raise ConfigError("s_stop must lie in [0, 1)")
    sol_j = local_solution(conn, spec.end, D)
    w0 = min(_start_eval_point(sol_j, 1.0 - path.legs[-1].t0, cfg), 0.5 * (1.0 - s_stop))
    start_val = sol_j.evaluate(w0, cfg)
    fwd = path.legs_between(s_stop, 1.0 - w0)
    rev = [Leg(1.0 - l.t1, 1.0 - l.t0, l.z1, l.z0) for l in reversed(fwd)]
    legs = point_connection_legs(conn, rev)
    return transport(conn.cat, D, legs, start_val, cfg)
