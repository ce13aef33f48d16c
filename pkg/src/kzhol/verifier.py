"""Assembly and verification of the generalized pentagon identity.

Series backend: every factor is a truncated series over the (n+2)-strand
algebra; LHS - RHS is reduced modulo the relation ideal and reported per
degree.  Matrix backend: an independent realization sending each generator
t[a,b] to the flip of tensor factors a,b on (C^N)^{(n+2)}, with holonomies
integrated as matrix ODEs; it involves no truncation and no ideal reduction,
so it cross-checks the series pipeline end to end.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from . import dkalgebra as dk
from .associator import AssociatorTable, get_associator, phi_at
from .errors import ConfigError, GeometryError, NumericsError
from .holonomy import (
    TWO_PI_I,
    EngineConfig,
    TransportLeg,
    TransportTerm,
    free_connection,
    hol_from_end_to_interior,
    hol_reg,
    hol_to_interior,
)
from .paths import AnalyzedPath
from .pairline import LineProblem, compute_Cl, crossing_factor, pair_connection
from .series import TruncatedSeries

VRATIO_EXPONENTS = ("2pii", "2pi")
CROSSING_ORDERS = ("telescoping", "as-written")


@dataclass
class PentagonReport:
    degrees: list
    tolerance: float
    passed: bool
    factors: dict
    timings: dict
    config: dict

    def to_json(self) -> dict:
        return {
            "degrees": self.degrees,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "factors": self.factors,
            "timings": self.timings,
            "config": self.config,
        }


def _scalar_exp_factor(conn, degree, coeff) -> TruncatedSeries:
    return TruncatedSeries(conn.alg.cat, degree, {(conn.zw_gen,): coeff}).exp()


def verify_pentagon(path: AnalyzedPath, cfg: EngineConfig, *,
                    associator: AssociatorTable | None = None,
                    cache_dir: str | None = None,
                    omit_rotation_factor: bool = False,
                    omit_vratio_factor: bool = False,
                    vratio_exponent: str = "2pii",
                    crossing_order: str = "telescoping",
                    check_theorem_Cl: bool = True) -> PentagonReport:
    """Evaluate both sides of the generalized pentagon equation and report
    per-degree residuals of LHS - RHS after reduction by the relation ideal."""
    if vratio_exponent not in VRATIO_EXPONENTS:
        raise ConfigError("vratio_exponent must be one of %r" % (VRATIO_EXPONENTS,))
    if crossing_order not in CROSSING_ORDERS:
        raise ConfigError("crossing_order must be one of %r" % (CROSSING_ORDERS,))
    spec = path.spec
    n = len(spec.punctures)
    i, j = spec.start.index + 1, spec.end.index + 1
    if i == j:
        raise GeometryError("pentagon verification requires distinct endpoint punctures")
    D = cfg.degree
    timings, factors = {}, {}

    t0 = time.perf_counter()
    free = free_connection(spec.punctures)
    H = hol_reg(free, path, cfg)
    timings["holonomy"] = time.perf_counter() - t0
    factors["H_grouplike_defect"] = H.grouplike_defect()

    pconn = pair_connection(spec.punctures)
    alg = pconn.alg
    Hz = H.substituted(dk.substitution_Hz(free.cat, alg, n, i, j), alg.cat)
    Hw = H.substituted(dk.substitution_Hw(free.cat, alg, n, i, j), alg.cat)
    Hzw = H.substituted(dk.substitution_Hzw(free.cat, alg, n), alg.cat)

    t0 = time.perf_counter()
    if associator is None:
        associator = get_associator(D, cfg, cache_dir)
    timings["associator"] = time.perf_counter() - t0
    factors["phi_grouplike_defect"] = associator.series.grouplike_defect()

    t_zw = alg.gen_id("z", "w")
    t_wj = alg.gen_id(str(j), "w")
    t_iz = alg.gen_id(str(i), "z")
    phi_left = phi_at(associator, t_zw, t_wj, alg.cat)
    phi_right = phi_at(associator, t_iz, t_zw, alg.cat)

    one = TruncatedSeries.unit(alg.cat, D)
    if omit_vratio_factor:
        vr_factor = one
    else:
        denom = TWO_PI_I if vratio_exponent == "2pii" else 2.0 * math.pi
        vr_factor = _scalar_exp_factor(pconn, D, math.log(path.vratio) / denom)
    rot_factor = one if omit_rotation_factor else _scalar_exp_factor(pconn, D, path.rot)

    lhs = phi_left * Hzw * vr_factor * rot_factor * phi_right

    t0 = time.perf_counter()
    cls = [compute_Cl(pconn, path, l, cfg) for l in range(len(path.crossings))]
    timings["crossing_factors"] = time.perf_counter() - t0
    factors["C_grouplike_defects"] = [c.grouplike_defect() for c in cls]
    factors["C_degree1_tzw"] = [[c.coeff((t_zw,)).real, c.coeff((t_zw,)).imag] for c in cls]

    middle = one
    order = range(len(cls) - 1, -1, -1) if crossing_order == "telescoping" else range(len(cls))
    for l in order:
        middle = middle * crossing_factor(pconn, cls[l], path.crossings[l].eps)
    rhs = Hz * middle * Hw

    factors["lhs_grouplike_defect"] = lhs.grouplike_defect()
    factors["rhs_grouplike_defect"] = rhs.grouplike_defect()

    t0 = time.perf_counter()
    basis = alg.ideal_basis(D, cache_dir=cache_dir)
    residual = basis.reduce(lhs - rhs)
    timings["reduction"] = time.perf_counter() - t0
    degrees = residual.max_abs_by_degree()

    if check_theorem_Cl and path.crossings:
        t0 = time.perf_counter()
        factors["theorem_Cl_residuals"] = verify_theorem_Cl(path, cfg, pconn=pconn, cls=cls)
        timings["theorem_Cl"] = time.perf_counter() - t0

    passed = bool(max(degrees) <= cfg.tolerance)
    return PentagonReport(degrees, cfg.tolerance, passed, factors, timings,
                          {**cfg.config_key(), "vratio_exponent": vratio_exponent,
                           "crossing_order": crossing_order,
                           "omit_rotation_factor": omit_rotation_factor,
                           "omit_vratio_factor": omit_vratio_factor})


def verify_theorem_Cl(path: AnalyzedPath, cfg: EngineConfig, *,
                      pconn=None, cls=None) -> list:
    """Residuals of pi(C_l) = Hol(pi(A_z), gamma_[0,t_l]) Hol(pi(A_w), gamma_[1,s_l])."""
    spec = path.spec
    n = len(spec.punctures)
    if pconn is None:
        pconn = pair_connection(spec.punctures)
    if cls is None:
        cls = [compute_Cl(pconn, path, l, cfg) for l in range(len(path.crossings))]
    tau = dk.tau_catalogue(n)
    free = free_connection(spec.punctures)
    into_z = {k: [(tau.id_of(dk.pair_label(str(k + 1), "z")), 1.0)] for k in range(n)}
    into_w = {k: [(tau.id_of(dk.pair_label(str(k + 1), "w")), 1.0)] for k in range(n)}
    out = []
    for l, cr in enumerate(path.crossings):
        proj = dk.projection_pi(cls[l], pconn.alg, n, tau)
        hz = hol_to_interior(free, path, cr.t, cfg).substituted(into_z, tau)
        hw = hol_from_end_to_interior(free, path, cr.s, cfg).substituted(into_w, tau)
        prod = dk.tau_canonical(hz * hw, n)
        out.append((proj - prod).max_abs())
    return out


# ---------------------------------------------------------------------------
# matrix representation backend
# ---------------------------------------------------------------------------

class MatrixRep:
    """t[a,b] -> flip of tensor factors a,b on (C^N)^{tensor m}."""

    def __init__(self, alg: dk.DKAlgebra, N: int):
        if N < 2:
            raise ConfigError("matrix backend needs N >= 2")
        self.alg = alg
        self.N = N
        self.m = len(alg.strands)
        self.dim = N ** self.m
        self._gens = [self._flip(*alg.pairs[g]) for g in range(len(alg.cat))]

    def _flip(self, a: int, b: int) -> np.ndarray:
        dim, N, m = self.dim, self.N, self.m
        P = np.zeros((dim, dim))
        for idx in range(dim):
            digits = [(idx // N ** (m - 1 - p)) % N for p in range(m)]
            digits[a], digits[b] = digits[b], digits[a]
            jdx = sum(d * N ** (m - 1 - p) for p, d in enumerate(digits))
            P[jdx, idx] = 1.0
        return P

    def of_gen(self, g: int) -> np.ndarray:
        return self._gens[g]

    def of_series(self, s: TruncatedSeries) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for w, c in s.terms.items():
            M = np.eye(self.dim)
            for g in w:
                M = M @ self._gens[g]
            out += c * M
        return out

    def relation_defect(self) -> float:
        worst = 0.0
        for rel in self.alg.relations:
            worst = max(worst, np.linalg.norm(self.of_series(rel), 2))
        return worst


class _MatrixFrobenius:
    """Matrix analogue of the local solutions: F(x) x^R M with R = S/(2 pi i),
    S real symmetric (sums of flips), solved in the eigenbasis of S."""

    def __init__(self, S: np.ndarray, analytic_coeff, radius: float, right: np.ndarray | None):
        self.S = S
        self.lam, self.U = np.linalg.eigh(S)
        self._coeff = analytic_coeff  # m -> matrix
        self.radius = radius
        self.right = right
        dim = S.shape[0]
        self.F = [np.eye(dim, dtype=np.complex128)]
        # ad-eigenvalue table (lam_a - lam_b)/2 pi i
        self._ad = (self.lam[:, None] - self.lam[None, :]) / TWO_PI_I

    def extend(self, order: int):
        U, Uh = self.U, self.U.conj().T
        while len(self.F) <= order:
            k = len(self.F)
            G = np.zeros_like(self.F[0])
            for m in range(k):
                G += self._coeff(m) @ self.F[k - 1 - m]
            Gt = Uh @ G @ U
            Ft = Gt / (k - self._ad)
            self.F.append(U @ Ft @ Uh)

    def evaluate(self, x: float, cfg: EngineConfig) -> np.ndarray:
        if not 0 < x < self.radius:
            raise NumericsError("matrix local solution evaluated outside radius")
        self.extend(cfg.expansion_order)
        K = cfg.expansion_order
        while True:
            tail = max(np.linalg.norm(self.F[K]) * x ** K,
                       np.linalg.norm(self.F[K - 1]) * x ** (K - 1))
            if tail < cfg.local_tol:
                break
            if K >= cfg.max_expansion_order:
                raise NumericsError("matrix local expansion did not converge")
            K += 10
            self.extend(K)
        F = np.zeros_like(self.F[0])
        for k in range(K, -1, -1):
            F = F * x + self.F[k]
        power = self.U @ np.diag(np.exp(math.log(x) * self.lam / TWO_PI_I)) @ self.U.conj().T
        out = F @ power
        if self.right is not None:
            out = out @ self.right
        return out


def _matrix_transport(letters: dict, legs, Y0: np.ndarray, cfg: EngineConfig) -> np.ndarray:
    """Integrate dY/dt = A(t) Y across transport legs; letters: gen id -> matrix."""
    dim = Y0.shape[0]
    Y = Y0.astype(np.complex128)
    for leg in legs:
        terms = [(letters[t.gen], t.p0, t.dp) for t in leg.terms if t.dp != 0]

        def rhs(t, y):
            Ymat = y.view(np.complex128).reshape(dim, dim)
            A = np.zeros((dim, dim), dtype=np.complex128)
            for M, p0, dp in terms:
                A = A + (dp / (TWO_PI_I * (p0 + dp * (t - leg.t0)))) * M
            return (A @ Ymat).ravel().view(np.float64)

        sol = scipy.integrate.solve_ivp(
            rhs, (leg.t0, leg.t1), Y.ravel().view(np.float64),
            method="DOP853", rtol=1e-12, atol=1e-12, dense_output=False,
        )
        if not sol.success:
            raise NumericsError("matrix transport failed: %s" % sol.message)
        Y = sol.y[:, -1].copy().view(np.complex128).reshape(dim, dim)
    return Y


def _matrix_tangential(punctures, letters, i, v):
    zi = punctures[i]
    dim = letters[i].shape[0]
    others = [(letters[k], punctures[k]) for k in range(len(punctures)) if k != i]

    def coeff(m):
        A = np.zeros((dim, dim), dtype=np.complex128)
        for M, zj in others:
            A += (v / (TWO_PI_I * (zi - zj))) * (-v / (zi - zj)) ** m * M
        return A

    radius = min((abs(zj - zi) for _, zj in others), default=math.inf) / abs(v)
    return _MatrixFrobenius(letters[i], coeff, radius, None)


def matrix_one_point_holonomy(punctures, letters: dict, path: AnalyzedPath, cfg: EngineConfig) -> np.ndarray:
    """Regularized matrix holonomy along `path` with per-puncture matrix
    letters (each a real symmetric combination of flips)."""
    punctures = tuple(complex(p) for p in punctures)
    spec = path.spec
    sol_i = _matrix_tangential(punctures, letters, spec.start.index, spec.start.v)
    sol_j = _matrix_tangential(punctures, letters, spec.end.index, spec.end.v)
    w0 = min(cfg.eval_radius_fraction * sol_i.radius, 0.9 * path.legs[0].t1)
    w1 = min(cfg.eval_radius_fraction * sol_j.radius, 0.9 * (1.0 - path.legs[-1].t0))
    Y = sol_i.evaluate(w0, cfg)
    conn_legs = []
    for leg in path.legs_between(w0, 1.0 - w1):
        terms = tuple(
            TransportTerm(k, leg.z0 - punctures[k], leg.velocity)
            for k in range(len(punctures))
        )
        conn_legs.append(TransportLeg(leg.t0, leg.t1, terms))
    Y = _matrix_transport(dict(enumerate(letters[k] for k in range(len(punctures)))), conn_legs, Y, cfg)
    end = sol_j.evaluate(w1, cfg)
    return np.linalg.solve(end, Y)


class _MatrixEngine:
    """Independent evaluation of every pentagon factor in End((C^N)^{n+2})."""

    def __init__(self, path: AnalyzedPath, N: int, cfg: EngineConfig):
        self.path = path
        self.cfg = cfg
        spec = path.spec
        self.n = len(spec.punctures)
        self.pconn = pair_connection(spec.punctures)
        self.rep = MatrixRep(self.pconn.alg, N)
        self.dim = self.rep.dim

    def _one_point_hol(self, punctures, letters, path: AnalyzedPath):
        return matrix_one_point_holonomy(punctures, letters, path, self.cfg)

    # -- pentagon factors ------------------------------------------------

    def factors(self):
        rep, pconn, path, cfg = self.rep, self.pconn, self.path, self.cfg
        spec = path.spec
        n = self.n
        i, j = spec.start.index + 1, spec.end.index + 1
        P = {g: rep.of_gen(g) for g in range(len(pconn.alg.cat))}
        zg = [P[pconn.z_gens[k]] for k in range(n)]
        wg = [P[pconn.w_gens[k]] for k in range(n)]
        zw = P[pconn.zw_gen]
        punctures = spec.punctures

        # H_z: letter at puncture j is t[j,z] + t[z,w]
        letters_z = {k: zg[k] + (zw if k == j - 1 else 0.0) for k in range(n)}
        Hz = self._one_point_hol(punctures, letters_z, path)
        letters_w = {k: wg[k] + (zw if k == i - 1 else 0.0) for k in range(n)}
        Hw = self._one_point_hol(punctures, letters_w, path)
        letters_zw = {k: zg[k] + wg[k] for k in range(n)}
        Hzw = self._one_point_hol(punctures, letters_zw, path)

        phi_left = self._matrix_phi(zw, P[pconn.alg.gen_id(str(j), "w")])
        phi_right = self._matrix_phi(P[pconn.alg.gen_id(str(i), "z")], zw)

        vr = scipy.linalg.expm((math.log(path.vratio) / TWO_PI_I) * zw)
        rot = scipy.linalg.expm(path.rot * zw)

        conj = []
        for l, cr in enumerate(path.crossings):
            C = self._matrix_Cl(l)
            mid = scipy.linalg.expm(-float(cr.eps) * zw)
            conj.append(np.linalg.solve(C, mid @ C))
        return {
            "Hz": Hz, "Hw": Hw, "Hzw": Hzw,
            "phi_left": phi_left, "phi_right": phi_right,
            "vr": vr, "rot": rot, "conjugates": conj,
        }

    def _matrix_phi(self, X, Y):
        """Associator in matrix letters: regularized holonomy over {0,1}."""
        from .paths import PathSpec, TangentialPoint, analyze

        spec = PathSpec([0.0, 1.0], TangentialPoint(0, 1.0), TangentialPoint(1, -1.0), [])
        apath = analyze(spec)
        return self._one_point_hol((0.0, 1.0), {0: X, 1: Y}, apath)

    def _matrix_Cl(self, index: int):
        cfg, path, pconn, rep = self.cfg, self.path, self.pconn, self.rep
        problem = LineProblem(pconn, path, index)
        cr = problem.crossing
        spec = path.spec
        n = self.n
        i, j = spec.start.index, spec.end.index
        zg = [rep.of_gen(g) for g in pconn.z_gens]
        wg = [rep.of_gen(g) for g in pconn.w_gens]
        zw = rep.of_gen(pconn.zw_gen)
        punctures = spec.punctures
        vi = spec.start.v
        vw = -problem.slope * spec.end.v
        zi, zj = punctures[i], punctures[j]

        pairs = []
        for k in range(n):
            if k != i:
                pairs.append((zg[k], zi - punctures[k], vi))
            if k != j:
                pairs.append((wg[k], zj - punctures[k], vw))
        pairs.append((zw, zj - zi, vw - vi))

        def corner_coeff(m):
            A = np.zeros((self.dim, self.dim), dtype=np.complex128)
            for M, c, e in pairs:
                A += (e / (TWO_PI_I * c)) * (-e / c) ** m * M
            return A

        radius = min(abs(c / e) for _, c, e in pairs if e != 0)
        chart = min(path.legs[0].t1, (1.0 - path.legs[-1].t0) / (-problem.slope))
        corner = _MatrixFrobenius((zg[i] + wg[j]), corner_coeff, min(radius, chart),
                                  scipy.linalg.expm((math.log(-problem.slope) / TWO_PI_I) * wg[j]))
        # note: residue matrix argument is the symmetric S with R = S/2 pi i

        vz_c = path.velocity(cr.t)
        vw_c = path.velocity(cr.s) * problem.slope
        cpairs = []
        for k in range(n):
            cpairs.append((zg[k], cr.a - punctures[k], -vz_c))
            cpairs.append((wg[k], cr.a - punctures[k], -vw_c))

        def cross_coeff(m):
            A = np.zeros((self.dim, self.dim), dtype=np.complex128)
            for M, c, e in cpairs:
                A += (e / (TWO_PI_I * c)) * (-e / c) ** m * M
            return A

        cradius = min(abs(c / e) for _, c, e in cpairs if e != 0)
        leg_t = path._leg_at(cr.t)
        leg_s = path._leg_at(cr.s)
        cchart = min(cr.t - leg_t.t0, (leg_s.t1 - cr.s) / (-problem.slope))
        cross = _MatrixFrobenius(zw, cross_coeff, min(cradius, cchart),
                                 scipy.linalg.expm(-0.5 * float(cr.eps) * zw))

        delta0 = min(cfg.line_offset_frac * cr.t, cfg.eval_radius_fraction * corner.radius)
        delta1 = min(cfg.line_offset_frac * cr.t, cfg.eval_radius_fraction * cross.radius)
        Y = corner.evaluate(delta0, cfg)
        letters = {}
        for k in range(n):
            letters[pconn.z_gens[k]] = zg[k]
            letters[pconn.w_gens[k]] = wg[k]
        letters[pconn.zw_gen] = zw
        Y = _matrix_transport(letters, problem.transport_legs(delta0, cr.t - delta1), Y, cfg)
        down = cross.evaluate(delta1, cfg)
        return np.linalg.solve(down, Y)


def verify_pentagon_matrix(path: AnalyzedPath, N: int, cfg: EngineConfig, *,
                           omit_rotation_factor: bool = False,
                           omit_vratio_factor: bool = False,
                           crossing_order: str = "telescoping") -> dict:
    """Operator-norm residual of the pentagon identity in the flip representation."""
    spec = path.spec
    if spec.start.index == spec.end.index:
        raise GeometryError("pentagon verification requires distinct endpoint punctures")
    t0 = time.perf_counter()
    engine = _MatrixEngine(path, N, cfg)
    parts = engine.factors()
    eye = np.eye(engine.dim)
    vr = eye if omit_vratio_factor else parts["vr"]
    rot = eye if omit_rotation_factor else parts["rot"]
    lhs = parts["phi_left"] @ parts["Hzw"] @ vr @ rot @ parts["phi_right"]
    middle = eye
    conj = parts["conjugates"]
    order = range(len(conj) - 1, -1, -1) if crossing_order == "telescoping" else range(len(conj))
    for l in order:
        middle = middle @ conj[l]
    rhs = parts["Hz"] @ middle @ parts["Hw"]
    residual = float(np.linalg.norm(lhs - rhs, 2))
    return {
        "residual": residual,
        "N": N,
        "dim": engine.dim,
        "relation_defect": engine.rep.relation_defect(),
        "seconds": time.perf_counter() - t0,
    }
