import pytest

from conftest import ccw_loop_spec, figure_eight_spec, two_crossing_spec
from kzhol import dkalgebra as dk
from kzhol.errors import ConfigError, GeometryError
from kzhol.holonomy import EngineConfig, free_connection, local_solution
from kzhol.paths import analyze
from kzhol.pairline import (
    LineProblem,
    compute_Cl,
    corner_solution,
    crossing_factor,
    crossing_solution,
    pair_connection,
)
from kzhol.series import TruncatedSeries


@pytest.fixture(scope="module")
def fig8():
    return analyze(figure_eight_spec())


@pytest.fixture(scope="module")
def pconn(fig8):
    return pair_connection(fig8.spec.punctures)


def test_corner_solution_basics(fig8, pconn):
    cfg = EngineConfig(degree=3)
    problem = LineProblem(pconn, fig8, 0)
    corner = corner_solution(problem, 3)
    assert (corner.f[0] - TruncatedSeries.unit(pconn.alg.cat, 3)).max_abs() == 0.0
    val = corner.evaluate(min(0.3 * corner.radius, 0.02), cfg)
    assert val.grouplike_defect() <= 1e-10


def test_corner_projection_factorizes(fig8, pconn):
    """Setting t_zw -> 0 (projection) splits the corner solution into the two
    one-point tangential solutions, one per moving point."""
    cfg = EngineConfig(degree=3)
    spec = fig8.spec
    n = len(spec.punctures)
    problem = LineProblem(pconn, fig8, 0)
    corner = corner_solution(problem, 3)
    delta = min(0.3 * corner.radius, 0.02)
    lhs = dk.projection_pi(corner.evaluate(delta, cfg), pconn.alg, n)

    free = free_connection(spec.punctures)
    scale = -problem.slope
    sol_z = local_solution(free, spec.start, 3)
    sol_w = local_solution(free, spec.end, 3)
    tau = dk.tau_catalogue(n)
    into_z = {k: [(tau.id_of(dk.pair_label(str(k + 1), "z")), 1.0)] for k in range(n)}
    into_w = {k: [(tau.id_of(dk.pair_label(str(k + 1), "w")), 1.0)] for k in range(n)}
    fz = sol_z.evaluate(delta, cfg).substituted(into_z, tau)
    fw = sol_w.evaluate(scale * delta, cfg).substituted(into_w, tau)
    rhs = dk.tau_canonical(fz * fw, n)
    assert (lhs - rhs).max_abs() <= 1e-10


def test_crossing_solution_shifts(fig8, pconn):
    cfg = EngineConfig(degree=3)
    problem = LineProblem(pconn, fig8, 0)
    eps = problem.crossing.eps
    up = crossing_solution(problem, "up", 3)
    down = crossing_solution(problem, "down", 3)
    zw = pconn.zw_gen
    # eps = +1 here: the down normalization carries exp(-t_zw/2)
    assert eps == 1
    want = TruncatedSeries(pconn.alg.cat, 3, {(zw,): -0.5}).exp()
    assert (down.right_factor - want).max_abs() <= 1e-15
    delta = min(0.3 * down.radius, 0.01)
    u_val = up.evaluate(delta, cfg)
    d_val = down.evaluate(delta, cfg)
    # Psi_{a,d} = Psi_{a,u} e^{-eps t_zw} exactly
    rel = u_val.inverse() * d_val
    want_rel = TruncatedSeries(pconn.alg.cat, 3, {(zw,): -float(eps)}).exp()
    assert (rel - want_rel).max_abs() <= 1e-12
    # with t_zw killed both sides coincide
    n = len(fig8.spec.punctures)
    assert (dk.projection_pi(u_val, pconn.alg, n) - dk.projection_pi(d_val, pconn.alg, n)).max_abs() <= 1e-14
    with pytest.raises(ConfigError):
        crossing_solution(problem, "sideways", 3)


def test_compute_Cl_grouplike_and_theorem(fig8, pconn):
    cfg = EngineConfig(degree=3)
    C = compute_Cl(pconn, fig8, 0, cfg)
    assert abs(C.constant_term() - 1.0) <= 1e-12
    assert C.grouplike_defect() <= 1e-8
    from kzhol.verifier import verify_theorem_Cl

    residuals = verify_theorem_Cl(fig8, cfg, pconn=pconn, cls=[C])
    assert len(residuals) == 1 and residuals[0] <= 1e-8


def test_compute_Cl_self_convergence(fig8, pconn):
    base = compute_Cl(pconn, fig8, 0, EngineConfig(degree=3))
    finer_quad = compute_Cl(pconn, fig8, 0, EngineConfig(degree=3, quad_order=32))
    smaller_delta = compute_Cl(pconn, fig8, 0, EngineConfig(degree=3, line_offset_frac=5e-3))
    assert (base - finer_quad).max_abs() <= 1e-9
    assert (base - smaller_delta).max_abs() <= 1e-8


def test_crossing_factor_forms(fig8, pconn):
    cfg = EngineConfig(degree=3)
    cat = pconn.alg.cat
    one = TruncatedSeries.unit(cat, 3)
    f_triv = crossing_factor(pconn, one, +1)
    want = TruncatedSeries(cat, 3, {(pconn.zw_gen,): -1.0}).exp()
    assert (f_triv - want).max_abs() <= 1e-15
    C = compute_Cl(pconn, fig8, 0, cfg)
    factor = crossing_factor(pconn, C, fig8.crossings[0].eps)
    assert factor.grouplike_defect() <= 1e-8
    n = len(fig8.spec.punctures)
    tau_one = TruncatedSeries.unit(dk.tau_catalogue(n), 3)
    assert (dk.projection_pi(factor, pconn.alg, n) - tau_one).max_abs() <= 1e-8


def test_two_crossing_path_theorem(cfg3):
    ap = analyze(two_crossing_spec())
    pc = pair_connection(ap.spec.punctures)
    from kzhol.verifier import verify_theorem_Cl

    residuals = verify_theorem_Cl(ap, cfg3, pconn=pc)
    assert len(residuals) == 2
    assert max(residuals) <= 1e-8


def test_line_problem_guards(fig8, pconn):
    with pytest.raises(ConfigError):
        LineProblem(pconn, fig8, 5)
    loop = analyze(ccw_loop_spec(), tangential_ok=True)
    lconn = pair_connection(loop.spec.punctures)
    with pytest.raises(GeometryError, match="distinct"):
        LineProblem(lconn, loop, 0)
