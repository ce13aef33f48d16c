import numpy as np
import pytest

from conftest import figure_eight_spec, straight_spec, two_crossing_spec
from kzhol import dkalgebra as dk
from kzhol.errors import GeometryError
from kzhol.holonomy import EngineConfig, free_connection, hol_reg
from kzhol.paths import analyze
from kzhol.verifier import (
    MatrixRep,
    matrix_one_point_holonomy,
    verify_pentagon,
    verify_pentagon_matrix,
    verify_theorem_Cl,
)


@pytest.fixture(scope="module")
def fig8():
    return analyze(figure_eight_spec())


@pytest.fixture(scope="module")
def fig8_report(fig8):
    return verify_pentagon(fig8, EngineConfig(degree=3))


def test_straight_path_reduces_to_drinfeld_pentagon(cfg3):
    ap = analyze(straight_spec())
    assert ap.rot == 0.0 and ap.vratio == 1.0 and not ap.crossings
    rep = verify_pentagon(ap, cfg3)
    assert rep.passed
    assert len(rep.degrees) == cfg3.degree + 1
    assert rep.degrees[0] == 0.0
    assert max(rep.degrees) <= 1e-6
    assert verify_theorem_Cl(ap, cfg3) == []


def test_low_degree_residuals_vanish(fig8_report):
    # degree 0 exactly, degree 1 from the winding/rotation bookkeeping
    assert fig8_report.degrees[0] == 0.0
    assert fig8_report.degrees[1] <= 1e-10


def test_figure_eight_pentagon(fig8_report):
    assert fig8_report.passed
    assert max(fig8_report.degrees) <= 1e-6
    assert max(fig8_report.factors["theorem_Cl_residuals"]) <= 1e-8
    for key in ("H_grouplike_defect", "phi_grouplike_defect",
                "lhs_grouplike_defect", "rhs_grouplike_defect"):
        assert fig8_report.factors[key] <= 1e-8
    assert all(d <= 1e-8 for d in fig8_report.factors["C_grouplike_defects"])


def test_two_crossing_product_order(cfg3):
    ap = analyze(two_crossing_spec())
    tele = verify_pentagon(ap, cfg3, crossing_order="telescoping", check_theorem_Cl=False)
    assert tele.passed
    written = verify_pentagon(ap, cfg3, crossing_order="as-written", check_theorem_Cl=False)
    # with two crossings of opposite sign the naive order genuinely fails
    assert not written.passed
    assert max(written.degrees) > 1e-3


def test_sensitivity_of_new_factors(fig8, cfg3):
    # rot != 0 and |v_j| != |v_i| on this path, so omitting either factor
    # must show up at degree 1
    no_rot = verify_pentagon(fig8, cfg3, omit_rotation_factor=True, check_theorem_Cl=False)
    assert no_rot.degrees[1] > 1e-3
    assert not no_rot.passed
    no_vr = verify_pentagon(fig8, cfg3, omit_vratio_factor=True, check_theorem_Cl=False)
    assert no_vr.degrees[1] > 1e-3
    # the 2 pi variant of the tangent-ratio exponent fails as well; the 2 pi i
    # exponent is the numerically correct normalization
    wrong_exp = verify_pentagon(fig8, cfg3, vratio_exponent="2pi", check_theorem_Cl=False)
    assert wrong_exp.degrees[1] > 1e-3


def test_robustness_under_refinement(fig8, fig8_report):
    finer = verify_pentagon(fig8, EngineConfig(degree=3, quad_order=32), check_theorem_Cl=False)
    closer = verify_pentagon(
        fig8,
        EngineConfig(degree=3, eval_radius_fraction=0.1, line_offset_frac=5e-3),
        check_theorem_Cl=False,
    )
    for other in (finer, closer):
        assert max(abs(a - b) for a, b in zip(fig8_report.degrees, other.degrees)) < 1e-8


def test_residual_invariant_under_waypoint_perturbation(fig8_report, cfg3):
    # the report measures the identity, not the discretization of one path
    from kzhol.paths import PathSpec

    spec = figure_eight_spec()
    wps = list(spec.waypoints)
    wps[3] += -0.015 + 0.02j
    moved = analyze(PathSpec(spec.punctures, spec.start, spec.end, wps))
    rep = verify_pentagon(moved, cfg3, check_theorem_Cl=False)
    assert max(abs(a - b) for a, b in zip(fig8_report.degrees, rep.degrees)) < 1e-8


def test_report_json_shape(fig8_report):
    obj = fig8_report.to_json()
    assert set(obj) == {"degrees", "tolerance", "pass", "factors", "timings", "config"}
    assert obj["pass"] is True
    assert len(obj["degrees"]) == 4


def test_matrix_rep_relations():
    for strands, N in ((["1", "2", "z", "w"], 2), (["1", "2", "3"], 3)):
        alg = dk.build(strands)
        rep = MatrixRep(alg, N)
        assert rep.relation_defect() <= 1e-12


def test_matrix_backend_straight_and_fig8(fig8, cfg3):
    out = verify_pentagon_matrix(analyze(straight_spec()), 2, cfg3)
    assert out["dim"] == 16
    assert out["residual"] <= 1e-6
    out8 = verify_pentagon_matrix(fig8, 2, cfg3)
    assert out8["residual"] <= 1e-6
    with pytest.raises(GeometryError):
        from conftest import ccw_loop_spec

        verify_pentagon_matrix(analyze(ccw_loop_spec(), tangential_ok=True), 2, cfg3)


def test_series_matrix_cross_check(fig8):
    """Push the series holonomy through the representation with scaled letters:
    H_matrix(eps * rho) = sum_d eps^d rho(H^(d)) up to the truncated tail."""
    cfg = EngineConfig(degree=3)
    free = free_connection(fig8.spec.punctures)
    H = hol_reg(free, fig8, cfg)
    alg = dk.build(["1", "2", "z", "w"])
    rep = MatrixRep(alg, 2)
    eps = 0.05
    letters = {k: eps * rep.of_gen(alg.gen_id(str(k + 1), "z")) for k in range(2)}
    Hmat = matrix_one_point_holonomy(fig8.spec.punctures, letters, fig8, cfg)
    pushed = np.zeros_like(Hmat)
    for w, c in H.terms.items():
        M = np.eye(rep.dim)
        for k in w:
            M = M @ rep.of_gen(alg.gen_id(str(k + 1), "z"))
        pushed += c * eps ** len(w) * M
    assert np.linalg.norm(Hmat - pushed, 2) <= 1e-5


def test_matrix_sensitivity(fig8, cfg3):
    out = verify_pentagon_matrix(fig8, 2, cfg3, omit_rotation_factor=True)
    assert out["residual"] > 1e-3


def three_puncture_spec():
    """One crossing with a bystander puncture: exercises t_5."""
    from kzhol.paths import PathSpec, TangentialPoint

    punctures = [0.0, 1.0, 0.5 + 0.9j]
    wps = [0.5596 - 0.6426j, -0.0321 - 0.3058j, 0.4819 - 1.0855j,
           0.6171 - 1.1945j, -0.3662 - 0.8097j, 1.3016 - 0.5166j]
    vi, vj = wps[0], wps[-1] - 1.0
    return PathSpec(punctures, TangentialPoint(0, vi / abs(vi)),
                    TangentialPoint(1, vj / abs(vj) * 1.3), wps)


def test_pentagon_three_punctures(cfg3):
    ap = analyze(three_puncture_spec())
    assert len(ap.crossings) == 1
    rep = verify_pentagon(ap, cfg3)
    assert rep.passed and max(rep.degrees) <= 1e-6
    assert max(rep.factors["theorem_Cl_residuals"]) <= 1e-8
    mat = verify_pentagon_matrix(ap, 2, cfg3)
    assert mat["dim"] == 32 and mat["residual"] <= 1e-6


def test_pentagon_degree_four(fig8):
    rep = verify_pentagon(fig8, EngineConfig(degree=4), check_theorem_Cl=False)
    assert rep.passed
    assert len(rep.degrees) == 5
    assert max(rep.degrees) <= 1e-6
