"""Tests for the local and global lower bounds and refinement studies."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from smoothcheck.bounds import (
    StudyConfig,
    appendix_interior_bound_check,
    appendix_jump_bound_check,
    convergence_study,
    corrupt_field,
    disk_within_elements,
    fit_rate,
    global_lower_bound_report,
    jump_order_rates,
    local_lower_bound_check,
    local_lower_bound_survey,
    necessary_condition_verdict,
    projection_order_study,
    ratio_band,
    study_result_from_table,
)
from smoothcheck.dual import build_dual_covolume
from smoothcheck.errors import StudyError
from smoothcheck.mesh import build_structured_mesh, refine_uniform, safe_disk_radius
from smoothcheck.polynomial import PiecewisePolyField, save_field
from smoothcheck.projection import lagrange_interpolant_1d, local_l2_project_dual
from smoothcheck.qform import QFormSpec, assemble_qform
from smoothcheck.targets import make_target

TABLE_HEADER = [
    "level",
    "num_elements",
    "h",
    "h_min",
    "error_L2",
    "type_a_2",
    "type_a_inf",
    "type_i_2",
    "type_i_inf",
    "jump_k0",
    "jump_k1",
    "max_norm_D",
]


def _table(errors, type_a_inf=(1.0, 1.0, 1.0), max_norm_d=(1.0, 1.0, 1.0)):
    rows = []
    for level, h in enumerate((0.5, 0.25, 0.125)):
        rows.append(
            [
                level,
                2 ** (level + 1),
                h,
                h,
                errors[level],
                1.0,
                type_a_inf[level],
                1.0,
                1.0,
                0.0,
                h,
                max_norm_d[level],
            ]
        )
    return rows


@pytest.fixture
def sine_config():
    return StudyConfig(target="sin_pi_x", p=1, levels=3, base_divisions=4, norms=(2, "inf"))


def test_local_identity_degree_zero():
    """Test min residual and Q term both equal h / 8 for values -1/2 | 1/2."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    field = PiecewisePolyField(mesh, 0, [[-0.5], [0.5]])
    result = local_lower_bound_check(field, None, mesh.interfaces[0], mesh.h / 4)
    assert result.min_residual == pytest.approx(mesh.h / 8, rel=1e-12)
    assert result.q_value == pytest.approx(mesh.h / 8, rel=1e-12)
    assert result.identity_holds()
    assert result.lhs == 0.0


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_local_identity_random_fields_1d(p):
    """Test the identity on seeded random piecewise polynomials of every degree."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    dual_field = local_l2_project_dual(make_target("sin_pi_x"), build_dual_covolume(mesh), p)
    rng = np.random.default_rng(200 + p)
    for _ in range(13):
        field = PiecewisePolyField(mesh, p, rng.standard_normal((len(mesh), p + 1)))
        survey = local_lower_bound_survey(field, dual_field, mesh.h / 4)
        assert survey.skipped == []
        assert len(survey.results) == len(mesh.interfaces)
        assert survey.max_identity_gap <= 1e-9
        assert survey.all_hold()
        assert all(r.q_value > 0 for r in survey.results)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_local_identity_random_fields_2d(p):
    """Test the identity and the inequality on every interface of a triangle mesh."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    rng = np.random.default_rng(100 + p)
    field = PiecewisePolyField(mesh, p, rng.standard_normal((len(mesh), (p + 1) * (p + 2) // 2)))
    dual_field = local_l2_project_dual(make_target("sin_pi_xy"), build_dual_covolume(mesh), p)
    survey = local_lower_bound_survey(field, dual_field, safe_disk_radius(mesh))
    assert survey.skipped == []
    assert len(survey.results) == len(mesh.interfaces)
    assert survey.all_hold()
    assert survey.max_identity_gap <= 1e-9
    assert all(r.ratio >= 1.0 - 1e-9 for r in survey.results if r.ratio is not None)


def test_local_check_tetrahedra():
    """Test the identity on a tetrahedral mesh with a ball inside the covolume."""
    mesh = build_structured_mesh(((0, 1), (0, 1), (0, 1)), 3, 1, "tetrahedron")
    rng = np.random.default_rng(5)
    field = PiecewisePolyField(mesh, 1, rng.standard_normal((len(mesh), 4)))
    radius = 0.05 * mesh.h_min
    survey = local_lower_bound_survey(field, None, radius)
    assert survey.results
    assert survey.max_identity_gap <= 1e-9


def test_local_check_r_hat_mismatch():
    """Test a form assembled for another radius is refused."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    field = PiecewisePolyField.zeros(mesh, 1)
    qf = assemble_qform(QFormSpec(1, 1, 0.3))
    with pytest.raises(StudyError, match="r_hat mismatch"):
        local_lower_bound_check(field, None, mesh.interfaces[0], mesh.h / 4, qf)


def test_local_check_form_dimension_mismatch():
    """Test a form for another degree is refused."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    field = PiecewisePolyField.zeros(mesh, 1)
    qf = assemble_qform(QFormSpec(1, 2, 0.25))
    with pytest.raises(StudyError, match="quadratic form"):
        local_lower_bound_check(field, None, mesh.interfaces[0], mesh.h / 4, qf)


def test_local_check_ball_crossing():
    """Test a ball reaching a third element is refused and skipped in surveys."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    field = PiecewisePolyField.zeros(mesh, 0)
    radius = 0.8 * mesh.h_min
    assert not disk_within_elements(mesh, mesh.interfaces[0], radius)
    with pytest.raises(StudyError, match="crosses"):
        local_lower_bound_check(field, None, mesh.interfaces[0], radius)
    survey = local_lower_bound_survey(field, None, radius)
    assert survey.results == []
    assert len(survey.skipped) == len(mesh.interfaces)


def test_disk_within_elements_1d():
    """Test the h / 4 interval stays in the two neighbours."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    assert all(disk_within_elements(mesh, iface, mesh.h / 4) for iface in mesh.interfaces)


def test_global_report_step():
    """Test error, indicator and bracket for the interpolated step."""
    mesh = build_structured_mesh((0, 1), 1, 8, "interval")
    u = make_target("step", location=0.3)
    field = lagrange_interpolant_1d(u, mesh, 0)
    report = global_lower_bound_report(u, field, "inf")
    assert report.indicator_term == pytest.approx(8.0)
    assert report.seminorm == 0.0
    assert report.error == pytest.approx(1.0)
    assert report.ratio == pytest.approx(1.0)
    assert report.note is None

    tilde = global_lower_bound_report(u, field, "inf", scaling="D_tilde")
    assert tilde.indicator_term == pytest.approx(8.0)


def test_global_report_non_positive_bracket():
    """Test a smooth target with a small indicator reports no ratio."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    u = make_target("poly", terms=[[1.0, [1]]])
    field = lagrange_interpolant_1d(u, mesh, 0)
    report = global_lower_bound_report(u, field, 2)
    assert report.indicator_term == pytest.approx(math.sqrt(0.5))
    assert report.seminorm == pytest.approx(1.0)
    assert report.ratio is None
    assert report.note == "bracket <= 0"
    data = report.to_dict()
    assert data["bracket"] == pytest.approx(math.sqrt(0.5) - 1.0)
    assert data["C_p"] is None


def test_global_report_with_qform():
    """Test C_p is attached when a form is given."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    u = make_target("sin_pi_x")
    field = lagrange_interpolant_1d(u, mesh, 1)
    report = global_lower_bound_report(u, field, 2, qf=assemble_qform(QFormSpec(1, 1, 0.25)))
    assert report.c_p == pytest.approx(0.25**3 / 24.0, rel=1e-12)


def test_global_report_errors():
    """Test a target is required and the scaling is validated."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    field = PiecewisePolyField.zeros(mesh, 0)
    with pytest.raises(ValueError, match="target"):
        global_lower_bound_report(None, field, 2)
    with pytest.raises(ValueError, match="scaling"):
        global_lower_bound_report(make_target("sin_pi_x"), field, 2, scaling="E")


def test_study_config_validation():
    """Test inconsistent study settings."""
    with pytest.raises(StudyError, match="levels"):
        StudyConfig(target="sin_pi_x", p=1, levels=2)
    with pytest.raises(StudyError, match="1D"):
        StudyConfig(target="sin_pi_xy", p=1, kind="triangle")
    with pytest.raises(StudyError, match="one field file per level"):
        StudyConfig(target="sin_pi_x", p=1, method="files", levels=3, field_files=["a.json"])
    with pytest.raises(StudyError, match="unsupported norm"):
        StudyConfig(target="sin_pi_x", p=1, norms=(3,))
    with pytest.raises(StudyError, match="bounded_ratio"):
        StudyConfig(target="sin_pi_x", p=1, bounded_ratio=1.0)
    with pytest.raises(StudyError, match="Unknown target"):
        StudyConfig(target="cosine", p=1).build_target()


def test_study_config_default_location():
    """Test kinks are placed off every refined mesh node."""
    cfg = StudyConfig(target="abs_kink", p=1, base_divisions=4)
    target = cfg.build_target()
    assert target.params["location"] == pytest.approx(0.5 + 1.0 / 12.0)
    assert cfg.indicator_norms() == (2.0, math.inf)


def test_fit_rate():
    """Test slope fitting, the floor and vanishing quantities."""
    fit = fit_rate("e", [0.5, 0.25, 0.125, 0.0625], [1.0, 0.25, 0.0625, 0.015625])
    assert fit.rate == pytest.approx(2.0)
    assert fit.levels_used == 3
    assert fit.residual == pytest.approx(0.0, abs=1e-12)

    vanishing = fit_rate("e", [0.5, 0.25, 0.125], [0.0, 0.0, 0.0])
    assert vanishing.vanishing
    assert vanishing.rate is None

    sparse = fit_rate("e", [0.5, 0.25, 0.125], [1e-20, 1e-20, 1.0])
    assert sparse.rate is None
    assert not sparse.vanishing


def test_convergence_study_smooth(sine_config):
    """Test optimal rates and a PASS verdict for the interpolated sine."""
    result = convergence_study(sine_config)
    assert len(result.levels) == 3
    assert result.rates["error_L2"].rate == pytest.approx(2.0, abs=0.1)
    assert result.rates["error_Linf"].rate == pytest.approx(2.0, abs=0.1)
    verdict = necessary_condition_verdict(result)
    assert verdict.status == "PASS"
    assert verdict.checks["antecedent"] is True
    assert verdict.checks["consequent"] is True


def test_convergence_study_step_fires_remark():
    """Test a step gives a suboptimal rate with ||D|| growing like 1/h."""
    cfg = StudyConfig(target="step", p=0, levels=4, base_divisions=4)
    result = convergence_study(cfg)
    assert result.rates["max_norm_D"].rate == pytest.approx(-1.0, abs=0.05)
    verdict = necessary_condition_verdict(result)
    assert verdict.checks["antecedent"] is False
    assert verdict.checks["remark_fired"] is True
    assert verdict.status == "PASS"


def test_convergence_study_corrupted():
    """Test an O(1) perturbation destroys the optimal rate."""
    cfg = StudyConfig(target="sin_pi_x", p=1, levels=3, corrupt_amplitude=1.0)
    result = convergence_study(cfg)
    assert result.rates["error_L2"].rate < 1.0
    assert necessary_condition_verdict(result).checks["antecedent"] is False


def test_convergence_study_l2_fit_2d():
    """Test the element L2 fit on triangles converges at order p + 1."""
    cfg = StudyConfig(
        target="sin_pi_xy", p=1, kind="triangle", method="l2_fit", levels=3, base_divisions=2
    )
    result = convergence_study(cfg)
    assert result.rates["error_L2"].rate > 1.5


@pytest.mark.parametrize("p", [1, 2])
def test_jump_rates_1d_interpolant(p):
    """Test each jump order decays at least like h^(p+1-k) and indicators stay bounded."""
    cfg = StudyConfig(target="sin_pi_x", p=p, levels=5, base_divisions=4, norms=(2, "inf"))
    result = convergence_study(cfg)
    for k in range(p + 1):
        fit = result.rates[f"jump_k{k}"]
        assert fit.vanishing or fit.rate >= p + 1 - k - 0.25
    assert result.rates[f"jump_k{p}"].rate == pytest.approx(1.0, abs=0.25)
    for name in ("type_a_2", "type_a_inf", "type_i_2", "type_i_inf"):
        assert ratio_band(result.column(name)[-3:]) <= 1.5

    orders = jump_order_rates(result)
    assert [o.expected for o in orders] == [p + 1 - k for k in range(p + 1)]
    assert orders[p].status == "optimal"
    assert all(o.status != "slower" for o in orders)
    if p == 2:
        assert orders[1].status == "faster"
    verdict = necessary_condition_verdict(result)
    assert verdict.status == "PASS"
    assert [o["status"] for o in verdict.checks["jump_orders"]] == [o.status for o in orders]


def test_jump_rates_2d_l2_fit():
    """Test the triangle L2 fit rates over five levels, including superconvergent k = 0."""
    cfg = StudyConfig(
        target="sin_pi_xy",
        p=1,
        kind="triangle",
        method="l2_fit",
        levels=5,
        base_divisions=2,
        norms=(2, "inf"),
    )
    result = convergence_study(cfg)
    assert result.rates["error_L2"].rate == pytest.approx(2.0, abs=0.35)
    assert result.rates["jump_k1"].rate == pytest.approx(1.0, abs=0.35)
    assert result.rates["jump_k0"].rate >= 2.0 - 0.35
    assert [o.status for o in jump_order_rates(result)] == ["faster", "optimal"]
    assert necessary_condition_verdict(result).checks["antecedent"] is True


def test_step_l2_fit_half_order():
    """Test the p = 0 L2 fit of a step converges at order 1/2 while ||D|| grows like 1/h."""
    cfg = StudyConfig(target="step", p=0, method="l2_fit", levels=5, base_divisions=4)
    result = convergence_study(cfg)
    assert 0.4 <= result.rates["error_L2"].rate <= 0.6
    assert result.rates["max_norm_D"].rate <= -0.8
    verdict = necessary_condition_verdict(result)
    assert verdict.checks["remark_fired"] is True
    assert verdict.status == "PASS"


def test_convergence_study_is_deterministic(sine_config):
    """Test repeated and threaded runs give identical tables."""
    first = convergence_study(sine_config)
    second = convergence_study(sine_config)
    sine_config.threads = 3
    threaded = convergence_study(sine_config)
    assert first.rows() == second.rows() == threaded.rows()


def test_convergence_study_from_files(tmp_path, sine_config):
    """Test studies over field files agree with generated fields."""
    generated = convergence_study(sine_config)
    u = sine_config.build_target()
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    paths = []
    for level in range(3):
        if level:
            mesh = refine_uniform(mesh)
        path = tmp_path / f"level{level}.json"
        save_field(lagrange_interpolant_1d(u, mesh, 1), path)
        paths.append(str(path))
    cfg = StudyConfig(
        target="sin_pi_x", p=1, levels=3, method="files", field_files=paths, norms=(2, "inf")
    )
    from_files = convergence_study(cfg)
    np.testing.assert_allclose(
        from_files.column("error_L2"), generated.column("error_L2"), rtol=1e-12
    )


def test_study_files_degree_mismatch(tmp_path):
    """Test field files must match the study degree."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    paths = []
    for level in range(3):
        path = tmp_path / f"f{level}.json"
        save_field(PiecewisePolyField.zeros(mesh, 0), path)
        paths.append(str(path))
    cfg = StudyConfig(target="sin_pi_x", p=1, levels=3, method="files", field_files=paths)
    with pytest.raises(StudyError, match="study expects"):
        convergence_study(cfg)


def test_study_table_round_trip(sine_config):
    """Test the verdict is reproduced from the written table."""
    result = convergence_study(sine_config)
    rebuilt = study_result_from_table(sine_config, result.header(), result.rows())
    assert rebuilt.rows() == result.rows()
    assert (
        necessary_condition_verdict(rebuilt).status
        == necessary_condition_verdict(result).status
    )


def test_verdict_pass_from_table(sine_config):
    """Test optimal errors with bounded indicators pass."""
    result = study_result_from_table(sine_config, TABLE_HEADER, _table([0.25, 0.0625, 0.015625]))
    assert necessary_condition_verdict(result).status == "PASS"


def test_verdict_fail_from_table(sine_config):
    """Test optimal errors with a doubling indicator fail."""
    rows = _table([0.25, 0.0625, 0.015625], type_a_inf=(2.0, 4.0, 8.0))
    verdict = necessary_condition_verdict(study_result_from_table(sine_config, TABLE_HEADER, rows))
    assert verdict.status == "FAIL"
    assert verdict.checks["bounded"]["type_a_inf"] is False


def test_verdict_fail_on_remark(sine_config):
    """Test optimal errors with ||D|| growing like 1/h fail."""
    rows = _table([0.25, 0.0625, 0.015625], max_norm_d=(2.0, 4.0, 8.0))
    verdict = necessary_condition_verdict(study_result_from_table(sine_config, TABLE_HEADER, rows))
    assert verdict.checks["remark_fired"] is True
    assert verdict.status == "FAIL"


def test_verdict_inconclusive_from_table(sine_config):
    """Test an unfittable error rate is inconclusive."""
    result = study_result_from_table(sine_config, TABLE_HEADER, _table([1e-20, 1e-20, 1.0]))
    assert necessary_condition_verdict(result).status == "INCONCLUSIVE"


def test_verdict_vanishing_error(sine_config):
    """Test an exactly reproduced target counts as optimal."""
    result = study_result_from_table(sine_config, TABLE_HEADER, _table([0.0, 0.0, 0.0]))
    verdict = necessary_condition_verdict(result)
    assert verdict.checks["antecedent"] is True
    assert verdict.status == "PASS"


def test_jump_order_rates_from_table(sine_config):
    """Test per-order jump rates are labelled against p + 1 - k."""
    orders = jump_order_rates(
        study_result_from_table(sine_config, TABLE_HEADER, _table([0.25, 0.0625, 0.015625]))
    )
    assert [(o.k, o.expected, o.status) for o in orders] == [(0, 2, "vanishing"), (1, 1, "optimal")]
    assert orders[1].rate == pytest.approx(1.0)

    rows = _table([0.25, 0.0625, 0.015625])
    for row in rows:
        row[TABLE_HEADER.index("jump_k1")] = row[2] ** 2
    result = study_result_from_table(sine_config, TABLE_HEADER, rows)
    faster = jump_order_rates(result)[1]
    assert faster.status == "faster"
    assert faster.to_dict() == {"k": 1, "expected": 1, "rate": pytest.approx(2.0), "status": "faster"}
    assert necessary_condition_verdict(result).status == "PASS"
    assert jump_order_rates(result, tolerance=1.5)[1].status == "optimal"


def test_verdict_needs_three_levels(sine_config):
    """Test two levels are not enough."""
    result = study_result_from_table(sine_config, TABLE_HEADER, _table([1.0, 0.5, 0.25])[:2])
    with pytest.raises(StudyError, match=">= 3 levels"):
        necessary_condition_verdict(result)


def test_corrupt_field():
    """Test the perturbation lands on the middle element."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    corrupted = corrupt_field(PiecewisePolyField.zeros(mesh, 1), 0.5)
    np.testing.assert_allclose(corrupted.coefficients[:, 0], [0.0, 0.0, 0.5, 0.0])


def test_appendix_bounds():
    """Test the 1D pointwise bounds with constant one."""
    mesh = build_structured_mesh((0, 1), 1, 8, "interval")
    u = make_target("sin_pi_x")
    field = lagrange_interpolant_1d(u, mesh, 1)
    for k in (0, 1):
        jump = appendix_jump_bound_check(u, field, k)
        interior = appendix_interior_bound_check(u, field, k)
        assert jump.ratio <= 1.0
        assert interior.ratio <= 1.0
    assert appendix_jump_bound_check(u, field, 0).ratio == pytest.approx(0.0, abs=1e-10)


def test_appendix_bounds_errors():
    """Test dimension and derivative order checks."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    u = make_target("sin_pi_x")
    field = lagrange_interpolant_1d(u, mesh, 1)
    with pytest.raises(StudyError, match="k must be"):
        appendix_jump_bound_check(u, field, 2)
    square = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    with pytest.raises(StudyError, match="one-dimensional"):
        appendix_jump_bound_check(make_target("sin_pi_xy"), PiecewisePolyField.zeros(square, 1), 0)


def test_ratio_band():
    """Test max / min over values above the floor."""
    assert ratio_band([1.0, 2.0, 4.0]) == pytest.approx(4.0)
    assert ratio_band([1e-20, 3.0]) == 1.0


@pytest.mark.parametrize("p", [0, 1])
def test_projection_order(p):
    """Test the covolume projection converges at order p + 1."""
    study = projection_order_study(make_target("sin_pi_x"), "interval", p, levels=4)
    assert study.rate.rate == pytest.approx(p + 1, abs=0.15)
    assert len(study.errors) == 4


@pytest.mark.parametrize("p", [0, 1, 2])
def test_projection_order_triangles(p):
    """Test the covolume projection on triangles converges at order p + 1."""
    study = projection_order_study(make_target("sin_pi_xy"), "triangle", p, levels=4)
    assert study.rate.rate >= p + 1 - 0.2


def test_appendix_ratio_band_under_refinement():
    """Test the 1D jump bound ratios stay within a factor 3 over four meshes."""
    u = make_target("sin_pi_x")
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    ratios = {0: [], 1: []}
    for level in range(4):
        if level:
            mesh = refine_uniform(mesh)
        field = lagrange_interpolant_1d(u, mesh, 1)
        for k in ratios:
            ratios[k].append(appendix_jump_bound_check(u, field, k).ratio)
    for k, values in ratios.items():
        assert max(values) <= 1.0
        assert ratio_band(values, floor=1e-8) <= 3.0
    assert min(ratios[1]) > 0.5


def test_projection_order_needs_levels():
    """Test rate fitting needs three levels."""
    with pytest.raises(StudyError):
        projection_order_study(make_target("sin_pi_x"), "interval", 1, levels=2)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
